//! Measure specification files (JSON).
//!
//! ```json
//! {"type": "atomic",    "atoms": [[1.0, 0.5], [2.0, 0.5]]}
//! {"type": "empirical", "samples": [0.3, 1.7, 2.2]}
//! {"type": "density",   "density": {"name": "quarter_circle",
//!                                   "params": {"radius": 2.0},
//!                                   "nodes": 1024},
//!                       "zero_atom": 0.0}
//! ```
//!
//! Built-in named densities: `quarter_circle(radius)`,
//! `marchenko_pastur(rate)`, `uniform(a, b)`, and `table(xs, ys)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::MeasureRPlus;

pub const DEFAULT_DENSITY_NODES: usize = 1024;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureSpec {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<(f64, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<DensitySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_atom: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensitySpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
}

impl MeasureSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Input(format!("measure spec parse error: {e}")))
    }

    pub fn to_measure(&self) -> Result<MeasureRPlus> {
        let mut measure = match self.kind.as_str() {
            "atomic" => {
                let atoms = self
                    .atoms
                    .as_ref()
                    .ok_or_else(|| Error::Input("atomic spec needs an \"atoms\" list".into()))?;
                // An explicit zero_atom is folded in as an origin atom so
                // the combined mass is validated as one.
                let mut all = atoms.clone();
                if let Some(d) = self.zero_atom {
                    if d > 0.0 {
                        all.push((0.0, d));
                    }
                }
                return MeasureRPlus::make_atomic(&all);
            }
            "empirical" => {
                let samples = self
                    .samples
                    .as_ref()
                    .ok_or_else(|| Error::Input("empirical spec needs a \"samples\" list".into()))?;
                return MeasureRPlus::make_empirical(samples);
            }
            "density" => {
                let spec = self
                    .density
                    .as_ref()
                    .ok_or_else(|| Error::Input("density spec needs a \"density\" object".into()))?;
                build_density(spec)?
            }
            other => {
                return Err(Error::Input(format!(
                    "unknown measure type {other:?}; expected atomic, density, or empirical"
                )))
            }
        };
        if let Some(d) = self.zero_atom {
            if d > 0.0 {
                measure = measure.with_zero_atom(d)?;
            }
        }
        Ok(measure)
    }
}

fn param_f64(params: &Option<serde_json::Value>, key: &str) -> Option<f64> {
    params.as_ref()?.get(key)?.as_f64()
}

fn param_vec(params: &Option<serde_json::Value>, key: &str) -> Option<Vec<f64>> {
    params
        .as_ref()?
        .get(key)?
        .as_array()?
        .iter()
        .map(|v| v.as_f64())
        .collect()
}

fn build_density(spec: &DensitySpec) -> Result<MeasureRPlus> {
    let nodes = spec.nodes.unwrap_or(DEFAULT_DENSITY_NODES);
    match spec.name.as_str() {
        "quarter_circle" => {
            let radius = param_f64(&spec.params, "radius").unwrap_or(2.0);
            MeasureRPlus::quarter_circle(radius, nodes)
        }
        "marchenko_pastur" => {
            let rate = param_f64(&spec.params, "rate").unwrap_or(1.0);
            MeasureRPlus::marchenko_pastur(rate, nodes)
        }
        "uniform" => {
            let (a, b) = match spec.support {
                Some(s) => s,
                None => (
                    param_f64(&spec.params, "a")
                        .ok_or_else(|| Error::Input("uniform density needs a/b or support".into()))?,
                    param_f64(&spec.params, "b")
                        .ok_or_else(|| Error::Input("uniform density needs a/b or support".into()))?,
                ),
            };
            MeasureRPlus::uniform(a, b, nodes)
        }
        "table" => {
            let xs = param_vec(&spec.params, "xs")
                .ok_or_else(|| Error::Input("table density needs params.xs".into()))?;
            let ys = param_vec(&spec.params, "ys")
                .ok_or_else(|| Error::Input("table density needs params.ys".into()))?;
            Ok(MeasureRPlus::table(&xs, &ys, nodes.clamp(4, 32))?.0)
        }
        other => Err(Error::Input(format!(
            "unknown density {other:?}; expected quarter_circle, marchenko_pastur, uniform, or table"
        ))),
    }
}
