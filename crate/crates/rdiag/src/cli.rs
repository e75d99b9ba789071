//! Command orchestration behind the `rdiag` binary: load a measure spec,
//! dispatch one command, write CSV/JSON artifacts atomically.
//!
//! Exit codes: 0 success, 1 validation failure or module error (with a
//! machine-readable error JSON on stderr), 2 input error.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::brown::{
    self, fk_det, fk_det_regularized, log_potential_consistency, negative_moment_first,
    radial_cdf, radial_cdf_via_s_transform, LogScalar, NegativeMoment, RadialBrownMeasure,
};
use crate::error::Error;
use crate::matrix_oracle::{run_ensemble, McConfig};
use crate::measures::{lambda_bounds, MeasureRPlus};
use crate::spec_file::MeasureSpec;
use crate::subordination::{fixed_point_omega1, KFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Cdf,
    Density,
    Det,
    Subord,
    Moments,
    ValidateMc,
    Consistency,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.min];
        }
        (0..self.n)
            .map(|i| self.min + (self.max - self.min) * i as f64 / (self.n - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub measure_path: PathBuf,
    pub grid: Option<GridSpec>,
    pub t: Option<f64>,
    pub lambda: Option<(f64, f64)>,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    pub seed: u64,
    pub tolerances: BTreeMap<String, f64>,
    pub mc_n: usize,
    pub mc_samples: usize,
}

impl RunConfig {
    pub fn new(command: Command, measure_path: impl Into<PathBuf>) -> Self {
        RunConfig {
            command,
            measure_path: measure_path.into(),
            grid: None,
            t: None,
            lambda: None,
            out: None,
            format: OutputFormat::Csv,
            seed: 1,
            tolerances: BTreeMap::new(),
            mc_n: 250,
            mc_samples: 1,
        }
    }
}

/// Failure with a process exit code and the stderr error JSON payload.
#[derive(Debug, Clone, Serialize)]
pub struct CliError {
    #[serde(skip)]
    pub exit_code: i32,
    pub code: String,
    pub message: String,
    pub context: serde_json::Value,
}

impl CliError {
    fn input(code: &str, message: impl Into<String>) -> Self {
        CliError {
            exit_code: 2,
            code: code.into(),
            message: message.into(),
            context: serde_json::Value::Null,
        }
    }

    fn validation(code: &str, message: impl Into<String>, context: serde_json::Value) -> Self {
        CliError {
            exit_code: 1,
            code: code.into(),
            message: message.into(),
            context,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let exit_code = if matches!(e, Error::Input(_)) { 2 } else { 1 };
        CliError {
            exit_code,
            code: e.code().to_string(),
            message: e.to_string(),
            context: serde_json::Value::Null,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub max_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub measure: String,
    pub checks: Vec<CheckResult>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McReportJson {
    pub n: usize,
    pub n_samples: usize,
    pub seed: u64,
    pub ks: f64,
    pub per_lambda: Vec<McLambdaRow>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McLambdaRow {
    pub lambda: (f64, f64),
    pub t: f64,
    pub empirical: (f64, f64),
    pub analytic: (f64, f64),
    pub empirical_h: f64,
    pub analytic_h: f64,
    pub abs_err: f64,
}

/// Dispatch one command; artifacts are written atomically (temp + rename).
pub fn run(config: &RunConfig) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&config.measure_path).map_err(|e| {
        CliError::input(
            "input_not_found",
            format!("cannot read {}: {e}", config.measure_path.display()),
        )
    })?;
    let spec = MeasureSpec::from_json(&text)
        .map_err(|e| CliError::input("input_parse", e.to_string()))?;
    let mu = spec.to_measure().map_err(CliError::from)?;

    match config.command {
        Command::Cdf | Command::Density => run_cdf(config, &mu),
        Command::Det => run_det(config, &mu),
        Command::Subord => run_subord(config, &mu),
        Command::Moments => run_moments(config, &mu),
        Command::ValidateMc => run_validate_mc(config, &mu),
        Command::Consistency => run_consistency(config, &spec, &mu),
    }
}

fn default_grid(mu: &MeasureRPlus) -> GridSpec {
    let b = lambda_bounds(mu);
    let span = b.lambda2 - b.lambda1;
    GridSpec {
        min: b.lambda1 + 0.02 * span,
        max: b.lambda2 - 0.02 * span,
        n: 50,
    }
}

fn run_cdf(config: &RunConfig, mu: &MeasureRPlus) -> Result<(), CliError> {
    let grid = config.grid.unwrap_or_else(|| default_grid(mu));
    let rbm = RadialBrownMeasure::on_grid(mu, &grid.points()).map_err(CliError::from)?;
    match config.format {
        OutputFormat::Csv => {
            let mut csv = String::from("r,cdf,density\n");
            for p in &rbm.grid {
                csv.push_str(&format!("{},{},{}\n", sci(p.r), sci(p.cdf), sci(p.density)));
            }
            write_artifact(config.out.as_deref(), csv.as_bytes())
        }
        OutputFormat::Json => {
            let doc = serde_json::json!({
                "lambda1": rbm.lambda1,
                "lambda2": rbm.lambda2,
                "zero_mass": rbm.zero_mass,
                "rows": rbm.grid.iter().map(|p| {
                    serde_json::json!({"r": p.r, "cdf": p.cdf, "density": p.density})
                }).collect::<Vec<_>>(),
            });
            write_artifact(config.out.as_deref(), pretty(&doc).as_bytes())
        }
    }
}

fn run_det(config: &RunConfig, mu: &MeasureRPlus) -> Result<(), CliError> {
    let (re, im) = config
        .lambda
        .ok_or_else(|| CliError::input("input_error", "det needs --lambda re,im"))?;
    let lambda = Complex64::new(re, im);
    let det = match config.t {
        Some(t) if t > 0.0 => fk_det_regularized(mu, lambda, t).map_err(CliError::from)?,
        _ => fk_det(mu, lambda).map_err(CliError::from)?,
    };
    let log_delta = match det.log_delta {
        LogScalar::Finite(v) => v,
        LogScalar::NegInfinity => f64::NEG_INFINITY,
    };
    match config.format {
        OutputFormat::Csv => {
            let csv = format!(
                "re_lambda,im_lambda,t,log_delta\n{},{},{},{}\n",
                sci(re),
                sci(im),
                sci(det.t),
                sci(log_delta)
            );
            write_artifact(config.out.as_deref(), csv.as_bytes())
        }
        OutputFormat::Json => {
            let doc = serde_json::json!({
                "lambda": [re, im],
                "t": det.t,
                "log_delta": if log_delta.is_finite() { serde_json::json!(log_delta) } else { serde_json::Value::Null },
            });
            write_artifact(config.out.as_deref(), pretty(&doc).as_bytes())
        }
    }
}

fn run_subord(config: &RunConfig, mu: &MeasureRPlus) -> Result<(), CliError> {
    let t = config
        .t
        .ok_or_else(|| CliError::input("input_error", "subord needs --t > 0"))?;
    let grid = config.grid.unwrap_or_else(|| default_grid(mu));
    let kf = KFunction::new(mu.symmetrize());
    let mut csv = String::from("r,t,s,residual,im_omega1,im_omega2\n");
    let mut rows = Vec::new();
    for r in grid.points() {
        let sol = kf.solve_s(r, t).map_err(CliError::from)?;
        rows.push(sol);
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            sci(sol.r),
            sci(sol.t),
            sci(sol.s),
            sci(sol.residual),
            sci(sol.omega1.im),
            sci(sol.omega2.im)
        ));
    }
    match config.format {
        OutputFormat::Csv => write_artifact(config.out.as_deref(), csv.as_bytes()),
        OutputFormat::Json => {
            let doc = serde_json::json!({
                "t": t,
                "rows": rows.iter().map(|s| serde_json::json!({
                    "r": s.r, "s": s.s, "residual": s.residual,
                    "im_omega1": s.omega1.im, "im_omega2": s.omega2.im,
                })).collect::<Vec<_>>(),
            });
            write_artifact(config.out.as_deref(), pretty(&doc).as_bytes())
        }
    }
}

fn run_moments(config: &RunConfig, mu: &MeasureRPlus) -> Result<(), CliError> {
    let b = lambda_bounds(mu);
    let mut doc = serde_json::json!({
        "lambda1": b.lambda1,
        "lambda2": b.lambda2,
        "zero_mass": mu.zero_mass(),
        "is_dirac": b.dirac,
        "first_moment": mu.first_moment(),
        "second_moment": mu.second_moment(),
        "log_determinant": mu.log_moment(),
        "regime_boundaries": {"inner": b.lambda1, "outer": b.lambda2},
    });
    if let Some((re, im)) = config.lambda {
        let nm = negative_moment_first(mu, Complex64::new(re, im)).map_err(CliError::from)?;
        doc["negative_moment_first"] = match nm {
            NegativeMoment::Finite(v) => serde_json::json!(v),
            NegativeMoment::Infinite => serde_json::json!("infinite"),
        };
    }
    write_artifact(config.out.as_deref(), pretty(&doc).as_bytes())
}

fn run_validate_mc(config: &RunConfig, mu: &MeasureRPlus) -> Result<(), CliError> {
    let b = lambda_bounds(mu);
    if b.dirac {
        return Err(CliError::from(Error::DiracMeasure));
    }
    let lambda_list: Vec<(f64, f64)> = match config.lambda {
        Some(l) => vec![l],
        None => vec![(0.5 * (b.lambda1 + b.lambda2), 0.0)],
    };
    let t_list = vec![config.t.unwrap_or(1.0)];
    let mc = McConfig {
        n: config.mc_n,
        n_samples: config.mc_samples,
        seed: config.seed,
        lambda_list,
        t_list,
    };
    let report = run_ensemble(mu, &mc, |r| {
        if r <= 0.0 {
            0.0
        } else {
            radial_cdf(mu, r).unwrap_or(f64::NAN)
        }
    })
    .map_err(CliError::from)?;

    if config.format == OutputFormat::Csv {
        let mut csv = String::from("modulus\n");
        for m in &report.eigenvalue_moduli {
            csv.push_str(&format!("{}\n", sci(*m)));
        }
        return write_artifact(config.out.as_deref(), csv.as_bytes());
    }

    let kf = KFunction::new(mu.symmetrize());
    let per_lambda = report
        .resolvent_estimates
        .iter()
        .map(|est| {
            let lambda = Complex64::new(est.lambda.0, est.lambda.1);
            let (analytic, _) = brown::resolvent_traces(mu, lambda, est.t)?;
            let analytic_h = kf.h().eval(kf.solve_s(lambda.norm(), est.t)?.s)?;
            let emp = Complex64::new(est.empirical.0, est.empirical.1);
            Ok(McLambdaRow {
                lambda: est.lambda,
                t: est.t,
                empirical: est.empirical,
                analytic: (analytic.re, analytic.im),
                empirical_h: est.empirical_h,
                analytic_h,
                abs_err: (emp - analytic).norm(),
            })
        })
        .collect::<Result<Vec<_>, Error>>()
        .map_err(CliError::from)?;
    let doc = McReportJson {
        n: report.n,
        n_samples: report.n_samples,
        seed: report.seed,
        ks: report.ks_to_analytic,
        per_lambda,
    };
    write_artifact(
        config.out.as_deref(),
        pretty(&serde_json::to_value(&doc).unwrap()).as_bytes(),
    )
}

fn tolerance(overrides: &BTreeMap<String, f64>, name: &str, default: f64) -> f64 {
    overrides.get(name).copied().unwrap_or(default)
}

/// The bundled cross-route checks: CDF route agreement, log-potential
/// consistency, the radial gradient identity, solver equivalence, and
/// (for density inputs) stability under node doubling.
pub fn consistency_suite(
    spec: &MeasureSpec,
    mu: &MeasureRPlus,
    overrides: &BTreeMap<String, f64>,
) -> Result<ConsistencyReport, CliError> {
    let b = lambda_bounds(mu);
    if b.dirac {
        return Err(CliError::from(Error::DiracMeasure));
    }
    let span = b.lambda2 - b.lambda1;
    let annulus: Vec<f64> = (1..=30)
        .map(|i| b.lambda1 + span * i as f64 / 31.0)
        .collect();
    let mut checks = Vec::new();

    // 1. Two CDF routes through independent inversions.
    let mut worst: f64 = 0.0;
    for &r in &annulus {
        let a = radial_cdf(mu, r).map_err(CliError::from)?;
        let c = radial_cdf_via_s_transform(mu, r).map_err(CliError::from)?;
        worst = worst.max((a - c).abs());
    }
    push_check(&mut checks, "cdf_routes", worst, tolerance(overrides, "cdf_routes", 1e-9));

    // 2. Log-potential identity on a regime-spanning grid.
    let rbm = RadialBrownMeasure::compute(mu, 16).map_err(CliError::from)?;
    let mut grid: Vec<Complex64> = (1..=6)
        .map(|i| Complex64::from_polar(b.lambda1 + span * i as f64 / 7.0, 0.5 * i as f64))
        .collect();
    if b.lambda1 > 0.0 {
        grid.push(Complex64::new(0.5 * b.lambda1, 0.0));
    }
    grid.push(Complex64::new(1.25 * b.lambda2, 0.0));
    grid.push(Complex64::new(0.0, 2.0 * b.lambda2));
    let lp = log_potential_consistency(&rbm, mu, &grid).map_err(CliError::from)?;
    push_check(&mut checks, "log_potential", lp, tolerance(overrides, "log_potential", 1e-6));

    // 3. Radial gradient of log Delta(T - lambda) equals CDF(r)/r.
    let mut worst: f64 = 0.0;
    for i in 1..=8 {
        let r = b.lambda1 + span * i as f64 / 9.0;
        let h = 1e-5 * r;
        let up = fk_det(mu, Complex64::new(r + h, 0.0)).map_err(CliError::from)?;
        let dn = fk_det(mu, Complex64::new(r - h, 0.0)).map_err(CliError::from)?;
        let fd = (up.log_delta.value() - dn.log_delta.value()) / (2.0 * h);
        let expected = radial_cdf(mu, r).map_err(CliError::from)? / r;
        worst = worst.max((fd - expected).abs());
    }
    push_check(&mut checks, "gradient", worst, tolerance(overrides, "gradient", 1e-6));

    // 4. Fixed-point iteration against the monotone root find.
    let sym = mu.symmetrize();
    let kf = KFunction::new(mu.symmetrize());
    let mut worst: f64 = 0.0;
    for i in 1..=8 {
        let r = b.lambda1 + span * i as f64 / 9.0;
        for j in 0..8 {
            let t = 10f64.powf(-2.0 + 3.0 * j as f64 / 7.0);
            let omega = fixed_point_omega1(&sym, r, t).map_err(CliError::from)?;
            let sol = kf.solve_s(r, t).map_err(CliError::from)?;
            worst = worst.max((omega.im - sol.s).abs());
        }
    }
    push_check(
        &mut checks,
        "solver_equivalence",
        worst,
        tolerance(overrides, "solver_equivalence", 1e-9),
    );

    // 5. Density inputs only: the discretization must be converged, i.e.
    // doubling the rule's node budget must not move the CDF.
    if let Some(density) = &spec.density {
        let mut refined_spec = spec.clone();
        let mut refined_density = density.clone();
        refined_density.nodes = Some(2 * refined_density.nodes.unwrap_or(crate::spec_file::DEFAULT_DENSITY_NODES));
        refined_spec.density = Some(refined_density);
        let refined = refined_spec.to_measure().map_err(CliError::from)?;
        let mut worst: f64 = 0.0;
        for &r in annulus.iter().step_by(2) {
            let coarse = radial_cdf(mu, r).map_err(CliError::from)?;
            let fine = radial_cdf(&refined, r).map_err(CliError::from)?;
            worst = worst.max((coarse - fine).abs());
        }
        push_check(
            &mut checks,
            "discretization",
            worst,
            tolerance(overrides, "discretization", 1e-9),
        );
    }

    let pass = checks.iter().all(|c| c.pass);
    Ok(ConsistencyReport {
        measure: spec.kind.clone(),
        checks,
        pass,
    })
}

fn push_check(checks: &mut Vec<CheckResult>, name: &str, max_error: f64, tol: f64) {
    checks.push(CheckResult {
        name: name.into(),
        max_error,
        tolerance: tol,
        pass: max_error <= tol,
    });
}

fn run_consistency(config: &RunConfig, spec: &MeasureSpec, mu: &MeasureRPlus) -> Result<(), CliError> {
    let report = consistency_suite(spec, mu, &config.tolerances)?;
    let doc = serde_json::to_value(&report).unwrap();
    write_artifact(config.out.as_deref(), pretty(&doc).as_bytes())?;
    if report.pass {
        Ok(())
    } else {
        let failing: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name.as_str())
            .collect();
        Err(CliError::validation(
            "tolerance_exceeded",
            format!("consistency checks failed: {}", failing.join(", ")),
            doc,
        ))
    }
}

/// Full-precision scientific notation (17 significant digits) so that
/// byte-level diffs of emitted CSVs are meaningful.
fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

fn pretty(doc: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(doc).unwrap();
    s.push('\n');
    s
}

fn write_artifact(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        None => {
            std::io::stdout()
                .write_all(bytes)
                .map_err(|e| CliError::input("io_error", e.to_string()))?;
            Ok(())
        }
        Some(path) => {
            let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
            let mut tmp = match dir {
                Some(d) => tempfile::NamedTempFile::new_in(d),
                None => tempfile::NamedTempFile::new_in("."),
            }
            .map_err(|e| CliError::input("io_error", e.to_string()))?;
            tmp.write_all(bytes)
                .map_err(|e| CliError::input("io_error", e.to_string()))?;
            tmp.persist(path)
                .map_err(|e| CliError::input("io_error", e.to_string()))?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_points_are_inclusive() {
        let g = GridSpec { min: 0.0, max: 1.0, n: 5 };
        let pts = g.points();
        assert_eq!(pts.len(), 5);
        assert_eq!(pts[0], 0.0);
        assert_eq!(pts[4], 1.0);
    }

    #[test]
    fn sci_carries_full_precision() {
        let x = std::f64::consts::PI;
        let s = sci(x);
        assert_eq!(s.parse::<f64>().unwrap(), x);
    }

    #[test]
    fn consistency_passes_for_two_atoms() {
        let spec = MeasureSpec::from_json(r#"{"type": "atomic", "atoms": [[1.0, 0.5], [2.0, 0.5]]}"#).unwrap();
        let mu = spec.to_measure().unwrap();
        let report = consistency_suite(&spec, &mu, &BTreeMap::new()).unwrap();
        assert!(report.pass, "failing checks: {:?}", report.checks);
        // Round trip under the published schema.
        let text = serde_json::to_string(&report).unwrap();
        let back: ConsistencyReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back.checks.len(), report.checks.len());
    }

    #[test]
    fn consistency_rejects_dirac_with_structured_code() {
        let spec = MeasureSpec::from_json(r#"{"type": "atomic", "atoms": [[1.0, 1.0]]}"#).unwrap();
        let mu = spec.to_measure().unwrap();
        let err = consistency_suite(&spec, &mu, &BTreeMap::new()).unwrap_err();
        assert_eq!(err.code, "dirac_measure");
        assert_eq!(err.exit_code, 1);
    }

    #[test]
    fn coarse_density_fails_discretization_check() {
        let spec = MeasureSpec::from_json(
            r#"{"type": "density", "density": {"name": "quarter_circle", "nodes": 8}}"#,
        )
        .unwrap();
        let mu = spec.to_measure().unwrap();
        let report = consistency_suite(&spec, &mu, &BTreeMap::new()).unwrap();
        assert!(!report.pass);
        let failing: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name.as_str())
            .collect();
        assert!(failing.contains(&"discretization"), "failing: {failing:?}");
    }
}
