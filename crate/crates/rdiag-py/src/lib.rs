//! Python bindings: a `Measure` class wrapping the half-line spectral
//! law plus module functions for the Brown-measure outputs.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use rdiag::brown;
use rdiag::matrix_oracle::{self, McConfig};
use rdiag::measures::{lambda_bounds, MeasureRPlus};
use rdiag::spec_file::MeasureSpec;
use rdiag::subordination::{KFunction, SAtZero};
use rdiag::transforms;

fn err(e: rdiag::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A probability measure on [0, inf): the spectral law of |T|.
#[pyclass(from_py_object)]
#[derive(Clone)]
struct Measure {
    inner: MeasureRPlus,
}

#[pymethods]
impl Measure {
    /// Atomic measure from (position, weight) pairs summing to one.
    #[staticmethod]
    fn atomic(atoms: Vec<(f64, f64)>) -> PyResult<Self> {
        Ok(Measure {
            inner: MeasureRPlus::make_atomic(&atoms).map_err(err)?,
        })
    }

    /// Empirical measure with equal weights.
    #[staticmethod]
    fn empirical(samples: Vec<f64>) -> PyResult<Self> {
        Ok(Measure {
            inner: MeasureRPlus::make_empirical(&samples).map_err(err)?,
        })
    }

    /// Quarter-circle law of the given radius (radius 2 is the law of
    /// |c| for a standard circular operator).
    #[staticmethod]
    #[pyo3(signature = (radius=2.0, nodes=1024))]
    fn quarter_circle(radius: f64, nodes: usize) -> PyResult<Self> {
        Ok(Measure {
            inner: MeasureRPlus::quarter_circle(radius, nodes).map_err(err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (rate=1.0, nodes=1024))]
    fn marchenko_pastur(rate: f64, nodes: usize) -> PyResult<Self> {
        Ok(Measure {
            inner: MeasureRPlus::marchenko_pastur(rate, nodes).map_err(err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (a, b, nodes=256))]
    fn uniform(a: f64, b: f64, nodes: usize) -> PyResult<Self> {
        Ok(Measure {
            inner: MeasureRPlus::uniform(a, b, nodes).map_err(err)?,
        })
    }

    /// Parse the JSON measure-spec format used by the CLI.
    #[staticmethod]
    fn from_spec(json: &str) -> PyResult<Self> {
        let spec = MeasureSpec::from_json(json).map_err(err)?;
        Ok(Measure {
            inner: spec.to_measure().map_err(err)?,
        })
    }

    /// Inner radius of the single-ring annulus.
    fn lambda1(&self) -> f64 {
        lambda_bounds(&self.inner).lambda1
    }

    /// Outer radius of the single-ring annulus.
    fn lambda2(&self) -> f64 {
        lambda_bounds(&self.inner).lambda2
    }

    fn zero_mass(&self) -> f64 {
        self.inner.zero_mass()
    }

    fn is_dirac(&self) -> bool {
        self.inner.is_dirac()
    }

    fn first_moment(&self) -> f64 {
        self.inner.first_moment()
    }

    fn second_moment(&self) -> f64 {
        self.inner.second_moment()
    }

    /// h(s) = int s/(s^2 + u^2) dmu(u) of the symmetrized law.
    fn h(&self, s: f64) -> PyResult<f64> {
        transforms::h_eval(&self.inner.symmetrize(), s).map_err(err)
    }

    fn s_transform(&self, w: f64) -> PyResult<f64> {
        transforms::s_transform(&self.inner, w).map_err(err)
    }

    fn s_transform_inverse(&self, y: f64) -> PyResult<f64> {
        transforms::s_transform_inverse(&self.inner, y).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Measure(kind={:?}, support_points={}, zero_mass={})",
            self.inner.kind(),
            self.inner.support().len(),
            self.inner.zero_mass()
        )
    }
}

/// Brown-measure radial CDF at radius r (subordination route).
#[pyfunction]
fn radial_cdf(mu: &Measure, r: f64) -> PyResult<f64> {
    brown::radial_cdf(&mu.inner, r).map_err(err)
}

/// The same CDF through the S-transform inverse (independent route).
#[pyfunction]
fn radial_cdf_via_s_transform(mu: &Measure, r: f64) -> PyResult<f64> {
    brown::radial_cdf_via_s_transform(&mu.inner, r).map_err(err)
}

/// Planar Brown density at |lambda| = r inside the annulus.
#[pyfunction]
fn radial_density(mu: &Measure, r: f64) -> PyResult<f64> {
    brown::radial_density(&mu.inner, r).map_err(err)
}

/// log Delta(T - lambda); -inf when the determinant vanishes.
#[pyfunction]
fn fk_det(mu: &Measure, re: f64, im: f64) -> PyResult<f64> {
    Ok(brown::fk_det(&mu.inner, Complex64::new(re, im))
        .map_err(err)?
        .log_delta
        .value())
}

/// log Delta((T-lambda)^*(T-lambda) + t^2) for t > 0.
#[pyfunction]
fn fk_det_regularized(mu: &Measure, re: f64, im: f64, t: f64) -> PyResult<f64> {
    Ok(brown::fk_det_regularized(&mu.inner, Complex64::new(re, im), t)
        .map_err(err)?
        .log_delta
        .value())
}

/// Subordination value s(r, t) with its residual: (s, |k(s,t) - r^2|).
#[pyfunction]
fn solve_s(mu: &Measure, r: f64, t: f64) -> PyResult<(f64, f64)> {
    let sol = KFunction::new(mu.inner.symmetrize())
        .solve_s(r, t)
        .map_err(err)?;
    Ok((sol.s, sol.residual))
}

/// s(r, 0): 0 below the annulus, the root inside, inf above.
#[pyfunction]
fn s_at_zero(mu: &Measure, r: f64) -> PyResult<f64> {
    match KFunction::new(mu.inner.symmetrize()).s_at_zero(r).map_err(err)? {
        SAtZero::Zero => Ok(0.0),
        SAtZero::Root(s) => Ok(s),
        SAtZero::Infinite => Ok(f64::INFINITY),
    }
}

/// Im omega_2(it) = r^2 / (s(r,t) - t).
#[pyfunction]
fn omega2(mu: &Measure, r: f64, t: f64) -> PyResult<f64> {
    Ok(KFunction::new(mu.inner.symmetrize())
        .omega2_eval(r, t)
        .map_err(err)?
        .im)
}

/// First negative moment of |T - lambda|^2; inf on the closed annulus.
#[pyfunction]
fn negative_moment_first(mu: &Measure, re: f64, im: f64) -> PyResult<f64> {
    Ok(
        match brown::negative_moment_first(&mu.inner, Complex64::new(re, im)).map_err(err)? {
            brown::NegativeMoment::Finite(v) => v,
            brown::NegativeMoment::Infinite => f64::INFINITY,
        },
    )
}

/// (r, cdf, dCDF/dr) rows on a uniform radial grid.
#[pyfunction]
fn radial_grid(mu: &Measure, r_min: f64, r_max: f64, n: usize) -> PyResult<Vec<(f64, f64, f64)>> {
    let radii: Vec<f64> = (0..n)
        .map(|i| r_min + (r_max - r_min) * i as f64 / (n.max(2) - 1) as f64)
        .collect();
    let rbm = brown::RadialBrownMeasure::on_grid(&mu.inner, &radii).map_err(err)?;
    Ok(rbm.grid.iter().map(|p| (p.r, p.cdf, p.density)).collect())
}

/// One Monte Carlo single-ring run: returns the KS distance between the
/// empirical radial law at dimension n and the analytic CDF.
#[pyfunction]
#[pyo3(signature = (mu, n=250, seed=1))]
fn mc_single_ring_ks(mu: &Measure, n: usize, seed: u64) -> PyResult<f64> {
    let config = McConfig {
        n,
        n_samples: 1,
        seed,
        lambda_list: vec![],
        t_list: vec![],
    };
    let inner = mu.inner.clone();
    let report = matrix_oracle::run_ensemble(&inner, &config, |r| {
        if r <= 0.0 {
            0.0
        } else {
            brown::radial_cdf(&inner, r).unwrap_or(f64::NAN)
        }
    })
    .map_err(err)?;
    Ok(report.ks_to_analytic)
}

#[pymodule]
fn rdiag_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Measure>()?;
    m.add_function(wrap_pyfunction!(radial_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(radial_cdf_via_s_transform, m)?)?;
    m.add_function(wrap_pyfunction!(radial_density, m)?)?;
    m.add_function(wrap_pyfunction!(fk_det, m)?)?;
    m.add_function(wrap_pyfunction!(fk_det_regularized, m)?)?;
    m.add_function(wrap_pyfunction!(solve_s, m)?)?;
    m.add_function(wrap_pyfunction!(s_at_zero, m)?)?;
    m.add_function(wrap_pyfunction!(omega2, m)?)?;
    m.add_function(wrap_pyfunction!(negative_moment_first, m)?)?;
    m.add_function(wrap_pyfunction!(radial_grid, m)?)?;
    m.add_function(wrap_pyfunction!(mc_single_ring_ks, m)?)?;
    Ok(())
}
