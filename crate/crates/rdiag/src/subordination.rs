//! Subordination functions of mu-tilde boxplus (delta_-r + delta_r)/2 on
//! the imaginary axis: the master function k(s,t), the subordination
//! value s(r,t) solving k(s,t) = r^2, its t -> 0 boundary values, and the
//! Belinschi-Bercovici fixed-point iteration it must agree with.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::measures::{lambda_bounds, LambdaBounds, SymmetricMeasure};
use crate::transforms::{cauchy_upper, HTransform};

const RESIDUAL_TOL: f64 = 1e-12;

/// k(s,t) = (s-t)(1/h(s) - s + t) bound to one symmetrized measure.
///
/// For fixed t >= 0 the map s -> k(s,t) is strictly increasing on (t, inf),
/// which makes every solve below a bracketed monotone root find.
#[derive(Debug, Clone)]
pub struct KFunction {
    h: HTransform,
    bounds: LambdaBounds,
}

/// One subordination evaluation at (r, t), t > 0.
#[derive(Debug, Clone, Copy)]
pub struct SubordinationResult {
    pub r: f64,
    pub t: f64,
    /// s(r,t), the imaginary part of omega_1(it); always > t.
    pub s: f64,
    /// |k(s,t) - r^2| at the returned root.
    pub residual: f64,
    /// omega_1(it) = i s.
    pub omega1: Complex64,
    /// omega_2(it) = i r^2 / (s - t).
    pub omega2: Complex64,
}

/// s(r, 0) splits into three regimes with genuinely different topology;
/// the infinite case is a tag, never a floating-point infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SAtZero {
    /// r <= lambda1: the subordination boundary value collapses to 0.
    Zero,
    /// lambda1 < r < lambda2: the unique root of k(s,0) = r^2.
    Root(f64),
    /// r >= lambda2: s(r,0) escapes to infinity.
    Infinite,
}

/// Numerically extrapolated t -> 0 limits outside the annulus.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryDiagnostics {
    pub r: f64,
    /// Richardson-extrapolated limit of t/s(r,t) (r <= lambda1) or
    /// s(r,t) * t (r >= lambda2).
    pub extrapolated: f64,
    /// The closed form the limit must match.
    pub closed_form: f64,
    pub deviation: f64,
}

/// Empirical constants in the two-sided growth bound
/// C1 min(1, 1/t) <= s(r,t) - t <= C2 min(1, 1/t).
#[derive(Debug, Clone, Copy)]
pub struct GrowthBounds {
    pub c1: f64,
    pub c2: f64,
    /// Smallest grid t from which the large-t quadratic branch formula
    /// holds down to 1e-9; None when it held nowhere on the grid.
    pub t_lambda: Option<f64>,
    /// Whether r^2 h(s) < s - t < 2 r^2 h(s) held for all grid t > t_lambda.
    pub envelope_ok: bool,
}

impl KFunction {
    pub fn new(mu: SymmetricMeasure) -> Self {
        let bounds = lambda_bounds(mu.base());
        KFunction {
            h: HTransform::new(mu),
            bounds,
        }
    }

    pub fn h(&self) -> &HTransform {
        &self.h
    }

    pub fn bounds(&self) -> LambdaBounds {
        self.bounds
    }

    fn require_not_dirac(&self) -> Result<()> {
        if self.bounds.dirac {
            Err(Error::DiracMeasure)
        } else {
            Ok(())
        }
    }

    /// 1 - (s-t) h(s), summed term by term so no cancellation occurs:
    /// each atom contributes w (u^2 + s t) / (s^2 + u^2) > 0.
    fn one_minus_dh(&self, s: f64, t: f64) -> f64 {
        let base = self.h.measure().base();
        let mut acc = 0.0;
        for &(u, w) in base.support() {
            acc += w * (u * u + s * t) / (s * s + u * u);
        }
        if base.zero_mass() > 0.0 {
            acc += base.zero_mass() * t / s;
        }
        acc
    }

    /// k(s,t) = (s-t)(1/h(s) - s + t), in the stable form
    /// (s-t) (1 - (s-t) h(s)) / h(s).
    pub fn k_eval(&self, s: f64, t: f64) -> Result<f64> {
        Error::require_positive("s", s)?;
        let h = self.h.eval(s)?;
        Ok((s - t) * self.one_minus_dh(s, t) / h)
    }

    /// The unique s in (t, inf) with k(s,t) = r^2.
    ///
    /// The quadratic formula branch of the same equation is ambiguous at
    /// small t, so the root is always found by monotone bracketing; the
    /// solve runs in the gap d = s - t to keep small gaps exact.
    pub fn solve_s(&self, r: f64, t: f64) -> Result<SubordinationResult> {
        self.require_not_dirac()?;
        Error::require_positive("r", r)?;
        Error::require_positive("t", t)?;
        let r2 = r * r;
        let g = |d: f64| -> Result<f64> {
            let s = t + d;
            Ok(d * self.one_minus_dh(s, t) / self.h.eval(s)? - r2)
        };

        let mut d_lo = 1e-9 * t;
        let mut ok = false;
        for _ in 0..600 {
            if g(d_lo)? < 0.0 {
                ok = true;
                break;
            }
            d_lo *= 0.25;
        }
        if !ok {
            return Err(Error::NoConvergence {
                what: format!("no lower bracket for s(r={r}, t={t})"),
            });
        }
        let mut d_hi = t.max(1.0);
        ok = false;
        for _ in 0..2000 {
            if g(d_hi)? > 0.0 {
                ok = true;
                break;
            }
            d_hi *= 2.0;
        }
        if !ok {
            return Err(Error::NoConvergence {
                what: format!("no upper bracket for s(r={r}, t={t})"),
            });
        }

        // Residual target scales with r^2 so that tiny radii are still
        // resolved to full relative precision.
        let tol = RESIDUAL_TOL * r2;
        let d = crate::solve::bracketed_newton(
            |d| {
                let s = t + d;
                let h = self.h.eval(s).unwrap();
                let dh = self.h.derivative(s).unwrap();
                let value = d * self.one_minus_dh(s, t) / h - r2;
                // d/dd of d(1/h(t+d) - d): 1/h - 2d - d h'/h^2.
                let deriv = 1.0 / h - 2.0 * d - d * dh / (h * h);
                (value, deriv)
            },
            d_lo,
            d_hi,
            tol,
        )?;
        let s = t + d;
        // Residual evaluated in the gap variable: recomputing s - t from
        // the rounded s would cost ~eps*t absolute error at large t.
        let residual = (d * self.one_minus_dh(s, t) / self.h.eval(s)? - r2).abs();
        Ok(SubordinationResult {
            r,
            t,
            s,
            residual,
            omega1: Complex64::new(0.0, s),
            omega2: Complex64::new(0.0, r2 / d),
        })
    }

    /// The t = 0 boundary value of s(r, t), with its three-regime split.
    pub fn s_at_zero(&self, r: f64) -> Result<SAtZero> {
        self.require_not_dirac()?;
        Error::require_positive("r", r)?;
        let LambdaBounds { lambda1, lambda2, .. } = self.bounds;
        if r <= lambda1 {
            return Ok(SAtZero::Zero);
        }
        if r >= lambda2 {
            return Ok(SAtZero::Infinite);
        }
        let r2 = r * r;
        let g = |s: f64| -> Result<f64> { Ok(s * self.one_minus_dh(s, 0.0) / self.h.eval(s)? - r2) };
        let mut s_lo = 1.0;
        let mut ok = false;
        for _ in 0..2200 {
            if g(s_lo)? < 0.0 {
                ok = true;
                break;
            }
            s_lo *= 0.25;
        }
        if !ok {
            return Err(Error::NoConvergence {
                what: format!("no lower bracket for s(r={r}, 0)"),
            });
        }
        let mut s_hi = 1.0;
        ok = false;
        for _ in 0..2200 {
            if g(s_hi)? > 0.0 {
                ok = true;
                break;
            }
            s_hi *= 2.0;
        }
        if !ok {
            return Err(Error::NoConvergence {
                what: format!("no upper bracket for s(r={r}, 0)"),
            });
        }
        let s = crate::solve::bracketed_newton(
            |s| {
                let h = self.h.eval(s).unwrap();
                let dh = self.h.derivative(s).unwrap();
                let value = s * self.one_minus_dh(s, 0.0) / h - r2;
                let deriv = 1.0 / h - 2.0 * s - s * dh / (h * h);
                (value, deriv)
            },
            s_lo,
            s_hi,
            RESIDUAL_TOL * r2,
        )?;
        Ok(SAtZero::Root(s))
    }

    /// omega_2(it) = i r^2 / (s(r,t) - t).
    pub fn omega2_eval(&self, r: f64, t: f64) -> Result<Complex64> {
        Ok(self.solve_s(r, t)?.omega2)
    }

    /// Richardson-extrapolated t -> 0 limits of t/s (r <= lambda1) and
    /// s t (r >= lambda2) on the geometric grid t = 1e-3 .. 1e-7.
    pub fn boundary_diagnostics(&self, r: f64) -> Result<BoundaryDiagnostics> {
        self.require_not_dirac()?;
        Error::require_positive("r", r)?;
        let LambdaBounds { lambda1, lambda2, .. } = self.bounds;
        let (inner_regime, closed_form) = if r <= lambda1 {
            (true, (lambda1 * lambda1 - r * r) / (lambda1 * lambda1))
        } else if r >= lambda2 {
            (false, r * r - lambda2 * lambda2)
        } else {
            return Err(Error::Regime {
                r,
                what: "boundary limits need r <= lambda1 or r >= lambda2".into(),
            });
        };
        let ts: Vec<f64> = (3..=7).map(|k| 10f64.powi(-k)).collect();
        let values: Vec<f64> = ts
            .iter()
            .map(|&t| {
                let s = self.solve_s(r, t)?.s;
                Ok(if inner_regime { t / s } else { s * t })
            })
            .collect::<Result<_>>()?;
        // Two Richardson levels on the ratio-10 grid: the limits are
        // first order in t for generic measures.
        let level1: Vec<f64> = values
            .windows(2)
            .map(|v| (10.0 * v[1] - v[0]) / 9.0)
            .collect();
        let level2: Vec<f64> = level1
            .windows(2)
            .map(|v| (100.0 * v[1] - v[0]) / 99.0)
            .collect();
        let extrapolated = *level2.last().unwrap();
        Ok(BoundaryDiagnostics {
            r,
            extrapolated,
            closed_form,
            deviation: (extrapolated - closed_form).abs(),
        })
    }

    /// Empirical constants for the growth bound of s(r,t) - t over a
    /// t-grid, plus detection of where the large-t branch formula starts
    /// to hold and verification of its envelope.
    pub fn subordination_growth_bounds(&self, r: f64, t_grid: &[f64]) -> Result<GrowthBounds> {
        self.require_not_dirac()?;
        let LambdaBounds { lambda1, lambda2, .. } = self.bounds;
        if !(r > lambda1 && r < lambda2) {
            return Err(Error::Regime {
                r,
                what: format!("growth bounds need r in the annulus ({lambda1}, {lambda2})"),
            });
        }
        if t_grid.is_empty() {
            return Err(Error::Input("growth bounds need a nonempty t grid".into()));
        }
        let r2 = r * r;
        let mut sorted = t_grid.to_vec();
        sorted.sort_by(f64::total_cmp);

        let mut c1 = f64::INFINITY;
        let mut c2 = f64::NEG_INFINITY;
        let mut rows = Vec::with_capacity(sorted.len());
        for &t in &sorted {
            let sol = self.solve_s(r, t)?;
            let gap = sol.s - t;
            let ratio = gap / (1.0f64).min(1.0 / t);
            c1 = c1.min(ratio);
            c2 = c2.max(ratio);
            rows.push((t, sol.s, gap));
        }

        // Scan downward from the largest t for the onset of the branch
        // formula s - t = 2 r^2 h / (1 + sqrt(1 - 4 r^2 h^2)).
        let mut t_lambda = None;
        for &(t, s, gap) in rows.iter().rev() {
            let h = self.h.eval(s)?;
            let disc = 1.0 - 4.0 * r2 * h * h;
            if disc < 0.0 {
                break;
            }
            let branch = 2.0 * r2 * h / (1.0 + disc.sqrt());
            if (gap - branch).abs() > 1e-9 * gap.max(1.0) {
                break;
            }
            t_lambda = Some(t);
        }
        let envelope_ok = match t_lambda {
            None => false,
            Some(t0) => rows.iter().filter(|row| row.0 > t0).all(|&(_, s, gap)| {
                let h = self.h.eval(s).unwrap();
                r2 * h < gap && gap < 2.0 * r2 * h
            }),
        };
        Ok(GrowthBounds {
            c1,
            c2,
            t_lambda,
            envelope_ok,
        })
    }
}

/// Direct evaluation of k at (s, t); see [`KFunction::k_eval`].
pub fn k_eval(kf: &KFunction, s: f64, t: f64) -> Result<f64> {
    kf.k_eval(s, t)
}

/// omega_1(it) by the Belinschi-Bercovici fixed-point iteration
/// w <- z + H2(z + H1(w)) with H2(z) = -r^2/z, run in complex arithmetic.
/// Must agree with i * s(r,t) from the monotone solver.
pub fn fixed_point_omega1(mu: &SymmetricMeasure, r: f64, t: f64) -> Result<Complex64> {
    Error::require_positive("r", r)?;
    Error::require_positive("t", t)?;
    let z = Complex64::new(0.0, t);
    let r2 = Complex64::new(r * r, 0.0);
    let h1 = |w: Complex64| -> Complex64 {
        let g = cauchy_upper(mu, w);
        1.0 / g - w
    };
    let mut omega = z;
    for _ in 0..100_000 {
        let next = z - r2 / (z + h1(omega));
        let delta = (next - omega).norm();
        omega = next;
        if delta < 1e-13 * omega.norm().max(1.0) {
            return Ok(omega);
        }
    }
    Err(Error::NoConvergence {
        what: format!("fixed-point iteration for omega_1 at r={r}, t={t}"),
    })
}
