//! Analytic transforms of measures: the h-transform on the imaginary
//! axis, the psi/chi pair, and the S-transform with its inverse.
//!
//! All of these reduce to weighted sums over the discrete measure plus
//! monotone scalar inversions, so every evaluation is deterministic.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::measures::{MeasureRPlus, SymmetricMeasure, TailMoment};
use crate::solve::bracketed_newton;

/// Residual targets for the scalar inversions; double precision with margin.
const INVERSION_TOL: f64 = 1e-13;

/// The h-transform of a symmetrized singular-value law:
/// `h(s) = int s/(s^2+u^2) dmu(u)`, equal to `s tau((T*T + s^2)^{-1})`.
#[derive(Debug, Clone)]
pub struct HTransform {
    mu: SymmetricMeasure,
}

impl HTransform {
    pub fn new(mu: SymmetricMeasure) -> Self {
        HTransform { mu }
    }

    pub fn measure(&self) -> &SymmetricMeasure {
        &self.mu
    }

    pub fn eval(&self, s: f64) -> Result<f64> {
        h_eval(&self.mu, s)
    }

    /// dh/ds, by differentiating the kernel under the sum.
    pub fn derivative(&self, s: f64) -> Result<f64> {
        Error::require_positive("s", s)?;
        Ok(self.mu.integrate_even(|u| {
            let d = s * s + u * u;
            (u * u - s * s) / (d * d)
        }))
    }
}

/// `h(s) = int_0^inf s/(s^2+u^2) dmu_|T|(u)`, origin atom contributing 1/s.
pub fn h_eval(mu: &SymmetricMeasure, s: f64) -> Result<f64> {
    Error::require_positive("s", s)?;
    Ok(mu.integrate_even(|u| s / (s * s + u * u)))
}

/// Cauchy transform of the symmetrized law on the imaginary axis:
/// `G(it) = -i h(t)`, purely imaginary with negative imaginary part.
pub fn cauchy_on_imaginary_axis(mu: &SymmetricMeasure, t: f64) -> Result<Complex64> {
    Ok(Complex64::new(0.0, -h_eval(mu, t)?))
}

/// Cauchy transform of the symmetrized law at a general point of the
/// upper half-plane (needed by the fixed-point subordination iteration).
pub fn cauchy_upper(mu: &SymmetricMeasure, z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &(u, w) in mu.base().support() {
        // Pair each atom with its mirror: (1/(z-u) + 1/(z+u))/2 = z/(z^2-u^2).
        acc += w * z / (z * z - u * u);
    }
    if mu.base().zero_mass() > 0.0 {
        acc += mu.base().zero_mass() / z;
    }
    acc
}

/// `psi(z) = int zt/(1-zt) dmu(t)` on the negative real axis; strictly
/// increasing from delta - 1 up to 0.
pub fn psi_eval(mu_sq: &MeasureRPlus, z: f64) -> Result<f64> {
    if z >= 0.0 || !z.is_finite() {
        return Err(Error::Domain {
            what: format!("psi is evaluated on z < 0, got {z}"),
        });
    }
    Ok(mu_sq.integrate_support(|t| z * t / (1.0 - z * t)))
}

/// d psi / dz = int t/(1-zt)^2 dmu(t), positive on z < 0.
pub fn psi_prime(mu_sq: &MeasureRPlus, z: f64) -> f64 {
    mu_sq.integrate_support(|t| {
        let d = 1.0 - z * t;
        t / (d * d)
    })
}

/// chi, the inverse of psi on (delta - 1, 0): the unique z < 0 with
/// psi(z) = w. Bracket by doubling the left end, then safeguarded Newton.
///
/// The residual is evaluated as R(z) - (w - (delta - 1)) with
/// R(z) = sum_i w_i / (1 - z t_i) over the positive atoms: psi itself is
/// a sum of terms near -1 close to the window's left endpoint, and the
/// naive psi(z) - w would drown in rounding noise exactly where the
/// Brown CDF needs chi the most.
pub fn chi(mu_sq: &MeasureRPlus, w: f64) -> Result<f64> {
    let delta = mu_sq.zero_mass();
    if w <= delta - 1.0 || w >= 0.0 {
        return Err(Error::OutOfWindow {
            value: w,
            lo: delta - 1.0,
            hi: 0.0,
        });
    }
    let target = w - (delta - 1.0);
    // Near the left endpoint psi is a sum of terms close to -1, near the
    // right endpoint a sum of near-zero terms: pick the spelling whose
    // terms match the residual's scale so no cancellation occurs.
    let near_left = target < w.abs();
    let residual = |z: f64| {
        if near_left {
            mu_sq.integrate_support(|t| 1.0 / (1.0 - z * t)) - target
        } else {
            mu_sq.integrate_support(|t| z * t / (1.0 - z * t)) - w
        }
    };

    // residual(z_hi) must sit above 0: shrink toward 0 if needed.
    let mut z_hi = -1e-12;
    for _ in 0..600 {
        if residual(z_hi) > 0.0 {
            break;
        }
        z_hi *= 0.25;
    }
    // residual(z_lo) must sit below 0: R decreases to 0 as z -> -inf.
    let mut z_lo = -1.0;
    for _ in 0..2000 {
        if residual(z_lo) < 0.0 {
            break;
        }
        z_lo *= 2.0;
        if !z_lo.is_finite() {
            return Err(Error::NoConvergence {
                what: format!("chi bracket expansion diverged for w = {w}"),
            });
        }
    }
    let scale = target.min(w.abs()).min(1.0);
    bracketed_newton(
        |z| (residual(z), psi_prime(mu_sq, z)),
        z_lo,
        z_hi,
        INVERSION_TOL * scale,
    )
}

/// The window and range of the S-transform of a measure on [0, inf):
/// S is finite and strictly decreasing on (delta - 1, 0) with range
/// (1/b, 1/a), a = (int u^-1 dmu)^-1 and b = int u dmu.
#[derive(Debug, Clone, Copy)]
pub struct STransformWindow {
    pub delta: f64,
    pub domain: (f64, f64),
    pub range_lo: f64,
    /// None when int u^-1 dmu diverges, i.e. the range is unbounded above.
    pub range_hi: Option<f64>,
}

pub fn s_transform_window(mu_sq: &MeasureRPlus) -> STransformWindow {
    let delta = mu_sq.zero_mass();
    let b = mu_sq.first_moment();
    let range_hi = match mu_sq.inverse_first_moment() {
        TailMoment::Finite(inv) => Some(inv),
        TailMoment::Divergent => None,
    };
    STransformWindow {
        delta,
        domain: (delta - 1.0, 0.0),
        range_lo: 1.0 / b,
        range_hi,
    }
}

/// `S(w) = (w+1)/w * chi(w)` on (delta - 1, 0).
pub fn s_transform(mu_sq: &MeasureRPlus, w: f64) -> Result<f64> {
    let z = chi(mu_sq, w)?;
    Ok((w + 1.0) / w * z)
}

/// dS/dw through the implicit function theorem: chi' = 1/psi'(chi).
pub fn s_transform_prime(mu_sq: &MeasureRPlus, w: f64) -> Result<f64> {
    let z = chi(mu_sq, w)?;
    let chi_prime = 1.0 / psi_prime(mu_sq, z);
    Ok(-z / (w * w) + (w + 1.0) / w * chi_prime)
}

/// The unique w in (delta - 1, 0) with S(w) = y; OutOfRange when y is not
/// in (1/b, 1/a).
pub fn s_transform_inverse(mu_sq: &MeasureRPlus, y: f64) -> Result<f64> {
    let window = s_transform_window(mu_sq);
    if y <= window.range_lo || window.range_hi.is_some_and(|hi| y >= hi) {
        return Err(Error::OutOfRange {
            value: y,
            lo: window.range_lo,
        });
    }
    let width = 1.0 - window.delta;
    // S decreases from 1/a toward 1/b; pull the bracket ends toward the
    // window endpoints until they straddle y. When the preimage sits
    // within rounding distance of an endpoint, the closest representable
    // w already carries the full double-precision answer: return it.
    let mut margin_lo = 0.05 * width;
    let mut w_lo = window.domain.0 + margin_lo;
    while s_transform(mu_sq, w_lo)? <= y {
        margin_lo *= 0.25;
        let next = window.domain.0 + margin_lo;
        if next <= window.domain.0 || next == w_lo {
            return Ok(window.domain.0.next_up());
        }
        w_lo = next;
    }
    let mut margin_hi = 0.05 * width;
    let mut w_hi = -margin_hi;
    while s_transform(mu_sq, w_hi)? >= y {
        margin_hi *= 0.25;
        let next = -margin_hi;
        if next >= 0.0 || next == w_hi {
            return Ok(w_hi);
        }
        w_hi = next;
    }
    bracketed_newton(
        |w| {
            (
                s_transform(mu_sq, w).unwrap() - y,
                s_transform_prime(mu_sq, w).unwrap(),
            )
        },
        w_lo,
        w_hi,
        INVERSION_TOL * y.abs().max(1.0),
    )
}

/// d/dy of the S-transform inverse, used by the Brown density formula.
pub fn s_transform_inverse_prime(mu_sq: &MeasureRPlus, y: f64) -> Result<f64> {
    let w = s_transform_inverse(mu_sq, y)?;
    Ok(1.0 / s_transform_prime(mu_sq, w)?)
}
