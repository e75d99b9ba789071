//! Safeguarded scalar root finding on a bracket.
//!
//! Every inversion in this crate (chi, the S-transform inverse, the
//! subordination equation) is of a strictly monotone function, so a
//! bracket plus bisection is guaranteed to converge; Newton steps are
//! taken whenever they stay inside the bracket and shrink the residual.

use crate::error::{Error, Result};

pub const MAX_ITER: usize = 200;

/// Root of f on [lo, hi] where f(lo) and f(hi) straddle zero.
///
/// `f` returns (value, derivative). Stops when |value| <= `abs_tol` or the
/// bracket collapses to rounding width.
pub fn bracketed_newton<F>(mut f: F, lo: f64, hi: f64, abs_tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> (f64, f64),
{
    let (mut lo, mut hi) = (lo, hi);
    let (mut f_lo, _) = f(lo);
    let (f_hi, _) = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoConvergence {
            what: format!("no sign change on bracket [{lo}, {hi}]"),
        });
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..MAX_ITER {
        let (fx, dfx) = f(x);
        if fx.abs() <= abs_tol {
            return Ok(x);
        }
        if fx.signum() == f_lo.signum() {
            lo = x;
            f_lo = fx;
        } else {
            hi = x;
        }
        if (hi - lo).abs() <= 4.0 * f64::EPSILON * x.abs().max(lo.abs()).max(1e-300) {
            return Ok(x);
        }
        // Newton candidate, accepted only strictly inside the bracket.
        let newton = x - fx / dfx;
        x = if dfx != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Ok(x)
}
