//! Brown measures of R-diagonal operators from the spectral law of |T|.
//!
//! Given a probability measure on [0, inf) describing the singular-value
//! distribution of an R-diagonal operator T, this crate computes the
//! rotation-invariant Brown measure of T (radial CDF and density, by two
//! independent analytic routes), Fuglede-Kadison determinants at t > 0
//! and t = 0, the subordination functions of the underlying free
//! convolution with a symmetric Bernoulli law, resolvent-trace formulas,
//! and a finite-dimensional random-matrix Monte Carlo oracle used to
//! validate all of the above.

pub mod brown;
pub mod cli;
pub mod error;
pub mod matrix_oracle;
pub mod measures;
pub mod quad;
pub mod solve;
pub mod spec_file;
pub mod subordination;
pub mod transforms;

pub use brown::{
    fk_det, fk_det_regularized, hermitian_reduction_delta, log_potential_consistency,
    negative_moment_first, radial_cdf, radial_cdf_via_s_transform, radial_density,
    DeterminantValue, LogScalar, NegativeMoment, RadialBrownMeasure,
};
pub use error::{Error, Result};
pub use measures::{lambda_bounds, symmetrize, LambdaBounds, MeasureRPlus, SymmetricMeasure};
pub use subordination::{fixed_point_omega1, KFunction, SAtZero, SubordinationResult};
pub use transforms::{
    cauchy_on_imaginary_axis, h_eval, psi_eval, s_transform, s_transform_inverse, HTransform,
};
