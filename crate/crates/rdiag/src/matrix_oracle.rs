//! Finite-dimensional Monte Carlo oracle.
//!
//! Samples T_n = W (U H) W^* with U, W independent Haar unitaries and H a
//! deterministic quantile diagonal of the input law, so the only noise
//! left is the freeness approximation itself. Eigen- and singular-value
//! work is delegated to LAPACK through ndarray-linalg.

use ndarray::Array2;
use ndarray_linalg::{c64, EigVals, EigValsh, Eigh, QRSquare, UPLO};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::MeasureRPlus;

/// One Monte Carlo run: dimension, sample count, base seed, and the
/// (lambda, t) points at which resolvent traces are estimated.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McConfig {
    pub n: usize,
    pub n_samples: usize,
    pub seed: u64,
    /// Points stored as (re, im) pairs to keep the report serializable.
    pub lambda_list: Vec<(f64, f64)>,
    pub t_list: Vec<f64>,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            n: 250,
            n_samples: 1,
            seed: 1,
            lambda_list: Vec::new(),
            t_list: Vec::new(),
        }
    }
}

/// Aggregated ensemble report; deterministic given the config.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McEnsembleReport {
    pub n: usize,
    pub n_samples: usize,
    pub seed: u64,
    /// Pooled eigenvalue moduli, sorted ascending.
    pub eigenvalue_moduli: Vec<f64>,
    /// KS distance of the pooled radial law to the analytic CDF.
    pub ks_to_analytic: f64,
    pub resolvent_estimates: Vec<ResolventEstimate>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolventEstimate {
    pub lambda: (f64, f64),
    pub t: f64,
    /// (1/n) tr (lambda - T)[(lambda - T)^*(lambda - T) + t^2]^{-1}.
    pub empirical: (f64, f64),
    /// Empirical h_lambda(t) = t (1/n) tr [(lambda-T)^*(lambda-T) + t^2]^{-1}.
    pub empirical_h: f64,
}

/// Per-sample RNG stream: independent of sample order and other samples.
pub fn stream_rng(seed: u64, sample_index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ sample_index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn standard_complex<R: Rng>(rng: &mut R) -> c64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    c64::new(re / 2f64.sqrt(), im / 2f64.sqrt())
}

/// Haar unitary by QR of a complex Ginibre matrix with the diagonal phase
/// correction that makes the factorization unique (plain QR is not Haar).
pub fn sample_haar_unitary<R: Rng>(n: usize, rng: &mut R) -> Result<Array2<c64>> {
    let mut g = Array2::<c64>::zeros((n, n));
    for elem in g.iter_mut() {
        *elem = standard_complex(rng);
    }
    let (mut q, r) = g
        .qr_square()
        .map_err(|e| Error::EigenFailure(format!("QR failed: {e}")))?;
    for j in 0..n {
        let d = r[[j, j]];
        let phase = if d.norm() == 0.0 { c64::new(1.0, 0.0) } else { d / d.norm() };
        for i in 0..n {
            q[[i, j]] *= phase;
        }
    }
    Ok(q)
}

/// Max column deviation of U^* U from the identity.
pub fn unitarity_residual(u: &Array2<c64>) -> f64 {
    let n = u.nrows();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for i in 0..n {
            let mut acc = c64::new(0.0, 0.0);
            for k in 0..n {
                acc += u[[k, i]].conj() * u[[k, j]];
            }
            let expect = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((acc - expect).norm());
        }
    }
    worst
}

/// R-diagonal sample: U H with U Haar and H the deterministic quantile
/// diagonal of mu (spectrum i/(n+1), i = 1..n), conjugated by an
/// independent Haar unitary.
pub fn sample_rdiagonal<R: Rng>(mu: &MeasureRPlus, n: usize, rng: &mut R) -> Result<Array2<c64>> {
    let u = sample_haar_unitary(n, rng)?;
    let w = sample_haar_unitary(n, rng)?;
    let mut uh = u;
    for j in 0..n {
        let q = mu.quantile((j + 1) as f64 / (n + 1) as f64);
        for i in 0..n {
            uh[[i, j]] *= q;
        }
    }
    // W (U H) W^*.
    let m = w.dot(&uh);
    let mut w_dag = w.t().into_owned();
    w_dag.mapv_inplace(|x| x.conj());
    Ok(m.dot(&w_dag))
}

/// Ginibre matrix scaled by 1/sqrt(n): the dense model for the circular law.
pub fn sample_ginibre<R: Rng>(n: usize, rng: &mut R) -> Array2<c64> {
    let scale = 1.0 / (n as f64).sqrt();
    let mut g = Array2::<c64>::zeros((n, n));
    for elem in g.iter_mut() {
        *elem = standard_complex(rng) * scale;
    }
    g
}

/// Sorted eigenvalue moduli of a general complex matrix.
pub fn empirical_brown(t_matrix: &Array2<c64>) -> Result<Vec<f64>> {
    let eigs = t_matrix
        .eigvals()
        .map_err(|e| Error::EigenFailure(format!("eigvals failed: {e}")))?;
    let mut moduli: Vec<f64> = eigs.iter().map(|z| z.norm()).collect();
    moduli.sort_by(f64::total_cmp);
    Ok(moduli)
}

/// Eigenvalues themselves, for callers that need arguments too.
pub fn empirical_eigenvalues(t_matrix: &Array2<c64>) -> Result<Vec<Complex64>> {
    let eigs = t_matrix
        .eigvals()
        .map_err(|e| Error::EigenFailure(format!("eigvals failed: {e}")))?;
    Ok(eigs.iter().map(|z| Complex64::new(z.re, z.im)).collect())
}

/// Singular values via the Hermitian eigenproblem of A^* A.
pub fn singular_values(a: &Array2<c64>) -> Result<Vec<f64>> {
    let mut a_dag = a.t().into_owned();
    a_dag.mapv_inplace(|x| x.conj());
    let gram = a_dag.dot(a);
    let evals = gram
        .eigvalsh(UPLO::Lower)
        .map_err(|e| Error::EigenFailure(format!("eigvalsh failed: {e}")))?;
    let mut out: Vec<f64> = evals.iter().map(|&v| v.max(0.0).sqrt()).collect();
    out.sort_by(f64::total_cmp);
    Ok(out)
}

fn shifted(t_matrix: &Array2<c64>, lambda: Complex64) -> Array2<c64> {
    let n = t_matrix.nrows();
    let mut m = t_matrix.clone();
    m.mapv_inplace(|x| -x);
    let l = c64::new(lambda.re, lambda.im);
    for i in 0..n {
        m[[i, i]] += l;
    }
    m
}

/// Empirical symmetrized law of |T - lambda|: for each t, the estimate
/// h_lambda(t) ~= t mean(1/(sigma_i^2 + t^2)) from the singular values.
pub fn empirical_symmetrized_law(
    t_matrix: &Array2<c64>,
    lambda: Complex64,
    t_list: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let sigmas = singular_values(&shifted(t_matrix, lambda))?;
    let n = sigmas.len() as f64;
    Ok(t_list
        .iter()
        .map(|&t| {
            let mean: f64 = sigmas.iter().map(|&s| 1.0 / (s * s + t * t)).sum::<f64>() / n;
            (t, t * mean)
        })
        .collect())
}

/// Normalized traces of (lambda - T) R_t and of R_t itself, with
/// R_t = [(lambda-T)^*(lambda-T) + t^2]^{-1}, via one Hermitian
/// eigendecomposition of the Gram matrix.
pub fn resolvent_trace_estimate(
    t_matrix: &Array2<c64>,
    lambda: Complex64,
    t: f64,
) -> Result<(Complex64, f64)> {
    let m = shifted(t_matrix, lambda);
    let mut m_dag = m.t().into_owned();
    m_dag.mapv_inplace(|x| x.conj());
    let gram = m_dag.dot(&m);
    let (evals, evecs) = gram
        .eigh(UPLO::Lower)
        .map_err(|e| Error::EigenFailure(format!("eigh failed: {e}")))?;
    let n = m.nrows();
    let mv = m.dot(&evecs);
    let mut trace_m_r = c64::new(0.0, 0.0);
    let mut trace_r = 0.0;
    for j in 0..n {
        let denom = evals[j].max(0.0) + t * t;
        let mut diag = c64::new(0.0, 0.0);
        for i in 0..n {
            diag += evecs[[i, j]].conj() * mv[[i, j]];
        }
        trace_m_r += diag / denom;
        trace_r += 1.0 / denom;
    }
    let nf = n as f64;
    Ok((
        Complex64::new(trace_m_r.re, trace_m_r.im) / nf,
        trace_r / nf,
    ))
}

/// Normalized trace of eps [(lambda-T)(lambda-T)^* + eps^2]^{-1}; equals
/// the same trace with the factors swapped, so it reuses the Gram spectrum.
pub fn block_resolvent_trace(t_matrix: &Array2<c64>, lambda: Complex64, eps: f64) -> Result<f64> {
    let sigmas = singular_values(&shifted(t_matrix, lambda))?;
    let n = sigmas.len() as f64;
    Ok(eps * sigmas.iter().map(|&s| 1.0 / (s * s + eps * eps)).sum::<f64>() / n)
}

/// Sup distance between the empirical CDF of sorted points and a
/// continuous analytic CDF, evaluated at the jump points.
pub fn ks_distance<F: Fn(f64) -> f64>(sorted_points: &[f64], cdf: F) -> f64 {
    let n = sorted_points.len() as f64;
    let mut worst: f64 = 0.0;
    for (i, &x) in sorted_points.iter().enumerate() {
        let f = cdf(x);
        worst = worst.max((f - i as f64 / n).abs());
        worst = worst.max((f - (i as f64 + 1.0) / n).abs());
    }
    worst
}

/// Two-sample sup distance between the empirical CDFs of two sorted sets.
pub fn ks_between_sorted(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut pooled: Vec<f64> = a.iter().chain(b.iter()).copied().collect();
    pooled.sort_by(f64::total_cmp);
    let mut worst: f64 = 0.0;
    for &x in &pooled {
        let fa = a.partition_point(|&v| v <= x) as f64 / na;
        let fb = b.partition_point(|&v| v <= x) as f64 / nb;
        worst = worst.max((fa - fb).abs());
    }
    worst
}

/// Run the full ensemble: pooled moduli, KS against the supplied analytic
/// radial CDF, and resolvent trace estimates at the configured points.
pub fn run_ensemble<F: Fn(f64) -> f64>(
    mu: &MeasureRPlus,
    config: &McConfig,
    analytic_cdf: F,
) -> Result<McEnsembleReport> {
    if config.n < 2 {
        return Err(Error::Input("matrix dimension must be at least 2".into()));
    }
    if config.n_samples < 1 {
        return Err(Error::Input("need at least one sample".into()));
    }
    let mut moduli = Vec::with_capacity(config.n * config.n_samples);
    let mut estimates = Vec::new();
    for sample in 0..config.n_samples {
        let mut rng = stream_rng(config.seed, sample as u64);
        let t_n = sample_rdiagonal(mu, config.n, &mut rng)?;
        moduli.extend(empirical_brown(&t_n)?);
        for &(re, im) in &config.lambda_list {
            let lambda = Complex64::new(re, im);
            for &t in &config.t_list {
                let (trace_m, trace_r) = resolvent_trace_estimate(&t_n, lambda, t)?;
                estimates.push(ResolventEstimate {
                    lambda: (re, im),
                    t,
                    empirical: (trace_m.re, trace_m.im),
                    empirical_h: t * trace_r,
                });
            }
        }
    }
    moduli.sort_by(f64::total_cmp);
    let ks = ks_distance(&moduli, analytic_cdf);
    Ok(McEnsembleReport {
        n: config.n,
        n_samples: config.n_samples,
        seed: config.seed,
        eigenvalue_moduli: moduli,
        ks_to_analytic: ks,
        resolvent_estimates: estimates,
    })
}
