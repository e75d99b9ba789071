//! Probability measures on the half-line [0, inf).
//!
//! A measure here is always a finite weighted point set plus an explicit
//! atom at the origin. Atomic and empirical inputs are exact; density
//! inputs are discretized once into a fixed quadrature rule, so every
//! downstream transform reduces to a deterministic weighted sum. The
//! origin atom is kept out of the point set because the inner radius,
//! the Brown mass at zero, and the psi-transform all treat it specially.

use crate::error::{Error, Result};
use crate::quad::{composite_rule, graded_breakpoints, GaussLegendre};

const MASS_TOL: f64 = 1e-12;
const POSITION_TOL: f64 = 1e-12;

/// How the measure was constructed; integration is identical for all three.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureKind {
    Atomic,
    DensityGrid,
    Empirical,
}

/// A probability measure on [0, inf): an origin atom plus strictly
/// increasing positive support points with positive weights.
#[derive(Debug, Clone)]
pub struct MeasureRPlus {
    points: Vec<(f64, f64)>,
    zero_atom: f64,
    kind: MeasureKind,
}

/// Value of an integral against the measure that may genuinely diverge
/// (inverse moments of densities with mass near the origin).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailMoment {
    Finite(f64),
    Divergent,
}

/// Inner and outer radii of the single-ring annulus:
/// `lambda1 = (int u^-2 dmu)^(-1/2)` (zero when the integral diverges or
/// the origin carries mass) and `lambda2 = (int u^2 dmu)^(1/2)`.
#[derive(Debug, Clone, Copy)]
pub struct LambdaBounds {
    pub lambda1: f64,
    pub lambda2: f64,
    /// Degenerate case: the measure is a Dirac mass, so the annulus is empty.
    pub dirac: bool,
}

/// Extra knobs for density discretization.
#[derive(Debug, Clone, Copy)]
pub struct DensityOptions {
    /// For unbounded supports, trailing nodes carrying less than this much
    /// total mass are trimmed before renormalization.
    pub tail_mass: f64,
}

impl Default for DensityOptions {
    fn default() -> Self {
        DensityOptions { tail_mass: 1e-10 }
    }
}

impl MeasureRPlus {
    /// Atomic measure from (position, weight) pairs; weights must sum to 1.
    /// Atoms at the origin are folded into the zero atom.
    pub fn make_atomic(atoms: &[(f64, f64)]) -> Result<Self> {
        let mut zero_atom = 0.0;
        let mut points = Vec::with_capacity(atoms.len());
        for &(x, w) in atoms {
            if x < 0.0 {
                return Err(Error::NegativeSupport { position: x });
            }
            if w <= 0.0 {
                return Err(Error::Input(format!("atom weight must be positive, got {w}")));
            }
            if x == 0.0 {
                zero_atom += w;
            } else {
                points.push((x, w));
            }
        }
        let mass: f64 = zero_atom + points.iter().map(|p| p.1).sum::<f64>();
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::NonNormalized { mass });
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        let points = merge_equal_positions(points);
        Ok(MeasureRPlus {
            points,
            zero_atom,
            kind: MeasureKind::Atomic,
        })
    }

    /// Empirical measure: equal weight 1/n per sample, zero samples folded
    /// into the origin atom.
    pub fn make_empirical(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Input("empirical measure needs at least one sample".into()));
        }
        let w = 1.0 / samples.len() as f64;
        let mut zero_atom = 0.0;
        let mut points = Vec::with_capacity(samples.len());
        for &x in samples {
            if x < 0.0 {
                return Err(Error::NegativeSupport { position: x });
            }
            if x == 0.0 {
                zero_atom += w;
            } else {
                points.push((x, w));
            }
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        let points = merge_equal_positions(points);
        Ok(MeasureRPlus {
            points,
            zero_atom,
            kind: MeasureKind::Empirical,
        })
    }

    /// Discretize a density on (a, b) into a fixed Gauss-Legendre rule,
    /// graded geometrically toward both endpoints. `b = None` means an
    /// unbounded support, handled by the variable change x = a + u/(1-u).
    ///
    /// Returns the measure and the renormalization factor that scaled the
    /// raw quadrature mass to one. `n_nodes` is a budget: below 64 nodes a
    /// single ungraded panel is used (deliberately coarse rules stay
    /// coarse), above it nodes are spent on grading depth first.
    pub fn make_density<F>(density: F, support: (f64, Option<f64>), n_nodes: usize) -> Result<(Self, f64)>
    where
        F: Fn(f64) -> f64,
    {
        Self::make_density_opts(density, support, n_nodes, DensityOptions::default())
    }

    pub fn make_density_opts<F>(
        density: F,
        support: (f64, Option<f64>),
        n_nodes: usize,
        opts: DensityOptions,
    ) -> Result<(Self, f64)>
    where
        F: Fn(f64) -> f64,
    {
        let (a, b) = support;
        if a < 0.0 {
            return Err(Error::NegativeSupport { position: a });
        }
        if let Some(b) = b {
            if b <= a {
                return Err(Error::Input(format!("empty support ({a}, {b})")));
            }
        }
        if n_nodes < 2 {
            return Err(Error::Input("density rule needs at least 2 nodes".into()));
        }

        // Integrability probe, independent of the requested rule size:
        // deepen the endpoint grading twice and watch the mass drift.
        // For any integrable density the drift decays geometrically with
        // depth; divergent endpoints or tails keep accumulating mass at
        // every level. (A fixed drift threshold would misclassify
        // integrable endpoint singularities, which converge slowly.)
        let m1: f64 = probe_rule(&density, a, b, 6)?.iter().map(|p| p.1).sum();
        let m2: f64 = probe_rule(&density, a, b, 10)?.iter().map(|p| p.1).sum();
        let m3: f64 = probe_rule(&density, a, b, 14)?.iter().map(|p| p.1).sum();
        let drift1 = (m2 - m1).abs();
        let drift2 = (m3 - m2).abs();
        let diverging = !m3.is_finite()
            || (drift2 > 1e-10 * m3.abs().max(1.0) && drift2 > 0.7 * drift1);
        if diverging {
            return Err(Error::NonIntegrable { coarse: m2, fine: m3 });
        }
        let coarse = raw_density_rule(&density, a, b, n_nodes)?;

        let mut points = coarse;
        if b.is_none() {
            trim_tail(&mut points, opts.tail_mass);
        }
        let mass: f64 = points.iter().map(|p| p.1).sum();
        let renorm = 1.0 / mass;
        for p in &mut points {
            p.1 *= renorm;
        }
        points.retain(|p| p.1 > 0.0 && p.0 > 0.0);
        Ok((
            MeasureRPlus {
                points,
                zero_atom: 0.0,
                kind: MeasureKind::DensityGrid,
            },
            renorm,
        ))
    }

    /// Quarter-circle law of the given radius: density
    /// `4/(pi R^2) sqrt(R^2 - x^2)` on (0, R). The substitution x = R sin(t)
    /// removes the edge singularity, so the rule is spectrally accurate.
    pub fn quarter_circle(radius: f64, n_nodes: usize) -> Result<Self> {
        Error::require_positive("radius", radius)?;
        if n_nodes < 64 {
            let (m, _) = Self::make_density(
                |x| {
                    let d = radius * radius - x * x;
                    4.0 / (std::f64::consts::PI * radius * radius) * d.max(0.0).sqrt()
                },
                (0.0, Some(radius)),
                n_nodes,
            )?;
            return Ok(m);
        }
        let theta_max = std::f64::consts::FRAC_PI_2;
        let (levels, per_panel) = graded_layout(n_nodes);
        let breaks = graded_breakpoints(0.0, theta_max, levels, 0, 0.15);
        let rule = composite_rule(&breaks, per_panel);
        let points = rule
            .iter()
            .map(|&(theta, w)| {
                let x = radius * theta.sin();
                let c = theta.cos();
                (x, 4.0 / std::f64::consts::PI * c * c * w)
            })
            .collect::<Vec<_>>();
        Self::from_normalized_grid(points)
    }

    /// Marchenko-Pastur law with the given rate (shape) parameter c:
    /// density `sqrt((b-x)(x-a)) / (2 pi c x)` on [a, b] with
    /// a = (1-sqrt c)^2, b = (1+sqrt c)^2, plus an origin atom (1-1/c)+
    /// when c > 1. The substitution x = a + (b-a) sin^2(t) removes both
    /// edge singularities.
    pub fn marchenko_pastur(rate: f64, n_nodes: usize) -> Result<Self> {
        Error::require_positive("rate", rate)?;
        let sq = rate.sqrt();
        let a = (1.0 - sq) * (1.0 - sq);
        let b = (1.0 + sq) * (1.0 + sq);
        let zero_atom = (1.0 - 1.0 / rate).max(0.0);
        // Deep grading toward theta = 0 only matters when the support
        // touches the origin (a = 0); for a > 0 it would just collapse
        // nodes onto x = a at rounding precision.
        let (levels, per_panel) = if a == 0.0 {
            graded_layout(n_nodes.max(64))
        } else {
            let (_, per_panel) = graded_layout(n_nodes.max(64));
            (4, per_panel)
        };
        let breaks = graded_breakpoints(0.0, std::f64::consts::FRAC_PI_2, levels, 0, 0.15);
        let rule = composite_rule(&breaks, per_panel);
        let span = b - a;
        let points = rule
            .iter()
            .map(|&(theta, w)| {
                let s = theta.sin();
                let c = theta.cos();
                let x = a + span * s * s;
                // span^2 sin^2 cos^2 / (pi c x); written to stay finite at a = 0.
                let weight = if a == 0.0 {
                    span / (std::f64::consts::PI * rate) * c * c * w
                } else {
                    span * span * s * s * c * c / (std::f64::consts::PI * rate * x) * w
                };
                (x, weight)
            })
            .collect::<Vec<_>>();
        // The density integrates to min(1, 1/c); rescale exactly onto that
        // mass so the origin atom completes the normalization.
        let target = 1.0 - zero_atom;
        let mass: f64 = points.iter().map(|p| p.1).sum();
        let points = points
            .into_iter()
            .map(|(x, w)| (x, w * target / mass))
            .collect();
        let mut m = Self::from_normalized_grid(points)?;
        m.zero_atom = zero_atom;
        Ok(m)
    }

    /// Uniform density on (a, b).
    pub fn uniform(a: f64, b: f64, n_nodes: usize) -> Result<Self> {
        let (m, _) = Self::make_density(|_| 1.0 / (b - a), (a, Some(b)), n_nodes)?;
        Ok(m)
    }

    /// Piecewise-linear density through the table (xs, ys); panels are
    /// split at the table knots so each panel integrand is polynomial.
    pub fn table(xs: &[f64], ys: &[f64], nodes_per_piece: usize) -> Result<(Self, f64)> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::Input("density table needs matching xs/ys with >= 2 entries".into()));
        }
        if xs[0] < 0.0 {
            return Err(Error::NegativeSupport { position: xs[0] });
        }
        if !xs.windows(2).all(|p| p[0] < p[1]) {
            return Err(Error::Input("table xs must be strictly increasing".into()));
        }
        if let Some(&y) = ys.iter().find(|&&y| y < 0.0) {
            let i = ys.iter().position(|&v| v == y).unwrap();
            return Err(Error::NegativeDensity { position: xs[i], value: y });
        }
        let rule = GaussLegendre::new(nodes_per_piece.clamp(4, 32));
        let mut points = Vec::new();
        for i in 0..xs.len() - 1 {
            let (x0, x1) = (xs[i], xs[i + 1]);
            let (y0, y1) = (ys[i], ys[i + 1]);
            let mut panel = Vec::new();
            rule.extend_mapped(x0, x1, &mut panel);
            for (x, w) in panel {
                let y = y0 + (y1 - y0) * (x - x0) / (x1 - x0);
                if y > 0.0 {
                    points.push((x, w * y));
                }
            }
        }
        let mass: f64 = points.iter().map(|p| p.1).sum();
        if mass <= 0.0 {
            return Err(Error::Input("table density has zero mass".into()));
        }
        let renorm = 1.0 / mass;
        for p in &mut points {
            p.1 *= renorm;
        }
        let m = Self::from_normalized_grid(points)?;
        Ok((m, renorm))
    }

    fn from_normalized_grid(mut points: Vec<(f64, f64)>) -> Result<Self> {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        let points = merge_equal_positions(points);
        Ok(MeasureRPlus {
            points,
            zero_atom: 0.0,
            kind: MeasureKind::DensityGrid,
        })
    }

    /// Move mass `d` onto the origin, rescaling the rest to 1 - d.
    pub fn with_zero_atom(mut self, d: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&d) {
            return Err(Error::Input(format!("zero_atom must be in [0, 1), got {d}")));
        }
        let support_mass: f64 = self.points.iter().map(|p| p.1).sum();
        let target = 1.0 - self.zero_atom - d;
        if target <= 0.0 {
            return Err(Error::Input("zero_atom leaves no mass for the support".into()));
        }
        let scale = target / support_mass;
        for p in &mut self.points {
            p.1 *= scale;
        }
        self.zero_atom += d;
        Ok(self)
    }

    pub fn kind(&self) -> MeasureKind {
        self.kind
    }

    pub fn zero_mass(&self) -> f64 {
        self.zero_atom
    }

    /// Total mass; 1 up to rounding for every constructor.
    pub fn mass(&self) -> f64 {
        self.zero_atom + self.points.iter().map(|p| p.1).sum::<f64>()
    }

    /// Positive support points with their weights, in increasing order.
    pub fn support(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Integral of f against the measure, origin atom included.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let mut acc = 0.0;
        for &(x, w) in &self.points {
            acc += w * f(x);
        }
        if self.zero_atom > 0.0 {
            acc += self.zero_atom * f(0.0);
        }
        acc
    }

    /// Integral of f over the strictly positive support only.
    pub fn integrate_support<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.points.iter().map(|&(x, w)| w * f(x)).sum()
    }

    pub fn first_moment(&self) -> f64 {
        self.integrate_support(|u| u)
    }

    pub fn second_moment(&self) -> f64 {
        self.integrate_support(|u| u * u)
    }

    /// `int log(u) dmu`; None encodes -infinity (origin carries mass).
    pub fn log_moment(&self) -> Option<f64> {
        if self.zero_atom > 0.0 {
            None
        } else {
            Some(self.integrate_support(|u| u.ln()))
        }
    }

    /// `int u^-1 dmu`, with divergence detection near the origin.
    pub fn inverse_first_moment(&self) -> TailMoment {
        self.inverse_moment(1)
    }

    /// `int u^-2 dmu`, with divergence detection near the origin.
    pub fn inverse_square_moment(&self) -> TailMoment {
        self.inverse_moment(2)
    }

    fn inverse_moment(&self, power: i32) -> TailMoment {
        if self.zero_atom > 0.0 {
            return TailMoment::Divergent;
        }
        if self.points.is_empty() {
            return TailMoment::Divergent;
        }
        let total = self.integrate_support(|u| u.powi(-power));
        if !total.is_finite() {
            return TailMoment::Divergent;
        }
        // Atoms and empirical samples are exact finite sums. Density grids
        // approximate a continuum, so the sum is finite even when the true
        // integral diverges; detect that from the per-octave contributions
        // near the origin, which must decay for a convergent integral.
        if self.kind != MeasureKind::DensityGrid {
            return TailMoment::Finite(total);
        }
        let x_max = self.points.last().unwrap().0;
        let x_min = self.points[0].0;
        let deepest = (x_max / x_min).log2().floor() as i64;
        if deepest < 24 {
            // Rule not graded deep enough to probe the origin; trust the sum.
            return TailMoment::Finite(total);
        }
        let mut octaves = vec![0.0; deepest as usize + 1];
        for &(x, w) in &self.points {
            let k = (x_max / x).log2().floor().clamp(0.0, deepest as f64) as usize;
            octaves[k] += w * x.powi(-power);
        }
        let deep: f64 = octaves[octaves.len() - 3..].iter().sum();
        let prev: f64 = octaves[octaves.len() - 6..octaves.len() - 3].iter().sum();
        if prev == 0.0 && deep == 0.0 {
            return TailMoment::Finite(total);
        }
        // Decay slower than one halving per octave means the continuum
        // integral (this rule samples) does not converge.
        if deep >= 0.35 * prev {
            TailMoment::Divergent
        } else {
            TailMoment::Finite(total)
        }
    }

    /// True when all mass sits at one point (position tolerance 1e-12).
    pub fn is_dirac(&self) -> bool {
        self.dirac_position().is_some()
    }

    pub fn dirac_position(&self) -> Option<f64> {
        if self.zero_atom >= 1.0 - MASS_TOL {
            return Some(0.0);
        }
        if self.zero_atom > MASS_TOL || self.points.is_empty() {
            return None;
        }
        let first = self.points[0].0;
        let last = self.points.last().unwrap().0;
        if last - first <= POSITION_TOL {
            Some(0.5 * (first + last))
        } else {
            None
        }
    }

    /// Left-continuous step quantile of the discrete measure.
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        let mut acc = self.zero_atom;
        if p <= acc {
            return 0.0;
        }
        for &(x, w) in &self.points {
            acc += w;
            if p <= acc {
                return x;
            }
        }
        self.points.last().map(|p| p.0).unwrap_or(0.0)
    }

    /// CDF of the discrete measure at x.
    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let mut acc = self.zero_atom;
        for &(u, w) in &self.points {
            if u <= x {
                acc += w;
            } else {
                break;
            }
        }
        acc
    }

    pub fn max_support(&self) -> f64 {
        self.points.last().map(|p| p.0).unwrap_or(0.0)
    }

    /// Image of the measure under u -> u^2.
    pub fn pushforward_square(&self) -> MeasureRPlus {
        MeasureRPlus {
            points: self.points.iter().map(|&(x, w)| (x * x, w)).collect(),
            zero_atom: self.zero_atom,
            kind: self.kind,
        }
    }

    /// Symmetrization: the even measure (mu(B) + mu(-B)) / 2.
    pub fn symmetrize(&self) -> SymmetricMeasure {
        SymmetricMeasure { base: self.clone() }
    }
}

/// Inner and outer radii of the annulus carrying the Brown measure.
pub fn lambda_bounds(mu: &MeasureRPlus) -> LambdaBounds {
    let lambda2 = mu.second_moment().sqrt();
    if mu.is_dirac() {
        let pos = mu.dirac_position().unwrap_or(0.0);
        return LambdaBounds {
            lambda1: pos,
            lambda2: pos,
            dirac: true,
        };
    }
    let lambda1 = match mu.inverse_square_moment() {
        TailMoment::Divergent => 0.0,
        TailMoment::Finite(v) => v.powf(-0.5),
    };
    LambdaBounds {
        lambda1,
        lambda2,
        dirac: false,
    }
}

/// The symmetrization of a half-line measure. Even integrands can be
/// evaluated directly against the base measure; odd parts cancel.
#[derive(Debug, Clone)]
pub struct SymmetricMeasure {
    base: MeasureRPlus,
}

impl SymmetricMeasure {
    pub fn base(&self) -> &MeasureRPlus {
        &self.base
    }

    /// Integral of an arbitrary integrand against the symmetrized measure.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let mut acc = 0.0;
        for &(x, w) in self.base.support() {
            acc += 0.5 * w * (f(x) + f(-x));
        }
        if self.base.zero_mass() > 0.0 {
            acc += self.base.zero_mass() * f(0.0);
        }
        acc
    }

    /// Integral of an even integrand, evaluated on the half-line.
    pub fn integrate_even<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.base.integrate(f)
    }

    /// Support atoms of the symmetrized measure (negative mirror included).
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(2 * self.base.support().len() + 1);
        for &(x, w) in self.base.support().iter().rev() {
            out.push((-x, 0.5 * w));
        }
        if self.base.zero_mass() > 0.0 {
            out.push((0.0, self.base.zero_mass()));
        }
        for &(x, w) in self.base.support() {
            out.push((x, 0.5 * w));
        }
        out
    }
}

/// Free-function spelling of the symmetrization.
pub fn symmetrize(mu: &MeasureRPlus) -> SymmetricMeasure {
    mu.symmetrize()
}

fn merge_equal_positions(points: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for (x, w) in points {
        match out.last_mut() {
            Some(last) if last.0 == x => last.1 += w,
            _ => out.push((x, w)),
        }
    }
    out
}

fn graded_layout(n_nodes: usize) -> (usize, usize) {
    let panels_budget = (n_nodes / 16).max(4);
    let levels = (panels_budget - 1).min(18);
    let per_panel = (n_nodes / (levels + 2)).clamp(12, 32);
    (levels, per_panel)
}

fn graded_layout_two_sided(n_nodes: usize) -> (usize, usize) {
    let panels_budget = (n_nodes / 16).max(4);
    let levels = (panels_budget / 2).clamp(1, 18);
    let per_panel = (n_nodes / (2 * levels + 2)).clamp(12, 32);
    (levels, per_panel)
}

fn raw_density_rule<F: Fn(f64) -> f64>(
    density: &F,
    a: f64,
    b: Option<f64>,
    n_nodes: usize,
) -> Result<Vec<(f64, f64)>> {
    let (lo, hi) = reference_interval(a, b);
    let rule = if n_nodes < 64 {
        let gl = GaussLegendre::new(n_nodes);
        let mut out = Vec::new();
        gl.extend_mapped(lo, hi, &mut out);
        out
    } else {
        let (mut levels, per_panel) = graded_layout_two_sided(n_nodes);
        if b.is_none() {
            // Past ~14 levels the u -> x = u/(1-u) map loses 1-u to
            // rounding; deeper panels would carry garbage weights.
            levels = levels.min(14);
        }
        let breaks = graded_breakpoints(lo, hi, levels, levels, 0.15);
        composite_rule(&breaks, per_panel)
    };
    weighted_nodes(density, a, b, rule)
}

fn probe_rule<F: Fn(f64) -> f64>(
    density: &F,
    a: f64,
    b: Option<f64>,
    levels: usize,
) -> Result<Vec<(f64, f64)>> {
    let (lo, hi) = reference_interval(a, b);
    let breaks = graded_breakpoints(lo, hi, levels, levels, 0.15);
    weighted_nodes(density, a, b, composite_rule(&breaks, 16))
}

/// Unbounded supports go through x = a + u/(1-u) on (0, 1).
fn reference_interval(a: f64, b: Option<f64>) -> (f64, f64) {
    match b {
        Some(b) => (a, b),
        None => (0.0, 1.0),
    }
}

fn weighted_nodes<F: Fn(f64) -> f64>(
    density: &F,
    a: f64,
    b: Option<f64>,
    rule: Vec<(f64, f64)>,
) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(rule.len());
    for (t, w) in rule {
        let (x, jac) = match b {
            Some(_) => (t, 1.0),
            None => {
                let one_minus = 1.0 - t;
                (a + t / one_minus, 1.0 / (one_minus * one_minus))
            }
        };
        let y = density(x);
        if y < 0.0 {
            return Err(Error::NegativeDensity { position: x, value: y });
        }
        if y > 0.0 && x.is_finite() {
            out.push((x, w * jac * y));
        }
    }
    out.sort_by(|p, q| p.0.total_cmp(&q.0));
    Ok(out)
}

fn trim_tail(points: &mut Vec<(f64, f64)>, tail_mass: f64) {
    let total: f64 = points.iter().map(|p| p.1).sum();
    let mut dropped = 0.0;
    let mut keep = points.len();
    while keep > 1 {
        let w = points[keep - 1].1;
        if dropped + w > tail_mass * total {
            break;
        }
        dropped += w;
        keep -= 1;
    }
    points.truncate(keep);
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    /// Independent adaptive Simpson oracle for the derived expectations.
    fn adaptive_simpson<F: Fn(f64) -> f64 + Copy>(f: F, a: f64, b: f64, tol: f64) -> f64 {
        fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
            (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
        }
        fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let left = simpson(f, a, m);
            let right = simpson(f, m, b);
            if depth == 0 || (left + right - whole).abs() < 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                recurse(f, a, m, left, 0.5 * tol, depth - 1)
                    + recurse(f, m, b, right, 0.5 * tol, depth - 1)
            }
        }
        let whole = simpson(&f, a, b);
        recurse(&f, a, b, whole, tol, 48)
    }

    fn quarter_circle_density(x: f64) -> f64 {
        (4.0 - x * x).max(0.0).sqrt() / std::f64::consts::PI
    }

    fn half_half() -> MeasureRPlus {
        MeasureRPlus::make_atomic(&[(1.0, 0.5), (2.0, 0.5)]).unwrap()
    }

    #[test]
    fn make_atomic_single_atom() {
        let m = MeasureRPlus::make_atomic(&[(1.0, 1.0)]).unwrap();
        assert_eq!(m.zero_mass(), 0.0);
        assert_eq!(m.support(), &[(1.0, 1.0)]);
    }

    #[test]
    fn make_atomic_folds_origin_mass() {
        let m = MeasureRPlus::make_atomic(&[(0.0, 0.3), (2.0, 0.7)]).unwrap();
        assert_eq!(m.zero_mass(), 0.3);
        assert_eq!(m.support(), &[(2.0, 0.7)]);
    }

    #[test]
    fn make_atomic_rejects_unnormalized_input() {
        let err = MeasureRPlus::make_atomic(&[(1.0, 0.5), (2.0, 0.6)]).unwrap_err();
        assert!(matches!(err, Error::NonNormalized { .. }));
    }

    #[test]
    fn make_atomic_rejects_negative_positions() {
        let err = MeasureRPlus::make_atomic(&[(-1.0, 1.0)]).unwrap_err();
        assert!(matches!(err, Error::NegativeSupport { .. }));
    }

    #[test]
    fn density_quarter_circle_mass_and_moment() {
        // Oracle: int_0^2 (1/pi) sqrt(4-x^2) dx = 1 and the second moment is 1.
        let oracle_mass = adaptive_simpson(quarter_circle_density, 0.0, 2.0, 1e-13);
        let oracle_m2 = adaptive_simpson(|x| x * x * quarter_circle_density(x), 0.0, 2.0, 1e-13);
        assert_abs_diff_eq!(oracle_mass, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(oracle_m2, 1.0, epsilon = 1e-9);

        let (m, _renorm) = MeasureRPlus::make_density(quarter_circle_density, (0.0, Some(2.0)), 256).unwrap();
        assert_abs_diff_eq!(m.mass(), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(m.second_moment(), 1.0, epsilon = 1e-8);

        let qc = MeasureRPlus::quarter_circle(2.0, 1024).unwrap();
        assert_abs_diff_eq!(qc.mass(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(qc.second_moment(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn density_rejects_negative_values() {
        let err = MeasureRPlus::make_density(|_| -1.0, (0.0, Some(1.0)), 64).unwrap_err();
        assert!(matches!(err, Error::NegativeDensity { .. }));
    }

    #[test]
    fn density_rejects_non_integrable_input() {
        let err = MeasureRPlus::make_density(|x| 1.0 / (1.0 + x), (0.0, None), 256).unwrap_err();
        assert!(matches!(err, Error::NonIntegrable { .. }));
    }

    #[test]
    fn lambda_bounds_two_atoms() {
        // lambda1^2 = 1/(0.5 (1 + 1/4)) = 8/5, lambda2^2 = (1+4)/2 = 5/2.
        let lb = lambda_bounds(&half_half());
        assert_relative_eq!(lb.lambda1, (8.0f64 / 5.0).sqrt(), max_relative = 1e-14);
        assert_relative_eq!(lb.lambda2, (5.0f64 / 2.0).sqrt(), max_relative = 1e-14);
        assert!(!lb.dirac);
        assert!(lb.lambda1 < lb.lambda2);
    }

    #[test]
    fn lambda_bounds_quarter_circle_inner_radius_vanishes() {
        // int u^-2 dmu diverges at the origin (density is positive there):
        // the adaptive oracle blows up as the lower cutoff shrinks.
        let lower_a = adaptive_simpson(|x| quarter_circle_density(x) / (x * x), 1e-4, 2.0, 1e-10);
        let lower_b = adaptive_simpson(|x| quarter_circle_density(x) / (x * x), 1e-6, 2.0, 1e-10);
        assert!(lower_b > 50.0 * lower_a.min(lower_b) / 50.0 && lower_b > 2.0 * lower_a);

        let qc = MeasureRPlus::quarter_circle(2.0, 1024).unwrap();
        let lb = lambda_bounds(&qc);
        assert_eq!(lb.lambda1, 0.0);
        assert_relative_eq!(lb.lambda2, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn lambda_bounds_origin_atom_forces_zero() {
        let m = MeasureRPlus::make_atomic(&[(0.0, 0.3), (2.0, 0.7)]).unwrap();
        assert_eq!(lambda_bounds(&m).lambda1, 0.0);
    }

    #[test]
    fn lambda_bounds_dirac_flagged() {
        let m = MeasureRPlus::make_atomic(&[(1.5, 1.0)]).unwrap();
        let lb = lambda_bounds(&m);
        assert!(lb.dirac);
        assert_eq!(lb.lambda1, lb.lambda2);
    }

    #[test]
    fn symmetrize_dirac() {
        let m = MeasureRPlus::make_atomic(&[(1.0, 1.0)]).unwrap();
        let sym = m.symmetrize();
        assert_eq!(sym.atoms(), vec![(-1.0, 0.5), (1.0, 0.5)]);
    }

    #[test]
    fn symmetrize_kills_odd_and_keeps_even_kernels() {
        let m = half_half();
        let sym = m.symmetrize();
        assert_eq!(sym.integrate(|x| x), 0.0);
        assert_eq!(sym.integrate(|x| x.powi(3)), 0.0);
        assert_abs_diff_eq!(sym.integrate(|x| x * x), m.second_moment(), epsilon = 1e-15);
        let qc = MeasureRPlus::quarter_circle(2.0, 256).unwrap();
        let sqc = qc.symmetrize();
        for k in [0u32, 2, 4, 6] {
            let half = qc.integrate(|u| u.powi(k as i32));
            let full = sqc.integrate(|x| x.powi(k as i32));
            assert_relative_eq!(half, full, max_relative = 1e-14);
        }
    }

    #[test]
    fn pushforward_square_moves_atoms() {
        let d2 = MeasureRPlus::make_atomic(&[(2.0, 1.0)]).unwrap();
        assert_eq!(d2.pushforward_square().support(), &[(4.0, 1.0)]);
        let hh = half_half().pushforward_square();
        assert_eq!(hh.support(), &[(1.0, 0.5), (4.0, 0.5)]);
    }

    #[test]
    fn pushforward_square_first_moment_is_second_moment() {
        let qc = MeasureRPlus::quarter_circle(2.0, 1024).unwrap();
        let sq = qc.pushforward_square();
        assert_abs_diff_eq!(sq.first_moment(), qc.second_moment(), epsilon = 1e-14);
        assert_abs_diff_eq!(sq.first_moment(), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn is_dirac_cases() {
        assert!(MeasureRPlus::make_atomic(&[(1.0, 1.0)]).unwrap().is_dirac());
        assert!(!half_half().is_dirac());
        assert!(!MeasureRPlus::quarter_circle(2.0, 256).unwrap().is_dirac());
        assert!(MeasureRPlus::make_atomic(&[(0.0, 1.0)]).unwrap().is_dirac());
    }

    #[test]
    fn empirical_equal_weights_and_origin_fold() {
        let m = MeasureRPlus::make_empirical(&[2.0, 0.0, 1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(m.zero_mass(), 0.25, epsilon = 1e-15);
        assert_eq!(m.support().len(), 2);
        assert_abs_diff_eq!(m.mass(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.support()[0].1, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn quantile_steps_through_atoms() {
        let m = half_half();
        assert_eq!(m.quantile(0.25), 1.0);
        assert_eq!(m.quantile(0.75), 2.0);
        let z = MeasureRPlus::make_atomic(&[(0.0, 0.3), (2.0, 0.7)]).unwrap();
        assert_eq!(z.quantile(0.2), 0.0);
        assert_eq!(z.quantile(0.9), 2.0);
    }

    #[test]
    fn marchenko_pastur_moments() {
        // MP(1) moments are the Catalan numbers: m1 = 1, m2 = 2.
        let mp = MeasureRPlus::marchenko_pastur(1.0, 1024).unwrap();
        assert_abs_diff_eq!(mp.mass(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(mp.first_moment(), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(mp.second_moment(), 2.0, epsilon = 1e-10);
        // rate > 1 puts the deficit at the origin; the mean stays 1 and
        // the second moment is 1 + rate.
        let mp2 = MeasureRPlus::marchenko_pastur(2.0, 1024).unwrap();
        assert_abs_diff_eq!(mp2.zero_mass(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(mp2.mass(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(mp2.first_moment(), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(mp2.second_moment(), 3.0, epsilon = 1e-9);
    }

    #[test]
    fn uniform_density_moments() {
        let u = MeasureRPlus::uniform(1.0, 2.0, 256).unwrap();
        assert_abs_diff_eq!(u.mass(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(u.first_moment(), 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(u.second_moment(), 7.0 / 3.0, epsilon = 1e-12);
        let lb = lambda_bounds(&u);
        assert_relative_eq!(lb.lambda1, 2.0f64.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(lb.lambda2, (7.0f64 / 3.0).sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn table_density_matches_piecewise_linear_oracle() {
        // Triangle density on (0, 2): height 1 at x = 1.
        let (m, _) = MeasureRPlus::table(&[0.0, 1.0, 2.0], &[0.0, 1.0, 0.0], 16).unwrap();
        assert_abs_diff_eq!(m.mass(), 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(m.first_moment(), 1.0, epsilon = 1e-13);
        // Second moment of the triangle: int x^2 tri(x) = 7/6 - ... compute by oracle.
        let oracle = adaptive_simpson(
            |x| x * x * if x < 1.0 { x } else { 2.0 - x },
            0.0,
            2.0,
            1e-12,
        );
        assert_abs_diff_eq!(m.second_moment(), oracle, epsilon = 1e-12);
    }

    #[test]
    fn with_zero_atom_rescales() {
        let (m, _) = MeasureRPlus::make_density(quarter_circle_density, (0.0, Some(2.0)), 128).unwrap();
        let m = m.with_zero_atom(0.25).unwrap();
        assert_abs_diff_eq!(m.zero_mass(), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(m.mass(), 1.0, epsilon = 1e-12);
    }
}
