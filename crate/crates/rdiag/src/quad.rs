//! Gauss-Legendre quadrature rules and graded composite rules.
//!
//! Every measure in this crate is ultimately a weighted point set, so the
//! only quadrature machinery needed is (a) the classical Gauss-Legendre
//! nodes/weights on a panel and (b) a composite rule whose panels shrink
//! geometrically toward endpoints that carry integrable singularities or
//! that must be resolved down to very small scales (Cauchy kernels at
//! small imaginary part probe the measure near the origin).

/// Gauss-Legendre rule on the reference interval [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes and weights by Newton iteration on the Legendre polynomial.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "quadrature rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, accurate enough for Newton from any n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
            let (_, d) = legendre_with_derivative(n, 0.0);
            weights[n / 2] = 2.0 / (d * d);
        }
        GaussLegendre { nodes, weights }
    }

    /// Rule mapped onto the panel [a, b], pushed into `out` as (node, weight).
    pub fn extend_mapped(&self, a: f64, b: f64, out: &mut Vec<(f64, f64)>) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            out.push((mid + half * x, half * w));
        }
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Panel breakpoints for [a, b] graded geometrically toward one or both ends.
///
/// `levels_lo`/`levels_hi` count extra panels stacked toward `a`/`b`; each
/// level shrinks by `ratio`. Zero levels on both sides yields a single panel.
pub fn graded_breakpoints(
    a: f64,
    b: f64,
    levels_lo: usize,
    levels_hi: usize,
    ratio: f64,
) -> Vec<f64> {
    assert!(b > a && ratio > 0.0 && ratio < 1.0);
    let mid = 0.5 * (a + b);
    let mut breaks = Vec::with_capacity(levels_lo + levels_hi + 2);
    breaks.push(a);
    let mut lo: Vec<f64> = (1..=levels_lo)
        .map(|j| a + (mid - a) * ratio.powi(j as i32))
        .collect();
    lo.reverse();
    breaks.extend(lo);
    breaks.push(mid);
    breaks.extend((1..=levels_hi).map(|j| b - (b - mid) * ratio.powi(j as i32)));
    breaks.push(b);
    breaks
}

/// Composite Gauss-Legendre rule over consecutive panels of `breaks`.
pub fn composite_rule(breaks: &[f64], nodes_per_panel: usize) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(nodes_per_panel);
    let mut out = Vec::with_capacity(nodes_per_panel * (breaks.len() - 1));
    for pair in breaks.windows(2) {
        rule.extend_mapped(pair[0], pair[1], &mut out);
    }
    out
}
