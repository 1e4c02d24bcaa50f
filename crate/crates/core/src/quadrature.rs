//! Gauss–Legendre rules, cached per degree, and deterministic summation.

use std::collections::HashMap;
use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex, OnceLock};

use gauss_quad::hermite::GaussHermite;
use gauss_quad::legendre::GaussLegendre;

/// Nodes and weights of an `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// sorted by node.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped affinely to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (c + h * x, h * w))
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let terms: Vec<f64> = self.mapped(a, b).map(|(x, w)| w * f(x)).collect();
        pairwise_sum(&terms)
    }
}

/// Cached `n`-point rule. Panics on `n = 0`.
pub fn gauss_legendre(n: usize) -> Arc<Rule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Rule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("quadrature cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let gl = GaussLegendre::new(NonZeroUsize::new(n).expect("rule needs at least one node"));
            let mut pairs: Vec<(f64, f64)> = gl.as_node_weight_pairs().to_vec();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            Arc::new(Rule {
                nodes: pairs.iter().map(|p| p.0).collect(),
                weights: pairs.iter().map(|p| p.1).collect(),
            })
        })
        .clone()
}

/// Pairwise (cascade) summation; the result depends only on the input order.
/// `n`-point Gauss–Hermite rule for the weight `exp(-x^2)` on the line.
pub fn gauss_hermite(n: usize) -> Rule {
    let n = NonZeroUsize::new(n).expect("rule needs at least one node");
    let mut pairs: Vec<(f64, f64)> = GaussHermite::new(n).as_node_weight_pairs().to_vec();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (nodes, weights) = pairs.into_iter().unzip();
    Rule { nodes, weights }
}

/// `n`-point rule on `[-1, 1]` for integrands that vanish to infinite order
/// at both ends: the trapezoid rule in `t` after `u = tanh t`, on
/// `t in [-T, T]` with `T = 1.25 + n / 24`.
pub fn tanh_rule(n: usize) -> Rule {
    assert!(n >= 2, "tanh rule needs at least two nodes");
    let t_max = (1.25 + n as f64 / 24.0).min(3.0);
    let h = 2.0 * t_max / (n - 1) as f64;
    let (nodes, weights) = (0..n)
        .map(|k| {
            let t = -t_max + k as f64 * h;
            (t.tanh(), h / t.cosh().powi(2))
        })
        .unzip();
    Rule { nodes, weights }
}

pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Log-spaced points from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Slope of `log y` against `log x`.
pub fn fit_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    fit_slope(&lx, &ly)
}
