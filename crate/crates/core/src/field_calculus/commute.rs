//! Both sides of `D_x^{1/3} T_J f = T_{D_y^{1/3} J} f` for `d = 1` kernels.
//!
//! The left side applies the zero-extension singular backend to `T_J f`
//! sampled on a grid. The right side integrates `f` against the kernel's
//! fractional `y`-derivative, evaluated pointwise from
//!
//! ```text
//! D g(y) = 2c int_R (g(y) - g(y - h)) |h|^{-4/3} dh
//! ```
//!
//! on every `(s, w)` slice, where `g = J(s, ., w)` is supported on the exact
//! segment image `[lo, hi]`.

use rayon::prelude::*;
use serde::Serialize;

use super::analytic::PhaseField;
use super::convolve::convolve_on_grid;
use super::fractional::{frac_dx, singular_constant, Boundary, FracBackend};
use super::grid::{lp_norm, GridField, GridSpec};
use crate::error::{KineticError, Result};
use crate::kernels::{Frame, KernelId, KernelKind, KernelQuadrature};
use crate::kinetic_group::Point;
use crate::quadrature::{gauss_legendre, tanh_rule};
use crate::report::{Check, VerificationReport};

/// Resolution of both sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CommuteConfig {
    /// Evaluation grid; `x` must be a fine axis wide enough for `T_J f` to
    /// decay at its ends.
    pub grid: GridSpec,
    /// Kernel nodes per axis for `T_J f` on the left side.
    pub left_nodes: usize,
    /// Tanh nodes on the `s` and `w` axes of the right side.
    pub slice_nodes: usize,
    /// Nodes for the inner singular integral defining `D_y J`.
    pub inner_nodes: usize,
    /// Gauss–Legendre nodes per unit-width `y` panel outside the support.
    pub panel_nodes: usize,
    /// How far beyond the support the `y`-integral extends.
    pub y_reach: f64,
}

impl Default for CommuteConfig {
    fn default() -> Self {
        Self {
            grid: GridSpec::new([1.0, 16.0, 2.0], [2, 256, 4]).expect("valid grid"),
            left_nodes: 16,
            slice_nodes: 12,
            inner_nodes: 24,
            panel_nodes: 6,
            y_reach: 32.0,
        }
    }
}

impl CommuteConfig {
    /// Twice the nodes on every axis, including the `x` grid.
    pub fn refined(&self) -> Self {
        let mut counts = self.grid.counts;
        counts[1] *= 2;
        Self {
            grid: GridSpec::new(self.grid.extents, counts).expect("valid grid"),
            left_nodes: 2 * self.left_nodes,
            slice_nodes: 2 * self.slice_nodes,
            inner_nodes: 2 * self.inner_nodes,
            panel_nodes: 2 * self.panel_nodes,
            y_reach: self.y_reach,
        }
    }
}

/// Both sides on the evaluation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CommuteReport {
    pub left: GridField,
    pub right: GridField,
    /// `||left - right||_2 / ||left||_2`
    pub relative_error: f64,
}

/// `D^{1/3}` in `y` of `g = J(s, ., w)` at `y`, with `supp g = [lo, hi]`.
fn frac_dy(g: impl Fn(f64) -> f64, lo: f64, hi: f64, y: f64, inner: usize) -> f64 {
    let two_c = 2.0 * singular_constant();
    if y > lo && y < hi {
        // h = u^3 removes the singularity on each side
        let gy = g(y);
        let gl = gauss_legendre(inner);
        let side = |dist: f64, sign: f64| {
            let u_max = dist.cbrt();
            3.0 * gl.integrate(0.0, u_max, |u| (gy - g(y - sign * u * u * u)) / (u * u))
                + 3.0 * gy / u_max
        };
        two_c * (side(y - lo, 1.0) + side(hi - y, -1.0))
    } else {
        // -2c int g(eta) |y - eta|^{-4/3} d eta with |y - eta| = e^u
        let (near, far, sign) = if y >= hi { (y - hi, y - lo, 1.0) } else { (lo - y, hi - y, -1.0) };
        let rule = tanh_rule(inner);
        // g vanishes faster than any power at its ends; below a distance of
        // (hi - lo) / 400 its values are under exp(-100)
        let a = near.max((hi - lo) / 400.0).ln();
        -two_c * rule.integrate(a, far.ln(), |u| g(y - sign * u.exp()) * (-u / 3.0).exp())
    }
}

/// Offsets and coefficients of `T_{D_y J}` on `(s, w, y)` nodes: tanh rules
/// on `s` and `w`, Gauss–Legendre on the support interval and on panels out
/// to `y_reach` beyond it, geometric near the edges and unit width further
/// out.
pub fn frac_kernel_quadrature(id: &KernelId, cfg: &CommuteConfig) -> Result<KernelQuadrature> {
    if cfg.slice_nodes < 2 || cfg.inner_nodes < 2 || cfg.panel_nodes < 2 {
        return Err(KineticError::TooFewNodes {
            min: 2,
            got: cfg.slice_nodes.min(cfg.inner_nodes).min(cfg.panel_nodes),
        });
    }
    let r = id.scale();
    let frame = Frame::new(r);
    let kind: KernelKind = id.kind;
    let rule = tanh_rule(cfg.slice_nodes);
    let inside = gauss_legendre(2 * cfg.panel_nodes);
    let panel = gauss_legendre(cfg.panel_nodes);
    let r2 = r * r;
    let slices: Vec<(f64, f64, f64)> = rule
        .mapped(-2.0 * r2, -r2)
        .flat_map(|(s, ws)| {
            let half = frame.w_half_width(s);
            rule.mapped(-half, half).map(move |(w, ww)| (s, w, ws * ww)).collect::<Vec<_>>()
        })
        .collect();
    let per_slice: Vec<Vec<(Point, f64)>> = slices
        .par_iter()
        .map(|&(s, w, wsw)| {
            let Some((lo, hi)) = frame.y_interval(s, w) else {
                return Vec::new();
            };
            let g = |y: f64| frame.value(kind, s, y, w);
            let mut ys: Vec<(f64, f64)> = inside.mapped(lo, hi).collect();
            // panel edges measured from the support ends
            let mut edges = vec![0.0];
            let mut step = (hi - lo) / 8.0;
            while *edges.last().expect("nonempty") < cfg.y_reach {
                let last = *edges.last().expect("nonempty");
                edges.push((last + step).min(cfg.y_reach));
                step = (2.0 * step).min(1.0);
            }
            for pair in edges.windows(2) {
                for (d, wd) in panel.mapped(pair[0], pair[1]) {
                    ys.push((hi + d, wd));
                    ys.push((lo - d, wd));
                }
            }
            ys.into_iter()
                .map(|(y, wy)| {
                    let c = wsw * wy * frac_dy(g, lo, hi, y, cfg.inner_nodes);
                    (Point::scalar(s, y, w), c)
                })
                .collect()
        })
        .collect();
    let (offsets, coeffs) = per_slice.into_iter().flatten().unzip();
    Ok(KernelQuadrature {
        id: *id,
        offsets,
        coeffs,
    })
}

/// Both sides of the commutation identity for `J = id` on `cfg.grid`.
pub fn commute_sides<F: PhaseField + ?Sized>(
    id: &KernelId,
    f: &F,
    cfg: &CommuteConfig,
) -> Result<CommuteReport> {
    let quad = KernelQuadrature::new(*id, cfg.left_nodes)?;
    let tj = convolve_on_grid(&quad, f, &cfg.grid);
    let left = frac_dx(&tj, 1.0 / 3.0, FracBackend::Singular(Boundary::Zero))?;
    let right = convolve_on_grid(&frac_kernel_quadrature(id, cfg)?, f, &cfg.grid);
    let norm = lp_norm(&left, 2.0)?;
    let relative_error = if norm == 0.0 {
        lp_norm(&right, 2.0)?
    } else {
        lp_norm(&left.sub(&right)?, 2.0)? / norm
    };
    Ok(CommuteReport {
        left,
        right,
        relative_error,
    })
}

/// The relative discrepancy at `cfg` and at the refined configuration.
pub fn commute_check<F: PhaseField + ?Sized>(
    id: &KernelId,
    f: &F,
    cfg: &CommuteConfig,
) -> Result<VerificationReport> {
    let name = format!("commute[{}]", id.kind.name());
    let coarse = commute_sides(id, f, cfg)?;
    let fine = commute_sides(id, f, &cfg.refined())?;
    let params = format!(
        "scale={}, nx={}, slice_nodes={}, inner_nodes={}",
        id.scale(),
        cfg.grid.counts[1],
        cfg.slice_nodes,
        cfg.inner_nodes
    );
    let mut report = VerificationReport::new(&name);
    report.push(Check::at_most(&name, &params, coarse.relative_error, 0.0, 1e-3));
    report.push(Check::holds(
        &format!("{name}.refinement"),
        "all node counts doubled",
        fine.relative_error < coarse.relative_error,
    ));
    report.observe("relative_error", coarse.relative_error);
    report.observe("relative_error_refined", fine.relative_error);
    Ok(report)
}
