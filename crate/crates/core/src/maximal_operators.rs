//! The Hardy–Littlewood maximal operator in `x`, the kinetic maximal
//! operators over `B^kin_r`, the fractional integral `I_1` and pointwise
//! domination of the kernel operators (`d = 1`).

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{KineticError, Result};
use crate::field_calculus::analytic::PhaseField;
use crate::kernels::{support_constant, Frame, KernelId, KernelKind};
use crate::kinetic_group::{kinetic_ball_volume, Dimension, Point};
use crate::quadrature::{fit_log_slope, gauss_legendre, log_space};
use crate::report::{Check, VerificationReport};

/// Discretization of `sup_{r > 0}` and of the ball and `I_1` integrals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaximalConfig {
    /// Increasing radii over which the sup is taken.
    pub radii: Vec<f64>,
    /// Gauss–Legendre nodes per axis of a ball or face.
    pub ball_nodes: usize,
    /// `I_1` integrates over `rho_box(m) <= truncation`.
    pub truncation: f64,
    /// Dyadic radial shells of `I_1` below the truncation.
    pub shells: usize,
    /// Gauss–Legendre nodes per radial shell.
    pub shell_nodes: usize,
    /// Optional decay hint: `|f|` is negligible outside `[-L, L]^3`. Ball
    /// averages then integrate over the ball's image in that window with
    /// composite rules of panel width `panel_width`.
    pub window: Option<f64>,
    pub panel_width: f64,
}

impl Default for MaximalConfig {
    fn default() -> Self {
        Self {
            radii: log_space(1.0 / 16.0, 16.0, 8 * 8 + 1),
            ball_nodes: 12,
            truncation: 16.0,
            shells: 16,
            shell_nodes: 4,
            window: None,
            panel_width: 2.0,
        }
    }
}

impl MaximalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.radii.is_empty() {
            return Err(KineticError::Empty("radius grid"));
        }
        if self.radii.windows(2).any(|w| !(w[0] < w[1])) || !(self.radii[0] > 0.0) {
            return Err(KineticError::InvalidParameter("radii must be positive and increasing".into()));
        }
        if self.ball_nodes < 2 || self.shell_nodes < 1 || self.shells < 1 {
            return Err(KineticError::TooFewNodes {
                min: 2,
                got: self.ball_nodes.min(self.shell_nodes).min(self.shells),
            });
        }
        if !(self.truncation > 0.0) {
            return Err(KineticError::NonPositiveScale(self.truncation));
        }
        Ok(())
    }
}

/// `sup_r (2r)^{-1} int_{|u| < r} |f(t, x + u, v)| du`.
pub fn maximal_x<F: PhaseField + ?Sized>(f: &F, z: &Point, cfg: &MaximalConfig) -> f64 {
    let rule = gauss_legendre(cfg.ball_nodes);
    cfg.radii
        .iter()
        .map(|&r| {
            let avg = rule.integrate(-r, r, |u| {
                let mut p = *z;
                p.x[0] += u;
                f.value(&p).abs()
            });
            avg / (2.0 * r)
        })
        .fold(0.0, f64::max)
}

/// Average of `|f(z o m)|` over `m in B^kin_r` by a tensor rule on the box.
pub fn ball_average<F: PhaseField + ?Sized>(f: &F, z: &Point, r: f64, n: usize) -> f64 {
    let rule = gauss_legendre(n);
    let (r2, r3) = (r * r, r * r * r);
    let mut acc = 0.0;
    for (s, ws) in rule.mapped(-r2, r2) {
        for (y, wy) in rule.mapped(-r3, r3) {
            for (w, ww) in rule.mapped(-r, r) {
                acc += ws * wy * ww * f.value(&z.compose(&Point::scalar(s, y, w))).abs();
            }
        }
    }
    acc / ball_volume(r)
}

fn ball_volume(r: f64) -> f64 {
    kinetic_ball_volume(r, Dimension::ONE).expect("radius is positive")
}

/// Composite rule on `[a, b]` with panels no wider than `width`.
fn panels(a: f64, b: f64, width: f64, n: usize) -> Vec<(f64, f64)> {
    if !(b > a) {
        return Vec::new();
    }
    let k = ((b - a) / width).ceil().max(1.0) as usize;
    let h = (b - a) / k as f64;
    let rule = gauss_legendre(n);
    (0..k)
        .flat_map(|i| rule.mapped(a + i as f64 * h, a + (i + 1) as f64 * h).collect::<Vec<_>>())
        .collect()
}

/// Ball average over the part of `z o B^kin_r` inside `[-L, L]^3`, in the
/// coordinates `zeta = z o m` (unit Jacobian): `zeta_t` and `zeta_v` range
/// over intervals, `zeta_x` over `x + (zeta_t - t) v + (-r^3, r^3)`.
pub fn windowed_ball_average<F: PhaseField + ?Sized>(
    f: &F,
    z: &Point,
    r: f64,
    window: f64,
    panel_width: f64,
    n: usize,
) -> f64 {
    let (t, x, v) = (z.t, z.x[0], z.v[0]);
    let (r2, r3) = (r * r, r * r * r);
    let ts = panels((t - r2).max(-window), (t + r2).min(window), panel_width, n);
    let vs = panels((v - r).max(-window), (v + r).min(window), panel_width, n);
    let mut acc = 0.0;
    for &(zt, wt) in &ts {
        let c = x + (zt - t) * v;
        for (zx, wx) in panels((c - r3).max(-window), (c + r3).min(window), panel_width, n) {
            for &(zv, wv) in &vs {
                acc += wt * wx * wv * f.value(&Point::scalar(zt, zx, zv)).abs();
            }
        }
    }
    acc / ball_volume(r)
}

/// Ball averages at every configured radius.
fn ball_averages<F: PhaseField + ?Sized>(f: &F, z: &Point, cfg: &MaximalConfig) -> Vec<f64> {
    cfg.radii
        .iter()
        .map(|&r| match cfg.window {
            Some(l) => windowed_ball_average(f, z, r, l, cfg.panel_width, cfg.ball_nodes),
            None => ball_average(f, z, r, cfg.ball_nodes),
        })
        .collect()
}

/// `sup_r` of the kinetic ball average of `|f|`.
pub fn maximal_kin<F: PhaseField + ?Sized>(f: &F, z: &Point, cfg: &MaximalConfig) -> f64 {
    ball_averages(f, z, cfg).into_iter().fold(0.0, f64::max)
}

/// `sup_r r` times the kinetic ball average of `|f|`.
pub fn maximal_kin1<F: PhaseField + ?Sized>(f: &F, z: &Point, cfg: &MaximalConfig) -> f64 {
    ball_averages(f, z, cfg)
        .into_iter()
        .zip(&cfg.radii)
        .map(|(a, r)| a * r)
        .fold(0.0, f64::max)
}

/// Faces of the unit box `rho_box = 1` as `(axis, sign, weight)`: under
/// `m = delta_r theta`, `dm = r^{Q-1} dr dsigma` with `dsigma` equal to the
/// homogeneity degree of the normal axis times the face area element.
const FACES: [(usize, f64, f64); 6] = [
    (0, 1.0, 2.0),
    (0, -1.0, 2.0),
    (1, 1.0, 3.0),
    (1, -1.0, 3.0),
    (2, 1.0, 1.0),
    (2, -1.0, 1.0),
];

/// `int_{rho_box(m) < R} |f(z o m)| rho_box(m)^{-(Q-1)} dm` in polar form
/// `int_0^R int_{dB} |f(z o delta_r theta)| dsigma dr`: the weight cancels
/// the Jacobian, each dyadic shell `[2^{-k-1} R, 2^{-k} R]` gets its own
/// radial rule and the innermost ball is `|f(z)| sigma(dB) 2^{-K} R`.
pub fn fractional_integral_i1<F: PhaseField + ?Sized>(f: &F, z: &Point, cfg: &MaximalConfig) -> f64 {
    let face = gauss_legendre(cfg.ball_nodes);
    let radial = gauss_legendre(cfg.shell_nodes);
    let sphere = |r: f64| -> f64 {
        let mut acc = 0.0;
        for &(axis, sign, weight) in &FACES {
            for (p, wp) in face.mapped(-1.0, 1.0) {
                for (q, wq) in face.mapped(-1.0, 1.0) {
                    let unit = match axis {
                        0 => [sign, p, q],
                        1 => [p, sign, q],
                        _ => [p, q, sign],
                    };
                    let m = Point::scalar(r * r * unit[0], r * r * r * unit[1], r * unit[2]);
                    acc += weight * wp * wq * f.value(&z.compose(&m)).abs();
                }
            }
        }
        acc
    };
    let mut total = 0.0;
    let mut hi = cfg.truncation;
    for _ in 0..cfg.shells {
        let lo = hi / 2.0;
        total += radial.integrate(lo, hi, sphere);
        hi = lo;
    }
    // sigma(dB) = Q |B_1| = 48
    total + f.value(z).abs() * 48.0 * hi
}

/// Pointwise domination constants for one kernel family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominationRow {
    pub kind: KernelKind,
    pub scale: f64,
    /// `sup_z |T_{J_r} h(z)| / M(|h|)(z)` with `M = M_kin`, or `M_{kin,1}`
    /// for `Ktilde`.
    pub value_constant: f64,
    /// `sup_z r^3 |T_{d_y J_r} h(z)| / M(|h|)(z)`.
    pub gradient_constant: f64,
    /// Bound on `value_constant` from the measured support and size.
    pub value_bound: f64,
    pub gradient_bound: f64,
}

/// `T_{J_r} h(z)` and `T_{d_y J_r} h(z)` on kernel support nodes.
fn kernel_pair<F: PhaseField + ?Sized>(id: &KernelId, h: &F, z: &Point, n: usize) -> Result<(f64, f64)> {
    let r = id.scale();
    let frame = Frame::new(r);
    let mut val = 0.0;
    let mut grad = 0.0;
    for nd in crate::kernels::support_nodes(r, n)? {
        let hv = h.value(&z.compose(&Point::scalar(nd.s, nd.y, nd.w)));
        val += nd.weight * frame.value(id.kind, nd.s, nd.y, nd.w) * hv;
        grad += nd.weight * frame.dy(id.kind, nd.s, nd.y, nd.w) * hv;
    }
    Ok((val, grad))
}

/// Measures the domination constants of `T_{Kvec_r}`, `T_{Kvecpi_r}`
/// (against `M_kin`) and `T_{Ktilde_r}` (against `M_{kin,1}`) at the
/// co-scaled points `delta_r z0`, and compares them with the bound
/// `8 c^Q sup|J_1|` (`8 c^{Q-1} sup|Ktilde_1|`) implied by the support
/// constant `c`.
pub fn domination_check<F: PhaseField + ?Sized>(
    h: &F,
    base_points: &[Point],
    scales: &[f64],
    kernel_nodes: usize,
    cfg: &MaximalConfig,
) -> Result<(VerificationReport, Vec<DominationRow>)> {
    cfg.validate()?;
    let mut report = VerificationReport::new("domination");
    let mut rows = Vec::new();
    if base_points.is_empty() {
        return Ok((report, rows));
    }
    for kind in [KernelKind::Vec, KernelKind::VecPi, KernelKind::Tilde] {
        let sup = support_constant(&KernelId::new(kind, 1.0)?, 24)?;
        let c = sup.support_constant;
        let tilde = kind == KernelKind::Tilde;
        let q = if tilde { 5 } else { 6 };
        let value_bound = 8.0 * c.powi(q) * sup.size_constant;
        let gradient_bound = 8.0 * c.powi(q) * sup.gradient_constant;
        for &r in scales {
            if c * r > *cfg.radii.last().expect("validated") {
                return Err(KineticError::InvalidParameter(format!(
                    "radius grid must reach {} for scale {r}",
                    c * r
                )));
            }
            let id = KernelId::new(kind, r)?;
            let ratios = base_points
                .par_iter()
                .map(|z0| {
                    let z = z0.dilate(r)?;
                    let (val, grad) = kernel_pair(&id, h, &z, kernel_nodes)?;
                    let m = if tilde { maximal_kin1(h, &z, cfg) } else { maximal_kin(h, &z, cfg) };
                    Ok(if m == 0.0 {
                        None
                    } else {
                        Some((val.abs() / m, r.powi(3) * grad.abs() / m))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let (vc, gc) = ratios
                .into_iter()
                .flatten()
                .fold((0.0f64, 0.0f64), |(a, b), (x, y)| (a.max(x), b.max(y)));
            let params = format!("r={r}, points={}", base_points.len());
            let label = kind.name();
            report.push(Check::at_most(&format!("domination.{label}"), &params, vc, value_bound, 0.0));
            report.push(Check::at_most(&format!("domination.{label}.gradient"), &params, gc, gradient_bound, 0.0));
            rows.push(DominationRow {
                kind,
                scale: r,
                value_constant: vc,
                gradient_constant: gc,
                value_bound,
                gradient_bound,
            });
        }
    }
    Ok((report, rows))
}

/// `1` for `x > 0`, `0` otherwise. Invariant under kinetic dilations.
pub fn x_step(z: &Point) -> f64 {
    if z.x[0] > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Log-log slope of `|T_{d_y J_r} H(delta_r z0)|` in `r` for the
/// dilation-invariant step `H = x_step`; the gradient bound predicts `-3`.
pub fn gradient_scaling_slope(kind: KernelKind, z0: &Point, scales: &[f64], kernel_nodes: usize) -> Result<f64> {
    let values = scales
        .iter()
        .map(|&r| {
            let z = z0.dilate(r)?;
            kernel_pair(&KernelId::new(kind, r)?, &x_step, &z, kernel_nodes).map(|(_, g)| g.abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(fit_log_slope(scales, &values))
}

/// Measured `sup_z M_{kin,1} f(z) / I_1 f(z)`; with the truncation at least
/// the largest radius, `rho <= r` on `B_r` gives the bound `1 / |B_1| = 1/8`.
pub fn kin1_over_i1<F: PhaseField + ?Sized>(f: &F, samples: &[Point], cfg: &MaximalConfig) -> f64 {
    samples
        .par_iter()
        .map(|z| {
            let i1 = fractional_integral_i1(f, z, cfg);
            if i1 == 0.0 {
                0.0
            } else {
                maximal_kin1(f, z, cfg) / i1
            }
        })
        .reduce(|| 0.0, f64::max)
}
