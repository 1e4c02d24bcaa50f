//! The bump `psi` and the four kinetic kernels.
//!
//! With `a = s / r^2` and `b = A_a(r)^{-1} (y, w)`:
//!
//! ```text
//! K_tau      =  2^d tau^{-Q} psi(a, b)
//! Ktilde_r   = -2^{d+1} s r^{-Q-1} psi(a, b)
//! Kvec_r     = -2^d r^{-Q} psi(a, b) [F_a(r) b]
//! Kvecpi_r   =  2^{d+1} s r^{-Q-1} [grad_b psi(a, b)]^T (A_a(r)^{-1})_{., 2}
//! ```
//!
//! Evaluation is generic in `d`. Support quadrature, norms and the
//! `y`-derivative are implemented for `d = 1`.

use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{KineticError, Result};
use crate::kinetic_group::{Dimension, PhasePoint, Point};
use crate::quadrature::{gauss_legendre, pairwise_sum, Rule};
use crate::trajectories::{
    forcing, mat_a_inv_unchecked, mat_a_unchecked, BlockMatrix, ForcingValues,
};

/// `q(u) = exp(-1 / (1 - u))` for `u < 1`, so that `q(|x|^2)` is the standard
/// smooth profile `exp(-1 / (1 - |x|^2))`.
#[inline]
fn q(u: f64) -> f64 {
    if u < 1.0 {
        (-1.0 / (1.0 - u)).exp()
    } else {
        0.0
    }
}

/// `(q, q', q'')`.
#[inline]
fn q_derivs(u: f64) -> (f64, f64, f64) {
    if u < 1.0 {
        let e = 1.0 / (1.0 - u);
        let v = (-e).exp();
        let e2 = e * e;
        (v, -v * e2, v * e2 * (e2 - 2.0 * e))
    } else {
        (0.0, 0.0, 0.0)
    }
}

/// The profile `exp(-1 / (1 - u^2))` on `|u| < 1`.
pub fn profile(u: f64) -> f64 {
    q(u * u)
}

/// Normalized product bump on `(-2, -1) x B_1 x B_1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BumpSpec {
    pub d: usize,
    /// `Z` with `psi = Z^{-1} profile(2a + 3) profile(|b1|) profile(|b2|)`.
    pub normalization: f64,
    pub profile: &'static str,
}

impl BumpSpec {
    pub fn standard(d: usize) -> Self {
        Self {
            d,
            normalization: normalization(d),
            profile: "exp(-1/(1-u^2)) on |u|<1; time factor profile(2a+3)",
        }
    }
}

/// `int_{B_1 in R^d} profile(|b|) db` from a high-order radial rule.
fn ball_profile_integral(d: usize) -> f64 {
    let rule = gauss_legendre(400);
    let radial = rule.integrate(0.0, 1.0, |rho| rho.powi(d as i32 - 1) * profile(rho));
    d as f64 * crate::kinetic_group::unit_ball_volume(d) * radial
}

fn normalization(d: usize) -> f64 {
    static CACHE: [OnceLock<f64>; 8] = [const { OnceLock::new() }; 8];
    let compute = || {
        let ball = ball_profile_integral(d);
        // time factor: int profile(2a + 3) da = (1/2) int_{-1}^{1} profile
        0.5 * ball_profile_integral(1) * ball * ball
    };
    match CACHE.get(d) {
        Some(cell) => *cell.get_or_init(compute),
        None => compute(),
    }
}

#[inline]
fn inv_z(d: usize) -> f64 {
    static CACHE: [OnceLock<f64>; 8] = [const { OnceLock::new() }; 8];
    match CACHE.get(d) {
        Some(cell) => *cell.get_or_init(|| 1.0 / normalization(d)),
        None => 1.0 / normalization(d),
    }
}

#[inline]
fn norm_sq<const D: usize>(b: &[f64; D]) -> f64 {
    b.iter().map(|x| x * x).sum()
}

/// `psi(a, b1, b2)`.
pub fn bump_eval<const D: usize>(a: f64, b1: &[f64; D], b2: &[f64; D]) -> f64 {
    let ta = 2.0 * a + 3.0;
    let t = q(ta * ta);
    if t == 0.0 {
        return 0.0;
    }
    inv_z(D) * t * q(norm_sq(b1)) * q(norm_sq(b2))
}

/// Gradient of `psi` in `(b1, b2)`.
pub fn bump_grad<const D: usize>(a: f64, b1: &[f64; D], b2: &[f64; D]) -> ([f64; D], [f64; D]) {
    let ta = 2.0 * a + 3.0;
    let t = q(ta * ta);
    let mut g1 = [0.0; D];
    let mut g2 = [0.0; D];
    if t == 0.0 {
        return (g1, g2);
    }
    let (q1, dq1, _) = q_derivs(norm_sq(b1));
    let (q2, dq2, _) = q_derivs(norm_sq(b2));
    let c = inv_z(D) * t;
    for k in 0..D {
        g1[k] = c * 2.0 * dq1 * b1[k] * q2;
        g2[k] = c * 2.0 * dq2 * b2[k] * q1;
    }
    (g1, g2)
}

/// Value, gradient and Hessian of `psi` in `(b1, b2)` for `d = 1`:
/// `(psi, [d1, d2], [[h11, h12], [h12, h22]])`.
pub fn bump_hessian_1d(a: f64, b1: f64, b2: f64) -> (f64, [f64; 2], [[f64; 2]; 2]) {
    let ta = 2.0 * a + 3.0;
    let t = q(ta * ta);
    if t == 0.0 {
        return (0.0, [0.0; 2], [[0.0; 2]; 2]);
    }
    let (q1, dq1, ddq1) = q_derivs(b1 * b1);
    let (q2, dq2, ddq2) = q_derivs(b2 * b2);
    let c = inv_z(1) * t;
    let p1 = 2.0 * dq1 * b1;
    let p2 = 2.0 * dq2 * b2;
    let h11 = c * (2.0 * dq1 + 4.0 * b1 * b1 * ddq1) * q2;
    let h22 = c * (2.0 * dq2 + 4.0 * b2 * b2 * ddq2) * q1;
    let h12 = c * p1 * p2;
    (c * q1 * q2, [c * p1 * q2, c * q1 * p2], [[h11, h12], [h12, h22]])
}

/// The four kernel families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum KernelKind {
    Mollifier,
    Tilde,
    Vec,
    VecPi,
}

impl KernelKind {
    pub const ALL: [KernelKind; 4] = [Self::Mollifier, Self::Tilde, Self::Vec, Self::VecPi];

    pub fn is_vector(self) -> bool {
        matches!(self, Self::Vec | Self::VecPi)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Mollifier => "K",
            Self::Tilde => "Ktilde",
            Self::Vec => "Kvec",
            Self::VecPi => "Kvecpi",
        }
    }

    /// Exponent `e` with `sup |J_r| ~ r^{-Q + e}`.
    pub fn size_shift(self) -> i32 {
        match self {
            Self::Tilde => 1,
            _ => 0,
        }
    }
}

/// A kernel family member at a fixed positive scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelId {
    pub kind: KernelKind,
    scale: f64,
}

impl KernelId {
    pub fn new(kind: KernelKind, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(KineticError::NonPositiveScale(scale));
        }
        Ok(Self { kind, scale })
    }

    pub fn mollifier(tau: f64) -> Result<Self> {
        Self::new(KernelKind::Mollifier, tau)
    }

    pub fn tilde(r: f64) -> Result<Self> {
        Self::new(KernelKind::Tilde, r)
    }

    pub fn vec(r: f64) -> Result<Self> {
        Self::new(KernelKind::Vec, r)
    }

    pub fn vec_pi(r: f64) -> Result<Self> {
        Self::new(KernelKind::VecPi, r)
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

/// Kernel value: scalar for `K`, `Ktilde`, a `d`-vector for the vector kernels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelValue<const D: usize> {
    Scalar(f64),
    Vector([f64; D]),
}

impl<const D: usize> KernelValue<D> {
    pub fn abs(&self) -> f64 {
        match self {
            Self::Scalar(x) => x.abs(),
            Self::Vector(v) => norm_sq(v).sqrt(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Scalar(x) => *x == 0.0,
            Self::Vector(v) => v.iter().all(|x| *x == 0.0),
        }
    }
}

/// Generic evaluation of any kernel at an offset `(s, y, w)`.
pub fn kernel_eval<const D: usize>(id: &KernelId, off: &PhasePoint<D>) -> KernelValue<D> {
    let zero = if id.kind.is_vector() {
        KernelValue::Vector([0.0; D])
    } else {
        KernelValue::Scalar(0.0)
    };
    let r = id.scale;
    let r2 = r * r;
    let a = off.t / r2;
    if !(a > -2.0 && a < -1.0) {
        return zero;
    }
    let fv = forcing(r).expect("scale is positive");
    let inv = mat_a_inv_unchecked(a, r, &fv);
    let (b1, b2) = inv.apply(&off.x, &off.v);
    let q_dim = Dimension::new(D).expect("D >= 1").qf();
    let two_d = 2f64.powi(D as i32);
    let rq = r.powf(-q_dim);
    match id.kind {
        KernelKind::Mollifier => KernelValue::Scalar(two_d * rq * bump_eval(a, &b1, &b2)),
        KernelKind::Tilde => {
            KernelValue::Scalar(-2.0 * two_d * off.t * rq / r * bump_eval(a, &b1, &b2))
        }
        KernelKind::Vec => {
            let psi = bump_eval(a, &b1, &b2);
            let (f1, f2) = fv.f.expect("r > 0");
            let mut out = [0.0; D];
            for k in 0..D {
                out[k] = -two_d * rq * psi * (f1 / a * b1[k] + f2 * b2[k]);
            }
            KernelValue::Vector(out)
        }
        KernelKind::VecPi => {
            let (g1, g2) = bump_grad(a, &b1, &b2);
            let mut out = [0.0; D];
            for k in 0..D {
                out[k] = 2.0 * two_d * off.t * rq / r * (g1[k] * inv.m12 + g2[k] * inv.m22);
            }
            KernelValue::Vector(out)
        }
    }
}

/// Scale-dependent data shared by every `d = 1` evaluation at one radius.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Frame {
    pub r: f64,
    pub fv: ForcingValues,
    /// `2 r^{-Q}`
    pub c0: f64,
    /// `4 r^{-Q-1}`
    pub c1: f64,
}

impl Frame {
    pub fn new(r: f64) -> Self {
        let rq = r.powi(-6);
        Self {
            r,
            fv: forcing(r).expect("scale is positive"),
            c0: 2.0 * rq,
            c1: 4.0 * rq / r,
        }
    }

    /// `a`, `A_a(r)^{-1}` and `b` at an offset; `None` off the time support.
    #[inline]
    fn local(&self, s: f64, y: f64, w: f64) -> Option<(f64, BlockMatrix, f64, f64)> {
        let a = s / (self.r * self.r);
        if !(a > -2.0 && a < -1.0) {
            return None;
        }
        let inv = mat_a_inv_unchecked(a, self.r, &self.fv);
        let (b1, b2) = inv.apply1(y, w);
        if b1.abs() >= 1.0 || b2.abs() >= 1.0 {
            return None;
        }
        Some((a, inv, b1, b2))
    }

    /// All four kernels at once: `(K, Ktilde, Kvec, Kvecpi)`.
    #[inline]
    pub fn all(&self, s: f64, y: f64, w: f64) -> [f64; 4] {
        let Some((a, inv, b1, b2)) = self.local(s, y, w) else {
            return [0.0; 4];
        };
        let ta = 2.0 * a + 3.0;
        let t = q(ta * ta);
        let (q1, dq1, _) = q_derivs(b1 * b1);
        let (q2, dq2, _) = q_derivs(b2 * b2);
        let c = inv_z(1) * t;
        let psi = c * q1 * q2;
        let d1 = c * 2.0 * dq1 * b1 * q2;
        let d2 = c * 2.0 * dq2 * b2 * q1;
        let (f1, f2) = self.fv.f.expect("r > 0");
        [
            self.c0 * psi,
            -self.c1 * s * psi,
            -self.c0 * psi * (f1 / a * b1 + f2 * b2),
            self.c1 * s * (d1 * inv.m12 + d2 * inv.m22),
        ]
    }

    #[inline]
    pub fn value(&self, kind: KernelKind, s: f64, y: f64, w: f64) -> f64 {
        let Some((a, inv, b1, b2)) = self.local(s, y, w) else {
            return 0.0;
        };
        match kind {
            KernelKind::Mollifier => self.c0 * bump_eval(a, &[b1], &[b2]),
            KernelKind::Tilde => -self.c1 * s * bump_eval(a, &[b1], &[b2]),
            KernelKind::Vec => {
                let (f1, f2) = self.fv.f.expect("r > 0");
                -self.c0 * bump_eval(a, &[b1], &[b2]) * (f1 / a * b1 + f2 * b2)
            }
            KernelKind::VecPi => {
                let (g1, g2) = bump_grad(a, &[b1], &[b2]);
                self.c1 * s * (g1[0] * inv.m12 + g2[0] * inv.m22)
            }
        }
    }

    /// Analytic `d/dy` of a kernel.
    #[inline]
    pub fn dy(&self, kind: KernelKind, s: f64, y: f64, w: f64) -> f64 {
        let Some((a, inv, b1, b2)) = self.local(s, y, w) else {
            return 0.0;
        };
        // db/dy is the first column of A^{-1}
        let (c1, c2) = (inv.m11, inv.m21);
        let (psi, g, h) = bump_hessian_1d(a, b1, b2);
        let dpsi = g[0] * c1 + g[1] * c2;
        match kind {
            KernelKind::Mollifier => self.c0 * dpsi,
            KernelKind::Tilde => -self.c1 * s * dpsi,
            KernelKind::Vec => {
                let (f1, f2) = self.fv.f.expect("r > 0");
                let (fa, fb) = (f1 / a, f2);
                -self.c0 * (dpsi * (fa * b1 + fb * b2) + psi * (fa * c1 + fb * c2))
            }
            KernelKind::VecPi => {
                let (e1, e2) = (inv.m12, inv.m22);
                let hc1 = h[0][0] * c1 + h[0][1] * c2;
                let hc2 = h[1][0] * c1 + h[1][1] * c2;
                self.c1 * s * (e1 * hc1 + e2 * hc2)
            }
        }
    }

    /// Exact `y`-interval of the support on the slice `(s, w)`.
    #[inline]
    pub fn y_interval(&self, s: f64, w: f64) -> Option<(f64, f64)> {
        let a = s / (self.r * self.r);
        let m = mat_a_unchecked(a, &self.fv);
        segment_image(&m, w)
    }

    /// Half-width of the `w`-range of the support on the slice `s`.
    #[inline]
    pub fn w_half_width(&self, s: f64) -> f64 {
        let a = s / (self.r * self.r);
        let m = mat_a_unchecked(a, &self.fv);
        m.m21.abs() + m.m22.abs()
    }
}

/// Image in `y` of `{b in [-1, 1]^2 : m21 b1 + m22 b2 = w}` under
/// `y = m11 b1 + m12 b2`.
fn segment_image(m: &BlockMatrix, w: f64) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut push = |b1: f64, b2: f64| {
        if b1.abs() <= 1.0 && b2.abs() <= 1.0 {
            let y = m.m11 * b1 + m.m12 * b2;
            lo = lo.min(y);
            hi = hi.max(y);
        }
    };
    for e in [-1.0, 1.0] {
        if m.m22 != 0.0 {
            push(e, (w - m.m21 * e) / m.m22);
        }
        if m.m21 != 0.0 {
            push((w - m.m22 * e) / m.m21, e);
        }
    }
    (hi > lo).then_some((lo, hi))
}

/// `d/dy` of a `d = 1` kernel at an offset.
pub fn kernel_dy(id: &KernelId, off: &Point) -> f64 {
    Frame::new(id.scale).dy(id.kind, off.t, off.x[0], off.v[0])
}

/// A quadrature node in offset space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportNode {
    pub s: f64,
    pub y: f64,
    pub w: f64,
    pub weight: f64,
}

/// Iterated Gauss–Legendre rule over the exact support of the scale-`r`
/// kernels (`d = 1`): `s` on `(-2r^2, -r^2)`, then `w` on the slice's range,
/// then `y` on the exact segment image. Every node lies inside the support.
pub fn support_nodes(r: f64, n: usize) -> Result<Vec<SupportNode>> {
    support_nodes_with(r, n, n, n)
}

pub fn support_nodes_with(r: f64, ns: usize, nw: usize, ny: usize) -> Result<Vec<SupportNode>> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(KineticError::NonPositiveScale(r));
    }
    let min = ns.min(nw).min(ny);
    if min < 2 {
        return Err(KineticError::TooFewNodes { min: 2, got: min });
    }
    let frame = Frame::new(r);
    let (rs, rw, ry) = (gauss_legendre(ns), gauss_legendre(nw), gauss_legendre(ny));
    let r2 = r * r;
    let mut out = Vec::with_capacity(ns * nw * ny);
    for (s, ws) in rs.mapped(-2.0 * r2, -r2) {
        let half = frame.w_half_width(s);
        for (w, ww) in rw.mapped(-half, half) {
            let Some((lo, hi)) = frame.y_interval(s, w) else {
                continue;
            };
            for (y, wy) in ry.mapped(lo, hi) {
                out.push(SupportNode {
                    s,
                    y,
                    w,
                    weight: ws * ww * wy,
                });
            }
        }
    }
    Ok(out)
}

/// Precomputed offsets and `weight * kernel value` for one kernel, so that
/// `T_J f(z) = sum_i c_i f(z o m_i)`.
#[derive(Debug, Clone)]
pub struct KernelQuadrature {
    pub id: KernelId,
    pub offsets: Vec<Point>,
    pub coeffs: Vec<f64>,
}

impl KernelQuadrature {
    pub fn new(id: KernelId, n: usize) -> Result<Self> {
        let frame = Frame::new(id.scale);
        let mut offsets = Vec::new();
        let mut coeffs = Vec::new();
        for nd in support_nodes(id.scale, n)? {
            let c = nd.weight * frame.value(id.kind, nd.s, nd.y, nd.w);
            if c != 0.0 {
                offsets.push(Point::scalar(nd.s, nd.y, nd.w));
                coeffs.push(c);
            }
        }
        Ok(Self {
            id,
            offsets,
            coeffs,
        })
    }

    /// Quadrature with the kernel replaced by its `y`-derivative.
    pub fn new_dy(id: KernelId, n: usize) -> Result<Self> {
        let frame = Frame::new(id.scale);
        let mut offsets = Vec::new();
        let mut coeffs = Vec::new();
        for nd in support_nodes(id.scale, n)? {
            let c = nd.weight * frame.dy(id.kind, nd.s, nd.y, nd.w);
            if c != 0.0 {
                offsets.push(Point::scalar(nd.s, nd.y, nd.w));
                coeffs.push(c);
            }
        }
        Ok(Self {
            id,
            offsets,
            coeffs,
        })
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// `sum_i c_i f(z o m_i)`.
    #[inline]
    pub fn apply_at(&self, z: &Point, f: impl Fn(&Point) -> f64) -> f64 {
        let mut acc = 0.0;
        for (m, c) in self.offsets.iter().zip(&self.coeffs) {
            acc += c * f(&z.compose(m));
        }
        acc
    }

    /// `int J`.
    pub fn mass(&self) -> f64 {
        pairwise_sum(&self.coeffs)
    }

    /// Largest `rho_box` of a node with nonzero coefficient.
    pub fn support_radius(&self) -> f64 {
        self.offsets.iter().map(|m| m.rho_box()).fold(0.0, f64::max)
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if theta >= 1.0 {
        Ok(())
    } else {
        Err(KineticError::InvalidExponent(theta))
    }
}

/// `int J` by support quadrature (`d = 1`). For the vector kernels this is
/// the single component.
pub fn kernel_mass(id: &KernelId, n: usize) -> Result<f64> {
    Ok(KernelQuadrature::new(*id, n)?.mass())
}

/// `||J||_theta` by support quadrature; `theta = INFINITY` gives the sup over
/// the nodes.
pub fn kernel_norm(id: &KernelId, theta: f64, n: usize) -> Result<f64> {
    check_theta(theta)?;
    let frame = Frame::new(id.scale);
    let nodes = support_nodes(id.scale, n)?;
    let vals = nodes.iter().map(|nd| frame.value(id.kind, nd.s, nd.y, nd.w).abs());
    if theta.is_infinite() {
        return Ok(vals.fold(0.0, f64::max));
    }
    let terms: Vec<f64> = nodes
        .iter()
        .zip(vals)
        .map(|(nd, v)| nd.weight * v.powf(theta))
        .collect();
    Ok(pairwise_sum(&terms).powf(1.0 / theta))
}

/// `||J(., . + h, .) - J||_theta` over the union of both supports.
pub fn kernel_x_difference_norm(id: &KernelId, h: f64, theta: f64, n: usize) -> Result<f64> {
    check_theta(theta)?;
    if h == 0.0 {
        return Ok(0.0);
    }
    let frame = Frame::new(id.scale);
    let r2 = id.scale * id.scale;
    let rule = gauss_legendre(n);
    let diff = |s: f64, y: f64, w: f64| {
        (frame.value(id.kind, s, y + h, w) - frame.value(id.kind, s, y, w)).abs()
    };
    let mut sup: f64 = 0.0;
    let mut terms = Vec::with_capacity(n * n * n * 2);
    for (s, ws) in rule.mapped(-2.0 * r2, -r2) {
        let half = frame.w_half_width(s);
        for (w, ww) in rule.mapped(-half, half) {
            let Some((lo, hi)) = frame.y_interval(s, w) else {
                continue;
            };
            // supports of J(. + h) and J are [lo - h, hi - h] and [lo, hi]
            let pieces: Vec<(f64, f64)> = if h.abs() >= hi - lo {
                vec![(lo - h, hi - h), (lo, hi)]
            } else {
                let (a, b) = ((lo - h).min(lo), (hi - h).max(hi));
                let mid = 0.5 * (a + b);
                vec![(a, mid), (mid, b)]
            };
            for (a, b) in pieces {
                for (y, wy) in rule.mapped(a, b) {
                    let v = diff(s, y, w);
                    sup = sup.max(v);
                    if theta.is_finite() {
                        terms.push(ws * ww * wy * v.powf(theta));
                    }
                }
            }
        }
    }
    if theta.is_infinite() {
        return Ok(sup);
    }
    Ok(pairwise_sum(&terms).powf(1.0 / theta))
}

/// Support and size constants of one kernel, measured on its quadrature nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupportReport {
    /// Smallest `C` with all nonzero nodes in `B^kin_{C r}`.
    pub support_constant: f64,
    /// `max |s| / r^2` over nonzero nodes.
    pub time_extent: f64,
    /// `sup |J| r^{Q - e}`, `e = 1` for `Ktilde` and 0 otherwise.
    pub size_constant: f64,
    /// `sup |d_y J| r^{Q + 3 - e}`.
    pub gradient_constant: f64,
    /// Max deviation between analytic and central-difference `d_y J`,
    /// relative to `sup |d_y J|`.
    pub gradient_fd_error: f64,
}

pub fn support_constant(id: &KernelId, n: usize) -> Result<SupportReport> {
    let r = id.scale;
    let frame = Frame::new(r);
    let e = id.kind.size_shift();
    let delta = 1e-5 * r * r * r;
    let mut rep = SupportReport {
        support_constant: 0.0,
        time_extent: 0.0,
        size_constant: 0.0,
        gradient_constant: 0.0,
        gradient_fd_error: 0.0,
    };
    let mut sup_grad: f64 = 0.0;
    let mut sup_dev: f64 = 0.0;
    for nd in support_nodes(r, n)? {
        let v = frame.value(id.kind, nd.s, nd.y, nd.w);
        if v == 0.0 {
            continue;
        }
        let p = Point::scalar(nd.s, nd.y, nd.w);
        rep.support_constant = rep.support_constant.max(p.rho_box() / r);
        rep.time_extent = rep.time_extent.max(nd.s.abs() / (r * r));
        rep.size_constant = rep.size_constant.max(v.abs());
        let g = frame.dy(id.kind, nd.s, nd.y, nd.w);
        sup_grad = sup_grad.max(g.abs());
        let fd = (frame.value(id.kind, nd.s, nd.y + delta, nd.w)
            - frame.value(id.kind, nd.s, nd.y - delta, nd.w))
            / (2.0 * delta);
        sup_dev = sup_dev.max((fd - g).abs());
    }
    rep.size_constant *= r.powi(6 - e);
    rep.gradient_constant = sup_grad * r.powi(9 - e);
    rep.gradient_fd_error = if sup_grad > 0.0 { sup_dev / sup_grad } else { 0.0 };
    Ok(rep)
}

/// Numeric `int_0^inf min{1, |h| r^{-3}} dr`, split at the knee
/// `r = |h|^{1/3}` and integrated in `log r` on each side.
pub fn min_envelope_integral(h: f64) -> f64 {
    let h = h.abs();
    if h == 0.0 {
        return 0.0;
    }
    let knee = h.cbrt();
    let rule: &Rule = &gauss_legendre(64);
    let f = |u: f64| {
        let r = u.exp();
        r * (h / (r * r * r)).min(1.0)
    };
    let inner = rule.integrate(knee.ln() - 40.0, knee.ln(), f);
    let outer = rule.integrate(knee.ln(), knee.ln() + 20.0, f);
    inner + outer
}
