//! The kinetic translation group on phase space `R^{1+2d}`.
//!
//! Points are triples `(t, x, v)` with `x, v` in `R^d`. The group law
//! `(t, x, v) o (s, y, w) = (t + s, x + y + s v, v + w)` leaves the transport
//! operator `d/dt + v . grad_x` invariant, and the anisotropic dilation
//! `(t, x, v) -> (r^2 t, r^3 x, r v)` is a group automorphism.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{KineticError, Result};

/// A point of kinetic phase space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint<const D: usize> {
    pub t: f64,
    pub x: [f64; D],
    pub v: [f64; D],
}

/// Phase-space point in one spatial dimension, the case exercised by the
/// grid and quadrature machinery.
pub type Point = PhasePoint<1>;

impl<const D: usize> Default for PhasePoint<D> {
    fn default() -> Self {
        Self::ORIGIN
    }
}

impl<const D: usize> PhasePoint<D> {
    pub const ORIGIN: Self = Self {
        t: 0.0,
        x: [0.0; D],
        v: [0.0; D],
    };

    pub fn new(t: f64, x: [f64; D], v: [f64; D]) -> Self {
        Self { t, x, v }
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite()
            && self.x.iter().all(|c| c.is_finite())
            && self.v.iter().all(|c| c.is_finite())
    }

    /// Group law `self o other`.
    #[inline]
    pub fn compose(&self, other: &Self) -> Self {
        let s = other.t;
        let mut x = [0.0; D];
        let mut v = [0.0; D];
        for k in 0..D {
            x[k] = self.x[k] + other.x[k] + s * self.v[k];
            v[k] = self.v[k] + other.v[k];
        }
        Self {
            t: self.t + s,
            x,
            v,
        }
    }

    #[inline]
    pub fn inverse(&self) -> Self {
        let mut x = [0.0; D];
        let mut v = [0.0; D];
        for k in 0..D {
            x[k] = -self.x[k] + self.t * self.v[k];
            v[k] = -self.v[k];
        }
        Self { t: -self.t, x, v }
    }

    /// Kinetic dilation `(r^2 t, r^3 x, r v)`.
    pub fn dilate(&self, r: f64) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(KineticError::NonPositiveScale(r));
        }
        let r3 = r * r * r;
        Ok(Self {
            t: r * r * self.t,
            x: self.x.map(|c| r3 * c),
            v: self.v.map(|c| r * c),
        })
    }

    /// `max(|t|^{1/2}, |x|^{1/3}, |v|)` with Euclidean norms on `x` and `v`.
    /// Homogeneous of degree one under [`PhasePoint::dilate`].
    #[inline]
    pub fn rho_box(&self) -> f64 {
        let xn = euclid(&self.x);
        let vn = euclid(&self.v);
        self.t.abs().sqrt().max(xn.cbrt()).max(vn)
    }

    /// Membership in the open kinetic ball `|t| < r^2, |x| < r^3, |v| < r`.
    pub fn in_kinetic_ball(&self, r: f64) -> bool {
        self.t.abs() < r * r && euclid(&self.x) < r * r * r && euclid(&self.v) < r
    }
}

impl Point {
    pub fn scalar(t: f64, x: f64, v: f64) -> Self {
        Self { t, x: [x], v: [v] }
    }
}

#[inline]
pub(crate) fn euclid<const D: usize>(a: &[f64; D]) -> f64 {
    if D == 1 {
        a[0].abs()
    } else {
        a.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// Spatial dimension together with the homogeneous dimension `Q = 4d + 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dimension {
    d: usize,
}

impl Dimension {
    pub const ONE: Dimension = Dimension { d: 1 };

    pub fn new(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(KineticError::InvalidParameter(
                "spatial dimension must be positive".into(),
            ));
        }
        Ok(Self { d })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Homogeneous dimension.
    pub fn q(&self) -> usize {
        4 * self.d + 2
    }

    pub fn qf(&self) -> f64 {
        self.q() as f64
    }
}

/// Volume of the Euclidean unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI / d as f64 * unit_ball_volume(d - 2),
    }
}

/// Lebesgue measure of `B_r^kin = {|s| < r^2, |y| < r^3, |w| < r}`.
pub fn kinetic_ball_volume(r: f64, dim: Dimension) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(KineticError::NonPositiveScale(r));
    }
    let d = dim.d() as i32;
    let omega = unit_ball_volume(dim.d());
    Ok(2.0 * r * r * omega * r.powi(3 * d) * omega * r.powi(d))
}

/// Measured constants for `rho_box` as a quasi-norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuasiConstants {
    /// `sup rho(z o zeta) / (rho(z) + rho(zeta))`
    pub triangle: f64,
    /// `sup rho(z^-1) / rho(z)`
    pub inverse: f64,
    pub samples: usize,
}

/// Random sample of point pairs with `rho_box <= radius`.
pub fn measure_quasi_constants<const D: usize>(
    samples: usize,
    radius: f64,
    seed: u64,
) -> QuasiConstants {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| {
        // Uniform in the box of rho_box <= radius, then rescaled to a random
        // level so that small and large points are both represented.
        let level = radius * rng.gen::<f64>();
        let mut p = PhasePoint::<D>::ORIGIN;
        p.t = rng.gen_range(-1.0..1.0);
        for k in 0..D {
            p.x[k] = rng.gen_range(-1.0..1.0) / (D as f64).sqrt();
            p.v[k] = rng.gen_range(-1.0..1.0) / (D as f64).sqrt();
        }
        p.dilate(level.max(1e-12)).expect("positive level")
    };
    let mut triangle: f64 = 0.0;
    let mut inverse: f64 = 0.0;
    for _ in 0..samples {
        let a = draw(&mut rng);
        let b = draw(&mut rng);
        let ra = a.rho_box();
        let rb = b.rho_box();
        triangle = triangle.max(a.compose(&b).rho_box() / (ra + rb));
        if ra > 0.0 {
            inverse = inverse.max(a.inverse().rho_box() / ra);
        }
    }
    QuasiConstants {
        triangle,
        inverse,
        samples,
    }
}
