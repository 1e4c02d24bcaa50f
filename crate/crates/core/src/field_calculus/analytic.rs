//! Closed-form phase-space fields (`d = 1`).

use crate::kinetic_group::Point;

/// A scalar field evaluable anywhere in phase space. In `d = 1` vector
/// fields are scalar as well.
pub trait PhaseField: Sync {
    fn value(&self, z: &Point) -> f64;
}

impl<F: Fn(&Point) -> f64 + Sync> PhaseField for F {
    fn value(&self, z: &Point) -> f64 {
        self(z)
    }
}

/// A field with exact transport derivative and `v`-gradient.
pub trait AnalyticField: PhaseField {
    /// `(d_t + v d_x) f`
    fn transport(&self, z: &Point) -> f64;
    /// `d_v f`
    fn grad_v(&self, z: &Point) -> f64;
}

/// `f(t, x + h, v) - f(t, x, v)`.
pub struct DeltaX<'a, F: PhaseField + ?Sized> {
    pub field: &'a F,
    pub h: f64,
}

impl<F: PhaseField + ?Sized> PhaseField for DeltaX<'_, F> {
    fn value(&self, z: &Point) -> f64 {
        let mut s = *z;
        s.x[0] += self.h;
        self.field.value(&s) - self.field.value(z)
    }
}

/// `G(l t, l x, v)` with `G(t, x, v) = exp(-(t^2 + x^2 + v^2) / 2) cos(k x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianField {
    pub lambda: f64,
    pub k: f64,
}

impl GaussianField {
    pub fn standard() -> Self {
        Self { lambda: 1.0, k: 0.0 }
    }

    pub fn modulated(k: f64) -> Self {
        Self { lambda: 1.0, k }
    }

    pub fn dilated(self, lambda: f64) -> Self {
        Self {
            lambda: self.lambda * lambda,
            ..self
        }
    }

    /// `(T, X, v)`, envelope and phase at a point.
    #[inline]
    fn parts(&self, z: &Point) -> (f64, f64, f64, f64, f64) {
        let t = self.lambda * z.t;
        let x = self.lambda * z.x[0];
        let v = z.v[0];
        let env = (-(t * t + x * x + v * v) / 2.0).exp();
        (t, x, v, env, self.k * x)
    }

    /// `d_x f`
    pub fn dx(&self, z: &Point) -> f64 {
        let (_, x, _, env, ph) = self.parts(z);
        self.lambda * env * (-x * ph.cos() - self.k * ph.sin())
    }
}

impl PhaseField for GaussianField {
    #[inline]
    fn value(&self, z: &Point) -> f64 {
        let (_, _, _, env, ph) = self.parts(z);
        if self.k == 0.0 {
            env
        } else {
            env * ph.cos()
        }
    }
}

impl AnalyticField for GaussianField {
    fn transport(&self, z: &Point) -> f64 {
        let (t, _, v, env, ph) = self.parts(z);
        self.lambda * (-t * env * ph.cos()) + v * self.dx(z)
    }

    fn grad_v(&self, z: &Point) -> f64 {
        -z.v[0] * self.value(z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for f in [
            GaussianField::standard(),
            GaussianField::modulated(2.0),
            GaussianField::modulated(4.0).dilated(0.5),
            GaussianField::standard().dilated(3.0),
        ] {
            for _ in 0..50 {
                let z = Point::scalar(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
                let err = |d: f64| {
                    let at = |dt: f64, dx: f64, dv: f64| f.value(&Point::scalar(z.t + dt, z.x[0] + dx, z.v[0] + dv));
                    let v = z.v[0];
                    let tr = (at(d, 0.0, 0.0) - at(-d, 0.0, 0.0)) / (2.0 * d)
                        + v * (at(0.0, d, 0.0) - at(0.0, -d, 0.0)) / (2.0 * d);
                    let gv = (at(0.0, 0.0, d) - at(0.0, 0.0, -d)) / (2.0 * d);
                    ((tr - f.transport(&z)).abs(), (gv - f.grad_v(&z)).abs())
                };
                let (a1, b1) = err(1e-3);
                assert!(a1 < 1e-4 && b1 < 1e-4);
                let (a2, b2) = err(5e-4);
                // second order: halving the step quarters the error
                if a1 > 1e-9 {
                    assert!(a2 < a1 / 3.0, "{a1} {a2}");
                }
                if b1 > 1e-9 {
                    assert!(b2 < b1 / 3.0, "{b1} {b2}");
                }
            }
        }
    }

    #[test]
    fn delta_x_of_linear_field_is_constant() {
        let lin = |z: &Point| 2.0 * z.x[0] - z.v[0];
        let d = DeltaX { field: &lin, h: 0.25 };
        for x in [-3.0, 0.0, 7.5] {
            assert!((d.value(&Point::scalar(1.0, x, 2.0)) - 0.5).abs() < 1e-15);
        }
    }
}
