//! The fractional derivative `D_x^s = (-Delta_x)^{s/2}` on grid fields.
//!
//! The spectral backend multiplies `x`-Fourier coefficients by `|xi|^s`. The
//! singular-integral backend (order 1/3 only) evaluates
//!
//! ```text
//! D^{1/3} f(x) = c int_R (2 f(x) - f(x + h) - f(x - h)) |h|^{-4/3} dh
//! ```
//!
//! by a lattice sum over grid shifts, corrected with the generalized
//! Euler–Maclaurin terms of the `h^{2/3}` and `h^{8/3}` singular parts.

use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use super::grid::{GridField, GridSpec};
use crate::error::{KineticError, Result};

/// `zeta(4/3)`
const ZETA_4_3: f64 = 3.600_937_750_458_862_4;
/// `zeta(-2/3)`
const ZETA_M2_3: f64 = -0.155_196_900_037_119_89;
/// `zeta(-8/3)`
const ZETA_M8_3: f64 = 0.009_128_036_043_321_016;

/// How the singular backend extends the field beyond the box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Boundary {
    /// Periodic extension, matching the spectral backend.
    Periodic,
    /// Zero extension: the whole-line operator applied to a field that
    /// vanishes outside the box.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FracBackend {
    Spectral,
    Singular(Boundary),
}

/// Largest relative boundary value accepted by the singular backend.
pub const DECAY_TOLERANCE: f64 = 1e-12;

/// Angular frequency of FFT bin `k` on a periodic axis of length `len`.
pub fn frequency(k: usize, n: usize, len: f64) -> f64 {
    let kk = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
    2.0 * std::f64::consts::PI * kk / len
}

fn planner_pair(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    let mut p = FftPlanner::new();
    (p.plan_fft_forward(n), p.plan_fft_inverse(n))
}

/// Applies the `x`-Fourier multiplier `m(xi)` line by line; returns the real
/// part.
pub fn spectral_apply(
    field: &GridField,
    m: impl Fn(f64) -> Complex64 + Sync,
) -> Result<GridField> {
    let n = field.grid.counts[1];
    if !n.is_power_of_two() {
        return Err(KineticError::NotPowerOfTwo(n));
    }
    let len = 2.0 * field.grid.extents[1];
    let mult: Vec<Complex64> = (0..n).map(|k| m(frequency(k, n, len))).collect();
    let (fwd, inv) = planner_pair(n);
    Ok(field.map_x_lines(|line| {
        let mut buf: Vec<Complex64> = line.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        fwd.process(&mut buf);
        for (b, m) in buf.iter_mut().zip(&mult) {
            *b *= m;
        }
        inv.process(&mut buf);
        buf.iter().map(|c| c.re / n as f64).collect()
    }))
}

/// `D_x^{order}` with the selected backend.
pub fn frac_dx(field: &GridField, order: f64, backend: FracBackend) -> Result<GridField> {
    if !(order >= 0.0) || !order.is_finite() {
        return Err(KineticError::InvalidParameter(format!("order {order} must be nonnegative")));
    }
    match backend {
        FracBackend::Spectral => {
            spectral_apply(field, |xi| Complex64::new(xi.abs().powf(order), 0.0))
        }
        FracBackend::Singular(boundary) => {
            if (order - 1.0 / 3.0).abs() > 1e-15 {
                return Err(KineticError::InvalidParameter(
                    "the singular-integral backend implements order 1/3 only".into(),
                ));
            }
            let ratio = field.x_boundary_ratio();
            if ratio > DECAY_TOLERANCE {
                return Err(KineticError::NonDecaying(ratio));
            }
            let c = singular_constant();
            let raw = singular_raw(field, boundary);
            Ok(raw.scale(2.0 * c))
        }
    }
}

/// `int_0^inf (2f(x) - f(x+h) - f(x-h)) h^{-4/3} dh` on every grid point.
fn singular_raw(field: &GridField, boundary: Boundary) -> GridField {
    let n = field.grid.counts[1];
    let dx = field.grid.spacing(1);
    let weights = match boundary {
        Boundary::Periodic => periodic_weights(n),
        Boundary::Zero => (1..n).map(|k| (k as f64).powf(-4.0 / 3.0)).collect(),
    };
    field.map_x_lines(|line| singular_line(line, dx, boundary, &weights))
}

/// `W_j = sum_{k = j mod n, k >= 1} k^{-4/3} = n^{-4/3} zeta(4/3, j/n)`,
/// `j = 1..=n`.
fn periodic_weights(n: usize) -> Vec<f64> {
    let nf = n as f64;
    (1..=n)
        .map(|j| nf.powf(-4.0 / 3.0) * hurwitz_zeta(4.0 / 3.0, j as f64 / nf))
        .collect()
}

fn singular_line(line: &[f64], dx: f64, boundary: Boundary, weights: &[f64]) -> Vec<f64> {
    let n = line.len() as i64;
    let at = |i: i64| -> f64 {
        match boundary {
            Boundary::Periodic => line[i.rem_euclid(n) as usize],
            Boundary::Zero if (0..n).contains(&i) => line[i as usize],
            Boundary::Zero => 0.0,
        }
    };
    let scale = dx.powf(-1.0 / 3.0);
    let c2 = ZETA_M2_3 * dx.powf(5.0 / 3.0);
    let c4 = ZETA_M8_3 * dx.powf(11.0 / 3.0) / 12.0;
    (0..n)
        .map(|i| {
            let fi = line[i as usize];
            let mut acc = 2.0 * fi * ZETA_4_3;
            match boundary {
                Boundary::Periodic => {
                    for (j, w) in weights.iter().enumerate() {
                        let j = j as i64 + 1;
                        acc -= w * (at(i + j) + at(i - j));
                    }
                }
                Boundary::Zero => {
                    for k in 1..n - i {
                        acc -= weights[k as usize - 1] * line[(i + k) as usize];
                    }
                    for k in 1..=i {
                        acc -= weights[k as usize - 1] * line[(i - k) as usize];
                    }
                }
            }
            let (m2, m1, p1, p2) = (at(i - 2), at(i - 1), at(i + 1), at(i + 2));
            let d2 = (-m2 + 16.0 * m1 - 30.0 * fi + 16.0 * p1 - p2) / (12.0 * dx * dx);
            let d4 = (m2 - 4.0 * m1 + 6.0 * fi - 4.0 * p1 + p2) / (dx * dx * dx * dx);
            scale * acc + c2 * d2 + c4 * d4
        })
        .collect()
}

/// Hurwitz zeta `sum_{m >= 0} (a + m)^{-s}` for `s > 1`, `a > 0`, by a partial
/// sum and an Euler–Maclaurin tail.
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    const N: usize = 32;
    let mut sum = 0.0;
    for m in 0..N {
        sum += (a + m as f64).powf(-s);
    }
    let x = a + N as f64;
    sum + x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s) + s * x.powf(-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * x.powf(-s - 3.0) / 720.0
        + s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * x.powf(-s - 5.0) / 30240.0
}

/// The singular-integral constant `c`, fitted by least squares so that the
/// periodic singular backend matches the spectral backend on the reference
/// Gaussian `exp(-x^2 / 2)` (half-width 16, 256 points).
pub fn singular_constant() -> f64 {
    static C: OnceLock<f64> = OnceLock::new();
    *C.get_or_init(|| {
        let grid = GridSpec::new([1.0, 16.0, 1.0], [1, 256, 1]).expect("valid grid");
        let f = GridField::sample(&|z: &crate::Point| (-z.x[0] * z.x[0] / 2.0).exp(), &grid);
        let spec = frac_dx(&f, 1.0 / 3.0, FracBackend::Spectral).expect("power of two");
        let raw = singular_raw(&f, Boundary::Periodic);
        let num: f64 = spec.data.iter().zip(&raw.data).map(|(a, b)| a * b).sum();
        let den: f64 = raw.data.iter().map(|b| b * b).sum();
        num / (2.0 * den)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_calculus::analytic::GaussianField;
    use crate::field_calculus::grid::{delta_x_h, lp_norm, Shift};
    use crate::kinetic_group::Point;
    use rand::{Rng, SeedableRng};

    fn periodic_grid(n: usize) -> GridSpec {
        GridSpec::new([1.0, std::f64::consts::PI, 1.0], [2, n, 3]).unwrap()
    }

    fn random_field(grid: &GridSpec, seed: u64) -> GridField {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        GridField::new(*grid, (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    fn rel(a: &GridField, b: &GridField) -> f64 {
        lp_norm(&a.sub(b).unwrap(), 2.0).unwrap() / lp_norm(b, 2.0).unwrap()
    }

    #[test]
    fn hurwitz_zeta_reference_values() {
        assert!((hurwitz_zeta(4.0 / 3.0, 1.0) - ZETA_4_3).abs() < 1e-13);
        // zeta(2, 1/2) = 3 zeta(2) = pi^2 / 2
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((hurwitz_zeta(2.0, 0.5) - pi2 / 2.0).abs() < 1e-13);
    }

    #[test]
    fn spectral_examples() {
        let g = periodic_grid(64);
        let c = GridField::sample(&|_: &Point| 3.0, &g);
        assert!(frac_dx(&c, 1.0 / 3.0, FracBackend::Spectral).unwrap().max_abs() < 1e-13);
        let wave = GridField::sample(&|z: &Point| (8.0 * z.x[0]).sin(), &g);
        let d = frac_dx(&wave, 1.0 / 3.0, FracBackend::Spectral).unwrap();
        let err = d.sub(&wave.scale(2.0)).unwrap().max_abs();
        assert!(err < 1e-12, "{err}");
        let bad = GridField::zeros(GridSpec::new([1.0, 1.0, 1.0], [1, 48, 1]).unwrap());
        assert_eq!(
            frac_dx(&bad, 1.0 / 3.0, FracBackend::Spectral).unwrap_err(),
            KineticError::NotPowerOfTwo(48)
        );
    }

    #[test]
    fn three_applications_give_abs_xi() {
        let g = periodic_grid(64);
        let u = random_field(&g, 5);
        let mut d = u.clone();
        for _ in 0..3 {
            d = frac_dx(&d, 1.0 / 3.0, FracBackend::Spectral).unwrap();
        }
        let direct = spectral_apply(&u, |xi| Complex64::new(xi.abs(), 0.0)).unwrap();
        assert!(d.sub(&direct).unwrap().max_abs() < 1e-10 * direct.max_abs().max(1.0));
    }

    #[test]
    fn spectral_is_linear_and_commutes_with_shifts() {
        let g = periodic_grid(32);
        let (u, w) = (random_field(&g, 1), random_field(&g, 2));
        let lhs = frac_dx(&u.scale(2.0).add(&w).unwrap(), 1.0 / 3.0, FracBackend::Spectral).unwrap();
        let du = frac_dx(&u, 1.0 / 3.0, FracBackend::Spectral).unwrap();
        let dw = frac_dx(&w, 1.0 / 3.0, FracBackend::Spectral).unwrap();
        assert!(lhs.sub(&du.scale(2.0).add(&dw).unwrap()).unwrap().max_abs() < 1e-12);
        let h = 3.0 * g.spacing(1);
        let a = frac_dx(&delta_x_h(&u, h, Shift::Periodic).unwrap(), 1.0 / 3.0, FracBackend::Spectral).unwrap();
        let b = delta_x_h(&du, h, Shift::Periodic).unwrap();
        assert!(a.sub(&b).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn calibrated_constant_matches_closed_form() {
        // c = C_{1,1/6} / 2 with C_{d,s} = 4^s Gamma(d/2 + s) / (pi^{d/2} |Gamma(-s)|)
        let s = 1.0 / 6.0;
        let gamma = statrs::function::gamma::gamma;
        let exact = 0.5 * 4f64.powf(s) * gamma(0.5 + s) / (std::f64::consts::PI.sqrt() * gamma(-s).abs());
        let c = singular_constant();
        assert!((c / exact - 1.0).abs() < 1e-4, "{c} vs {exact}");
    }

    #[test]
    fn backends_agree_on_reference_gaussian() {
        let g = GridSpec::new([2.0, 16.0, 2.0], [4, 128, 4]).unwrap();
        let f = GridField::sample(&GaussianField::standard(), &g);
        let spec = frac_dx(&f, 1.0 / 3.0, FracBackend::Spectral).unwrap();
        let sing = frac_dx(&f, 1.0 / 3.0, FracBackend::Singular(Boundary::Periodic)).unwrap();
        let e = rel(&sing, &spec);
        assert!(e < 1e-3, "{e}");
    }

    #[test]
    fn zero_boundary_matches_pointwise_whole_line_values() {
        // D^{1/3} exp(-x^2/2) at x = 0 is (1/2pi) int |xi|^{1/3} sqrt(2 pi) exp(-xi^2/2) dxi
        // = 2^{1/6} Gamma(2/3) / sqrt(pi)
        let exact0 = 2f64.powf(1.0 / 6.0) * statrs::function::gamma::gamma(2.0 / 3.0) / std::f64::consts::PI.sqrt();
        let g = GridSpec::new([1.0, 8.0, 1.0], [1, 128, 1]).unwrap();
        let f = GridField::sample(&|z: &Point| (-z.x[0] * z.x[0] / 2.0).exp(), &g);
        let d = frac_dx(&f, 1.0 / 3.0, FracBackend::Singular(Boundary::Zero)).unwrap();
        let at0 = d.data[64];
        assert!((at0 / exact0 - 1.0).abs() < 1e-4, "{at0} vs {exact0}");
    }

    #[test]
    fn singular_backend_rejects_bad_input() {
        let g = periodic_grid(32);
        let wave = GridField::sample(&|z: &Point| z.x[0].cos(), &g);
        assert!(matches!(
            frac_dx(&wave, 1.0 / 3.0, FracBackend::Singular(Boundary::Zero)),
            Err(KineticError::NonDecaying(_))
        ));
        assert!(frac_dx(&wave, 0.5, FracBackend::Singular(Boundary::Zero)).is_err());
    }
}
