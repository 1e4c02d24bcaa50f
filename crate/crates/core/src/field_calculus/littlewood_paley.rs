//! Littlewood–Paley projections in `x`.

use num_complex::Complex64;
use serde::Serialize;

use super::fractional::{frequency, spectral_apply};
use super::grid::GridField;
use crate::error::{KineticError, Result};
use crate::quadrature::gauss_legendre;
use crate::report::{Check, VerificationReport};

/// Smooth step: 0 for `u <= 0`, 1 for `u >= 1`.
fn smooth_step(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / u).exp();
        let b = (-1.0 / (1.0 - u)).exp();
        a / (a + b)
    }
}

/// `chi = 1` on `[0, 1]`, `0` on `[2, inf)`.
pub fn chi(r: f64) -> f64 {
    smooth_step(2.0 - r.abs())
}

/// `eta(xi) = chi(|xi|) - chi(2|xi|)`, supported in `1/2 < |xi| < 2`.
pub fn eta(xi: f64) -> f64 {
    chi(xi.abs()) - chi(2.0 * xi.abs())
}

/// `eta~(xi) = chi(|xi| / 2) - chi(4|xi|)`, equal to 1 on the support of `eta`.
pub fn eta_tilde(xi: f64) -> f64 {
    chi(0.5 * xi.abs()) - chi(4.0 * xi.abs())
}

/// A dyadic bank `j_min..=j_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LPBank {
    pub j_min: i32,
    pub j_max: i32,
}

impl LPBank {
    pub fn new(j_min: i32, j_max: i32) -> Result<Self> {
        if j_min > j_max {
            return Err(KineticError::Empty("dyadic bank"));
        }
        Ok(Self { j_min, j_max })
    }

    /// Smallest bank whose shells cover every nonzero frequency of a
    /// periodic axis of length `len` with `n` points, so that
    /// `sum_j eta_j = 1` there.
    pub fn covering(n: usize, len: f64) -> Result<Self> {
        let xi_min = 2.0 * std::f64::consts::PI / len;
        let xi_max = std::f64::consts::PI * n as f64 / len;
        Self::new(xi_min.log2().floor() as i32, xi_max.log2().ceil() as i32)
    }

    pub fn for_field(field: &GridField) -> Result<Self> {
        Self::covering(field.grid.counts[1], 2.0 * field.grid.extents[1])
    }

    pub fn indices(&self) -> impl Iterator<Item = i32> {
        self.j_min..=self.j_max
    }

    fn check(&self, j: i32) -> Result<()> {
        if j < self.j_min || j > self.j_max {
            return Err(KineticError::OutOfBank {
                j,
                min: self.j_min,
                max: self.j_max,
            });
        }
        Ok(())
    }

    pub fn eta_j(&self, j: i32, xi: f64) -> f64 {
        eta(xi * 2f64.powi(-j))
    }

    pub fn eta_tilde_j(&self, j: i32, xi: f64) -> f64 {
        eta_tilde(xi * 2f64.powi(-j))
    }

    /// `sum_j eta_j(xi)` over the bank.
    pub fn partition(&self, xi: f64) -> f64 {
        self.indices().map(|j| self.eta_j(j, xi)).sum()
    }
}

/// `P_j u` (or `P~_j u` when `widened`).
pub fn lp_project(field: &GridField, j: i32, bank: &LPBank, widened: bool) -> Result<GridField> {
    bank.check(j)?;
    spectral_apply(field, |xi| {
        let m = if widened {
            bank.eta_tilde_j(j, xi)
        } else {
            bank.eta_j(j, xi)
        };
        Complex64::new(m, 0.0)
    })
}

/// `Psi^_j(xi) = -i 2^j xi |xi|^{-2} eta_j(xi)`.
pub fn psi_hat(j: i32, xi: f64) -> Complex64 {
    if xi == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    Complex64::new(0.0, -2f64.powi(j) / xi * eta(xi * 2f64.powi(-j)))
}

/// `Psi_j(x) = (1/pi) int_0^inf 2^j eta(2^{-j} xi) sin(xi x) / xi dxi`.
pub fn psi_j(j: i32, x: f64) -> f64 {
    let rule = gauss_legendre(128);
    let s = 2f64.powi(j);
    // eta(u) vanishes outside (1/2, 2)
    let half = rule.integrate(0.5, 1.0, |u| eta(u) * (s * u * x).sin() / u);
    let rest = rule.integrate(1.0, 2.0, |u| eta(u) * (s * u * x).sin() / u);
    s * (half + rest) / std::f64::consts::PI
}

/// `||Psi_j||_{L^1}` by quadrature of the inverse transform.
pub fn psi_j_l1(j: i32) -> f64 {
    let rule = gauss_legendre(64);
    let s = 2f64.powi(-j);
    // Psi_j(x) = 2^j Psi_0(2^j x) and Psi_0 is odd and Schwartz
    let mut total = 0.0;
    let panel = 0.5 * s;
    for k in 0..160 {
        let (a, b) = (k as f64 * panel, (k + 1) as f64 * panel);
        total += rule.integrate(a, b, |x| psi_j(j, x).abs());
    }
    2.0 * total
}

/// Checks `P_j g = 2^{-j} d_x (Psi_j *_x P~_j g)` spectrally.
pub fn psi_j_identity_check(field: &GridField, j: i32, bank: &LPBank) -> Result<VerificationReport> {
    let lhs = lp_project(field, j, bank, false)?;
    let wide = lp_project(field, j, bank, true)?;
    let scale = 2f64.powi(-j);
    let rhs = spectral_apply(&wide, |xi| scale * Complex64::new(0.0, xi) * psi_hat(j, xi))?;
    let err = lhs.sub(&rhs)?.max_abs();
    let reference = field.max_abs().max(f64::MIN_POSITIVE);
    let mut rep = VerificationReport::new("psi_j_identity");
    rep.push(Check::at_most(
        "psi_j_identity",
        &format!("j={j}"),
        err / reference,
        0.0,
        1e-10,
    ));
    Ok(rep)
}

/// `(sum_j 2^{2j/3} |P_j u|^2)^{1/2}` from projections indexed by `j`.
pub fn square_function(projections: &[(i32, GridField)]) -> Result<GridField> {
    let Some((_, first)) = projections.first() else {
        return Err(KineticError::Empty("projection list"));
    };
    let mut acc = GridField::zeros(first.grid);
    for (j, p) in projections {
        let w = 2f64.powf(2.0 * *j as f64 / 3.0);
        acc = acc.zip_with(p, |a, b| a + w * b * b)?;
    }
    Ok(acc.map(f64::sqrt))
}

/// All projections of a field over the bank.
pub fn project_all(field: &GridField, bank: &LPBank) -> Result<Vec<(i32, GridField)>> {
    bank.indices()
        .map(|j| Ok((j, lp_project(field, j, bank, false)?)))
        .collect()
}

/// Exact range of `sqrt(sum_j (2^j / |xi|)^{2/3} eta_j(xi)^2)` over one
/// dyadic period, which bounds `||S u||_2 / ||D^{1/3} u||_2`.
pub fn square_function_band() -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for k in 0..=2000 {
        let xi = 2f64.powf(k as f64 / 2000.0);
        let m: f64 = (-3..=3)
            .map(|j| (2f64.powi(j) / xi).powf(2.0 / 3.0) * eta(xi * 2f64.powi(-j)).powi(2))
            .sum();
        lo = lo.min(m.sqrt());
        hi = hi.max(m.sqrt());
    }
    (lo, hi)
}

/// Frequencies of the grid's `x`-axis.
pub fn grid_frequencies(field: &GridField) -> Vec<f64> {
    let n = field.grid.counts[1];
    let len = 2.0 * field.grid.extents[1];
    (0..n).map(|k| frequency(k, n, len)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_calculus::fractional::{frac_dx, FracBackend};
    use crate::field_calculus::grid::{lp_norm, GridSpec};
    use crate::kinetic_group::Point;
    use rand::{Rng, SeedableRng};

    fn grid() -> GridSpec {
        GridSpec::new([1.0, 8.0, 1.0], [2, 128, 3]).unwrap()
    }

    /// Random field with its `x`-mean removed on every line.
    fn random_mean_zero(seed: u64) -> GridField {
        let g = grid();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let f = GridField::new(g, (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        f.map_x_lines(|l| {
            let m = l.iter().sum::<f64>() / l.len() as f64;
            l.iter().map(|x| x - m).collect()
        })
    }

    #[test]
    fn profiles() {
        assert_eq!(chi(0.5), 1.0);
        assert_eq!(chi(2.5), 0.0);
        assert_eq!(eta(0.4), 0.0);
        assert_eq!(eta(2.1), 0.0);
        for k in 0..100 {
            let xi = 0.5 + 1.5 * k as f64 / 99.0;
            assert_eq!(eta_tilde(xi), 1.0);
        }
    }

    #[test]
    fn partition_of_unity_on_grid_frequencies() {
        let u = random_mean_zero(1);
        let bank = LPBank::for_field(&u).unwrap();
        for xi in grid_frequencies(&u) {
            if xi != 0.0 {
                assert!((bank.partition(xi) - 1.0).abs() < 1e-10, "xi {xi}");
                for j in bank.indices() {
                    let e = bank.eta_j(j, xi);
                    assert_eq!(bank.eta_tilde_j(j, xi) * e, e);
                }
            }
        }
        let mut sum = GridField::zeros(u.grid);
        for j in bank.indices() {
            sum = sum.add(&lp_project(&u, j, &bank, false).unwrap()).unwrap();
        }
        assert!(sum.sub(&u).unwrap().max_abs() < 1e-10);
        assert!(lp_project(&u, bank.j_max + 1, &bank, false).is_err());
    }

    #[test]
    fn widened_projection_fixes_narrow_one() {
        let u = random_mean_zero(2);
        let bank = LPBank::for_field(&u).unwrap();
        for j in bank.indices() {
            let p = lp_project(&u, j, &bank, false).unwrap();
            let pp = lp_project(&p, j, &bank, true).unwrap();
            assert!(pp.sub(&p).unwrap().max_abs() < 1e-10);
        }
    }

    #[test]
    fn single_frequency_lands_in_its_shells() {
        let g = grid();
        let k = 24.0 * std::f64::consts::PI / 8.0; // 3 pi
        let u = GridField::sample(&|z: &Point| (k * z.x[0]).cos(), &g);
        let bank = LPBank::for_field(&u).unwrap();
        for j in bank.indices() {
            let n = lp_project(&u, j, &bank, false).unwrap().max_abs();
            let expected = bank.eta_j(j, k);
            assert!((n - expected).abs() < 1e-10, "j {j}: {n} vs {expected}");
        }
    }

    #[test]
    fn psi_identity_holds() {
        let u = random_mean_zero(3);
        let bank = LPBank::for_field(&u).unwrap();
        for j in bank.indices() {
            let rep = psi_j_identity_check(&u, j, &bank).unwrap();
            assert!(rep.all_pass(), "{rep:?}");
        }
    }

    #[test]
    fn psi_l1_norm_is_uniform() {
        let norms: Vec<f64> = (-2..=3).map(psi_j_l1).collect();
        for n in &norms {
            assert!(n.is_finite() && (n / norms[0] - 1.0).abs() < 1e-3, "{norms:?}");
        }
    }

    #[test]
    fn square_function_examples() {
        let u = random_mean_zero(4);
        let bank = LPBank::for_field(&u).unwrap();
        let p = lp_project(&u, 2, &bank, false).unwrap();
        let s = square_function(&[(2, p.clone())]).unwrap();
        let expect = p.map(|x| 2f64.powf(2.0 / 3.0) * x.abs());
        assert!(s.sub(&expect).unwrap().max_abs() < 1e-14);
        let z = square_function(&[(0, GridField::zeros(u.grid))]).unwrap();
        assert_eq!(z.max_abs(), 0.0);
        assert!(square_function(&[]).is_err());

        let (lo, hi) = square_function_band();
        let sq = square_function(&project_all(&u, &bank).unwrap()).unwrap();
        let d = frac_dx(&u, 1.0 / 3.0, FracBackend::Spectral).unwrap();
        let ratio = lp_norm(&sq, 2.0).unwrap() / lp_norm(&d, 2.0).unwrap();
        assert!(ratio >= lo - 1e-9 && ratio <= hi + 1e-9, "{ratio} not in [{lo}, {hi}]");
    }
}
