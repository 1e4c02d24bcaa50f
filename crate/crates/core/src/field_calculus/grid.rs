//! Uniform box grids and sampled fields (`d = 1`).

use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::analytic::PhaseField;
use crate::error::{KineticError, Result};
use crate::kinetic_group::Point;
use crate::quadrature::pairwise_sum;

/// Box `[-T, T) x [-X, X) x [-V, V)` with `n` points per axis at
/// `-L + i * 2L / n`. The `x`-axis is treated as periodic by spectral
/// operators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Half-widths `(T, X, V)`.
    pub extents: [f64; 3],
    /// Points per axis `(n_t, n_x, n_v)`.
    pub counts: [usize; 3],
}

impl GridSpec {
    pub fn new(extents: [f64; 3], counts: [usize; 3]) -> Result<Self> {
        for (&l, &n) in extents.iter().zip(&counts) {
            if !(l > 0.0) || !l.is_finite() {
                return Err(KineticError::InvalidParameter(format!("extent {l} must be positive")));
            }
            if n == 0 {
                return Err(KineticError::Empty("grid axis"));
            }
        }
        Ok(Self { extents, counts })
    }

    pub fn cube(half_width: f64, n: usize) -> Result<Self> {
        Self::new([half_width; 3], [n; 3])
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        2.0 * self.extents[axis] / self.counts[axis] as f64
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        -self.extents[axis] + i as f64 * self.spacing(axis)
    }

    pub fn axis(&self, axis: usize) -> Vec<f64> {
        (0..self.counts[axis]).map(|i| self.coord(axis, i)).collect()
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        (0..3).map(|a| self.spacing(a)).product()
    }

    #[inline]
    pub fn index(&self, it: usize, ix: usize, iv: usize) -> usize {
        (it * self.counts[1] + ix) * self.counts[2] + iv
    }

    #[inline]
    pub fn unindex(&self, k: usize) -> (usize, usize, usize) {
        let iv = k % self.counts[2];
        let rest = k / self.counts[2];
        (rest / self.counts[1], rest % self.counts[1], iv)
    }

    #[inline]
    pub fn point(&self, k: usize) -> Point {
        let (it, ix, iv) = self.unindex(k);
        Point::scalar(self.coord(0, it), self.coord(1, ix), self.coord(2, iv))
    }

    pub fn points(&self) -> Vec<Point> {
        (0..self.len()).map(|k| self.point(k)).collect()
    }

    /// Grid with every `stride`-th point per axis, same lower corner.
    pub fn strided(&self, stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(KineticError::InvalidParameter("stride must be positive".into()));
        }
        let mut counts = self.counts;
        for c in &mut counts {
            if *c % stride != 0 {
                return Err(KineticError::GridMismatch(format!(
                    "axis length {c} not divisible by stride {stride}"
                )));
            }
            *c /= stride;
        }
        Self::new(self.extents, counts)
    }

    /// Anisotropically dilated box: half-widths `(T / l, X / l, V)`.
    pub fn co_dilated(&self, lambda: f64) -> Result<Self> {
        Self::new(
            [self.extents[0] / lambda, self.extents[1] / lambda, self.extents[2]],
            self.counts,
        )
    }
}

/// Samples on a [`GridSpec`] in row-major `(t, x, v)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub grid: GridSpec,
    pub data: Vec<f64>,
}

impl GridField {
    pub fn new(grid: GridSpec, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(KineticError::GridMismatch(format!(
                "{} samples for a grid of {} points",
                data.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, data })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            data: vec![0.0; grid.len()],
        }
    }

    pub fn sample<F: PhaseField + ?Sized>(f: &F, grid: &GridSpec) -> Self {
        let data = (0..grid.len())
            .into_par_iter()
            .map(|k| f.value(&grid.point(k)))
            .collect();
        Self { grid: *grid, data }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync) -> Self {
        Self {
            grid: self.grid,
            data: self.data.par_iter().map(|&x| f(x)).collect(),
        }
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(KineticError::GridMismatch("fields live on different grids".into()));
        }
        Ok(())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64 + Sync) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            grid: self.grid,
            data: self
                .data
                .par_iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|x| c * x)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Riemann-sum `L^p` norm with the grid's cell volume.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        lp_norm(self, p)
    }

    /// Number of `x`-lines, one per `(t, v)` pair.
    pub fn n_lines(&self) -> usize {
        self.grid.counts[0] * self.grid.counts[2]
    }

    pub fn x_line(&self, line: usize) -> Vec<f64> {
        let [_, nx, nv] = self.grid.counts;
        let (it, iv) = (line / nv, line % nv);
        (0..nx).map(|ix| self.data[(it * nx + ix) * nv + iv]).collect()
    }

    /// Applies `f` to every `x`-line, in parallel.
    pub fn map_x_lines(&self, f: impl Fn(&[f64]) -> Vec<f64> + Sync) -> Self {
        let [_, nx, nv] = self.grid.counts;
        let lines: Vec<Vec<f64>> = (0..self.n_lines())
            .into_par_iter()
            .map(|l| f(&self.x_line(l)))
            .collect();
        let mut data = vec![0.0; self.data.len()];
        for (l, line) in lines.iter().enumerate() {
            let (it, iv) = (l / nv, l % nv);
            for ix in 0..nx {
                data[(it * nx + ix) * nv + iv] = line[ix];
            }
        }
        Self {
            grid: self.grid,
            data,
        }
    }

    /// Largest `|f|` on the two `x`-boundary planes relative to `max |f|`.
    pub fn x_boundary_ratio(&self) -> f64 {
        let max = self.max_abs();
        if max == 0.0 {
            return 0.0;
        }
        let nx = self.grid.counts[1];
        let mut edge: f64 = 0.0;
        for l in 0..self.n_lines() {
            let line = self.x_line(l);
            edge = edge.max(line[0].abs()).max(line[nx - 1].abs());
        }
        edge / max
    }

    const MAGIC: &'static [u8; 8] = b"KGFIELD1";

    /// Little-endian binary: magic, three `u64` counts, three `f64`
    /// half-widths, then the samples.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 48 + 8 * self.data.len());
        out.extend_from_slice(Self::MAGIC);
        for c in self.grid.counts {
            out.extend_from_slice(&(c as u64).to_le_bytes());
        }
        for e in self.grid.extents {
            out.extend_from_slice(&e.to_le_bytes());
        }
        for x in &self.data {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| KineticError::Io(format!("malformed field file: {m}"));
        if bytes.len() < 56 || &bytes[..8] != Self::MAGIC {
            return Err(bad("missing header"));
        }
        let word = |i: usize| -> [u8; 8] { bytes[i..i + 8].try_into().expect("8 bytes") };
        let mut counts = [0usize; 3];
        let mut extents = [0.0; 3];
        for a in 0..3 {
            counts[a] = u64::from_le_bytes(word(8 + 8 * a)) as usize;
            extents[a] = f64::from_le_bytes(word(32 + 8 * a));
        }
        let grid = GridSpec::new(extents, counts).map_err(|e| bad(&e.to_string()))?;
        let body = &bytes[56..];
        if body.len() != 8 * grid.len() {
            return Err(bad("sample count does not match header"));
        }
        let data = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Ok(Self { grid, data })
    }

    pub fn write_binary(&self, path: &Path) -> Result<()> {
        std::fs::File::create(path)?.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    /// CSV `t,x,v,value` of the slice at time index `it`.
    pub fn slice_csv(&self, it: usize) -> Result<String> {
        let [nt, nx, nv] = self.grid.counts;
        if it >= nt {
            return Err(KineticError::InvalidParameter(format!("time index {it} >= {nt}")));
        }
        let t = self.grid.coord(0, it);
        let mut s = String::from("t,x,v,value\n");
        for ix in 0..nx {
            for iv in 0..nv {
                let k = self.grid.index(it, ix, iv);
                s.push_str(&format!(
                    "{t},{},{},{:e}\n",
                    self.grid.coord(1, ix),
                    self.grid.coord(2, iv),
                    self.data[k]
                ));
            }
        }
        Ok(s)
    }

    pub fn write_slice_csv(&self, path: &Path, it: usize) -> Result<()> {
        std::fs::write(path, self.slice_csv(it)?)?;
        Ok(())
    }
}

/// Riemann-sum `L^p` norm; `p = INFINITY` is the max of `|samples|`.
pub fn lp_norm(field: &GridField, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(KineticError::InvalidExponent(p));
    }
    if p.is_infinite() {
        return Ok(field.max_abs());
    }
    let terms: Vec<f64> = if p == 2.0 {
        field.data.iter().map(|x| x * x).collect()
    } else {
        field.data.iter().map(|x| x.abs().powf(p)).collect()
    };
    Ok((pairwise_sum(&terms) * field.grid.cell_volume()).powf(1.0 / p))
}

/// How `x`-shifts treat values beyond the box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Shift {
    /// Wrap around the periodic `x`-axis.
    Periodic,
    /// Treat values outside the box as zero.
    Zero,
}

/// `f(t, x + h, v) - f(t, x, v)` on the grid; `h` must be a multiple of the
/// `x`-spacing.
pub fn delta_x_h(field: &GridField, h: f64, shift: Shift) -> Result<GridField> {
    let dx = field.grid.spacing(1);
    let k = (h / dx).round();
    if (k * dx - h).abs() > 1e-9 * dx.max(h.abs()) {
        return Err(KineticError::OffGridShift(h, dx));
    }
    let k = k as i64;
    let n = field.grid.counts[1] as i64;
    Ok(field.map_x_lines(|line| {
        (0..n)
            .map(|i| {
                let j = i + k;
                let shifted = match shift {
                    Shift::Periodic => line[j.rem_euclid(n) as usize],
                    Shift::Zero if (0..n).contains(&j) => line[j as usize],
                    Shift::Zero => 0.0,
                };
                shifted - line[i as usize]
            })
            .collect()
    }))
}

/// `max_h ||Delta_x^h f||_p / |h|^{1/3}` over grid-aligned shifts, with
/// zero extension beyond the box.
pub fn besov_seminorm(field: &GridField, p: f64, h_grid: &[f64]) -> Result<f64> {
    if h_grid.is_empty() {
        return Err(KineticError::Empty("h grid"));
    }
    let mut best: f64 = 0.0;
    for &h in h_grid {
        if h == 0.0 {
            return Err(KineticError::InvalidParameter("h grid must be nonzero".into()));
        }
        let d = delta_x_h(field, h, Shift::Zero)?;
        best = best.max(lp_norm(&d, p)? / h.abs().cbrt());
    }
    Ok(best)
}

/// Same as [`besov_seminorm`] with exact off-grid shifts of an analytic field.
pub fn besov_seminorm_analytic<F: PhaseField + ?Sized>(
    f: &F,
    grid: &GridSpec,
    p: f64,
    h_grid: &[f64],
) -> Result<f64> {
    if h_grid.is_empty() {
        return Err(KineticError::Empty("h grid"));
    }
    let mut best: f64 = 0.0;
    for &h in h_grid {
        if h == 0.0 {
            return Err(KineticError::InvalidParameter("h grid must be nonzero".into()));
        }
        let d = GridField::sample(&super::analytic::DeltaX { field: f, h }, grid);
        best = best.max(lp_norm(&d, p)? / h.abs().cbrt());
    }
    Ok(best)
}

/// Grid-aligned shifts closest to the requested ones (at least one spacing).
pub fn snap_shifts(grid: &GridSpec, hs: &[f64]) -> Vec<f64> {
    let dx = grid.spacing(1);
    let mut out: Vec<f64> = hs
        .iter()
        .map(|h| (h / dx).round().max(1.0) * dx)
        .collect();
    out.dedup();
    out
}
