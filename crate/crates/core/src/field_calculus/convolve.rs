//! The kinetic convolution `T_J f(z) = int J(m) f(z o m) dm`.

use rayon::prelude::*;

use super::analytic::PhaseField;
use super::grid::{GridField, GridSpec};
use crate::error::{KineticError, Result};
use crate::kernels::{KernelId, KernelQuadrature};
use crate::kinetic_group::Point;

/// Node count per axis and the safety margin: every kernel offset component
/// must stay within `margin` times the grid half-width on its axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvolveOptions {
    pub nodes: usize,
    pub margin: f64,
}

impl Default for ConvolveOptions {
    fn default() -> Self {
        Self {
            nodes: 16,
            margin: 1.0,
        }
    }
}

/// Rejects kernels whose support is wider than the margin allows.
pub fn check_support(quad: &KernelQuadrature, grid: &GridSpec, margin: f64) -> Result<()> {
    let mut ext = [0.0f64; 3];
    for m in &quad.offsets {
        ext[0] = ext[0].max(m.t.abs());
        ext[1] = ext[1].max(m.x[0].abs());
        ext[2] = ext[2].max(m.v[0].abs());
    }
    for (a, name) in ["t", "x", "v"].into_iter().enumerate() {
        let allowed = margin * grid.extents[a];
        if ext[a] > allowed {
            return Err(KineticError::SupportTooLarge {
                axis: name,
                extent: ext[a],
                margin: allowed,
            });
        }
    }
    Ok(())
}

/// `T_J f` on a grid with `nodes` Gauss–Legendre nodes per support axis.
pub fn kinetic_convolve<F: PhaseField + ?Sized>(
    id: &KernelId,
    f: &F,
    grid: &GridSpec,
    nodes: usize,
) -> Result<GridField> {
    kinetic_convolve_with(id, f, grid, ConvolveOptions { nodes, ..Default::default() })
}

pub fn kinetic_convolve_with<F: PhaseField + ?Sized>(
    id: &KernelId,
    f: &F,
    grid: &GridSpec,
    opts: ConvolveOptions,
) -> Result<GridField> {
    if opts.nodes < 8 {
        return Err(KineticError::TooFewNodes {
            min: 8,
            got: opts.nodes,
        });
    }
    let quad = KernelQuadrature::new(*id, opts.nodes)?;
    check_support(&quad, grid, opts.margin)?;
    Ok(convolve_on_grid(&quad, f, grid))
}

/// `T_J f` on a grid from precomputed nodes.
pub fn convolve_on_grid<F: PhaseField + ?Sized>(
    quad: &KernelQuadrature,
    f: &F,
    grid: &GridSpec,
) -> GridField {
    let data = (0..grid.len())
        .into_par_iter()
        .map(|k| quad.apply_at(&grid.point(k), |p| f.value(p)))
        .collect();
    GridField {
        grid: *grid,
        data,
    }
}

/// `T_J f` at arbitrary points.
pub fn convolve_at<F: PhaseField + ?Sized>(
    quad: &KernelQuadrature,
    f: &F,
    points: &[Point],
) -> Vec<f64> {
    points
        .par_iter()
        .map(|z| quad.apply_at(z, |p| f.value(p)))
        .collect()
}
