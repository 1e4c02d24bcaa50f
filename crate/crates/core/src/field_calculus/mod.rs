//! Phase-space fields, quadrature norms, the kinetic convolution operator,
//! finite differences, the fractional derivative in `x` and Littlewood–Paley
//! projections.

pub mod analytic;
pub mod commute;
pub mod convolve;
pub mod fractional;
pub mod grid;
pub mod littlewood_paley;

pub use analytic::{AnalyticField, DeltaX, GaussianField, PhaseField};
pub use commute::{commute_check, CommuteConfig, CommuteReport};
pub use convolve::{convolve_at, convolve_on_grid, kinetic_convolve, ConvolveOptions};
pub use fractional::{frac_dx, singular_constant, Boundary, FracBackend};
pub use grid::{besov_seminorm, besov_seminorm_analytic, delta_x_h, GridField, GridSpec};
pub use littlewood_paley::{lp_project, psi_j_identity_check, square_function, LPBank};
