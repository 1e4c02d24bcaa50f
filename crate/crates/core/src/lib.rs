//! Kinetic translation group, critical kinetic trajectories, kinetic
//! mollification kernels and the harmonic-analysis operators built on them.

pub mod defect_engine;
pub mod error;
pub mod experiments;
pub mod field_calculus;
pub mod kernels;
pub mod kinetic_group;
pub mod maximal_operators;
pub mod quadrature;
pub mod report;
pub mod suite;
pub mod trajectories;

pub use error::{KineticError, Result};
pub use kinetic_group::{kinetic_ball_volume, Dimension, PhasePoint, Point};
pub use report::{Check, VerificationReport};
pub use trajectories::{endpoint, endpoint_inverse_params, TrajectoryParams};
