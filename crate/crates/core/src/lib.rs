//! Normalized solutions of nonlinear Schrödinger equations on ℝᴺ (N = 2, 3)
//! and of the repulsive cubic Schrödinger system in ℝ³, computed by a
//! minimax scheme that carries the mass-preserving dilation as an extra
//! coordinate.

mod banded;
pub mod deform;
pub mod error;
pub mod grid;
pub mod minimax;
pub mod newton;
pub mod scalar;
pub mod sphere;
pub mod system;

pub use deform::{
    flow_integrate, psp_monitor, AugmentedPoint, FlowConfig, FlowOutcome, FlowTrace, Functional, ScalarProblem,
    SystemProblem,
};
pub use error::{Error, Result};
pub use grid::{
    critical_exponent, gn_ratio, grad_norm_sq, h1_precondition, lp_norm, make_grid, GridSpec, RadialFunction,
    RadialGrid,
};
pub use minimax::{
    admissible_path_check, admissible_surface_check, degree_intersection, initial_surface, mountain_pass_single,
    path_pohozaev_crossing, surface_minimax, CriticalReport, MinimaxConfig, MinimaxReport, PathOnSphere,
    SurfaceOnProduct,
};
pub use newton::newton_polish;
pub use scalar::{
    b0_estimate, energy_i, fiber_maximize, pohozaev_p, validate_growth, CriticalPointReport, PowerNonlinearity,
    SphereConstraint, Status,
};
pub use sphere::retract;
pub use system::{
    ground_state_omega, validate_solution, GroundState, SystemParams, SystemReport, SystemState,
};
