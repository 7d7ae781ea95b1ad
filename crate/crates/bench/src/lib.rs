//! Fixtures shared by the benchmarks.

use std::sync::Arc;

use normsol::grid::{RadialFunction, RadialGrid};
use normsol::{ground_state_omega, make_grid, GroundState, PowerNonlinearity, SphereConstraint, SystemParams, SystemState};

pub struct Fixture {
    pub grid: Arc<RadialGrid>,
    pub gs: GroundState,
    pub spec: PowerNonlinearity,
    pub constraint: SphereConstraint,
    pub params: SystemParams,
}

impl Fixture {
    /// The cubic problem in ℝ³ at mass ‖ω‖² on an n-node grid of radius 20.
    pub fn cubic(n: usize) -> Self {
        let grid = make_grid(3, 20.0, n, 1.0).expect("grid");
        let gs = ground_state_omega(&grid).expect("ground state");
        let m = gs.mass;
        Self {
            spec: PowerNonlinearity::new(3, &[(1.0, 4.0)]).expect("cubic"),
            constraint: SphereConstraint::new(m).expect("mass"),
            params: SystemParams::new(1.0, 1.0, -0.5, m, m).expect("params"),
            grid,
            gs,
        }
    }

    /// A smooth profile on the mass sphere that is not critical.
    pub fn profile(&self) -> RadialFunction {
        let u = RadialFunction::from_fn(&self.grid, |r| (-(r * r) / 3.0).exp() * (1.0 + 0.5 * r.sin()));
        normsol::retract(&u, self.constraint.m)
    }

    pub fn system_state(&self) -> SystemState {
        let a = RadialFunction::from_fn(&self.grid, |r| (-(r * r) / 2.0).exp());
        let b = RadialFunction::from_fn(&self.grid, |r| (-(r - 2.0).powi(2)).exp());
        SystemState::normalized(&a, &b, self.params)
    }
}
