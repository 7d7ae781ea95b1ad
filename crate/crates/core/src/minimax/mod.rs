//! Minimax drivers: the mountain pass over paths for the single equation and
//! the two-parameter minimax over surfaces for the system.

mod degree;
mod lmm;
mod path;
mod surface;

pub use degree::{boundary_winding, degree_intersection, find_joint_zero, JointZero};
pub use lmm::{local_minimax, LocalMinimax};
pub use path::{
    admissible_path_check, dilation_path, initial_dilation_path, mountain_pass_single, path_pohozaev_crossing, reparametrize, PathCrossing,
    PathOnSphere,
};
pub use surface::{
    admissible_surface_check, initial_surface, joint_dilation_time, surface_minimax, SurfaceConstruction,
    SurfaceOnProduct,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deform::{flow_integrate, project_retract, AugmentedPoint, FlowConfig, Functional};
use crate::error::Result;
use crate::grid::RadialFunction;
use crate::scalar::{CriticalPointReport, Status};
use crate::system::SystemReport;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimaxConfig {
    /// Nodes along a path, or along each side of a surface.
    pub nodes: usize,
    pub max_sweeps: usize,
    /// Flow steps per node per sweep.
    pub flow_budget: usize,
    /// Sweeps stop once a sweep lowers the level by less than this fraction.
    pub sweep_tol: f64,
    pub rho: f64,
    pub max_step: f64,
    pub tol_grad: f64,
    pub tol_pohozaev: f64,
    pub tol_energy: f64,
    pub seed: u64,
}

impl Default for MinimaxConfig {
    fn default() -> Self {
        Self {
            nodes: 17,
            max_sweeps: 30,
            flow_budget: 4,
            sweep_tol: 1e-4,
            rho: 0.1,
            max_step: 0.5,
            tol_grad: 1e-6,
            tol_pohozaev: 1e-6,
            tol_energy: 1e-6,
            seed: 0,
        }
    }
}

impl MinimaxConfig {
    /// The flow configuration for one sweep at `level`, with ε̄ small enough
    /// that nodes at or below `frozen_max` cannot move.
    pub fn flow_for(&self, level: f64, frozen_max: f64) -> FlowConfig {
        let mut f = FlowConfig::for_level(level);
        let gap = 0.5 * (level - frozen_max);
        if gap > 0.0 {
            f.eps_bar = f.eps_bar.min(gap);
        }
        f.rho = self.rho;
        f.max_step = self.max_step;
        f.tol_grad = self.tol_grad;
        f.tol_pohozaev = self.tol_pohozaev;
        f.tol_energy = self.tol_energy;
        f
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CriticalReport {
    Scalar(CriticalPointReport),
    System(SystemReport),
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimaxReport {
    /// The critical value reached by the refinement.
    pub level: f64,
    /// Index of the node carrying the final path or surface maximum.
    pub maximizer: usize,
    /// (sweep, maximum over nodes) after each deformation sweep; non-increasing.
    pub history: Vec<(usize, f64)>,
    pub critical: CriticalReport,
    pub status: Status,
    /// Named reference values (b₀, b₁, b₂, b̄, intersection level, ...).
    pub diagnostics: Vec<(String, f64)>,
    /// CSV of the final path profile (t,I,P) or surface heatmap (s,t,I,P1,P2).
    #[serde(skip)]
    pub profile: String,
}

impl MinimaxReport {
    pub fn diagnostic(&self, name: &str) -> Option<f64> {
        self.diagnostics.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }
}

/// One deformation sweep: every node is lifted, flowed with the shared
/// configuration and projected back. Nodes the cutoffs freeze are returned
/// unchanged, bit for bit.
pub(crate) fn sweep<F: Functional>(
    problem: &F,
    nodes: &[Vec<RadialFunction>],
    config: &FlowConfig,
    budget: usize,
) -> Result<Vec<Vec<RadialFunction>>> {
    let masses = problem.masses();
    nodes
        .par_iter()
        .map(|comps| {
            let start = AugmentedPoint::lift(comps.clone());
            let trace = flow_integrate(problem, &start, config, &[], budget)?;
            if trace.records.len() == 1 {
                Ok(comps.clone())
            } else {
                Ok(project_retract(&trace.end, &masses))
            }
        })
        .collect()
}

/// Index and value of the largest entry.
pub(crate) fn argmax(values: &[f64]) -> (usize, f64) {
    values.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc })
}
