//! Run configuration: JSON parsing and eager validation.

use std::path::Path;
use std::sync::Arc;

use normsol::scalar::PowerTerm;
use normsol::{
    ground_state_omega, make_grid, validate_growth, FlowConfig, MinimaxConfig, PowerNonlinearity, RadialGrid,
    SphereConstraint, SystemParams,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("{message} (line {line}, column {column})")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(#[from] normsol::Error),
}

/// A mass given as a number or as `"omega_mass"`, the squared L² norm of the
/// ground state ω computed on the run's grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Mass {
    Value(f64),
    Named(NamedMass),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedMass {
    OmegaMass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "problem", rename_all = "snake_case")]
pub enum Problem {
    Scalar {
        dimension: usize,
        terms: Vec<PowerTerm>,
        #[serde(default)]
        positive_part: bool,
        m: Mass,
    },
    System {
        mu1: f64,
        mu2: f64,
        beta: f64,
        m1: Mass,
        m2: Mass,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSettings {
    pub n: usize,
    pub r_max: f64,
    pub grading: f64,
}

impl Default for GridSettings {
    fn default() -> Self {
        Self { n: 4096, r_max: 20.0, grading: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowSettings {
    pub tol_grad: f64,
    pub tol_pohozaev: f64,
    pub tol_energy: f64,
    pub rho: f64,
    pub max_step: f64,
    /// Steps for the flow-trace command.
    pub trace_steps: usize,
}

impl Default for FlowSettings {
    fn default() -> Self {
        Self { tol_grad: 1e-6, tol_pohozaev: 1e-6, tol_energy: 1e-6, rho: 0.1, max_step: 0.5, trace_steps: 200 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MinimaxSettings {
    pub nodes: usize,
    pub max_sweeps: usize,
    pub flow_budget: usize,
    pub sweep_tol: f64,
}

impl Default for MinimaxSettings {
    fn default() -> Self {
        let d = MinimaxConfig::default();
        Self { nodes: d.nodes, max_sweeps: d.max_sweeps, flow_budget: d.flow_budget, sweep_tol: d.sweep_tol }
    }
}

fn default_output() -> String {
    "out".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub problem: Problem,
    #[serde(default)]
    pub grid: GridSettings,
    #[serde(default)]
    pub flow: FlowSettings,
    #[serde(default)]
    pub minimax: MinimaxSettings,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: String,
}

/// A configuration with its grid built and masses resolved.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub grid: Arc<RadialGrid>,
    pub model: Model,
}

#[derive(Debug, Clone)]
pub enum Model {
    Scalar { spec: PowerNonlinearity, constraint: SphereConstraint },
    System { params: SystemParams },
}

impl RunConfig {
    /// The configuration of the acceptance instance of the system:
    /// μ₁ = μ₂ = 1, β = −0.5, m₁ = m₂ = ‖ω‖₂².
    pub fn default_system() -> Self {
        Self {
            problem: Problem::System {
                mu1: 1.0,
                mu2: 1.0,
                beta: -0.5,
                m1: Mass::Named(NamedMass::OmegaMass),
                m2: Mass::Named(NamedMass::OmegaMass),
            },
            grid: GridSettings::default(),
            flow: FlowSettings::default(),
            minimax: MinimaxSettings::default(),
            seed: 0,
            output: default_output(),
        }
    }

    pub fn dimension(&self) -> usize {
        match &self.problem {
            Problem::Scalar { dimension, .. } => *dimension,
            Problem::System { .. } => 3,
        }
    }

    pub fn flow_config(&self, level: f64) -> FlowConfig {
        let mut f = FlowConfig::for_level(level);
        f.tol_grad = self.flow.tol_grad;
        f.tol_pohozaev = self.flow.tol_pohozaev;
        f.tol_energy = self.flow.tol_energy;
        f.rho = self.flow.rho;
        f.max_step = self.flow.max_step;
        f
    }

    pub fn minimax_config(&self) -> MinimaxConfig {
        MinimaxConfig {
            nodes: self.minimax.nodes,
            max_sweeps: self.minimax.max_sweeps,
            flow_budget: self.minimax.flow_budget,
            sweep_tol: self.minimax.sweep_tol,
            rho: self.flow.rho,
            max_step: self.flow.max_step,
            tol_grad: self.flow.tol_grad,
            tol_pohozaev: self.flow.tol_pohozaev,
            tol_energy: self.flow.tol_energy,
            seed: self.seed,
        }
    }

    /// Runs every validation: grid, growth bounds, parameter signs, masses
    /// and tolerances. Builds the grid and, when a mass names ω, the ground state.
    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let cond = |field: &str, condition: String| normsol::Error::Condition { field: field.into(), condition };
        let flow = &self.flow;
        for (name, v) in [
            ("flow.tol_grad", flow.tol_grad),
            ("flow.tol_pohozaev", flow.tol_pohozaev),
            ("flow.tol_energy", flow.tol_energy),
            ("flow.rho", flow.rho),
            ("flow.max_step", flow.max_step),
            ("minimax.sweep_tol", self.minimax.sweep_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(cond(name, format!("{name} must be a positive number, got {v}")).into());
            }
        }
        if self.minimax.nodes < 17 {
            return Err(cond("minimax.nodes", format!("at least 17 nodes are required, got {}", self.minimax.nodes)).into());
        }
        if self.minimax.flow_budget == 0 || self.flow.trace_steps == 0 {
            return Err(cond("minimax.flow_budget", "flow step budgets must be at least 1".into()).into());
        }
        let grid = make_grid(self.dimension(), self.grid.r_max, self.grid.n, self.grid.grading)?;
        let omega_mass = |field: &str| -> Result<f64, ConfigError> {
            if grid.dimension() != 3 {
                return Err(cond(field, "omega_mass is defined for dimension 3 only".into()).into());
            }
            Ok(ground_state_omega(&grid)?.mass)
        };
        let mass = |field: &str, m: Mass| match m {
            Mass::Value(v) => Ok(v),
            Mass::Named(NamedMass::OmegaMass) => omega_mass(field),
        };
        let model = match &self.problem {
            Problem::Scalar { dimension, terms, positive_part, m } => {
                let spec = PowerNonlinearity { dimension: *dimension, terms: terms.clone(), positive_part: *positive_part };
                validate_growth(&spec)?;
                let m = mass("m", *m)?;
                let constraint = SphereConstraint::new(m).map_err(|_| cond("m", format!("mass m must be > 0, got {m}")))?;
                Model::Scalar { spec, constraint }
            }
            Problem::System { mu1, mu2, beta, m1, m2 } => {
                let params = SystemParams::new(*mu1, *mu2, *beta, mass("m1", *m1)?, mass("m2", *m2)?)?;
                Model::System { params }
            }
        };
        Ok(Resolved { grid, model })
    }
}

/// Parses and validates a configuration from JSON text.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(|e| {
        let full = e.to_string();
        // serde_json appends its own "at line L column C"; keep only the message
        let message = match full.rfind(" at line ") {
            Some(k) => full[..k].to_string(),
            None => full,
        };
        ConfigError::Parse { line: e.line(), column: e.column(), message }
    })?;
    cfg.resolve()?;
    Ok(cfg)
}

/// Reads, parses and validates a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integers_are_accepted_as_reals() {
        let c = parse_config(r#"{"problem":"scalar","dimension":3,"terms":[{"a":1,"p":4}],"m":1,"grid":{"n":512}}"#)
            .unwrap();
        assert_eq!(c.grid.n, 512);
        assert_eq!(c.grid.r_max, 20.0);
    }

    #[test]
    fn unknown_problem_is_a_parse_error() {
        let e = parse_config(r#"{"problem":"vector","m":1}"#).unwrap_err();
        assert!(matches!(e, ConfigError::Parse { .. }), "{e}");
    }
}
