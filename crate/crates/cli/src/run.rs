//! Pipelines behind the subcommands, artifact emission and the run manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use normsol::deform::{flow_integrate, psp_monitor, AugmentedPoint, FlowOutcome, ScalarProblem, SystemProblem};
use normsol::minimax::{admissible_surface_check, boundary_winding, degree_intersection, initial_surface};
use normsol::scalar::{CriticalPointReport, Status};
use normsol::sphere::{random_profile, retract};
use normsol::system::{component_ip, energy_istar, scalar_b_i, system_gradient, validate_solution};
use normsol::{
    gn_ratio, ground_state_omega, mountain_pass_single, surface_minimax, CriticalReport, Functional, RadialFunction,
    SystemState,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{ConfigError, Model, RunConfig};
use crate::json::to_json;

pub const EXIT_CONVERGED: i32 = 0;
pub const EXIT_STALLED: i32 = 2;
pub const EXIT_INVALID_CONFIG: i32 = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    GroundState,
    SolveSingle,
    SolveSystem,
    MinimaxSurface,
    /// Residual report for stored profiles: one CSV for the scalar problem, two for the system.
    Validate { profiles: Vec<PathBuf> },
    GnScan,
    FlowTrace,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GroundState => "ground-state",
            Command::SolveSingle => "solve-single",
            Command::SolveSystem => "solve-system",
            Command::MinimaxSurface => "minimax-surface",
            Command::Validate { .. } => "validate",
            Command::GnScan => "gn-scan",
            Command::FlowTrace => "flow-trace",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: PathBuf,
    pub emit_plot_data: bool,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write {path}: {message}")]
    Io { path: String, message: String },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_INVALID_CONFIG,
            RunError::Io { .. } => 1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Phase {
    pub name: String,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub versions: Vec<(String, String)>,
    pub phases: Vec<Phase>,
    pub files: Vec<FileEntry>,
    pub status: Status,
    pub exit_code: i32,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

struct Emitter {
    dir: PathBuf,
    files: Vec<FileEntry>,
    phases: Vec<Phase>,
}

impl Emitter {
    fn write(&mut self, name: &str, content: &str) -> Result<(), RunError> {
        let path = self.dir.join(name);
        std::fs::write(&path, content)
            .map_err(|e| RunError::Io { path: path.display().to_string(), message: e.to_string() })?;
        self.files.push(FileEntry { path: name.into(), sha256: sha256_hex(content.as_bytes()), bytes: content.len() });
        Ok(())
    }

    fn timed<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.phases.push(Phase { name: name.into(), wall_seconds: t.elapsed().as_secs_f64() });
        out
    }
}

fn status_code(s: Status) -> i32 {
    if s == Status::Converged {
        EXIT_CONVERGED
    } else {
        EXIT_STALLED
    }
}

/// Executes `command` and writes its artifacts and `manifest.json` into
/// `opts.out`. Solver failures produce `diagnostics.json` and a stalled
/// exit code rather than an error.
pub fn run(command: &Command, config: &RunConfig, opts: &RunOptions) -> Result<(RunManifest, i32), RunError> {
    let resolved = config.resolve()?;
    std::fs::create_dir_all(&opts.out)
        .map_err(|e| RunError::Io { path: opts.out.display().to_string(), message: e.to_string() })?;
    // a diagnostics file from an earlier failed run in the same directory would be misleading
    let _ = std::fs::remove_file(opts.out.join("diagnostics.json"));
    let mut em = Emitter { dir: opts.out.clone(), files: Vec::new(), phases: Vec::new() };
    em.write("config.json", &to_json(config))?;
    let outcome = match command {
        Command::GroundState => ground_state(&resolved, &mut em),
        Command::SolveSingle => solve_single(config, &resolved, opts, &mut em),
        Command::SolveSystem => solve_system(config, &resolved, opts, &mut em),
        Command::MinimaxSurface => minimax_surface(&resolved, opts, &mut em),
        Command::Validate { profiles } => validate(config, &resolved, profiles, &mut em),
        Command::GnScan => gn_scan(config, &resolved, &mut em),
        Command::FlowTrace => flow_trace(config, &resolved, &mut em),
    };
    let status = match outcome {
        Ok(s) => s,
        Err(Failure::Io(e)) => return Err(e),
        Err(Failure::Solver(e)) => {
            #[derive(Serialize)]
            struct Diagnostics {
                command: String,
                error: String,
            }
            em.write("diagnostics.json", &to_json(&Diagnostics { command: command.name().into(), error: e.to_string() }))?;
            Status::Stalled
        }
    };
    let exit_code = status_code(status);
    let manifest = RunManifest {
        command: command.name().into(),
        config_hash: sha256_hex(to_json(config).as_bytes()),
        seed: config.seed,
        versions: vec![
            ("normsol".into(), normsol_version().into()),
            ("normsol-cli".into(), env!("CARGO_PKG_VERSION").into()),
        ],
        phases: em.phases.clone(),
        files: em.files.clone(),
        status,
        exit_code,
    };
    let path = opts.out.join("manifest.json");
    std::fs::write(&path, to_json(&manifest))
        .map_err(|e| RunError::Io { path: path.display().to_string(), message: e.to_string() })?;
    Ok((manifest, exit_code))
}

fn normsol_version() -> &'static str {
    // both crates are versioned together in the workspace
    env!("CARGO_PKG_VERSION")
}

enum Failure {
    Io(RunError),
    Solver(normsol::Error),
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        Failure::Io(e)
    }
}

impl From<normsol::Error> for Failure {
    fn from(e: normsol::Error) -> Self {
        Failure::Solver(e)
    }
}

type Step = Result<Status, Failure>;

fn history_csv(history: &[(usize, f64)]) -> String {
    let mut s = String::from("iteration,level\n");
    for (k, v) in history {
        s.push_str(&format!("{k},{v:.16e}\n"));
    }
    s
}

fn ground_state(resolved: &crate::config::Resolved, em: &mut Emitter) -> Step {
    let grid = if resolved.grid.dimension() == 3 {
        resolved.grid.clone()
    } else {
        return Err(normsol::Error::InvalidArgument("the ground state ω lives in dimension 3".into()).into());
    };
    let gs = em.timed("shooting", || ground_state_omega(&grid))?;
    #[derive(Serialize)]
    struct Identities {
        center_value: f64,
        mass: f64,
        gradient_ratio: f64,
        quartic_ratio: f64,
        residuals: [f64; 2],
        grid: normsol::GridSpec,
    }
    let (a, b) = gs.identities;
    let residuals = [(a - 3.0).abs(), (b - 4.0).abs()];
    em.write("omega.csv", &gs.omega.to_csv())?;
    em.write(
        "identities.json",
        &to_json(&Identities {
            center_value: gs.center_value,
            mass: gs.mass,
            gradient_ratio: a,
            quartic_ratio: b,
            residuals,
            grid: normsol::GridSpec::of(&grid),
        }),
    )?;
    Ok(if residuals.iter().all(|r| *r < 1e-3) { Status::Converged } else { Status::Stalled })
}

fn scalar_model(resolved: &crate::config::Resolved) -> Result<(normsol::PowerNonlinearity, normsol::SphereConstraint), Failure> {
    match &resolved.model {
        Model::Scalar { spec, constraint } => Ok((spec.clone(), *constraint)),
        Model::System { .. } => {
            Err(normsol::Error::InvalidArgument("this command needs a scalar configuration".into()).into())
        }
    }
}

fn system_model(resolved: &crate::config::Resolved) -> Result<normsol::SystemParams, Failure> {
    match &resolved.model {
        Model::System { params } => Ok(*params),
        Model::Scalar { .. } => {
            Err(normsol::Error::InvalidArgument("this command needs a system configuration".into()).into())
        }
    }
}

fn solve_single(config: &RunConfig, resolved: &crate::config::Resolved, opts: &RunOptions, em: &mut Emitter) -> Step {
    let (spec, constraint) = scalar_model(resolved)?;
    let report = em.timed("mountain_pass", || {
        mountain_pass_single(&resolved.grid, &constraint, &spec, &config.minimax_config())
    })?;
    em.write("report.json", &to_json(&report))?;
    em.write("history.csv", &history_csv(&report.history))?;
    if let CriticalReport::Scalar(c) = &report.critical {
        em.write("solution.csv", &c.solution.to_csv())?;
    }
    if opts.emit_plot_data {
        em.write("path_profile.csv", &report.profile)?;
    }
    Ok(report.status)
}

fn solve_system(config: &RunConfig, resolved: &crate::config::Resolved, opts: &RunOptions, em: &mut Emitter) -> Step {
    let params = system_model(resolved)?;
    let report = em.timed("surface_minimax", || surface_minimax(&resolved.grid, &params, &config.minimax_config()))?;
    em.write("minimax_report.json", &to_json(&report))?;
    em.write("history.csv", &history_csv(&report.history))?;
    if let CriticalReport::System(s) = &report.critical {
        em.write("system_report.json", &to_json(s))?;
        em.write("u1.csv", &s.state.u1.to_csv())?;
        em.write("u2.csv", &s.state.u2.to_csv())?;
    }
    if opts.emit_plot_data {
        em.write("surface_heatmap.csv", &report.profile)?;
    }
    Ok(report.status)
}

fn minimax_surface(resolved: &crate::config::Resolved, opts: &RunOptions, em: &mut Emitter) -> Step {
    let params = system_model(resolved)?;
    let gs = em.timed("ground_state", || ground_state_omega(&resolved.grid))?;
    let (_, b1) = scalar_b_i(params.m1, params.mu1, &gs);
    let (_, b2) = scalar_b_i(params.m2, params.mu2, &gs);
    let bbar = 0.5 * (b1.max(b2) + b1 + b2);
    let delta = 0.01 * b1.min(b2);
    let c = em.timed("construction", || initial_surface(&params, &gs, delta, 17))?;
    let admissible = admissible_surface_check(&c.surface, b1, b2, bbar)?;
    let zero = em.timed("degree_intersection", || degree_intersection(&c.surface))?;
    let surface = &c.surface;
    let winding = boundary_winding(
        |s, t| {
            let st = surface.at(s, t);
            (component_ip(&st.u1, params.mu1).1, component_ip(&st.u2, params.mu2).1)
        },
        surface.size().0,
        surface.size().1,
    );
    let level = energy_istar(&surface.at(zero.s, zero.t));
    #[derive(Serialize)]
    struct SurfaceSummary {
        b1: f64,
        b2: f64,
        bbar: f64,
        delta: f64,
        nu: f64,
        l: f64,
        admissible: bool,
        boundary_max: f64,
        top_times: Vec<f64>,
        right_times: Vec<f64>,
        winding: i32,
        intersection: normsol::minimax::JointZero,
        intersection_level: f64,
        lower_bound_holds: bool,
    }
    em.write(
        "surface.json",
        &to_json(&SurfaceSummary {
            b1,
            b2,
            bbar,
            delta,
            nu: c.nu,
            l: c.l,
            admissible,
            boundary_max: surface.boundary_max(),
            top_times: c.top_times.clone(),
            right_times: c.right_times.clone(),
            winding,
            intersection: zero,
            intersection_level: level,
            lower_bound_holds: level >= b1 + b2 - 1e-3,
        }),
    )?;
    if opts.emit_plot_data {
        em.write("surface_heatmap.csv", &surface.heatmap_csv())?;
    }
    Ok(if admissible && winding != 0 { Status::Converged } else { Status::Stalled })
}

fn read_profile(grid: &std::sync::Arc<normsol::RadialGrid>, path: &Path) -> Result<RadialFunction, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError::Io { path: path.display().to_string(), message: e.to_string() })?;
    Ok(RadialFunction::from_csv(grid, &text)?)
}

fn validate(config: &RunConfig, resolved: &crate::config::Resolved, profiles: &[PathBuf], em: &mut Emitter) -> Step {
    let tol_grad = config.flow.tol_grad;
    let tol_p = config.flow.tol_pohozaev;
    match &resolved.model {
        Model::Scalar { spec, constraint } => {
            let [p] = profiles else {
                return Err(normsol::Error::InvalidArgument("validate needs one profile for a scalar problem".into()).into());
            };
            let u = read_profile(&resolved.grid, p)?;
            let mut r = CriticalPointReport::evaluate(u, spec, constraint, Status::Flowing)?;
            let ok = r.gradient_dual_norm <= tol_grad && r.relative_pohozaev() <= tol_p;
            r.status = if ok { Status::Converged } else { Status::Stalled };
            em.write("validation.json", &to_json(&r))?;
            Ok(r.status)
        }
        Model::System { params } => {
            let [p1, p2] = profiles else {
                return Err(normsol::Error::InvalidArgument("validate needs two profiles for the system".into()).into());
            };
            let st = SystemState::new(read_profile(&resolved.grid, p1)?, read_profile(&resolved.grid, p2)?, *params)?;
            let (_, _, l1, l2) = system_gradient(&st)?;
            let mut r = validate_solution(&st, l1, l2, energy_istar(&st));
            let ok = r.gradient_dual_norm <= tol_grad && r.relative_pohozaev() <= tol_p && r.passes(1e-3);
            r.status = if ok { Status::Converged } else { Status::Stalled };
            em.write("validation.json", &to_json(&r))?;
            Ok(r.status)
        }
    }
}

fn gn_scan(config: &RunConfig, resolved: &crate::config::Resolved, em: &mut Emitter) -> Step {
    let (spec, _) = scalar_model(resolved)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let factors = [0.5, 0.7071067811865476, 1.0, 1.4142135623730951, 2.0];
    let mut csv = String::from("profile,p,t,ratio\n");
    #[derive(Serialize)]
    struct Spread {
        p: f64,
        max_relative_spread: f64,
    }
    let mut spreads = Vec::new();
    let profiles: Vec<RadialFunction> = (0..5).map(|_| random_profile(&resolved.grid, &mut rng)).collect();
    for term in &spec.terms {
        let mut worst: f64 = 0.0;
        for (k, u) in profiles.iter().enumerate() {
            let mut vals = Vec::new();
            for t in factors {
                let r = gn_ratio(&u.dilated(t), term.p)?;
                csv.push_str(&format!("{k},{:.16e},{t:.16e},{r:.16e}\n", term.p));
                vals.push(r);
            }
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            worst = worst.max((hi - lo) / lo);
        }
        spreads.push(Spread { p: term.p, max_relative_spread: worst });
    }
    em.write("gn_scan.csv", &csv)?;
    em.write("gn_scan.json", &to_json(&spreads))?;
    Ok(Status::Converged)
}

fn flow_trace(config: &RunConfig, resolved: &crate::config::Resolved, em: &mut Emitter) -> Step {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let grid = &resolved.grid;
    let (problem, start): (Box<dyn Functional>, AugmentedPoint) = match &resolved.model {
        Model::Scalar { spec, constraint } => {
            let u = retract(&random_profile(grid, &mut rng), constraint.m);
            // start at the fiber maximum, where the flow has the most to do
            let (t0, _) = normsol::fiber_maximize(&u, spec)?;
            let u = retract(&u.dilated(t0), constraint.m);
            (Box::new(ScalarProblem { spec: spec.clone(), constraint: *constraint }), AugmentedPoint::from_scalar(u))
        }
        Model::System { params } => {
            let u1 = retract(&random_profile(grid, &mut rng), params.m1);
            let u2 = retract(&random_profile(grid, &mut rng), params.m2);
            (Box::new(SystemProblem { params: *params }), AugmentedPoint::lift(vec![u1, u2]))
        }
    };
    let (j0, _) = problem.augmented(start.theta, &start.components);
    let mut flow = config.flow_config(j0);
    // a wide energy window keeps the cutoff at one for the whole trace
    flow.eps_bar = 4.0 * j0.abs().max(1.0);
    let trace = em.timed("flow", || flow_integrate(problem.as_ref(), &start, &flow, &[], config.flow.trace_steps))?;
    let psp = psp_monitor(&trace, &flow)?;
    em.write("flow_trace.csv", &trace.to_csv())?;
    #[derive(Serialize)]
    struct FlowSummary {
        start_level: f64,
        end_level: f64,
        steps: usize,
        outcome: FlowOutcome,
        monotone: bool,
        psp: normsol::deform::PspStatus,
    }
    let monotone = trace.records.windows(2).all(|w| w[1].j <= w[0].j);
    em.write(
        "flow.json",
        &to_json(&FlowSummary {
            start_level: j0,
            end_level: trace.records.last().map_or(j0, |r| r.j),
            steps: trace.records.len() - 1,
            outcome: trace.outcome,
            monotone,
            psp,
        }),
    )?;
    Ok(if monotone && trace.outcome != FlowOutcome::Stalled { Status::Converged } else { Status::Stalled })
}
