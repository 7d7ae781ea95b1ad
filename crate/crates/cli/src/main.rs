use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use normsol_cli::config::{load_config, ConfigError, RunConfig};
use normsol_cli::run::{run, Command, RunOptions, EXIT_INVALID_CONFIG};

#[derive(Parser)]
#[command(name = "normsol", version, about = "Normalized solutions of NLS equations and systems")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Grid intervals.
    #[arg(long, global = true)]
    grid_n: Option<usize>,
    #[arg(long, global = true)]
    r_max: Option<f64>,
    /// Sets the gradient, Pohozaev and energy tolerances together.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Also write path profiles and surface heatmaps.
    #[arg(long, global = true)]
    emit_plot_data: bool,
    /// Worker threads for node-parallel sweeps.
    #[arg(long, global = true, env = "NORMSOL_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Sub {
    /// Shoot the ground state ω of −Δω + ω = ω³ in ℝ³.
    GroundState,
    /// Mountain-pass solution of the scalar problem.
    SolveSingle,
    /// Minimax solution of the system over a surface.
    SolveSystem,
    /// Build the initial surface and report its degree intersection.
    MinimaxSurface,
    /// Recompute residuals of stored profiles.
    Validate {
        #[arg(long = "profile", required = true)]
        profiles: Vec<PathBuf>,
    },
    /// Gagliardo–Nirenberg ratios under dilation of random profiles.
    GnScan,
    /// Record a deformation-flow trajectory.
    FlowTrace,
}

fn config_for(common: &Common, command: &Sub) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &common.config {
        Some(path) => load_config(path)?,
        None if matches!(command, Sub::GroundState | Sub::SolveSystem | Sub::MinimaxSurface) => {
            RunConfig::default_system()
        }
        None => {
            return Err(ConfigError::Invalid(normsol::Error::InvalidArgument(
                "this command needs --config".into(),
            )))
        }
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(n) = common.grid_n {
        cfg.grid.n = n;
    }
    if let Some(r) = common.r_max {
        cfg.grid.r_max = r;
    }
    if let Some(t) = common.tol {
        cfg.flow.tol_grad = t;
        cfg.flow.tol_pohozaev = t;
        cfg.flow.tol_energy = t;
    }
    if let Some(out) = &common.out {
        cfg.output = out.display().to_string();
    }
    cfg.resolve()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.common.threads.filter(|&n| n > 0) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let cfg = match config_for(&cli.common, &cli.command) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INVALID_CONFIG as u8);
        }
    };
    let command = match cli.command {
        Sub::GroundState => Command::GroundState,
        Sub::SolveSingle => Command::SolveSingle,
        Sub::SolveSystem => Command::SolveSystem,
        Sub::MinimaxSurface => Command::MinimaxSurface,
        Sub::Validate { profiles } => Command::Validate { profiles },
        Sub::GnScan => Command::GnScan,
        Sub::FlowTrace => Command::FlowTrace,
    };
    let opts = RunOptions { out: PathBuf::from(&cfg.output), emit_plot_data: cli.common.emit_plot_data };
    match run(&command, &cfg, &opts) {
        Ok((manifest, code)) => {
            eprintln!("{}: {:?}, {} files in {}", manifest.command, manifest.status, manifest.files.len(), opts.out.display());
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
