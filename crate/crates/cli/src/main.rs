//! `pilotwave`: runs figure presets, scenario files and the self-test.
//!
//! Exit codes: 0 success, 1 failed check under `--strict`, 2 usage or config
//! error, 3 numerical abort.

mod config;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use output::Artifacts;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical abort: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "pilotwave", version, about = "Pilot-wave trajectories, ensembles and bound checks")]
struct Cli {
    /// Scenario file (TOML) merged over the command's preset.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `scenario.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides `scenario.out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Exit with status 1 if any check fails.
    #[arg(long, global = true)]
    strict: bool,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Density, velocity, Q and acceleration of a 1-D state on a grid.
    FieldSample,
    /// Single trajectories, optionally with a de Broglie reference and perturbed Bohm runs.
    Trajectory,
    /// Sample and evolve an ensemble; writes snapshots and diagnostics.
    Ensemble,
    /// Scan a + b/x^2 for a unit-oscillator superposition.
    AsymptoticBound,
    /// Phase-space volume of a small parcel under the Bohm or classical force.
    Liouville,
    /// Blob run for one expanding-space field mode.
    FieldMode,
    /// Figure presets.
    Figures {
        #[arg(value_enum)]
        figure: Figure,
    },
    /// Run the reproduction criteria.
    Selftest {
        /// Run only this criterion (1-13).
        #[arg(long)]
        criterion: Option<u8>,
    },
    /// Describe output columns, or print a preset scenario file.
    Describe {
        /// Print this preset (command or figure name) instead.
        #[arg(long)]
        preset: Option<String>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Figure {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
}

impl Command {
    fn scenario(&self) -> &'static str {
        match self {
            Command::FieldSample => "field-sample",
            Command::Trajectory => "trajectory",
            Command::Ensemble => "ensemble",
            Command::AsymptoticBound => "asymptotic-bound",
            Command::Liouville => "liouville",
            Command::FieldMode => "field-mode",
            Command::Figures { figure: Figure::Fig1 } => "fig1",
            Command::Figures { figure: Figure::Fig2 } => "fig2",
            Command::Figures { figure: Figure::Fig3 } => "fig3",
            Command::Figures { figure: Figure::Fig4 } => "fig4",
            Command::Selftest { .. } => "selftest",
            Command::Describe { .. } => "describe",
        }
    }
}

fn execute(cli: &Cli) -> Result<bool, CliError> {
    if let Command::Describe { preset } = &cli.command {
        match preset {
            Some(name) => {
                let (_, text) = config::load(name, None)?;
                print!("{text}");
            }
            None => print!("{}", output::COLUMNS),
        }
        return Ok(true);
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }

    let name = cli.command.scenario();
    let user = match &cli.config {
        Some(path) => Some((path.display().to_string(), std::fs::read_to_string(path)?)),
        None => None,
    };
    let (mut cfg, _) = config::load(name, user.as_ref().map(|(p, t)| (p.as_str(), t.as_str())))?;
    if let Some(seed) = cli.seed {
        cfg.scenario.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.scenario.out = out.clone();
    }
    let canonical = toml::to_string(&cfg).map_err(|e| CliError::Config(e.to_string()))?;

    let mut art = Artifacts::create(&cfg.scenario.out)?;
    let mut aborted = false;
    match &cli.command {
        Command::FieldSample => run::field_sample(&cfg, &mut art)?,
        Command::Trajectory | Command::Figures { figure: Figure::Fig4 } => run::trajectory(&cfg, &mut art)?,
        Command::Ensemble | Command::Figures { figure: Figure::Fig2 | Figure::Fig3 } => run::ensemble(&cfg, &mut art)?,
        Command::AsymptoticBound | Command::Figures { figure: Figure::Fig1 } => run::asymptotic_bound(&cfg, &mut art)?,
        Command::Liouville => run::liouville(&cfg, &mut art)?,
        Command::FieldMode => run::field_mode(&cfg, &mut art)?,
        Command::Selftest { criterion } => aborted = run::selftest(*criterion, cfg.scenario.seed, &mut art)?,
        Command::Describe { .. } => unreachable!("handled above"),
    }
    let art = art.finish(&cfg.scenario.name, name, cfg.scenario.seed, &canonical)?;
    if !matches!(cli.command, Command::Selftest { .. }) {
        for c in &art.checks {
            println!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
    }
    println!(
        "wrote {} and manifest.json to {}",
        art.file_names().collect::<Vec<_>>().join(", "),
        art.dir().display()
    );
    if aborted {
        return Err(CliError::Numerical("at least one criterion aborted".into()));
    }
    Ok(art.all_passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) if cli.strict => ExitCode::from(1),
        Ok(false) => {
            eprintln!("some checks failed (use --strict to turn this into exit status 1)");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("pilotwave: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
