use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use measure_flow::config::{Experiment, Scenario, ValidateSpec};
use measure_flow::experiments::{self, norm_row};
use measure_flow::io::{self, fmt_g17};

/// Transport equations on signed measures: solvers, sensitivities and
/// dual-norm diagnostics.
#[derive(Debug, Parser)]
#[command(name = "measure-flow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Worker threads for independent experiment cells.
    #[arg(long, global = true, env = "MEASURE_FLOW_THREADS")]
    threads: Option<usize>,

    /// Override the Hölder exponent of the scenario.
    #[arg(long, global = true)]
    alpha: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the experiment named in the scenario file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Check the invariant suite on the scenario's model (exit 2 on failure).
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Print `flat,z_lower,z_upper,tv` of the initial measure or of a CSV measure.
    Norms {
        #[arg(long)]
        config: PathBuf,
        /// Particle CSV (`x0,…,weight`) to use instead of the initial measure.
        #[arg(long)]
        measure: Option<PathBuf>,
    },
    /// Evaluate the sweep objective over the configured `h` range.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn load(path: &Path, alpha: Option<f64>) -> Result<Scenario> {
    let mut s = Scenario::load(path)?;
    if let Some(a) = alpha {
        s.set_alpha(a)?;
    }
    Ok(s)
}

fn report(outcome: &experiments::Outcome, out: &Path) -> ExitCode {
    println!("wrote {}", out.join("summary.json").display());
    if outcome.failed {
        eprintln!("validation failed: some margin is below {}", experiments::MARGIN_TOL);
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}

fn execute(cli: Cli) -> Result<ExitCode> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Run { config, out } => {
            let s = load(&config, cli.alpha)?;
            let outcome = experiments::run(&s, &out)?;
            Ok(report(&outcome, &out))
        }
        Command::Validate { config, out } => {
            let mut s = load(&config, cli.alpha)?;
            if !matches!(s.experiment, Experiment::Validate(_)) {
                s.experiment = Experiment::Validate(ValidateSpec::default());
            }
            let outcome = experiments::run(&s, &out)?;
            Ok(report(&outcome, &out))
        }
        Command::Sweep { config, out } => {
            let s = load(&config, cli.alpha)?;
            if !matches!(s.experiment, Experiment::Sweep(_)) {
                bail!("{} has no sweep experiment block", config.display());
            }
            let outcome = experiments::run(&s, &out)?;
            Ok(report(&outcome, &out))
        }
        Command::Norms { config, measure } => {
            let s = load(&config, cli.alpha)?;
            let mu = match measure {
                Some(p) => io::read_measure(&p, s.dim)?,
                None => s.mu0.clone(),
            };
            let row = norm_row(&mu, s.alpha)?;
            println!("flat,z_lower,z_upper,tv");
            println!("{}", row.map(fmt_g17).join(","));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
