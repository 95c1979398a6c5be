use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nldd_core::acceptance;
use nldd_core::harness::{self, ExperimentRun, Overrides, EXPERIMENTS, MANIFEST_FILE};
use nldd_core::Error;

/// Nonlinear Dirichlet-Neumann experiments.
#[derive(Parser)]
#[command(name = "nldd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the experiments.
    List,
    /// Run an experiment and write its CSVs and manifest.
    Run {
        experiment: String,
        /// Mesh sizes (comma-separated or repeated).
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        h: Option<Vec<f64>>,
        /// Relaxation parameters (comma-separated or repeated).
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        theta: Option<Vec<f64>>,
        /// Nonlinearity strength in nu(u) = 1 + alpha u^2.
        #[arg(long)]
        alpha: Option<f64>,
        /// Output directory [default: results/<experiment>].
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay a saved manifest.
    Rerun {
        manifest: PathBuf,
        /// Output directory [default: the manifest's directory].
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the acceptance criteria.
    Check,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            let line = serde_json::json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::List => {
            for (name, description) in EXPERIMENTS {
                println!("{name:<22} {description}");
            }
        }
        Command::Run { experiment, h, theta, alpha, out } => {
            let run = harness::run_experiment(&experiment, &Overrides { h, theta, alpha })?;
            let dir = out.unwrap_or_else(|| PathBuf::from("results").join(&experiment));
            report(&run, &dir)?;
        }
        Command::Rerun { manifest, out } => {
            let m = harness::read_manifest(&manifest)?;
            let run = harness::rerun(&m)?;
            let dir = match out {
                Some(d) => d,
                None => manifest.parent().map(PathBuf::from).unwrap_or_default(),
            };
            report(&run, &dir)?;
        }
        Command::Check => {
            let mut all = true;
            for &(name, f, limit) in acceptance::CRITERIA.iter() {
                let r = acceptance::run_criterion(name, f, limit);
                println!("{}", r.line());
                all &= r.passed;
            }
            if !all {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn report(run: &ExperimentRun, dir: &std::path::Path) -> Result<(), Error> {
    harness::write_run(run, dir)?;
    for s in &run.manifest.streams {
        let status = match (&s.failure, s.iterations) {
            (Some(f), _) => format!("failed: {f}"),
            (None, Some(k)) => format!("converged in {k}"),
            (None, None) => "not converged".into(),
        };
        println!("{:<48} {status}", s.stream);
    }
    println!("wrote {}", dir.join(MANIFEST_FILE).display());
    Ok(())
}
