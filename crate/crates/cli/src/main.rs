//! `psonn` command line: train, evaluate, sweep and compare.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 data or I/O error,
//! 3 training failure. Diagnostics go to stderr, reports to stdout and to
//! files under the run's output directory.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use psonn_core::metrics;
use psonn_core::runner::{self, ModelDocument, RunError, Schedule};

#[derive(Debug, Parser)]
#[command(
    name = "psonn",
    version,
    about = "Heart attack classification with swarm-trained neural networks"
)]
struct Cli {
    /// Run independent models one after another instead of in parallel.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train and evaluate the model described by a TOML config.
    Train { config: PathBuf },
    /// Score a saved model.json on the folds its config produces.
    Evaluate { config: PathBuf, model: PathBuf },
    /// Train one PSONN per iteration count and tabulate the results.
    Sweep {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = runner::DEFAULT_SWEEP)]
        epochs: Vec<usize>,
    },
    /// Train all five models on one dataset and rank them.
    Compare {
        dataset: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "runs/compare")]
        out: PathBuf,
    },
}

fn schedule(sequential: bool) -> Schedule {
    if sequential {
        Schedule::Sequential
    } else {
        Schedule::Parallel
    }
}

fn execute(cli: Cli) -> Result<(), RunError> {
    let schedule = schedule(cli.sequential);
    match cli.command {
        Command::Train { config } => {
            let cfg = runner::parse_config(&config)?;
            let out = runner::run_experiment_with(&cfg, schedule)?;
            print!("{}", runner::render_run_report(&out.result));
            log::info!("artifacts written to {}", cfg.output_dir.display());
        }
        Command::Evaluate { config, model } => {
            let cfg = runner::parse_config(&config)?;
            let doc = ModelDocument::load(&model)?;
            if doc.kind != cfg.kind() {
                return Err(RunError::Usage(format!(
                    "model file holds a {} model, config describes {}",
                    doc.kind,
                    cfg.kind()
                )));
            }
            let eval = runner::evaluate_saved(&cfg, &doc)?;
            let mut text = String::from("=== Evaluation on training set ===\n\n");
            text.push_str(&metrics::render_report(&eval.train));
            text.push_str("\n=== Evaluation on test set ===\n\n");
            text.push_str(&metrics::render_report(&eval.test));
            fs::create_dir_all(&cfg.output_dir)
                .and_then(|()| fs::write(cfg.output_dir.join("evaluation.txt"), &text))
                .map_err(|source| RunError::Io {
                    path: cfg.output_dir.join("evaluation.txt"),
                    source,
                })?;
            print!("{text}");
        }
        Command::Sweep { config, epochs } => {
            let cfg = runner::parse_config(&config)?;
            let sweep = runner::epoch_sweep(&cfg, &epochs, schedule)?;
            print!("{}", runner::render_sweep_table(&sweep));
        }
        Command::Compare { dataset, seed, out } => {
            let cmp = runner::compare_models(&dataset, seed, &out, schedule)?;
            print!("{}", runner::render_comparison(&cmp));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
