use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use kgxbench_bench::{run, Mode, RunOptions, Settings};

#[derive(Parser)]
#[command(name = "kgxbench", version, about = "Benchmark link-prediction explainers with forward simulatability")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Agreement of the simulatability protocol with ground-truth labels.
    Validation(RunArgs),
    /// Average FSV and FSV distribution of explanation methods.
    Comparison(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Setup CSV [default: <workdir>/<command>.csv]
    setup: Option<PathBuf>,
    /// Working directory for artifacts, the run report and metrics.json.
    #[arg(long, default_value = ".")]
    workdir: PathBuf,
    /// Directory holding one sub-directory per KG [default: <workdir>/data]
    #[arg(long)]
    data_root: Option<PathBuf>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    max_parallel: u64,
    /// Replaces every seed (training, explanation, evaluation).
    #[arg(long)]
    seed_override: Option<u64>,
    /// Verifier name: mock or remote.
    #[arg(long, default_value = "mock")]
    verifier: String,
    /// Chat-completion endpoint of the remote verifier.
    #[arg(long)]
    verifier_url: Option<String>,
    /// Sampled hyperparameter configs; 0 trains with the base config.
    #[arg(long, default_value_t = 4)]
    tune_budget: usize,
    #[arg(long)]
    epochs: Option<usize>,
    /// Largest filtered rank of a test triple kept as a prediction.
    #[arg(long, default_value_t = 1.0)]
    rank_threshold: f64,
    #[arg(long, default_value_t = 100)]
    max_predictions: usize,
}

impl RunArgs {
    fn options(&self, mode: Mode) -> RunOptions {
        let mut options = RunOptions::new(&self.workdir, mode);
        if let Some(setup) = &self.setup {
            options.setup = setup.clone();
        }
        if let Some(root) = &self.data_root {
            options.data_root = root.clone();
        }
        options.max_parallel = self.max_parallel as usize;
        options.seed_override = self.seed_override;
        let mut settings = Settings {
            tune_budget: self.tune_budget,
            rank_threshold: self.rank_threshold,
            max_predictions: self.max_predictions,
            verifier: self.verifier.clone(),
            verifier_url: self.verifier_url.clone(),
            ..Settings::default()
        };
        if let Some(epochs) = self.epochs {
            settings.hyper_params.epochs = epochs;
        }
        options.settings = settings;
        options
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (mode, args) = match &cli.command {
        Command::Validation(a) => (Mode::Validation, a),
        Command::Comparison(a) => (Mode::Comparison, a),
    };
    match execute(mode, args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            let usage = e.downcast_ref::<kgxbench_bench::BenchError>().is_some_and(|b| b.is_usage());
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}

fn execute(mode: Mode, args: &RunArgs) -> anyhow::Result<ExitCode> {
    if args.rank_threshold < 1.0 || args.max_predictions == 0 {
        eprintln!("error: --rank-threshold must be >= 1 and --max-predictions >= 1");
        return Ok(ExitCode::from(2));
    }
    let options = args.options(mode);
    let outcome = match run(mode, &options) {
        Ok(o) => o,
        Err(e) if e.is_usage() => {
            eprintln!("error: {e}");
            eprintln!("usage: kgxbench {mode} [SETUP] [--workdir DIR] (see --help)");
            return Ok(ExitCode::from(2));
        }
        Err(e) => return Err(e).context("workflow failed"),
    };
    print!("{}", outcome.summary_table());
    println!(
        "{} tasks: {} executed, {} cached; metrics in {}",
        outcome.report.records.len(),
        outcome.report.executed(),
        outcome.report.cache_hits(),
        outcome.metrics_path.display()
    );
    Ok(if outcome.failed() { ExitCode::from(1) } else { ExitCode::SUCCESS })
}
