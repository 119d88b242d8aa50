use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use trackcast::ingest::{generate_synthetic, read_csv, write_csv};
use trackcast::persistence::write_report;
use trackcast::pipeline::{
    format_run_summary, format_sweep_summary, run_pipeline, run_sweep, write_run_outputs,
    EnsembleChoice, ModelName, RunConfig, RunOverrides,
};
use trackcast::Error;

#[derive(Parser)]
#[command(name = "trackcast", version, about = "Track height forecasting pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic track recording as CSV.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Preprocess, train the selected models and write report.json plus model files.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Comma-separated subset of lr,arima,lstm,gru,cnn.
        #[arg(long, value_delimiter = ',')]
        models: Option<Vec<String>>,
        /// none, bagging or boosting.
        #[arg(long)]
        ensemble: Option<String>,
        /// Fit a least-squares combiner on the validation set.
        #[arg(long)]
        stack: bool,
        #[arg(long)]
        filter_proportion: Option<f64>,
    },
    /// Train one model per discard proportion and write a sweep report.
    FilterSweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0,0.2,0.5,0.8")]
        proportions: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) | Error::IllPosed(_) => 2,
        Error::Io { .. }
        | Error::Parse { .. }
        | Error::Schema(_)
        | Error::Format(_)
        | Error::Integrity(_)
        | Error::UnsupportedVersion { .. } => 3,
        Error::Numeric(_) | Error::Diverged { .. } => 4,
    }
}

fn configure_threads() -> Result<(), Error> {
    let Ok(value) = std::env::var("TRACKCAST_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("TRACKCAST_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("cannot size thread pool: {e}")))
}

/// Runs the command; `Ok(Some(err))` means outputs were written but a model failed.
fn execute(cmd: Command) -> Result<Option<Error>, Error> {
    match cmd {
        Command::Synth { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let table = generate_synthetic(&cfg.synth)?;
            write_csv(&table, &out)?;
            println!("wrote {} rows x {} columns to {}", table.n_rows(), table.n_cols(), out.display());
            Ok(None)
        }
        Command::Run {
            config,
            data,
            out_dir,
            models,
            ensemble,
            stack,
            filter_proportion,
        } => {
            let mut cfg = RunConfig::load(&config)?;
            let overrides = RunOverrides {
                models: models
                    .map(|m| m.iter().map(|s| s.parse::<ModelName>()).collect())
                    .transpose()?,
                ensemble: ensemble.map(|e| e.parse::<EnsembleChoice>()).transpose()?,
                stack,
                filter_proportion,
            };
            cfg.apply(&overrides);
            cfg.validate()?;
            let table = read_csv(&data, &cfg.schema)?;
            let outcome = run_pipeline(&table, &cfg)?;
            write_run_outputs(&outcome, &out_dir)?;
            print!("{}", format_run_summary(&outcome.report));
            for w in &outcome.report.warnings {
                eprintln!("warning: {w}");
            }
            Ok(outcome.failure)
        }
        Command::FilterSweep {
            config,
            data,
            proportions,
            out,
        } => {
            let cfg = RunConfig::load(&config)?;
            let table = read_csv(&data, &cfg.schema)?;
            let outcome = run_sweep(&table, &cfg, &proportions)?;
            write_report(&outcome.report, &out)?;
            println!("model: {}", outcome.report.model);
            print!("{}", format_sweep_summary(&outcome.report));
            Ok(outcome.failure)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| execute(cli.command));
    match result {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(e)) | Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
