use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lfgp_pipeline::{
    cmd_metrics, cmd_pipeline, cmd_reconstruct, cmd_simulate, cmd_windgen, ErrorKind, PipelineError, Result,
    RunConfig, RunManifest, Stage,
};

/// Wind buffeting simulation and Gaussian-process reconstruction of modal
/// forces from noisy structural responses.
#[derive(Parser, Debug)]
#[command(name = "lfgp", version)]
struct Cli {
    /// TOML run configuration; defaults are used for anything omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed (overrides `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Comma-separated mode indices, e.g. `0,2`.
    #[arg(long, global = true, value_delimiter = ',')]
    modes: Option<Vec<usize>>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthesize turbulence at the load nodes.
    Windgen,
    /// Buffeting loads, modal responses and noisy sensor records.
    Simulate {
        /// Directory written by `windgen`.
        #[arg(long)]
        input: PathBuf,
    },
    /// Train per-mode hyperparameters and predict the modal forces.
    Reconstruct {
        /// Directory written by `simulate`.
        #[arg(long)]
        input: PathBuf,
        /// Reuse hyperparameters from a previous reconstruct manifest.
        #[arg(long)]
        hyperparams: Option<PathBuf>,
    },
    /// Compare predicted with true modal forces.
    Metrics {
        /// Directory written by `simulate`.
        #[arg(long)]
        truth: PathBuf,
        /// Directory written by `reconstruct`.
        #[arg(long)]
        pred: PathBuf,
    },
    /// All stages in sequence.
    Pipeline,
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &cli.out {
        cfg.output.dir = Some(dir.clone());
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<RunManifest> {
    let cfg = load_config(cli)?;
    let out = cfg
        .output
        .dir
        .clone()
        .ok_or_else(|| PipelineError::config(Stage::Config, "no output directory: pass --out or set output.dir"))?;
    let sel = cli.modes.as_deref();
    let out: &Path = &out;
    match &cli.command {
        Command::Windgen => cmd_windgen(&cfg, out),
        Command::Simulate { input } => cmd_simulate(&cfg, input, out),
        Command::Reconstruct { input, hyperparams } => cmd_reconstruct(&cfg, input, out, sel, hyperparams.as_deref()),
        Command::Metrics { truth, pred } => cmd_metrics(&cfg, truth, pred, out, sel),
        Command::Pipeline => cmd_pipeline(&cfg, out, sel),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(m) => {
            let failed = m.failed_modes();
            if failed.is_empty() {
                ExitCode::SUCCESS
            } else {
                for r in m.modes.iter().filter(|r| r.status != "ok") {
                    eprintln!("error: {}", r.error.as_deref().unwrap_or("mode failed"));
                }
                ExitCode::from(ErrorKind::Numerical.exit_code() as u8)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
