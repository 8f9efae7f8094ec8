//! Config-driven experiment runner.
//!
//! `heisflow <subcommand> [--config <file>] [--key value ...] --out <dir>`
//!
//! Exit codes: 0 when every check passes, 2 on invalid configuration,
//! 3 on a failed check or a numerical error.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use commands::{output_dir, Failure, Subcommand};
use config::{split_args, ConfigError, RunConfig, Source};
use manifest::{Recorder, Status};

const WORKERS_ENV: &str = "HEISFLOW_WORKERS";

#[derive(Parser, Debug)]
#[command(name = "heisflow", version, about = "Spectral flows, ground states and stability diagnostics")]
struct Cli {
    #[arg(value_enum)]
    subcommand: Subcommand,
    /// Sectioned `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run directory; created if missing.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides as `--key value`, `--key=value` or `key=value`.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    overrides: Vec<String>,
}

fn configure(cli: Cli) -> Result<(RunConfig, PathBuf, usize), ConfigError> {
    let mut inv = split_args(&cli.overrides)?;
    let file = inv.config.take().or(cli.config);
    let mut cfg = RunConfig::load(file.as_deref(), &inv.overrides)?;
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        cfg.set("run.workers", v, Source::Env)?;
    }
    let workers = match cfg.opt_usize("run.workers")? {
        Some(0) => return Err(ConfigError::Invalid("run.workers must be at least 1".into())),
        Some(w) => w,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let out = output_dir(inv.out.or(cli.out))?;
    Ok((cfg, out, workers))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let cmd = cli.subcommand;
    let (cfg, out, workers) = match configure(cli) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("heisflow: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global() {
        log::warn!("worker pool already initialised: {e}");
    }
    let mut rec = Recorder::new(&out, cmd.name(), &cfg, workers);
    match commands::run(cmd, &cfg, &mut rec) {
        Ok(()) => {}
        Err(Failure::Config(e)) => {
            eprintln!("heisflow: {e}");
            return ExitCode::from(2);
        }
        Err(Failure::Numerical { stage, source }) => {
            eprintln!("heisflow: {stage}: {source}");
            rec.error(&stage, source.to_string());
        }
    }
    match rec.finish() {
        Ok(m) => {
            if let Some(check) = &m.failing_check {
                eprintln!("heisflow: failing check `{check}`");
            }
            if m.status == Status::Pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            }
        }
        Err(e) => {
            eprintln!("heisflow: cannot write manifest: {e}");
            ExitCode::from(3)
        }
    }
}
