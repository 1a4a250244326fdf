//! Batch front end of the `conesheet` library.

mod commands;
mod config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use conesheet::geometry::Cutoff;
use serde_json::json;

use config::RunConfig;

#[derive(Debug, Parser)]
#[command(
    name = "conesheet",
    version,
    about = "Energy scaling experiments for a sheet with a disclination"
)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

/// Flags override the corresponding fields of the config file.
#[derive(Debug, Args)]
struct Overrides {
    /// JSON run configuration; unknown keys are rejected.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    delta: Option<f64>,
    /// Comma-separated thicknesses.
    #[arg(long = "h", global = true, value_delimiter = ',')]
    h_list: Option<Vec<f64>>,
    #[arg(long, global = true)]
    n_radial: Option<usize>,
    #[arg(long, global = true)]
    n_angular: Option<usize>,
    #[arg(long, global = true)]
    max_iterations: Option<usize>,
    #[arg(long, global = true, value_parser = parse_cutoff)]
    cutoff: Option<Cutoff>,
    #[arg(long, short = 'o', global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Energies of the mollified-cone ansatz for every thickness.
    Ansatz,
    /// Minimize from the ansatz (or a snapshot), one thickness after another.
    Minimize {
        #[arg(long)]
        init: Option<PathBuf>,
    },
    /// Parallel minimization over all thicknesses with the scaling fit.
    Sweep,
    /// Curvature and inequality diagnostics of a snapshot.
    Diagnose {
        #[arg(long)]
        snapshot: PathBuf,
    },
    /// Rigid alignment of a snapshot onto the cone.
    Align {
        #[arg(long)]
        snapshot: PathBuf,
    },
    /// Plots and summary from the energy tables in a directory.
    Report {
        /// Directory with the tables; defaults to the output directory.
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

fn parse_cutoff(s: &str) -> Result<Cutoff, String> {
    serde_json::from_value(json!(s))
        .map_err(|_| format!("unknown cutoff {s:?}; expected quintic or septic"))
}

impl Overrides {
    fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.delta {
            c.delta = v;
        }
        if let Some(v) = &self.h_list {
            c.h_list = v.clone();
        }
        if let Some(v) = self.n_radial {
            c.mesh.n_radial = v;
        }
        if let Some(v) = self.n_angular {
            c.mesh.n_angular = v;
        }
        if let Some(v) = self.max_iterations {
            c.optimizer.max_iterations = v;
        }
        if let Some(v) = self.cutoff {
            c.cutoff = v;
        }
        if let Some(v) = &self.output {
            c.output_dir = v.clone();
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        c.validate()?;
        Ok(c)
    }
}

fn run(cli: &Cli, cfg: &RunConfig) -> Result<commands::Artifacts> {
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    let text = serde_json::to_string_pretty(cfg)? + "\n";
    std::fs::write(dir.join("config.json"), text).context("writing config.json")?;
    match &cli.command {
        Command::Ansatz => commands::ansatz(cfg),
        Command::Minimize { init } => commands::minimize_cmd(cfg, init.as_deref()),
        Command::Sweep => commands::sweep_cmd(cfg),
        Command::Diagnose { snapshot } => commands::diagnose(cfg, snapshot),
        Command::Align { snapshot } => commands::align(cfg, snapshot),
        Command::Report { input } => commands::report(cfg, input.as_deref().unwrap_or(dir)),
    }
}

fn kind(err: &anyhow::Error) -> &'static str {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<conesheet::Error>() {
            return match e {
                conesheet::Error::Snapshot { .. } => "snapshot",
                conesheet::Error::Io(_) => "io",
                conesheet::Error::InvalidParams(_)
                | conesheet::Error::InvalidConfig(_)
                | conesheet::Error::InvalidResolution(_) => "invalid_input",
                _ => "numerical",
            };
        }
        if cause.is::<std::io::Error>() {
            return "io";
        }
        if cause.is::<serde_json::Error>() || cause.is::<csv::Error>() {
            return "format";
        }
    }
    "run"
}

fn fail(kind: &str, message: String, code: u8) -> ExitCode {
    eprintln!(
        "{}",
        json!({ "error": { "kind": kind, "message": message } })
    );
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string().trim().to_string(), 2),
    };
    let cfg = match cli.overrides.resolve() {
        Ok(c) => c,
        Err(e) => return fail("config", format!("{e:#}"), 2),
    };
    match run(&cli, &cfg) {
        Ok(files) => {
            println!("{}", json!({ "status": "ok", "artifacts": files }));
            ExitCode::SUCCESS
        }
        Err(e) => fail(kind(&e), format!("{e:#}"), 1),
    }
}
