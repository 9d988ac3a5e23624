//! Batch front end: curves, point predictions, simulation, coverage and
//! quantile-regression fits driven by one JSON config.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use crate::config::RunConfig;
pub use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "syspred",
    version,
    about = "Predict coherent system failure times from early failures"
)]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides `seed` in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output CSV; stdout when absent. A `<out>.meta.json` sidecar is written next to it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads, 0 for one per core.
    #[arg(long, env = "PREDICT_THREADS", global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Median, mean and prediction bands over the grid.
    Curves,
    /// Quantiles and bands at one conditioning point.
    Predict {
        #[arg(long)]
        t1: Option<f64>,
        #[arg(long)]
        t2: Option<f64>,
        /// Survival levels to invert; repeat or separate with commas.
        #[arg(long, value_delimiter = ',')]
        w: Vec<f64>,
    },
    /// Draw component lifetimes and system lifetimes.
    Simulate {
        #[arg(long)]
        size: Option<usize>,
    },
    /// Plug-in coverage experiment.
    Coverage {
        #[arg(long, value_delimiter = ',')]
        k: Vec<usize>,
        #[arg(long)]
        replications: Option<usize>,
    },
    /// Fit quantile and least-squares lines to two columns of a CSV.
    Fitqr {
        #[arg(long)]
        sample: Option<PathBuf>,
        #[arg(long)]
        x_col: Option<String>,
        #[arg(long)]
        y_col: Option<String>,
        #[arg(long, value_delimiter = ',')]
        taus: Vec<f64>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Curves => "curves",
            Command::Predict { .. } => "predict",
            Command::Simulate { .. } => "simulate",
            Command::Coverage { .. } => "coverage",
            Command::Fitqr { .. } => "fitqr",
        }
    }
}

/// Loads the config and applies command-line overrides.
pub fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_path(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.clone());
    }
    match &cli.command {
        Command::Curves => {}
        Command::Predict { t1, t2, w } => {
            if t1.is_some() {
                cfg.given.t1 = *t1;
            }
            if t2.is_some() {
                cfg.given.t2 = *t2;
            }
            if !w.is_empty() {
                cfg.w = w.clone();
            }
        }
        Command::Simulate { size } => {
            if size.is_some() {
                cfg.size = *size;
            }
        }
        Command::Coverage { k, replications } => {
            let spec = cfg
                .coverage
                .as_mut()
                .ok_or_else(|| CliError::Config("missing field `coverage`".into()))?;
            if !k.is_empty() {
                spec.k = k.clone();
            }
            if let Some(r) = replications {
                spec.replications = *r;
            }
        }
        Command::Fitqr {
            sample,
            x_col,
            y_col,
            taus,
        } => {
            if sample.is_some() {
                cfg.sample = sample.clone();
            }
            if x_col.is_some() {
                cfg.x_col = x_col.clone();
            }
            if y_col.is_some() {
                cfg.y_col = y_col.clone();
            }
            if !taus.is_empty() {
                cfg.taus = taus.clone();
            }
        }
    }
    Ok(cfg)
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = resolve(cli)?;
    let out = match &cli.command {
        Command::Curves => commands::curves(&cfg)?,
        Command::Predict { .. } => commands::predict(&cfg)?,
        Command::Simulate { .. } => commands::simulate_cmd(&cfg)?,
        Command::Coverage { .. } => commands::coverage(&cfg)?,
        Command::Fitqr { .. } => commands::fitqr(&cfg)?,
    };
    let mut meta = json!({ "command": cli.command.name(), "seed": cfg.seed });
    if let (Value::Object(m), Value::Object(extra)) = (&mut meta, out.meta) {
        m.extend(extra);
    }
    output::emit(&out.table, cfg.out.as_deref(), meta)
}

/// Sizes the global rayon pool; `0` leaves the default.
pub fn init_threads(threads: usize) -> Result<(), CliError> {
    if threads == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("PREDICT_THREADS: {e}")))
}
