//! Command-line experiment runner.
//!
//! Resolves flags, a config file and defaults into one [`ResolvedConfig`],
//! runs the requested scenarios and writes a CSV or JSON table together with a
//! metadata sidecar from which the table can be regenerated.

pub mod args;
pub mod config;
pub mod emit;

use std::ffi::OsString;
use std::io::Write;
use std::sync::Arc;

use anyhow::Context;
use clap::error::ErrorKind;
use clap::Parser;
use ddccast::engine::{self, EngineError, ExperimentRow, Scenario};
use ddccast::workload::{Trace, WorkloadError};
use ddccast::Topology;
use thiserror::Error;

pub use args::Args;
pub use config::{FileConfig, Format, Invocation, Metadata, ResolvedConfig, Sweep};

/// The bundled twelve-site topology.
pub const GSCALE_TOPO: &str = include_str!("../topologies/gscale.topo");

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid {field}: {reason}")]
    Config { field: String, reason: String },
    #[error("{0:#}")]
    Runtime(#[from] anyhow::Error),
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError::Usage(message.into())
    }

    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// 1 for usage and configuration problems, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl From<WorkloadError> for CliError {
    fn from(e: WorkloadError) -> Self {
        match e {
            WorkloadError::Invalid { field, reason } => CliError::config(field, reason),
            other => CliError::config("replay", other.to_string()),
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Workload(w) => w.into(),
            EngineError::NoRepeats => CliError::config("repeats", "must be at least 1"),
            other => CliError::Runtime(other.into()),
        }
    }
}

pub fn load_topology(config: &ResolvedConfig) -> Result<Topology, CliError> {
    let topology = if config.topology == config::BUNDLED_TOPOLOGY {
        Topology::from_toml_str(GSCALE_TOPO).expect("bundled topology is valid")
    } else {
        Topology::load(&config.topology).map_err(|e| CliError::config("topology", e.to_string()))?
    };
    match config.capacity {
        Some(c) => topology
            .with_capacity(c)
            .map_err(|e| CliError::config("capacity", e.to_string())),
        None => Ok(topology),
    }
}

/// Runs the configured scenarios, recording the workload to `trace` if given.
pub fn execute(inv: &Invocation) -> Result<Vec<ExperimentRow>, CliError> {
    let config = &inv.config;
    let topology = Arc::new(load_topology(config)?);
    let schedulers = config.schedulers();

    if let Some(path) = &config.replay {
        let trace = Trace::load(path)
            .map_err(|e| CliError::config("replay", format!("{}: {e}", path.display())))?;
        return Ok(engine::replay_trace(
            &topology,
            &trace,
            &schedulers,
            config.seed,
        )?);
    }

    let workloads = config.workloads();
    for w in &workloads {
        w.validate(topology.node_count())?;
    }
    if let Some(path) = &inv.trace {
        let trace = engine::record_trace(&topology, &workloads[0], config.repeats, config.seed)?;
        trace
            .save(path)
            .with_context(|| format!("writing trace {}", path.display()))?;
    }
    let scenarios: Vec<Scenario> = workloads
        .iter()
        .flat_map(|&workload| {
            schedulers.iter().map(move |&scheduler| Scenario {
                workload,
                scheduler,
            })
        })
        .collect();
    Ok(engine::run_experiment(
        &topology,
        &scenarios,
        config.repeats,
        config.seed,
    )?)
}

/// Parses `argv`, runs, and writes results; returns the process exit code.
pub fn run_cli(
    argv: impl IntoIterator<Item = OsString>,
    env_topology: Option<String>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32 {
    let args = match Args::try_parse_from(argv) {
        Ok(args) => args,
        Err(e) => {
            let help = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let text = e.render().to_string();
            if help {
                let _ = write!(stdout, "{text}");
                return 0;
            }
            let _ = write!(stderr, "{text}");
            return 1;
        }
    };
    match run_args(&args, env_topology, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn run_args(
    args: &Args,
    env_topology: Option<String>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let file = match &args.config {
        Some(path) => config::load_file(path)?,
        None => FileConfig::default(),
    };
    let inv = config::resolve(args, file, env_topology)?;
    let meta = Metadata::new(inv.config.clone());
    let meta_json = serde_json::to_string_pretty(&meta).expect("metadata serializes") + "\n";
    let _ = writeln!(
        stderr,
        "resolved config: {}",
        serde_json::to_string(&inv.config).expect("config serializes")
    );

    let rows = execute(&inv)?;
    let text = emit::render(&rows, inv.config.format);
    match &inv.out {
        Some(path) => {
            std::fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
            let sidecar = emit::sidecar_path(path);
            std::fs::write(&sidecar, meta_json)
                .with_context(|| format!("writing {}", sidecar.display()))?;
        }
        None => stdout
            .write_all(text.as_bytes())
            .context("writing results to stdout")?,
    }
    Ok(())
}
