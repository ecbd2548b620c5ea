//! Layered configuration: command-line flags over a config file over defaults.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use ddccast::workload::WorkloadConfig;
use ddccast::SchedulerKind;
use serde::{Deserialize, Serialize};

use crate::args::Args;
use crate::CliError;

/// Topology used when neither a flag, the config file nor the environment names one.
pub const BUNDLED_TOPOLOGY: &str = "gscale";
/// Environment variable overriding the default topology path.
pub const TOPOLOGY_ENV: &str = "DDCCAST_TOPOLOGY";

pub const DEFAULT_LAMBDA: f64 = 2.0;
pub const DEFAULT_DESTINATIONS: usize = 3;
pub const DEFAULT_SLOTS: u64 = 500;
pub const DEFAULT_REPEATS: usize = 10;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_DEADLINE_MEAN: f64 = 10.0;
pub const DEFAULT_DEMAND_DIVISOR: f64 = 8.0;

pub const SWEEP_DESTINATIONS: [usize; 5] = [1, 2, 3, 4, 5];
pub const SWEEP_LAMBDAS: [f64; 4] = [0.5, 1.0, 2.0, 4.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sweep {
    /// 1 to 5 destinations at a fixed arrival rate.
    Destinations,
    /// Arrival rates 0.5, 1, 2 and 4 at a fixed destination count.
    Lambda,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Config file contents; keys mirror the long flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub topology: Option<String>,
    pub capacity: Option<f64>,
    pub sweep: Option<Sweep>,
    pub lambda: Option<f64>,
    pub destinations: Option<usize>,
    pub slots: Option<u64>,
    pub repeats: Option<usize>,
    pub seed: Option<u64>,
    pub scheduler: Option<SchedulerKind>,
    pub deadline_mean: Option<f64>,
    pub demand_divisor: Option<f64>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    pub replay: Option<PathBuf>,
}

/// Everything that determines a run's output.
///
/// When sweeping, the swept one of `lambda` and `destinations` is `None`.
/// Both are `None` when replaying a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ResolvedConfig {
    pub topology: String,
    pub capacity: Option<f64>,
    pub sweep: Option<Sweep>,
    pub lambda: Option<f64>,
    pub destinations: Option<usize>,
    pub slots: u64,
    pub repeats: usize,
    pub seed: u64,
    /// `None` runs both schedulers.
    pub scheduler: Option<SchedulerKind>,
    pub deadline_mean: f64,
    pub demand_divisor: f64,
    pub format: Format,
    pub replay: Option<PathBuf>,
}

/// Companion file written next to every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub config: ResolvedConfig,
}

impl Metadata {
    pub fn new(config: ResolvedConfig) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
        }
    }
}

impl From<ResolvedConfig> for FileConfig {
    fn from(c: ResolvedConfig) -> Self {
        Self {
            topology: Some(c.topology),
            capacity: c.capacity,
            sweep: c.sweep,
            lambda: c.lambda,
            destinations: c.destinations,
            slots: Some(c.slots),
            repeats: Some(c.repeats),
            seed: Some(c.seed),
            scheduler: c.scheduler,
            deadline_mean: Some(c.deadline_mean),
            demand_divisor: Some(c.demand_divisor),
            format: Some(c.format),
            out: None,
            trace: None,
            replay: c.replay,
        }
    }
}

/// Reads a TOML config file, or a metadata sidecar when the name ends in `.json`.
pub fn load_file(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config("config", format!("cannot read {}: {e}", path.display())))?;
    if path.extension().is_some_and(|ext| ext == "json") {
        let meta: Metadata = serde_json::from_str(&text)
            .map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))?;
        Ok(meta.config.into())
    } else {
        toml::from_str(&text)
            .map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))
    }
}

/// The resolved config plus where to write results.
#[derive(Debug, Clone, PartialEq)]
pub struct Invocation {
    pub config: ResolvedConfig,
    pub out: Option<PathBuf>,
    pub trace: Option<PathBuf>,
}

/// Layers `args` over `file` over the defaults and checks flag combinations.
///
/// `env_topology` is the value of [`TOPOLOGY_ENV`], if set.
pub fn resolve(
    args: &Args,
    file: FileConfig,
    env_topology: Option<String>,
) -> Result<Invocation, CliError> {
    let sweep = args.sweep.or(file.sweep);
    let mut lambda = args.lambda.or(file.lambda);
    let mut destinations = args.destinations.or(file.destinations);
    let replay = args.replay.clone().or(file.replay);
    let trace = args.trace.clone().or(file.trace);

    let sweep = match sweep {
        Some(Sweep::Destinations) if args.destinations.is_some() => {
            return Err(CliError::usage(
                "--destinations conflicts with --sweep destinations",
            ));
        }
        Some(Sweep::Lambda) if args.lambda.is_some() => {
            return Err(CliError::usage("--lambda conflicts with --sweep lambda"));
        }
        Some(s) => Some(s),
        None if replay.is_none() && lambda.is_none() && destinations.is_none() => {
            Some(Sweep::Destinations)
        }
        None => None,
    };
    match sweep {
        Some(Sweep::Destinations) => {
            lambda.get_or_insert(DEFAULT_LAMBDA);
            destinations = None;
        }
        Some(Sweep::Lambda) => {
            destinations.get_or_insert(DEFAULT_DESTINATIONS);
            lambda = None;
        }
        None if replay.is_some() => {
            lambda = None;
            destinations = None;
        }
        None => {
            lambda.get_or_insert(DEFAULT_LAMBDA);
            destinations.get_or_insert(DEFAULT_DESTINATIONS);
        }
    }

    if replay.is_some() {
        if sweep.is_some() {
            return Err(CliError::usage(
                "--replay takes its workload from the trace; drop --sweep",
            ));
        }
        for (given, flag) in [
            (args.lambda.is_some(), "--lambda"),
            (args.destinations.is_some(), "--destinations"),
            (args.slots.is_some(), "--slots"),
            (args.deadline_mean.is_some(), "--deadline-mean"),
            (args.demand_divisor.is_some(), "--demand-divisor"),
        ] {
            if given {
                return Err(CliError::usage(format!("{flag} conflicts with --replay")));
            }
        }
        if trace.is_some() {
            return Err(CliError::usage("--trace and --replay cannot be combined"));
        }
    }
    if trace.is_some() && sweep.is_some() {
        return Err(CliError::usage(
            "--trace records a single workload; drop --sweep",
        ));
    }

    let config = ResolvedConfig {
        topology: args
            .topology
            .clone()
            .or(file.topology)
            .or(env_topology)
            .unwrap_or_else(|| BUNDLED_TOPOLOGY.to_string()),
        capacity: args.capacity.or(file.capacity),
        sweep,
        lambda,
        destinations,
        slots: args.slots.or(file.slots).unwrap_or(DEFAULT_SLOTS),
        repeats: args.repeats.or(file.repeats).unwrap_or(DEFAULT_REPEATS),
        seed: args.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        scheduler: args.scheduler.or(file.scheduler),
        deadline_mean: args
            .deadline_mean
            .or(file.deadline_mean)
            .unwrap_or(DEFAULT_DEADLINE_MEAN),
        demand_divisor: args
            .demand_divisor
            .or(file.demand_divisor)
            .unwrap_or(DEFAULT_DEMAND_DIVISOR),
        format: args.format.or(file.format).unwrap_or_default(),
        replay,
    };
    if config.repeats == 0 {
        return Err(CliError::config("repeats", "must be at least 1"));
    }
    Ok(Invocation {
        config,
        out: args.out.clone().or(file.out),
        trace,
    })
}

impl ResolvedConfig {
    pub fn schedulers(&self) -> Vec<SchedulerKind> {
        match self.scheduler {
            Some(kind) => vec![kind],
            None => SchedulerKind::ALL.to_vec(),
        }
    }

    /// Every workload the run covers, in sweep order.
    pub fn workloads(&self) -> Vec<WorkloadConfig> {
        let base = WorkloadConfig {
            lambda: self.lambda.unwrap_or(DEFAULT_LAMBDA),
            dest_count: self.destinations.unwrap_or(DEFAULT_DESTINATIONS),
            deadline_mean: self.deadline_mean,
            demand_divisor: self.demand_divisor,
            total_slots: self.slots,
            seed: self.seed,
        };
        match self.sweep {
            Some(Sweep::Destinations) => SWEEP_DESTINATIONS
                .iter()
                .map(|&dest_count| WorkloadConfig { dest_count, ..base })
                .collect(),
            Some(Sweep::Lambda) => SWEEP_LAMBDAS
                .iter()
                .map(|&lambda| WorkloadConfig { lambda, ..base })
                .collect(),
            None => vec![base],
        }
    }
}
