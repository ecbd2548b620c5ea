use std::path::PathBuf;

use clap::Parser;
use ddccast::SchedulerKind;

use crate::config::{Format, Sweep};

/// Simulates deadline-aware multi-destination transfers on a datacenter WAN
/// and reports bandwidth used and traffic admitted.
///
/// With no arguments, sweeps 1 to 5 destinations at 2 arrivals per slot on
/// the bundled 12-site topology, for both schedulers.
#[derive(Debug, Clone, Default, Parser)]
#[command(name = "ddccast", version)]
pub struct Args {
    /// Topology file (TOML), or `gscale` for the bundled one.
    #[arg(long, value_name = "PATH")]
    pub topology: Option<String>,

    /// Link capacity per direction and slot, overriding the topology's.
    #[arg(long, value_name = "F")]
    pub capacity: Option<f64>,

    /// Mean transfer arrivals per slot.
    #[arg(long, value_name = "F")]
    pub lambda: Option<f64>,

    /// Destinations per transfer.
    #[arg(long, value_name = "N")]
    pub destinations: Option<usize>,

    /// Slots with arrivals; admitted transfers drain afterwards.
    #[arg(long, value_name = "N")]
    pub slots: Option<u64>,

    /// Runs averaged per scenario.
    #[arg(long, value_name = "N")]
    pub repeats: Option<usize>,

    /// Base seed; each run derives its own.
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,

    /// Run only this scheduler instead of both.
    #[arg(long)]
    pub scheduler: Option<SchedulerKind>,

    /// Preset sweep.
    #[arg(long, value_enum)]
    pub sweep: Option<Sweep>,

    /// Mean deadline offset in slots.
    #[arg(long, value_name = "F")]
    pub deadline_mean: Option<f64>,

    /// Volume mean is the deadline offset divided by this.
    #[arg(long, value_name = "F")]
    pub demand_divisor: Option<f64>,

    #[arg(long, value_enum)]
    pub format: Option<Format>,

    /// Result file; a `.meta.json` sidecar is written next to it. Stdout if absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Write the generated workload to this trace file.
    #[arg(long, value_name = "PATH")]
    pub trace: Option<PathBuf>,

    /// Run the workload recorded in this trace file instead of generating one.
    #[arg(long, value_name = "PATH")]
    pub replay: Option<PathBuf>,

    /// Config file (TOML with flag names as keys, or a `.meta.json` sidecar).
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
}
