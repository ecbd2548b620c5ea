//! Simulation driver and metric accumulation.
//!
//! A run feeds a workload to one scheduler for `total_slots` slots, then keeps
//! ticking without arrivals until every admitted request has completed, so all
//! admitted volume is counted as dispatched.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::graph::Topology;
use crate::scheduler::{
    EventKind, RequestId, Scheduler, SchedulerKind, SlotReport, TransferRequest,
};
use crate::workload::{Trace, TraceRun, WorkloadConfig, WorkloadError, WorkloadGenerator};
use crate::Slot;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error("repeats must be at least 1")]
    NoRepeats,
    #[error("request {0} arrives at slot 0; arrivals start at slot 1")]
    ArrivalAtZero(RequestId),
    #[error("request {0} appears twice in the workload")]
    DuplicateRequest(RequestId),
    #[error("trace has no runs")]
    EmptyTrace,
}

/// One workload paired with one scheduler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub workload: WorkloadConfig,
    pub scheduler: SchedulerKind,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    /// Rate times slots, summed over every slot and edge.
    pub total_bandwidth_used: f64,
    /// Per-destination volume admitted.
    pub total_traffic_admitted: f64,
    /// Per-destination volume offered.
    pub total_traffic_offered: f64,
    /// Scheduled requests admitted; unicast legs count individually.
    pub admitted_count: u64,
    pub rejected_count: u64,
    pub completed_count: u64,
    /// Volume times tree edges over completed requests.
    pub completed_edge_volume: f64,
    /// Slots ticked, drain included.
    pub slots_run: Slot,
    pub max_repush_passes: usize,
    /// Fraction of total edge capacity dispatched, per slot.
    pub utilization: Vec<f64>,
}

impl RunMetrics {
    pub fn admit_ratio(&self) -> f64 {
        ratio(self.total_traffic_admitted, self.total_traffic_offered)
    }
}

fn ratio(admitted: f64, offered: f64) -> f64 {
    if offered > 0.0 {
        admitted / offered
    } else {
        0.0
    }
}

/// Steps one scheduler through a fixed list of arrivals.
#[derive(Debug, Clone)]
pub struct Simulation {
    scheduler: Scheduler,
    pending: BTreeMap<Slot, Vec<TransferRequest>>,
    arrival_horizon: Slot,
    metrics: RunMetrics,
}

impl Simulation {
    /// Arrivals are admitted at their `arrival` slot in the given order.
    /// Arrivals stop after `max(total_slots, last arrival)`.
    pub fn new(
        topology: Arc<Topology>,
        kind: SchedulerKind,
        requests: Vec<TransferRequest>,
        total_slots: Slot,
    ) -> Result<Self, EngineError> {
        let mut pending: BTreeMap<Slot, Vec<TransferRequest>> = BTreeMap::new();
        let mut seen = std::collections::BTreeSet::new();
        for request in requests {
            if request.arrival == 0 {
                return Err(EngineError::ArrivalAtZero(request.id));
            }
            if !seen.insert(request.id) {
                return Err(EngineError::DuplicateRequest(request.id));
            }
            pending.entry(request.arrival).or_default().push(request);
        }
        let last = pending.keys().next_back().copied().unwrap_or(0);
        Ok(Self {
            scheduler: Scheduler::new(topology, kind),
            pending,
            arrival_horizon: total_slots.max(last),
            metrics: RunMetrics::default(),
        })
    }

    pub fn scheduler(&self) -> &Scheduler {
        &self.scheduler
    }

    pub fn is_finished(&self) -> bool {
        self.scheduler.now() >= self.arrival_horizon && self.scheduler.active_count() == 0
    }

    /// Ticks one slot; `None` once arrivals are over and everything has drained.
    pub fn step(&mut self) -> Option<SlotReport> {
        if self.is_finished() {
            return None;
        }
        let slot = self.scheduler.now() + 1;
        let arrivals = self.pending.remove(&slot).unwrap_or_default();
        let report = self.scheduler.tick(arrivals);
        let topology = self.scheduler.topology();
        let capacity = topology.edge_count() as f64 * topology.capacity();
        self.metrics.utilization.push(report.bandwidth() / capacity);
        self.metrics.completed_edge_volume += report
            .events_of(EventKind::Complete)
            .map(|e| e.value * e.edges as f64)
            .sum::<f64>();
        Some(report)
    }

    /// Runs to completion, calling `observe` after every slot.
    pub fn run_with(mut self, mut observe: impl FnMut(&Scheduler, &SlotReport)) -> RunMetrics {
        while let Some(report) = self.step() {
            observe(&self.scheduler, &report);
        }
        self.finish()
    }

    pub fn run(self) -> RunMetrics {
        self.run_with(|_, _| {})
    }

    /// Metrics so far.
    pub fn finish(self) -> RunMetrics {
        let stats = self.scheduler.stats();
        RunMetrics {
            total_bandwidth_used: stats.bandwidth_used,
            total_traffic_admitted: stats.admitted_volume,
            total_traffic_offered: stats.offered_volume,
            admitted_count: stats.admitted_requests,
            rejected_count: stats.rejected_requests,
            completed_count: stats.completed_requests,
            slots_run: self.scheduler.now(),
            max_repush_passes: stats.max_repush_passes,
            ..self.metrics
        }
    }
}

/// Generates the scenario's workload with its own seed and runs it.
pub fn run(topology: &Arc<Topology>, scenario: &Scenario) -> Result<RunMetrics, EngineError> {
    let requests = WorkloadGenerator::new(scenario.workload, topology.node_count())?.generate_all();
    Ok(Simulation::new(
        topology.clone(),
        scenario.scheduler,
        requests,
        scenario.workload.total_slots,
    )?
    .run())
}

/// Seed of repeat `repeat` of `workload` under `base_seed`.
///
/// The workload's own seed and the scheduler are not hashed, so every
/// scheduler sees the same arrivals and adding scenarios leaves the seeds of
/// existing ones unchanged.
pub fn derive_seed(base_seed: u64, workload: &WorkloadConfig, repeat: usize) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(b"ddccast-run-v1");
    hasher.update(base_seed.to_le_bytes());
    hasher.update(workload.lambda.to_bits().to_le_bytes());
    hasher.update((workload.dest_count as u64).to_le_bytes());
    hasher.update(workload.deadline_mean.to_bits().to_le_bytes());
    hasher.update(workload.demand_divisor.to_bits().to_le_bytes());
    hasher.update(workload.total_slots.to_le_bytes());
    hasher.update((repeat as u64).to_le_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

/// Averaged metrics of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub scheduler: SchedulerKind,
    pub lambda: f64,
    pub dest_count: usize,
    pub slots: Slot,
    pub repeats: usize,
    pub seed: u64,
    pub total_bandwidth_used: f64,
    pub total_traffic_admitted: f64,
    pub total_traffic_offered: f64,
    pub admit_ratio: f64,
}

impl ExperimentRow {
    fn from_runs(scenario: &Scenario, seed: u64, runs: &[RunMetrics]) -> Self {
        let n = runs.len() as f64;
        let mean = |f: fn(&RunMetrics) -> f64| runs.iter().map(f).sum::<f64>() / n;
        let admitted = mean(|m| m.total_traffic_admitted);
        let offered = mean(|m| m.total_traffic_offered);
        Self {
            scheduler: scenario.scheduler,
            lambda: scenario.workload.lambda,
            dest_count: scenario.workload.dest_count,
            slots: scenario.workload.total_slots,
            repeats: runs.len(),
            seed,
            total_bandwidth_used: mean(|m| m.total_bandwidth_used),
            total_traffic_admitted: admitted,
            total_traffic_offered: offered,
            admit_ratio: ratio(admitted, offered),
        }
    }
}

fn sort_rows(rows: &mut [ExperimentRow]) {
    rows.sort_by(|a, b| {
        a.lambda
            .total_cmp(&b.lambda)
            .then(a.dest_count.cmp(&b.dest_count))
            .then(a.slots.cmp(&b.slots))
            .then(a.scheduler.cmp(&b.scheduler))
    });
}

/// Runs every scenario `repeats` times in parallel and averages each.
///
/// Rows are sorted by (lambda, destinations, slots, scheduler).
pub fn run_experiment(
    topology: &Arc<Topology>,
    scenarios: &[Scenario],
    repeats: usize,
    base_seed: u64,
) -> Result<Vec<ExperimentRow>, EngineError> {
    if repeats == 0 {
        return Err(EngineError::NoRepeats);
    }
    for scenario in scenarios {
        scenario.workload.validate(topology.node_count())?;
    }
    let jobs: Vec<(usize, usize)> = (0..scenarios.len())
        .flat_map(|s| (0..repeats).map(move |r| (s, r)))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(s, r)| {
            let mut scenario = scenarios[s];
            scenario.workload.seed = derive_seed(base_seed, &scenario.workload, r);
            run(topology, &scenario)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows: Vec<ExperimentRow> = scenarios
        .iter()
        .zip(results.chunks(repeats))
        .map(|(scenario, runs)| ExperimentRow::from_runs(scenario, base_seed, runs))
        .collect();
    sort_rows(&mut rows);
    Ok(rows)
}

/// Records the arrivals `run_experiment` would generate for `workload`.
pub fn record_trace(
    topology: &Topology,
    workload: &WorkloadConfig,
    repeats: usize,
    base_seed: u64,
) -> Result<Trace, EngineError> {
    if repeats == 0 {
        return Err(EngineError::NoRepeats);
    }
    let runs = (0..repeats)
        .map(|r| {
            let mut config = *workload;
            config.seed = derive_seed(base_seed, workload, r);
            let requests = WorkloadGenerator::new(config, topology.node_count())?.generate_all();
            Ok(TraceRun::record(r, config.seed, &requests, topology))
        })
        .collect::<Result<Vec<_>, EngineError>>()?;
    Ok(Trace {
        topology: topology.name().to_string(),
        workload: *workload,
        runs,
    })
}

/// Runs every trace run under each scheduler and averages per scheduler.
pub fn replay_trace(
    topology: &Arc<Topology>,
    trace: &Trace,
    schedulers: &[SchedulerKind],
    base_seed: u64,
) -> Result<Vec<ExperimentRow>, EngineError> {
    if trace.runs.is_empty() {
        return Err(EngineError::EmptyTrace);
    }
    let requests = trace
        .runs
        .iter()
        .map(|run| run.requests(topology))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = schedulers
        .par_iter()
        .map(|&kind| {
            let runs = requests
                .iter()
                .map(|reqs| {
                    Ok(Simulation::new(
                        topology.clone(),
                        kind,
                        reqs.clone(),
                        trace.workload.total_slots,
                    )?
                    .run())
                })
                .collect::<Result<Vec<_>, EngineError>>()?;
            let scenario = Scenario {
                workload: trace.workload,
                scheduler: kind,
            };
            Ok(ExperimentRow::from_runs(&scenario, base_seed, &runs))
        })
        .collect::<Result<Vec<_>, EngineError>>()?;
    sort_rows(&mut rows);
    Ok(rows)
}
