//! Synthetic P2MP request generation.
//!
//! Per slot the number of arrivals is Poisson(`lambda`). Each request picks a
//! uniform source and `dest_count` distinct uniform destinations, a deadline
//! offset drawn from an exponential with mean `deadline_mean` (rounded up to
//! whole slots, at least one) and a volume drawn from an exponential with mean
//! `offset / demand_divisor`.
//!
//! Randomness is ChaCha8 seeded from the run seed, with the slot index as the
//! stream id, so every slot's draws are independent of every other slot's.

use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{NodeId, Topology};
use crate::scheduler::{RequestId, TransferRequest};
use crate::{Slot, EPS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadConfig {
    /// Mean arrivals per slot.
    pub lambda: f64,
    /// Destinations per request.
    pub dest_count: usize,
    pub deadline_mean: f64,
    pub demand_divisor: f64,
    /// Slots with arrivals.
    pub total_slots: u64,
    pub seed: u64,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        Self {
            lambda: 2.0,
            dest_count: 3,
            deadline_mean: 10.0,
            demand_divisor: 8.0,
            total_slots: 500,
            seed: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("invalid workload `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("trace references unknown node `{0}`")]
    UnknownNode(String),
    #[error("trace record {transfer} is invalid: {reason}")]
    BadRecord { transfer: u64, reason: String },
    #[error("trace I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("trace format: {0}")]
    Format(#[from] serde_json::Error),
}

fn invalid(field: &'static str, reason: impl Into<String>) -> WorkloadError {
    WorkloadError::Invalid {
        field,
        reason: reason.into(),
    }
}

impl WorkloadConfig {
    pub fn validate(&self, node_count: usize) -> Result<(), WorkloadError> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(invalid(
                "lambda",
                format!("must be finite and >= 0, got {}", self.lambda),
            ));
        }
        if self.dest_count == 0 || self.dest_count + 1 > node_count {
            return Err(invalid(
                "destinations",
                format!(
                    "must be between 1 and {} for a {node_count}-node topology, got {}",
                    node_count.saturating_sub(1),
                    self.dest_count
                ),
            ));
        }
        if !(self.deadline_mean.is_finite() && self.deadline_mean > 0.0) {
            return Err(invalid(
                "deadline_mean",
                format!("must be > 0, got {}", self.deadline_mean),
            ));
        }
        if !(self.demand_divisor.is_finite() && self.demand_divisor > 0.0) {
            return Err(invalid(
                "demand_divisor",
                format!("must be > 0, got {}", self.demand_divisor),
            ));
        }
        if self.total_slots == 0 {
            return Err(invalid("slots", "must be at least 1"));
        }
        Ok(())
    }
}

/// The generator for `slot` of a run seeded with `seed`.
pub fn slot_rng(seed: u64, slot: Slot) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(slot);
    rng
}

/// Draws the requests arriving at `slot`, numbering transfers from `next_transfer`.
pub fn generate_slot_arrivals<R: Rng + ?Sized>(
    config: &WorkloadConfig,
    node_count: usize,
    slot: Slot,
    rng: &mut R,
    next_transfer: &mut u64,
) -> Vec<TransferRequest> {
    if config.lambda == 0.0 {
        return Vec::new();
    }
    let count = Poisson::new(config.lambda)
        .expect("validated lambda")
        .sample(rng) as u64;
    let deadline_dist = Exp::new(1.0 / config.deadline_mean).expect("validated deadline mean");
    (0..count)
        .map(|_| {
            let source = rng.random_range(0..node_count);
            let destinations = index::sample(rng, node_count - 1, config.dest_count)
                .into_iter()
                .map(|i| NodeId(if i >= source { i + 1 } else { i } as u32))
                .collect();
            let offset = (deadline_dist.sample(rng).ceil() as u64).max(1);
            let demand_mean = offset as f64 / config.demand_divisor;
            let volume = Exp::new(1.0 / demand_mean)
                .expect("positive demand mean")
                .sample(rng)
                .max(EPS);
            let id = RequestId::new(*next_transfer);
            *next_transfer += 1;
            TransferRequest::new(
                id,
                NodeId(source as u32),
                destinations,
                volume,
                slot + offset,
                slot,
            )
            .expect("generated request is valid")
        })
        .collect()
}

/// Stateful per-run generator; transfer ids increase across slots.
#[derive(Debug, Clone)]
pub struct WorkloadGenerator {
    config: WorkloadConfig,
    node_count: usize,
    next_transfer: u64,
}

impl WorkloadGenerator {
    pub fn new(config: WorkloadConfig, node_count: usize) -> Result<Self, WorkloadError> {
        config.validate(node_count)?;
        Ok(Self {
            config,
            node_count,
            next_transfer: 0,
        })
    }

    pub fn config(&self) -> &WorkloadConfig {
        &self.config
    }

    pub fn slot_arrivals(&mut self, slot: Slot) -> Vec<TransferRequest> {
        let mut rng = slot_rng(self.config.seed, slot);
        generate_slot_arrivals(
            &self.config,
            self.node_count,
            slot,
            &mut rng,
            &mut self.next_transfer,
        )
    }

    /// Every arrival of the run, slots `1..=total_slots`.
    pub fn generate_all(mut self) -> Vec<TransferRequest> {
        (1..=self.config.total_slots)
            .flat_map(|slot| self.slot_arrivals(slot))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub transfer: u64,
    pub arrival: Slot,
    pub deadline: Slot,
    pub volume: f64,
    pub source: String,
    pub destinations: Vec<String>,
}

impl TraceRecord {
    pub fn from_request(request: &TransferRequest, topology: &Topology) -> Self {
        Self {
            transfer: request.id.transfer,
            arrival: request.arrival,
            deadline: request.deadline,
            volume: request.volume,
            source: topology.node_name(request.source).to_string(),
            destinations: request
                .destinations
                .iter()
                .map(|&d| topology.node_name(d).to_string())
                .collect(),
        }
    }

    pub fn to_request(&self, topology: &Topology) -> Result<TransferRequest, WorkloadError> {
        let node = |name: &String| {
            topology
                .node_id(name)
                .ok_or_else(|| WorkloadError::UnknownNode(name.clone()))
        };
        let destinations = self
            .destinations
            .iter()
            .map(node)
            .collect::<Result<_, _>>()?;
        TransferRequest::new(
            RequestId::new(self.transfer),
            node(&self.source)?,
            destinations,
            self.volume,
            self.deadline,
            self.arrival,
        )
        .map_err(|e| WorkloadError::BadRecord {
            transfer: self.transfer,
            reason: e.to_string(),
        })
    }
}

/// The arrivals of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRun {
    pub repeat: usize,
    pub seed: u64,
    pub requests: Vec<TraceRecord>,
}

/// A recorded workload that can be replayed against any scheduler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub topology: String,
    pub workload: WorkloadConfig,
    pub runs: Vec<TraceRun>,
}

impl Trace {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), WorkloadError> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, WorkloadError> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

impl TraceRun {
    pub fn record(
        repeat: usize,
        seed: u64,
        requests: &[TransferRequest],
        topology: &Topology,
    ) -> Self {
        Self {
            repeat,
            seed,
            requests: requests
                .iter()
                .map(|r| TraceRecord::from_request(r, topology))
                .collect(),
        }
    }

    pub fn requests(&self, topology: &Topology) -> Result<Vec<TransferRequest>, WorkloadError> {
        self.requests
            .iter()
            .map(|r| r.to_request(topology))
            .collect()
    }
}
