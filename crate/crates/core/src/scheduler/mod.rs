//! Admission control, ALAP placement and the per-slot update cycle.

mod alap;
mod report;
mod request;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baseline;
use crate::graph::{self, ForwardingTree, GraphError, Topology};
use crate::timeline::{AuditError, Timeline};
use crate::{Slot, EPS};

pub use alap::{
    admission_check, allocate_alap, pull_back, repush_alap, AdmissionCheck, MAX_REPUSH_PASSES,
};
pub use report::{EventKind, SlotEvent, SlotReport};
pub use request::{RequestError, RequestId, RequestState, TransferRequest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SchedulerKind {
    /// Forwarding trees per P2MP transfer.
    #[serde(rename = "ddccast")]
    Ddccast,
    /// Each destination scheduled as an independent unicast transfer.
    #[serde(rename = "p2p-alap")]
    P2pAlap,
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 2] = [SchedulerKind::Ddccast, SchedulerKind::P2pAlap];

    pub fn as_str(self) -> &'static str {
        match self {
            SchedulerKind::Ddccast => "ddccast",
            SchedulerKind::P2pAlap => "p2p-alap",
        }
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchedulerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ddccast" => Ok(SchedulerKind::Ddccast),
            "p2p-alap" => Ok(SchedulerKind::P2pAlap),
            other => Err(format!(
                "unknown scheduler `{other}` (expected ddccast or p2p-alap)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RejectReason {
    Expired,
    NoRoute(GraphError),
    InsufficientBandwidth { available: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Decision {
    Accepted {
        tree: ForwardingTree,
    },
    Rejected {
        reason: RejectReason,
        tree: Option<ForwardingTree>,
    },
}

impl Decision {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Decision::Accepted { .. })
    }

    pub fn tree(&self) -> Option<&ForwardingTree> {
        match self {
            Decision::Accepted { tree } => Some(tree),
            Decision::Rejected { tree, .. } => tree.as_ref(),
        }
    }
}

/// Running totals. Volumes are per destination: a transfer of `V` to `n`
/// destinations offers `n * V`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SchedulerStats {
    pub offered_requests: u64,
    pub offered_volume: f64,
    pub admitted_requests: u64,
    pub admitted_volume: f64,
    pub rejected_requests: u64,
    pub rejected_volume: f64,
    pub completed_requests: u64,
    /// Source-side volume sent.
    pub dispatched_volume: f64,
    /// Rate times tree edges, summed over dispatched slots.
    pub bandwidth_used: f64,
    pub max_repush_passes: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InvariantViolation {
    #[error(transparent)]
    Calendar(#[from] AuditError),
    #[error("request {0} is active but not admitted")]
    NotAdmitted(RequestId),
    #[error("request {0} has no schedule")]
    MissingSchedule(RequestId),
    #[error("calendar holds a schedule for unknown request {0}")]
    OrphanSchedule(RequestId),
    #[error("request {id}: schedule sums to {scheduled} but residual is {residual}")]
    ResidualMismatch {
        id: RequestId,
        scheduled: f64,
        residual: f64,
    },
    #[error("request {id}: deadline {deadline} not after current slot {now}")]
    Overdue {
        id: RequestId,
        deadline: Slot,
        now: Slot,
    },
}

/// One network's scheduling state; [`Scheduler::tick`] advances it by a slot.
#[derive(Debug, Clone)]
pub struct Scheduler {
    kind: SchedulerKind,
    topology: Arc<Topology>,
    timeline: Timeline,
    active: BTreeMap<RequestId, TransferRequest>,
    stats: SchedulerStats,
}

impl Scheduler {
    pub fn new(topology: Arc<Topology>, kind: SchedulerKind) -> Self {
        let timeline = Timeline::new(topology.capacity());
        Self {
            kind,
            topology,
            timeline,
            active: BTreeMap::new(),
            stats: SchedulerStats::default(),
        }
    }

    pub fn kind(&self) -> SchedulerKind {
        self.kind
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn timeline(&self) -> &Timeline {
        &self.timeline
    }

    pub fn now(&self) -> Slot {
        self.timeline.now()
    }

    pub fn stats(&self) -> &SchedulerStats {
        &self.stats
    }

    /// Admitted, not yet completed requests.
    pub fn active(&self) -> impl Iterator<Item = &TransferRequest> {
        self.active.values()
    }

    pub fn active_count(&self) -> usize {
        self.active.len()
    }

    pub fn request(&self, id: RequestId) -> Option<&TransferRequest> {
        self.active.get(&id)
    }

    /// Selects a tree for a request arriving now, admits it if the tree has
    /// room before the deadline and places it ALAP.
    pub fn admit(&mut self, request: TransferRequest) -> Decision {
        self.admit_with(request, graph::select_tree)
    }

    pub(crate) fn admit_with(
        &mut self,
        mut request: TransferRequest,
        select: fn(&Topology, &TransferRequest, &Timeline) -> Result<ForwardingTree, GraphError>,
    ) -> Decision {
        assert_eq!(
            request.state,
            RequestState::Pending,
            "request {} re-submitted",
            request.id
        );
        assert!(
            !self.active.contains_key(&request.id),
            "duplicate id {}",
            request.id
        );
        let fanout = request.destinations.len() as f64;
        self.stats.offered_requests += 1;
        self.stats.offered_volume += request.volume * fanout;

        let decision = self.decide(&request, select);
        match &decision {
            Decision::Accepted { tree } => {
                let placed = allocate_alap(
                    &mut self.timeline,
                    request.id,
                    tree.clone(),
                    request.deadline,
                    request.volume,
                )
                .total();
                request.state = RequestState::Admitted;
                request.residual = placed;
                request.tree = Some(tree.clone());
                self.stats.admitted_requests += 1;
                self.stats.admitted_volume += request.volume * fanout;
                self.active.insert(request.id, request);
            }
            Decision::Rejected { .. } => {
                self.stats.rejected_requests += 1;
                self.stats.rejected_volume += request.volume * fanout;
            }
        }
        decision
    }

    fn decide(
        &self,
        request: &TransferRequest,
        select: fn(&Topology, &TransferRequest, &Timeline) -> Result<ForwardingTree, GraphError>,
    ) -> Decision {
        if request.deadline <= self.timeline.now() {
            return Decision::Rejected {
                reason: RejectReason::Expired,
                tree: None,
            };
        }
        let tree = match select(&self.topology, request, &self.timeline) {
            Ok(tree) => tree,
            Err(e) => {
                return Decision::Rejected {
                    reason: RejectReason::NoRoute(e),
                    tree: None,
                }
            }
        };
        let check = admission_check(&self.timeline, &tree, request.deadline, request.volume);
        if check.accepted {
            Decision::Accepted { tree }
        } else {
            Decision::Rejected {
                reason: RejectReason::InsufficientBandwidth {
                    available: check.available,
                },
                tree: Some(tree),
            }
        }
    }

    /// Runs one slot: pull-back, re-push, dispatch, then admission of the
    /// requests arriving in the new slot, in the given order.
    pub fn tick(&mut self, arrivals: Vec<TransferRequest>) -> SlotReport {
        pull_back(&mut self.timeline);
        let passes = repush_alap(&mut self.timeline);
        self.stats.max_repush_passes = self.stats.max_repush_passes.max(passes);

        let dispatch = self.timeline.advance_slot();
        let slot = dispatch.slot;
        let mut events = Vec::new();
        for d in &dispatch.dispatched {
            let request = self
                .active
                .get_mut(&d.request)
                .expect("dispatch for unknown request");
            request.residual -= d.rate;
            request.delivered += d.rate;
            self.stats.dispatched_volume += d.rate;
            self.stats.bandwidth_used += d.rate * d.edges as f64;
            events.push(SlotEvent {
                slot,
                request: d.request,
                kind: EventKind::Dispatch,
                value: d.rate,
                edges: d.edges,
            });
        }
        for schedule in dispatch.retired {
            let mut request = self
                .active
                .remove(&schedule.request())
                .expect("retired unknown request");
            debug_assert!(
                request.residual.abs() <= EPS,
                "{} left {}",
                request.id,
                request.residual
            );
            debug_assert!(slot <= request.deadline);
            request.residual = 0.0;
            request.state = RequestState::Completed;
            self.stats.completed_requests += 1;
            events.push(SlotEvent {
                slot,
                request: request.id,
                kind: EventKind::Complete,
                value: request.delivered,
                edges: schedule.tree().len(),
            });
        }

        let arrivals: Vec<TransferRequest> = match self.kind {
            SchedulerKind::Ddccast => arrivals,
            SchedulerKind::P2pAlap => arrivals.into_iter().flat_map(baseline::decompose).collect(),
        };
        for request in arrivals {
            let (id, volume) = (request.id, request.volume);
            let decision = match self.kind {
                SchedulerKind::Ddccast => self.admit(request),
                SchedulerKind::P2pAlap => {
                    baseline::admit_unicast(self, request).expect("decomposed legs are unicast")
                }
            };
            let (kind, edges) = match &decision {
                Decision::Accepted { tree } => (EventKind::Admit, tree.len()),
                Decision::Rejected { tree, .. } => {
                    (EventKind::Reject, tree.as_ref().map_or(0, |t| t.len()))
                }
            };
            events.push(SlotEvent {
                slot,
                request: id,
                kind,
                value: volume,
                edges,
            });
        }
        SlotReport {
            slot,
            events,
            repush_passes: passes,
        }
    }

    /// Full consistency check of requests against the calendar.
    pub fn check_invariants(&self) -> Result<(), InvariantViolation> {
        self.timeline.audit()?;
        let now = self.timeline.now();
        for request in self.active.values() {
            if request.state != RequestState::Admitted || request.tree.is_none() {
                return Err(InvariantViolation::NotAdmitted(request.id));
            }
            if request.deadline <= now {
                return Err(InvariantViolation::Overdue {
                    id: request.id,
                    deadline: request.deadline,
                    now,
                });
            }
            let schedule = self
                .timeline
                .schedule(request.id)
                .ok_or(InvariantViolation::MissingSchedule(request.id))?;
            let scheduled = schedule.total();
            if (scheduled - request.residual).abs() > EPS {
                return Err(InvariantViolation::ResidualMismatch {
                    id: request.id,
                    scheduled,
                    residual: request.residual,
                });
            }
        }
        if let Some(orphan) = self
            .timeline
            .schedules()
            .find(|s| !self.active.contains_key(&s.request()))
        {
            return Err(InvariantViolation::OrphanSchedule(orphan.request()));
        }
        Ok(())
    }
}
