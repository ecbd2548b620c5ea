//! Slotted bandwidth calendar.
//!
//! Holds the aggregate rate reserved on every directed edge for every future
//! slot together with the per-request schedules that produced it. Storage is
//! sparse: only `(edge, slot)` pairs with a reservation exist in the maps.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::RangeInclusive;

use serde::Serialize;
use thiserror::Error;

use crate::graph::{EdgeId, ForwardingTree};
use crate::scheduler::RequestId;
use crate::{Slot, EPS};

/// Aggregate entries at or below this are dropped as rounding residue.
const DUST: f64 = 1e-12;

/// The per-slot rates assigned to one request over its tree.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocationSchedule {
    request: RequestId,
    tree: ForwardingTree,
    deadline: Slot,
    rates: BTreeMap<Slot, f64>,
}

impl AllocationSchedule {
    pub fn request(&self) -> RequestId {
        self.request
    }

    pub fn tree(&self) -> &ForwardingTree {
        &self.tree
    }

    pub fn deadline(&self) -> Slot {
        self.deadline
    }

    pub fn rates(&self) -> &BTreeMap<Slot, f64> {
        &self.rates
    }

    pub fn rate_at(&self, slot: Slot) -> f64 {
        self.rates.get(&slot).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.rates.values().sum()
    }

    /// Earliest slot strictly after `slot` carrying an allocation.
    pub fn next_after(&self, slot: Slot) -> Option<Slot> {
        self.rates.range(slot + 1..).next().map(|(&s, _)| s)
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }
}

/// One request's share of a dispatched slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Dispatch {
    pub request: RequestId,
    pub rate: f64,
    /// Edge count of the request's tree; the slot consumes `rate * edges` bandwidth.
    pub edges: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotDispatch {
    pub slot: Slot,
    pub dispatched: Vec<Dispatch>,
    /// Schedules with nothing left to send, removed from the calendar.
    pub retired: Vec<AllocationSchedule>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AuditError {
    #[error("edge {edge} slot {slot}: stored {stored} but schedules sum to {expected}")]
    Inconsistent {
        edge: EdgeId,
        slot: Slot,
        stored: f64,
        expected: f64,
    },
    #[error("edge {edge} slot {slot}: allocation {alloc} exceeds capacity {capacity}")]
    OverCapacity {
        edge: EdgeId,
        slot: Slot,
        alloc: f64,
        capacity: f64,
    },
    #[error("request {request}: slot {slot} outside its window ({now}, {deadline}]")]
    OutsideWindow {
        request: RequestId,
        slot: Slot,
        now: Slot,
        deadline: Slot,
    },
    #[error("request {request}: negative rate {rate} at slot {slot}")]
    NegativeRate {
        request: RequestId,
        slot: Slot,
        rate: f64,
    },
}

#[derive(Debug, Clone)]
pub struct Timeline {
    capacity: f64,
    now: Slot,
    alloc: BTreeMap<EdgeId, BTreeMap<Slot, f64>>,
    schedules: BTreeMap<RequestId, AllocationSchedule>,
}

impl Timeline {
    pub fn new(capacity: f64) -> Self {
        assert!(capacity > 0.0 && capacity.is_finite());
        Self {
            capacity,
            now: 0,
            alloc: BTreeMap::new(),
            schedules: BTreeMap::new(),
        }
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    /// The current (already dispatched) slot.
    pub fn now(&self) -> Slot {
        self.now
    }

    /// Last slot of the active window: the latest deadline of any schedule.
    pub fn horizon(&self) -> Slot {
        self.schedules
            .values()
            .map(|s| s.deadline)
            .max()
            .unwrap_or(self.now)
            .max(self.now)
    }

    pub fn allocated(&self, edge: EdgeId, slot: Slot) -> f64 {
        self.alloc
            .get(&edge)
            .and_then(|m| m.get(&slot))
            .copied()
            .unwrap_or(0.0)
    }

    /// Total rate reserved on `edge` across `slots`.
    pub fn load(&self, edge: EdgeId, slots: RangeInclusive<Slot>) -> f64 {
        self.alloc
            .get(&edge)
            .map(|m| m.range(slots).map(|(_, r)| r).sum())
            .unwrap_or(0.0)
    }

    /// Spare rate common to every tree edge at `slot`, clamped at zero.
    pub fn available_on_tree(&self, tree: &ForwardingTree, slot: Slot) -> f64 {
        debug_assert!(slot > self.now, "slot {slot} is not in the future");
        tree.edges()
            .iter()
            .map(|&e| self.capacity - self.allocated(e, slot))
            .fold(self.capacity, f64::min)
            .max(0.0)
    }

    pub fn available_sum(&self, tree: &ForwardingTree, slots: RangeInclusive<Slot>) -> f64 {
        slots.map(|t| self.available_on_tree(tree, t)).sum()
    }

    pub fn schedule(&self, request: RequestId) -> Option<&AllocationSchedule> {
        self.schedules.get(&request)
    }

    pub fn schedules(&self) -> impl Iterator<Item = &AllocationSchedule> {
        self.schedules.values()
    }

    /// Registers an empty schedule for `request` over `tree`.
    pub fn open_schedule(&mut self, request: RequestId, tree: ForwardingTree, deadline: Slot) {
        assert!(deadline > self.now, "deadline {deadline} already passed");
        let prev = self.schedules.insert(
            request,
            AllocationSchedule {
                request,
                tree,
                deadline,
                rates: BTreeMap::new(),
            },
        );
        assert!(prev.is_none(), "request {request} already has a schedule");
    }

    /// Adds `rate` at `slot` on every edge of the request's tree.
    ///
    /// Panics on oversubscription or a slot outside the request's window;
    /// both are scheduler bugs rather than user errors.
    pub fn reserve(&mut self, request: RequestId, slot: Slot, rate: f64) {
        assert!(rate >= 0.0, "negative reservation {rate}");
        if rate == 0.0 {
            return;
        }
        let schedule = self
            .schedules
            .get_mut(&request)
            .unwrap_or_else(|| panic!("request {request} has no schedule"));
        assert!(
            slot > self.now && slot <= schedule.deadline,
            "slot {slot} outside window ({}, {}] of request {request}",
            self.now,
            schedule.deadline
        );
        *schedule.rates.entry(slot).or_insert(0.0) += rate;
        for &edge in schedule.tree.edges() {
            let cell = self
                .alloc
                .entry(edge)
                .or_default()
                .entry(slot)
                .or_insert(0.0);
            *cell += rate;
            assert!(
                *cell <= self.capacity + EPS,
                "edge {edge} slot {slot} oversubscribed: {} > {}",
                *cell,
                self.capacity
            );
        }
    }

    /// Removes the request's whole allocation at `slot`, returning it.
    pub fn release(&mut self, request: RequestId, slot: Slot) -> f64 {
        let Some(schedule) = self.schedules.get_mut(&request) else {
            return 0.0;
        };
        let Some(rate) = schedule.rates.remove(&slot) else {
            return 0.0;
        };
        let edges = schedule.tree.edges().to_vec();
        for edge in edges {
            self.subtract(edge, slot, rate);
        }
        rate
    }

    /// Moves `amount` of the request's allocation from one slot to another.
    pub fn shift(&mut self, request: RequestId, from: Slot, to: Slot, amount: f64) {
        let schedule = self.schedules.get_mut(&request).expect("unknown request");
        let Entry::Occupied(mut cell) = schedule.rates.entry(from) else {
            panic!("request {request} has nothing at slot {from}");
        };
        let have = *cell.get();
        assert!(
            amount <= have + EPS,
            "moving {amount} of {have} at slot {from}"
        );
        let amount = amount.min(have);
        if have - amount <= 0.0 {
            cell.remove();
        } else {
            *cell.get_mut() = have - amount;
        }
        let edges = schedule.tree.edges().to_vec();
        for edge in edges {
            self.subtract(edge, from, amount);
        }
        self.reserve(request, to, amount);
    }

    fn subtract(&mut self, edge: EdgeId, slot: Slot, rate: f64) {
        let Some(slots) = self.alloc.get_mut(&edge) else {
            return;
        };
        if let Entry::Occupied(mut cell) = slots.entry(slot) {
            *cell.get_mut() -= rate;
            if *cell.get() <= DUST {
                cell.remove();
            }
        }
        if slots.is_empty() {
            self.alloc.remove(&edge);
        }
    }

    /// Moves to the next slot and hands out its reservations.
    ///
    /// Schedules left with no future allocation are retired.
    pub fn advance_slot(&mut self) -> SlotDispatch {
        self.now += 1;
        let slot = self.now;
        let mut dispatched = Vec::new();
        for schedule in self.schedules.values_mut() {
            if let Some(rate) = schedule.rates.remove(&slot) {
                dispatched.push(Dispatch {
                    request: schedule.request,
                    rate,
                    edges: schedule.tree.len(),
                });
            }
        }
        self.alloc.retain(|_, slots| {
            slots.remove(&slot);
            !slots.is_empty()
        });
        let done: Vec<RequestId> = self
            .schedules
            .iter()
            .filter(|(_, s)| s.rates.is_empty())
            .map(|(&id, _)| id)
            .collect();
        let retired = done
            .into_iter()
            .filter_map(|id| self.schedules.remove(&id))
            .collect();
        SlotDispatch {
            slot,
            dispatched,
            retired,
        }
    }

    /// Recomputes the aggregate from the schedules and checks every invariant.
    pub fn audit(&self) -> Result<(), AuditError> {
        let mut expected: BTreeMap<(EdgeId, Slot), f64> = BTreeMap::new();
        for s in self.schedules.values() {
            for (&slot, &rate) in &s.rates {
                if rate < 0.0 {
                    return Err(AuditError::NegativeRate {
                        request: s.request,
                        slot,
                        rate,
                    });
                }
                if slot <= self.now || slot > s.deadline {
                    return Err(AuditError::OutsideWindow {
                        request: s.request,
                        slot,
                        now: self.now,
                        deadline: s.deadline,
                    });
                }
                for &e in s.tree.edges() {
                    *expected.entry((e, slot)).or_insert(0.0) += rate;
                }
            }
        }
        for (&edge, slots) in &self.alloc {
            for &slot in slots.keys() {
                expected.entry((edge, slot)).or_insert(0.0);
            }
        }
        for ((edge, slot), want) in expected {
            let stored = self.allocated(edge, slot);
            if (stored - want).abs() > EPS {
                return Err(AuditError::Inconsistent {
                    edge,
                    slot,
                    stored,
                    expected: want,
                });
            }
            if stored > self.capacity + EPS {
                return Err(AuditError::OverCapacity {
                    edge,
                    slot,
                    alloc: stored,
                    capacity: self.capacity,
                });
            }
        }
        Ok(())
    }

    /// Largest aggregate allocation over all edges and slots.
    pub fn peak_allocation(&self) -> f64 {
        self.alloc
            .values()
            .flat_map(|m| m.values())
            .copied()
            .fold(0.0, f64::max)
    }

    /// Slot-by-edge matrix of the active window, one row per slot.
    pub fn dump(&self) -> String {
        let edges: Vec<EdgeId> = self.alloc.keys().copied().collect();
        let mut out = String::from("slot");
        for e in &edges {
            let _ = write!(out, "\t{e}");
        }
        out.push('\n');
        for slot in self.now + 1..=self.horizon() {
            let _ = write!(out, "{slot}");
            for &e in &edges {
                let _ = write!(out, "\t{:.6}", self.allocated(e, slot));
            }
            out.push('\n');
        }
        out
    }
}
