//! Calendar-level placement and the slot-start adjustments.
//!
//! These work on a bare [`Timeline`]; requests are visited earliest deadline
//! first, ties broken by id.

use crate::graph::ForwardingTree;
use crate::timeline::{AllocationSchedule, Timeline};
use crate::{Slot, EPS};

use super::RequestId;

/// Upper bound on re-push passes before declaring non-convergence.
pub const MAX_REPUSH_PASSES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissionCheck {
    /// Sum over the window of the spare rate common to all tree edges.
    pub available: f64,
    pub accepted: bool,
}

/// Accept iff the tree has at least `volume` spare before `deadline`.
pub fn admission_check(
    timeline: &Timeline,
    tree: &ForwardingTree,
    deadline: Slot,
    volume: f64,
) -> AdmissionCheck {
    let now = timeline.now();
    if deadline <= now {
        return AdmissionCheck {
            available: 0.0,
            accepted: false,
        };
    }
    let available = timeline.available_sum(tree, now + 1..=deadline);
    AdmissionCheck {
        available,
        accepted: available >= volume - EPS,
    }
}

/// Places `volume` backward from `deadline`, filling each slot up to the
/// tree's spare rate.
pub fn allocate_alap(
    timeline: &mut Timeline,
    request: RequestId,
    tree: ForwardingTree,
    deadline: Slot,
    volume: f64,
) -> &AllocationSchedule {
    let now = timeline.now();
    timeline.open_schedule(request, tree.clone(), deadline);
    let mut remaining = volume;
    for slot in (now + 1..=deadline).rev() {
        if remaining <= 0.0 {
            break;
        }
        let take = remaining.min(timeline.available_on_tree(&tree, slot));
        if take > 0.0 {
            timeline.reserve(request, slot, take);
            remaining -= take;
        }
    }
    debug_assert!(remaining <= EPS, "{remaining} left unplaced for {request}");
    timeline.schedule(request).expect("schedule just opened")
}

fn adjustment_order(timeline: &Timeline) -> Vec<RequestId> {
    let mut order: Vec<(Slot, RequestId)> = timeline
        .schedules()
        .map(|s| (s.deadline(), s.request()))
        .collect();
    order.sort_unstable();
    order.into_iter().map(|(_, id)| id).collect()
}

/// How much of `rate` may move into a slot with `spare`: everything if it
/// fits, otherwise the spare when that is at least `EPS`.
fn movable(rate: f64, spare: f64) -> Option<f64> {
    if rate <= 0.0 {
        None
    } else if spare >= rate {
        Some(rate)
    } else if spare >= EPS {
        Some(spare)
    } else {
        None
    }
}

/// Pulls each request's nearest future allocations into the slot about to be
/// dispatched while its whole tree has spare capacity there.
pub fn pull_back(timeline: &mut Timeline) {
    let current = timeline.now() + 1;
    for id in adjustment_order(timeline) {
        loop {
            let schedule = timeline.schedule(id).expect("ordered from live schedules");
            let Some(from) = schedule.next_after(current) else {
                break;
            };
            let spare = timeline.available_on_tree(schedule.tree(), current);
            let Some(amount) = movable(schedule.rate_at(from), spare) else {
                break;
            };
            timeline.shift(id, from, current, amount);
        }
    }
}

/// Pushes allocations from `now + 2` onward as late as their deadlines and
/// spare capacity allow, repeating until a pass moves nothing.
///
/// Returns the number of passes taken, the final quiet one included.
pub fn repush_alap(timeline: &mut Timeline) -> usize {
    let first = timeline.now() + 2;
    let order = adjustment_order(timeline);
    for pass in 1..=MAX_REPUSH_PASSES {
        let mut moved = false;
        for slot in first..=timeline.horizon() {
            for &id in &order {
                let deadline = timeline.schedule(id).expect("live").deadline();
                for target in (slot + 1..=deadline).rev() {
                    let schedule = timeline.schedule(id).expect("live");
                    let rate = schedule.rate_at(slot);
                    if rate <= 0.0 {
                        break;
                    }
                    let spare = timeline.available_on_tree(schedule.tree(), target);
                    if let Some(amount) = movable(rate, spare) {
                        timeline.shift(id, slot, target, amount);
                        moved = true;
                    }
                }
            }
        }
        if !moved {
            return pass;
        }
    }
    panic!("re-push did not converge within {MAX_REPUSH_PASSES} passes");
}
