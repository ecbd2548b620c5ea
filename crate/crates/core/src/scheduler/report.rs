use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::RequestId;
use crate::Slot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    /// `value` is the rate sent this slot.
    Dispatch,
    /// `value` is the total volume delivered.
    Complete,
    /// `value` is the admitted volume.
    Admit,
    /// `value` is the refused volume.
    Reject,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Dispatch => "dispatch",
            EventKind::Complete => "complete",
            EventKind::Admit => "admit",
            EventKind::Reject => "reject",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotEvent {
    pub slot: Slot,
    pub request: RequestId,
    pub kind: EventKind,
    pub value: f64,
    /// Edge count of the request's tree, 0 when none was selected.
    pub edges: usize,
}

/// What happened during one call to [`Scheduler::tick`](super::Scheduler::tick).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotReport {
    pub slot: Slot,
    pub events: Vec<SlotEvent>,
    pub repush_passes: usize,
}

impl SlotReport {
    pub const CSV_HEADER: &'static str = "slot,request,event,value,edges";

    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &SlotEvent> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    pub fn is_quiet(&self) -> bool {
        self.events.is_empty()
    }

    /// Bandwidth consumed by this slot's dispatches, summed over tree edges.
    pub fn bandwidth(&self) -> f64 {
        self.events_of(EventKind::Dispatch)
            .map(|e| e.value * e.edges as f64)
            .sum()
    }

    /// One `slot,request,event,value,edges` line per event.
    pub fn to_csv_rows(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            let _ = writeln!(
                out,
                "{},{},{},{:.6},{}",
                e.slot,
                e.request,
                e.kind.as_str(),
                e.value,
                e.edges
            );
        }
        out
    }
}
