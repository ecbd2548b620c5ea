//! Deadline-aware point-to-multipoint transfer scheduling for inter-datacenter
//! networks.
//!
//! Transfers are admitted against a slotted bandwidth calendar, routed over a
//! load-aware Steiner tree and placed as late as possible before their
//! deadline. At every slot boundary the calendar pulls near-future traffic into
//! the current slot and then re-pushes the rest back toward deadlines.
//!
//! The [`engine`] module drives whole simulations over synthetic [`workload`]s
//! and compares against the unicast decomposition in [`baseline`].

pub mod baseline;
pub mod engine;
pub mod graph;
pub mod scheduler;
pub mod timeline;
pub mod workload;

/// Tolerance for every rate and volume comparison.
pub const EPS: f64 = 1e-9;

/// Timeslot index. Slot 0 is the initial, already-dispatched slot.
pub type Slot = u64;

pub use graph::{EdgeId, ForwardingTree, NodeId, Topology};
pub use scheduler::{RequestId, Scheduler, SchedulerKind, TransferRequest};
pub use timeline::Timeline;
