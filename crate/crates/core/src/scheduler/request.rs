use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{ForwardingTree, NodeId};
use crate::Slot;

/// Identifies a transfer, or one unicast leg of a decomposed transfer.
///
/// Leg 0 is the transfer itself; decomposition numbers legs from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RequestId {
    pub transfer: u64,
    pub leg: u16,
}

impl RequestId {
    pub const fn new(transfer: u64) -> Self {
        Self { transfer, leg: 0 }
    }

    pub const fn leg(transfer: u64, leg: u16) -> Self {
        Self { transfer, leg }
    }
}

impl fmt::Display for RequestId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.leg == 0 {
            write!(f, "{}", self.transfer)
        } else {
            write!(f, "{}:{}", self.transfer, self.leg)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RequestState {
    Pending,
    Admitted,
    Rejected,
    Completed,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RequestError {
    #[error("request {0} has no destinations")]
    NoDestinations(RequestId),
    #[error("request {0} lists its source as a destination")]
    SourceIsDestination(RequestId),
    #[error("request {0} lists destination {1} twice")]
    DuplicateDestination(RequestId, NodeId),
    #[error("request {0} has invalid volume {1}")]
    BadVolume(RequestId, f64),
    #[error("request {id} arrives at slot {arrival} but is due at slot {deadline}")]
    DeadlineTooEarly {
        id: RequestId,
        arrival: Slot,
        deadline: Slot,
    },
}

/// A P2MP transfer: deliver `volume` from `source` to every destination by `deadline`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferRequest {
    pub id: RequestId,
    pub source: NodeId,
    pub destinations: Vec<NodeId>,
    pub volume: f64,
    pub deadline: Slot,
    pub arrival: Slot,
    pub(crate) state: RequestState,
    pub(crate) residual: f64,
    pub(crate) delivered: f64,
    pub(crate) tree: Option<ForwardingTree>,
}

impl TransferRequest {
    pub fn new(
        id: RequestId,
        source: NodeId,
        destinations: Vec<NodeId>,
        volume: f64,
        deadline: Slot,
        arrival: Slot,
    ) -> Result<Self, RequestError> {
        if destinations.is_empty() {
            return Err(RequestError::NoDestinations(id));
        }
        if destinations.contains(&source) {
            return Err(RequestError::SourceIsDestination(id));
        }
        for (i, d) in destinations.iter().enumerate() {
            if destinations[..i].contains(d) {
                return Err(RequestError::DuplicateDestination(id, *d));
            }
        }
        if !(volume.is_finite() && volume > 0.0) {
            return Err(RequestError::BadVolume(id, volume));
        }
        if deadline < arrival + 1 {
            return Err(RequestError::DeadlineTooEarly {
                id,
                arrival,
                deadline,
            });
        }
        Ok(Self {
            id,
            source,
            destinations,
            volume,
            deadline,
            arrival,
            state: RequestState::Pending,
            residual: volume,
            delivered: 0.0,
            tree: None,
        })
    }

    pub fn state(&self) -> RequestState {
        self.state
    }

    /// Volume still to be sent.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn delivered(&self) -> f64 {
        self.delivered
    }

    /// Set once the request is admitted.
    pub fn tree(&self) -> Option<&ForwardingTree> {
        self.tree.as_ref()
    }
}
