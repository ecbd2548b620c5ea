//! Point-to-point comparison scheduler.
//!
//! A P2MP transfer is split into one unicast transfer per destination. Each
//! leg is routed on its own min-cost path and goes through the same admission,
//! placement and update machinery as a tree, with an independent fate.

use thiserror::Error;

use crate::graph;
use crate::scheduler::{Decision, RequestId, Scheduler, TransferRequest};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BaselineError {
    #[error("request {0} has {1} destinations; unicast admission needs exactly one")]
    NotUnicast(RequestId, usize),
}

/// One single-destination request per destination, legs numbered from 1.
///
/// A single-destination request is returned unchanged.
pub fn decompose(request: TransferRequest) -> Vec<TransferRequest> {
    if request.destinations.len() == 1 {
        return vec![request];
    }
    request
        .destinations
        .iter()
        .enumerate()
        .map(|(i, &dest)| {
            TransferRequest::new(
                RequestId::leg(request.id.transfer, i as u16 + 1),
                request.source,
                vec![dest],
                request.volume,
                request.deadline,
                request.arrival,
            )
            .expect("legs inherit a valid request's fields")
        })
        .collect()
}

/// Admits a unicast request over its min-cost path.
pub fn admit_unicast(
    scheduler: &mut Scheduler,
    request: TransferRequest,
) -> Result<Decision, BaselineError> {
    if request.destinations.len() != 1 {
        return Err(BaselineError::NotUnicast(
            request.id,
            request.destinations.len(),
        ));
    }
    Ok(scheduler.admit_with(request, graph::select_path))
}
