//! Collective communication between one coordinator and `p` workers.
//!
//! Two backends implement the same contract: an in-process backend that moves
//! buffers between threads over channels, and a socket backend with one
//! blocking TCP connection per worker. Reductions fold worker contributions
//! in fixed rank order 0, 1, ..., p-1, so a training run is bit-identical on
//! both backends.
//!
//! Byte counters track exact payload bytes (8 per 64-bit float), excluding
//! transport framing, so traffic assertions are framing-independent.

mod frame;
mod inprocess;
mod socket;

pub use frame::{Frame, Tag, BCAST_TAG_BASE};
pub use inprocess::{in_process_cluster, InProcessCoordinator, InProcessWorker};
pub use socket::{PendingCoordinator, SocketCoordinator, SocketWorker};

use crate::error::{Error, Result};
use std::time::Duration;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Coordinator,
    Worker,
}

/// One endpoint of the coordinator/worker star.
///
/// Sum and max reductions deliver their result to the coordinator only; the
/// min reduction answers every participant (it carries the shared step
/// length). Broadcast payloads are tagged with a small channel id so the
/// receiver can tell message kinds apart without inspecting the payload.
pub trait Communicator: Send {
    fn role(&self) -> Role;
    /// Worker rank; coordinator reports 0.
    fn rank(&self) -> usize;
    /// Number of workers in the cluster.
    fn workers(&self) -> usize;

    /// Element-wise sum across all participants, delivered to the coordinator.
    fn all_reduce_sum(&mut self, local: &[f64]) -> Result<Option<Vec<f64>>>;
    /// Scalar max across all participants, delivered to the coordinator.
    fn all_reduce_max(&mut self, local: f64) -> Result<Option<f64>>;
    /// Scalar min across all participants, delivered to everyone.
    fn all_reduce_min(&mut self, local: f64) -> Result<f64>;
    /// Coordinator-only: send `payload` to every worker on `channel`.
    fn broadcast(&mut self, channel: u8, payload: &[f64]) -> Result<()>;
    /// Worker-only: receive the next broadcast as `(channel, payload)`.
    fn recv_broadcast(&mut self) -> Result<(u8, Vec<f64>)>;
    /// Variable-length gather, delivered to the coordinator in rank order.
    fn gather(&mut self, local: &[f64]) -> Result<Option<Vec<Vec<f64>>>>;
    /// Best-effort failure notification so no peer blocks forever.
    fn abort(&mut self, code: f64);

    fn bytes_sent(&self) -> u64;
    fn bytes_received(&self) -> u64;
}

pub(crate) fn role_error(op: &str, role: Role) -> Error {
    Error::Internal(format!("{op} called on a {role:?} endpoint"))
}

pub(crate) fn check_lengths(rank: usize, got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::Protocol(format!(
            "rank {rank} contributed {got} floats to a reduction of {expected}"
        )));
    }
    Ok(())
}
