//! In-process backend: the coordinator and workers live on threads of one
//! process and exchange frames over channels with transfer-of-ownership
//! semantics. This is the SMP execution mode.

use std::sync::mpsc::{channel, Receiver, RecvTimeoutError, Sender};
use std::time::Duration;

use super::frame::{Frame, Tag};
use super::{check_lengths, role_error, Communicator, Role, DEFAULT_TIMEOUT};
use crate::error::{Error, Result};

pub struct InProcessCoordinator {
    workers: usize,
    timeout: Duration,
    to_workers: Vec<Sender<Frame>>,
    from_workers: Vec<Receiver<Frame>>,
    sent: u64,
    received: u64,
}

pub struct InProcessWorker {
    rank: usize,
    workers: usize,
    timeout: Duration,
    to_coord: Sender<Frame>,
    from_coord: Receiver<Frame>,
    sent: u64,
    received: u64,
}

/// Wire up a coordinator and `p` worker endpoints.
pub fn in_process_cluster(p: usize) -> (InProcessCoordinator, Vec<InProcessWorker>) {
    in_process_cluster_with_timeout(p, DEFAULT_TIMEOUT)
}

pub fn in_process_cluster_with_timeout(
    p: usize,
    timeout: Duration,
) -> (InProcessCoordinator, Vec<InProcessWorker>) {
    let mut to_workers = Vec::with_capacity(p);
    let mut from_workers = Vec::with_capacity(p);
    let mut endpoints = Vec::with_capacity(p);
    for rank in 0..p {
        let (down_tx, down_rx) = channel();
        let (up_tx, up_rx) = channel();
        to_workers.push(down_tx);
        from_workers.push(up_rx);
        endpoints.push(InProcessWorker {
            rank,
            workers: p,
            timeout,
            to_coord: up_tx,
            from_coord: down_rx,
            sent: 0,
            received: 0,
        });
    }
    (
        InProcessCoordinator {
            workers: p,
            timeout,
            to_workers,
            from_workers,
            sent: 0,
            received: 0,
        },
        endpoints,
    )
}

impl InProcessCoordinator {
    fn recv_from(&mut self, rank: usize, expect: Tag) -> Result<Frame> {
        let frame = match self.from_workers[rank].recv_timeout(self.timeout) {
            Ok(f) => f,
            Err(RecvTimeoutError::Timeout) => {
                return Err(Error::Timeout(format!("rank {rank} silent for {:?}", self.timeout)))
            }
            Err(RecvTimeoutError::Disconnected) => {
                return Err(Error::Protocol(format!("rank {rank} disconnected")))
            }
        };
        self.received += frame.payload_bytes();
        if frame.tag == Tag::Abort {
            return Err(abort_error(rank, &frame));
        }
        if frame.tag != expect {
            return Err(Error::Protocol(format!(
                "rank {rank} sent {:?}, expected {expect:?}",
                frame.tag
            )));
        }
        Ok(frame)
    }

    fn send_to(&mut self, rank: usize, frame: Frame) -> Result<()> {
        let bytes = frame.payload_bytes();
        self.to_workers[rank]
            .send(frame)
            .map_err(|_| Error::Protocol(format!("rank {rank} disconnected")))?;
        self.sent += bytes;
        Ok(())
    }
}

pub(super) fn abort_error(rank: usize, frame: &Frame) -> Error {
    let code = frame.payload.first().copied().unwrap_or(0.0);
    Error::Train(format!("rank {rank} aborted (code {code})"))
}

impl Communicator for InProcessCoordinator {
    fn role(&self) -> Role {
        Role::Coordinator
    }

    fn rank(&self) -> usize {
        0
    }

    fn workers(&self) -> usize {
        self.workers
    }

    fn all_reduce_sum(&mut self, local: &[f64]) -> Result<Option<Vec<f64>>> {
        let mut acc = local.to_vec();
        for rank in 0..self.workers {
            let frame = self.recv_from(rank, Tag::ReduceSum)?;
            check_lengths(rank, frame.payload.len(), acc.len())?;
            for (a, b) in acc.iter_mut().zip(&frame.payload) {
                *a += b;
            }
        }
        Ok(Some(acc))
    }

    fn all_reduce_max(&mut self, local: f64) -> Result<Option<f64>> {
        let mut acc = local;
        for rank in 0..self.workers {
            let frame = self.recv_from(rank, Tag::ReduceMax)?;
            check_lengths(rank, frame.payload.len(), 1)?;
            acc = acc.max(frame.payload[0]);
        }
        Ok(Some(acc))
    }

    fn all_reduce_min(&mut self, local: f64) -> Result<f64> {
        let mut acc = local;
        for rank in 0..self.workers {
            let frame = self.recv_from(rank, Tag::ReduceMin)?;
            check_lengths(rank, frame.payload.len(), 1)?;
            acc = acc.min(frame.payload[0]);
        }
        for rank in 0..self.workers {
            self.send_to(rank, Frame::new(Tag::MinResult, vec![acc]))?;
        }
        Ok(acc)
    }

    fn broadcast(&mut self, channel: u8, payload: &[f64]) -> Result<()> {
        if payload.is_empty() {
            return Err(Error::Protocol("empty broadcast".into()));
        }
        for rank in 0..self.workers {
            self.send_to(rank, Frame::new(Tag::Broadcast(channel), payload.to_vec()))?;
        }
        Ok(())
    }

    fn recv_broadcast(&mut self) -> Result<(u8, Vec<f64>)> {
        Err(role_error("recv_broadcast", Role::Coordinator))
    }

    fn gather(&mut self, _local: &[f64]) -> Result<Option<Vec<Vec<f64>>>> {
        let mut out = Vec::with_capacity(self.workers);
        for rank in 0..self.workers {
            let frame = self.recv_from(rank, Tag::Gather)?;
            out.push(frame.payload);
        }
        Ok(Some(out))
    }

    fn abort(&mut self, code: f64) {
        for rank in 0..self.workers {
            let _ = self.send_to(rank, Frame::new(Tag::Abort, vec![code]));
        }
    }

    fn bytes_sent(&self) -> u64 {
        self.sent
    }

    fn bytes_received(&self) -> u64 {
        self.received
    }
}

impl InProcessWorker {
    fn send(&mut self, frame: Frame) -> Result<()> {
        let bytes = frame.payload_bytes();
        self.to_coord
            .send(frame)
            .map_err(|_| Error::Protocol("coordinator disconnected".into()))?;
        self.sent += bytes;
        Ok(())
    }

    fn recv(&mut self) -> Result<Frame> {
        let frame = match self.from_coord.recv_timeout(self.timeout) {
            Ok(f) => f,
            Err(RecvTimeoutError::Timeout) => {
                return Err(Error::Timeout(format!(
                    "coordinator silent for {:?}",
                    self.timeout
                )))
            }
            Err(RecvTimeoutError::Disconnected) => {
                return Err(Error::Protocol("coordinator disconnected".into()))
            }
        };
        self.received += frame.payload_bytes();
        Ok(frame)
    }

    /// Report a local failure so the coordinator can abort the run.
    pub fn send_abort(&mut self, code: f64) {
        let _ = self.send(Frame::new(Tag::Abort, vec![code]));
    }
}

impl Communicator for InProcessWorker {
    fn role(&self) -> Role {
        Role::Worker
    }

    fn rank(&self) -> usize {
        self.rank
    }

    fn workers(&self) -> usize {
        self.workers
    }

    fn all_reduce_sum(&mut self, local: &[f64]) -> Result<Option<Vec<f64>>> {
        self.send(Frame::new(Tag::ReduceSum, local.to_vec()))?;
        Ok(None)
    }

    fn all_reduce_max(&mut self, local: f64) -> Result<Option<f64>> {
        self.send(Frame::new(Tag::ReduceMax, vec![local]))?;
        Ok(None)
    }

    fn all_reduce_min(&mut self, local: f64) -> Result<f64> {
        self.send(Frame::new(Tag::ReduceMin, vec![local]))?;
        let frame = self.recv()?;
        if frame.tag != Tag::MinResult {
            return Err(Error::Protocol(format!(
                "expected MinResult, got {:?}",
                frame.tag
            )));
        }
        Ok(frame.payload[0])
    }

    fn broadcast(&mut self, _channel: u8, _payload: &[f64]) -> Result<()> {
        Err(role_error("broadcast", Role::Worker))
    }

    fn recv_broadcast(&mut self) -> Result<(u8, Vec<f64>)> {
        let frame = self.recv()?;
        match frame.tag {
            Tag::Broadcast(ch) => Ok((ch, frame.payload)),
            Tag::Abort => Err(abort_error(usize::MAX, &frame)),
            other => Err(Error::Protocol(format!("expected broadcast, got {other:?}"))),
        }
    }

    fn gather(&mut self, local: &[f64]) -> Result<Option<Vec<Vec<f64>>>> {
        self.send(Frame::new(Tag::Gather, local.to_vec()))?;
        Ok(None)
    }

    fn abort(&mut self, code: f64) {
        self.send_abort(code);
    }

    fn bytes_sent(&self) -> u64 {
        self.sent
    }

    fn bytes_received(&self) -> u64 {
        self.received
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::thread;

    #[test]
    fn sum_two_workers() {
        let (mut coord, workers) = in_process_cluster(2);
        let handles: Vec<_> = workers
            .into_iter()
            .map(|mut w| {
                thread::spawn(move || {
                    let buf = if w.rank() == 0 { [1.0, 2.0] } else { [3.0, 4.0] };
                    w.all_reduce_sum(&buf).unwrap();
                })
            })
            .collect();
        let sum = coord.all_reduce_sum(&[0.0, 0.0]).unwrap().unwrap();
        assert_eq!(sum, vec![4.0, 6.0]);
        for h in handles {
            h.join().unwrap();
        }
    }

    #[test]
    fn sum_single_worker_identity() {
        let (mut coord, mut workers) = in_process_cluster(1);
        let mut w = workers.pop().unwrap();
        let h = thread::spawn(move || {
            w.all_reduce_sum(&[5.0]).unwrap();
        });
        let sum = coord.all_reduce_sum(&[0.0]).unwrap().unwrap();
        assert_eq!(sum, vec![5.0]);
        h.join().unwrap();
    }

    #[test]
    fn length_mismatch_names_rank() {
        let (mut coord, mut workers) = in_process_cluster(1);
        let mut w = workers.pop().unwrap();
        let h = thread::spawn(move || {
            let _ = w.all_reduce_sum(&[1.0, 2.0, 3.0]);
        });
        let err = coord.all_reduce_sum(&[0.0, 0.0]).unwrap_err();
        assert!(err.to_string().contains("rank 0"), "{err}");
        h.join().unwrap();
    }

    #[test]
    fn min_reaches_everyone() {
        let (mut coord, workers) = in_process_cluster(3);
        let handles: Vec<_> = workers
            .into_iter()
            .map(|mut w| {
                thread::spawn(move || {
                    let vals = [0.4, 1.0, 0.7];
                    w.all_reduce_min(vals[w.rank()]).unwrap()
                })
            })
            .collect();
        let here = coord.all_reduce_min(1.0).unwrap();
        assert_eq!(here, 0.4);
        for h in handles {
            assert_eq!(h.join().unwrap(), 0.4);
        }
    }

    #[test]
    fn empty_broadcast_rejected() {
        let (mut coord, _workers) = in_process_cluster(1);
        let err = coord.broadcast(0, &[]).unwrap_err();
        assert!(err.to_string().contains("empty broadcast"), "{err}");
    }

    #[test]
    fn broadcast_delivers_bit_identical_copies() {
        let (mut coord, workers) = in_process_cluster(2);
        let handles: Vec<_> = workers
            .into_iter()
            .map(|mut w| thread::spawn(move || w.recv_broadcast().unwrap()))
            .collect();
        coord.broadcast(3, &[1.5, 0.0]).unwrap();
        for h in handles {
            let (ch, buf) = h.join().unwrap();
            assert_eq!(ch, 3);
            assert_eq!(buf, vec![1.5, 0.0]);
        }
    }

    #[test]
    fn dead_worker_times_out() {
        let (mut coord, workers) =
            in_process_cluster_with_timeout(1, Duration::from_millis(50));
        // keep the endpoint alive but never send
        let err = coord.all_reduce_sum(&[0.0]).unwrap_err();
        assert!(matches!(err, Error::Timeout(_)), "{err}");
        drop(workers);
    }

    #[test]
    fn broadcast_counts_payload_bytes_per_worker() {
        let m = 6;
        let (mut coord, workers) = in_process_cluster(4);
        coord.broadcast(0, &vec![1.0; m + 2]).unwrap();
        assert_eq!(coord.bytes_sent(), (4 * 8 * (m + 2)) as u64);
        drop(workers);
    }
}
