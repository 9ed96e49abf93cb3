//! Socket backend: one blocking TCP connection per worker, coordinator
//! listening on a configurable port. This is the MPP execution mode; workers
//! run in their own processes and load their data slices locally.

use std::io;
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::time::{Duration, Instant};

use super::frame::{Frame, Tag};
use super::inprocess::abort_error;
use super::{check_lengths, role_error, Communicator, Role};
use crate::error::{Error, Result};

#[derive(Debug)]
pub struct SocketCoordinator {
    workers: usize,
    streams: Vec<TcpStream>,
    sent: u64,
    received: u64,
}

pub struct SocketWorker {
    rank: usize,
    workers: usize,
    stream: TcpStream,
    sent: u64,
    received: u64,
}

fn map_io(rank: Option<usize>, err: io::Error) -> Error {
    let who = match rank {
        Some(r) => format!("rank {r}"),
        None => "coordinator".to_string(),
    };
    match err.kind() {
        io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut => {
            Error::Timeout(format!("{who} did not respond in time"))
        }
        io::ErrorKind::UnexpectedEof => Error::Protocol(format!("{who} closed the connection")),
        _ => Error::Io(err),
    }
}

fn write_frame(stream: &mut TcpStream, rank: Option<usize>, frame: &Frame) -> Result<()> {
    frame.write_to(stream).map_err(|e| map_io(rank, e))
}

fn read_frame(stream: &mut TcpStream, rank: Option<usize>) -> Result<Frame> {
    match Frame::read_from(stream) {
        Ok(f) => Ok(f),
        Err(Error::Io(e)) => Err(map_io(rank, e)),
        Err(other) => Err(other),
    }
}

/// A bound listener that has not yet collected its workers. Splitting bind
/// from accept lets callers learn the actual port before workers launch.
pub struct PendingCoordinator {
    listener: TcpListener,
}

impl PendingCoordinator {
    pub fn bind<A: ToSocketAddrs>(addr: A) -> Result<Self> {
        Ok(PendingCoordinator {
            listener: TcpListener::bind(addr)?,
        })
    }

    pub fn local_addr(&self) -> Result<std::net::SocketAddr> {
        Ok(self.listener.local_addr()?)
    }

    /// Accept `p` worker registrations and answer each with a `RegisterAck`
    /// carrying `[p, ack_extra...]`. Registration payloads are
    /// `[rank, extra...]`; the extras are returned per rank for validation.
    pub fn accept_workers(
        self,
        p: usize,
        timeout: Duration,
        ack_extra: &[f64],
    ) -> Result<(SocketCoordinator, Vec<Vec<f64>>)> {
        let listener = self.listener;
        listener.set_nonblocking(true)?;
        let deadline = Instant::now() + timeout;

        let mut streams: Vec<Option<TcpStream>> = (0..p).map(|_| None).collect();
        let mut extras: Vec<Vec<f64>> = vec![Vec::new(); p];
        let mut registered = 0usize;
        let mut sent = 0u64;
        let mut received = 0u64;

        while registered < p {
            match listener.accept() {
                Ok((mut stream, _)) => {
                    stream.set_nonblocking(false)?;
                    stream.set_nodelay(true)?;
                    stream.set_read_timeout(Some(timeout))?;
                    stream.set_write_timeout(Some(timeout))?;
                    let frame = read_frame(&mut stream, None)?;
                    if frame.tag != Tag::Register {
                        return Err(Error::Protocol(format!(
                            "expected Register, got {:?}",
                            frame.tag
                        )));
                    }
                    received += frame.payload_bytes();
                    let rank = frame.payload.first().copied().unwrap_or(-1.0);
                    if rank < 0.0 || rank.fract() != 0.0 || rank as usize >= p {
                        return Err(Error::Protocol(format!(
                            "registration carries invalid rank {rank}"
                        )));
                    }
                    let rank = rank as usize;
                    if streams[rank].is_some() {
                        return Err(Error::Protocol(format!("duplicate registration for rank {rank}")));
                    }
                    let mut ack = Vec::with_capacity(1 + ack_extra.len());
                    ack.push(p as f64);
                    ack.extend_from_slice(ack_extra);
                    let ack_frame = Frame::new(Tag::RegisterAck, ack);
                    sent += ack_frame.payload_bytes();
                    write_frame(&mut stream, Some(rank), &ack_frame)?;
                    extras[rank] = frame.payload[1..].to_vec();
                    streams[rank] = Some(stream);
                    registered += 1;
                }
                Err(ref e) if e.kind() == io::ErrorKind::WouldBlock => {
                    if Instant::now() > deadline {
                        return Err(Error::Timeout(format!(
                            "only {registered} of {p} workers registered within {timeout:?}"
                        )));
                    }
                    std::thread::sleep(Duration::from_millis(5));
                }
                Err(e) => return Err(e.into()),
            }
        }

        Ok((
            SocketCoordinator {
                workers: p,
                streams: streams.into_iter().map(|s| s.expect("all ranks registered")).collect(),
                sent,
                received,
            },
            extras,
        ))
    }
}

impl SocketCoordinator {
    fn recv_from(&mut self, rank: usize, expect: Tag) -> Result<Frame> {
        let frame = read_frame(&mut self.streams[rank], Some(rank))?;
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

    fn send_to(&mut self, rank: usize, frame: &Frame) -> Result<()> {
        write_frame(&mut self.streams[rank], Some(rank), frame)?;
        self.sent += frame.payload_bytes();
        Ok(())
    }
}

impl Communicator for SocketCoordinator {
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
        let result = Frame::new(Tag::MinResult, vec![acc]);
        for rank in 0..self.workers {
            self.send_to(rank, &result)?;
        }
        Ok(acc)
    }

    fn broadcast(&mut self, channel: u8, payload: &[f64]) -> Result<()> {
        if payload.is_empty() {
            return Err(Error::Protocol("empty broadcast".into()));
        }
        let frame = Frame::new(Tag::Broadcast(channel), payload.to_vec());
        for rank in 0..self.workers {
            self.send_to(rank, &frame)?;
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
        let frame = Frame::new(Tag::Abort, vec![code]);
        for rank in 0..self.workers {
            let _ = self.send_to(rank, &frame);
        }
    }

    fn bytes_sent(&self) -> u64 {
        self.sent
    }

    fn bytes_received(&self) -> u64 {
        self.received
    }
}

impl SocketWorker {
    /// Connect to the coordinator and register as `rank`. The registration
    /// payload is `[rank, register_extra...]`; the returned vector is the
    /// coordinator's ack payload minus the leading worker count.
    pub fn connect<A: ToSocketAddrs>(
        addr: A,
        rank: usize,
        timeout: Duration,
        register_extra: &[f64],
    ) -> Result<(Self, Vec<f64>)> {
        let mut stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        stream.set_read_timeout(Some(timeout))?;
        stream.set_write_timeout(Some(timeout))?;

        let mut payload = Vec::with_capacity(1 + register_extra.len());
        payload.push(rank as f64);
        payload.extend_from_slice(register_extra);
        let reg = Frame::new(Tag::Register, payload);
        let mut sent = 0u64;
        sent += reg.payload_bytes();
        write_frame(&mut stream, None, &reg)?;

        let ack = read_frame(&mut stream, None)?;
        if ack.tag != Tag::RegisterAck {
            return Err(Error::Protocol(format!("expected RegisterAck, got {:?}", ack.tag)));
        }
        let received = ack.payload_bytes();
        let p = ack.payload.first().copied().unwrap_or(0.0);
        if p < 1.0 || p.fract() != 0.0 {
            return Err(Error::Protocol(format!("ack carries invalid worker count {p}")));
        }
        Ok((
            SocketWorker {
                rank,
                workers: p as usize,
                stream,
                sent,
                received,
            },
            ack.payload[1..].to_vec(),
        ))
    }

    fn send(&mut self, frame: &Frame) -> Result<()> {
        write_frame(&mut self.stream, None, frame)?;
        self.sent += frame.payload_bytes();
        Ok(())
    }

    fn recv(&mut self) -> Result<Frame> {
        let frame = read_frame(&mut self.stream, None)?;
        self.received += frame.payload_bytes();
        Ok(frame)
    }

    /// Report a local failure so the coordinator can abort the run.
    pub fn send_abort(&mut self, code: f64) {
        let _ = self.send(&Frame::new(Tag::Abort, vec![code]));
    }
}

impl Communicator for SocketWorker {
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
        self.send(&Frame::new(Tag::ReduceSum, local.to_vec()))?;
        Ok(None)
    }

    fn all_reduce_max(&mut self, local: f64) -> Result<Option<f64>> {
        self.send(&Frame::new(Tag::ReduceMax, vec![local]))?;
        Ok(None)
    }

    fn all_reduce_min(&mut self, local: f64) -> Result<f64> {
        self.send(&Frame::new(Tag::ReduceMin, vec![local]))?;
        let frame = self.recv()?;
        if frame.tag != Tag::MinResult {
            return Err(Error::Protocol(format!("expected MinResult, got {:?}", frame.tag)));
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
        self.send(&Frame::new(Tag::Gather, local.to_vec()))?;
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
    fn register_and_reduce_over_sockets() {
        let pending = PendingCoordinator::bind("127.0.0.1:0").unwrap();
        let addr = pending.local_addr().unwrap();
        let timeout = Duration::from_secs(5);

        let handle = thread::spawn(move || {
            let (mut coord, extras) = pending.accept_workers(2, timeout, &[42.0]).unwrap();
            assert_eq!(extras[0], vec![10.0]);
            assert_eq!(extras[1], vec![20.0]);
            let sum = coord.all_reduce_sum(&[0.0, 0.0]).unwrap().unwrap();
            coord.broadcast(1, &[7.0]).unwrap();
            sum
        });

        let mut joins = Vec::new();
        for rank in 0..2usize {
            joins.push(thread::spawn(move || {
                let (mut w, ack) =
                    SocketWorker::connect(addr, rank, timeout, &[(rank as f64 + 1.0) * 10.0])
                        .unwrap();
                assert_eq!(ack, vec![42.0]);
                assert_eq!(w.workers(), 2);
                w.all_reduce_sum(&[rank as f64, 1.0]).unwrap();
                w.recv_broadcast().unwrap()
            }));
        }

        let sum = handle.join().unwrap();
        assert_eq!(sum, vec![1.0, 2.0]);
        for j in joins {
            let (ch, payload) = j.join().unwrap();
            assert_eq!(ch, 1);
            assert_eq!(payload, vec![7.0]);
        }
    }

    #[test]
    fn registration_times_out_without_workers() {
        let pending = PendingCoordinator::bind("127.0.0.1:0").unwrap();
        let err = pending
            .accept_workers(1, Duration::from_millis(100), &[])
            .unwrap_err();
        assert!(matches!(err, Error::Timeout(_)), "{err}");
    }

    #[test]
    fn duplicate_rank_rejected() {
        let pending = PendingCoordinator::bind("127.0.0.1:0").unwrap();
        let addr = pending.local_addr().unwrap();
        let timeout = Duration::from_secs(5);
        let handle = thread::spawn(move || pending.accept_workers(2, timeout, &[]));
        let c1 = SocketWorker::connect(addr, 0, timeout, &[]);
        assert!(c1.is_ok());
        // second connection claims the same rank
        let _c2 = SocketWorker::connect(addr, 0, timeout, &[]);
        let err = handle.join().unwrap().unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }
}
