//! TCP backend: the driver dials each worker, ships its partitions once and
//! then exchanges MAP / MAP_RESULT frames per iteration.

use std::io::{BufReader, BufWriter};
use std::net::TcpStream;
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use super::protocol::{self, Message, WirePartition};
use super::{DynamicItem, JobKind, KeyedOutput, LocalClosure, TransferStats, WorkerStatus};
use crate::error::{Error, Result};
use crate::partition::ContextPartition;

/// How long to keep retrying a worker that is not listening yet. Override
/// with `FCAMR_CONNECT_PATIENCE_MS`.
fn connect_patience() -> Duration {
    std::env::var("FCAMR_CONNECT_PATIENCE_MS")
        .ok()
        .and_then(|v| v.parse().ok())
        .map_or(Duration::from_secs(10), Duration::from_millis)
}

struct Connection {
    addr: String,
    reader: BufReader<TcpStream>,
    writer: BufWriter<TcpStream>,
}

impl Connection {
    fn fail(&self, message: impl Into<String>) -> Error {
        Error::Worker {
            worker: self.addr.clone(),
            message: message.into(),
        }
    }

    fn send(&mut self, msg: &Message) -> Result<usize> {
        protocol::write_frame(&mut self.writer, msg).map_err(|e| self.fail(format!("send failed: {e}")))
    }

    fn recv(&mut self) -> Result<(Message, usize)> {
        let body = match protocol::read_raw_frame(&mut self.reader) {
            Ok(Some(body)) => body,
            Ok(None) => return Err(self.fail("connection closed by worker")),
            Err(e) => return Err(self.fail(format!("receive failed: {e}"))),
        };
        let n = body.len() + 4;
        match protocol::decode(&body) {
            Ok(Message::Error { message }) => Err(self.fail(format!("worker reported: {message}"))),
            Ok(msg) => Ok((msg, n)),
            Err(e) => Err(self.fail(e.to_string())),
        }
    }
}

pub(super) struct SocketDriver {
    connections: Vec<Connection>,
    width: usize,
    closed: bool,
}

fn dial(addr: &str) -> Result<TcpStream> {
    let start = Instant::now();
    let patience = connect_patience();
    loop {
        match TcpStream::connect(addr) {
            Ok(s) => {
                s.set_nodelay(true)?;
                return Ok(s);
            }
            Err(_) if start.elapsed() < patience => {
                thread::sleep(Duration::from_millis(50));
            }
            Err(e) => {
                return Err(Error::Worker {
                    worker: addr.to_string(),
                    message: format!("cannot connect: {e}"),
                })
            }
        }
    }
}

impl SocketDriver {
    pub(super) fn connect(
        addrs: &[String],
        partitions: &[Arc<ContextPartition>],
        assignment: &[Vec<usize>],
        stats: &mut TransferStats,
    ) -> Result<Self> {
        let width = partitions.first().map_or(0, |p| p.context().attribute_count());
        let mut connections = Vec::with_capacity(addrs.len());
        for (addr, ids) in addrs.iter().zip(assignment) {
            let stream = dial(addr)?;
            let mut conn = Connection {
                addr: addr.clone(),
                reader: BufReader::new(stream.try_clone()?),
                writer: BufWriter::new(stream),
            };
            let wires: Vec<WirePartition> = ids.iter().map(|&k| WirePartition::encode(&partitions[k])).collect();
            for wire in &wires {
                *stats.static_sends.entry(wire.partition_id).or_default() += 1;
                *stats.static_bytes.entry(wire.partition_id).or_default() += serde_json::to_vec(wire)?.len();
            }
            conn.send(&Message::Configure { partitions: wires })?;
            match conn.recv()? {
                (Message::Status { ok: true, partitions, .. }, _) if &partitions == ids => {}
                (other, _) => return Err(conn.fail(format!("unexpected reply to CONFIGURE: {other:?}"))),
            }
            connections.push(conn);
        }
        Ok(Self {
            connections,
            width,
            closed: false,
        })
    }

    pub(super) fn map(
        &mut self,
        job: JobKind,
        iteration: u64,
        chunk: &[DynamicItem],
        stats: &mut TransferStats,
    ) -> Result<Vec<Vec<KeyedOutput>>> {
        let msg = Message::Map {
            iteration,
            job: job.name().to_string(),
            items: chunk.iter().map(|i| protocol::indices(&i.intent)).collect(),
            generators: (job == JobKind::MrCbo)
                .then(|| chunk.iter().map(|i| i.generator.map(|g| g.0)).collect()),
        };
        for conn in &mut self.connections {
            stats.dynamic_bytes_sent += conn.send(&msg)? as u64;
        }
        let width = self.width;
        let mut per_worker = Vec::with_capacity(self.connections.len());
        for conn in &mut self.connections {
            let mut outputs = Vec::with_capacity(chunk.len());
            for item in chunk {
                let (reply, n) = conn.recv()?;
                stats.result_bytes_received += n as u64;
                let Message::MapResult { iteration: it, key, values } = reply else {
                    return Err(conn.fail(format!("expected MAP_RESULT, got {reply:?}")));
                };
                if it != iteration {
                    return Err(conn.fail(format!("MAP_RESULT for iteration {it}, expected {iteration}")));
                }
                let key = protocol::set_from_indices(width, &key)?;
                let mut group = KeyedOutput::new(item);
                if key != group.key {
                    return Err(conn.fail("MAP_RESULT key does not match the dispatched item"));
                }
                for (attr, intent, partition) in values {
                    group.values.push(LocalClosure {
                        attribute: protocol::attribute(width, attr)?,
                        intent: protocol::set_from_indices(width, &intent)?,
                        partition,
                    });
                }
                outputs.push(group);
            }
            per_worker.push(outputs);
        }
        Ok(per_worker)
    }

    pub(super) fn status(&mut self) -> Result<Vec<WorkerStatus>> {
        let mut out = Vec::new();
        for conn in &mut self.connections {
            conn.send(&Message::Status {
                ok: true,
                partitions: vec![],
                configures: 0,
                detail: None,
            })?;
            match conn.recv()? {
                (Message::Status { ok: true, partitions, configures, .. }, _) => out.push(WorkerStatus {
                    worker: conn.addr.clone(),
                    partitions,
                    configures,
                }),
                (other, _) => return Err(conn.fail(format!("unexpected STATUS reply: {other:?}"))),
            }
        }
        Ok(out)
    }

    pub(super) fn shutdown(&mut self) -> Result<()> {
        if std::mem::replace(&mut self.closed, true) {
            return Ok(());
        }
        for conn in &mut self.connections {
            if conn.send(&Message::Shutdown).is_ok() {
                let _ = conn.recv();
            }
        }
        Ok(())
    }
}
