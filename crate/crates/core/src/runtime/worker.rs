//! The `fcamr worker` side of the socket protocol.
//!
//! A worker serves one driver connection at a time. Partitions received in
//! CONFIGURE stay resident until the process exits, so a reconnecting driver
//! may skip reconfiguration (it never does today).

use std::io::{BufReader, BufWriter, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::thread::{self, JoinHandle};

use super::protocol::{self, Message};
use super::{DynamicItem, JobKind};
use crate::error::{Error, Result};
use crate::partition::ContextPartition;

#[derive(Default)]
struct WorkerState {
    partitions: Vec<ContextPartition>,
    configures: u64,
}

enum Flow {
    Continue,
    Shutdown,
}

impl WorkerState {
    fn status(&self) -> Message {
        Message::Status {
            ok: true,
            partitions: self.partitions.iter().map(|p| p.id).collect(),
            configures: self.configures,
            detail: None,
        }
    }

    fn width(&self) -> usize {
        self.partitions.first().map_or(0, |p| p.context().attribute_count())
    }

    fn configure(&mut self, wires: Vec<protocol::WirePartition>) -> Result<()> {
        let parts = wires.iter().map(|w| w.decode()).collect::<Result<Vec<_>>>()?;
        if parts.is_empty() {
            return Err(Error::Protocol("CONFIGURE carried no partitions".into()));
        }
        let m = parts[0].context().attribute_count();
        if parts.iter().any(|p| p.context().attribute_count() != m) {
            return Err(Error::Protocol("partitions disagree on attribute count".into()));
        }
        self.partitions = parts;
        self.configures += 1;
        Ok(())
    }

    fn items(
        &self,
        job: &str,
        items: &[Vec<usize>],
        generators: Option<&[Option<usize>]>,
    ) -> Result<(JobKind, Vec<DynamicItem>)> {
        let job: JobKind = job.parse().map_err(|e: Error| Error::Protocol(e.to_string()))?;
        if self.partitions.is_empty() {
            return Err(Error::Protocol("MAP before CONFIGURE".into()));
        }
        if let Some(g) = generators {
            if g.len() != items.len() {
                return Err(Error::Protocol(format!("{} generators for {} items", g.len(), items.len())));
            }
        }
        let width = self.width();
        let mut out = Vec::with_capacity(items.len());
        for (k, idx) in items.iter().enumerate() {
            let generator = match generators.and_then(|g| g[k]) {
                Some(j) => Some(protocol::attribute(width, j)?),
                None => None,
            };
            out.push(DynamicItem {
                intent: protocol::set_from_indices(width, idx)?,
                generator,
            });
        }
        Ok((job, out))
    }

    fn handle<W: Write>(&mut self, msg: Message, out: &mut W) -> Result<Flow> {
        match msg {
            Message::Configure { partitions } => {
                let reply = match self.configure(partitions) {
                    Ok(()) => self.status(),
                    Err(e) => Message::Error { message: e.to_string() },
                };
                protocol::write_frame(out, &reply)?;
            }
            Message::Map {
                iteration,
                job,
                items,
                generators,
            } => match self.items(&job, &items, generators.as_deref()) {
                Ok((job, items)) => {
                    let map = job.map_fn();
                    for item in &items {
                        let mut values = Vec::new();
                        for part in &self.partitions {
                            for v in map.apply(part, item).values {
                                values.push((v.attribute.0, protocol::indices(&v.intent), v.partition));
                            }
                        }
                        let reply = Message::MapResult {
                            iteration,
                            key: protocol::indices(&item.intent),
                            values,
                        };
                        protocol::write_frame(out, &reply)?;
                    }
                }
                Err(e) => {
                    protocol::write_frame(out, &Message::Error { message: e.to_string() })?;
                }
            },
            Message::Status { .. } => {
                protocol::write_frame(out, &self.status())?;
            }
            Message::Shutdown => {
                protocol::write_frame(out, &self.status())?;
                return Ok(Flow::Shutdown);
            }
            other => {
                let message = format!("unexpected message for a worker: {other:?}");
                protocol::write_frame(out, &Message::Error { message })?;
            }
        }
        Ok(Flow::Continue)
    }

    fn serve_connection(&mut self, stream: TcpStream) -> Result<Flow> {
        stream.set_nodelay(true)?;
        let mut reader = BufReader::new(stream.try_clone()?);
        let mut writer = BufWriter::new(stream);
        loop {
            let Some(body) = protocol::read_raw_frame(&mut reader)? else {
                return Ok(Flow::Continue);
            };
            let flow = match protocol::decode(&body) {
                Ok(msg) => self.handle(msg, &mut writer)?,
                Err(e) => {
                    protocol::write_frame(&mut writer, &Message::Error { message: e.to_string() })?;
                    Flow::Continue
                }
            };
            if let Flow::Shutdown = flow {
                return Ok(Flow::Shutdown);
            }
        }
    }
}

/// Serves drivers on `listener` until one of them sends SHUTDOWN.
pub fn serve(listener: TcpListener) -> Result<()> {
    let mut state = WorkerState::default();
    for stream in listener.incoming() {
        match state.serve_connection(stream?) {
            Ok(Flow::Shutdown) => return Ok(()),
            Ok(Flow::Continue) => {}
            // a broken driver connection does not take the worker down
            Err(Error::Io(_)) | Err(Error::Protocol(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

/// Binds an ephemeral localhost port and serves it on a background thread.
pub fn spawn_local_worker() -> Result<(SocketAddr, JoinHandle<Result<()>>)> {
    let listener = TcpListener::bind("127.0.0.1:0")?;
    let addr = listener.local_addr()?;
    let handle = thread::Builder::new()
        .name(format!("worker-{addr}"))
        .spawn(move || serve(listener))?;
    Ok((addr, handle))
}
