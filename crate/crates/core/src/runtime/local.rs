//! In-process backend: one thread per worker, commands over channels.

use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::Arc;
use std::thread::{self, JoinHandle};

use super::{DynamicItem, JobKind, KeyedOutput, WorkerStatus};
use crate::error::{Error, Result};
use crate::partition::ContextPartition;

enum Command {
    Map {
        job: JobKind,
        items: Arc<[DynamicItem]>,
        reply: Sender<Vec<KeyedOutput>>,
    },
    Status {
        reply: Sender<WorkerStatus>,
    },
    Shutdown,
}

struct LocalWorker {
    name: String,
    commands: Sender<Command>,
    thread: Option<JoinHandle<()>>,
}

pub(super) struct LocalPool {
    workers: Vec<LocalWorker>,
}

fn worker_loop(name: String, partitions: Vec<Arc<ContextPartition>>, commands: Receiver<Command>) {
    for command in commands {
        match command {
            Command::Map { job, items, reply } => {
                let map = job.map_fn();
                let out = items
                    .iter()
                    .map(|item| {
                        let mut group = KeyedOutput::new(item);
                        for part in &partitions {
                            group.values.extend(map.apply(part, item).values);
                        }
                        group
                    })
                    .collect();
                let _ = reply.send(out);
            }
            Command::Status { reply } => {
                let _ = reply.send(WorkerStatus {
                    worker: name.clone(),
                    partitions: partitions.iter().map(|p| p.id).collect(),
                    configures: 1,
                });
            }
            Command::Shutdown => break,
        }
    }
}

impl LocalPool {
    pub(super) fn start(partitions: &[Arc<ContextPartition>], assignment: &[Vec<usize>]) -> Result<Self> {
        let mut workers = Vec::with_capacity(assignment.len());
        for (w, ids) in assignment.iter().enumerate() {
            let name = format!("local-{w}");
            let owned: Vec<Arc<ContextPartition>> = ids.iter().map(|&k| Arc::clone(&partitions[k])).collect();
            let (tx, rx) = mpsc::channel();
            let thread_name = name.clone();
            let thread = thread::Builder::new()
                .name(name.clone())
                .spawn(move || worker_loop(thread_name, owned, rx))?;
            workers.push(LocalWorker {
                name,
                commands: tx,
                thread: Some(thread),
            });
        }
        Ok(Self { workers })
    }

    fn send(worker: &LocalWorker, command: Command) -> Result<()> {
        worker.commands.send(command).map_err(|_| Error::Worker {
            worker: worker.name.clone(),
            message: "worker thread has exited".into(),
        })
    }

    pub(super) fn map(&mut self, job: JobKind, chunk: &[DynamicItem]) -> Result<Vec<Vec<KeyedOutput>>> {
        let items: Arc<[DynamicItem]> = chunk.into();
        let mut replies = Vec::with_capacity(self.workers.len());
        for worker in &self.workers {
            let (tx, rx) = mpsc::channel();
            Self::send(
                worker,
                Command::Map {
                    job,
                    items: Arc::clone(&items),
                    reply: tx,
                },
            )?;
            replies.push(rx);
        }
        replies
            .into_iter()
            .zip(&self.workers)
            .map(|(rx, worker)| {
                rx.recv().map_err(|_| Error::Worker {
                    worker: worker.name.clone(),
                    message: "worker thread died during map".into(),
                })
            })
            .collect()
    }

    pub(super) fn status(&mut self) -> Result<Vec<WorkerStatus>> {
        self.workers
            .iter()
            .map(|worker| {
                let (tx, rx) = mpsc::channel();
                Self::send(worker, Command::Status { reply: tx })?;
                rx.recv().map_err(|_| Error::Worker {
                    worker: worker.name.clone(),
                    message: "no status reply".into(),
                })
            })
            .collect()
    }

    pub(super) fn shutdown(&mut self) -> Result<()> {
        for worker in &mut self.workers {
            let _ = worker.commands.send(Command::Shutdown);
            if let Some(t) = worker.thread.take() {
                let _ = t.join();
            }
        }
        Ok(())
    }
}
