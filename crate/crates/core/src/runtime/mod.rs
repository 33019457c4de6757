//! A small iterative map-reduce engine.
//!
//! Workers are long-lived and receive their partitions once, at configure
//! time. Each iteration the driver broadcasts the dynamic data (the intents
//! produced by the previous round), every worker maps each item against each
//! of its partitions, and the driver groups the keyed outputs, reduces them
//! and decides whether to go again. Reduce always runs on the driver.
//!
//! Two backends share this contract: an in-process thread pool and a TCP
//! driver talking to `fcamr worker` processes (see [`protocol`]).

mod local;
pub mod protocol;
mod socket;
pub mod worker;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::context::{AttributeId, AttributeSet};
use crate::error::{Error, Result};
use crate::mr;
use crate::partition::{ContextPartition, PartitionSet};

/// Registered jobs. The name travels on the wire so a worker knows which map
/// function to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum JobKind {
    MrGanter,
    MrGanterPlus,
    MrCbo,
}

impl JobKind {
    pub const ALL: [JobKind; 3] = [JobKind::MrGanter, JobKind::MrGanterPlus, JobKind::MrCbo];

    pub fn name(self) -> &'static str {
        match self {
            JobKind::MrGanter => "mrganter",
            JobKind::MrGanterPlus => "mrganter+",
            JobKind::MrCbo => "mrcbo",
        }
    }

    pub fn map_fn(self) -> MapFn {
        match self {
            JobKind::MrGanter | JobKind::MrGanterPlus => MapFn::Ganter,
            JobKind::MrCbo => MapFn::CloseByOne,
        }
    }
}

impl FromStr for JobKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        JobKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("no job registered under {s:?}")))
    }
}

impl fmt::Display for JobKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Map functions available to workers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapFn {
    /// `d ⊕ p_i` for every `p_i ∉ d`, closed locally.
    Ganter,
    /// `(B ∪ {p_i})''` locally for every admissible `p_i` above the generator.
    CloseByOne,
}

impl MapFn {
    pub fn apply(self, part: &ContextPartition, item: &DynamicItem) -> KeyedOutput {
        match self {
            MapFn::Ganter => mr::mrganter_map(part, &item.intent),
            MapFn::CloseByOne => mr::mrcbo_map(part, item),
        }
    }
}

/// One unit of dynamic data: an intent and, for CloseByOne jobs, the
/// attribute that generated it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DynamicItem {
    pub intent: AttributeSet,
    pub generator: Option<AttributeId>,
}

impl DynamicItem {
    pub fn intent(intent: AttributeSet) -> Self {
        Self {
            intent,
            generator: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DynamicPayload {
    pub iteration: u64,
    pub items: Vec<DynamicItem>,
}

/// A local intent `l_i` generated from attribute `p_i` inside one partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalClosure {
    pub attribute: AttributeId,
    pub intent: AttributeSet,
    pub partition: usize,
}

/// All map outputs produced for one key `d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyedOutput {
    pub key: AttributeSet,
    pub generator: Option<AttributeId>,
    pub values: Vec<LocalClosure>,
}

impl KeyedOutput {
    pub fn new(item: &DynamicItem) -> Self {
        Self {
            key: item.intent.clone(),
            generator: item.generator,
            values: Vec::new(),
        }
    }

    fn absorb(&mut self, other: KeyedOutput) -> Result<()> {
        if other.key != self.key || other.generator != self.generator {
            return Err(Error::Integrity(format!(
                "map output keyed {:?} grouped under {:?}",
                other.key, self.key
            )));
        }
        self.values.extend(other.values);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Mode {
    InProcess,
    /// Dial already-running workers at these `host:port` addresses.
    Socket(Vec<String>),
}

/// Bytes and messages that crossed the driver/worker boundary.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct TransferStats {
    /// Times each partition's static data was shipped to a worker.
    pub static_sends: BTreeMap<usize, usize>,
    /// Encoded static bytes per partition (0 in-process, where data is shared).
    pub static_bytes: BTreeMap<usize, usize>,
    pub map_invocations: u64,
    pub dynamic_bytes_sent: u64,
    pub result_bytes_received: u64,
    pub iterations: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkerStatus {
    pub worker: String,
    pub partitions: Vec<usize>,
    pub configures: u64,
}

pub const DEFAULT_CHUNK_SIZE: usize = 2048;

enum Backend {
    Local(local::LocalPool),
    Socket(socket::SocketDriver),
}

/// Configured runtime: workers hold their partitions until shutdown.
pub struct RuntimeHandle {
    backend: Backend,
    assignment: Vec<Vec<usize>>,
    partition_count: usize,
    last_iteration: Option<u64>,
    chunk_size: usize,
    stats: TransferStats,
}

/// Block assignment of `n` partitions to `workers` workers.
pub fn block_assignment(n: usize, workers: usize) -> Vec<Vec<usize>> {
    (0..workers)
        .map(|w| (w * n / workers..(w + 1) * n / workers).collect())
        .collect()
}

pub fn configure(parts: &PartitionSet, workers: usize, mode: Mode) -> Result<RuntimeHandle> {
    if workers == 0 {
        return Err(Error::Config("at least one worker is required".into()));
    }
    if workers > parts.len() {
        return Err(Error::Config(format!(
            "{workers} workers for {} partitions; every worker needs a partition",
            parts.len()
        )));
    }
    let assignment = block_assignment(parts.len(), workers);
    let shared: Vec<Arc<ContextPartition>> =
        parts.partitions().iter().cloned().map(Arc::new).collect();
    let mut stats = TransferStats::default();
    let backend = match mode {
        Mode::InProcess => {
            let pool = local::LocalPool::start(&shared, &assignment)?;
            for k in 0..parts.len() {
                stats.static_sends.insert(k, 1);
                stats.static_bytes.insert(k, 0);
            }
            Backend::Local(pool)
        }
        Mode::Socket(addrs) => {
            if addrs.len() != workers {
                return Err(Error::Config(format!(
                    "{workers} workers requested but {} addresses given",
                    addrs.len()
                )));
            }
            Backend::Socket(socket::SocketDriver::connect(&addrs, &shared, &assignment, &mut stats)?)
        }
    };
    Ok(RuntimeHandle {
        backend,
        assignment,
        partition_count: parts.len(),
        last_iteration: None,
        chunk_size: DEFAULT_CHUNK_SIZE,
        stats,
    })
}

impl RuntimeHandle {
    pub fn workers(&self) -> usize {
        self.assignment.len()
    }

    /// Partition ids held by each worker.
    pub fn assignment(&self) -> &[Vec<usize>] {
        &self.assignment
    }

    pub fn partition_count(&self) -> usize {
        self.partition_count
    }

    pub fn transfer_stats(&self) -> &TransferStats {
        &self.stats
    }

    /// Maximum number of items per map dispatch; larger payloads are
    /// streamed through in chunks within the same iteration.
    pub fn set_chunk_size(&mut self, chunk: usize) {
        self.chunk_size = chunk.max(1);
    }

    pub fn status(&mut self) -> Result<Vec<WorkerStatus>> {
        match &mut self.backend {
            Backend::Local(pool) => pool.status(),
            Backend::Socket(driver) => driver.status(),
        }
    }

    /// Broadcasts `payload`, maps every item against every partition and
    /// returns one grouped output per key, in payload order.
    pub fn run_iteration(&mut self, job: JobKind, payload: &DynamicPayload) -> Result<Vec<KeyedOutput>> {
        let mut out = Vec::with_capacity(payload.items.len());
        self.run_iteration_with(job, payload, |group| {
            out.push(group);
            Ok(())
        })?;
        Ok(out)
    }

    /// Streaming form of [`run_iteration`](Self::run_iteration): `sink` sees
    /// each grouped key in payload order.
    pub fn run_iteration_with<F>(&mut self, job: JobKind, payload: &DynamicPayload, mut sink: F) -> Result<()>
    where
        F: FnMut(KeyedOutput) -> Result<()>,
    {
        if let Some(last) = self.last_iteration {
            if payload.iteration <= last {
                return Err(Error::contract(format!(
                    "iteration {} does not follow iteration {last}",
                    payload.iteration
                )));
            }
        }
        if payload.items.is_empty() {
            return Err(Error::contract("dispatched payload has no items"));
        }
        let mut seen: HashMap<&DynamicItem, usize> = HashMap::with_capacity(payload.items.len());
        for (idx, item) in payload.items.iter().enumerate() {
            if let Some(prev) = seen.insert(item, idx) {
                return Err(Error::contract(format!(
                    "payload items {prev} and {idx} carry the same key"
                )));
            }
        }
        self.last_iteration = Some(payload.iteration);
        self.stats.iterations += 1;

        for chunk in payload.items.chunks(self.chunk_size) {
            let per_worker = match &mut self.backend {
                Backend::Local(pool) => pool.map(job, chunk)?,
                Backend::Socket(driver) => driver.map(job, payload.iteration, chunk, &mut self.stats)?,
            };
            let calls: usize = self.assignment.iter().map(|a| a.len() * chunk.len()).sum();
            self.stats.map_invocations += calls as u64;
            let mut per_worker: Vec<std::vec::IntoIter<KeyedOutput>> =
                per_worker.into_iter().map(Vec::into_iter).collect();
            for item in chunk {
                let mut group = KeyedOutput::new(item);
                for outputs in per_worker.iter_mut() {
                    let part = outputs.next().ok_or_else(|| {
                        Error::Integrity("worker returned fewer outputs than items".into())
                    })?;
                    group.absorb(part)?;
                }
                sink(group)?;
            }
            if per_worker.iter_mut().any(|o| o.next().is_some()) {
                return Err(Error::Integrity("worker returned more outputs than items".into()));
            }
        }
        Ok(())
    }

    pub fn shutdown(mut self) -> Result<()> {
        self.shutdown_backend()
    }

    fn shutdown_backend(&mut self) -> Result<()> {
        match &mut self.backend {
            Backend::Local(pool) => pool.shutdown(),
            Backend::Socket(driver) => driver.shutdown(),
        }
    }
}

impl Drop for RuntimeHandle {
    fn drop(&mut self) {
        let _ = self.shutdown_backend();
    }
}

/// The driver-side half of a job: how to reduce one key and when to stop.
pub trait Job {
    fn kind(&self) -> JobKind;

    /// Reduces the grouped map outputs of one key into new dynamic items.
    fn reduce(&mut self, group: KeyedOutput) -> Result<Vec<DynamicItem>>;

    /// Termination test over the combined reduce output of a round (or the
    /// seed, before the first round).
    fn is_finished(&self, combined: &[DynamicItem]) -> bool;
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct JobOutcome {
    /// Combined reduce output of every executed round.
    pub outputs: Vec<Vec<DynamicItem>>,
    /// Rounds executed.
    pub rounds: usize,
    /// Rounds that produced at least one item.
    pub productive: usize,
}

/// Iterates map → reduce → termination test, starting from `seed`.
pub fn run_until(
    handle: &mut RuntimeHandle,
    job: &mut dyn Job,
    seed: Vec<DynamicItem>,
    max_iterations: usize,
) -> Result<JobOutcome> {
    let mut outcome = JobOutcome::default();
    let mut current = seed;
    let base = handle.last_iteration.map_or(0, |i| i + 1);
    while !job.is_finished(&current) {
        if outcome.rounds >= max_iterations {
            return Err(Error::IterationLimit(max_iterations));
        }
        let payload = DynamicPayload {
            iteration: base + outcome.rounds as u64,
            items: current,
        };
        let mut combined = Vec::new();
        handle.run_iteration_with(job.kind(), &payload, |group| {
            combined.extend(job.reduce(group)?);
            Ok(())
        })?;
        outcome.rounds += 1;
        if !combined.is_empty() {
            outcome.productive += 1;
        }
        outcome.outputs.push(combined.clone());
        current = combined;
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::Toy;
    use crate::partition::{split, SplitStrategy};

    fn toy_split() -> (Toy, PartitionSet) {
        let t = Toy::new();
        let parts = split(&t.ctx, 2, SplitStrategy::Contiguous).unwrap();
        (t, parts)
    }

    #[test]
    fn block_assignment_shapes() {
        assert_eq!(block_assignment(2, 2), vec![vec![0], vec![1]]);
        assert_eq!(block_assignment(4, 2), vec![vec![0, 1], vec![2, 3]]);
        assert_eq!(block_assignment(5, 2), vec![vec![0, 1], vec![2, 3, 4]]);
    }

    #[test]
    fn configure_in_process() {
        let (_, parts) = toy_split();
        let mut handle = configure(&parts, 2, Mode::InProcess).unwrap();
        assert_eq!(handle.workers(), 2);
        assert_eq!(handle.assignment(), &[vec![0], vec![1]]);
        let status = handle.status().unwrap();
        assert_eq!(status[0].partitions, vec![0]);
        assert_eq!(status[1].partitions, vec![1]);
        assert_eq!(handle.transfer_stats().static_sends.values().copied().collect::<Vec<_>>(), [1, 1]);
    }

    #[test]
    fn configure_rejects_empty_worker_set() {
        let (_, parts) = toy_split();
        assert!(matches!(configure(&parts, 0, Mode::InProcess), Err(Error::Config(_))));
        assert!(matches!(configure(&parts, 3, Mode::InProcess), Err(Error::Config(_))));
    }

    #[test]
    fn four_partitions_two_workers() {
        let t = Toy::new();
        let parts = split(&t.ctx, 4, SplitStrategy::Contiguous).unwrap();
        let mut handle = configure(&parts, 2, Mode::InProcess).unwrap();
        let status = handle.status().unwrap();
        assert_eq!(status[0].partitions, vec![0, 1]);
        assert_eq!(status[1].partitions, vec![2, 3]);
    }

    #[test]
    fn ganter_map_of_empty_key_groups_both_partitions() {
        let (t, parts) = toy_split();
        let mut handle = configure(&parts, 2, Mode::InProcess).unwrap();
        let payload = DynamicPayload {
            iteration: 0,
            items: vec![DynamicItem::intent(t.attrs(""))],
        };
        let out = handle.run_iteration(JobKind::MrGanter, &payload).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].key, t.attrs(""));
        for k in 0..2 {
            assert_eq!(out[0].values.iter().filter(|v| v.partition == k).count(), 7);
        }
    }

    #[test]
    fn two_items_two_partitions() {
        let (t, parts) = toy_split();
        let mut handle = configure(&parts, 2, Mode::InProcess).unwrap();
        handle.set_chunk_size(1);
        let payload = DynamicPayload {
            iteration: 0,
            items: vec![DynamicItem::intent(t.attrs("")), DynamicItem::intent(t.attrs("f"))],
        };
        let out = handle.run_iteration(JobKind::MrGanterPlus, &payload).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(handle.transfer_stats().map_invocations, 4);
        assert_eq!(out[1].key, t.attrs("f"));
        assert_eq!(out[1].values.len(), 2 * 6);
    }

    #[test]
    fn payload_contract() {
        let (t, parts) = toy_split();
        let mut handle = configure(&parts, 1, Mode::InProcess).unwrap();
        let empty = DynamicPayload { iteration: 0, items: vec![] };
        assert!(handle.run_iteration(JobKind::MrGanter, &empty).is_err());
        let dup = DynamicPayload {
            iteration: 0,
            items: vec![DynamicItem::intent(t.attrs("f")), DynamicItem::intent(t.attrs("f"))],
        };
        assert!(handle.run_iteration(JobKind::MrGanter, &dup).is_err());
        let ok = DynamicPayload { iteration: 3, items: vec![DynamicItem::intent(t.attrs("f"))] };
        handle.run_iteration(JobKind::MrGanter, &ok).unwrap();
        let stale = DynamicPayload { iteration: 3, items: vec![DynamicItem::intent(t.attrs("e"))] };
        assert!(handle.run_iteration(JobKind::MrGanter, &stale).is_err());
    }

    struct Immediate;

    impl Job for Immediate {
        fn kind(&self) -> JobKind {
            JobKind::MrGanter
        }
        fn reduce(&mut self, _: KeyedOutput) -> Result<Vec<DynamicItem>> {
            unreachable!("never dispatched")
        }
        fn is_finished(&self, _: &[DynamicItem]) -> bool {
            true
        }
    }

    #[test]
    fn immediately_finished_job_runs_zero_rounds() {
        let (t, parts) = toy_split();
        let mut handle = configure(&parts, 2, Mode::InProcess).unwrap();
        let out = run_until(&mut handle, &mut Immediate, vec![DynamicItem::intent(t.attrs(""))], 10).unwrap();
        assert_eq!(out.rounds, 0);
        assert!(out.outputs.is_empty());
    }

    #[test]
    fn job_names_resolve() {
        for kind in JobKind::ALL {
            assert_eq!(kind.name().parse::<JobKind>().unwrap(), kind);
        }
        assert!("pagerank".parse::<JobKind>().is_err());
    }
}
