//! MRGanter, MRGanter+ and MRCbo as jobs on the iterative runtime.

mod cbo;
mod ganter;
mod ganter_plus;
mod index;

pub use cbo::{mrcbo_drive, mrcbo_map, mrcbo_reduce, MrCboJob};
pub use ganter::{mrganter_drive, mrganter_map, mrganter_reduce, MrGanterJob};
pub use ganter_plus::{mrganter_plus_drive, mrganter_plus_reduce, MrGanterPlusJob};
pub use index::{ConceptIndex, Head};

use crate::context::{AttributeId, AttributeSet, Concept, ConceptList};
use crate::error::{Error, Result};
use crate::partition::{merged_extent, PartitionSet};
use crate::runtime::{self, JobKind, KeyedOutput, Mode, RuntimeHandle, TransferStats};

pub const DEFAULT_MAX_ITERATIONS: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MrOptions {
    pub max_iterations: usize,
    pub chunk_size: usize,
    /// Deliberate fault for exercising `verify`: MRGanter accepts the first
    /// merged closure without the lectic test.
    #[doc(hidden)]
    pub skip_lectic_test: bool,
}

impl Default for MrOptions {
    fn default() -> Self {
        Self {
            max_iterations: DEFAULT_MAX_ITERATIONS,
            chunk_size: runtime::DEFAULT_CHUNK_SIZE,
            skip_lectic_test: false,
        }
    }
}

/// Result of one distributed enumeration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MrRun {
    pub job: JobKind,
    /// Intents in discovery order, seed first.
    pub intents: Vec<AttributeSet>,
    /// Iteration count as reported: every round for MRGanter, productive
    /// rounds for MRGanter+ and MRCbo.
    pub iterations: usize,
    /// Map-reduce rounds actually executed.
    pub rounds: usize,
    /// Number of new intents per batch; entry 0 is the seed.
    pub batch_sizes: Vec<usize>,
    pub transfer: TransferStats,
}

impl MrRun {
    /// Intents with extents attached through the partitions, lectic order.
    pub fn concepts(&self, parts: &PartitionSet) -> Result<ConceptList> {
        let mut out = ConceptList::new();
        for intent in &self.intents {
            out.push(Concept {
                extent: merged_extent(parts, intent)?,
                intent: intent.clone(),
            });
        }
        out.sort_lectic();
        Ok(out)
    }

    /// Intents grouped by batch, seed batch first.
    pub fn batches(&self) -> Vec<&[AttributeSet]> {
        let mut rest = self.intents.as_slice();
        self.batch_sizes
            .iter()
            .map(|&n| {
                let (head, tail) = rest.split_at(n);
                rest = tail;
                head
            })
            .collect()
    }
}

/// Ψ-folds a key's map outputs per generating attribute.
///
/// `expected` lists the attributes every partition must have answered for;
/// the result follows its order.
pub(crate) fn fold_by_attribute(
    group: &KeyedOutput,
    partitions: usize,
    expected: &[usize],
) -> Result<Vec<(AttributeId, AttributeSet)>> {
    let m = group.key.width();
    let mut acc: Vec<Option<AttributeSet>> = vec![None; m];
    let mut seen = crate::bitset::BitSet::new(m * partitions);
    for v in &group.values {
        let (j, k) = (v.attribute.0, v.partition);
        if j >= m || k >= partitions {
            return Err(Error::Integrity(format!(
                "map value for attribute {j} from partition {k} is out of range"
            )));
        }
        if seen.contains(j * partitions + k) {
            return Err(Error::Integrity(format!(
                "partition {k} answered attribute {j} twice for key {:?}",
                group.key
            )));
        }
        seen.insert(j * partitions + k);
        match &mut acc[j] {
            Some(f) => f.intersect_with(&v.intent),
            slot => *slot = Some(v.intent.clone()),
        }
    }
    let mut out = Vec::with_capacity(expected.len());
    for &j in expected {
        let answered = (0..partitions).filter(|&k| seen.contains(j * partitions + k)).count();
        if answered != partitions {
            return Err(Error::Integrity(format!(
                "attribute {j} for key {:?}: {answered} of {partitions} partitions contributed",
                group.key
            )));
        }
        out.push((AttributeId(j), acc[j].take().expect("answered attribute has a value")));
    }
    let extra = acc.iter().position(Option::is_some);
    if let Some(j) = extra {
        return Err(Error::Integrity(format!("unexpected map value for attribute {j}")));
    }
    Ok(out)
}

/// Attributes outside `d`, `p_m` first.
pub(crate) fn absent_descending(d: &AttributeSet) -> Vec<usize> {
    (0..d.width()).rev().filter(|&j| !d.contains(j)).collect()
}

/// Configures a runtime, runs the job to completion and shuts it down.
pub fn run(kind: JobKind, parts: &PartitionSet, workers: usize, mode: Mode, opts: &MrOptions) -> Result<MrRun> {
    let mut handle = runtime::configure(parts, workers, mode)?;
    handle.set_chunk_size(opts.chunk_size);
    let result = drive(kind, parts, &mut handle, opts);
    let closed = handle.shutdown();
    let run = result?;
    closed?;
    Ok(run)
}

pub fn drive(kind: JobKind, parts: &PartitionSet, handle: &mut RuntimeHandle, opts: &MrOptions) -> Result<MrRun> {
    match kind {
        JobKind::MrGanter => mrganter_drive(parts, handle, opts),
        JobKind::MrGanterPlus => mrganter_plus_drive(parts, handle, opts),
        JobKind::MrCbo => mrcbo_drive(parts, handle, opts),
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use crate::fixtures::Toy;
    use crate::partition::{split, PartitionSet, SplitStrategy};
    use crate::runtime::{configure, DynamicItem, DynamicPayload, JobKind, KeyedOutput, Mode};

    pub fn toy_split() -> (Toy, PartitionSet) {
        let t = Toy::new();
        let parts = split(&t.ctx, 2, SplitStrategy::Contiguous).unwrap();
        (t, parts)
    }

    pub fn grouped(parts: &PartitionSet, job: JobKind, item: DynamicItem) -> KeyedOutput {
        let mut handle = configure(parts, parts.len(), Mode::InProcess).unwrap();
        let payload = DynamicPayload { iteration: 0, items: vec![item] };
        handle.run_iteration(job, &payload).unwrap().pop().unwrap()
    }
}
