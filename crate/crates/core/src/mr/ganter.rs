//! MRGanter: one lectic successor per round.

use super::{absent_descending, fold_by_attribute, MrOptions, MrRun};
use crate::context::{lectic_less_at, AttributeId, AttributeSet, ObjectSet};
use crate::error::Result;
use crate::partition::{merged_closure, ContextPartition, PartitionSet};
use crate::runtime::{run_until, DynamicItem, Job, JobKind, KeyedOutput, LocalClosure, RuntimeHandle};

/// `l_i = d ⊕ p_i` inside one partition for every `p_i ∉ d`, `p_m` first.
pub fn mrganter_map(part: &ContextPartition, d: &AttributeSet) -> KeyedOutput {
    let ctx = part.context();
    let members: Vec<usize> = d.iter().collect();
    let mut prefix: Vec<ObjectSet> = Vec::with_capacity(members.len() + 1);
    prefix.push(ctx.all_objects());
    for &y in &members {
        let mut e = prefix.last().unwrap().clone();
        e.intersect_with(ctx.column(y));
        prefix.push(e);
    }
    let mut out = KeyedOutput::new(&DynamicItem::intent(d.clone()));
    let mut below = members.len();
    for i in (0..ctx.attribute_count()).rev() {
        while below > 0 && members[below - 1] >= i {
            below -= 1;
        }
        if d.contains(i) {
            continue;
        }
        let mut extent = prefix[below].clone();
        extent.intersect_with(ctx.column(i));
        out.values.push(LocalClosure {
            attribute: AttributeId(i),
            intent: ctx.intent_of(&extent),
            partition: part.id,
        });
    }
    out
}

/// Merges the local closures of `d` and returns the globally next closure:
/// the first merged `f` (scanning `p_m` down) with `d <_i f`. `None` only for
/// `d = P`.
pub fn mrganter_reduce(group: &KeyedOutput, partitions: usize) -> Result<Option<AttributeSet>> {
    reduce(group, partitions, false)
}

fn reduce(group: &KeyedOutput, partitions: usize, skip_lectic_test: bool) -> Result<Option<AttributeSet>> {
    let d = &group.key;
    let merged = fold_by_attribute(group, partitions, &absent_descending(d))?;
    Ok(merged
        .into_iter()
        .find(|(i, f)| skip_lectic_test || lectic_less_at(d, f, *i))
        .map(|(_, f)| f))
}

pub struct MrGanterJob {
    partitions: usize,
    skip_lectic_test: bool,
}

impl MrGanterJob {
    pub fn new(partitions: usize) -> Self {
        Self {
            partitions,
            skip_lectic_test: false,
        }
    }
}

impl Job for MrGanterJob {
    fn kind(&self) -> JobKind {
        JobKind::MrGanter
    }

    fn reduce(&mut self, group: KeyedOutput) -> Result<Vec<DynamicItem>> {
        Ok(reduce(&group, self.partitions, self.skip_lectic_test)?
            .map(DynamicItem::intent)
            .into_iter()
            .collect())
    }

    fn is_finished(&self, combined: &[DynamicItem]) -> bool {
        combined.first().is_none_or(|item| item.intent.is_full())
    }
}

/// Seeds with `∅''` and walks the lectic order until `P`.
pub fn mrganter_drive(parts: &PartitionSet, handle: &mut RuntimeHandle, opts: &MrOptions) -> Result<MrRun> {
    let seed = merged_closure(parts, &AttributeSet::empty(parts.attribute_count()))?;
    let mut job = MrGanterJob {
        partitions: parts.len(),
        skip_lectic_test: opts.skip_lectic_test,
    };
    let outcome = run_until(handle, &mut job, vec![DynamicItem::intent(seed.clone())], opts.max_iterations)?;
    let mut intents = vec![seed];
    let mut batch_sizes = vec![1];
    for batch in outcome.outputs {
        batch_sizes.push(batch.len());
        intents.extend(batch.into_iter().map(|item| item.intent));
    }
    Ok(MrRun {
        job: JobKind::MrGanter,
        intents,
        iterations: outcome.rounds,
        rounds: outcome.rounds,
        batch_sizes,
        transfer: handle.transfer_stats().clone(),
    })
}
