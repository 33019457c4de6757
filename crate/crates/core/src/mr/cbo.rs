//! MRCbo: level-synchronous CloseByOne. Each round expands every concept of
//! the current tree level.

use super::{fold_by_attribute, MrOptions, MrRun};
use crate::context::{AttributeId, AttributeSet};
use crate::error::Result;
use crate::partition::{merged_closure, ContextPartition, PartitionSet};
use crate::runtime::{run_until, DynamicItem, Job, JobKind, KeyedOutput, LocalClosure, RuntimeHandle};

/// Attributes a CbO node may extend with: not in `B`, above the generator.
fn admissible(item: &DynamicItem) -> Vec<usize> {
    let start = item.generator.map_or(0, |g| g.0 + 1);
    (start..item.intent.width()).filter(|&j| !item.intent.contains(j)).collect()
}

/// `(B ∪ {p_i})''` inside one partition for every admissible `p_i`.
pub fn mrcbo_map(part: &ContextPartition, item: &DynamicItem) -> KeyedOutput {
    let ctx = part.context();
    let base = ctx.extent_of(item.intent.bits());
    let mut out = KeyedOutput::new(item);
    for i in admissible(item) {
        let mut extent = base.clone();
        extent.intersect_with(ctx.column(i));
        out.values.push(LocalClosure {
            attribute: AttributeId(i),
            intent: ctx.intent_of(&extent),
            partition: part.id,
        });
    }
    out
}

/// Merges each admissible extension and keeps the canonical ones as children
/// `(D, p_i)`.
pub fn mrcbo_reduce(group: &KeyedOutput, partitions: usize) -> Result<Vec<DynamicItem>> {
    let item = DynamicItem {
        intent: group.key.clone(),
        generator: group.generator,
    };
    let b = &group.key;
    let merged = fold_by_attribute(group, partitions, &admissible(&item))?;
    Ok(merged
        .into_iter()
        .filter(|(i, d)| d.eq_below(b, i.0))
        .map(|(i, d)| DynamicItem {
            intent: d,
            generator: Some(i),
        })
        .collect())
}

pub struct MrCboJob {
    partitions: usize,
}

impl MrCboJob {
    pub fn new(partitions: usize) -> Self {
        Self { partitions }
    }
}

impl Job for MrCboJob {
    fn kind(&self) -> JobKind {
        JobKind::MrCbo
    }

    fn reduce(&mut self, group: KeyedOutput) -> Result<Vec<DynamicItem>> {
        mrcbo_reduce(&group, self.partitions)
    }

    fn is_finished(&self, combined: &[DynamicItem]) -> bool {
        combined.is_empty()
    }
}

pub fn mrcbo_drive(parts: &PartitionSet, handle: &mut RuntimeHandle, opts: &MrOptions) -> Result<MrRun> {
    let seed = merged_closure(parts, &AttributeSet::empty(parts.attribute_count()))?;
    let mut job = MrCboJob::new(parts.len());
    let root = DynamicItem {
        intent: seed.clone(),
        generator: None,
    };
    let outcome = run_until(handle, &mut job, vec![root], opts.max_iterations)?;
    let mut intents = vec![seed];
    let mut batch_sizes = vec![1];
    for batch in outcome.outputs.into_iter().filter(|b| !b.is_empty()) {
        batch_sizes.push(batch.len());
        intents.extend(batch.into_iter().map(|item| item.intent));
    }
    Ok(MrRun {
        job: JobKind::MrCbo,
        intents,
        iterations: outcome.productive,
        rounds: outcome.rounds,
        batch_sizes,
        transfer: handle.transfer_stats().clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::super::{run, MrOptions};
    use super::*;
    use crate::algorithms::{all_closures, close_by_one_with_depth};
    use crate::fixtures::{random_context, Toy};
    use crate::partition::{split, SplitStrategy};
    use crate::runtime::Mode;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn toy_depth_matches_recursive_cbo() {
        let t = Toy::new();
        let (_, depth) = close_by_one_with_depth(&t.ctx);
        for n in [1, 2, 3] {
            let parts = split(&t.ctx, n, SplitStrategy::Contiguous).unwrap();
            let run = run(JobKind::MrCbo, &parts, 1, Mode::InProcess, &MrOptions::default()).unwrap();
            assert_eq!(run.iterations, depth);
            assert_eq!(run.iterations, 3);
            assert_eq!(run.concepts(&parts).unwrap(), all_closures(&t.ctx));
        }
    }

    #[test]
    fn map_respects_the_generator_bound() {
        let t = Toy::new();
        let parts = split(&t.ctx, 2, SplitStrategy::Contiguous).unwrap();
        let item = DynamicItem { intent: t.attrs("df"), generator: Some(t.id('d')) };
        let out = mrcbo_map(&parts.partitions()[0], &item);
        let attrs: Vec<usize> = out.values.iter().map(|v| v.attribute.0).collect();
        assert_eq!(attrs, [4, 6]);
    }

    #[test]
    fn random_contexts_match_recursive_cbo() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..10 {
            let ctx = random_context(&mut rng, 9, 8, 0.4);
            let (want, depth) = close_by_one_with_depth(&ctx);
            let parts = split(&ctx, 3, SplitStrategy::RoundRobin).unwrap();
            let run = run(JobKind::MrCbo, &parts, 3, Mode::InProcess, &MrOptions::default()).unwrap();
            assert_eq!(run.iterations, depth);
            assert_eq!(run.concepts(&parts).unwrap(), want.sorted_lectic());
        }
    }
}
