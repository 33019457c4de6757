//! MRGanter+: every merged closure that is new to `H` joins the next batch.

use super::{absent_descending, fold_by_attribute, ConceptIndex, MrOptions, MrRun};
use crate::context::AttributeSet;
use crate::error::Result;
use crate::partition::{merged_closure, PartitionSet};
use crate::runtime::{run_until, DynamicItem, Job, JobKind, KeyedOutput, RuntimeHandle};

/// Merges the local closures of `group.key` per attribute and returns, in
/// `p_m`-first order, those not yet in `h` (inserting them).
pub fn mrganter_plus_reduce(group: &KeyedOutput, partitions: usize, h: &mut ConceptIndex) -> Result<Vec<AttributeSet>> {
    let merged = fold_by_attribute(group, partitions, &absent_descending(&group.key))?;
    Ok(merged.into_iter().filter(|(_, f)| h.insert(f)).map(|(_, f)| f).collect())
}

pub struct MrGanterPlusJob {
    partitions: usize,
    index: ConceptIndex,
}

impl MrGanterPlusJob {
    /// `seed` is registered in the index up front.
    pub fn new(partitions: usize, seed: &AttributeSet) -> Self {
        let mut index = ConceptIndex::new();
        index.insert(seed);
        Self { partitions, index }
    }

    pub fn index(&self) -> &ConceptIndex {
        &self.index
    }
}

impl Job for MrGanterPlusJob {
    fn kind(&self) -> JobKind {
        JobKind::MrGanterPlus
    }

    fn reduce(&mut self, group: KeyedOutput) -> Result<Vec<DynamicItem>> {
        Ok(mrganter_plus_reduce(&group, self.partitions, &mut self.index)?
            .into_iter()
            .map(DynamicItem::intent)
            .collect())
    }

    fn is_finished(&self, combined: &[DynamicItem]) -> bool {
        combined.is_empty()
    }
}

pub fn mrganter_plus_drive(parts: &PartitionSet, handle: &mut RuntimeHandle, opts: &MrOptions) -> Result<MrRun> {
    let seed = merged_closure(parts, &AttributeSet::empty(parts.attribute_count()))?;
    let mut job = MrGanterPlusJob::new(parts.len(), &seed);
    let outcome = run_until(handle, &mut job, vec![DynamicItem::intent(seed.clone())], opts.max_iterations)?;
    let mut intents = vec![seed];
    let mut batch_sizes = vec![1];
    for batch in outcome.outputs.into_iter().filter(|b| !b.is_empty()) {
        batch_sizes.push(batch.len());
        intents.extend(batch.into_iter().map(|item| item.intent));
    }
    Ok(MrRun {
        job: JobKind::MrGanterPlus,
        intents,
        iterations: outcome.productive,
        rounds: outcome.rounds,
        batch_sizes,
        transfer: handle.transfer_stats().clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::super::test_support::*;
    use super::super::{run, MrOptions};
    use super::*;
    use crate::algorithms::all_closures;
    use crate::fixtures::set_to_letters;
    use crate::oracle::brute_force_concepts;
    use crate::fixtures::random_context;
    use crate::partition::{split, SplitStrategy};
    use crate::runtime::Mode;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn letters(sets: &[AttributeSet]) -> Vec<String> {
        sets.iter().map(set_to_letters).collect()
    }

    #[test]
    fn first_reduce_on_the_toy() {
        let (t, parts) = toy_split();
        let mut h = ConceptIndex::new();
        h.insert(&t.attrs(""));
        let group = grouped(&parts, JobKind::MrGanterPlus, DynamicItem::intent(t.attrs("")));
        let g = mrganter_plus_reduce(&group, 2, &mut h).unwrap();
        assert_eq!(letters(&g), ["cg", "f", "e", "d", "b", "a"]);
    }

    #[test]
    fn reduce_of_cg_after_first_batch() {
        let (t, parts) = toy_split();
        let mut h = ConceptIndex::new();
        for s in ["", "cg", "f", "e", "d", "b", "a"] {
            h.insert(&t.attrs(s));
        }
        let group = grouped(&parts, JobKind::MrGanterPlus, DynamicItem::intent(t.attrs("cg")));
        let g = letters(&mrganter_plus_reduce(&group, 2, &mut h).unwrap());
        for want in ["bcfg", "aceg", "bcdfg"] {
            assert!(g.contains(&want.to_string()), "{want} missing from {g:?}");
        }
    }

    #[test]
    fn full_key_yields_nothing() {
        let (t, parts) = toy_split();
        let mut h = ConceptIndex::new();
        let group = grouped(&parts, JobKind::MrGanterPlus, DynamicItem::intent(t.attrs("abcdefg")));
        assert!(mrganter_plus_reduce(&group, 2, &mut h).unwrap().is_empty());
    }

    #[test]
    fn toy_run_has_three_productive_iterations() {
        let (t, parts) = toy_split();
        let run = run(JobKind::MrGanterPlus, &parts, 2, Mode::InProcess, &MrOptions::default()).unwrap();
        assert_eq!(run.iterations, 3);
        assert_eq!(run.rounds, 4);
        assert_eq!(run.batch_sizes, [1, 6, 12, 2]);
        assert_eq!(letters(run.batches()[1]), ["cg", "f", "e", "d", "b", "a"]);
        assert_eq!(run.concepts(&parts).unwrap(), all_closures(&t.ctx));
    }

    #[test]
    fn random_contexts_match_the_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for n in [2, 4] {
            let ctx = random_context(&mut rng, 8, 8, 0.5);
            let parts = split(&ctx, n, SplitStrategy::Contiguous).unwrap();
            let run = run(JobKind::MrGanterPlus, &parts, 2, Mode::InProcess, &MrOptions::default()).unwrap();
            assert_eq!(run.concepts(&parts).unwrap(), brute_force_concepts(&ctx).unwrap());
        }
    }
}
