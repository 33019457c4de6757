use fcamr::fixtures::{random_attribute_set, random_small_context, Toy};
use fcamr::partition::{merge_psi, merged_closure, merged_extent, split, SplitStrategy};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn merged_operators_match_the_whole_context(seed in any::<u64>(), n in 1usize..=5, rr in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ctx = random_small_context(&mut rng, 12, 12);
        let n = n.min(ctx.object_count());
        let strategy = if rr { SplitStrategy::RoundRobin } else { SplitStrategy::Contiguous };
        let parts = split(&ctx, n, strategy).unwrap();
        for _ in 0..20 {
            let y = random_attribute_set(&mut rng, ctx.attribute_count());
            let global = ctx.closure(&y).unwrap();
            prop_assert_eq!(&merged_closure(&parts, &y).unwrap(), &global);
            prop_assert_eq!(merged_extent(&parts, &y).unwrap(), ctx.common_objects(&y).unwrap());
            for part in parts.partitions() {
                prop_assert!(global.is_subset(&part.local_closure(&y).unwrap()));
            }
        }
    }

    #[test]
    fn fold_order_does_not_matter(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ctx = random_small_context(&mut rng, 12, 12);
        let n = ctx.object_count().min(5);
        let parts = split(&ctx, n, SplitStrategy::RoundRobin).unwrap();
        let y = random_attribute_set(&mut rng, ctx.attribute_count());
        let mut locals: Vec<_> = parts.partitions().iter().map(|p| p.local_closure(&y).unwrap()).collect();
        let fold = |ls: &[fcamr::AttributeSet]| ls[1..].iter().fold(ls[0].clone(), |acc, l| merge_psi(&acc, l).unwrap());
        let forward = fold(&locals);
        locals.shuffle(&mut rng);
        prop_assert_eq!(fold(&locals), forward);
    }
}

#[test]
fn exhaustive_on_small_attribute_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..40 {
        let ctx = random_small_context(&mut rng, 12, 10);
        let m = ctx.attribute_count();
        for n in 1..=ctx.object_count().min(5) {
            let parts = split(&ctx, n, SplitStrategy::Contiguous).unwrap();
            for mask in 0u32..(1 << m) {
                let y = fcamr::AttributeSet::from_indices(m, (0..m).filter(|j| mask >> j & 1 == 1));
                assert_eq!(merged_closure(&parts, &y).unwrap(), ctx.closure(&y).unwrap());
            }
        }
    }
}

#[test]
fn worked_example_partitions() {
    let t = Toy::new();
    let parts = split(&t.ctx, 2, SplitStrategy::Contiguous).unwrap();
    let bd = t.attrs("bd");
    assert_eq!(parts.partitions()[0].local_closure(&bd).unwrap(), t.attrs("bdf"));
    assert_eq!(parts.partitions()[1].local_closure(&bd).unwrap(), t.attrs("bde"));
    assert_eq!(merged_closure(&parts, &bd).unwrap(), bd);
    assert_eq!(merged_extent(&parts, &t.attrs("df")).unwrap(), t.objs(&["1", "3", "5"]));
}
