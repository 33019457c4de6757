//! Brute-force ground truth: close every subset of the attributes.

use std::collections::HashSet;

use crate::bitset::BitSet;
use crate::context::{AttributeSet, Concept, ConceptList, FormalContext, ObjectSet};
use crate::error::{Error, Result};

pub const MAX_ORACLE_ATTRIBUTES: usize = 20;

/// `{ (Y'', Y') : Y ⊆ P }` in lectic order of intents.
pub fn brute_force_concepts(ctx: &FormalContext) -> Result<ConceptList> {
    let m = ctx.attribute_count();
    if m > MAX_ORACLE_ATTRIBUTES {
        return Err(Error::TooManyAttributes {
            found: m,
            limit: MAX_ORACLE_ATTRIBUTES,
        });
    }
    let mut seen: HashSet<AttributeSet> = HashSet::new();
    let mut out = ConceptList::new();
    for mask in 0u64..(1u64 << m) {
        let subset = AttributeSet::from_bits(BitSet::from_words(m, vec![mask]));
        let (intent, extent) = close_by_rows(ctx, &subset);
        if seen.insert(intent.clone()) {
            out.push(Concept { extent, intent });
        }
    }
    out.sort_lectic();
    Ok(out)
}

/// Closure straight from the definition, scanning object rows only.
fn close_by_rows(ctx: &FormalContext, subset: &AttributeSet) -> (AttributeSet, ObjectSet) {
    let mut extent = ObjectSet::empty(ctx.object_count());
    let mut intent = ctx.all_attributes();
    for (o, row) in ctx.rows().iter().enumerate() {
        if subset.is_subset(row) {
            extent.insert(o);
            intent.intersect_with(row);
        }
    }
    (intent, extent)
}
