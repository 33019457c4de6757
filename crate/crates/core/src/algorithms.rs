//! Centralized concept enumeration: NextClosure and CloseByOne.

use crate::context::{AttributeSet, Concept, ConceptList, FormalContext, ObjectSet};
use crate::error::{Error, Result};

/// Lectic successor of a closed set, with its extent.
///
/// Equivalent to scanning `p_m … p_1`, computing `Y ⊕ p_i` and keeping the
/// first candidate with `Y <_i candidate`, but rejects a candidate as soon as
/// its closure picks up an attribute below `p_i` that is not in `Y`.
struct Successor<'a> {
    ctx: &'a FormalContext,
    prefix_extents: Vec<ObjectSet>,
}

impl<'a> Successor<'a> {
    fn new(ctx: &'a FormalContext) -> Self {
        Self {
            ctx,
            prefix_extents: Vec::new(),
        }
    }

    fn next(&mut self, current: &AttributeSet) -> Option<Concept> {
        let ctx = self.ctx;
        let m = ctx.attribute_count();
        let members: Vec<usize> = current.iter().collect();

        // prefix_extents[t] = extent of the t smallest members of `current`
        self.prefix_extents.clear();
        self.prefix_extents.push(ctx.all_objects());
        for &y in &members {
            let mut e = self.prefix_extents.last().unwrap().clone();
            e.intersect_with(ctx.column(y));
            self.prefix_extents.push(e);
        }

        let mut below = members.len();
        for i in (0..m).rev() {
            while below > 0 && members[below - 1] >= i {
                below -= 1;
            }
            if current.contains(i) {
                continue;
            }
            let mut extent = self.prefix_extents[below].clone();
            extent.intersect_with(ctx.column(i));
            let canonical = (0..i)
                .filter(|&j| !current.contains(j))
                .all(|j| !extent.is_subset(ctx.column(j)));
            if !canonical {
                continue;
            }
            let mut intent = current.prefix(i.into());
            intent.insert(i);
            for j in i + 1..m {
                if extent.is_subset(ctx.column(j)) {
                    intent.insert(j);
                }
            }
            return Some(Concept { extent, intent });
        }
        None
    }
}

/// Lectically smallest closed set strictly greater than `current`, or `None`
/// when `current` is the full attribute set.
pub fn next_closure(ctx: &FormalContext, current: &AttributeSet) -> Result<Option<AttributeSet>> {
    if !ctx.is_closed(current)? {
        return Err(Error::contract("next_closure requires a closed attribute set"));
    }
    Ok(Successor::new(ctx).next(current).map(|c| c.intent))
}

/// Streams every concept of `ctx` in lectic order of intents, starting at
/// `∅''`.
pub struct NextClosure<'a> {
    successor: Successor<'a>,
    pending: Option<Concept>,
}

impl<'a> NextClosure<'a> {
    pub fn new(ctx: &'a FormalContext) -> Self {
        let (intent, extent) = ctx.close(&ctx.no_attributes());
        Self {
            successor: Successor::new(ctx),
            pending: Some(Concept { extent, intent }),
        }
    }
}

impl Iterator for NextClosure<'_> {
    type Item = Concept;

    fn next(&mut self) -> Option<Concept> {
        let current = self.pending.take()?;
        if !current.intent.is_full() {
            self.pending = self.successor.next(&current.intent);
        }
        Some(current)
    }
}

pub fn all_closures(ctx: &FormalContext) -> ConceptList {
    NextClosure::new(ctx).collect()
}

/// Depth-first CloseByOne. Calls `visit(concept, depth)` for every concept,
/// the root `∅''` at depth 0. Returns the deepest level reached.
pub fn close_by_one_visit<F: FnMut(&Concept, usize)>(ctx: &FormalContext, mut visit: F) -> usize {
    let (intent, extent) = ctx.close(&ctx.no_attributes());
    let root = Concept { extent, intent };
    let mut deepest = 0;
    cbo_generate(ctx, &root, 0, 0, &mut visit, &mut deepest);
    deepest
}

fn cbo_generate<F: FnMut(&Concept, usize)>(
    ctx: &FormalContext,
    concept: &Concept,
    start: usize,
    depth: usize,
    visit: &mut F,
    deepest: &mut usize,
) {
    visit(concept, depth);
    *deepest = (*deepest).max(depth);
    let m = ctx.attribute_count();
    let intent = &concept.intent;
    for i in start..m {
        if intent.contains(i) {
            continue;
        }
        let mut extent = concept.extent.clone();
        extent.intersect_with(ctx.column(i));
        // canonicity: the closure adds nothing below p_i
        let canonical = (0..i)
            .filter(|&j| !intent.contains(j))
            .all(|j| !extent.is_subset(ctx.column(j)));
        if !canonical {
            continue;
        }
        let mut child = intent.clone();
        child.insert(i);
        for j in i + 1..m {
            if !child.contains(j) && extent.is_subset(ctx.column(j)) {
                child.insert(j);
            }
        }
        let next = Concept {
            extent,
            intent: child,
        };
        cbo_generate(ctx, &next, i + 1, depth + 1, visit, deepest);
    }
}

/// CloseByOne output together with the depth of its generation tree.
pub fn close_by_one_with_depth(ctx: &FormalContext) -> (ConceptList, usize) {
    let mut out = ConceptList::new();
    let depth = close_by_one_visit(ctx, |c, _| out.push(c.clone()));
    (out, depth)
}

pub fn close_by_one(ctx: &FormalContext) -> ConceptList {
    close_by_one_with_depth(ctx).0
}
