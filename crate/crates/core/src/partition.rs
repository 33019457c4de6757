//! Horizontal partitioning of a context and the Ψ-merge of local closures.
//!
//! A partition keeps the full attribute set and a disjoint slice of the
//! objects. Local extents union to the global extent, and local closures
//! intersect to the global closure; both identities hold for any number of
//! partitions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::context::{AttributeSet, FormalContext, ObjectSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitStrategy {
    /// Blocks of consecutive rows in file order.
    Contiguous,
    /// Row `o` goes to partition `o mod n`.
    RoundRobin,
}

impl FromStr for SplitStrategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "contiguous" => Ok(SplitStrategy::Contiguous),
            "round_robin" | "round-robin" => Ok(SplitStrategy::RoundRobin),
            other => Err(Error::InvalidArgument(format!("unknown split strategy {other:?}"))),
        }
    }
}

impl fmt::Display for SplitStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitStrategy::Contiguous => "contiguous",
            SplitStrategy::RoundRobin => "round_robin",
        })
    }
}

/// One slice `S_k` of the objects with its local-to-global id map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextPartition {
    pub id: usize,
    local: FormalContext,
    global_object_ids: Vec<usize>,
}

impl ContextPartition {
    pub fn new(id: usize, local: FormalContext, global_object_ids: Vec<usize>) -> Result<Self> {
        if local.object_count() != global_object_ids.len() {
            return Err(Error::InvalidArgument(format!(
                "partition {id}: {} rows but {} global ids",
                local.object_count(),
                global_object_ids.len()
            )));
        }
        Ok(Self {
            id,
            local,
            global_object_ids,
        })
    }

    pub fn context(&self) -> &FormalContext {
        &self.local
    }

    pub fn global_object_ids(&self) -> &[usize] {
        &self.global_object_ids
    }

    pub fn object_count(&self) -> usize {
        self.local.object_count()
    }

    /// `Y''` computed inside this partition only.
    pub fn local_closure(&self, attributes: &AttributeSet) -> Result<AttributeSet> {
        self.local.closure(attributes)
    }

    /// `Y'` inside this partition, mapped to global object ids.
    pub fn local_extent(&self, attributes: &AttributeSet, total_objects: usize) -> Result<ObjectSet> {
        let local = self.local.common_objects(attributes)?;
        Ok(ObjectSet::from_indices(
            total_objects,
            local.iter().map(|o| self.global_object_ids[o]),
        ))
    }
}

/// Disjoint cover of a context by non-empty partitions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionSet {
    partitions: Vec<ContextPartition>,
    total_objects: usize,
    attribute_names: Vec<String>,
    strategy: Option<SplitStrategy>,
}

impl PartitionSet {
    pub fn new(partitions: Vec<ContextPartition>, total_objects: usize) -> Result<Self> {
        let Some(first) = partitions.first() else {
            return Err(Error::InvalidArgument("a partition set needs at least one partition".into()));
        };
        let attribute_names = first.context().attribute_names().to_vec();
        let mut covered = vec![false; total_objects];
        for (k, part) in partitions.iter().enumerate() {
            if part.id != k {
                return Err(Error::InvalidArgument(format!(
                    "partition at position {k} has id {}",
                    part.id
                )));
            }
            if part.object_count() == 0 {
                return Err(Error::InvalidArgument(format!("partition {k} is empty")));
            }
            if part.context().attribute_names() != attribute_names.as_slice() {
                return Err(Error::InvalidArgument(format!(
                    "partition {k} has a different attribute set"
                )));
            }
            for &g in part.global_object_ids() {
                if g >= total_objects {
                    return Err(Error::InvalidArgument(format!(
                        "partition {k}: object id {g} out of range 0..{total_objects}"
                    )));
                }
                if std::mem::replace(&mut covered[g], true) {
                    return Err(Error::InvalidArgument(format!(
                        "object {g} appears in more than one partition"
                    )));
                }
            }
        }
        if let Some(missing) = covered.iter().position(|c| !c) {
            return Err(Error::InvalidArgument(format!("object {missing} is in no partition")));
        }
        Ok(Self {
            partitions,
            total_objects,
            attribute_names,
            strategy: None,
        })
    }

    /// Builds partitions of `ctx` from explicit global-id lists.
    pub fn from_assignment(ctx: &FormalContext, assignment: &[Vec<usize>]) -> Result<Self> {
        let mut parts = Vec::with_capacity(assignment.len());
        for (k, ids) in assignment.iter().enumerate() {
            if let Some(&bad) = ids.iter().find(|&&o| o >= ctx.object_count()) {
                return Err(Error::InvalidArgument(format!("object id {bad} out of range")));
            }
            let local = ctx.select_objects(ids)?;
            parts.push(ContextPartition::new(k, local, ids.clone())?);
        }
        Self::new(parts, ctx.object_count())
    }

    pub fn partitions(&self) -> &[ContextPartition] {
        &self.partitions
    }

    pub fn into_partitions(self) -> Vec<ContextPartition> {
        self.partitions
    }

    pub fn len(&self) -> usize {
        self.partitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partitions.is_empty()
    }

    pub fn total_objects(&self) -> usize {
        self.total_objects
    }

    pub fn attribute_count(&self) -> usize {
        self.attribute_names.len()
    }

    pub fn attribute_names(&self) -> &[String] {
        &self.attribute_names
    }

    pub fn strategy(&self) -> Option<SplitStrategy> {
        self.strategy
    }

    pub fn manifest(&self) -> PartitionManifest {
        PartitionManifest {
            version: MANIFEST_VERSION,
            n: self.len(),
            strategy: self.strategy,
            total_objects: self.total_objects,
            attributes: self.attribute_count(),
            partitions: self
                .partitions
                .iter()
                .map(|p| ManifestEntry {
                    id: p.id,
                    object_ranges: to_ranges(p.global_object_ids()),
                })
                .collect(),
        }
    }

    /// Rebuilds the partitioning recorded in `manifest` over `ctx`.
    pub fn from_manifest(ctx: &FormalContext, manifest: &PartitionManifest) -> Result<Self> {
        if manifest.total_objects != ctx.object_count() || manifest.attributes != ctx.attribute_count() {
            return Err(Error::InvalidArgument(format!(
                "manifest describes a {}x{} context, input is {}x{}",
                manifest.total_objects,
                manifest.attributes,
                ctx.object_count(),
                ctx.attribute_count()
            )));
        }
        if manifest.n != manifest.partitions.len() {
            return Err(Error::InvalidArgument(format!(
                "manifest declares n={} but lists {} partitions",
                manifest.n,
                manifest.partitions.len()
            )));
        }
        let assignment: Vec<Vec<usize>> = manifest
            .partitions
            .iter()
            .map(|e| e.object_ranges.iter().flat_map(|&[a, b]| a..b).collect())
            .collect();
        let mut set = Self::from_assignment(ctx, &assignment)?;
        set.strategy = manifest.strategy;
        Ok(set)
    }
}

/// Splits `ctx` into `n` non-empty horizontal partitions.
pub fn split(ctx: &FormalContext, n: usize, strategy: SplitStrategy) -> Result<PartitionSet> {
    let total = ctx.object_count();
    if n == 0 || n > total {
        return Err(Error::InvalidArgument(format!(
            "partition count must be in 1..={total}, got {n}"
        )));
    }
    let assignment: Vec<Vec<usize>> = match strategy {
        SplitStrategy::Contiguous => {
            let (base, extra) = (total / n, total % n);
            let mut start = 0;
            (0..n)
                .map(|k| {
                    let size = base + usize::from(k < extra);
                    let ids = (start..start + size).collect();
                    start += size;
                    ids
                })
                .collect()
        }
        SplitStrategy::RoundRobin => (0..n).map(|k| (k..total).step_by(n).collect()).collect(),
    };
    let mut set = PartitionSet::from_assignment(ctx, &assignment)?;
    set.strategy = Some(strategy);
    Ok(set)
}

/// `Ψ(l, f) = l ∩ f`.
pub fn merge_psi(l1: &AttributeSet, l2: &AttributeSet) -> Result<AttributeSet> {
    if l1.width() != l2.width() {
        return Err(Error::WidthMismatch {
            expected: l1.width(),
            found: l2.width(),
        });
    }
    Ok(l1.intersection(l2))
}

/// Global closure as the Ψ-fold of every partition's local closure.
pub fn merged_closure(parts: &PartitionSet, attributes: &AttributeSet) -> Result<AttributeSet> {
    let mut iter = parts.partitions().iter();
    let first = iter
        .next()
        .ok_or_else(|| Error::InvalidArgument("empty partition set".into()))?;
    let mut acc = first.local_closure(attributes)?;
    for part in iter {
        acc = merge_psi(&acc, &part.local_closure(attributes)?)?;
    }
    Ok(acc)
}

/// Global extent as the union of local extents.
pub fn merged_extent(parts: &PartitionSet, attributes: &AttributeSet) -> Result<ObjectSet> {
    let mut acc = ObjectSet::empty(parts.total_objects());
    for part in parts.partitions() {
        let local = part.local_extent(attributes, parts.total_objects())?;
        acc.union_with(&local);
    }
    Ok(acc)
}

pub const MANIFEST_VERSION: u32 = 1;

/// On-disk description of a partitioning: half-open global object-id ranges
/// per partition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionManifest {
    pub version: u32,
    pub n: usize,
    pub strategy: Option<SplitStrategy>,
    pub total_objects: usize,
    pub attributes: usize,
    pub partitions: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: usize,
    pub object_ranges: Vec<[usize; 2]>,
}

fn to_ranges(ids: &[usize]) -> Vec<[usize; 2]> {
    let mut ranges: Vec<[usize; 2]> = Vec::new();
    for &id in ids {
        match ranges.last_mut() {
            Some(r) if r[1] == id => r[1] = id + 1,
            _ => ranges.push([id, id + 1]),
        }
    }
    ranges
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{toy_context, Toy};

    fn toy_split() -> (Toy, PartitionSet) {
        let t = Toy::new();
        let parts = split(&t.ctx, 2, SplitStrategy::Contiguous).unwrap();
        (t, parts)
    }

    fn object_names(parts: &PartitionSet, k: usize) -> Vec<String> {
        parts.partitions()[k].context().object_names().to_vec()
    }

    #[test]
    fn contiguous_split_of_the_toy() {
        let (_, parts) = toy_split();
        assert_eq!(object_names(&parts, 0), ["1", "2", "3"]);
        assert_eq!(object_names(&parts, 1), ["4", "5", "6"]);
    }

    #[test]
    fn round_robin_deals_modulo_n() {
        let parts = split(&toy_context(), 2, SplitStrategy::RoundRobin).unwrap();
        assert_eq!(object_names(&parts, 0), ["1", "3", "5"]);
        assert_eq!(object_names(&parts, 1), ["2", "4", "6"]);
    }

    #[test]
    fn single_partition_is_the_context() {
        let ctx = toy_context();
        let parts = split(&ctx, 1, SplitStrategy::RoundRobin).unwrap();
        assert_eq!(parts.partitions()[0].context(), &ctx);
        assert_eq!(parts.partitions()[0].global_object_ids(), &[0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn split_rejects_bad_counts() {
        let ctx = toy_context();
        assert!(matches!(split(&ctx, 0, SplitStrategy::Contiguous), Err(Error::InvalidArgument(_))));
        assert!(matches!(split(&ctx, 7, SplitStrategy::Contiguous), Err(Error::InvalidArgument(_))));
        assert_eq!(split(&ctx, 6, SplitStrategy::Contiguous).unwrap().len(), 6);
    }

    #[test]
    fn uneven_contiguous_blocks() {
        let ctx = FormalContext::from_index_rows(1, &vec![vec![0]; 7]).unwrap();
        let parts = split(&ctx, 3, SplitStrategy::Contiguous).unwrap();
        let sizes: Vec<usize> = parts.partitions().iter().map(|p| p.object_count()).collect();
        assert_eq!(sizes, [3, 2, 2]);
    }

    #[test]
    fn local_closures_of_example_two() {
        let (t, parts) = toy_split();
        let p = parts.partitions();
        assert_eq!(p[0].local_closure(&t.attrs("bd")).unwrap(), t.attrs("bdf"));
        assert_eq!(p[1].local_closure(&t.attrs("bd")).unwrap(), t.attrs("bde"));
        for part in p {
            assert_eq!(part.local_closure(&t.attrs("abcdefg")).unwrap(), t.attrs("abcdefg"));
        }
    }

    #[test]
    fn psi_examples() {
        let t = Toy::new();
        assert_eq!(merge_psi(&t.attrs("bdf"), &t.attrs("bde")).unwrap(), t.attrs("bd"));
        assert_eq!(merge_psi(&t.attrs("adf"), &t.attrs("abcdefg")).unwrap(), t.attrs("adf"));
        assert_eq!(merge_psi(&t.attrs("cg"), &t.attrs("bcfg")).unwrap(), t.attrs("cg"));
        assert!(merge_psi(&t.attrs("cg"), &AttributeSet::empty(3)).is_err());
    }

    #[test]
    fn merged_closure_and_extent_examples() {
        let (t, parts) = toy_split();
        assert_eq!(merged_closure(&parts, &t.attrs("bd")).unwrap(), t.attrs("bd"));
        assert_eq!(merged_extent(&parts, &t.attrs("df")).unwrap(), t.objs(&["1", "3", "5"]));
        assert_eq!(merged_extent(&parts, &t.attrs("")).unwrap(), t.ctx.all_objects());
        let one = split(&t.ctx, 1, SplitStrategy::Contiguous).unwrap();
        let y = t.attrs("ade");
        assert_eq!(merged_closure(&one, &y).unwrap(), t.ctx.closure(&y).unwrap());
    }

    #[test]
    fn partition_set_validation() {
        let ctx = toy_context();
        let overlap = PartitionSet::from_assignment(&ctx, &[vec![0, 1, 2, 3], vec![3, 4, 5]]);
        assert!(matches!(overlap, Err(Error::InvalidArgument(_))));
        let gap = PartitionSet::from_assignment(&ctx, &[vec![0, 1, 2], vec![4, 5]]);
        assert!(matches!(gap, Err(Error::InvalidArgument(_))));
        let empty = PartitionSet::from_assignment(&ctx, &[vec![0, 1, 2, 3, 4, 5], vec![]]);
        assert!(matches!(empty, Err(Error::InvalidArgument(_))));
        assert!(PartitionSet::new(Vec::new(), 0).is_err());
    }

    #[test]
    fn manifest_round_trip() {
        let ctx = toy_context();
        for strategy in [SplitStrategy::Contiguous, SplitStrategy::RoundRobin] {
            let parts = split(&ctx, 3, strategy).unwrap();
            let manifest = parts.manifest();
            let json = serde_json::to_string(&manifest).unwrap();
            let back: PartitionManifest = serde_json::from_str(&json).unwrap();
            assert_eq!(PartitionSet::from_manifest(&ctx, &back).unwrap(), parts);
        }
        let manifest = split(&ctx, 2, SplitStrategy::Contiguous).unwrap().manifest();
        assert_eq!(manifest.partitions[0].object_ranges, vec![[0, 3]]);
        assert_eq!(manifest.partitions[1].object_ranges, vec![[3, 6]]);
    }
}
