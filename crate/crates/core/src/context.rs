//! Formal contexts and the derivation operators between objects and
//! attributes, together with the lectic order on attribute sets.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Deref, DerefMut};

use crate::bitset::BitSet;
use crate::error::{Error, Result};

/// Position of an attribute in the context's fixed linear order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AttributeId(pub usize);

impl AttributeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl From<usize> for AttributeId {
    fn from(i: usize) -> Self {
        AttributeId(i)
    }
}

macro_rules! bitset_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, PartialEq, Eq, Hash, Default)]
        pub struct $name(BitSet);

        impl $name {
            pub fn empty(width: usize) -> Self {
                Self(BitSet::new(width))
            }

            pub fn full(width: usize) -> Self {
                Self(BitSet::full(width))
            }

            pub fn from_indices<I: IntoIterator<Item = usize>>(width: usize, indices: I) -> Self {
                Self(BitSet::from_indices(width, indices))
            }

            pub fn from_bits(bits: BitSet) -> Self {
                Self(bits)
            }

            pub fn into_bits(self) -> BitSet {
                self.0
            }

            pub fn bits(&self) -> &BitSet {
                &self.0
            }

            #[inline]
            pub fn width(&self) -> usize {
                self.0.len()
            }

            pub fn intersection(&self, other: &Self) -> Self {
                Self(self.0.intersection(&other.0))
            }

            pub fn union(&self, other: &Self) -> Self {
                Self(self.0.union(&other.0))
            }

            pub fn difference(&self, other: &Self) -> Self {
                Self(self.0.difference(&other.0))
            }
        }

        impl Deref for $name {
            type Target = BitSet;
            fn deref(&self) -> &BitSet {
                &self.0
            }
        }

        impl DerefMut for $name {
            fn deref_mut(&mut self) -> &mut BitSet {
                &mut self.0
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                fmt::Debug::fmt(&self.0, f)
            }
        }
    };
}

bitset_newtype!(
    /// A subset of the attributes; intents are attribute sets.
    AttributeSet
);
bitset_newtype!(
    /// A subset of the objects, indexed by object id.
    ObjectSet
);

impl AttributeSet {
    #[inline]
    pub fn has(&self, attr: AttributeId) -> bool {
        self.0.contains(attr.0)
    }

    /// Intersection with `{p_1, ..., p_{i-1}}`.
    pub fn prefix(&self, attr: AttributeId) -> AttributeSet {
        let mut out = self.clone();
        out.retain_below(attr.0);
        out
    }

    pub fn lectic_cmp(&self, other: &AttributeSet) -> Ordering {
        lectic_cmp(self, other)
    }
}

fn check_width(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::WidthMismatch { expected, found })
    }
}

/// Total lectic order: the set holding the smallest differing attribute is
/// the greater one.
pub fn lectic_cmp(a: &AttributeSet, b: &AttributeSet) -> Ordering {
    match a.first_difference(b) {
        None => Ordering::Equal,
        Some(i) if b.contains(i) => Ordering::Less,
        Some(_) => Ordering::Greater,
    }
}

/// `a` is lectically smaller than `b`.
pub fn lectic_less(a: &AttributeSet, b: &AttributeSet) -> bool {
    lectic_cmp(a, b) == Ordering::Less
}

/// `a <_i b`: `p_i` is in `b` but not `a`, and the two agree below `p_i`.
pub fn lectic_less_at(a: &AttributeSet, b: &AttributeSet, attr: AttributeId) -> bool {
    let i = attr.0;
    i < a.width() && b.contains(i) && !a.contains(i) && a.eq_below(b, i)
}

/// The binary relation between objects and attributes.
///
/// Stored twice: per-object rows for `common_attributes`, per-attribute
/// columns for `common_objects` and closures.
#[derive(Clone)]
pub struct FormalContext {
    object_names: Vec<String>,
    attribute_names: Vec<String>,
    rows: Vec<AttributeSet>,
    columns: Vec<ObjectSet>,
}

impl PartialEq for FormalContext {
    fn eq(&self, other: &Self) -> bool {
        self.object_names == other.object_names
            && self.attribute_names == other.attribute_names
            && self.rows == other.rows
    }
}

impl Eq for FormalContext {}

impl fmt::Debug for FormalContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "FormalContext({} objects x {} attributes)",
            self.object_count(),
            self.attribute_count()
        )?;
        for (name, row) in self.object_names.iter().zip(&self.rows) {
            let line: String = (0..self.attribute_count())
                .map(|j| if row.contains(j) { 'X' } else { '.' })
                .collect();
            writeln!(f, "  {name:>8} {line}")?;
        }
        Ok(())
    }
}

impl FormalContext {
    pub fn new(
        object_names: Vec<String>,
        attribute_names: Vec<String>,
        rows: Vec<AttributeSet>,
    ) -> Result<Self> {
        if rows.len() != object_names.len() {
            return Err(Error::InvalidArgument(format!(
                "{} rows for {} object names",
                rows.len(),
                object_names.len()
            )));
        }
        let m = attribute_names.len();
        for row in &rows {
            check_width(m, row.width())?;
        }
        let n = rows.len();
        let mut columns = vec![ObjectSet::empty(n); m];
        for (o, row) in rows.iter().enumerate() {
            for j in row.iter() {
                columns[j].insert(o);
            }
        }
        Ok(Self {
            object_names,
            attribute_names,
            rows,
            columns,
        })
    }

    /// Context with names `0..n` for objects and attributes.
    pub fn from_index_rows(attribute_count: usize, rows: &[Vec<usize>]) -> Result<Self> {
        let mut sets = Vec::with_capacity(rows.len());
        for (o, row) in rows.iter().enumerate() {
            if let Some(&bad) = row.iter().find(|&&j| j >= attribute_count) {
                return Err(Error::InvalidArgument(format!(
                    "object {o}: attribute {bad} out of range 0..{attribute_count}"
                )));
            }
            sets.push(AttributeSet::from_indices(attribute_count, row.iter().copied()));
        }
        Self::new(
            (0..rows.len()).map(|i| i.to_string()).collect(),
            (0..attribute_count).map(|i| i.to_string()).collect(),
            sets,
        )
    }

    pub fn object_count(&self) -> usize {
        self.rows.len()
    }

    pub fn attribute_count(&self) -> usize {
        self.attribute_names.len()
    }

    pub fn object_names(&self) -> &[String] {
        &self.object_names
    }

    pub fn attribute_names(&self) -> &[String] {
        &self.attribute_names
    }

    pub fn rows(&self) -> &[AttributeSet] {
        &self.rows
    }

    pub fn row(&self, object: usize) -> &AttributeSet {
        &self.rows[object]
    }

    pub fn column(&self, attr: usize) -> &ObjectSet {
        &self.columns[attr]
    }

    pub fn incidence_count(&self) -> usize {
        self.rows.iter().map(|r| r.count()).sum()
    }

    pub fn has(&self, object: usize, attr: usize) -> bool {
        self.rows[object].contains(attr)
    }

    pub fn all_attributes(&self) -> AttributeSet {
        AttributeSet::full(self.attribute_count())
    }

    pub fn no_attributes(&self) -> AttributeSet {
        AttributeSet::empty(self.attribute_count())
    }

    pub fn all_objects(&self) -> ObjectSet {
        ObjectSet::full(self.object_count())
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.attribute_names.iter().position(|n| n == name)
    }

    pub fn attributes_named(&self, names: &[&str]) -> Result<AttributeSet> {
        let mut set = self.no_attributes();
        for name in names {
            let j = self.attribute_index(name).ok_or_else(|| {
                Error::InvalidArgument(format!("unknown attribute {name:?}"))
            })?;
            set.insert(j);
        }
        Ok(set)
    }

    pub fn objects_named(&self, names: &[&str]) -> Result<ObjectSet> {
        let mut set = ObjectSet::empty(self.object_count());
        for name in names {
            let o = self
                .object_names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown object {name:?}")))?;
            set.insert(o);
        }
        Ok(set)
    }

    /// `X'`: attributes shared by every object of `objects`.
    pub fn common_attributes(&self, objects: &ObjectSet) -> Result<AttributeSet> {
        check_width(self.object_count(), objects.width())?;
        let mut intent = self.all_attributes();
        for o in objects.iter() {
            intent.intersect_with(&self.rows[o]);
        }
        Ok(intent)
    }

    /// `Y'`: objects having every attribute of `attributes`.
    pub fn common_objects(&self, attributes: &AttributeSet) -> Result<ObjectSet> {
        check_width(self.attribute_count(), attributes.width())?;
        Ok(self.extent_of(attributes))
    }

    /// `Y''`.
    pub fn closure(&self, attributes: &AttributeSet) -> Result<AttributeSet> {
        check_width(self.attribute_count(), attributes.width())?;
        Ok(self.intent_of(&self.extent_of(attributes)))
    }

    pub fn is_closed(&self, attributes: &AttributeSet) -> Result<bool> {
        Ok(self.closure(attributes)? == *attributes)
    }

    #[inline]
    pub(crate) fn extent_of(&self, attributes: &BitSet) -> ObjectSet {
        let mut extent = self.all_objects();
        for j in attributes.iter() {
            extent.intersect_with(&self.columns[j]);
        }
        extent
    }

    /// Attributes whose column contains `extent`; equal to `extent'`.
    #[inline]
    pub(crate) fn intent_of(&self, extent: &ObjectSet) -> AttributeSet {
        // only the occupied words of the extent can rule a column out
        let occupied: Vec<(usize, u64)> = extent
            .words()
            .iter()
            .enumerate()
            .filter(|(_, &w)| w != 0)
            .map(|(k, &w)| (k, w))
            .collect();
        let mut intent = self.no_attributes();
        for (j, col) in self.columns.iter().enumerate() {
            let words = col.words();
            if occupied.iter().all(|&(k, w)| w & !words[k] == 0) {
                intent.insert(j);
            }
        }
        intent
    }

    /// Unchecked closure returning both halves of the concept.
    pub(crate) fn close(&self, attributes: &BitSet) -> (AttributeSet, ObjectSet) {
        let extent = self.extent_of(attributes);
        (self.intent_of(&extent), extent)
    }

    /// `Y ⊕ p_i = ((Y ∩ {p_1..p_{i-1}}) ∪ {p_i})''`. Requires `p_i ∉ Y`.
    pub fn oplus(&self, attributes: &AttributeSet, attr: AttributeId) -> Result<AttributeSet> {
        check_width(self.attribute_count(), attributes.width())?;
        if attr.0 >= self.attribute_count() {
            return Err(Error::contract(format!(
                "attribute {} out of range 0..{}",
                attr.0,
                self.attribute_count()
            )));
        }
        if attributes.has(attr) {
            return Err(Error::contract(format!(
                "oplus requires attribute {} to be absent from the set",
                attr.0
            )));
        }
        let mut seed = attributes.prefix(attr);
        seed.insert(attr.0);
        Ok(self.intent_of(&self.extent_of(&seed)))
    }

    /// Same incidences with attribute columns permuted: new attribute `k` is
    /// old attribute `order[k]`.
    pub fn with_attribute_order(&self, order: &[usize]) -> Result<FormalContext> {
        let m = self.attribute_count();
        let mut seen = vec![false; m];
        if order.len() != m || order.iter().any(|&j| j >= m || std::mem::replace(&mut seen[j], true)) {
            return Err(Error::InvalidArgument(
                "attribute order must be a permutation".into(),
            ));
        }
        let names = order.iter().map(|&j| self.attribute_names[j].clone()).collect();
        let rows = self
            .rows
            .iter()
            .map(|row| AttributeSet::from_indices(m, (0..m).filter(|&k| row.contains(order[k]))))
            .collect();
        FormalContext::new(self.object_names.clone(), names, rows)
    }

    /// Re-sorts attributes by ascending support; ties keep file order.
    pub fn sorted_by_support(&self) -> FormalContext {
        let mut order: Vec<usize> = (0..self.attribute_count()).collect();
        order.sort_by_key(|&j| self.columns[j].count());
        self.with_attribute_order(&order)
            .expect("a sorted index list is a permutation")
    }

    /// Sub-context made of the given object rows, in the given order.
    pub fn select_objects(&self, objects: &[usize]) -> Result<FormalContext> {
        let names = objects.iter().map(|&o| self.object_names[o].clone()).collect();
        let rows = objects.iter().map(|&o| self.rows[o].clone()).collect();
        FormalContext::new(names, self.attribute_names.clone(), rows)
    }
}

/// An `(extent, intent)` pair.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Concept {
    pub extent: ObjectSet,
    pub intent: AttributeSet,
}

impl Concept {
    /// Checks `extent' = intent` and `intent' = extent` against `ctx`.
    pub fn is_valid_in(&self, ctx: &FormalContext) -> Result<bool> {
        Ok(ctx.common_attributes(&self.extent)? == self.intent
            && ctx.common_objects(&self.intent)? == self.extent)
    }
}

/// An ordered sequence of concepts.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct ConceptList(pub Vec<Concept>);

impl ConceptList {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Concept> {
        self.0.iter()
    }

    pub fn push(&mut self, c: Concept) {
        self.0.push(c);
    }

    pub fn sort_lectic(&mut self) {
        self.0.sort_by(|a, b| lectic_cmp(&a.intent, &b.intent));
    }

    pub fn sorted_lectic(mut self) -> Self {
        self.sort_lectic();
        self
    }

    /// Whether intents strictly increase in lectic order.
    pub fn is_lectically_increasing(&self) -> bool {
        self.0
            .windows(2)
            .all(|w| lectic_less(&w[0].intent, &w[1].intent))
    }

    pub fn into_set(self) -> std::collections::HashSet<Concept> {
        self.0.into_iter().collect()
    }
}

impl FromIterator<Concept> for ConceptList {
    fn from_iter<I: IntoIterator<Item = Concept>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl IntoIterator for ConceptList {
    type Item = Concept;
    type IntoIter = std::vec::IntoIter<Concept>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

impl<'a> IntoIterator for &'a ConceptList {
    type Item = &'a Concept;
    type IntoIter = std::slice::Iter<'a, Concept>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}
