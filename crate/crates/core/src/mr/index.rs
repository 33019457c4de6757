//! Two-level intent store: head attribute, then intent length.

use std::collections::{HashMap, HashSet};

use crate::context::{AttributeId, AttributeSet};

/// First-level key. The empty intent has no head attribute and gets its own
/// slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Head {
    Empty,
    Attribute(AttributeId),
}

#[derive(Debug, Clone, Default)]
pub struct ConceptIndex {
    table: HashMap<Head, HashMap<usize, HashSet<AttributeSet>>>,
    len: usize,
}

impl ConceptIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn key(intent: &AttributeSet) -> (Head, usize) {
        let head = intent.first().map_or(Head::Empty, |j| Head::Attribute(AttributeId(j)));
        (head, intent.count())
    }

    /// Returns whether `intent` was new.
    pub fn insert(&mut self, intent: &AttributeSet) -> bool {
        let (head, len) = Self::key(intent);
        let bucket = self.table.entry(head).or_default().entry(len).or_default();
        if bucket.contains(intent) {
            return false;
        }
        bucket.insert(intent.clone());
        self.len += 1;
        true
    }

    pub fn contains(&self, intent: &AttributeSet) -> bool {
        self.bucket(intent).is_some_and(|b| b.contains(intent))
    }

    /// The bucket `intent` would live in, if it exists yet.
    pub fn bucket(&self, intent: &AttributeSet) -> Option<&HashSet<AttributeSet>> {
        let (head, len) = Self::key(intent);
        self.table.get(&head)?.get(&len)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}
