//! Reference contexts and seeded random contexts, shared by the test
//! suites and the `verify` command.

use rand::Rng;

use crate::context::{AttributeId, AttributeSet, FormalContext, ObjectSet};

/// Rows of the six-object, seven-attribute running example.
pub const TOY_ROWS: [&str; 6] = ["abdf", "aceg", "bcdfg", "bde", "adef", "bcfg"];

pub fn toy_context() -> FormalContext {
    let names = "abcdefg".chars().map(String::from).collect();
    let rows = TOY_ROWS
        .iter()
        .map(|r| AttributeSet::from_indices(7, r.bytes().map(|b| (b - b'a') as usize)))
        .collect();
    FormalContext::new((1..=6).map(|o| o.to_string()).collect(), names, rows)
        .expect("the toy context is well formed")
}

/// The toy context plus shorthand for writing attribute sets as letter strings.
pub struct Toy {
    pub ctx: FormalContext,
}

impl Default for Toy {
    fn default() -> Self {
        Self::new()
    }
}

impl Toy {
    pub fn new() -> Self {
        Self { ctx: toy_context() }
    }

    /// `"adf"` → `{a, d, f}`.
    pub fn attrs(&self, letters: &str) -> AttributeSet {
        letters_to_set(letters)
    }

    pub fn objs(&self, names: &[&str]) -> ObjectSet {
        self.ctx.objects_named(names).expect("known object names")
    }

    pub fn id(&self, letter: char) -> AttributeId {
        AttributeId((letter as u8 - b'a') as usize)
    }
}

pub fn letters_to_set(letters: &str) -> AttributeSet {
    AttributeSet::from_indices(7, letters.bytes().map(|b| (b - b'a') as usize))
}

pub fn set_to_letters(set: &AttributeSet) -> String {
    set.iter().map(|j| (b'a' + j as u8) as char).collect()
}

/// Bernoulli incidence matrix with the given density.
pub fn random_context<R: Rng>(rng: &mut R, objects: usize, attributes: usize, density: f64) -> FormalContext {
    let rows: Vec<Vec<usize>> = (0..objects)
        .map(|_| (0..attributes).filter(|_| rng.gen_bool(density)).collect())
        .collect();
    FormalContext::from_index_rows(attributes, &rows).expect("indices are in range")
}

/// Random context with shape drawn from `1..=max_objects` × `1..=max_attributes`
/// and density from `[0.1, 0.9]`.
pub fn random_small_context<R: Rng>(rng: &mut R, max_objects: usize, max_attributes: usize) -> FormalContext {
    let n = rng.gen_range(1..=max_objects);
    let m = rng.gen_range(1..=max_attributes);
    let density = rng.gen_range(0.1..=0.9);
    random_context(rng, n, m, density)
}

pub fn random_attribute_set<R: Rng>(rng: &mut R, width: usize) -> AttributeSet {
    AttributeSet::from_indices(width, (0..width).filter(|_| rng.gen_bool(0.3)))
}
