//! Formal concept analysis: centralized and map-reduce concept enumeration.
//!
//! ```
//! use fcamr::{algorithms, fixtures};
//!
//! let ctx = fixtures::toy_context();
//! assert_eq!(algorithms::all_closures(&ctx).len(), 21);
//! ```

pub mod algorithms;
pub mod bitset;
pub mod context;
pub mod engine;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod mr;
pub mod oracle;
pub mod partition;
pub mod runtime;

pub use context::{AttributeId, AttributeSet, Concept, ConceptList, FormalContext, ObjectSet};
pub use error::{Error, Result};
