//! Dynamic graph-stream algorithms in the strict turnstile model.
//!
//! The crate is organised around a replayable multipass edge stream
//! ([`stream::MultipassStream`]) and a family of linear sketches that can be
//! fed by such a stream: XOR/count slot ladders, CIS-coded slot ladders and
//! 1-sparse recovery sketches. On top of those sit the multipass drivers
//! (BFS forests, approximate Bellman-Ford), the spanner and hopset
//! constructions, shortest-path applications and exact offline oracles used
//! for validation.

pub mod dist;
pub mod encoding;
pub mod error;
pub mod explore;
pub mod hashing;
pub mod hopset;
pub mod oracle;
pub mod paths;
pub mod rng;
pub mod samplers;
pub mod spanner;
pub mod stream;

pub use dist::Dist;
pub use error::{Error, Result};
pub use stream::{EdgeUpdate, MultipassStream, SpaceLedger};

/// Vertex identifiers are 1-based: `1..=n`.
pub type VertexId = u32;
