//! Product-attribute knowledge graph construction.
//!
//! The crate is organised around a single write path:
//!
//! - [`graph`] is the typed property-graph store (products, product types,
//!   attribute keys, key-typed values) with its audit log and snapshot format.
//! - [`retrieval`] keeps a per-kind dense index over canonical node names.
//! - [`kgd`] is the decision engine. Every mutation of a [`graph::Graph`]
//!   goes through [`kgd::Kgd`], which resolves each proposal into one of
//!   `ADD`, `MERGE`, `REPLACE` or `DISCARD`.
//! - [`pipeline`] runs the per-listing agents (type induction, key discovery,
//!   value extraction) and feeds their proposals to the engine.
//! - [`eval`] holds the evaluation metrics.
//!
//! The `parallel` feature (on by default) enables rayon for the data-parallel
//! scans; see [`exec`].

pub mod eval;
pub mod exec;
pub mod graph;
pub mod kgd;
pub mod normalize;
pub mod pipeline;
pub mod prompt;
pub mod retrieval;
pub mod synth;

pub use graph::{Graph, NodeId, NodeKind, EdgeKind};
pub use kgd::{Candidate, EditAction, Kgd, PolicyVariant};
pub use normalize::normalize;
