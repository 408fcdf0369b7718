//! Neuro-symbolic toolkit for a sign lexicon.
//!
//! The crate stores typed linguistic facts about signs in a knowledge graph,
//! learns fact-verification embeddings over them, and performs probabilistic
//! inference from phonological observations to signs, semantic features, and
//! discourse topics.
//!
//! Subsystems:
//!
//! - [`kg`]: typed triple store with relation-type partitions, degree
//!   statistics, and reproducible fold assignment
//! - [`ingest`]: tabular sources to facts, plus ontology refinement
//!   (relation merging, entity-equality heuristic, cleaning)
//! - [`embed`]: translation and bilinear fact-verification embeddings
//! - [`ground`]: per-window phoneme probability observations
//! - [`isr`]: isolated sign recognition (factor graph, k-NN, MLP)
//! - [`sfr`]: semantic feature recognition for unseen signs, both directions
//! - [`pipeline`]: sentence-level topic classification over sliding windows

pub mod embed;
pub mod ground;
pub mod ingest;
pub mod kg;
pub mod nn;

pub use embed::{EmbeddingSpace, Scorer, TrainConfig};
pub use ground::{ObservationSet, PhonemeObservation, PhonologySchema};
pub use kg::{
    EntityId, Fact, FoldMaps, GraphBuilder, KnowledgeGraph, Namespace, RelType, RelationId,
};
