//! Cost-aware, concept-based query routing.
//!
//! Maps incoming queries (as precomputed embeddings) to the most suitable
//! model from a priced catalog. The flagship policy is a concept-bottleneck
//! router: one head predicts human-interpretable concepts from the
//! embedding, a second head predicts per-model suitability from those
//! concepts alone, so every decision carries a faithful concept rationale
//! and can be edited at the concept level. Black-box MLP, KNN,
//! matrix-factorization, random, and oracle baselines ride along, together
//! with the training loops, cost-regularization sweeps, evaluation studies,
//! and statistical tests needed to compare them.
//!
//! Modules:
//!
//! - [`numerics`] — dense two-layer networks, BCE, Adam, gradient checks;
//! - [`dataset`] — data model, file formats, splits, synthetic generator;
//! - [`routers`] — routing policies and checkpoints;
//! - [`training`] — loss assembly, epoch loops, lambda sweeps;
//! - [`evaluation`] — metrics, studies, significance tests, report files.

pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod numerics;
pub mod routers;
pub mod training;

pub use error::{Error, Result};
