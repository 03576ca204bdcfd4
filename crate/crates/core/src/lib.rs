//! Runs math/QA datasets through multi-agent LLM coordination topologies while
//! recording per-token entropy, extracts a hierarchical feature set from the
//! traces, and trains a boosted-tree "judger" that predicts per-sample
//! correctness from entropy alone.
//!
//! The crate is organised around the pipeline stages:
//!
//! - [`trace`]: the canonical data model (problems, trajectories, traces).
//! - [`stats`]: entropy and summary-statistic kernels.
//! - [`gateway`]: HTTP and scripted-mock model backends.
//! - [`topology`]: the five coordination architectures and their context rules.
//! - [`verifier`]: boxed-answer extraction, normalization, grading, voting.
//! - [`features`]: the versioned feature manifest and extraction.
//! - [`judger`]: standardization, two GBDT growth policies, attribution,
//!   cross-validation and pass@k selection.
//! - [`analysis`]: calibration, causal decomposition and statistical tests.
//! - [`store`]: file formats (trace files, datasets, matrices, models).

pub mod analysis;
pub mod features;
pub mod gateway;
pub mod judger;
pub mod real;
pub mod stats;
pub mod store;
pub mod topology;
pub mod trace;
pub mod verifier;

/// Scalar type used by the concrete pipeline (traces, matrices, model files).
pub type Scalar = f64;

/// Summary statistics over pipeline scalars.
pub type Summary = stats::StatSummary<Scalar>;
/// Shape metrics over pipeline scalars.
pub type Shape = stats::ShapeMetrics<Scalar>;
/// The two-model judger ensemble over pipeline scalars.
pub type Ensemble = judger::EnsembleModel;
