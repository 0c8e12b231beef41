//! Controlled bias injection, mitigation, and dual-regime evaluation for
//! tabular binary classification.
//!
//! The library starts from a *fair* dataset (score-consistent labels, known
//! sensitive attribute), injects label or selection bias at a chosen
//! intensity, trains tree-based classifiers on the biased view, optionally
//! applies one of eight mitigation strategies, and evaluates every model
//! twice: once against the untouched fair test fold and once against the
//! biased view of the same fold. Comparing the two readings shows what a
//! fairness intervention really did to the underlying population rather than
//! to the corrupted observations.
//!
//! Numeric kernels (metrics, learners, bias injection, mitigation solvers)
//! are generic over [`scalar::Scalar`], with `f64` as the default type
//! parameter; the aliases below pin the concrete working types used by
//! ingestion, the pipeline, and the CLI.

pub mod bias;
pub mod config;
pub mod data;
pub mod error;
pub mod ingest;
pub mod learn;
pub mod metrics;
pub mod mitigate;
pub mod pipeline;
pub mod plot;
pub mod report;
pub mod scalar;
pub mod seeds;
pub mod synthetic;

pub use error::Error;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;

/// Scalar type used by ingestion, the pipeline, and the CLI.
pub type DefaultScalar = f64;

/// Concrete dataset as produced by ingestion and the synthetic generator.
pub type Dataset64 = data::Dataset<f64>;
/// Single-precision dataset for memory-constrained experiments.
pub type Dataset32 = data::Dataset<f32>;
/// Concrete metric report emitted by the pipeline.
pub type MetricReport64 = metrics::MetricReport<f64>;
/// Concrete prediction vector emitted by trained models.
pub type Prediction64 = metrics::Prediction<f64>;
/// Concrete trained model handle used by the pipeline.
pub type TrainedModel64 = learn::TrainedModel<f64>;
