//! Deep metric learning building blocks on dense `f64` matrices.
//!
//! The crate is organized the way a metric learning experiment is put
//! together:
//!
//! * [`distances`] compute pairwise distance or similarity matrices;
//! * [`losses`] turn matrix entries into per-tuple losses with analytic gradients;
//! * [`miners`] pick hard pairs inside a batch and convert between tuple arities;
//! * [`reducers`] and [`regularizers`] shape how loss terms are combined;
//! * [`samplers`] form batches;
//! * [`train_test`] runs training with hooks, checkpoints and evaluation;
//! * [`accuracy`] computes k-NN retrieval and clustering metrics.
//!
//! The `mlkit` binary wraps training and evaluation behind `train` and `eval`
//! subcommands; see [`cli`].

pub mod accuracy;
pub mod cli;
pub mod distances;
pub mod error;
pub mod losses;
pub mod miners;
pub mod reducers;
pub mod regularizers;
pub mod samplers;
pub mod train_test;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    l2_normalize_rows, validate_batch, EmbeddingBatch, LabelVector, LossBundle, LossTerms,
    MetricReport, Pair, Triplet, TupleArity, TupleSet, DEFAULT_EPS,
};
