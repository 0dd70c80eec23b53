//! FLORA-style asymmetric learning-to-hash for fast ranking under frozen
//! neural similarity measures.
//!
//! A pair of hash functions (user tower, item tower, shared tanh head)
//! is trained so that the inner product of their binary codes tracks the
//! scores of an arbitrary frozen measure. Serving replaces measure
//! evaluation with bit-packed Hamming ranking, optionally followed by
//! multi-table radius-0 probing and exact re-ranking.

pub mod error;
pub mod eval;
pub mod hash_model;
pub mod index;
pub mod io;
pub mod measures;
pub mod nn;
pub mod sampler;
pub mod synth;
pub mod trainer;

pub use error::{FloraError, Result};
pub use hash_model::{binarize, Domain, FloraModel, HashConfig};
pub use index::{
    hamming_distance, pack_codes, probe_radius0, rank_full_scan, rerank_with_f, unpack_codes,
    HashTable, IndexTable, MultiTableIndex, PackedCodes, RankingResult,
};
pub use measures::{make_measure, measure_score, measure_score_batch, MeasureKind, MeasureSpec};
pub use sampler::{
    rank_inverse_weights, sample_minibatch, sample_pair, PositiveCache, SamplingStrategy,
    SamplingVariant,
};
pub use trainer::{grid_search_lambdas, train, train_with_cache, TrainConfig, TrainOutcome};
