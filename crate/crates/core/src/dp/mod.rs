//! Differential-privacy primitives shared by every private algorithm.

mod composition;
mod exponential;
mod noise;
mod sparse;

pub use composition::{compose_adaptive, LedgerEntry, PrivacyLedger};
pub use exponential::{
    exp_mechanism_accuracy_bound, exponential_mechanism, exponential_probabilities, ScoredOutcomeSet,
};
pub use noise::{laplace_from_uniform, laplace_sample, NoiseMode, NoiseSource};
pub use sparse::{sparse_accuracy_bound, SparseAnswer, SparseSession};
