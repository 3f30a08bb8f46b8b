//! Jointly differentially private equilibrium computation for large
//! aggregative games.
//!
//! The crate is organised bottom-up:
//!
//! - [`dp`]: Laplace noise, the below-threshold sparse vector mechanism, the
//!   exponential mechanism and composition accounting.
//! - [`game`]: multi-dimensional aggregative games with linear aggregators,
//!   aggregative best responses and regret verification.
//! - [`lp`]: the distributed multiplicative-weights LP solver and an exact
//!   (certified-gap) minimax oracle for the same LP family.
//! - [`presl`]: private and non-private equilibrium selection through grid
//!   search over aggregator values.
//! - [`onedim`]: one-dimensional (quasi-)aggregative games, the private
//!   fixed-point search and quality-ordered selection.
//! - [`market`]: the multi-commodity market game with hinge pricing.
//! - [`harness`]: generators, brute-force oracles, deviation experiments and
//!   reproducible experiment output.

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dp;
pub mod error;
pub mod game;
pub mod harness;
pub mod lp;
pub mod market;
pub mod onedim;
pub mod presl;
mod util;

pub use error::{Error, Result};
pub use game::{AggregativeGame, MixedProfile, PlayerType, PlayerUtility, PureProfile};

/// Outcome of a private equilibrium search: either a pure profile or a
/// declared abort (the mechanism never fired).
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Profile(PureProfile),
    Abort,
}

impl Outcome {
    pub fn profile(&self) -> Option<&PureProfile> {
        match self {
            Outcome::Profile(x) => Some(x),
            Outcome::Abort => None,
        }
    }

    pub fn is_abort(&self) -> bool {
        matches!(self, Outcome::Abort)
    }
}
