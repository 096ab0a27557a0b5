//! Estimating how many latent opinion dimensions explain an up/down vote
//! matrix.
//!
//! Votes form a partial sign matrix (comments x voters). Its sign-rank is the
//! smallest `r` for which comment and voter vectors in `R^r` reproduce every
//! observed vote as the sign of their dot product. This crate provides an
//! exact rank-one test, feasibility checks in small dimensions, a polynomial
//! upper bound from column sign changes, a probabilistic embedding fit, and
//! the analysis pipeline tying them together.

pub mod analysis;
pub mod error;
pub mod feasibility;
pub mod mle_embed;
pub mod rank_one;
pub mod sc_bound;
pub mod seeds;
pub mod sign_matrix;

pub use error::{Error, Result};
pub use feasibility::{decide_feasibility, FeasibilityConfig, FeasibilityOutcome, Witness};
pub use mle_embed::{fit, FitConfig, OpinionEmbedding};
pub use rank_one::{is_rank_one, RankOneWitness};
pub use sc_bound::{estimate_dimension_upper_bound, BoundConfig, BoundResult};
pub use sign_matrix::{Direction, PartialSignMatrix, Sign, Vote};
