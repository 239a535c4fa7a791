//! Semantic parsing from denotations over simulated worlds.
//!
//! Utterance sequences are mapped to postfix programs in a small stack
//! language, executed against Alchemy, Tangrams or Scene worlds, and the
//! neural policy producing them is trained only from the final world state.
//! Three learners are provided: REINFORCE, beam-search marginal likelihood,
//! and randomized beam search with β-meritocratic gradient weights.

pub mod data;
pub mod explore;
pub mod harness;
pub mod lang;
pub mod learn;
pub mod policy;
mod scalar;
pub mod worlds;

pub use scalar::Scalar;

/// Double-precision model; training and gradient checks use this.
pub type Model64 = policy::Model<f64>;
/// Single-precision model.
pub type Model32 = policy::Model<f32>;
pub type Params64 = policy::Params<f64>;
pub type Hypothesis64 = explore::Hypothesis<f64>;
