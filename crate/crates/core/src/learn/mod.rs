//! Rewards, gradient weights, gradient estimators and the training loop.

mod estimate;
mod train;
mod weights;

pub use estimate::{
    enumerate_hypotheses, expected_reward, grad_estimate_monte_carlo, grad_estimate_numerical, marginal_likelihood,
    LearnError, DEFAULT_NODE_CAP,
};
pub use train::{derive_seed, discovery_rate, explore, train_loop, Algo, Explorer, Metrics, TrainConfig, TrainOutcome};
pub use weights::{compute_q, entropy, WeightScheme};
