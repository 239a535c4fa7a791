use serde::{Deserialize, Serialize};

use crate::policy::tensor::log_sum_exp;
use crate::Scalar;

/// How candidate programs are weighted in the numerical gradient estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WeightScheme {
    /// `q(z) = p(z|x)`, not renormalized.
    Rl,
    /// Policy renormalized over the reward-earning members.
    Mml,
    /// MML weights raised to β and renormalized.
    Meritocratic(f64),
}

/// Gradient weights over a candidate set. MML and meritocratic weights are
/// all zero when nothing earns reward. Computed in log space.
pub fn compute_q<F: Scalar>(scheme: WeightScheme, log_probs: &[F], rewards: &[F]) -> Vec<F> {
    assert_eq!(log_probs.len(), rewards.len());
    let beta = match scheme {
        WeightScheme::Rl => return log_probs.iter().map(|lp| lp.exp()).collect(),
        WeightScheme::Mml => F::one(),
        WeightScheme::Meritocratic(beta) => F::of(beta),
    };
    let scaled: Vec<F> = log_probs
        .iter()
        .zip(rewards)
        .map(|(&lp, &r)| if r > F::zero() { beta * lp } else { F::neg_infinity() })
        .collect();
    let norm = log_sum_exp(&scaled);
    if norm == F::neg_infinity() {
        return vec![F::zero(); log_probs.len()];
    }
    scaled.iter().map(|&s| if s == F::neg_infinity() { F::zero() } else { (s - norm).exp() }).collect()
}

/// Shannon entropy (nats) of a distribution given by unnormalized weights.
pub fn entropy<F: Scalar>(weights: &[F]) -> F {
    let total: F = weights.iter().copied().sum();
    if total <= F::zero() {
        return F::zero();
    }
    weights
        .iter()
        .filter(|&&w| w > F::zero())
        .map(|&w| {
            let p = w / total;
            -p * p.ln()
        })
        .sum()
}
