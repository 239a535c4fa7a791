use thiserror::Error;

use super::weights::{compute_q, WeightScheme};
use crate::explore::Hypothesis;
use crate::lang::{ExecError, ProgramEnumerator};
use crate::policy::{Input, Model, OptimError, Params, Prepared};
use crate::worlds::{worlds_equal, WorldState};
use crate::Scalar;

/// Node cap for exhaustive enumeration.
pub const DEFAULT_NODE_CAP: u64 = 2_000_000;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("enumeration exceeded {0} nodes")]
    BudgetExceeded(u64),
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error(transparent)]
    Optim(#[from] OptimError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Checkpoint(#[from] crate::policy::checkpoint::CheckpointError),
}

fn reaches(world: &WorldState, target: &WorldState) -> bool {
    worlds_equal(world, target) == Ok(true)
}

/// `Σ_{z∈S} q(z) R(z) ∇ log p(z|x)`.
pub fn grad_estimate_numerical<F: Scalar>(
    model: &Model<F>,
    input: Input<'_>,
    candidates: &[Hypothesis<F>],
    target: &WorldState,
    scheme: WeightScheme,
) -> Result<Params<F>, ExecError> {
    let mut grads = model.params.zeros_like();
    accumulate_numerical(model, input, candidates, target, scheme, &mut grads)?;
    Ok(grads)
}

pub(crate) fn accumulate_numerical<F: Scalar>(
    model: &Model<F>,
    input: Input<'_>,
    candidates: &[Hypothesis<F>],
    target: &WorldState,
    scheme: WeightScheme,
    grads: &mut Params<F>,
) -> Result<(), ExecError> {
    if candidates.is_empty() {
        return Ok(());
    }
    let log_probs: Vec<F> = candidates.iter().map(|h| h.log_prob).collect();
    let rewards: Vec<F> = candidates.iter().map(|h| h.reward(target)).collect();
    let q = compute_q(scheme, &log_probs, &rewards);
    for ((h, q), r) in candidates.iter().zip(q).zip(rewards) {
        let w = q * r;
        if w != F::zero() {
            model.accumulate_grad(input, &h.tokens, w, grads)?;
        }
    }
    Ok(())
}

/// `(1/B) Σ_b [R(z_b) − c] ∇ log p(z_b|x)`.
pub fn grad_estimate_monte_carlo<F: Scalar>(
    model: &Model<F>,
    input: Input<'_>,
    samples: &[Hypothesis<F>],
    target: &WorldState,
    baseline: F,
) -> Result<Params<F>, ExecError> {
    let mut grads = model.params.zeros_like();
    accumulate_monte_carlo(model, input, samples, target, baseline, &mut grads)?;
    Ok(grads)
}

pub(crate) fn accumulate_monte_carlo<F: Scalar>(
    model: &Model<F>,
    input: Input<'_>,
    samples: &[Hypothesis<F>],
    target: &WorldState,
    baseline: F,
    grads: &mut Params<F>,
) -> Result<(), ExecError> {
    let n = F::of(samples.len() as f64);
    for h in samples {
        let w = (h.reward(target) - baseline) / n;
        if w != F::zero() {
            model.accumulate_grad(input, &h.tokens, w, grads)?;
        }
    }
    Ok(())
}

/// `G(x, y) = Σ_z R(z) p(z|x)` by enumerating every complete program and
/// scoring each one from scratch.
pub fn expected_reward<F: Scalar>(
    model: &Model<F>,
    input: Input<'_>,
    target: &WorldState,
    node_cap: u64,
) -> Result<F, LearnError> {
    let prepared = model.prepare(input);
    let mut programs =
        ProgramEnumerator::new(&model.vocab, input.start, input.utterances.len(), model.budget).with_node_cap(node_cap);
    let mut total = F::zero();
    for (program, world) in programs.by_ref() {
        if reaches(&world, target) {
            total += model.program_log_prob_prepared(&prepared, input, &program)?.exp();
        }
    }
    if programs.hit_node_cap() {
        return Err(LearnError::BudgetExceeded(node_cap));
    }
    Ok(total)
}

fn walk<F: Scalar>(
    model: &Model<F>,
    prepared: &Prepared<F>,
    h: Hypothesis<F>,
    visit: &mut impl FnMut(Hypothesis<F>),
    nodes: &mut u64,
    cap: u64,
) -> Result<(), LearnError> {
    *nodes += 1;
    if *nodes > cap {
        return Err(LearnError::BudgetExceeded(cap));
    }
    if h.is_terminal() {
        visit(h);
        return Ok(());
    }
    let lp = model.next_log_probs(prepared, &h.tokens, &h.state);
    for (tok, state) in h.state.expand_viable(&model.vocab) {
        let mut tokens = h.tokens.clone();
        tokens.push(tok);
        walk(model, prepared, Hypothesis { tokens, state, log_prob: h.log_prob + lp[tok] }, visit, nodes, cap)?;
    }
    Ok(())
}

/// Every complete program with its policy log-probability, accumulated
/// token by token along the search tree.
pub fn enumerate_hypotheses<F: Scalar>(
    model: &Model<F>,
    input: Input<'_>,
    node_cap: u64,
) -> Result<Vec<Hypothesis<F>>, LearnError> {
    let prepared = model.prepare(input);
    let root = Hypothesis { tokens: Vec::new(), state: model.start_state(input), log_prob: F::zero() };
    let mut out = Vec::new();
    walk(model, &prepared, root, &mut |h| out.push(h), &mut 0, node_cap)?;
    Ok(out)
}

/// `p(y|x) = Σ_z p(y|z) p(z|x)`, summed over the search tree.
pub fn marginal_likelihood<F: Scalar>(
    model: &Model<F>,
    input: Input<'_>,
    target: &WorldState,
    node_cap: u64,
) -> Result<F, LearnError> {
    let prepared = model.prepare(input);
    let root = Hypothesis { tokens: Vec::new(), state: model.start_state(input), log_prob: F::zero() };
    let mut total = F::zero();
    walk(
        model,
        &prepared,
        root,
        &mut |h| {
            if reaches(h.state.world(), target) {
                total += h.log_prob.exp();
            }
        },
        &mut 0,
        node_cap,
    )?;
    Ok(total)
}
