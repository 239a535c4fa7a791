//! Candidate program search: classic beam search, randomized (ε-greedy)
//! beam search, and ε-greedy sampling.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lang::{MachineState, TokenId};
use crate::policy::{Input, Model, Prepared};
use crate::worlds::{worlds_equal, WorldState};
use crate::Scalar;

/// A partial or complete program with its execution state.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis<F> {
    pub tokens: Vec<TokenId>,
    pub state: MachineState,
    /// Cumulative unmasked policy log-probability of `tokens`.
    pub log_prob: F,
}

impl<F: Scalar> Hypothesis<F> {
    pub fn is_terminal(&self) -> bool {
        self.state.is_terminal()
    }

    /// `R(z)`: 1 iff the program is complete and executes to `target`.
    pub fn reward(&self, target: &WorldState) -> F {
        if self.is_terminal() && worlds_equal(self.state.world(), target) == Ok(true) {
            F::one()
        } else {
            F::zero()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamConfig {
    pub beam_size: usize,
    pub epsilon: f64,
    /// Defaults to utterances × per-utterance budget.
    pub max_steps: Option<usize>,
    pub seed: u64,
}

impl BeamConfig {
    pub fn classic(beam_size: usize) -> Self {
        BeamConfig { beam_size, epsilon: 0.0, max_steps: None, seed: 0 }
    }

    pub fn randomized(beam_size: usize, epsilon: f64, seed: u64) -> Self {
        BeamConfig { beam_size, epsilon, max_steps: None, seed }
    }
}

/// Best first: higher score, then lower last token id, then lexicographic tokens.
pub fn rank<F: Scalar>(a: &Hypothesis<F>, b: &Hypothesis<F>) -> Ordering {
    b.log_prob
        .as_f64()
        .total_cmp(&a.log_prob.as_f64())
        .then_with(|| a.tokens.last().cmp(&b.tokens.last()))
        .then_with(|| a.tokens.cmp(&b.tokens))
}

/// Picks `b` indices from a ranked pool of `n`, one by one without
/// replacement: uniformly with probability ε, else the best remaining.
pub fn select_eps_greedy(n: usize, b: usize, epsilon: f64, rng: &mut impl Rng) -> Vec<usize> {
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut picked = Vec::with_capacity(b.min(n));
    while picked.len() < b && !remaining.is_empty() {
        let k = if epsilon > 0.0 && rng.gen_bool(epsilon) { rng.gen_range(0..remaining.len()) } else { 0 };
        picked.push(remaining.remove(k));
    }
    picked
}

/// Step-wise beam search. With ε = 0 it is classic beam search.
pub struct BeamSearch<'m, F> {
    model: &'m Model<F>,
    prepared: Prepared<F>,
    cfg: BeamConfig,
    max_steps: usize,
    steps: usize,
    beam: Vec<Hypothesis<F>>,
    found: Vec<Hypothesis<F>>,
    rng: ChaCha8Rng,
}

impl<'m, F: Scalar> BeamSearch<'m, F> {
    pub fn new(model: &'m Model<F>, input: Input<'_>, cfg: BeamConfig) -> Self {
        assert!(cfg.beam_size >= 1, "beam size must be positive");
        let start = model.start_state(input);
        let max_steps = cfg.max_steps.unwrap_or(input.utterances.len() * model.budget);
        let root = Hypothesis { tokens: Vec::new(), state: start, log_prob: F::zero() };
        let (beam, found) = if root.is_terminal() { (Vec::new(), vec![root]) } else { (vec![root], Vec::new()) };
        BeamSearch {
            model,
            prepared: model.prepare(input),
            cfg,
            max_steps,
            steps: 0,
            beam,
            found,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        }
    }

    pub fn beam(&self) -> &[Hypothesis<F>] {
        &self.beam
    }

    pub fn found(&self) -> &[Hypothesis<F>] {
        &self.found
    }

    pub fn is_done(&self) -> bool {
        self.beam.is_empty() || self.steps >= self.max_steps
    }

    /// One-token continuations of the beam that execute and can still
    /// complete, best first.
    pub fn pool(&self) -> Vec<Hypothesis<F>> {
        let vocab = &self.model.vocab;
        let mut pool = Vec::new();
        for h in &self.beam {
            let lp = self.model.next_log_probs(&self.prepared, &h.tokens, &h.state);
            for (tok, state) in h.state.expand_viable(vocab) {
                let mut tokens = h.tokens.clone();
                tokens.push(tok);
                pool.push(Hypothesis { tokens, state, log_prob: h.log_prob + lp[tok] });
            }
        }
        pool.sort_by(rank);
        pool
    }

    /// One search iteration. Selected complete programs move to the result set.
    pub fn advance(&mut self) -> bool {
        if self.is_done() {
            return false;
        }
        let mut pool: Vec<Option<Hypothesis<F>>> = self.pool().into_iter().map(Some).collect();
        let picks = select_eps_greedy(pool.len(), self.cfg.beam_size, self.cfg.epsilon, &mut self.rng);
        self.beam.clear();
        for i in picks {
            let h = pool[i].take().expect("picked once");
            if h.is_terminal() {
                self.found.push(h);
            } else {
                self.beam.push(h);
            }
        }
        self.steps += 1;
        true
    }

    pub fn run(mut self) -> Vec<Hypothesis<F>> {
        while self.advance() {}
        self.found
    }
}

pub fn classic_beam_search<F: Scalar>(model: &Model<F>, input: Input<'_>, beam_size: usize) -> Vec<Hypothesis<F>> {
    BeamSearch::new(model, input, BeamConfig::classic(beam_size)).run()
}

pub fn randomized_beam_search<F: Scalar>(model: &Model<F>, input: Input<'_>, cfg: BeamConfig) -> Vec<Hypothesis<F>> {
    BeamSearch::new(model, input, cfg).run()
}

/// Draws the next token: with probability ε uniform over `valid`, else from
/// the policy renormalized over `valid`. Returns an index into `valid`.
pub fn sample_next<F: Scalar>(log_probs: &[F], valid: &[TokenId], epsilon: f64, rng: &mut impl Rng) -> usize {
    if epsilon > 0.0 && rng.gen_bool(epsilon) {
        return rng.gen_range(0..valid.len());
    }
    let max = valid.iter().map(|&t| log_probs[t].as_f64()).fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = valid.iter().map(|&t| (log_probs[t].as_f64() - max).exp()).collect();
    let mut u = rng.gen::<f64>() * weights.iter().sum::<f64>();
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    valid.len() - 1
}

/// `n` independent ε-greedy roll-outs over completable continuations. A
/// roll-out left with no continuation stops there, incomplete (reward 0).
pub fn sample_eps_greedy<F: Scalar>(
    model: &Model<F>,
    input: Input<'_>,
    n: usize,
    epsilon: f64,
    seed: u64,
) -> Vec<Hypothesis<F>> {
    let prepared = model.prepare(input);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut h = Hypothesis { tokens: Vec::new(), state: model.start_state(input), log_prob: F::zero() };
            while !h.is_terminal() {
                let mut next = h.state.expand_viable(&model.vocab);
                if next.is_empty() {
                    break;
                }
                let valid: Vec<TokenId> = next.iter().map(|(t, _)| *t).collect();
                let lp = model.next_log_probs(&prepared, &h.tokens, &h.state);
                let i = sample_next(&lp, &valid, epsilon, &mut rng);
                let (tok, state) = next.swap_remove(i);
                h.log_prob += lp[tok];
                h.tokens.push(tok);
                h.state = state;
            }
            h
        })
        .collect()
}
