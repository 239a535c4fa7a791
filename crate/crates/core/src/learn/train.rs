use std::io::Write;
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::estimate::{accumulate_monte_carlo, accumulate_numerical, LearnError};
use super::weights::WeightScheme;
use crate::data::{RawExample, TrainingExample};
use crate::explore::{randomized_beam_search, sample_eps_greedy, BeamConfig, Hypothesis};
use crate::harness::{evaluate, ThreeUttsMode};
use crate::lang::DEFAULT_BUDGET;
use crate::policy::{checkpoint, Adam, Dims, HistoryKind, Input, Model, OptimError, Params};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Reinforce,
    Bsmml,
    Randomer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub algo: Algo,
    /// Beam size, or sample count for REINFORCE.
    pub beam: usize,
    /// Exploration ε. Unset: 0.15 for RandoMer, 0 otherwise.
    pub epsilon: Option<f64>,
    pub beta: f64,
    pub baseline: f64,
    pub lr: f64,
    pub batch: usize,
    pub iters: usize,
    pub seed: u64,
    pub history: HistoryKind,
    pub dims: Dims,
    pub budget: usize,
    pub eval_every: usize,
    pub patience: usize,
    /// Defaults to `beam`.
    pub eval_beam: Option<usize>,
    pub eval_3utts_mode: ThreeUttsMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            algo: Algo::Randomer,
            beam: 32,
            epsilon: None,
            beta: 0.0,
            baseline: 0.01,
            lr: 0.001,
            batch: 8,
            iters: 13_000,
            seed: 0,
            history: HistoryKind::Stack,
            dims: Dims::default(),
            budget: DEFAULT_BUDGET,
            eval_every: 250,
            patience: 10,
            eval_beam: None,
            eval_3utts_mode: ThreeUttsMode::Truncate,
        }
    }
}

/// How candidate programs are produced for one example.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Explorer {
    Beam { size: usize, epsilon: f64 },
    Sample { count: usize, epsilon: f64 },
}

impl TrainConfig {
    pub fn epsilon(&self) -> f64 {
        self.epsilon.unwrap_or(match self.algo {
            Algo::Randomer => 0.15,
            _ => 0.0,
        })
    }

    pub fn explorer(&self) -> Explorer {
        match self.algo {
            Algo::Reinforce => Explorer::Sample { count: self.beam, epsilon: self.epsilon() },
            Algo::Bsmml => Explorer::Beam { size: self.beam, epsilon: 0.0 },
            Algo::Randomer => Explorer::Beam { size: self.beam, epsilon: self.epsilon() },
        }
    }

    pub fn scheme(&self) -> WeightScheme {
        match self.algo {
            Algo::Reinforce => WeightScheme::Rl,
            Algo::Bsmml => WeightScheme::Mml,
            Algo::Randomer => WeightScheme::Meritocratic(self.beta),
        }
    }

    pub fn eval_beam(&self) -> usize {
        self.eval_beam.unwrap_or(self.beam)
    }
}

pub fn explore<F: Scalar>(model: &Model<F>, input: Input<'_>, explorer: Explorer, seed: u64) -> Vec<Hypothesis<F>> {
    match explorer {
        Explorer::Beam { size, epsilon } => {
            randomized_beam_search(model, input, BeamConfig::randomized(size, epsilon, seed))
        }
        Explorer::Sample { count, epsilon } => sample_eps_greedy(model, input, count, epsilon, seed),
    }
}

/// Stream seed for one (iteration, minibatch slot) pair.
pub fn derive_seed(seed: u64, iter: u64, slot: u64) -> u64 {
    let mut z = seed ^ iter.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ slot.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fraction of examples for which the explorer finds at least one rewarded program.
pub fn discovery_rate<F: Scalar>(model: &Model<F>, examples: &[TrainingExample], explorer: Explorer, seed: u64) -> f64 {
    if examples.is_empty() {
        return 0.0;
    }
    let hits: usize = examples
        .par_iter()
        .enumerate()
        .map(|(i, ex)| {
            let found = explore(model, ex.input(), explorer, derive_seed(seed, u64::MAX, i as u64));
            usize::from(found.iter().any(|h| h.reward(&ex.target) > F::zero()))
        })
        .sum();
    hits as f64 / examples.len() as f64
}

/// Append-only `iter,split,metric,value` log.
pub struct Metrics {
    rows: Vec<String>,
    sink: Option<Box<dyn Write + Send>>,
}

impl Metrics {
    pub const HEADER: &'static str = "iter,split,metric,value";

    pub fn in_memory() -> Self {
        Metrics { rows: Vec::new(), sink: None }
    }

    pub fn to_writer(mut sink: Box<dyn Write + Send>) -> std::io::Result<Self> {
        writeln!(sink, "{}", Self::HEADER)?;
        Ok(Metrics { rows: Vec::new(), sink: Some(sink) })
    }

    pub fn record(&mut self, iter: usize, split: &str, metric: &str, value: f64) -> std::io::Result<()> {
        let row = format!("{iter},{split},{metric},{value}");
        if let Some(sink) = &mut self.sink {
            writeln!(sink, "{row}")?;
            sink.flush()?;
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn rows(&self) -> &[String] {
        &self.rows
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(r);
            out.push('\n');
        }
        out
    }

    /// Values of one metric, in logging order.
    pub fn series(&self, split: &str, metric: &str) -> Vec<(usize, f64)> {
        self.rows
            .iter()
            .filter_map(|r| {
                let mut f = r.split(',');
                let (i, s, m, v) = (f.next()?, f.next()?, f.next()?, f.next()?);
                if s == split && m == metric {
                    Some((i.parse().ok()?, v.parse().ok()?))
                } else {
                    None
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub iterations: usize,
    pub updates: usize,
    pub best_valid: Option<f64>,
    pub stopped_early: bool,
}

struct SlotResult<F> {
    grads: Params<F>,
    rewarded: bool,
    candidates: usize,
}

fn slot_gradient<F: Scalar>(
    model: &Model<F>,
    cfg: &TrainConfig,
    ex: &TrainingExample,
    seed: u64,
) -> Result<SlotResult<F>, LearnError> {
    let input = ex.input();
    let found = explore(model, input, cfg.explorer(), seed);
    let rewarded = found.iter().any(|h| h.reward(&ex.target) > F::zero());
    let mut grads = model.params.zeros_like();
    match cfg.algo {
        Algo::Reinforce => accumulate_monte_carlo(model, input, &found, &ex.target, F::of(cfg.baseline), &mut grads)?,
        _ => accumulate_numerical(model, input, &found, &ex.target, cfg.scheme(), &mut grads)?,
    }
    Ok(SlotResult { grads, rewarded, candidates: found.len() })
}

/// Minibatch training with one Adam step per iteration, periodic validation
/// and checkpoints. `out` receives checkpoints when given.
pub fn train_loop<F: Scalar>(
    model: &mut Model<F>,
    cfg: &TrainConfig,
    train: &[TrainingExample],
    valid: &[RawExample],
    metrics: &mut Metrics,
    out: Option<&Path>,
) -> Result<TrainOutcome, LearnError> {
    let mut adam = Adam::new(&model.params, F::of(cfg.lr));
    let mut outcome = TrainOutcome { iterations: 0, updates: 0, best_valid: None, stopped_early: false };
    let mut stale = 0;
    if train.is_empty() {
        return Ok(outcome);
    }
    for iter in 1..=cfg.iters {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, iter as u64, u64::MAX));
        let batch: Vec<usize> = sample(&mut rng, train.len(), cfg.batch.min(train.len())).into_vec();
        let shared: &Model<F> = model;
        let results: Vec<Result<SlotResult<F>, LearnError>> = batch
            .par_iter()
            .enumerate()
            .map(|(slot, &i)| slot_gradient(shared, cfg, &train[i], derive_seed(cfg.seed, iter as u64, slot as u64)))
            .collect();
        let mut grads = model.params.zeros_like();
        let (mut rewarded, mut candidates) = (0, 0);
        for r in results {
            let r = r?;
            grads.add_scaled(&r.grads, F::one());
            rewarded += usize::from(r.rewarded);
            candidates += r.candidates;
        }
        let updated = match adam.step(&mut model.params, &grads) {
            Ok(u) => u,
            Err(e) => {
                if let Some(dir) = out {
                    checkpoint::save(&dir.join("nonfinite-params.bin"), &model.params, None)?;
                    checkpoint::save(&dir.join("nonfinite-grads.bin"), &grads, None)?;
                }
                let OptimError::NonFiniteGradient { tensor } = &e;
                eprintln!("iteration {iter}: non-finite gradient in {tensor}");
                return Err(e.into());
            }
        };
        outcome.iterations = iter;
        outcome.updates += usize::from(updated);
        let n = batch.len() as f64;
        metrics.record(iter, "train", "reward_rate", rewarded as f64 / n)?;
        metrics.record(iter, "train", "candidates", candidates as f64 / n)?;

        if cfg.eval_every > 0 && iter % cfg.eval_every == 0 {
            if let Some(dir) = out {
                checkpoint::save(&dir.join(format!("ckpt-{iter:06}.bin")), &model.params, Some(&adam))?;
            }
            if !valid.is_empty() {
                let r = evaluate(model, valid, cfg.eval_beam(), cfg.eval_3utts_mode);
                metrics.record(iter, "valid", "acc_all", r.acc_all())?;
                if let Some(a3) = r.acc3() {
                    metrics.record(iter, "valid", "acc3", a3)?;
                }
                if outcome.best_valid.map_or(true, |b| r.acc_all() > b) {
                    outcome.best_valid = Some(r.acc_all());
                    stale = 0;
                    if let Some(dir) = out {
                        checkpoint::save(&dir.join("best.bin"), &model.params, None)?;
                    }
                } else {
                    stale += 1;
                    if cfg.patience > 0 && stale >= cfg.patience {
                        outcome.stopped_early = true;
                        break;
                    }
                }
            }
        }
    }
    if let Some(dir) = out {
        checkpoint::save(&dir.join("final.bin"), &model.params, Some(&adam))?;
    }
    Ok(outcome)
}
