use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{truncate, RawExample};
use crate::explore::{classic_beam_search, rank, Hypothesis};
use crate::lang::{MachineState, TokenId, Vocabulary};
use crate::policy::{Input, Model};
use crate::worlds::{worlds_equal, WorldState};
use crate::Scalar;

/// How accuracy after 3 utterances is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ThreeUttsMode {
    /// Cut the full decode after its third action.
    Truncate,
    /// Decode the first three utterances on their own.
    Redecode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EvalResult {
    pub examples: usize,
    pub correct_all: usize,
    /// Examples with at least 3 utterances.
    pub examples3: usize,
    pub correct3: usize,
}

impl EvalResult {
    /// Accuracy after all utterances (5utts on standard data).
    pub fn acc_all(&self) -> f64 {
        if self.examples == 0 {
            0.0
        } else {
            self.correct_all as f64 / self.examples as f64
        }
    }

    pub fn acc3(&self) -> Option<f64> {
        (self.examples3 > 0).then(|| self.correct3 as f64 / self.examples3 as f64)
    }
}

/// World after each utterance's action, replaying `program`.
pub fn intermediate_worlds(
    vocab: &Vocabulary,
    input: Input<'_>,
    budget: usize,
    program: &[TokenId],
) -> Option<Vec<WorldState>> {
    let mut state = MachineState::new(input.start.clone(), input.utterances.len(), budget);
    let mut worlds = Vec::with_capacity(input.utterances.len());
    for &t in program {
        let pointer = state.pointer();
        state = state.step(vocab.token(t)).ok()?;
        if state.pointer() > pointer {
            worlds.push(state.world().clone());
        }
    }
    Some(worlds)
}

/// Highest-scoring complete program from classic beam search.
pub fn decode<F: Scalar>(model: &Model<F>, input: Input<'_>, beam: usize) -> Option<Hypothesis<F>> {
    classic_beam_search(model, input, beam).into_iter().min_by(rank)
}

fn same(a: Option<&WorldState>, b: &WorldState) -> bool {
    a.is_some_and(|a| worlds_equal(a, b) == Ok(true))
}

fn score_one<D>(vocab: &Vocabulary, budget: usize, ex: &RawExample, decode: &D, mode: ThreeUttsMode) -> EvalResult
where
    D: Fn(Input<'_>) -> Option<Vec<TokenId>>,
{
    let worlds_of = |input: Input<'_>| {
        decode(input).and_then(|p| intermediate_worlds(vocab, input, budget, &p)).unwrap_or_default()
    };
    let m = ex.len();
    let worlds = worlds_of(ex.input());
    let mut r = EvalResult { examples: 1, ..Default::default() };
    r.correct_all = usize::from(same(worlds.get(m.wrapping_sub(1)), ex.target()) || (m == 0));
    if m >= 3 {
        r.examples3 = 1;
        r.correct3 = usize::from(match mode {
            ThreeUttsMode::Truncate => same(worlds.get(2), &ex.worlds[2]),
            ThreeUttsMode::Redecode => {
                let short = truncate(ex, 3);
                same(worlds_of(short.input()).get(2), &ex.worlds[2])
            }
        });
    }
    r
}

/// Denotation accuracy of beam decoding. Undecodable examples count as wrong.
pub fn evaluate<F: Scalar>(model: &Model<F>, examples: &[RawExample], beam: usize, mode: ThreeUttsMode) -> EvalResult {
    let decoder = |input: Input<'_>| decode(model, input, beam).map(|h| h.tokens);
    evaluate_with(&model.vocab, model.budget, examples, decoder, mode)
}

/// Accuracy of an arbitrary decoder returning one program per input.
pub fn evaluate_with<D>(
    vocab: &Vocabulary,
    budget: usize,
    examples: &[RawExample],
    decode: D,
    mode: ThreeUttsMode,
) -> EvalResult
where
    D: Fn(Input<'_>) -> Option<Vec<TokenId>> + Sync,
{
    examples.par_iter().map(|ex| score_one(vocab, budget, ex, &decode, mode)).reduce(EvalResult::default, |a, b| {
        EvalResult {
            examples: a.examples + b.examples,
            correct_all: a.correct_all + b.correct_all,
            examples3: a.examples3 + b.examples3,
            correct3: a.correct3 + b.correct3,
        }
    })
}

/// Median; the mean of the middle pair for an even count.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

/// Per-seed results and their medians.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub per_seed: Vec<(u64, EvalResult)>,
}

impl EvalReport {
    pub fn median_all(&self) -> Option<f64> {
        median(&self.per_seed.iter().map(|(_, r)| r.acc_all()).collect::<Vec<_>>())
    }

    pub fn median3(&self) -> Option<f64> {
        median(&self.per_seed.iter().filter_map(|(_, r)| r.acc3()).collect::<Vec<_>>())
    }
}
