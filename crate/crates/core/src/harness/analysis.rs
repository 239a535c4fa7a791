use std::collections::HashMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{generate_synthetic, RawExample, TrainingExample};
use crate::explore::{classic_beam_search, rank, sample_eps_greedy, Hypothesis};
use crate::lang::{complete_utterance, MachineState, ProgramEnumerator, Vocabulary};
use crate::learn::entropy;
use crate::policy::{Dims, HistoryKind, Input, Model, Params, WordVectors};
use crate::worlds::{worlds_equal, Domain, WorldState};
use crate::Scalar;

/// Reward-earning programs found by bounded enumeration. `count` is a lower
/// bound whenever `exhausted` is false.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConsistentCount {
    pub count: u64,
    pub visited: u64,
    pub exhausted: bool,
}

pub fn count_consistent(
    vocab: &Vocabulary,
    input: Input<'_>,
    target: &WorldState,
    cap_h: usize,
    node_cap: u64,
) -> ConsistentCount {
    let mut programs =
        ProgramEnumerator::new(vocab, input.start, input.utterances.len(), cap_h).with_node_cap(node_cap);
    let count = programs.by_ref().filter(|(_, w)| worlds_equal(w, target) == Ok(true)).count() as u64;
    ConsistentCount { count, visited: programs.visited(), exhausted: !programs.hit_node_cap() }
}

/// Reward-earning programs of a whole example whose intermediate worlds also
/// match the annotated ones. Counted exactly, utterance by utterance, merging
/// identical interpreter states; the total over all consistent programs can
/// only be larger.
pub fn count_consistent_example(vocab: &Vocabulary, example: &RawExample, cap_h: usize, node_cap: u64) -> ConsistentCount {
    let mut layer: HashMap<MachineState, u64> = HashMap::new();
    layer.insert(MachineState::new(example.start.clone(), example.len(), cap_h), 1);
    let mut visited = 0;
    for goal in &example.worlds {
        let mut next: HashMap<MachineState, u64> = HashMap::new();
        for (state, n) in &layer {
            let Some(ends) = complete_utterance(vocab, state, node_cap, &mut visited) else {
                return ConsistentCount { count: 0, visited, exhausted: false };
            };
            for end in ends {
                if worlds_equal(end.world(), goal) == Ok(true) {
                    let c = next.entry(end).or_insert(0);
                    *c = c.saturating_add(*n);
                }
            }
        }
        layer = next;
    }
    let count = layer.values().fold(0u64, |a, &b| a.saturating_add(b));
    ConsistentCount { count, visited, exhausted: true }
}

/// Top-k complete programs from classic beam search, most probable first.
pub fn top_k<F: Scalar>(model: &Model<F>, input: Input<'_>, beam: usize, k: usize) -> Vec<Hypothesis<F>> {
    let mut found = classic_beam_search(model, input, beam);
    found.sort_by(rank);
    found.truncate(k);
    found
}

/// Entropy of the policy renormalized over the rewarded members of the top k.
pub fn rewarded_entropy<F: Scalar>(top: &[Hypothesis<F>], target: &WorldState) -> f64 {
    let weights: Vec<f64> =
        top.iter().filter(|h| h.reward(target) > F::zero()).map(|h| h.log_prob.as_f64().exp()).collect();
    entropy(&weights)
}

/// Tab-separated `id rank probability reward program` lines.
pub fn dump_predictions<F: Scalar>(model: &Model<F>, examples: &[TrainingExample], beam: usize, k: usize) -> String {
    let mut out = String::new();
    for ex in examples {
        for (i, h) in top_k(model, ex.input(), beam, k).iter().enumerate() {
            let _ = writeln!(
                out,
                "{}\t{}\t{:.6e}\t{}\t{}",
                ex.id,
                i + 1,
                h.log_prob.as_f64().exp(),
                h.reward(&ex.target),
                model.vocab.format_program(&h.tokens)
            );
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub max_rel_error: f64,
    pub pairs: usize,
    pub entries: usize,
    /// Location of the worst entry, `kind/pair/tensor[index]`.
    pub worst: String,
}

/// Relative error with a floor on the denominator.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Compares `grad_log_prob` with central differences on random
/// example/program pairs over all three domains.
pub fn gradcheck(seed: u64, pairs: usize, kinds: &[HistoryKind], dims: Dims, h: f64) -> GradcheckReport {
    let mut report = GradcheckReport { max_rel_error: 0.0, pairs: 0, entries: 0, worst: String::new() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for &kind in kinds {
        for p in 0..pairs {
            let domain = Domain::ALL[p % Domain::ALL.len()];
            let raw = generate_synthetic(domain, 1, rng.gen()).expect("synthetic example");
            let ex = crate::data::decompose(&raw[0]).pop().expect("non-empty example");
            let vocab = Vocabulary::new(domain);
            let params = Params::<f64>::init(rng.gen(), dims, vocab.len(), kind);
            let mut model = Model::new(vocab, WordVectors::random(rng.gen(), dims.word), params, crate::lang::DEFAULT_BUDGET);
            let input = ex.input();
            let program = sample_eps_greedy(&model, input, 1, 1.0, rng.gen()).remove(0).tokens;
            let (_, grads) = model.grad_log_prob(input, &program).expect("sampled program executes");
            let names: Vec<&'static str> = grads.tensors().iter().map(|(n, _)| *n).collect();
            for name in names {
                let len = model.params.tensor_mut(name).unwrap().data().len();
                for i in 0..len {
                    let orig = model.params.tensor_mut(name).unwrap().data()[i];
                    let mut at = |x: f64| {
                        model.params.tensor_mut(name).unwrap().data_mut()[i] = x;
                        model.program_log_prob(input, &program).unwrap()
                    };
                    let numeric = (at(orig + h) - at(orig - h)) / (2.0 * h);
                    model.params.tensor_mut(name).unwrap().data_mut()[i] = orig;
                    let analytic = grads.tensors().iter().find(|(n, _)| *n == name).unwrap().1.data()[i];
                    let err = relative_error(analytic, numeric);
                    report.entries += 1;
                    if err > report.max_rel_error {
                        report.max_rel_error = err;
                        report.worst = format!("{kind:?}/{p}/{name}[{i}]");
                    }
                }
            }
            report.pairs += 1;
        }
    }
    report
}
