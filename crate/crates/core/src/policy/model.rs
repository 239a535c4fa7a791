//! Forward evaluation and exact reverse-mode gradients of the program policy.
//!
//! The utterance under the pointer is encoded by a bidirectional LSTM. Each
//! decoding step forms a query from the utterance summary and a history
//! embedding, attends over the encoder states, and scores every vocabulary
//! token against the token embeddings.

use super::params::{HistoryKind, Params, HISTORY_TOKENS, NUMBER_RANGE, STACK_SLOTS, BUCKETS};
use super::tensor::{axpy, dot, log_softmax, sigmoid, Matrix};
use super::words::WordVectors;
use crate::lang::{ExecError, MachineState, Object, TokenId, Value, Vocabulary};
use crate::worlds::{Color, WorldState};
use crate::Scalar;

/// What the model conditions on: the utterances and the start world.
#[derive(Debug, Clone, Copy)]
pub struct Input<'a> {
    pub utterances: &'a [Vec<String>],
    pub start: &'a WorldState,
}

/// A policy: vocabulary, fixed word vectors, learned parameters and the
/// per-utterance token budget used when replaying programs.
#[derive(Debug, Clone)]
pub struct Model<F> {
    pub vocab: Vocabulary,
    pub words: WordVectors<F>,
    pub params: Params<F>,
    pub budget: usize,
}

/// Per-step cache of one LSTM direction, in processing order.
#[derive(Debug, Clone)]
pub struct LstmTrace<F> {
    concat: Vec<Vec<F>>,
    gates: Vec<[Vec<F>; 4]>,
    c_prev: Vec<Vec<F>>,
    tanh_c: Vec<Vec<F>>,
    h: Vec<Vec<F>>,
}

/// Encoder output for one utterance.
#[derive(Debug, Clone)]
pub struct Encoding<F> {
    fwd: LstmTrace<F>,
    bwd: LstmTrace<F>,
    /// `h_i = [h_i^F; h_i^B]` for each word position.
    pub states: Vec<Vec<F>>,
    /// `e_m = [h_n^F; h_1^B]`.
    pub summary: Vec<F>,
}

/// Encodings of every utterance of one input.
#[derive(Debug, Clone)]
pub struct Prepared<F> {
    pub encodings: Vec<Encoding<F>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Table {
    TokenEmb,
    TokenPad,
    ValueType,
    ValueNumber,
    ValueColor,
    ValuePosition,
    ValueLength,
    StackPad,
}

type Term<F> = (Table, usize, F);

/// A history embedding together with the table rows it was built from.
#[derive(Debug, Clone)]
pub struct History<F> {
    pub vector: Vec<F>,
    slots: Vec<Vec<Term<F>>>,
}

/// Forward cache of one decoding step.
#[derive(Debug, Clone)]
pub struct StepTrace<F> {
    input: Vec<F>,
    pre: Vec<F>,
    q: Vec<F>,
    r: Vec<F>,
    alpha: Vec<F>,
    qc: Vec<F>,
    out: Vec<F>,
    /// Log-probabilities over the whole vocabulary.
    pub log_probs: Vec<F>,
}

fn table_of<F>(params: &Params<F>, table: Table) -> &Matrix<F> {
    let values = || params.values.as_ref().expect("stack tables present");
    match table {
        Table::TokenEmb => &params.token_emb,
        Table::TokenPad => params.token_pad.as_ref().expect("token pad present"),
        Table::ValueType => &values().types,
        Table::ValueNumber => &values().numbers,
        Table::ValueColor => &values().colors,
        Table::ValuePosition => &values().positions,
        Table::ValueLength => &values().lengths,
        Table::StackPad => &values().pad,
    }
}

fn table_of_mut<F>(params: &mut Params<F>, table: Table) -> &mut Matrix<F> {
    match table {
        Table::TokenEmb => &mut params.token_emb,
        Table::TokenPad => params.token_pad.as_mut().expect("token pad present"),
        _ => {
            let v = params.values.as_mut().expect("stack tables present");
            match table {
                Table::ValueType => &mut v.types,
                Table::ValueNumber => &mut v.numbers,
                Table::ValueColor => &mut v.colors,
                Table::ValuePosition => &mut v.positions,
                Table::ValueLength => &mut v.lengths,
                Table::StackPad => &mut v.pad,
                _ => unreachable!(),
            }
        }
    }
}

fn bucket(n: usize) -> usize {
    n.min(BUCKETS - 1)
}

fn lstm_forward<F: Scalar>(w: &Matrix<F>, b: &Matrix<F>, xs: &[&Vec<F>], hidden: usize) -> LstmTrace<F> {
    let mut trace = LstmTrace {
        concat: Vec::with_capacity(xs.len()),
        gates: Vec::with_capacity(xs.len()),
        c_prev: Vec::with_capacity(xs.len()),
        tanh_c: Vec::with_capacity(xs.len()),
        h: Vec::with_capacity(xs.len()),
    };
    let mut h = vec![F::zero(); hidden];
    let mut c = vec![F::zero(); hidden];
    for x in xs {
        let mut concat = Vec::with_capacity(x.len() + hidden);
        concat.extend_from_slice(x);
        concat.extend_from_slice(&h);
        let mut z = w.matvec(&concat);
        axpy(&mut z, F::one(), b.data());
        let gate = |k: usize, f: fn(F) -> F| -> Vec<F> { z[k * hidden..(k + 1) * hidden].iter().map(|&v| f(v)).collect() };
        let i = gate(0, sigmoid);
        let f = gate(1, sigmoid);
        let g = gate(2, F::tanh);
        let o = gate(3, sigmoid);
        let c_next: Vec<F> = (0..hidden).map(|k| f[k] * c[k] + i[k] * g[k]).collect();
        let tanh_c: Vec<F> = c_next.iter().map(|v| v.tanh()).collect();
        h = (0..hidden).map(|k| o[k] * tanh_c[k]).collect();
        trace.concat.push(concat);
        trace.c_prev.push(std::mem::replace(&mut c, c_next));
        trace.gates.push([i, f, g, o]);
        trace.tanh_c.push(tanh_c);
        trace.h.push(h.clone());
    }
    trace
}

/// Backpropagates external gradients on each step's output `h` (processing order).
fn lstm_backward<F: Scalar>(
    w: &Matrix<F>,
    trace: &LstmTrace<F>,
    dh_ext: &[Vec<F>],
    hidden: usize,
    gw: &mut Matrix<F>,
    gb: &mut Matrix<F>,
) {
    let word = w.cols() - hidden;
    let mut dh_next = vec![F::zero(); hidden];
    let mut dc_next = vec![F::zero(); hidden];
    let one = F::one();
    for s in (0..trace.h.len()).rev() {
        let [i, f, g, o] = &trace.gates[s];
        let tanh_c = &trace.tanh_c[s];
        let c_prev = &trace.c_prev[s];
        let mut dz = vec![F::zero(); 4 * hidden];
        for k in 0..hidden {
            let dh = dh_ext[s][k] + dh_next[k];
            let d_o = dh * tanh_c[k];
            let dc = dh * o[k] * (one - tanh_c[k] * tanh_c[k]) + dc_next[k];
            let di = dc * g[k];
            let dg = dc * i[k];
            let df = dc * c_prev[k];
            dc_next[k] = dc * f[k];
            dz[k] = di * i[k] * (one - i[k]);
            dz[hidden + k] = df * f[k] * (one - f[k]);
            dz[2 * hidden + k] = dg * (one - g[k] * g[k]);
            dz[3 * hidden + k] = d_o * o[k] * (one - o[k]);
        }
        gw.add_outer(&dz, &trace.concat[s]);
        axpy(gb.data_mut(), one, &dz);
        let dconcat = w.matvec_t(&dz);
        dh_next.copy_from_slice(&dconcat[word..]);
    }
}

impl<F: Scalar> Model<F> {
    pub fn new(vocab: Vocabulary, words: WordVectors<F>, params: Params<F>, budget: usize) -> Self {
        assert_eq!(params.vocab_size(), vocab.len(), "parameter table does not match vocabulary");
        assert_eq!(params.dims.word, words.dim(), "word vector width does not match dims");
        Model { vocab, words, params, budget }
    }

    pub fn kind(&self) -> HistoryKind {
        self.params.kind
    }

    pub fn hidden(&self) -> usize {
        self.params.dims.hidden
    }

    pub fn encode(&self, utterance: &[String]) -> Encoding<F> {
        let h = self.hidden();
        let xs = self.words.embed_utterance(utterance);
        let fwd_in: Vec<&Vec<F>> = xs.iter().collect();
        let bwd_in: Vec<&Vec<F>> = xs.iter().rev().collect();
        let p = &self.params;
        let fwd = lstm_forward(&p.enc_fwd_w, &p.enc_fwd_b, &fwd_in, h);
        let bwd = lstm_forward(&p.enc_bwd_w, &p.enc_bwd_b, &bwd_in, h);
        let n = xs.len();
        let states = (0..n)
            .map(|i| {
                let mut s = fwd.h[i].clone();
                s.extend_from_slice(&bwd.h[n - 1 - i]);
                s
            })
            .collect();
        let mut summary = fwd.h[n - 1].clone();
        summary.extend_from_slice(&bwd.h[n - 1]);
        Encoding { fwd, bwd, states, summary }
    }

    pub fn prepare(&self, input: Input<'_>) -> Prepared<F> {
        Prepared { encodings: input.utterances.iter().map(|u| self.encode(u)).collect() }
    }

    fn history_from_slots(&self, slots: Vec<Vec<Term<F>>>) -> History<F> {
        let d = self.params.dims.token;
        let mut vector = vec![F::zero(); slots.len() * d];
        for (s, terms) in slots.iter().enumerate() {
            for &(table, row, weight) in terms {
                axpy(&mut vector[s * d..(s + 1) * d], weight, table_of(&self.params, table).row(row));
            }
        }
        History { vector, slots }
    }

    /// Embeddings of the last 4 tokens, left-padded.
    pub fn history_tokens(&self, prefix: &[TokenId]) -> History<F> {
        let start = prefix.len().saturating_sub(HISTORY_TOKENS);
        let recent = &prefix[start..];
        let pad = HISTORY_TOKENS - recent.len();
        let slots = (0..pad)
            .map(|_| vec![(Table::TokenPad, 0, F::one())])
            .chain(recent.iter().map(|&t| vec![(Table::TokenEmb, t, F::one())]))
            .collect();
        self.history_from_slots(slots)
    }

    /// Embeddings of the stack values bottom to top, padded to 3 slots.
    pub fn history_stack(&self, state: &MachineState) -> History<F> {
        let stack = state.stack();
        let slots = (0..STACK_SLOTS)
            .map(|i| match stack.get(i) {
                Some(v) => self.value_terms(v, state.world()),
                None => vec![(Table::StackPad, 0, F::one())],
            })
            .collect();
        self.history_from_slots(slots)
    }

    pub fn history(&self, prefix: &[TokenId], state: &MachineState) -> History<F> {
        match self.kind() {
            HistoryKind::Tokens => self.history_tokens(prefix),
            HistoryKind::Stack => self.history_stack(state),
        }
    }

    /// Type tag plus content. A bare object embeds exactly like a one-element list.
    fn value_terms(&self, value: &Value, world: &WorldState) -> Vec<Term<F>> {
        let one = F::one();
        match value {
            Value::Number(n) => {
                let row = (n.clamp(&-NUMBER_RANGE, &NUMBER_RANGE) + NUMBER_RANGE) as usize;
                vec![(Table::ValueType, 0, one), (Table::ValueNumber, row, one)]
            }
            Value::Fraction => vec![(Table::ValueType, 1, one)],
            Value::Color(c) => vec![(Table::ValueType, 2, one), (Table::ValueColor, c.index(), one)],
            Value::Object(o) => self.list_terms(std::slice::from_ref(o), world),
            Value::List(list) => self.list_terms(list, world),
        }
    }

    fn list_terms(&self, objects: &[Object], world: &WorldState) -> Vec<Term<F>> {
        let mut terms = vec![(Table::ValueType, 3, F::one()), (Table::ValueLength, bucket(objects.len()), F::one())];
        for o in objects {
            let attrs = object_attributes(o, world);
            let w = F::one() / F::of((objects.len() * attrs.len()) as f64);
            terms.extend(attrs.into_iter().map(|(t, r)| (t, r, w)));
        }
        terms
    }

    /// The embedding of one stack value in `world`.
    pub fn embed_value(&self, value: &Value, world: &WorldState) -> Vec<F> {
        self.history_from_slots(vec![self.value_terms(value, world)]).vector
    }

    pub fn decode_step(&self, enc: &Encoding<F>, history: &[F]) -> StepTrace<F> {
        let p = &self.params;
        let mut input = enc.summary.clone();
        input.extend_from_slice(history);
        let pre = p.query_w.matvec(&input);
        let q: Vec<F> = pre.iter().map(|&v| v.max(F::zero())).collect();
        let r = p.attn_w.matvec_t(&q);
        let scores: Vec<F> = enc.states.iter().map(|h| dot(&r, h)).collect();
        let alpha: Vec<F> = log_softmax(&scores).into_iter().map(F::exp).collect();
        let mut ctx = vec![F::zero(); enc.summary.len()];
        for (a, h) in alpha.iter().zip(&enc.states) {
            axpy(&mut ctx, *a, h);
        }
        let mut qc = q.clone();
        qc.extend_from_slice(&ctx);
        let out = p.out_w.matvec(&qc);
        let logits = p.token_emb.matvec(&out);
        let log_probs = log_softmax(&logits);
        StepTrace { input, pre, q, r, alpha, qc, out, log_probs }
    }

    /// Log-probabilities of the next token given a prefix and its machine state.
    pub fn next_log_probs(&self, prepared: &Prepared<F>, prefix: &[TokenId], state: &MachineState) -> Vec<F> {
        let enc = &prepared.encodings[state.pointer() - 1];
        let hist = self.history(prefix, state);
        self.decode_step(enc, &hist.vector).log_probs
    }

    /// Distribution over the whole vocabulary (no executability masking).
    pub fn distribution(&self, prepared: &Prepared<F>, prefix: &[TokenId], state: &MachineState) -> Vec<F> {
        self.next_log_probs(prepared, prefix, state).into_iter().map(F::exp).collect()
    }

    pub fn start_state(&self, input: Input<'_>) -> MachineState {
        MachineState::new(input.start.clone(), input.utterances.len(), self.budget)
    }

    /// `log p(z | x)`, summing per-token log-probabilities along the execution.
    pub fn program_log_prob(&self, input: Input<'_>, program: &[TokenId]) -> Result<F, ExecError> {
        let prepared = self.prepare(input);
        self.program_log_prob_prepared(&prepared, input, program)
    }

    pub fn program_log_prob_prepared(
        &self,
        prepared: &Prepared<F>,
        input: Input<'_>,
        program: &[TokenId],
    ) -> Result<F, ExecError> {
        let mut state = self.start_state(input);
        let mut total = F::zero();
        for (t, &tok) in program.iter().enumerate() {
            if state.is_terminal() {
                return Err(ExecError::Terminated);
            }
            total += self.next_log_probs(prepared, &program[..t], &state)[tok];
            state = state.step(self.vocab.token(tok))?;
        }
        Ok(total)
    }

    /// `log p(z | x)` and its gradient with respect to every learned tensor.
    pub fn grad_log_prob(&self, input: Input<'_>, program: &[TokenId]) -> Result<(F, Params<F>), ExecError> {
        let mut grads = self.params.zeros_like();
        let lp = self.accumulate_grad(input, program, F::one(), &mut grads)?;
        Ok((lp, grads))
    }

    /// Adds `scale · ∇ log p(z | x)` into `grads`; returns `log p(z | x)`.
    pub fn accumulate_grad(
        &self,
        input: Input<'_>,
        program: &[TokenId],
        scale: F,
        grads: &mut Params<F>,
    ) -> Result<F, ExecError> {
        let prepared = self.prepare(input);
        let h2 = 2 * self.hidden();
        // Gradients w.r.t. encoder states and summaries, per utterance.
        let mut d_states: Vec<Vec<Vec<F>>> =
            prepared.encodings.iter().map(|e| vec![vec![F::zero(); h2]; e.states.len()]).collect();
        let mut d_summary: Vec<Vec<F>> = vec![vec![F::zero(); h2]; prepared.encodings.len()];
        let mut touched = vec![false; prepared.encodings.len()];

        let mut state = self.start_state(input);
        let mut total = F::zero();
        for (t, &tok) in program.iter().enumerate() {
            if state.is_terminal() {
                return Err(ExecError::Terminated);
            }
            let m = state.pointer() - 1;
            let enc = &prepared.encodings[m];
            let hist = self.history(&program[..t], &state);
            let trace = self.decode_step(enc, &hist.vector);
            total += trace.log_probs[tok];
            self.backward_step(enc, &hist, &trace, tok, scale, grads, &mut d_states[m], &mut d_summary[m]);
            touched[m] = true;
            state = state.step(self.vocab.token(tok))?;
        }

        let h = self.hidden();
        for (m, enc) in prepared.encodings.iter().enumerate() {
            if !touched[m] {
                continue;
            }
            let n = enc.states.len();
            let mut fwd_ext: Vec<Vec<F>> = d_states[m].iter().map(|d| d[..h].to_vec()).collect();
            axpy(&mut fwd_ext[n - 1], F::one(), &d_summary[m][..h]);
            // Backward direction processes positions n-1, …, 0.
            let mut bwd_ext: Vec<Vec<F>> = d_states[m].iter().rev().map(|d| d[h..].to_vec()).collect();
            axpy(&mut bwd_ext[n - 1], F::one(), &d_summary[m][h..]);
            let p = &self.params;
            lstm_backward(&p.enc_fwd_w, &enc.fwd, &fwd_ext, h, &mut grads.enc_fwd_w, &mut grads.enc_fwd_b);
            lstm_backward(&p.enc_bwd_w, &enc.bwd, &bwd_ext, h, &mut grads.enc_bwd_w, &mut grads.enc_bwd_b);
        }
        Ok(total)
    }

    #[allow(clippy::too_many_arguments)]
    fn backward_step(
        &self,
        enc: &Encoding<F>,
        hist: &History<F>,
        trace: &StepTrace<F>,
        target: TokenId,
        scale: F,
        grads: &mut Params<F>,
        d_states: &mut [Vec<F>],
        d_summary: &mut [F],
    ) {
        let p = &self.params;
        let dq_len = trace.q.len();

        let g_logits: Vec<F> = trace
            .log_probs
            .iter()
            .enumerate()
            .map(|(k, &lp)| scale * ((if k == target { F::one() } else { F::zero() }) - lp.exp()))
            .collect();
        grads.token_emb.add_outer(&g_logits, &trace.out);
        let d_out = p.token_emb.matvec_t(&g_logits);
        grads.out_w.add_outer(&d_out, &trace.qc);
        let d_qc = p.out_w.matvec_t(&d_out);
        let mut dq = d_qc[..dq_len].to_vec();
        let d_ctx = &d_qc[dq_len..];

        let d_alpha: Vec<F> = enc.states.iter().map(|h| dot(d_ctx, h)).collect();
        let mean = dot(&trace.alpha, &d_alpha);
        let mut dr = vec![F::zero(); trace.r.len()];
        for (i, h) in enc.states.iter().enumerate() {
            let a = trace.alpha[i];
            let d_score = a * (d_alpha[i] - mean);
            axpy(&mut d_states[i], a, d_ctx);
            axpy(&mut d_states[i], d_score, &trace.r);
            axpy(&mut dr, d_score, h);
        }
        grads.attn_w.add_outer(&trace.q, &dr);
        axpy(&mut dq, F::one(), &p.attn_w.matvec(&dr));

        let d_pre: Vec<F> =
            dq.iter().zip(&trace.pre).map(|(&g, &x)| if x > F::zero() { g } else { F::zero() }).collect();
        grads.query_w.add_outer(&d_pre, &trace.input);
        let d_input = p.query_w.matvec_t(&d_pre);
        let (d_e, d_hist) = d_input.split_at(d_summary.len());
        axpy(d_summary, F::one(), d_e);

        let d = p.dims.token;
        for (s, terms) in hist.slots.iter().enumerate() {
            let g = &d_hist[s * d..(s + 1) * d];
            for &(table, row, weight) in terms {
                axpy(table_of_mut(grads, table).row_mut(row), weight, g);
            }
        }
    }
}

fn object_attributes(o: &Object, world: &WorldState) -> Vec<(Table, usize)> {
    match (o, world) {
        (Object::Beaker(i), WorldState::Alchemy(w)) => {
            let units = w.beaker(*i).unwrap_or(&[]);
            let mut attrs = vec![(Table::ValuePosition, bucket(i + 1)), (Table::ValueLength, bucket(units.len()))];
            if let Some(top) = units.last() {
                attrs.push((Table::ValueColor, top.index()));
            }
            attrs
        }
        (Object::Tangram(piece), WorldState::Tangrams(w)) => {
            vec![(Table::ValuePosition, w.position_of(*piece).map_or(0, |p| bucket(p + 1)))]
        }
        (Object::Person(r), _) => {
            let slot = r.resolve(world).unwrap_or(r.slot);
            vec![
                (Table::ValueColor, r.person.shirt.index()),
                (Table::ValueColor, r.person.hat.index()),
                (Table::ValuePosition, bucket(slot + 1)),
            ]
        }
        (Object::Beaker(i), _) => vec![(Table::ValuePosition, bucket(i + 1))],
        (Object::Tangram(_), _) => vec![(Table::ValuePosition, 0)],
    }
}

#[allow(dead_code)]
fn _color_rows_cover_all_colors() {
    const _: () = assert!(Color::ALL.len() == super::params::COLOR_ROWS);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::parse_world;
    use crate::lang::{Token, DEFAULT_BUDGET};
    use crate::policy::params::Dims;
    use crate::worlds::Domain;

    fn model(kind: HistoryKind, domain: Domain, seed: u64) -> Model<f64> {
        let vocab = Vocabulary::new(domain);
        let dims = Dims::tiny();
        let params = Params::init(seed, dims, vocab.len(), kind);
        Model::new(vocab, WordVectors::random(seed + 100, dims.word), params, DEFAULT_BUDGET)
    }

    fn words(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    #[test]
    fn single_word_summary() {
        let m = model(HistoryKind::Tokens, Domain::Scene, 1);
        let enc = m.encode(&words("leave"));
        assert_eq!(enc.summary, enc.states[0]);
        let again = m.encode(&words("leave"));
        assert_eq!(enc.summary, again.summary);
    }

    #[test]
    fn distribution_is_normalized() {
        let m = model(HistoryKind::Tokens, Domain::Scene, 2);
        let enc = m.encode(&words("the man in red leaves"));
        let hist = m.history_tokens(&[]);
        let p: f64 = m.decode_step(&enc, &hist.vector).log_probs.iter().map(|x| x.exp()).sum();
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_output_weights_give_uniform() {
        let mut m = model(HistoryKind::Tokens, Domain::Alchemy, 3);
        m.params.out_w.fill_zero();
        let enc = m.encode(&words("mix it"));
        let lp = m.decode_step(&enc, &m.history_tokens(&[1, 2]).vector).log_probs;
        let u = -(m.vocab.len() as f64).ln();
        assert!(lp.iter().all(|&x| (x - u).abs() < 1e-12));
    }

    #[test]
    fn single_word_attention_is_that_word() {
        let m = model(HistoryKind::Tokens, Domain::Alchemy, 4);
        let enc = m.encode(&words("mix"));
        let t = m.decode_step(&enc, &m.history_tokens(&[]).vector);
        assert_eq!(t.alpha, vec![1.0]);
        assert_eq!(&t.qc[t.q.len()..], enc.states[0].as_slice());
    }

    #[test]
    fn token_history_padding() {
        let m = model(HistoryKind::Tokens, Domain::Scene, 5);
        let d = m.params.dims.token;
        let pad = m.params.token_pad.as_ref().unwrap().row(0).to_vec();
        let empty = m.history_tokens(&[]).vector;
        assert_eq!(empty.len(), 4 * d);
        assert!(empty.chunks(d).all(|c| c == pad.as_slice()));
        let two = m.history_tokens(&[3, 7]).vector;
        assert_eq!(&two[..d], pad.as_slice());
        assert_eq!(&two[2 * d..3 * d], m.params.token_emb.row(3));
        assert_eq!(&two[3 * d..], m.params.token_emb.row(7));
        assert_eq!(m.history_tokens(&[1, 2, 3, 4, 5, 6]).vector.len(), 4 * d);
    }

    fn stack_state(m: &Model<f64>, world: &WorldState, text: &str) -> MachineState {
        let mut s = MachineState::new(world.clone(), 1, DEFAULT_BUDGET);
        for id in m.vocab.parse_program(text).unwrap() {
            s = s.step(m.vocab.token(id)).unwrap();
        }
        s
    }

    #[test]
    fn stack_history_padding_and_repeats() {
        let m = model(HistoryKind::Stack, Domain::Scene, 6);
        let d = m.params.dims.token;
        let w = parse_world(Domain::Scene, "2:rb 5:gy").unwrap();
        let empty = m.history_stack(&stack_state(&m, &w, ""));
        let pad = m.params.values.as_ref().unwrap().pad.row(0).to_vec();
        assert!(empty.vector.chunks(d).all(|c| c == pad.as_slice()));
        let twice = m.history_stack(&stack_state(&m, &w, "3 3")).vector;
        assert_eq!(twice[..d], twice[d..2 * d]);
    }

    #[test]
    fn stack_embedding_ignores_derivation() {
        let m = model(HistoryKind::Stack, Domain::Scene, 7);
        let w = parse_world(Domain::Scene, "2:rb 5:gy").unwrap();
        let by_shirt = m.history_stack(&stack_state(&m, &w, "red hasShirt")).vector;
        let by_index = m.history_stack(&stack_state(&m, &w, "allObjects 1 index")).vector;
        let by_hat = m.history_stack(&stack_state(&m, &w, "blue hasHat")).vector;
        assert_eq!(by_shirt, by_index);
        assert_eq!(by_shirt, by_hat);
    }

    #[test]
    fn list_embedding_is_a_permutation_invariant_mean() {
        let m = model(HistoryKind::Stack, Domain::Scene, 8);
        let w = parse_world(Domain::Scene, "2:rb 5:gy 7:rb").unwrap();
        let WorldState::Scene(s) = &w else { unreachable!() };
        let objs: Vec<Object> = s
            .people()
            .map(|(slot, person)| Object::Person(crate::lang::PersonRef { slot, person }))
            .collect();
        let fwd = m.embed_value(&Value::List(objs.clone()), &w);
        let rev = m.embed_value(&Value::List(objs.iter().rev().copied().collect()), &w);
        for (a, b) in fwd.iter().zip(&rev) {
            assert!((a - b).abs() < 1e-15);
        }
        let single = m.embed_value(&Value::List(vec![objs[0]]), &w);
        assert_eq!(single, m.embed_value(&Value::Object(objs[0]), &w));
    }

    #[test]
    fn identical_people_embed_identically() {
        let m = model(HistoryKind::Stack, Domain::Scene, 9);
        let w = parse_world(Domain::Scene, "3:rb 3:rb").err();
        assert!(w.is_some());
        let world = parse_world(Domain::Scene, "2:rb 5:gy").unwrap();
        let a = m.embed_value(&Value::Color(Color::Red), &world);
        let b = m.embed_value(&Value::Color(Color::Red), &world);
        assert_eq!(a, b);
    }

    #[test]
    fn log_prob_decreases_with_length() {
        let m = model(HistoryKind::Tokens, Domain::Tangrams, 10);
        let w = parse_world(Domain::Tangrams, "1:0 2:1 3:2").unwrap();
        let u = vec![words("remove the first figure")];
        let input = Input { utterances: &u, start: &w };
        let p = m.vocab.parse_program("allObjects 1 index remove").unwrap();
        let mut prev = 0.0;
        for t in 1..=p.len() {
            let lp = m.program_log_prob(input, &p[..t]).unwrap();
            assert!(lp < prev);
            prev = lp;
        }
        let bad = [m.vocab.id(Token::Action(crate::lang::ActionKind::Remove)).unwrap()];
        assert!(m.program_log_prob(input, &bad).is_err());
    }
}
