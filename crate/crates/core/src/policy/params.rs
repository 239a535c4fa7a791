use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tensor::Matrix;
use crate::Scalar;

/// How the decoder summarizes execution history.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum HistoryKind {
    /// Embeddings of the 4 most recent tokens.
    Tokens,
    /// Embeddings of the (at most 3) values on the stack.
    Stack,
}

/// Number of recent tokens embedded by [`HistoryKind::Tokens`].
pub const HISTORY_TOKENS: usize = 4;
/// Stack slots embedded by [`HistoryKind::Stack`].
pub const STACK_SLOTS: usize = 3;

pub(crate) const VALUE_TYPES: usize = 4;
/// Integer embeddings cover -10..=10.
pub(crate) const NUMBER_RANGE: i32 = 10;
pub(crate) const COLOR_ROWS: usize = 8;
/// Position and length buckets 0..=10.
pub(crate) const BUCKETS: usize = 11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    /// Word vector width (fixed embeddings).
    pub word: usize,
    /// LSTM hidden size per direction.
    pub hidden: usize,
    /// Token and value embedding width.
    pub token: usize,
    /// Width of the query `q_t`.
    pub query: usize,
}

impl Default for Dims {
    fn default() -> Self {
        Dims { word: 50, hidden: 50, token: 50, query: 50 }
    }
}

impl Dims {
    /// Small sizes for gradient checks and quick tests.
    pub fn tiny() -> Self {
        Dims { word: 6, hidden: 5, token: 4, query: 6 }
    }

    pub fn history_width(&self, kind: HistoryKind) -> usize {
        match kind {
            HistoryKind::Tokens => HISTORY_TOKENS * self.token,
            HistoryKind::Stack => STACK_SLOTS * self.token,
        }
    }
}

/// Tables used by the stack-value embedder.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTables<F> {
    pub types: Matrix<F>,
    pub numbers: Matrix<F>,
    pub colors: Matrix<F>,
    pub positions: Matrix<F>,
    pub lengths: Matrix<F>,
    pub pad: Matrix<F>,
}

/// All learned tensors. The fixed word vectors live in
/// [`WordVectors`](super::WordVectors) and are not part of this set.
#[derive(Debug, Clone, PartialEq)]
pub struct Params<F> {
    pub kind: HistoryKind,
    pub dims: Dims,
    /// Φ_z, one row per vocabulary token.
    pub token_emb: Matrix<F>,
    /// Learned padding for the token history (Tokens only).
    pub token_pad: Option<Matrix<F>>,
    /// Value embedding tables (Stack only).
    pub values: Option<ValueTables<F>>,
    pub enc_fwd_w: Matrix<F>,
    pub enc_fwd_b: Matrix<F>,
    pub enc_bwd_w: Matrix<F>,
    pub enc_bwd_b: Matrix<F>,
    /// W_q
    pub query_w: Matrix<F>,
    /// W_a
    pub attn_w: Matrix<F>,
    /// W_s
    pub out_w: Matrix<F>,
}

fn glorot<F: Scalar>(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix<F> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols).map(|_| F::of(rng.gen_range(-bound..=bound))).collect();
    Matrix::from_vec(rows, cols, data)
}

impl<F: Scalar> Params<F> {
    /// Glorot-uniform matrices and zero biases, reproducible from `seed`.
    pub fn init(seed: u64, dims: Dims, vocab_size: usize, kind: HistoryKind) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = dims.hidden;
        let d = dims.token;
        let token_emb = glorot(&mut rng, vocab_size, d);
        let token_pad = (kind == HistoryKind::Tokens).then(|| glorot(&mut rng, 1, d));
        let values = (kind == HistoryKind::Stack).then(|| ValueTables {
            types: glorot(&mut rng, VALUE_TYPES, d),
            numbers: glorot(&mut rng, 2 * NUMBER_RANGE as usize + 1, d),
            colors: glorot(&mut rng, COLOR_ROWS, d),
            positions: glorot(&mut rng, BUCKETS, d),
            lengths: glorot(&mut rng, BUCKETS, d),
            pad: glorot(&mut rng, 1, d),
        });
        Params {
            kind,
            dims,
            token_emb,
            token_pad,
            values,
            enc_fwd_w: glorot(&mut rng, 4 * h, dims.word + h),
            enc_fwd_b: Matrix::zeros(4 * h, 1),
            enc_bwd_w: glorot(&mut rng, 4 * h, dims.word + h),
            enc_bwd_b: Matrix::zeros(4 * h, 1),
            query_w: glorot(&mut rng, dims.query, 2 * h + dims.history_width(kind)),
            attn_w: glorot(&mut rng, dims.query, 2 * h),
            out_w: glorot(&mut rng, d, dims.query + 2 * h),
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.token_emb.rows()
    }

    /// Same structure, all zeros. Used as a gradient accumulator.
    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.for_each_mut(|_, m| m.fill_zero());
        z
    }

    /// Named tensors in checkpoint order.
    pub fn tensors(&self) -> Vec<(&'static str, &Matrix<F>)> {
        let mut out = vec![("token_emb", &self.token_emb)];
        if let Some(pad) = &self.token_pad {
            out.push(("token_pad", pad));
        }
        if let Some(v) = &self.values {
            out.extend([
                ("value_types", &v.types),
                ("value_numbers", &v.numbers),
                ("value_colors", &v.colors),
                ("value_positions", &v.positions),
                ("value_lengths", &v.lengths),
                ("stack_pad", &v.pad),
            ]);
        }
        out.extend([
            ("enc_fwd_w", &self.enc_fwd_w),
            ("enc_fwd_b", &self.enc_fwd_b),
            ("enc_bwd_w", &self.enc_bwd_w),
            ("enc_bwd_b", &self.enc_bwd_b),
            ("query_w", &self.query_w),
            ("attn_w", &self.attn_w),
            ("out_w", &self.out_w),
        ]);
        out
    }

    pub fn for_each_mut(&mut self, mut f: impl FnMut(&'static str, &mut Matrix<F>)) {
        f("token_emb", &mut self.token_emb);
        if let Some(pad) = &mut self.token_pad {
            f("token_pad", pad);
        }
        if let Some(v) = &mut self.values {
            f("value_types", &mut v.types);
            f("value_numbers", &mut v.numbers);
            f("value_colors", &mut v.colors);
            f("value_positions", &mut v.positions);
            f("value_lengths", &mut v.lengths);
            f("stack_pad", &mut v.pad);
        }
        f("enc_fwd_w", &mut self.enc_fwd_w);
        f("enc_fwd_b", &mut self.enc_fwd_b);
        f("enc_bwd_w", &mut self.enc_bwd_w);
        f("enc_bwd_b", &mut self.enc_bwd_b);
        f("query_w", &mut self.query_w);
        f("attn_w", &mut self.attn_w);
        f("out_w", &mut self.out_w);
    }

    pub fn tensor_mut(&mut self, name: &str) -> Option<&mut Matrix<F>> {
        match name {
            "token_emb" => Some(&mut self.token_emb),
            "token_pad" => self.token_pad.as_mut(),
            "value_types" => self.values.as_mut().map(|v| &mut v.types),
            "value_numbers" => self.values.as_mut().map(|v| &mut v.numbers),
            "value_colors" => self.values.as_mut().map(|v| &mut v.colors),
            "value_positions" => self.values.as_mut().map(|v| &mut v.positions),
            "value_lengths" => self.values.as_mut().map(|v| &mut v.lengths),
            "stack_pad" => self.values.as_mut().map(|v| &mut v.pad),
            "enc_fwd_w" => Some(&mut self.enc_fwd_w),
            "enc_fwd_b" => Some(&mut self.enc_fwd_b),
            "enc_bwd_w" => Some(&mut self.enc_bwd_w),
            "enc_bwd_b" => Some(&mut self.enc_bwd_b),
            "query_w" => Some(&mut self.query_w),
            "attn_w" => Some(&mut self.attn_w),
            "out_w" => Some(&mut self.out_w),
            _ => None,
        }
    }

    /// `self += scale · other`
    pub fn add_scaled(&mut self, other: &Params<F>, scale: F) {
        let others: Vec<&Matrix<F>> = other.tensors().into_iter().map(|(_, m)| m).collect();
        let mut i = 0;
        self.for_each_mut(|_, m| {
            m.add_scaled(others[i], scale);
            i += 1;
        });
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, m)| m.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.tensors().iter().all(|(_, m)| m.data().iter().all(|x| *x == F::zero()))
    }

    pub fn num_values(&self) -> usize {
        self.tensors().iter().map(|(_, m)| m.data().len()).sum()
    }
}
