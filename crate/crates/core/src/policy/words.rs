use std::collections::HashMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::Scalar;

#[derive(Debug, Error)]
pub enum WordVectorError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: expected {expected} components, found {found}")]
    DimensionMismatch { line: usize, expected: usize, found: usize },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// Fixed (never trained) word embeddings with an UNK fallback.
#[derive(Debug, Clone)]
pub struct WordVectors<F> {
    dim: usize,
    table: HashMap<String, Vec<F>>,
    unk: Vec<F>,
    random_seed: Option<u64>,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl<F: Scalar> WordVectors<F> {
    /// Parses `word v1 … vd` lines. UNK is the mean of all loaded vectors.
    pub fn parse(text: &str, dim: usize) -> Result<Self, WordVectorError> {
        let mut table = HashMap::new();
        let mut sum = vec![0.0f64; dim];
        for (n, line) in text.lines().enumerate() {
            let mut parts = line.split_whitespace();
            let Some(word) = parts.next() else { continue };
            let values: Vec<f64> = parts
                .map(|p| p.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| WordVectorError::Parse { line: n + 1, message: e.to_string() })?;
            if values.len() != dim {
                return Err(WordVectorError::DimensionMismatch { line: n + 1, expected: dim, found: values.len() });
            }
            sum.iter_mut().zip(&values).for_each(|(s, v)| *s += v);
            table.insert(word.to_owned(), values.into_iter().map(F::of).collect());
        }
        let count = table.len().max(1) as f64;
        let unk = sum.into_iter().map(|s| F::of(s / count)).collect();
        Ok(WordVectors { dim, table, unk, random_seed: None })
    }

    pub fn load(path: &Path, dim: usize) -> Result<Self, WordVectorError> {
        Self::parse(&std::fs::read_to_string(path)?, dim)
    }

    /// Seeded random vectors, derived per word so no vocabulary is needed up front.
    pub fn random(seed: u64, dim: usize) -> Self {
        let mut w = WordVectors { dim, table: HashMap::new(), unk: Vec::new(), random_seed: Some(seed) };
        w.unk = w.random_vector("<unk>");
        w
    }

    fn random_vector(&self, word: &str) -> Vec<F> {
        let seed = self.random_seed.expect("random mode") ^ fnv1a(word.as_bytes());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound = (3.0 / self.dim as f64).sqrt();
        (0..self.dim).map(|_| F::of(rng.gen_range(-bound..=bound))).collect()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn unk(&self) -> &[F] {
        &self.unk
    }

    pub fn contains(&self, word: &str) -> bool {
        self.random_seed.is_some() || self.table.contains_key(word)
    }

    pub fn lookup(&self, word: &str) -> Vec<F> {
        match self.table.get(word) {
            Some(v) => v.clone(),
            None if self.random_seed.is_some() => self.random_vector(word),
            None => self.unk.clone(),
        }
    }

    /// Vectors for an utterance; an empty utterance becomes a single UNK.
    pub fn embed_utterance(&self, words: &[String]) -> Vec<Vec<F>> {
        if words.is_empty() {
            return vec![self.unk.clone()];
        }
        words.iter().map(|w| self.lookup(w)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_and_unknown_words() {
        let w = WordVectors::<f64>::parse("red 1 2\nblue 3 4\n", 2).unwrap();
        assert_eq!(w.lookup("red"), vec![1.0, 2.0]);
        assert_eq!(w.lookup("zebra"), vec![2.0, 3.0]);
        assert_eq!(w.embed_utterance(&[]), vec![vec![2.0, 3.0]]);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let err = WordVectors::<f64>::parse("red 1 2\nblue 3\n", 2).unwrap_err();
        assert!(matches!(err, WordVectorError::DimensionMismatch { line: 2, expected: 2, found: 1 }));
        assert!(matches!(WordVectors::<f64>::parse("red x 2", 2), Err(WordVectorError::Parse { .. })));
    }

    #[test]
    fn random_mode_is_deterministic() {
        let a = WordVectors::<f64>::random(5, 8);
        let b = WordVectors::<f64>::random(5, 8);
        let c = WordVectors::<f64>::random(6, 8);
        assert_eq!(a.lookup("beaker"), b.lookup("beaker"));
        assert_ne!(a.lookup("beaker"), c.lookup("beaker"));
        assert_ne!(a.lookup("beaker"), a.lookup("pour"));
    }
}
