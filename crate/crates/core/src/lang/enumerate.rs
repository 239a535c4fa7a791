//! Exhaustive depth-first enumeration of executable programs.

use super::machine::MachineState;
use super::token::{TokenId, Vocabulary};
use crate::worlds::WorldState;

/// Streams every complete program for `utterances` actions with at most
/// `budget` tokens per utterance, in token-table order.
pub struct ProgramEnumerator<'a> {
    vocab: &'a Vocabulary,
    // Each frame: state, program prefix, next token id to try.
    frames: Vec<(MachineState, usize)>,
    prefix: Vec<TokenId>,
    visited: u64,
    node_cap: Option<u64>,
    exhausted_budget: bool,
}

impl<'a> ProgramEnumerator<'a> {
    pub fn new(vocab: &'a Vocabulary, start: &WorldState, utterances: usize, budget: usize) -> Self {
        let root = MachineState::new(start.clone(), utterances, budget);
        ProgramEnumerator {
            vocab,
            frames: vec![(root, 0)],
            prefix: Vec::new(),
            visited: 0,
            node_cap: None,
            exhausted_budget: false,
        }
    }

    /// Stop after visiting this many search nodes.
    pub fn with_node_cap(mut self, cap: u64) -> Self {
        self.node_cap = Some(cap);
        self
    }

    /// Search nodes (executable prefixes) visited so far.
    pub fn visited(&self) -> u64 {
        self.visited
    }

    /// True when enumeration stopped at the node cap rather than completing.
    pub fn hit_node_cap(&self) -> bool {
        self.exhausted_budget
    }
}

impl Iterator for ProgramEnumerator<'_> {
    type Item = (Vec<TokenId>, WorldState);

    fn next(&mut self) -> Option<Self::Item> {
        // The root frame is emitted as a program only when it is already terminal.
        if self.visited == 0 {
            self.visited = 1;
            if self.frames[0].0.is_terminal() {
                let world = self.frames[0].0.world().clone();
                self.frames.clear();
                return Some((Vec::new(), world));
            }
        }
        loop {
            let (state, next_id) = self.frames.last_mut()?;
            if *next_id >= self.vocab.len() {
                self.frames.pop();
                self.prefix.pop();
                continue;
            }
            let id = *next_id;
            *next_id += 1;
            let Ok(child) = state.step(self.vocab.token(id)) else { continue };
            if let Some(cap) = self.node_cap {
                if self.visited >= cap {
                    self.exhausted_budget = true;
                    self.frames.clear();
                    return None;
                }
            }
            self.visited += 1;
            if child.is_terminal() {
                let mut program = self.prefix.clone();
                program.push(id);
                return Some((program, child.world().clone()));
            }
            self.prefix.push(id);
            self.frames.push((child, 0));
        }
    }
}

pub fn enumerate_programs<'a>(
    vocab: &'a Vocabulary,
    start: &WorldState,
    utterances: usize,
    budget: usize,
) -> ProgramEnumerator<'a> {
    ProgramEnumerator::new(vocab, start, utterances, budget)
}

/// States reached by finishing the current utterance from `state`, one entry
/// per distinct token sequence. `None` once more than `node_cap` prefixes
/// have been visited across calls sharing `visited`.
pub fn complete_utterance(
    vocab: &Vocabulary,
    state: &MachineState,
    node_cap: u64,
    visited: &mut u64,
) -> Option<Vec<MachineState>> {
    fn go(
        vocab: &Vocabulary,
        state: &MachineState,
        pointer: usize,
        cap: u64,
        visited: &mut u64,
        out: &mut Vec<MachineState>,
    ) -> bool {
        for &t in vocab.tokens() {
            let Ok(child) = state.step(t) else { continue };
            *visited += 1;
            if *visited > cap {
                return false;
            }
            if child.pointer() > pointer {
                out.push(child);
            } else if !go(vocab, &child, pointer, cap, visited, out) {
                return false;
            }
        }
        true
    }
    let mut out = Vec::new();
    go(vocab, state, state.pointer(), node_cap, visited, &mut out).then_some(out)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::lang::machine::execute_ids;
    use crate::worlds::{Domain, TangramsWorld};

    fn tangrams(row: &[u8]) -> WorldState {
        WorldState::Tangrams(TangramsWorld::new(row.to_vec(), BTreeSet::new()).unwrap())
    }

    /// Every token string of length ≤ `max_len`, executed directly.
    fn brute_force(vocab: &Vocabulary, w0: &WorldState, m: usize, cap: usize) -> BTreeSet<Vec<TokenId>> {
        let mut found = BTreeSet::new();
        let mut layer: Vec<Vec<TokenId>> = vec![Vec::new()];
        for _ in 0..=cap * m.max(1) {
            let mut next = Vec::new();
            for s in &layer {
                if execute_ids(vocab, s, w0, m, cap).is_ok() {
                    found.insert(s.clone());
                }
                if s.len() < cap * m.max(1) {
                    for id in 0..vocab.len() {
                        let mut t = s.clone();
                        t.push(id);
                        next.push(t);
                    }
                }
            }
            layer = next;
        }
        found
    }

    #[test]
    fn matches_brute_force_on_two_pieces() {
        let vocab = Vocabulary::new(Domain::Tangrams);
        let w0 = tangrams(&[1, 2]);
        let enumerated: BTreeSet<Vec<TokenId>> =
            enumerate_programs(&vocab, &w0, 1, 4).map(|(p, _)| p).collect();
        let brute = brute_force(&vocab, &w0, 1, 4);
        assert_eq!(enumerated, brute);
        assert!(!enumerated.is_empty());
        for (p, w) in enumerate_programs(&vocab, &w0, 1, 4) {
            assert_eq!(execute_ids(&vocab, &p, &w0, 1, 4).unwrap(), w);
        }
    }

    #[test]
    fn zero_utterances_yields_the_empty_program() {
        let vocab = Vocabulary::new(Domain::Tangrams);
        let w0 = tangrams(&[1, 2]);
        let all: Vec<_> = enumerate_programs(&vocab, &w0, 0, 3).collect();
        assert_eq!(all, vec![(Vec::new(), w0)]);
    }

    #[test]
    fn node_cap_stops_early() {
        let vocab = Vocabulary::new(Domain::Tangrams);
        let w0 = tangrams(&[1, 2, 3]);
        let mut e = enumerate_programs(&vocab, &w0, 2, 5).with_node_cap(50);
        let n = e.by_ref().count();
        assert!(e.hit_node_cap());
        assert!(n < 50);
    }
}
