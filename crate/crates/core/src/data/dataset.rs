use std::collections::BTreeSet;
use std::path::Path;

use thiserror::Error;

use super::codec::{parse_world_with_pieces, serialize_world, tangram_pieces};
use crate::policy::Input;
use crate::worlds::{Domain, WorldState};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("line {line}: invalid world: {message}")]
    Invariant { line: usize, message: String },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// One dataset example: a start world, M utterances and the world after each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawExample {
    pub id: String,
    pub start: WorldState,
    pub utterances: Vec<Vec<String>>,
    pub worlds: Vec<WorldState>,
    /// Gold program text, only known for generated data. Never used for training.
    pub gold: Option<String>,
}

impl RawExample {
    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    pub fn target(&self) -> &WorldState {
        self.worlds.last().unwrap_or(&self.start)
    }

    pub fn input(&self) -> Input<'_> {
        Input { utterances: &self.utterances, start: &self.start }
    }
}

/// A training unit: 1 or 2 consecutive utterances with their start and target worlds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingExample {
    pub id: String,
    pub utterances: Vec<Vec<String>>,
    pub start: WorldState,
    pub target: WorldState,
}

impl TrainingExample {
    pub fn input(&self) -> Input<'_> {
        Input { utterances: &self.utterances, start: &self.start }
    }
}

impl From<&RawExample> for TrainingExample {
    fn from(e: &RawExample) -> Self {
        TrainingExample {
            id: e.id.clone(),
            utterances: e.utterances.clone(),
            start: e.start.clone(),
            target: e.target().clone(),
        }
    }
}

/// Lowercases, strips punctuation and splits on whitespace.
pub fn tokenize_utterance(text: &str) -> Vec<String> {
    let cleaned: String = text
        .chars()
        .map(|c| if c.is_ascii_punctuation() && c != '-' { ' ' } else { c.to_ascii_lowercase() })
        .collect();
    cleaned.split_whitespace().map(str::to_owned).collect()
}

pub fn parse_dataset_str(domain: Domain, text: &str) -> Result<Vec<RawExample>, DataError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let column_of = |field: usize| fields[..field].iter().map(|f| f.len() + 1).sum::<usize>() + 1;
        if fields.len() < 2 || fields.len() % 2 != 0 {
            return Err(DataError::Parse {
                line: line_no,
                column: 1,
                message: format!("expected id, world and utterance/world pairs, got {} fields", fields.len()),
            });
        }
        let world_at = |field: usize, pieces: Option<&BTreeSet<u8>>| {
            parse_world_with_pieces(domain, fields[field], pieces).map_err(|e| {
                if e.invariant {
                    DataError::Invariant { line: line_no, message: e.message }
                } else {
                    DataError::Parse { line: line_no, column: column_of(field) + e.column - 1, message: e.message }
                }
            })
        };
        let start = world_at(1, None)?;
        let pieces = tangram_pieces(&start);
        let mut utterances = Vec::new();
        let mut worlds = Vec::new();
        for pair in (2..fields.len()).step_by(2) {
            utterances.push(tokenize_utterance(fields[pair]));
            worlds.push(world_at(pair + 1, pieces.as_ref())?);
        }
        out.push(RawExample { id: fields[0].to_owned(), start, utterances, worlds, gold: None });
    }
    Ok(out)
}

pub fn parse_dataset(domain: Domain, path: &Path) -> Result<Vec<RawExample>, DataError> {
    let text = std::fs::read_to_string(path)?;
    parse_dataset_str(domain, &text)
}

pub fn write_dataset(examples: &[RawExample]) -> String {
    let mut out = String::new();
    for e in examples {
        out.push_str(&e.id);
        out.push('\t');
        out.push_str(&serialize_world(&e.start));
        for (u, w) in e.utterances.iter().zip(&e.worlds) {
            out.push('\t');
            out.push_str(&u.join(" "));
            out.push('\t');
            out.push_str(&serialize_world(w));
        }
        out.push('\n');
    }
    out
}

/// All length-1 and length-2 windows of an example, singletons first.
pub fn decompose(example: &RawExample) -> Vec<TrainingExample> {
    let m = example.len();
    let world_before = |i: usize| if i == 0 { &example.start } else { &example.worlds[i - 1] };
    let mut out = Vec::with_capacity(2 * m);
    for width in 1..=2 {
        for first in 0..m.saturating_sub(width - 1) {
            out.push(TrainingExample {
                id: format!("{}/{}-{}", example.id, first + 1, first + width),
                utterances: example.utterances[first..first + width].to_vec(),
                start: world_before(first).clone(),
                target: example.worlds[first + width - 1].clone(),
            });
        }
    }
    out
}

/// The first `n` utterances of an example as a standalone example.
pub fn truncate(example: &RawExample, n: usize) -> RawExample {
    RawExample {
        id: example.id.clone(),
        start: example.start.clone(),
        utterances: example.utterances[..n].to_vec(),
        worlds: example.worlds[..n].to_vec(),
        gold: None,
    }
}
