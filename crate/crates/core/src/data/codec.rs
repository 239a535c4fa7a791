//! Text form of world states.
//!
//! Alchemy: `1:ggg 2:_ 3:o ...`, units bottom to top, `_` for an empty beaker.
//! Scene: `3:br` is a person with shirt `b` and hat `r`; `_` for no hat and
//! `__` (or a missing slot) for an empty position.
//! Tangrams: `1:4 2:0 3:2`, position then shape id.

use std::collections::BTreeSet;
use std::fmt::Write;

use crate::worlds::{
    AlchemyWorld, Color, Domain, Person, SceneWorld, TangramsWorld, WorldError, WorldState,
    ALCHEMY_BEAKERS, SCENE_POSITIONS,
};

/// A codec failure at a 1-based byte column of the world text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodecError {
    pub column: usize,
    pub message: String,
    pub invariant: bool,
}

impl CodecError {
    fn at(column: usize, message: impl Into<String>) -> Self {
        CodecError { column, message: message.into(), invariant: false }
    }

    fn invariant(err: WorldError) -> Self {
        CodecError { column: 1, message: err.to_string(), invariant: true }
    }
}

pub fn serialize_world(world: &WorldState) -> String {
    let mut out = String::new();
    match world {
        WorldState::Alchemy(w) => {
            for (i, units) in w.beakers().iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                write!(out, "{}:", i + 1).unwrap();
                if units.is_empty() {
                    out.push('_');
                }
                out.extend(units.iter().map(|c| c.code()));
            }
        }
        WorldState::Tangrams(w) => {
            for (i, piece) in w.row().iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                write!(out, "{}:{}", i + 1, piece).unwrap();
            }
        }
        WorldState::Scene(w) => {
            for (i, slot) in w.slots().iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                match slot {
                    Some(p) => write!(out, "{}:{}{}", i + 1, p.shirt.code(), p.hat.code()).unwrap(),
                    None => write!(out, "{}:__", i + 1).unwrap(),
                }
            }
        }
    }
    out
}

/// Splits `text` into `(column, position, body)` entries.
fn entries(text: &str) -> Result<Vec<(usize, usize, &str)>, CodecError> {
    let mut out = Vec::new();
    let mut offset = 0;
    for field in text.split(' ') {
        let column = offset + 1;
        offset += field.len() + 1;
        if field.is_empty() {
            continue;
        }
        let (pos, body) = field
            .split_once(':')
            .ok_or_else(|| CodecError::at(column, format!("expected `pos:value`, got `{field}`")))?;
        let pos: usize = pos
            .parse()
            .map_err(|_| CodecError::at(column, format!("bad position `{pos}`")))?;
        out.push((column, pos, body));
    }
    Ok(out)
}

fn check_position(column: usize, pos: usize, max: usize, seen: &mut [bool]) -> Result<(), CodecError> {
    if pos == 0 || pos > max {
        return Err(CodecError::at(column, format!("position {pos} outside 1..={max}")));
    }
    if std::mem::replace(&mut seen[pos - 1], true) {
        return Err(CodecError::at(column, format!("position {pos} given twice")));
    }
    Ok(())
}

/// Parses a world. Tangrams worlds get an empty removed pool; see
/// [`parse_world_with_pieces`].
pub fn parse_world(domain: Domain, text: &str) -> Result<WorldState, CodecError> {
    parse_world_with_pieces(domain, text, None)
}

/// Parses a world; for Tangrams, pieces of `all_pieces` missing from the row
/// form the removed pool.
pub fn parse_world_with_pieces(
    domain: Domain,
    text: &str,
    all_pieces: Option<&BTreeSet<u8>>,
) -> Result<WorldState, CodecError> {
    let items = entries(text.trim())?;
    match domain {
        Domain::Alchemy => {
            let mut seen = [false; ALCHEMY_BEAKERS];
            let mut beakers = vec![Vec::new(); ALCHEMY_BEAKERS];
            for (column, pos, body) in items {
                check_position(column, pos, ALCHEMY_BEAKERS, &mut seen)?;
                if body == "_" {
                    continue;
                }
                for ch in body.chars() {
                    let c = Color::from_code(domain, ch)
                        .ok_or_else(|| CodecError::at(column, format!("unknown color code `{ch}`")))?;
                    beakers[pos - 1].push(c);
                }
            }
            AlchemyWorld::new(beakers).map(WorldState::Alchemy).map_err(CodecError::invariant)
        }
        Domain::Scene => {
            let mut seen = [false; SCENE_POSITIONS];
            let mut slots = [None; SCENE_POSITIONS];
            for (column, pos, body) in items {
                check_position(column, pos, SCENE_POSITIONS, &mut seen)?;
                let chars: Vec<char> = body.chars().collect();
                let [shirt, hat] = chars[..] else {
                    return Err(CodecError::at(column, format!("expected two codes, got `{body}`")));
                };
                if shirt == '_' {
                    if hat != '_' {
                        return Err(CodecError::at(column, "hat without a person"));
                    }
                    continue;
                }
                let code = |ch| {
                    Color::from_code(domain, ch)
                        .ok_or_else(|| CodecError::at(column, format!("unknown color code `{ch}`")))
                };
                let hat = if hat == '_' { Color::NoHat } else { code(hat)? };
                slots[pos - 1] = Some(Person { shirt: code(shirt)?, hat });
            }
            SceneWorld::new(slots).map(WorldState::Scene).map_err(CodecError::invariant)
        }
        Domain::Tangrams => {
            let mut row = Vec::with_capacity(items.len());
            for (i, (column, pos, body)) in items.into_iter().enumerate() {
                if pos != i + 1 {
                    return Err(CodecError::at(column, format!("expected position {}, got {pos}", i + 1)));
                }
                let piece: u8 = body
                    .parse()
                    .map_err(|_| CodecError::at(column, format!("bad shape id `{body}`")))?;
                row.push(piece);
            }
            let removed = match all_pieces {
                Some(all) => {
                    if let Some(p) = row.iter().find(|p| !all.contains(p)) {
                        return Err(CodecError {
                            column: 1,
                            message: format!("piece {p} not present in the initial world"),
                            invariant: true,
                        });
                    }
                    all.iter().copied().filter(|p| !row.contains(p)).collect()
                }
                None => BTreeSet::new(),
            };
            TangramsWorld::new(row, removed).map(WorldState::Tangrams).map_err(CodecError::invariant)
        }
    }
}

/// All pieces of a Tangrams world, on stage or removed.
pub fn tangram_pieces(world: &WorldState) -> Option<BTreeSet<u8>> {
    match world {
        WorldState::Tangrams(t) => Some(t.row().iter().copied().chain(t.removed().iter().copied()).collect()),
        _ => None,
    }
}
