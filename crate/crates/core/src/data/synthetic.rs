//! Template-based synthetic examples.
//!
//! Each utterance is produced together with a gold program fragment that is
//! executed to label the next world. The gold program is kept on the example
//! for diagnostics only.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::dataset::{tokenize_utterance, RawExample};
use crate::lang::{ActionKind, MachineState, Vocabulary, DEFAULT_BUDGET};
use crate::worlds::{
    AlchemyWorld, Color, Domain, Person, SceneWorld, TangramsWorld, WorldState, ALCHEMY_BEAKERS,
    BEAKER_CAPACITY, SCENE_POSITIONS,
};

#[derive(Debug, Error)]
pub enum GenerationError {
    #[error("no template could be grounded for example {example} after {attempts} attempts")]
    NoGrounding { example: usize, attempts: usize },
}

const ORDINALS: [&str; 10] =
    ["first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth", "ninth", "tenth"];

const UTTERANCE_ATTEMPTS: usize = 64;
const WORLD_ATTEMPTS: usize = 32;

pub struct SyntheticConfig {
    pub domain: Domain,
    pub examples: usize,
    pub utterances: usize,
    pub seed: u64,
}

pub fn generate_synthetic(domain: Domain, examples: usize, seed: u64) -> Result<Vec<RawExample>, GenerationError> {
    generate(&SyntheticConfig { domain, examples, utterances: 5, seed })
}

pub fn generate(cfg: &SyntheticConfig) -> Result<Vec<RawExample>, GenerationError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let vocab = Vocabulary::new(cfg.domain);
    (0..cfg.examples)
        .map(|i| {
            for _ in 0..WORLD_ATTEMPTS {
                let start = random_world(cfg.domain, &mut rng);
                if let Some(e) = build_example(&vocab, &start, cfg.utterances, &mut rng) {
                    return Ok(RawExample { id: format!("{}-{i:05}", cfg.domain), ..e });
                }
            }
            Err(GenerationError::NoGrounding { example: i, attempts: WORLD_ATTEMPTS })
        })
        .collect()
}

fn build_example(vocab: &Vocabulary, start: &WorldState, m: usize, rng: &mut ChaCha8Rng) -> Option<RawExample> {
    let mut state = MachineState::new(start.clone(), m, DEFAULT_BUDGET);
    let mut utterances = Vec::with_capacity(m);
    let mut worlds = Vec::with_capacity(m);
    let mut gold: Vec<String> = Vec::new();
    for _ in 0..m {
        let (text, program, next) = (0..UTTERANCE_ATTEMPTS).find_map(|_| {
            let (text, program) = propose(&state, rng)?;
            let ids = vocab.parse_program(&program).ok()?;
            let mut s = state.clone();
            for id in ids {
                s = s.step(vocab.token(id)).ok()?;
            }
            (s.history().len() == state.history().len() + 1 && s.world() != state.world())
                .then_some((text, program, s))
        })?;
        utterances.push(tokenize_utterance(&text));
        worlds.push(next.world().clone());
        gold.push(program);
        state = next;
    }
    Some(RawExample {
        id: String::new(),
        start: start.clone(),
        utterances,
        worlds,
        gold: Some(gold.join(" ")),
    })
}

pub fn random_world(domain: Domain, rng: &mut impl Rng) -> WorldState {
    match domain {
        Domain::Alchemy => {
            let colors = domain.colors();
            let beakers = (0..ALCHEMY_BEAKERS)
                .map(|_| {
                    if rng.gen_bool(0.3) {
                        Vec::new()
                    } else {
                        let c = *colors.choose(rng).unwrap();
                        vec![c; rng.gen_range(1..=BEAKER_CAPACITY)]
                    }
                })
                .collect();
            WorldState::Alchemy(AlchemyWorld::new(beakers).expect("generated beakers are valid"))
        }
        Domain::Tangrams => {
            let mut pieces: Vec<u8> = (0..5).collect();
            pieces.shuffle(rng);
            WorldState::Tangrams(TangramsWorld::new(pieces, BTreeSet::new()).expect("distinct pieces"))
        }
        Domain::Scene => {
            let mut slots = [None; SCENE_POSITIONS];
            let count = rng.gen_range(1..=5);
            let mut positions: Vec<usize> = (0..SCENE_POSITIONS).collect();
            positions.shuffle(rng);
            for &slot in &positions[..count] {
                let shirt = *domain.colors().choose(rng).unwrap();
                let hat = if rng.gen_bool(0.3) { Color::NoHat } else { *domain.colors().choose(rng).unwrap() };
                slots[slot] = Some(Person { shirt, hat });
            }
            WorldState::Scene(SceneWorld::new(slots).expect("generated people are valid"))
        }
    }
}

fn ordinal(k: usize) -> &'static str {
    ORDINALS[k - 1]
}

/// Proposes an utterance and gold fragment; grounding is checked by execution.
fn propose(state: &MachineState, rng: &mut ChaCha8Rng) -> Option<(String, String)> {
    match state.world() {
        WorldState::Alchemy(w) => propose_alchemy(w, state, rng),
        WorldState::Tangrams(w) => propose_tangrams(w, state, rng),
        WorldState::Scene(w) => propose_scene(w, state, rng),
    }
}

fn unique_color_beaker(w: &AlchemyWorld, rng: &mut ChaCha8Rng) -> Option<(usize, Color)> {
    let candidates: Vec<(usize, Color)> = (0..ALCHEMY_BEAKERS)
        .filter_map(|i| w.uniform_color(i).map(|c| (i, c)))
        .filter(|&(_, c)| (0..ALCHEMY_BEAKERS).filter(|&j| w.uniform_color(j) == Some(c)).count() == 1)
        .collect();
    candidates.choose(rng).copied()
}

fn propose_alchemy(w: &AlchemyWorld, state: &MachineState, rng: &mut ChaCha8Rng) -> Option<(String, String)> {
    let nonempty: Vec<usize> = (0..ALCHEMY_BEAKERS).filter(|&i| !w.beakers()[i].is_empty()).collect();
    let any = |rng: &mut ChaCha8Rng| rng.gen_range(1..=ALCHEMY_BEAKERS);
    match rng.gen_range(0..7) {
        0 => {
            let (src, c) = unique_color_beaker(w, rng)?;
            let to = any(rng);
            (to != src + 1).then(|| {
                (
                    format!("pour the {c} beaker into the {} beaker", ordinal(to)),
                    format!("{c} hasColor allObjects {to} index pour"),
                )
            })
        }
        1 => {
            let k = *nonempty.choose(rng)? + 1;
            Some((format!("mix the {} beaker", ordinal(k)), format!("allObjects {k} index mix")))
        }
        2 => {
            let (b, c) = unique_color_beaker(w, rng)?;
            let n = rng.gen_range(1..=w.beakers()[b].len());
            let unit = if n == 1 { "unit" } else { "units" };
            Some((format!("drain {n} {unit} from the {c} beaker"), format!("{c} hasColor {n} drain")))
        }
        3 => {
            let k = *nonempty.choose(rng)? + 1;
            Some((
                format!("throw out the {} beaker", ordinal(k)),
                format!("allObjects {k} index 1/1 drain"),
            ))
        }
        4 => {
            let from = *nonempty.choose(rng)? + 1;
            let to = any(rng);
            Some((
                format!("pour the {} beaker into the {} beaker", ordinal(from), ordinal(to)),
                format!("allObjects {from} index allObjects {to} index pour"),
            ))
        }
        5 => {
            let last = state.history().last()?;
            (last.action == ActionKind::Pour).then(|| ("mix it".to_owned(), "-1 prevArg2 mix".to_owned()))
        }
        _ => Some(("empty the last beaker".to_owned(), "allObjects -1 index 1/1 drain".to_owned())),
    }
}

/// Uniform in `1..=n`, `None` when `n == 0`.
fn pick(rng: &mut ChaCha8Rng, n: usize) -> Option<usize> {
    (n > 0).then(|| rng.gen_range(1..=n))
}

fn propose_tangrams(w: &TangramsWorld, state: &MachineState, rng: &mut ChaCha8Rng) -> Option<(String, String)> {
    let n = w.row().len();
    match rng.gen_range(0..5) {
        0 | 1 => {
            let a = pick(rng, n)?;
            let b = pick(rng, n)?;
            (a != b).then(|| {
                (
                    format!("swap the {} and {} figures", ordinal(a), ordinal(b)),
                    format!("allObjects {a} index allObjects {b} index swap"),
                )
            })
        }
        2 => {
            let k = pick(rng, n)?;
            Some((format!("remove the {} figure", ordinal(k)), format!("allObjects {k} index remove")))
        }
        3 => Some(("delete the last figure".to_owned(), "allObjects -1 index remove".to_owned())),
        _ => {
            let removed_at = state.history().iter().rposition(|h| h.action == ActionKind::Remove)? + 1;
            let k = rng.gen_range(1..=n + 1);
            Some((
                format!("bring it back in the {} position", ordinal(k)),
                format!("{k} {removed_at} prevArg1 add"),
            ))
        }
    }
}

fn hat_phrase(c: Color) -> String {
    if c == Color::NoHat {
        "no hat".to_owned()
    } else {
        format!("a {c} hat")
    }
}

fn propose_scene(w: &SceneWorld, state: &MachineState, rng: &mut ChaCha8Rng) -> Option<(String, String)> {
    let people: Vec<(usize, Person)> = w.people().collect();
    let unique_shirt: Vec<(usize, Person)> =
        people.iter().copied().filter(|(_, p)| people.iter().filter(|(_, q)| q.shirt == p.shirt).count() == 1).collect();
    let unique_hat: Vec<(usize, Person)> = people
        .iter()
        .copied()
        .filter(|(_, p)| p.hat != Color::NoHat && people.iter().filter(|(_, q)| q.hat == p.hat).count() == 1)
        .collect();
    let empty: Vec<usize> = (0..SCENE_POSITIONS).filter(|&i| w.slots()[i].is_none()).collect();
    let colors = Domain::Scene.colors();
    match rng.gen_range(0..9) {
        0 => {
            let (_, p) = *unique_shirt.choose(rng)?;
            Some((format!("the person in the {} shirt leaves", p.shirt), format!("{} hasShirt leave", p.shirt)))
        }
        1 => {
            let (_, p) = *unique_hat.choose(rng)?;
            Some((format!("the person with the {} hat leaves", p.hat), format!("{} hasHat leave", p.hat)))
        }
        2 => {
            let (_, p) = *unique_shirt.choose(rng)?;
            let to = *empty.choose(rng)? + 1;
            Some((
                format!("the person in the {} shirt moves to the {} position", p.shirt, ordinal(to)),
                format!("{} hasShirt {to} move", p.shirt),
            ))
        }
        3 => {
            let (_, mover) = *unique_shirt.choose(rng)?;
            let (_, anchor) = *unique_hat.choose(rng)?;
            let left = rng.gen_bool(0.5);
            let (side, fun) = if left { ("left", "leftOf") } else { ("right", "rightOf") };
            Some((
                format!(
                    "the person in the {} shirt moves to the {side} of the person with the {} hat",
                    mover.shirt, anchor.hat
                ),
                format!("{} hasShirt {} hasHat {fun} move", mover.shirt, anchor.hat),
            ))
        }
        4 => {
            let at = *empty.choose(rng)? + 1;
            let shirt = *colors.choose(rng)?;
            let hat = if rng.gen_bool(0.3) { Color::NoHat } else { *colors.choose(rng)? };
            Some((
                format!("a person in a {shirt} shirt and {} appears in the {} position", hat_phrase(hat), ordinal(at)),
                format!("{at} {shirt} {hat} create"),
            ))
        }
        5 => {
            let pair: Vec<&(usize, Person)> = unique_shirt.choose_multiple(rng, 2).collect();
            let [(_, a), (_, b)] = pair[..] else { return None };
            Some((
                format!("the people in the {} and {} shirts swap hats", a.shirt, b.shirt),
                format!("{} hasShirt {} hasShirt swapHats", a.shirt, b.shirt),
            ))
        }
        6 => {
            let k = pick(rng, people.len())?;
            Some((format!("the {} person leaves", ordinal(k)), format!("allObjects {k} index leave")))
        }
        7 => {
            let last = state.history().last()?;
            if !matches!(last.action, ActionKind::Move | ActionKind::SwapHats) {
                return None;
            }
            let to = *empty.choose(rng)? + 1;
            Some((format!("he moves to the {} position", ordinal(to)), format!("-1 prevArg1 {to} move")))
        }
        _ => {
            let (_, p) = *unique_shirt.choose(rng)?;
            let to = *empty.choose(rng)? + 1;
            Some((
                format!("the person wearing {} and a {} shirt goes to the {} position", hat_phrase(p.hat), p.shirt, ordinal(to)),
                format!("{} {} hasShirtHat {to} move", p.shirt, p.hat),
            ))
        }
    }
}
