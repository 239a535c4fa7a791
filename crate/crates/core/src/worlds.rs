//! World states for the three domains and the world-level effect of each action.
//!
//! Everything here is value-semantics: [`apply_action`] takes a world by
//! reference and returns a fresh one, so a world can be shared freely between
//! search hypotheses and threads.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

pub const ALCHEMY_BEAKERS: usize = 7;
pub const BEAKER_CAPACITY: usize = 4;
pub const SCENE_POSITIONS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Domain {
    Alchemy,
    Tangrams,
    Scene,
}

impl Domain {
    pub const ALL: [Domain; 3] = [Domain::Alchemy, Domain::Tangrams, Domain::Scene];

    pub fn name(self) -> &'static str {
        match self {
            Domain::Alchemy => "alchemy",
            Domain::Tangrams => "tangrams",
            Domain::Scene => "scene",
        }
    }

    /// Colors that exist in this domain's worlds and vocabulary.
    ///
    /// Tangrams has no colored objects, so its set is empty.
    pub fn colors(self) -> &'static [Color] {
        use Color::*;
        match self {
            Domain::Alchemy => &[Red, Yellow, Green, Orange, Purple, Brown],
            Domain::Tangrams => &[],
            Domain::Scene => &[Red, Yellow, Green, Orange, Purple, Blue],
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Domain {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "alchemy" => Ok(Domain::Alchemy),
            "tangrams" => Ok(Domain::Tangrams),
            "scene" => Ok(Domain::Scene),
            other => Err(format!("unknown domain `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Color {
    Red,
    Yellow,
    Green,
    Orange,
    Purple,
    Brown,
    Blue,
    /// Pseudo-color for a Scene person without a hat.
    NoHat,
}

impl Color {
    pub const ALL: [Color; 8] = [
        Color::Red,
        Color::Yellow,
        Color::Green,
        Color::Orange,
        Color::Purple,
        Color::Brown,
        Color::Blue,
        Color::NoHat,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Color::Red => "red",
            Color::Yellow => "yellow",
            Color::Green => "green",
            Color::Orange => "orange",
            Color::Purple => "purple",
            Color::Brown => "brown",
            Color::Blue => "blue",
            Color::NoHat => "noHat",
        }
    }

    pub fn from_name(name: &str) -> Option<Color> {
        Color::ALL.iter().copied().find(|c| c.name() == name)
    }

    /// Single-character code used by the text codec. Unique within a domain
    /// (`b` is brown in Alchemy and blue in Scene).
    pub fn code(self) -> char {
        match self {
            Color::Red => 'r',
            Color::Yellow => 'y',
            Color::Green => 'g',
            Color::Orange => 'o',
            Color::Purple => 'p',
            Color::Brown | Color::Blue => 'b',
            Color::NoHat => '_',
        }
    }

    pub fn from_code(domain: Domain, code: char) -> Option<Color> {
        domain.colors().iter().copied().find(|c| c.code() == code)
    }

    /// Dense index, used for embedding lookups.
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// 7 beakers, each an ordered bottom-to-top stack of single-color units.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AlchemyWorld {
    beakers: Vec<Vec<Color>>,
}

impl AlchemyWorld {
    pub fn new(beakers: Vec<Vec<Color>>) -> Result<Self, WorldError> {
        if beakers.len() != ALCHEMY_BEAKERS {
            return Err(WorldError::Invariant(format!(
                "expected {ALCHEMY_BEAKERS} beakers, got {}",
                beakers.len()
            )));
        }
        for (i, b) in beakers.iter().enumerate() {
            if b.len() > BEAKER_CAPACITY {
                return Err(WorldError::Invariant(format!(
                    "beaker {} holds {} units",
                    i + 1,
                    b.len()
                )));
            }
            if let Some(c) = b.iter().find(|c| !Domain::Alchemy.colors().contains(c)) {
                return Err(WorldError::Invariant(format!("color {c} is not an alchemy color")));
            }
        }
        Ok(AlchemyWorld { beakers })
    }

    pub fn empty() -> Self {
        AlchemyWorld { beakers: vec![Vec::new(); ALCHEMY_BEAKERS] }
    }

    pub fn beakers(&self) -> &[Vec<Color>] {
        &self.beakers
    }

    pub fn beaker(&self, index: usize) -> Option<&[Color]> {
        self.beakers.get(index).map(Vec::as_slice)
    }

    /// The single color of a nonempty homogeneous beaker.
    pub fn uniform_color(&self, index: usize) -> Option<Color> {
        let units = self.beakers.get(index)?;
        let first = *units.first()?;
        units.iter().all(|&c| c == first).then_some(first)
    }
}

/// A row of distinct tangram pieces, plus the pieces removed so far.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TangramsWorld {
    row: Vec<u8>,
    removed: BTreeSet<u8>,
}

impl TangramsWorld {
    pub fn new(row: Vec<u8>, removed: BTreeSet<u8>) -> Result<Self, WorldError> {
        let mut seen = BTreeSet::new();
        for &piece in &row {
            if !seen.insert(piece) {
                return Err(WorldError::Invariant(format!("piece {piece} appears twice")));
            }
            if removed.contains(&piece) {
                return Err(WorldError::Invariant(format!(
                    "piece {piece} is both on stage and removed"
                )));
            }
        }
        Ok(TangramsWorld { row, removed })
    }

    pub fn row(&self) -> &[u8] {
        &self.row
    }

    pub fn removed(&self) -> &BTreeSet<u8> {
        &self.removed
    }

    /// 0-based position of a piece on stage.
    pub fn position_of(&self, piece: u8) -> Option<usize> {
        self.row.iter().position(|&p| p == piece)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Person {
    pub shirt: Color,
    /// `Color::NoHat` when the person wears no hat.
    pub hat: Color,
}

/// A stage of 10 slots, each empty or holding one person.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SceneWorld {
    slots: [Option<Person>; SCENE_POSITIONS],
}

impl SceneWorld {
    pub fn new(slots: [Option<Person>; SCENE_POSITIONS]) -> Result<Self, WorldError> {
        for p in slots.iter().flatten() {
            if p.shirt == Color::NoHat || !Domain::Scene.colors().contains(&p.shirt) {
                return Err(WorldError::Invariant(format!("invalid shirt color {}", p.shirt)));
            }
            if p.hat != Color::NoHat && !Domain::Scene.colors().contains(&p.hat) {
                return Err(WorldError::Invariant(format!("invalid hat color {}", p.hat)));
            }
        }
        Ok(SceneWorld { slots })
    }

    pub fn empty() -> Self {
        SceneWorld { slots: [None; SCENE_POSITIONS] }
    }

    pub fn slots(&self) -> &[Option<Person>; SCENE_POSITIONS] {
        &self.slots
    }

    pub fn population(&self) -> usize {
        self.slots.iter().flatten().count()
    }

    /// Occupied slots (0-based) in stage order.
    pub fn people(&self) -> impl Iterator<Item = (usize, Person)> + '_ {
        self.slots.iter().enumerate().filter_map(|(i, p)| p.map(|p| (i, p)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum WorldState {
    Alchemy(AlchemyWorld),
    Tangrams(TangramsWorld),
    Scene(SceneWorld),
}

impl WorldState {
    pub fn domain(&self) -> Domain {
        match self {
            WorldState::Alchemy(_) => Domain::Alchemy,
            WorldState::Tangrams(_) => Domain::Tangrams,
            WorldState::Scene(_) => Domain::Scene,
        }
    }
}

/// Amount argument of `drain`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Amount {
    Units(i32),
    /// The `1/1` fraction: everything in the beaker.
    All,
}

/// An action with its arguments already resolved against the world.
///
/// Object arguments are 0-based (beaker index, Scene slot); positions are the
/// 1-based numbers that appear in programs. Tangram pieces are named by shape id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Drain { beaker: usize, amount: Amount },
    Pour { from: usize, to: usize },
    Mix { beaker: usize },
    Swap { first: u8, second: u8 },
    Remove { piece: u8 },
    Add { position: i32, piece: u8 },
    Create { position: i32, shirt: Color, hat: Color },
    Move { slot: usize, position: i32 },
    SwapHats { first: usize, second: usize },
    Leave { slot: usize },
}

impl Action {
    pub fn domain(&self) -> Domain {
        match self {
            Action::Drain { .. } | Action::Pour { .. } | Action::Mix { .. } => Domain::Alchemy,
            Action::Swap { .. } | Action::Remove { .. } | Action::Add { .. } => Domain::Tangrams,
            _ => Domain::Scene,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorldError {
    #[error("beaker capacity exceeded ({0} units)")]
    Capacity(usize),
    #[error("position {0} is occupied")]
    Occupied(i32),
    #[error("referenced object does not exist")]
    Absent,
    #[error("position {0} is out of range")]
    Range(i32),
    #[error("beaker is empty")]
    Empty,
    #[error("both arguments refer to the same object")]
    SameObject,
    #[error("a shirt cannot be noHat")]
    InvalidColor,
    #[error("action for {action} applied to a {world} world")]
    DomainMismatch { action: Domain, world: Domain },
    #[error("invariant violated: {0}")]
    Invariant(String),
}

/// Applies one action, returning the new world. The input is never modified.
pub fn apply_action(world: &WorldState, action: &Action) -> Result<WorldState, WorldError> {
    match (world, action) {
        (WorldState::Alchemy(w), _) if action.domain() == Domain::Alchemy => {
            apply_alchemy(w, action).map(WorldState::Alchemy)
        }
        (WorldState::Tangrams(w), _) if action.domain() == Domain::Tangrams => {
            apply_tangrams(w, action).map(WorldState::Tangrams)
        }
        (WorldState::Scene(w), _) if action.domain() == Domain::Scene => {
            apply_scene(w, action).map(WorldState::Scene)
        }
        _ => Err(WorldError::DomainMismatch { action: action.domain(), world: world.domain() }),
    }
}

fn check_beaker(index: usize) -> Result<(), WorldError> {
    if index < ALCHEMY_BEAKERS {
        Ok(())
    } else {
        Err(WorldError::Absent)
    }
}

fn apply_alchemy(w: &AlchemyWorld, action: &Action) -> Result<AlchemyWorld, WorldError> {
    let mut next = w.clone();
    match *action {
        Action::Pour { from, to } => {
            check_beaker(from)?;
            check_beaker(to)?;
            if from == to {
                return Err(WorldError::SameObject);
            }
            if next.beakers[from].is_empty() {
                return Err(WorldError::Empty);
            }
            let total = next.beakers[from].len() + next.beakers[to].len();
            if total > BEAKER_CAPACITY {
                return Err(WorldError::Capacity(total));
            }
            let units = std::mem::take(&mut next.beakers[from]);
            next.beakers[to].extend(units);
        }
        Action::Mix { beaker } => {
            check_beaker(beaker)?;
            let units = &mut next.beakers[beaker];
            if units.is_empty() {
                return Err(WorldError::Empty);
            }
            units.iter_mut().for_each(|c| *c = Color::Brown);
        }
        Action::Drain { beaker, amount } => {
            check_beaker(beaker)?;
            let units = &mut next.beakers[beaker];
            if units.is_empty() {
                return Err(WorldError::Empty);
            }
            let n = match amount {
                Amount::All => units.len(),
                Amount::Units(n) if n >= 1 && (n as usize) <= units.len() => n as usize,
                Amount::Units(n) => return Err(WorldError::Range(n)),
            };
            let keep = units.len() - n;
            units.truncate(keep);
        }
        _ => unreachable!("non-alchemy action routed to alchemy"),
    }
    Ok(next)
}

fn apply_tangrams(w: &TangramsWorld, action: &Action) -> Result<TangramsWorld, WorldError> {
    let mut next = w.clone();
    match *action {
        Action::Swap { first, second } => {
            let a = w.position_of(first).ok_or(WorldError::Absent)?;
            let b = w.position_of(second).ok_or(WorldError::Absent)?;
            if a == b {
                return Err(WorldError::SameObject);
            }
            next.row.swap(a, b);
        }
        Action::Remove { piece } => {
            let at = w.position_of(piece).ok_or(WorldError::Absent)?;
            next.row.remove(at);
            next.removed.insert(piece);
        }
        Action::Add { position, piece } => {
            if !next.removed.remove(&piece) {
                return Err(WorldError::Absent);
            }
            let len = w.row.len() as i32;
            // -1 inserts after the last piece.
            let resolved = if position < 0 { len + 2 + position } else { position };
            if resolved < 1 || resolved > len + 1 {
                return Err(WorldError::Range(position));
            }
            next.row.insert(resolved as usize - 1, piece);
        }
        _ => unreachable!("non-tangrams action routed to tangrams"),
    }
    Ok(next)
}

fn scene_slot(position: i32) -> Result<usize, WorldError> {
    if (1..=SCENE_POSITIONS as i32).contains(&position) {
        Ok(position as usize - 1)
    } else {
        Err(WorldError::Range(position))
    }
}

fn apply_scene(w: &SceneWorld, action: &Action) -> Result<SceneWorld, WorldError> {
    let mut next = w.clone();
    let occupant = |slot: usize| w.slots.get(slot).copied().flatten().ok_or(WorldError::Absent);
    match *action {
        Action::Create { position, shirt, hat } => {
            let slot = scene_slot(position)?;
            if shirt == Color::NoHat {
                return Err(WorldError::InvalidColor);
            }
            if w.slots[slot].is_some() {
                return Err(WorldError::Occupied(position));
            }
            next.slots[slot] = Some(Person { shirt, hat });
        }
        Action::Move { slot, position } => {
            let person = occupant(slot)?;
            let target = scene_slot(position)?;
            if target != slot {
                if w.slots[target].is_some() {
                    return Err(WorldError::Occupied(position));
                }
                next.slots[slot] = None;
                next.slots[target] = Some(person);
            }
        }
        Action::SwapHats { first, second } => {
            let a = occupant(first)?;
            let b = occupant(second)?;
            if first == second {
                return Err(WorldError::SameObject);
            }
            next.slots[first] = Some(Person { hat: b.hat, ..a });
            next.slots[second] = Some(Person { hat: a.hat, ..b });
        }
        Action::Leave { slot } => {
            occupant(slot)?;
            next.slots[slot] = None;
        }
        _ => unreachable!("non-scene action routed to scene"),
    }
    Ok(next)
}

/// Structural equality of two worlds of the same domain.
pub fn worlds_equal(a: &WorldState, b: &WorldState) -> Result<bool, WorldError> {
    if a.domain() != b.domain() {
        return Err(WorldError::DomainMismatch { action: a.domain(), world: b.domain() });
    }
    Ok(a == b)
}
