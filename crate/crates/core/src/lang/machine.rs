//! The postfix stack machine.

use thiserror::Error;

use super::token::{ActionKind, ArgType, Token, TokenId, Vocabulary};
use crate::worlds::{
    apply_action, Action, Amount, Color, Domain, Person, WorldError, WorldState, SCENE_POSITIONS,
};

/// Maximum number of values on the stack.
pub const MAX_STACK: usize = 3;

/// Default per-utterance token budget.
pub const DEFAULT_BUDGET: usize = 10;

/// A Scene person as it was when the reference was taken.
///
/// Resolution against a later world tries the recorded slot first and then a
/// unique person with the same shirt and hat.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PersonRef {
    pub slot: usize,
    pub person: Person,
}

impl PersonRef {
    pub fn resolve(&self, world: &WorldState) -> Option<usize> {
        let WorldState::Scene(scene) = world else { return None };
        if scene.slots().get(self.slot).copied().flatten() == Some(self.person) {
            return Some(self.slot);
        }
        let mut matches = scene.people().filter(|(_, p)| *p == self.person).map(|(slot, _)| slot);
        match (matches.next(), matches.next()) {
            (Some(slot), None) => Some(slot),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Object {
    /// 0-based beaker index.
    Beaker(usize),
    /// Shape id.
    Tangram(u8),
    Person(PersonRef),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Value {
    Number(i32),
    Fraction,
    Color(Color),
    Object(Object),
    List(Vec<Object>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HistoryEntry {
    pub action: ActionKind,
    pub args: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error("stack underflow")]
    StackUnderflow,
    #[error("stack overflow (more than {MAX_STACK} values)")]
    StackOverflow,
    #[error("type mismatch: expected {expected}")]
    TypeMismatch { expected: &'static str },
    #[error("index {0} out of range")]
    Range(i32),
    #[error("selection is empty")]
    EmptySelection,
    #[error("token is not available in the {0} domain")]
    WrongDomain(Domain),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("values left on the stack after an action")]
    NonEmptyStackAfterAction,
    #[error("utterance token budget of {0} exceeded")]
    BudgetExceeded(usize),
    #[error("program already executed every utterance")]
    Terminated,
    #[error("program executed {got} actions, expected {expected}")]
    IncompleteProgram { expected: usize, got: usize },
}

/// Interpreter snapshot. Cloning is cheap relative to a world step.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MachineState {
    world: WorldState,
    stack: Vec<Value>,
    history: Vec<HistoryEntry>,
    pointer: usize,
    utterance_tokens: usize,
    utterances: usize,
    budget: usize,
}

fn resolve_index(i: i32, len: usize) -> Option<usize> {
    let len = len as i64;
    let i = i as i64;
    let idx = if i >= 1 { i - 1 } else if i <= -1 { len + i } else { return None };
    (0..len).contains(&idx).then_some(idx as usize)
}

impl MachineState {
    pub fn new(world: WorldState, utterances: usize, budget: usize) -> Self {
        MachineState {
            world,
            stack: Vec::new(),
            history: Vec::new(),
            pointer: 1,
            utterance_tokens: 0,
            utterances,
            budget,
        }
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn stack(&self) -> &[Value] {
        &self.stack
    }

    pub fn history(&self) -> &[HistoryEntry] {
        &self.history
    }

    /// 1-based utterance pointer.
    pub fn pointer(&self) -> usize {
        self.pointer
    }

    pub fn utterances(&self) -> usize {
        self.utterances
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn utterance_tokens(&self) -> usize {
        self.utterance_tokens
    }

    pub fn is_terminal(&self) -> bool {
        self.pointer > self.utterances
    }

    pub fn step(&self, token: Token) -> Result<MachineState, ExecError> {
        if self.is_terminal() {
            return Err(ExecError::Terminated);
        }
        if self.utterance_tokens + 1 > self.budget {
            return Err(ExecError::BudgetExceeded(self.budget));
        }
        let mut next = self.clone();
        next.utterance_tokens += 1;
        next.exec(token)?;
        Ok(next)
    }

    /// `prevArg{j}`: replace the number on top with the j-th argument of that action.
    pub fn step_prev_arg(&self, j: u8) -> Result<MachineState, ExecError> {
        self.step(Token::PrevArg(j))
    }

    /// `prevAction`: rerun a past action on the arguments below the index.
    pub fn step_prev_action(&self) -> Result<MachineState, ExecError> {
        self.step(Token::PrevAction)
    }

    /// Tokens of `vocab` that `step` accepts, with their successor states.
    pub fn expand(&self, vocab: &Vocabulary) -> Vec<(TokenId, MachineState)> {
        vocab
            .tokens()
            .iter()
            .enumerate()
            .filter_map(|(id, &t)| self.step(t).ok().map(|s| (id, s)))
            .collect()
    }

    pub fn valid_continuations(&self, vocab: &Vocabulary) -> Vec<TokenId> {
        vocab
            .tokens()
            .iter()
            .enumerate()
            .filter(|(_, &t)| self.step(t).is_ok())
            .map(|(id, _)| id)
            .collect()
    }

    fn domain(&self) -> Domain {
        self.world.domain()
    }

    fn push(&mut self, v: Value) -> Result<(), ExecError> {
        if self.stack.len() >= MAX_STACK {
            return Err(ExecError::StackOverflow);
        }
        self.stack.push(v);
        Ok(())
    }

    fn pop(&mut self) -> Result<Value, ExecError> {
        self.stack.pop().ok_or(ExecError::StackUnderflow)
    }

    fn pop_number(&mut self) -> Result<i32, ExecError> {
        match self.pop()? {
            Value::Number(n) => Ok(n),
            _ => Err(ExecError::TypeMismatch { expected: "number" }),
        }
    }

    fn pop_color(&mut self) -> Result<Color, ExecError> {
        match self.pop()? {
            Value::Color(c) => Ok(c),
            _ => Err(ExecError::TypeMismatch { expected: "color" }),
        }
    }

    fn require(&self, domain: Domain) -> Result<(), ExecError> {
        if self.domain() == domain {
            Ok(())
        } else {
            Err(ExecError::WrongDomain(self.domain()))
        }
    }

    fn all_objects(&self) -> Vec<Object> {
        match &self.world {
            WorldState::Alchemy(w) => (0..w.beakers().len()).map(Object::Beaker).collect(),
            WorldState::Tangrams(w) => w.row().iter().map(|&p| Object::Tangram(p)).collect(),
            WorldState::Scene(w) => {
                w.people().map(|(slot, person)| Object::Person(PersonRef { slot, person })).collect()
            }
        }
    }

    fn push_selection(&mut self, objects: Vec<Object>) -> Result<(), ExecError> {
        if objects.is_empty() {
            return Err(ExecError::EmptySelection);
        }
        self.push(Value::List(objects))
    }

    fn people_where(&self, pred: impl Fn(&Person) -> bool) -> Result<Vec<Object>, ExecError> {
        self.require(Domain::Scene)?;
        let WorldState::Scene(w) = &self.world else { unreachable!() };
        Ok(w.people()
            .filter(|(_, p)| pred(p))
            .map(|(slot, person)| Object::Person(PersonRef { slot, person }))
            .collect())
    }

    fn exec(&mut self, token: Token) -> Result<(), ExecError> {
        match token {
            Token::Number(n) => self.push(Value::Number(n)),
            Token::Fraction => {
                self.require(Domain::Alchemy)?;
                self.push(Value::Fraction)
            }
            Token::Color(c) => {
                let known = self.domain().colors().contains(&c)
                    || (c == Color::NoHat && self.domain() == Domain::Scene);
                if !known {
                    return Err(ExecError::WrongDomain(self.domain()));
                }
                self.push(Value::Color(c))
            }
            Token::AllObjects => {
                let all = self.all_objects();
                self.push_selection(all)
            }
            Token::Index => {
                let i = self.pop_number()?;
                let Value::List(list) = self.pop()? else {
                    return Err(ExecError::TypeMismatch { expected: "list" });
                };
                let idx = resolve_index(i, list.len()).ok_or(ExecError::Range(i))?;
                self.push(Value::Object(list[idx]))
            }
            Token::PrevArg(j) => {
                let i = self.pop_number()?;
                let idx = resolve_index(i, self.history.len()).ok_or(ExecError::Range(i))?;
                let arg = self.history[idx]
                    .args
                    .get(j as usize - 1)
                    .cloned()
                    .ok_or(ExecError::Range(j as i32))?;
                self.push(arg)
            }
            Token::HasColor => {
                self.require(Domain::Alchemy)?;
                let c = self.pop_color()?;
                let WorldState::Alchemy(w) = &self.world else { unreachable!() };
                let beakers = (0..w.beakers().len())
                    .filter(|&i| w.uniform_color(i) == Some(c))
                    .map(Object::Beaker)
                    .collect();
                self.push_selection(beakers)
            }
            Token::HasShirt => {
                let c = self.pop_color()?;
                let people = self.people_where(|p| p.shirt == c)?;
                self.push_selection(people)
            }
            Token::HasHat => {
                let c = self.pop_color()?;
                let people = self.people_where(|p| p.hat == c)?;
                self.push_selection(people)
            }
            Token::HasShirtHat => {
                let hat = self.pop_color()?;
                let shirt = self.pop_color()?;
                let people = self.people_where(|p| p.shirt == shirt && p.hat == hat)?;
                self.push_selection(people)
            }
            Token::LeftOf | Token::RightOf => {
                self.require(Domain::Scene)?;
                let v = self.pop()?;
                let slot = self.person_slot(v)?.1;
                let pos = slot as i32 + 1 + if token == Token::LeftOf { -1 } else { 1 };
                if !(1..=SCENE_POSITIONS as i32).contains(&pos) {
                    return Err(ExecError::Range(pos));
                }
                self.push(Value::Number(pos))
            }
            Token::Action(kind) => self.perform(kind),
            Token::PrevAction => {
                let i = self.pop_number()?;
                let idx = resolve_index(i, self.history.len()).ok_or(ExecError::Range(i))?;
                let kind = self.history[idx].action;
                self.perform(kind)
            }
        }
    }

    fn single_object(v: Value) -> Option<Object> {
        match v {
            Value::Object(o) => Some(o),
            Value::List(list) if list.len() == 1 => Some(list[0]),
            _ => None,
        }
    }

    fn person_slot(&self, v: Value) -> Result<(PersonRef, usize), ExecError> {
        match Self::single_object(v) {
            Some(Object::Person(r)) => {
                let slot = r.resolve(&self.world).ok_or(WorldError::Absent)?;
                Ok((r, slot))
            }
            _ => Err(ExecError::TypeMismatch { expected: "person" }),
        }
    }

    fn perform(&mut self, kind: ActionKind) -> Result<(), ExecError> {
        let domain = match kind {
            ActionKind::Drain | ActionKind::Pour | ActionKind::Mix => Domain::Alchemy,
            ActionKind::Swap | ActionKind::Remove | ActionKind::Add => Domain::Tangrams,
            _ => Domain::Scene,
        };
        self.require(domain)?;
        let sig = kind.signature();
        if self.stack.len() < sig.len() {
            return Err(ExecError::StackUnderflow);
        }
        let raw = self.stack.split_off(self.stack.len() - sig.len());
        if !self.stack.is_empty() {
            return Err(ExecError::NonEmptyStackAfterAction);
        }
        let mut args = Vec::with_capacity(raw.len());
        let mut resolved = Vec::with_capacity(raw.len());
        for (v, &ty) in raw.into_iter().zip(sig) {
            let (value, arg) = self.coerce(v, ty)?;
            args.push(value);
            resolved.push(arg);
        }
        let action = build_action(kind, &resolved);
        self.world = apply_action(&self.world, &action)?;
        self.history.push(HistoryEntry { action: kind, args });
        self.pointer += 1;
        self.utterance_tokens = 0;
        Ok(())
    }

    fn coerce(&self, v: Value, ty: ArgType) -> Result<(Value, Arg), ExecError> {
        match ty {
            ArgType::Number => match v {
                Value::Number(n) => Ok((v, Arg::Number(n))),
                _ => Err(ExecError::TypeMismatch { expected: "number" }),
            },
            ArgType::Amount => match v {
                Value::Number(n) => Ok((v, Arg::Amount(Amount::Units(n)))),
                Value::Fraction => Ok((v, Arg::Amount(Amount::All))),
                _ => Err(ExecError::TypeMismatch { expected: "amount" }),
            },
            ArgType::Color => match v {
                Value::Color(c) => Ok((v, Arg::Color(c))),
                _ => Err(ExecError::TypeMismatch { expected: "color" }),
            },
            ArgType::Beaker => match Self::single_object(v) {
                Some(o @ Object::Beaker(i)) => Ok((Value::Object(o), Arg::Object(i))),
                _ => Err(ExecError::TypeMismatch { expected: "beaker" }),
            },
            ArgType::Tangram => match Self::single_object(v) {
                Some(o @ Object::Tangram(p)) => Ok((Value::Object(o), Arg::Piece(p))),
                _ => Err(ExecError::TypeMismatch { expected: "tangram" }),
            },
            ArgType::Person => {
                let (r, slot) = self.person_slot(v)?;
                let current = PersonRef { slot, person: r.person };
                Ok((Value::Object(Object::Person(current)), Arg::Object(slot)))
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Arg {
    Number(i32),
    Amount(Amount),
    Color(Color),
    Object(usize),
    Piece(u8),
}

fn build_action(kind: ActionKind, args: &[Arg]) -> Action {
    use Arg::*;
    match (kind, args) {
        (ActionKind::Drain, [Object(beaker), Amount(amount)]) => {
            Action::Drain { beaker: *beaker, amount: *amount }
        }
        (ActionKind::Pour, [Object(from), Object(to)]) => Action::Pour { from: *from, to: *to },
        (ActionKind::Mix, [Object(beaker)]) => Action::Mix { beaker: *beaker },
        (ActionKind::Swap, [Piece(first), Piece(second)]) => {
            Action::Swap { first: *first, second: *second }
        }
        (ActionKind::Remove, [Piece(piece)]) => Action::Remove { piece: *piece },
        (ActionKind::Add, [Number(position), Piece(piece)]) => {
            Action::Add { position: *position, piece: *piece }
        }
        (ActionKind::Create, [Number(position), Color(shirt), Color(hat)]) => {
            Action::Create { position: *position, shirt: *shirt, hat: *hat }
        }
        (ActionKind::Move, [Object(slot), Number(position)]) => {
            Action::Move { slot: *slot, position: *position }
        }
        (ActionKind::SwapHats, [Object(first), Object(second)]) => {
            Action::SwapHats { first: *first, second: *second }
        }
        (ActionKind::Leave, [Object(slot)]) => Action::Leave { slot: *slot },
        _ => unreachable!("arguments already checked against the signature"),
    }
}

/// Runs a whole program; succeeds only if it executes exactly `utterances` actions.
pub fn execute(
    program: &[Token],
    start: &WorldState,
    utterances: usize,
    budget: usize,
) -> Result<WorldState, ExecError> {
    let mut state = MachineState::new(start.clone(), utterances, budget);
    for &t in program {
        state = state.step(t)?;
    }
    if !state.is_terminal() {
        return Err(ExecError::IncompleteProgram { expected: utterances, got: state.history.len() });
    }
    Ok(state.world)
}

/// Like [`execute`] but with token ids.
pub fn execute_ids(
    vocab: &Vocabulary,
    program: &[TokenId],
    start: &WorldState,
    utterances: usize,
    budget: usize,
) -> Result<WorldState, ExecError> {
    let tokens: Vec<Token> = program.iter().map(|&id| vocab.token(id)).collect();
    execute(&tokens, start, utterances, budget)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::worlds::{AlchemyWorld, SceneWorld, TangramsWorld};
    use Color::*;

    fn scene(people: &[(usize, Color, Color)]) -> WorldState {
        let mut slots = [None; SCENE_POSITIONS];
        for &(pos, shirt, hat) in people {
            slots[pos - 1] = Some(Person { shirt, hat });
        }
        WorldState::Scene(SceneWorld::new(slots).unwrap())
    }

    fn tangrams(row: &[u8]) -> WorldState {
        WorldState::Tangrams(TangramsWorld::new(row.to_vec(), BTreeSet::new()).unwrap())
    }

    fn run(vocab: &Vocabulary, state: MachineState, text: &str) -> Result<MachineState, ExecError> {
        let mut s = state;
        for id in vocab.parse_program(text).unwrap() {
            s = s.step(vocab.token(id))?;
        }
        Ok(s)
    }

    #[test]
    fn swap_exchanges_pieces_and_advances_pointer() {
        let v = Vocabulary::new(Domain::Tangrams);
        let s0 = MachineState::new(tangrams(&[5, 6, 7]), 2, DEFAULT_BUDGET);
        let s = run(&v, s0, "allObjects 1 index allObjects 3 index swap").unwrap();
        let WorldState::Tangrams(t) = s.world() else { unreachable!() };
        assert_eq!(t.row(), &[7, 6, 5]);
        assert!(s.stack().is_empty());
        assert_eq!(s.pointer(), 2);
        assert_eq!(s.history().len(), 1);
    }

    #[test]
    fn negative_index_counts_from_end() {
        let v = Vocabulary::new(Domain::Tangrams);
        let s0 = MachineState::new(tangrams(&[5, 6, 7]), 1, DEFAULT_BUDGET);
        let s = run(&v, s0, "allObjects -1 index").unwrap();
        assert_eq!(s.stack(), &[Value::Object(Object::Tangram(7))]);
    }

    #[test]
    fn all_objects_pushes_every_object() {
        let v = Vocabulary::new(Domain::Alchemy);
        let s0 = MachineState::new(WorldState::Alchemy(AlchemyWorld::empty()), 1, DEFAULT_BUDGET);
        let s = run(&v, s0, "allObjects").unwrap();
        assert_eq!(s.stack(), &[Value::List((0..7).map(Object::Beaker).collect())]);
    }

    #[test]
    fn action_on_empty_stack_underflows() {
        let s0 = MachineState::new(WorldState::Alchemy(AlchemyWorld::empty()), 1, DEFAULT_BUDGET);
        assert_eq!(s0.step(Token::Action(ActionKind::Pour)), Err(ExecError::StackUnderflow));
    }

    #[test]
    fn leftover_values_invalidate_action() {
        let v = Vocabulary::new(Domain::Tangrams);
        let s0 = MachineState::new(tangrams(&[5, 6]), 1, DEFAULT_BUDGET);
        let err = run(&v, s0, "3 allObjects 1 index remove").unwrap_err();
        assert_eq!(err, ExecError::NonEmptyStackAfterAction);
    }

    #[test]
    fn stack_is_capped() {
        let v = Vocabulary::new(Domain::Tangrams);
        let s0 = MachineState::new(tangrams(&[5, 6]), 1, DEFAULT_BUDGET);
        assert_eq!(run(&v, s0, "1 2 3 4").unwrap_err(), ExecError::StackOverflow);
    }

    #[test]
    fn budget_is_enforced_per_utterance() {
        let v = Vocabulary::new(Domain::Tangrams);
        let s0 = MachineState::new(tangrams(&[5, 6]), 2, 4);
        // Four tokens fit, the fifth does not; the budget resets after the action.
        let s = run(&v, s0.clone(), "allObjects 1 index 1").unwrap();
        assert_eq!(s.step(Token::Number(1)), Err(ExecError::BudgetExceeded(4)));
        let s = run(&v, s0, "allObjects 1 index remove allObjects 1 index").unwrap();
        assert_eq!(s.utterance_tokens(), 3);
    }

    #[test]
    fn prev_arg_pushes_recorded_argument() {
        let v = Vocabulary::new(Domain::Scene);
        let w = scene(&[(2, Red, NoHat)]);
        let s = run(&v, MachineState::new(w, 3, DEFAULT_BUDGET), "red hasShirt 5 move").unwrap();
        let s1 = run(&v, s.clone(), "1").unwrap().step_prev_arg(2).unwrap();
        assert_eq!(s1.stack(), &[Value::Number(5)]);
        let s2 = run(&v, s.clone(), "-1").unwrap().step_prev_arg(2).unwrap();
        assert_eq!(s2.stack(), &[Value::Number(5)]);
        let s3 = run(&v, s, "3").unwrap();
        assert_eq!(s3.step_prev_arg(2), Err(ExecError::Range(3)));
    }

    #[test]
    fn prev_arg_person_follows_a_moved_person() {
        // "he moves back": the recorded person has moved but is still unique.
        let v = Vocabulary::new(Domain::Scene);
        let w = scene(&[(2, Red, NoHat), (7, Blue, Green)]);
        let s = run(&v, MachineState::new(w, 2, DEFAULT_BUDGET), "red hasShirt 5 move").unwrap();
        let s = run(&v, s, "1 prevArg1 2 move").unwrap();
        assert_eq!(s.world(), &scene(&[(2, Red, NoHat), (7, Blue, Green)]));
    }

    #[test]
    fn prev_action_replays_the_action_kind() {
        let v = Vocabulary::new(Domain::Tangrams);
        let s0 = MachineState::new(tangrams(&[5, 6, 7]), 2, DEFAULT_BUDGET);
        let s = run(&v, s0, "allObjects 1 index remove allObjects 1 index 1").unwrap();
        let s = s.step_prev_action().unwrap();
        let WorldState::Tangrams(t) = s.world() else { unreachable!() };
        assert_eq!(t.row(), &[7]);
        assert_eq!(s.history()[1].action, ActionKind::Remove);
        assert_eq!(s.pointer(), 3);

        let fresh = MachineState::new(tangrams(&[5]), 1, DEFAULT_BUDGET);
        let fresh = run(&v, fresh, "allObjects 1 index 1").unwrap();
        assert_eq!(fresh.step_prev_action(), Err(ExecError::Range(1)));
    }

    #[test]
    fn chained_prev_action_resolves_to_concrete_action() {
        // Hand trace: remove 5; prevAction(1) on 6 records `remove`; prevAction(2) on 7 is `remove` again.
        let v = Vocabulary::new(Domain::Tangrams);
        let s0 = MachineState::new(tangrams(&[5, 6, 7, 8]), 3, DEFAULT_BUDGET);
        let s = run(
            &v,
            s0,
            "allObjects 1 index remove allObjects 1 index 1 prevAction allObjects 1 index 2 prevAction",
        )
        .unwrap();
        let kinds: Vec<ActionKind> = s.history().iter().map(|h| h.action).collect();
        assert_eq!(kinds, vec![ActionKind::Remove; 3]);
        let WorldState::Tangrams(t) = s.world() else { unreachable!() };
        assert_eq!(t.row(), &[8]);
        assert!(s.is_terminal());
    }

    #[test]
    fn linearized_move_from_the_example() {
        // Yellow hat at slot 6, blue shirt at slot 4: the mover goes to slot 3.
        let v = Vocabulary::new(Domain::Scene);
        let w0 = scene(&[(4, Blue, NoHat), (6, Red, Yellow)]);
        let p: Vec<Token> = v
            .parse_program("yellow hasHat blue hasShirt leftOf move")
            .unwrap()
            .into_iter()
            .map(|id| v.token(id))
            .collect();
        let out = execute(&p, &w0, 1, DEFAULT_BUDGET).unwrap();
        assert_eq!(out, scene(&[(3, Red, Yellow), (4, Blue, NoHat)]));
    }

    #[test]
    fn empty_program_with_no_utterances() {
        let w0 = tangrams(&[1, 2]);
        assert_eq!(execute(&[], &w0, 0, DEFAULT_BUDGET).unwrap(), w0);
        assert_eq!(
            execute(&[], &w0, 1, DEFAULT_BUDGET),
            Err(ExecError::IncompleteProgram { expected: 1, got: 0 })
        );
    }

    #[test]
    fn double_swap_is_identity() {
        let v = Vocabulary::new(Domain::Tangrams);
        let w0 = tangrams(&[3, 1, 2]);
        let text = "allObjects 1 index allObjects 2 index swap allObjects 1 index allObjects 2 index swap";
        let p: Vec<Token> = v.parse_program(text).unwrap().into_iter().map(|id| v.token(id)).collect();
        assert_eq!(execute(&p, &w0, 2, DEFAULT_BUDGET).unwrap(), w0);
    }

    #[test]
    fn fresh_state_continuations() {
        let v = Vocabulary::new(Domain::Tangrams);
        let s0 = MachineState::new(tangrams(&[3, 1]), 1, DEFAULT_BUDGET);
        let valid = s0.valid_continuations(&v);
        assert!(!valid.contains(&v.id(Token::Action(ActionKind::Swap)).unwrap()));
        assert!(valid.contains(&v.id(Token::Number(1)).unwrap()));
    }

    #[test]
    fn person_on_stack_allows_leave_but_not_move() {
        let v = Vocabulary::new(Domain::Scene);
        let s0 = MachineState::new(scene(&[(1, Red, NoHat)]), 1, DEFAULT_BUDGET);
        let s = run(&v, s0, "red hasShirt").unwrap();
        let valid = s.valid_continuations(&v);
        assert!(valid.contains(&v.id(Token::Action(ActionKind::Leave)).unwrap()));
        assert!(!valid.contains(&v.id(Token::Action(ActionKind::Move)).unwrap()));
    }

    #[test]
    fn continuations_match_brute_force() {
        let v = Vocabulary::new(Domain::Scene);
        let s0 = MachineState::new(scene(&[(1, Red, NoHat), (2, Blue, Red)]), 2, DEFAULT_BUDGET);
        let s = run(&v, s0, "red hasShirt 3").unwrap();
        let brute: Vec<TokenId> =
            (0..v.len()).filter(|&id| s.step(v.token(id)).is_ok()).collect();
        assert_eq!(s.valid_continuations(&v), brute);
        let dead = v.len() - brute.len();
        assert_eq!(dead, v.len() - s.expand(&v).len());
    }
}
