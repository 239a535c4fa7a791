//! Type-level reachability: can the current utterance still end in an action
//! within its remaining token budget? Values are abstracted to their types and
//! world-dependent failures are ignored, so a `false` answer is definitive.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::machine::{MachineState, Value, MAX_STACK};
use super::token::{ActionKind, ArgType, Token, Vocabulary};
use crate::worlds::Domain;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ty {
    Num,
    Frac,
    Color,
    Obj,
    List,
}

const TYPES: [Ty; 5] = [Ty::Num, Ty::Frac, Ty::Color, Ty::Obj, Ty::List];

fn ty_of(v: &Value) -> Ty {
    match v {
        Value::Number(_) => Ty::Num,
        Value::Fraction => Ty::Frac,
        Value::Color(_) => Ty::Color,
        Value::Object(_) => Ty::Obj,
        Value::List(_) => Ty::List,
    }
}

fn code(stack: &[Ty]) -> usize {
    stack.iter().fold(0, |c, &t| c * 6 + 1 + TYPES.iter().position(|&x| x == t).unwrap())
}

fn arg_accepts(arg: ArgType, t: Ty) -> bool {
    match arg {
        ArgType::Number => t == Ty::Num,
        ArgType::Amount => matches!(t, Ty::Num | Ty::Frac),
        ArgType::Color => t == Ty::Color,
        ArgType::Beaker | ArgType::Tangram | ArgType::Person => matches!(t, Ty::Obj | Ty::List),
    }
}

fn action_fits(kind: ActionKind, stack: &[Ty]) -> bool {
    let sig = kind.signature();
    stack.len() == sig.len() && sig.iter().zip(stack).all(|(&a, &t)| arg_accepts(a, t))
}

enum Outcome {
    Finishes,
    Stacks(Vec<Vec<Ty>>),
}

/// Abstract effect of one token, or `None` when it cannot apply.
fn effect(token: Token, domain: Domain, stack: &[Ty], history: bool) -> Option<Outcome> {
    let push = |t: Ty| {
        let mut s = stack.to_vec();
        s.push(t);
        (s.len() <= MAX_STACK).then(|| Outcome::Stacks(vec![s]))
    };
    let top = stack.last().copied();
    let rest = &stack[..stack.len().saturating_sub(1)];
    let replace_top = |from: Ty, to: Ty| {
        (top == Some(from)).then(|| {
            let mut s = rest.to_vec();
            s.push(to);
            Outcome::Stacks(vec![s])
        })
    };
    match token {
        Token::Number(_) => push(Ty::Num),
        Token::Fraction => push(Ty::Frac),
        Token::Color(_) => push(Ty::Color),
        Token::AllObjects => push(Ty::List),
        Token::Index => (top == Some(Ty::Num) && rest.last() == Some(&Ty::List)).then(|| {
            let mut s = rest[..rest.len() - 1].to_vec();
            s.push(Ty::Obj);
            Outcome::Stacks(vec![s])
        }),
        Token::PrevArg(_) => (history && top == Some(Ty::Num)).then(|| {
            let outs = [Ty::Num, Ty::Frac, Ty::Color, Ty::Obj]
                .iter()
                .map(|&t| {
                    let mut s = rest.to_vec();
                    s.push(t);
                    s
                })
                .collect();
            Outcome::Stacks(outs)
        }),
        Token::HasColor | Token::HasShirt | Token::HasHat => replace_top(Ty::Color, Ty::List),
        Token::HasShirtHat => (top == Some(Ty::Color) && rest.last() == Some(&Ty::Color)).then(|| {
            let mut s = rest[..rest.len() - 1].to_vec();
            s.push(Ty::List);
            Outcome::Stacks(vec![s])
        }),
        Token::LeftOf | Token::RightOf => {
            matches!(top, Some(Ty::Obj | Ty::List)).then(|| {
                let mut s = rest.to_vec();
                s.push(Ty::Num);
                Outcome::Stacks(vec![s])
            })
        }
        Token::Action(kind) => action_fits(kind, stack).then_some(Outcome::Finishes),
        Token::PrevAction => (history
            && top == Some(Ty::Num)
            && ActionKind::for_domain(domain).iter().any(|&k| action_fits(k, rest)))
        .then_some(Outcome::Finishes),
    }
}

/// `table[history][r][code]`: from this abstract stack, with `r` tokens left.
struct Table {
    can: [Vec<Vec<bool>>; 2],
}

fn all_stacks() -> Vec<Vec<Ty>> {
    let mut out = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..MAX_STACK {
        let next: Vec<Vec<Ty>> = layer
            .iter()
            .flat_map(|s: &Vec<Ty>| {
                TYPES.iter().map(move |&t| {
                    let mut s = s.clone();
                    s.push(t);
                    s
                })
            })
            .collect();
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

fn build(domain: Domain, budget: usize) -> Table {
    let tokens: Vec<Token> = Vocabulary::new(domain).tokens().to_vec();
    let stacks = all_stacks();
    let size = stacks.iter().map(|s| code(s)).max().unwrap() + 1;
    let mut can = [vec![vec![false; size]; budget + 1], vec![vec![false; size]; budget + 1]];
    for (h, table) in can.iter_mut().enumerate() {
        for r in 1..=budget {
            for s in &stacks {
                let ok = tokens.iter().any(|&t| match effect(t, domain, s, h == 1) {
                    Some(Outcome::Finishes) => true,
                    Some(Outcome::Stacks(next)) => next.iter().any(|n| table[r - 1][code(n)]),
                    None => false,
                });
                table[r][code(s)] = ok;
            }
        }
    }
    Table { can }
}

fn table(domain: Domain, budget: usize) -> Arc<Table> {
    static CACHE: OnceLock<Mutex<HashMap<(Domain, usize), Arc<Table>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let mut guard = cache.lock().unwrap();
    guard.entry((domain, budget)).or_insert_with(|| Arc::new(build(domain, budget))).clone()
}

impl MachineState {
    /// False only if no token sequence within the remaining budget can end
    /// the current utterance with an action. Complete programs are viable.
    pub fn can_finish(&self) -> bool {
        if self.is_terminal() {
            return true;
        }
        let stack: Vec<Ty> = self.stack().iter().map(ty_of).collect();
        let left = self.budget() - self.utterance_tokens();
        let t = table(self.world().domain(), self.budget());
        t.can[usize::from(!self.history().is_empty())][left][code(&stack)]
    }

    /// Executable continuations that keep the program completable.
    pub fn expand_viable(&self, vocab: &Vocabulary) -> Vec<(super::TokenId, MachineState)> {
        self.expand(vocab).into_iter().filter(|(_, s)| s.can_finish()).collect()
    }
}
