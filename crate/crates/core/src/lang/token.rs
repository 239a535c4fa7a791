use std::collections::HashMap;
use std::fmt;

use crate::worlds::{Color, Domain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ActionKind {
    Drain,
    Pour,
    Mix,
    Swap,
    Remove,
    Add,
    Create,
    Move,
    SwapHats,
    Leave,
}

/// Argument types an action pops, bottom to top.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArgType {
    Number,
    /// Number or the `1/1` fraction.
    Amount,
    Color,
    Beaker,
    Tangram,
    Person,
}

impl ActionKind {
    pub fn name(self) -> &'static str {
        match self {
            ActionKind::Drain => "drain",
            ActionKind::Pour => "pour",
            ActionKind::Mix => "mix",
            ActionKind::Swap => "swap",
            ActionKind::Remove => "remove",
            ActionKind::Add => "add",
            ActionKind::Create => "create",
            ActionKind::Move => "move",
            ActionKind::SwapHats => "swapHats",
            ActionKind::Leave => "leave",
        }
    }

    pub fn signature(self) -> &'static [ArgType] {
        use ArgType::*;
        match self {
            ActionKind::Drain => &[Beaker, Amount],
            ActionKind::Pour => &[Beaker, Beaker],
            ActionKind::Mix => &[Beaker],
            ActionKind::Swap => &[Tangram, Tangram],
            ActionKind::Remove => &[Tangram],
            ActionKind::Add => &[Number, Tangram],
            ActionKind::Create => &[Number, Color, Color],
            ActionKind::Move => &[Person, Number],
            ActionKind::SwapHats => &[Person, Person],
            ActionKind::Leave => &[Person],
        }
    }

    pub fn arity(self) -> usize {
        self.signature().len()
    }

    pub fn for_domain(domain: Domain) -> &'static [ActionKind] {
        use ActionKind::*;
        match domain {
            Domain::Alchemy => &[Drain, Pour, Mix],
            Domain::Tangrams => &[Swap, Remove, Add],
            Domain::Scene => &[Create, Move, SwapHats, Leave],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Token {
    Number(i32),
    /// `1/1`, the whole-beaker fraction.
    Fraction,
    Color(Color),
    AllObjects,
    Index,
    /// `prevArg1` / `prevArg2`.
    PrevArg(u8),
    PrevAction,
    HasColor,
    HasShirt,
    HasHat,
    HasShirtHat,
    LeftOf,
    RightOf,
    Action(ActionKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Constant,
    Function,
    Action,
}

impl Token {
    pub fn kind(self) -> TokenKind {
        match self {
            Token::Number(_) | Token::Fraction | Token::Color(_) | Token::AllObjects => {
                TokenKind::Constant
            }
            Token::PrevAction | Token::Action(_) => TokenKind::Action,
            _ => TokenKind::Function,
        }
    }

    pub fn is_action(self) -> bool {
        self.kind() == TokenKind::Action
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Number(n) => write!(f, "{n}"),
            Token::Fraction => f.write_str("1/1"),
            Token::Color(c) => f.write_str(c.name()),
            Token::AllObjects => f.write_str("allObjects"),
            Token::Index => f.write_str("index"),
            Token::PrevArg(j) => write!(f, "prevArg{j}"),
            Token::PrevAction => f.write_str("prevAction"),
            Token::HasColor => f.write_str("hasColor"),
            Token::HasShirt => f.write_str("hasShirt"),
            Token::HasHat => f.write_str("hasHat"),
            Token::HasShirtHat => f.write_str("hasShirtHat"),
            Token::LeftOf => f.write_str("leftOf"),
            Token::RightOf => f.write_str("rightOf"),
            Token::Action(a) => f.write_str(a.name()),
        }
    }
}

/// Index of a token in a [`Vocabulary`]'s table.
pub type TokenId = usize;

/// Integer constants available to programs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NumberSet {
    pub positive: std::ops::RangeInclusive<i32>,
    pub negative: std::ops::RangeInclusive<i32>,
}

impl Default for NumberSet {
    fn default() -> Self {
        NumberSet { positive: 1..=10, negative: -5..=-1 }
    }
}

/// The token table for one domain. Table order is the tie-break order used by
/// search and enumeration.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    domain: Domain,
    tokens: Vec<Token>,
    ids: HashMap<Token, TokenId>,
}

impl Vocabulary {
    pub fn new(domain: Domain) -> Self {
        Self::with_numbers(domain, &NumberSet::default())
    }

    pub fn with_numbers(domain: Domain, numbers: &NumberSet) -> Self {
        let mut tokens = Vec::new();
        tokens.extend(numbers.positive.clone().map(Token::Number));
        tokens.extend(numbers.negative.clone().rev().map(Token::Number));
        tokens.extend(domain.colors().iter().map(|&c| Token::Color(c)));
        tokens.extend([
            Token::AllObjects,
            Token::Index,
            Token::PrevArg(1),
            Token::PrevArg(2),
            Token::PrevAction,
        ]);
        match domain {
            Domain::Alchemy => tokens.extend([Token::Fraction, Token::HasColor]),
            Domain::Tangrams => {}
            Domain::Scene => tokens.extend([
                Token::Color(Color::NoHat),
                Token::HasShirt,
                Token::HasHat,
                Token::HasShirtHat,
                Token::LeftOf,
                Token::RightOf,
            ]),
        }
        tokens.extend(ActionKind::for_domain(domain).iter().map(|&a| Token::Action(a)));
        let ids = tokens.iter().enumerate().map(|(i, &t)| (t, i)).collect();
        Vocabulary { domain, tokens, ids }
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn token(&self, id: TokenId) -> Token {
        self.tokens[id]
    }

    pub fn id(&self, token: Token) -> Option<TokenId> {
        self.ids.get(&token).copied()
    }

    pub fn parse_token(&self, name: &str) -> Option<TokenId> {
        self.tokens.iter().position(|t| t.to_string() == name)
    }

    /// Parses the whitespace-separated text form of a program.
    pub fn parse_program(&self, text: &str) -> Result<Vec<TokenId>, String> {
        text.split_whitespace()
            .map(|w| self.parse_token(w).ok_or_else(|| format!("unknown token `{w}` for {}", self.domain)))
            .collect()
    }

    pub fn format_program(&self, program: &[TokenId]) -> String {
        let words: Vec<String> = program.iter().map(|&id| self.tokens[id].to_string()).collect();
        words.join(" ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vocabulary_sizes() {
        assert_eq!(Vocabulary::new(Domain::Alchemy).len(), 15 + 6 + 5 + 2 + 3);
        assert_eq!(Vocabulary::new(Domain::Tangrams).len(), 15 + 5 + 3);
        assert_eq!(Vocabulary::new(Domain::Scene).len(), 15 + 6 + 5 + 6 + 4);
    }

    #[test]
    fn program_text_round_trips() {
        let v = Vocabulary::new(Domain::Scene);
        let text = "yellow hasHat blue hasShirt leftOf move";
        let p = v.parse_program(text).unwrap();
        assert_eq!(v.format_program(&p), text);
        assert!(v.parse_program("pour").is_err());
    }

    #[test]
    fn token_names_are_unique() {
        for d in Domain::ALL {
            let v = Vocabulary::new(d);
            for (i, t) in v.tokens().iter().enumerate() {
                assert_eq!(v.parse_token(&t.to_string()), Some(i));
            }
        }
    }
}
