//! Token vocabulary and the postfix stack machine that executes programs.

mod enumerate;
mod machine;
mod token;
mod viable;

pub use enumerate::{complete_utterance, enumerate_programs, ProgramEnumerator};
pub use machine::{
    execute, execute_ids, ExecError, HistoryEntry, MachineState, Object, PersonRef, Value,
    DEFAULT_BUDGET, MAX_STACK,
};
pub use token::{ActionKind, ArgType, NumberSet, Token, TokenId, TokenKind, Vocabulary};
