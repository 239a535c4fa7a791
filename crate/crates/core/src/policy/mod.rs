//! The neural program policy, its parameters and optimizer.

mod adam;
pub mod checkpoint;
mod model;
mod params;
pub mod tensor;
mod words;

pub use adam::{Adam, OptimError};
pub use model::{Encoding, History, Input, Model, Prepared, StepTrace};
pub use params::{Dims, HistoryKind, Params, ValueTables, HISTORY_TOKENS, STACK_SLOTS};
pub use tensor::Matrix;
pub use words::{WordVectorError, WordVectors};
