//! Evaluation, analysis tools and the command-line front end.

mod analysis;
pub mod cli;
mod eval;

pub use analysis::{
    count_consistent, count_consistent_example, dump_predictions, gradcheck, relative_error, rewarded_entropy, top_k, ConsistentCount,
    GradcheckReport,
};
pub use eval::{decode, evaluate, evaluate_with, intermediate_worlds, median, EvalReport, EvalResult, ThreeUttsMode};
