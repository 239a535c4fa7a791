//! Dataset files, world text codec, decomposition and synthetic data.

mod codec;
mod dataset;
mod synthetic;

pub use codec::{parse_world, parse_world_with_pieces, serialize_world, tangram_pieces, CodecError};
pub use dataset::{
    decompose, parse_dataset, parse_dataset_str, tokenize_utterance, truncate, write_dataset,
    DataError, RawExample, TrainingExample,
};
pub use synthetic::{generate, generate_synthetic, random_world, GenerationError, SyntheticConfig};
