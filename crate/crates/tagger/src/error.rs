use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TaggerError {
    #[error("unknown model `{0}`: expected `builtin:tiny-bert` or a directory with config.json, vocab.txt and model.safetensors")]
    UnknownModel(String),
    #[error("unsupported checkpoint architecture `{0}` (only BERT-family encoders load)")]
    UnsupportedArchitecture(String),
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("training sentence {index} is not IOB-valid at positions {positions:?}")]
    InvalidTraining { index: usize, positions: Vec<usize> },
    #[error("training loss became non-finite in epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("tokenizer has {tokenizer} entries but the model expects {model}")]
    TokenizerMismatch { tokenizer: usize, model: usize },
    #[error("checkpoint is missing tensor `{0}`")]
    MissingTensor(String),
    #[error("model artifact {path}: {message}")]
    Artifact { path: PathBuf, message: String },
    #[error(transparent)]
    Align(#[from] metaflora_core::alignment::AlignError),
    #[error(transparent)]
    Vocab(#[from] crate::wordpiece::VocabError),
    #[error(transparent)]
    Candle(#[from] candle_core::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}
