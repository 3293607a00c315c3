//! Discriminative IOB tagging with BERT-style encoders.
//!
//! A linear classification layer over the encoder's last hidden state scores
//! each subword as O, B or I. Word labels live on the first subword of every
//! word; the remaining subwords are excluded from the loss and decoding.
//!
//! Checkpoints are local directories in the usual layout (`config.json`,
//! `vocab.txt`, `model.safetensors`). `builtin:tiny-bert` trains a small
//! encoder from scratch with a vocabulary built from the training set.

mod config;
mod encoding;
mod error;
mod model;
mod predict;
mod train;
pub mod wordpiece;

pub use config::{
    label_id, label_order_map, LabelsFile, ModelSource, TrainConfig, BUILTIN_TINY, CONFIG_FILE,
    LABELS_FILE, LABEL_ORDER, TRAIN_LOG_FILE, VOCAB_FILE, WEIGHTS_FILE,
};
pub use encoding::{encode_sentence, AlignedBatch};
pub use error::TaggerError;
pub use model::TokenClassifier;
pub use predict::{predict, Prediction, Tagger};
pub use train::{train, EpochLog, ModelHandle, TrainOutcome};
