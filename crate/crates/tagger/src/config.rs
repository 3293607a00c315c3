use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use metaflora_core::Tag;
use serde::{Deserialize, Serialize};

use crate::error::TaggerError;

/// Name of the built-in encoder that is trained from random initialization.
pub const BUILTIN_TINY: &str = "builtin:tiny-bert";

/// Fine-tuning hyperparameters. Defaults: three epochs, learning rate 4e-5,
/// batch size 32.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// A checkpoint directory (`config.json`, `vocab.txt`,
    /// `model.safetensors`) or [`BUILTIN_TINY`].
    pub model_id: String,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Subword budget per sentence, including `[CLS]` and `[SEP]`.
    pub max_sequence_length: usize,
    /// `None` derives casing from the checkpoint.
    pub lowercase: Option<bool>,
    /// AdamW decoupled weight decay.
    pub weight_decay: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            model_id: BUILTIN_TINY.to_string(),
            epochs: 3,
            learning_rate: 4e-5,
            batch_size: 32,
            seed: 42,
            max_sequence_length: 128,
            lowercase: None,
            weight_decay: 0.01,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TaggerError> {
        let bad = |msg: String| Err(TaggerError::InvalidConfig(msg));
        if self.epochs < 1 {
            return bad("epochs must be at least 1".into());
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if self.batch_size < 1 {
            return bad("batch size must be at least 1".into());
        }
        if self.max_sequence_length < 3 {
            return bad("max sequence length must leave room for one subword".into());
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return bad(format!("weight decay must be non-negative, got {}", self.weight_decay));
        }
        Ok(())
    }
}

/// Fixed mapping between tags and classifier outputs.
pub const LABEL_ORDER: [Tag; 3] = [Tag::O, Tag::B, Tag::I];

pub fn label_id(tag: Tag) -> u32 {
    match tag {
        Tag::O => 0,
        Tag::B => 1,
        Tag::I => 2,
    }
}

pub fn label_order_map() -> BTreeMap<Tag, u32> {
    LABEL_ORDER.iter().map(|&t| (t, label_id(t))).collect()
}

/// Contents of `labels.json` in a model artifact directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelsFile {
    pub label_order: BTreeMap<Tag, u32>,
    pub train_config: TrainConfig,
}

/// Where the encoder weights come from.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSource {
    Builtin,
    Checkpoint { dir: PathBuf, lowercase: bool },
}

pub const CONFIG_FILE: &str = "config.json";
pub const VOCAB_FILE: &str = "vocab.txt";
pub const WEIGHTS_FILE: &str = "model.safetensors";
pub const LABELS_FILE: &str = "labels.json";
pub const TRAIN_LOG_FILE: &str = "train_log.jsonl";

impl ModelSource {
    pub fn resolve(model_id: &str) -> Result<Self, TaggerError> {
        if model_id == BUILTIN_TINY {
            return Ok(Self::Builtin);
        }
        let dir = Path::new(model_id);
        let complete = [CONFIG_FILE, VOCAB_FILE, WEIGHTS_FILE]
            .iter()
            .all(|f| dir.join(f).is_file());
        if !complete {
            return Err(TaggerError::UnknownModel(model_id.to_string()));
        }
        Ok(Self::Checkpoint {
            dir: dir.to_path_buf(),
            lowercase: checkpoint_lowercases(dir, model_id),
        })
    }
}

/// `do_lower_case` from `tokenizer_config.json` when present, otherwise
/// whether the checkpoint name says "uncased".
fn checkpoint_lowercases(dir: &Path, model_id: &str) -> bool {
    let from_config = std::fs::read_to_string(dir.join("tokenizer_config.json"))
        .ok()
        .and_then(|t| serde_json::from_str::<serde_json::Value>(&t).ok())
        .and_then(|v| v.get("do_lower_case").and_then(serde_json::Value::as_bool));
    from_config.unwrap_or_else(|| model_id.to_lowercase().contains("uncased"))
}
