use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use candle_core::{DType, Device};
use candle_nn::{AdamW, Optimizer, ParamsAdamW, VarBuilder, VarMap};
use candle_transformers::models::bert::Config as BertConfig;
use metaflora_core::corpus::iob_violations;
use metaflora_core::Dataset;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{
    label_order_map, LabelsFile, ModelSource, TrainConfig, CONFIG_FILE, LABELS_FILE, TRAIN_LOG_FILE,
    VOCAB_FILE, WEIGHTS_FILE,
};
use crate::encoding::{encode_sentence, AlignedBatch};
use crate::error::TaggerError;
use crate::model::{
    batch_tensors, config_json, load_encoder_weights, masked_cross_entropy, seeded_init, tiny_config,
    TokenClassifier,
};
use crate::wordpiece::WordPiece;

/// A trained model on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelHandle {
    pub config: TrainConfig,
    pub artifact_path: PathBuf,
}

/// One line of `train_log.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub mean_loss: f64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub handle: ModelHandle,
    pub epochs: Vec<EpochLog>,
    /// Sentences whose tail did not fit in `max_sequence_length`.
    pub truncated_sentences: usize,
}

impl TrainOutcome {
    pub fn loss_decreased(&self) -> bool {
        match (self.epochs.first(), self.epochs.last()) {
            (Some(first), Some(last)) => last.mean_loss < first.mean_loss,
            _ => false,
        }
    }
}

/// Exclusive claim on an artifact directory for the duration of a run.
struct DirLock(PathBuf);

impl DirLock {
    fn acquire(dir: &Path) -> Result<Self, TaggerError> {
        let path = dir.join(".train.lock");
        OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
            .map_err(|e| TaggerError::Artifact {
                path: dir.to_path_buf(),
                message: format!("cannot lock for training ({e}); remove {} if no run is active", path.display()),
            })?;
        Ok(Self(path))
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

/// Fine-tune a token classifier on `train_set` and write the artifact
/// directory.
pub fn train(train_set: &Dataset, config: &TrainConfig, artifact_dir: &Path) -> Result<TrainOutcome, TaggerError> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(TaggerError::EmptyTrainingSet);
    }
    for (index, s) in train_set.sentences.iter().enumerate() {
        let positions = iob_violations(&s.tags);
        if !positions.is_empty() || s.tokens.len() != s.tags.len() || s.is_empty() {
            return Err(TaggerError::InvalidTraining { index, positions });
        }
    }

    let device = Device::Cpu;
    let source = ModelSource::resolve(&config.model_id)?;
    let (tokenizer, bert_config, lowercase) = match &source {
        ModelSource::Builtin => {
            let lowercase = config.lowercase.unwrap_or(true);
            let words = train_set.sentences.iter().flat_map(|s| s.tokens.iter().map(String::as_str));
            let tok = WordPiece::build(words, lowercase, 1);
            let bc = tiny_config(tok.vocab_size(), config.max_sequence_length.max(8));
            (tok, bc, lowercase)
        }
        ModelSource::Checkpoint { dir, lowercase } => {
            let lowercase = config.lowercase.unwrap_or(*lowercase);
            let bc = read_bert_config(&dir.join(CONFIG_FILE))?;
            let tok = WordPiece::from_file(&dir.join(VOCAB_FILE), lowercase)?;
            (tok, bc, lowercase)
        }
    };
    if tokenizer.vocab_size() != bert_config.vocab_size {
        return Err(TaggerError::TokenizerMismatch {
            tokenizer: tokenizer.vocab_size(),
            model: bert_config.vocab_size,
        });
    }
    let max_len = config.max_sequence_length.min(bert_config.max_position_embeddings);

    let varmap = VarMap::new();
    let vb = VarBuilder::from_varmap(&varmap, DType::F32, &device);
    let model = TokenClassifier::new(vb, &bert_config)?;
    seeded_init(&varmap, config.seed, bert_config.initializer_range)?;
    if let ModelSource::Checkpoint { dir, .. } = &source {
        load_encoder_weights(&varmap, &dir.join(WEIGHTS_FILE), &device)?;
    }

    let encoded = train_set
        .sentences
        .iter()
        .map(|s| encode_sentence(&tokenizer, &s.tokens, Some(&s.tags), max_len))
        .collect::<Result<Vec<AlignedBatch>, _>>()?;
    let truncated_sentences = encoded.iter().filter(|e| e.truncated()).count();

    fs::create_dir_all(artifact_dir)?;
    let _lock = DirLock::acquire(artifact_dir)?;

    let mut optimizer = AdamW::new(
        varmap.all_vars(),
        ParamsAdamW {
            lr: config.learning_rate,
            weight_decay: config.weight_decay,
            ..ParamsAdamW::default()
        },
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..encoded.len()).collect();
    let mut log = BufWriter::new(File::create(artifact_dir.join(TRAIN_LOG_FILE))?);
    let mut epochs = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        let started = Instant::now();
        order.shuffle(&mut rng);
        let (mut loss_sum, mut batches) = (0.0f64, 0usize);
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&AlignedBatch> = chunk.iter().map(|&i| &encoded[i]).collect();
            let (ids, mask, labels, label_mask) = batch_tensors(&batch, tokenizer.pad_id(), &device)?;
            let logits = model.forward(&ids, &mask)?;
            let loss = masked_cross_entropy(&logits, &labels, &label_mask)?;
            let value = loss.to_scalar::<f32>()? as f64;
            if !value.is_finite() {
                return Err(TaggerError::NonFiniteLoss { epoch });
            }
            optimizer.backward_step(&loss)?;
            loss_sum += value;
            batches += 1;
        }
        let entry = EpochLog {
            epoch,
            mean_loss: loss_sum / batches as f64,
            wall_time_s: started.elapsed().as_secs_f64(),
        };
        serde_json::to_writer(&mut log, &entry)?;
        log.write_all(b"\n")?;
        epochs.push(entry);
    }
    log.flush()?;

    let mut recorded = config.clone();
    recorded.lowercase = Some(lowercase);
    varmap.save(artifact_dir.join(WEIGHTS_FILE))?;
    tokenizer.save(&artifact_dir.join(VOCAB_FILE))?;
    let config_value = match &source {
        ModelSource::Builtin => config_json(&bert_config),
        ModelSource::Checkpoint { dir, .. } => serde_json::from_str(&fs::read_to_string(dir.join(CONFIG_FILE))?)?,
    };
    fs::write(artifact_dir.join(CONFIG_FILE), serde_json::to_string_pretty(&config_value)?)?;
    let labels = LabelsFile {
        label_order: label_order_map(),
        train_config: recorded.clone(),
    };
    fs::write(artifact_dir.join(LABELS_FILE), serde_json::to_string_pretty(&labels)?)?;

    Ok(TrainOutcome {
        handle: ModelHandle {
            config: recorded,
            artifact_path: artifact_dir.to_path_buf(),
        },
        epochs,
        truncated_sentences,
    })
}

pub(crate) fn read_bert_config(path: &Path) -> Result<BertConfig, TaggerError> {
    let text = fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    match value.get("model_type").and_then(|v| v.as_str()) {
        None | Some("bert") => {}
        Some(other) => return Err(TaggerError::UnsupportedArchitecture(other.to_string())),
    }
    serde_json::from_value(value).map_err(|e| TaggerError::Artifact {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
