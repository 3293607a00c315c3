use std::fs;
use std::path::Path;

use candle_core::{DType, Device, D};
use candle_nn::VarBuilder;
use metaflora_core::alignment::decode_word_labels;
use metaflora_core::corpus::repair_tags;
use metaflora_core::{LabeledSentence, Tag};

use crate::config::{label_order_map, LabelsFile, TrainConfig, CONFIG_FILE, LABELS_FILE, LABEL_ORDER, VOCAB_FILE, WEIGHTS_FILE};
use crate::encoding::{encode_sentence, AlignedBatch};
use crate::error::TaggerError;
use crate::model::{batch_tensors, TokenClassifier};
use crate::train::{read_bert_config, ModelHandle};
use crate::wordpiece::WordPiece;

#[derive(Debug, Clone)]
pub struct Prediction {
    pub sentences: Vec<LabeledSentence>,
    /// Sentences whose tail was cut off and tagged `O`.
    pub truncated_sentences: usize,
}

/// A trained model loaded for inference. Immutable; `predict` may be called
/// from several threads at once.
pub struct Tagger {
    model: TokenClassifier,
    tokenizer: WordPiece,
    config: TrainConfig,
    max_len: usize,
    device: Device,
}

impl Tagger {
    pub fn load(artifact_dir: &Path) -> Result<Self, TaggerError> {
        let artifact_err = |message: String| TaggerError::Artifact {
            path: artifact_dir.to_path_buf(),
            message,
        };
        let labels: LabelsFile = serde_json::from_str(
            &fs::read_to_string(artifact_dir.join(LABELS_FILE))
                .map_err(|e| artifact_err(format!("reading {LABELS_FILE}: {e}")))?,
        )?;
        if labels.label_order != label_order_map() {
            return Err(artifact_err(format!(
                "label order {:?} differs from the fixed O=0, B=1, I=2",
                labels.label_order
            )));
        }
        let config = labels.train_config;
        let bert_config = read_bert_config(&artifact_dir.join(CONFIG_FILE))?;
        let tokenizer = WordPiece::from_file(&artifact_dir.join(VOCAB_FILE), config.lowercase.unwrap_or(false))?;
        if tokenizer.vocab_size() != bert_config.vocab_size {
            return Err(TaggerError::TokenizerMismatch {
                tokenizer: tokenizer.vocab_size(),
                model: bert_config.vocab_size,
            });
        }
        let device = Device::Cpu;
        let weights = artifact_dir.join(WEIGHTS_FILE);
        // SAFETY: the weights file is only read, and artifacts are not
        // rewritten while a model is loaded from them.
        let vb = unsafe { VarBuilder::from_mmaped_safetensors(&[weights], DType::F32, &device)? };
        let model = TokenClassifier::new(vb, &bert_config)?;
        Ok(Self {
            max_len: config.max_sequence_length.min(bert_config.max_position_embeddings),
            model,
            tokenizer,
            config,
            device,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    /// One IOB-valid tag sequence per input sentence, in input order.
    pub fn predict(&self, sentences: &[Vec<String>]) -> Result<Prediction, TaggerError> {
        let mut out: Vec<LabeledSentence> = sentences
            .iter()
            .map(|t| LabeledSentence::all_outside(t.clone()))
            .collect();
        let encoded: Vec<(usize, AlignedBatch)> = sentences
            .iter()
            .enumerate()
            .filter(|(_, s)| !s.is_empty())
            .map(|(i, s)| encode_sentence(&self.tokenizer, s, None, self.max_len).map(|e| (i, e)))
            .collect::<Result<_, _>>()?;
        let truncated_sentences = encoded.iter().filter(|(_, e)| e.truncated()).count();

        for chunk in encoded.chunks(self.config.batch_size.max(1)) {
            let batch: Vec<&AlignedBatch> = chunk.iter().map(|(_, e)| e).collect();
            let (ids, mask, _, _) = batch_tensors(&batch, self.tokenizer.pad_id(), &self.device)?;
            let best = self.model.forward(&ids, &mask)?.argmax(D::Minus1)?.to_vec2::<u32>()?;
            for ((index, e), row) in chunk.iter().zip(best) {
                if e.offsets.word_count() == 0 {
                    continue;
                }
                // drop [CLS]; offsets index the subwords after it
                let preds: Vec<Tag> = row[1..].iter().map(|&k| LABEL_ORDER[k as usize]).collect();
                let tags = decode_word_labels(&preds, &e.offsets)?;
                let target = &mut out[*index].tags;
                target[..tags.len()].copy_from_slice(&tags);
                repair_tags(target);
            }
        }
        Ok(Prediction {
            sentences: out,
            truncated_sentences,
        })
    }
}

/// Load the model behind `handle` and tag `sentences`.
pub fn predict(handle: &ModelHandle, sentences: &[Vec<String>]) -> Result<Prediction, TaggerError> {
    Tagger::load(&handle.artifact_path)?.predict(sentences)
}
