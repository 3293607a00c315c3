use candle_core::{DType, Device, Tensor, D};
use candle_nn::{linear, Linear, Module, VarBuilder, VarMap};
use candle_transformers::models::bert::{BertModel, Config as BertConfig, HiddenAct};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::config::LABEL_ORDER;
use crate::encoding::AlignedBatch;
use crate::error::TaggerError;

/// BERT encoder with a linear layer over the last hidden state; softmax over
/// the three tags is applied in the loss and at decoding time.
pub struct TokenClassifier {
    encoder: BertModel,
    head: Linear,
}

impl TokenClassifier {
    pub fn new(vb: VarBuilder, config: &BertConfig) -> candle_core::Result<Self> {
        let encoder = BertModel::load(vb.pp("bert"), config)?;
        let head = linear(config.hidden_size, LABEL_ORDER.len(), vb.pp("classifier"))?;
        Ok(Self { encoder, head })
    }

    /// Logits of shape `(batch, seq, 3)`.
    pub fn forward(&self, ids: &Tensor, attention_mask: &Tensor) -> candle_core::Result<Tensor> {
        let token_types = ids.zeros_like()?;
        let hidden = self.encoder.forward(ids, &token_types, Some(attention_mask))?;
        self.head.forward(&hidden)
    }
}

/// Shape of the encoder trained from scratch.
pub fn tiny_config(vocab_size: usize, max_positions: usize) -> BertConfig {
    BertConfig {
        vocab_size,
        hidden_size: 64,
        num_hidden_layers: 2,
        num_attention_heads: 4,
        intermediate_size: 256,
        hidden_act: HiddenAct::Gelu,
        hidden_dropout_prob: 0.1,
        max_position_embeddings: max_positions,
        type_vocab_size: 2,
        initializer_range: 0.02,
        layer_norm_eps: 1e-12,
        pad_token_id: 0,
        classifier_dropout: None,
        model_type: Some("bert".into()),
        ..BertConfig::default()
    }
}

/// The fields of a HF-style `config.json` needed to rebuild [`tiny_config`].
pub fn config_json(c: &BertConfig) -> serde_json::Value {
    serde_json::json!({
        "architectures": ["BertForTokenClassification"],
        "model_type": "bert",
        "vocab_size": c.vocab_size,
        "hidden_size": c.hidden_size,
        "num_hidden_layers": c.num_hidden_layers,
        "num_attention_heads": c.num_attention_heads,
        "intermediate_size": c.intermediate_size,
        "hidden_act": "gelu",
        "hidden_dropout_prob": c.hidden_dropout_prob,
        "max_position_embeddings": c.max_position_embeddings,
        "type_vocab_size": c.type_vocab_size,
        "initializer_range": c.initializer_range,
        "layer_norm_eps": c.layer_norm_eps,
        "pad_token_id": c.pad_token_id,
    })
}

/// Overwrite every variable from a seeded generator: layer-norm scales 1,
/// biases 0, everything else N(0, std).
pub fn seeded_init(varmap: &VarMap, seed: u64, std: f64) -> Result<(), TaggerError> {
    let data = varmap.data().lock().unwrap();
    let mut names: Vec<&String> = data.keys().collect();
    names.sort();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0f32, std as f32).expect("valid std");
    for name in names {
        let var = &data[name];
        let shape = var.shape().clone();
        let value = if name.ends_with("LayerNorm.weight") {
            Tensor::ones(&shape, DType::F32, var.device())?
        } else if name.ends_with(".bias") {
            Tensor::zeros(&shape, DType::F32, var.device())?
        } else {
            let values: Vec<f32> = (0..shape.elem_count()).map(|_| normal.sample(&mut rng)).collect();
            Tensor::from_vec(values, &shape, var.device())?
        };
        var.set(&value)?;
    }
    Ok(())
}

fn checkpoint_key(name: &str) -> String {
    let name = name
        .replace("LayerNorm.gamma", "LayerNorm.weight")
        .replace("LayerNorm.beta", "LayerNorm.bias");
    if name.starts_with("bert.") {
        name
    } else {
        format!("bert.{name}")
    }
}

/// Copy encoder weights from a safetensors checkpoint into `varmap`. The
/// classification head keeps its fresh initialization.
pub fn load_encoder_weights(varmap: &VarMap, path: &std::path::Path, device: &Device) -> Result<(), TaggerError> {
    let tensors = candle_core::safetensors::load(path, device)?;
    let by_key: std::collections::HashMap<String, Tensor> =
        tensors.into_iter().map(|(k, v)| (checkpoint_key(&k), v)).collect();
    let data = varmap.data().lock().unwrap();
    for (name, var) in data.iter().filter(|(n, _)| n.starts_with("bert.")) {
        let t = by_key
            .get(name)
            .ok_or_else(|| TaggerError::MissingTensor(name.clone()))?;
        var.set(&t.to_dtype(DType::F32)?)?;
    }
    Ok(())
}

/// Stack encoded sentences into padded `(ids, attention_mask, labels,
/// label_mask)` tensors.
pub fn batch_tensors(
    batch: &[&AlignedBatch],
    pad_id: u32,
    device: &Device,
) -> candle_core::Result<(Tensor, Tensor, Tensor, Tensor)> {
    let width = batch.iter().map(|e| e.ids.len()).max().unwrap_or(0);
    let n = batch.len();
    let mut ids = Vec::with_capacity(n * width);
    let mut mask = Vec::with_capacity(n * width);
    let mut labels = Vec::with_capacity(n * width);
    let mut label_mask = Vec::with_capacity(n * width);
    for e in batch {
        for j in 0..width {
            let present = j < e.ids.len();
            ids.push(if present { e.ids[j] } else { pad_id });
            mask.push(present as u32);
            let label = if present { e.labels[j] } else { None };
            labels.push(label.unwrap_or(0));
            label_mask.push(if label.is_some() { 1f32 } else { 0f32 });
        }
    }
    Ok((
        Tensor::from_vec(ids, (n, width), device)?,
        Tensor::from_vec(mask, (n, width), device)?,
        Tensor::from_vec(labels, (n, width), device)?,
        Tensor::from_vec(label_mask, (n, width), device)?,
    ))
}

/// Mean cross-entropy over labeled positions only.
pub fn masked_cross_entropy(logits: &Tensor, labels: &Tensor, label_mask: &Tensor) -> candle_core::Result<Tensor> {
    let log_probs = candle_nn::ops::log_softmax(logits, D::Minus1)?;
    let picked = log_probs
        .gather(&labels.unsqueeze(D::Minus1)?, D::Minus1)?
        .squeeze(D::Minus1)?;
    let total = (picked * label_mask)?.sum_all()?;
    let count = label_mask.sum_all()?.maximum(1f32)?;
    (total / count)?.neg()
}
