//! Token-level confusion counts, macro-averaged precision/recall/F1 and
//! report rendering.
//!
//! Scores are computed over word tokens for the three classes B, I and O and
//! macro-averaged without weighting; O is included. Undefined ratios (0/0)
//! count as 0.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::extract_spans;
use crate::types::{LabeledSentence, Tag};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("gold has {gold} sentences but predictions have {pred}")]
    SentenceCountMismatch { gold: usize, pred: usize },
    #[error("sentence {sentence}: gold has {gold} tokens but prediction has {pred}")]
    TokenCountMismatch {
        sentence: usize,
        gold: usize,
        pred: usize,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

/// Per-class TP/FP/FN, indexed in `Tag::ALL` order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    classes: [ClassCounts; 3],
}

fn class_index(tag: Tag) -> usize {
    match tag {
        Tag::B => 0,
        Tag::I => 1,
        Tag::O => 2,
    }
}

impl ConfusionCounts {
    pub fn class(&self, tag: Tag) -> ClassCounts {
        self.classes[class_index(tag)]
    }

    /// Record one token.
    pub fn add(&mut self, gold: Tag, pred: Tag) {
        if gold == pred {
            self.classes[class_index(gold)].tp += 1;
        } else {
            self.classes[class_index(pred)].fp += 1;
            self.classes[class_index(gold)].fn_ += 1;
        }
    }

    pub fn merge(&mut self, other: &ConfusionCounts) {
        for (a, b) in self.classes.iter_mut().zip(&other.classes) {
            a.tp += b.tp;
            a.fp += b.fp;
            a.fn_ += b.fn_;
        }
    }

    pub fn gold_total(&self) -> u64 {
        self.classes.iter().map(|c| c.tp + c.fn_).sum()
    }

    pub fn predicted_total(&self) -> u64 {
        self.classes.iter().map(|c| c.tp + c.fp).sum()
    }
}

pub fn token_confusion(
    gold: &[LabeledSentence],
    pred: &[LabeledSentence],
) -> Result<ConfusionCounts, EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::SentenceCountMismatch {
            gold: gold.len(),
            pred: pred.len(),
        });
    }
    let mut counts = ConfusionCounts::default();
    for (i, (g, p)) in gold.iter().zip(pred).enumerate() {
        if g.tags.len() != p.tags.len() {
            return Err(EvalError::TokenCountMismatch {
                sentence: i,
                gold: g.tags.len(),
                pred: p.tags.len(),
            });
        }
        for (&gt, &pt) in g.tags.iter().zip(&p.tags) {
            counts.add(gt, pt);
        }
    }
    Ok(counts)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Prf {
    pub fn from_counts(tp: u64, fp: u64, fn_: u64) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            precision,
            recall,
            f1,
        }
    }
}

pub fn class_prf(c: &ConfusionCounts, tag: Tag) -> Prf {
    let k = c.class(tag);
    Prf::from_counts(k.tp, k.fp, k.fn_)
}

/// Unweighted mean of the per-class scores over B, I and O.
pub fn macro_prf(c: &ConfusionCounts) -> Prf {
    let per: Vec<Prf> = Tag::ALL.iter().map(|&t| class_prf(c, t)).collect();
    let mean = |f: fn(&Prf) -> f64| per.iter().map(f).sum::<f64>() / per.len() as f64;
    Prf {
        precision: mean(|p| p.precision),
        recall: mean(|p| p.recall),
        f1: mean(|p| p.f1),
    }
}

/// Exact-span precision/recall/F1. A diagnostic only; the headline metrics
/// are the token-level macro scores.
pub fn span_prf(gold: &[LabeledSentence], pred: &[LabeledSentence]) -> Result<Prf, EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::SentenceCountMismatch {
            gold: gold.len(),
            pred: pred.len(),
        });
    }
    let collect = |sentences: &[LabeledSentence]| -> HashSet<(usize, usize, usize)> {
        sentences
            .iter()
            .enumerate()
            .flat_map(|(i, s)| extract_spans(s).into_iter().map(move |sp| (i, sp.start, sp.end)))
            .collect()
    };
    let g = collect(gold);
    let p = collect(pred);
    let tp = g.intersection(&p).count() as u64;
    Ok(Prf::from_counts(tp, p.len() as u64 - tp, g.len() as u64 - tp))
}

/// Scores for one model on one test set. Values are fractions in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub per_class: BTreeMap<Tag, Prf>,
    pub n_sentences: usize,
    pub n_tokens: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span_diagnostic: Option<Prf>,
}

impl EvalReport {
    pub fn from_counts(model: impl Into<String>, counts: &ConfusionCounts, n_sentences: usize) -> Self {
        let m = macro_prf(counts);
        Self {
            model: model.into(),
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
            per_class: Tag::ALL.iter().map(|&t| (t, class_prf(counts, t))).collect(),
            n_sentences,
            n_tokens: counts.gold_total() as usize,
            span_diagnostic: None,
        }
    }
}

/// Token-level evaluation of `pred` against `gold`, with the span diagnostic.
pub fn evaluate(
    model: impl Into<String>,
    gold: &[LabeledSentence],
    pred: &[LabeledSentence],
) -> Result<EvalReport, EvalError> {
    let counts = token_confusion(gold, pred)?;
    let mut report = EvalReport::from_counts(model, &counts, gold.len());
    report.span_diagnostic = Some(span_prf(gold, pred)?);
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Json,
}

fn pct(x: f64) -> String {
    format!("{:.4}", x * 100.0)
}

/// Markdown gives one `Model | Precision | Recall | F1` row per report, in
/// percent with four decimals. JSON is the lossless list of reports.
pub fn render_report(reports: &[EvalReport], format: ReportFormat) -> String {
    match format {
        ReportFormat::Markdown => {
            let mut out = String::from("| Model | Precision | Recall | F1 |\n|---|---|---|---|\n");
            for r in reports {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} |",
                    r.model,
                    pct(r.precision),
                    pct(r.recall),
                    pct(r.f1)
                );
            }
            out
        }
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(reports).expect("reports serialize");
            s.push('\n');
            s
        }
    }
}

/// Accepts either a single report object or a list of reports.
pub fn parse_reports_json(text: &str) -> Result<Vec<EvalReport>, serde_json::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        Many(Vec<EvalReport>),
        One(EvalReport),
    }
    Ok(match serde_json::from_str(text)? {
        OneOrMany::Many(v) => v,
        OneOrMany::One(r) => vec![r],
    })
}
