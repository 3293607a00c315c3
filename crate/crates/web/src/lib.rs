//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export takes plain strings and returns a JSON document; failures
//! surface as JavaScript exceptions carrying the error message.

use metaflora_core::alignment::{extract_spans, Span};
use metaflora_core::corpus::{read_conll, tokenize_paragraphs, write_sentences, LabelProjector, NameLexicon};
use metaflora_core::evaluation::{evaluate, render_report, EvalReport, ReportFormat};
use metaflora_core::generative::{build_prompt, parse_response, spans_to_iob};
use metaflora_core::{LabeledSentence, Language, Tag};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct TaggedSentence {
    pub tokens: Vec<String>,
    pub tags: Vec<Tag>,
    pub spans: Vec<Span>,
}

impl From<LabeledSentence> for TaggedSentence {
    fn from(s: LabeledSentence) -> Self {
        Self {
            spans: extract_spans(&s),
            tokens: s.tokens,
            tags: s.tags,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Tagging {
    pub sentences: Vec<TaggedSentence>,
    pub names: usize,
    pub conll: String,
}

#[derive(Debug, Serialize)]
pub struct ParsedAnswer {
    pub prompt: String,
    pub has_metaphor: bool,
    pub names: Vec<String>,
    pub dropped: Vec<String>,
    pub unmatched: Vec<String>,
    pub sentence: TaggedSentence,
}

#[derive(Debug, Serialize)]
pub struct Evaluation {
    pub report: EvalReport,
    pub markdown: String,
}

/// Tokenize `text` and label the metaphoric names of a
/// `surface,is_metaphoric,language` CSV lexicon.
pub fn tag_with_lexicon(text: &str, lexicon_csv: &str) -> Result<Tagging, String> {
    let lexicon = NameLexicon::from_csv(lexicon_csv.as_bytes()).map_err(|e| format!("lexicon: {e}"))?;
    let projector = LabelProjector::new(&lexicon, None);
    let labeled: Vec<LabeledSentence> = tokenize_paragraphs(text).iter().map(|t| projector.project(t)).collect();
    let mut conll = Vec::new();
    write_sentences(&labeled, &mut conll).map_err(|e| e.to_string())?;
    let sentences: Vec<TaggedSentence> = labeled.into_iter().map(TaggedSentence::from).collect();
    Ok(Tagging {
        names: sentences.iter().map(|s| s.spans.len()).sum(),
        sentences,
        conll: String::from_utf8(conll).expect("CoNLL output is UTF-8"),
    })
}

/// Interpret a chat model's answer about `sentence` and tag the names it
/// gives.
pub fn parse_answer(raw: &str, sentence: &str) -> Result<ParsedAnswer, String> {
    let tokens: Vec<String> = sentence.split_whitespace().map(String::from).collect();
    if tokens.is_empty() {
        return Err("the sentence is empty".into());
    }
    let result = parse_response(raw, sentence).map_err(|_| "could not interpret the answer".to_string())?;
    let tagging = spans_to_iob(&tokens, &result.names);
    Ok(ParsedAnswer {
        prompt: build_prompt(sentence),
        has_metaphor: result.has_metaphor,
        names: result.names,
        dropped: result.dropped,
        unmatched: tagging.unmatched,
        sentence: tagging.sentence.into(),
    })
}

/// Macro P/R/F1 of predicted CoNLL text against gold CoNLL text.
pub fn score(gold_conll: &str, pred_conll: &str) -> Result<Evaluation, String> {
    let gold = read_conll(gold_conll.as_bytes(), Language::English).map_err(|e| format!("gold: {e}"))?;
    let pred = read_conll(pred_conll.as_bytes(), Language::English).map_err(|e| format!("prediction: {e}"))?;
    let report = evaluate("prediction", &gold.sentences, &pred.sentences).map_err(|e| e.to_string())?;
    Ok(Evaluation {
        markdown: render_report(std::slice::from_ref(&report), ReportFormat::Markdown),
        report,
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    r.map(|v| serde_json::to_string(&v).expect("demo output serializes"))
        .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn tag_text(text: &str, lexicon_csv: &str) -> Result<String, JsError> {
    to_js(tag_with_lexicon(text, lexicon_csv))
}

#[wasm_bindgen]
pub fn parse_llm_response(raw: &str, sentence: &str) -> Result<String, JsError> {
    to_js(parse_answer(raw, sentence))
}

#[wasm_bindgen]
pub fn evaluate_conll(gold_conll: &str, pred_conll: &str) -> Result<String, JsError> {
    to_js(score(gold_conll, pred_conll))
}
