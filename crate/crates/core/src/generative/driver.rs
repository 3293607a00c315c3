//! Batch extraction over a chat-completion backend, with retries, bounded
//! concurrency and a replayable log of every raw response.

use std::collections::HashMap;
use std::io::{self, BufRead, Write};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::parse::{parse_response, ExtractionResult};
use super::prompt::{build_prompt, PromptRequest};
use super::spans::spans_to_iob;
use crate::types::LabeledSentence;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClientError {
    #[error("rate limited")]
    RateLimited,
    #[error("transient failure: {0}")]
    Transient(String),
    #[error("request failed: {0}")]
    Fatal(String),
}

/// A source of chat answers. `attempt` counts from 0 for each sentence.
pub trait CompletionClient: Sync {
    fn complete(
        &self,
        sentence: &str,
        prompt: &str,
        request: &PromptRequest,
        attempt: u32,
    ) -> Result<String, ClientError>;
}

/// One line of the replay format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub sentence: String,
    pub raw_response: String,
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("replay line {line}: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn read_records<R: BufRead>(source: R) -> Result<Vec<ResponseRecord>, ReplayError> {
    let mut out = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|source| ReplayError::Json { line: i + 1, source })?,
        );
    }
    Ok(out)
}

pub fn write_records<W: Write>(records: &[ResponseRecord], mut sink: W) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut sink, r)?;
        sink.write_all(b"\n")?;
    }
    sink.flush()
}

/// Serves recorded answers. The n-th attempt for a sentence gets the n-th
/// record for it, or the last one when the recording has fewer.
#[derive(Debug, Clone, Default)]
pub struct ReplayClient {
    responses: HashMap<String, Vec<String>>,
}

impl ReplayClient {
    pub fn new(records: impl IntoIterator<Item = ResponseRecord>) -> Self {
        let mut responses: HashMap<String, Vec<String>> = HashMap::new();
        for r in records {
            responses.entry(r.sentence).or_default().push(r.raw_response);
        }
        Self { responses }
    }
}

impl CompletionClient for ReplayClient {
    fn complete(&self, sentence: &str, _: &str, _: &PromptRequest, attempt: u32) -> Result<String, ClientError> {
        let recorded = self
            .responses
            .get(sentence)
            .ok_or_else(|| ClientError::Fatal(format!("no recorded response for {sentence:?}")))?;
        let i = (attempt as usize).min(recorded.len() - 1);
        Ok(recorded[i].clone())
    }
}

#[derive(Debug, Clone)]
pub struct ExtractOptions {
    pub request: PromptRequest,
    /// Maximum number of requests in flight.
    pub concurrency: usize,
    /// First backoff delay; doubles with every retry.
    pub backoff: Duration,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self {
            request: PromptRequest::default(),
            concurrency: 4,
            backoff: Duration::from_secs(1),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunStats {
    pub sentences: usize,
    pub requests: usize,
    pub retries: usize,
    /// Responses that could not be interpreted (each retry counts).
    pub parse_failures: usize,
    /// Sentences with no usable answer after all retries; tagged all-O.
    pub failed_sentences: usize,
    pub yes_answers: usize,
    pub no_answers: usize,
    /// Names offered by the model that do not occur in their sentence.
    pub dropped_names: usize,
    /// Accepted names that could not be aligned to tokens.
    pub unmatched_names: usize,
    /// Repeated sentences whose answers led to different tags.
    pub disagreements: usize,
}

#[derive(Debug, Clone)]
pub struct ExtractionRun {
    pub sentences: Vec<LabeledSentence>,
    pub results: Vec<Option<ExtractionResult>>,
    pub records: Vec<ResponseRecord>,
    pub stats: RunStats,
}

#[derive(Debug, Default)]
struct Outcome {
    result: Option<ExtractionResult>,
    records: Vec<ResponseRecord>,
    requests: usize,
    parse_failures: usize,
}

fn run_one<C: CompletionClient + ?Sized>(client: &C, text: &str, options: &ExtractOptions) -> Outcome {
    let prompt = build_prompt(text);
    let mut outcome = Outcome::default();
    for attempt in 0..=options.request.max_retries {
        if attempt > 0 && !options.backoff.is_zero() {
            std::thread::sleep(options.backoff * 2u32.saturating_pow(attempt - 1));
        }
        outcome.requests += 1;
        match client.complete(text, &prompt, &options.request, attempt) {
            Ok(raw) => {
                outcome.records.push(ResponseRecord {
                    sentence: text.to_string(),
                    raw_response: raw.clone(),
                });
                match parse_response(&raw, text) {
                    Ok(result) => {
                        outcome.result = Some(result);
                        return outcome;
                    }
                    Err(_) => outcome.parse_failures += 1,
                }
            }
            Err(ClientError::RateLimited | ClientError::Transient(_)) => {}
            Err(ClientError::Fatal(_)) => return outcome,
        }
    }
    outcome
}

/// Ask `client` about every sentence and turn the answers into IOB tags.
/// Output order follows input order regardless of concurrency.
pub fn extract<C: CompletionClient + ?Sized>(
    sentences: &[Vec<String>],
    client: &C,
    options: &ExtractOptions,
) -> ExtractionRun {
    let texts: Vec<String> = sentences.iter().map(|t| t.join(" ")).collect();
    let slots: Vec<Mutex<Option<Outcome>>> = texts.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = options.concurrency.clamp(1, texts.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= texts.len() {
                    break;
                }
                let outcome = run_one(client, &texts[i], options);
                *slots[i].lock().unwrap() = Some(outcome);
            });
        }
    });

    let mut stats = RunStats {
        sentences: texts.len(),
        ..RunStats::default()
    };
    let mut out_sentences = Vec::with_capacity(texts.len());
    let mut results = Vec::with_capacity(texts.len());
    let mut records = Vec::new();
    let mut by_text: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, (tokens, slot)) in sentences.iter().zip(slots).enumerate() {
        let outcome = slot.into_inner().unwrap().expect("every sentence is processed");
        stats.requests += outcome.requests;
        stats.retries += outcome.requests.saturating_sub(1);
        stats.parse_failures += outcome.parse_failures;
        records.extend(outcome.records);
        let tagged = match &outcome.result {
            None => {
                stats.failed_sentences += 1;
                LabeledSentence::all_outside(tokens.clone())
            }
            Some(r) => {
                stats.dropped_names += r.dropped.len();
                if r.has_metaphor {
                    stats.yes_answers += 1;
                } else {
                    stats.no_answers += 1;
                }
                let tagging = spans_to_iob(tokens, &r.names);
                stats.unmatched_names += tagging.unmatched.len();
                tagging.sentence
            }
        };
        by_text.entry(texts[i].as_str()).or_default().push(i);
        out_sentences.push(tagged);
        results.push(outcome.result);
    }
    stats.disagreements = by_text
        .values()
        .filter(|idx| idx.iter().any(|&j| out_sentences[j].tags != out_sentences[idx[0]].tags))
        .count();

    ExtractionRun {
        sentences: out_sentences,
        results,
        records,
        stats,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;
    use crate::types::Tag::{B, I, O};

    fn options() -> ExtractOptions {
        ExtractOptions {
            backoff: Duration::ZERO,
            ..ExtractOptions::default()
        }
    }

    fn record(sentence: &str, raw: &str) -> ResponseRecord {
        ResponseRecord {
            sentence: sentence.into(),
            raw_response: raw.into(),
        }
    }

    /// Fails with the given errors first, then answers "No".
    struct Flaky {
        errors: Vec<ClientError>,
    }

    impl CompletionClient for Flaky {
        fn complete(&self, _: &str, _: &str, _: &PromptRequest, attempt: u32) -> Result<String, ClientError> {
            match self.errors.get(attempt as usize) {
                Some(e) => Err(e.clone()),
                None => Ok("No.".into()),
            }
        }
    }

    #[test]
    fn replay_no_answer_is_all_outside() {
        let s = tokenize("The moonlight rose blooms.").remove(0);
        let client = ReplayClient::new([record(&s.join(" "), "No.")]);
        let run = extract(&[s], &client, &options());
        assert_eq!(run.sentences[0].tags, [O, O, O, O]);
        assert_eq!(run.stats.no_answers, 1);
        assert_eq!(run.records.len(), 1);
    }

    #[test]
    fn replay_tags_names() {
        let s = tokenize("calliandra haematocephala (Red powder puff) is an evergreen, spreading shrub")
            .remove(0);
        let client = ReplayClient::new([record(&s.join(" "), "Yes, the name is 'Red powder puff'.")]);
        let run = extract(&[s], &client, &options());
        assert_eq!(run.sentences[0].tags, [O, O, B, I, I, O, O, O, O, O]);
        assert_eq!(run.stats.yes_answers, 1);
    }

    #[test]
    fn retries_then_succeeds() {
        let client = Flaky {
            errors: vec![ClientError::RateLimited, ClientError::Transient("503".into())],
        };
        let run = extract(&[vec!["a".into()]], &client, &options());
        assert_eq!(run.stats.requests, 3);
        assert_eq!(run.stats.retries, 2);
        assert_eq!(run.stats.failed_sentences, 0);
    }

    #[test]
    fn exhausted_retries_mark_failure() {
        let client = Flaky {
            errors: vec![ClientError::RateLimited; 10],
        };
        let run = extract(&[vec!["a".into(), "b".into()]], &client, &options());
        assert_eq!(run.stats.requests, 4);
        assert_eq!(run.stats.failed_sentences, 1);
        assert_eq!(run.sentences[0].tags, [O, O]);
        let fatal = Flaky {
            errors: vec![ClientError::Fatal("401".into())],
        };
        assert_eq!(extract(&[vec!["a".into()]], &fatal, &options()).stats.requests, 1);
    }

    #[test]
    fn parse_failures_retry_through_recording() {
        let text = "Edelweiss grows high";
        let client = ReplayClient::new([
            record(text, "I cannot tell."),
            record(text, "Yes: Edelweiss"),
        ]);
        let run = extract(&[tokenize(text).remove(0)], &client, &options());
        assert_eq!(run.stats.parse_failures, 1);
        assert_eq!(run.sentences[0].tags, [B, O, O]);
        assert_eq!(run.records.len(), 2);
    }

    #[test]
    fn missing_recording_fails_sentence() {
        let run = extract(&[vec!["x".into()]], &ReplayClient::default(), &options());
        assert_eq!(run.stats.failed_sentences, 1);
        assert!(run.records.is_empty());
    }

    #[test]
    fn disagreement_between_repeats() {
        struct Alternating;
        impl CompletionClient for Alternating {
            fn complete(&self, s: &str, _: &str, _: &PromptRequest, _: u32) -> Result<String, ClientError> {
                // answers depend on nothing but a global counter
                static N: AtomicUsize = AtomicUsize::new(0);
                Ok(if N.fetch_add(1, Ordering::SeqCst).is_multiple_of(2) {
                    "No".into()
                } else {
                    format!("Yes: {}", s.split(' ').next().unwrap())
                })
            }
        }
        let s = vec!["Moonlight".to_string(), "rose".to_string()];
        let run = extract(&[s.clone(), s], &Alternating, &ExtractOptions { concurrency: 1, ..options() });
        assert_eq!(run.stats.disagreements, 1);
    }

    #[test]
    fn records_round_trip() {
        let records = vec![record("a b", "No."), record("c \"d\"", "Yes: 'd'\nand more")];
        let mut buf = Vec::new();
        write_records(&records, &mut buf).unwrap();
        assert_eq!(read_records(&buf[..]).unwrap(), records);
        assert!(matches!(
            read_records("{\"sentence\": 1}\n".as_bytes()),
            Err(ReplayError::Json { line: 1, .. })
        ));
    }
}
