use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "metaflora", version, about = "Metaphoric flower and plant name tagging pipeline")]
pub struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Where to write the run manifest.
    #[arg(long, global = true, value_name = "FILE")]
    pub manifest: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tokenize a raw corpus and label lexicon names as IOB.
    Tag(TagArgs),
    /// Cap all-O sentences, shuffle and split into train and test files.
    BalanceSplit(BalanceSplitArgs),
    /// Fine-tune a token classifier.
    Train(TrainArgs),
    /// Tag a CoNLL file with a trained model.
    Predict(PredictArgs),
    /// Score predictions (or a model) against gold tags.
    Eval(EvalArgs),
    /// Ask a chat model for names and turn the answers into IOB tags.
    LlmExtract(LlmExtractArgs),
    /// Merge evaluation reports into one table.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Markdown,
    Json,
}

#[derive(Debug, Args)]
pub struct TagArgs {
    #[arg(long, value_name = "FILE")]
    pub corpus: Option<PathBuf>,
    /// CSV with header `surface,is_metaphoric,language`.
    #[arg(long, value_name = "FILE")]
    pub lexicon: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Only use lexicon entries of this language (en or es).
    #[arg(long)]
    pub language: Option<String>,
}

#[derive(Debug, Args)]
pub struct BalanceSplitArgs {
    #[arg(long = "in", value_name = "FILE")]
    pub input: Option<PathBuf>,
    /// All-O sentences kept per named sentence.
    #[arg(long)]
    pub ratio: Option<f64>,
    #[arg(long)]
    pub train_n: Option<usize>,
    #[arg(long)]
    pub test_n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Defaults to `<in>.train.conll`.
    #[arg(long, value_name = "FILE")]
    pub train_out: Option<PathBuf>,
    /// Defaults to `<in>.test.conll`.
    #[arg(long, value_name = "FILE")]
    pub test_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training set in CoNLL format.
    #[arg(long = "train", value_name = "FILE")]
    pub train_file: Option<PathBuf>,
    /// Artifact directory to create.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Checkpoint directory or `builtin:tiny-bert`.
    #[arg(long)]
    pub model_id: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_len: Option<usize>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub language: Option<String>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Trained artifact directory.
    #[arg(long, value_name = "DIR")]
    pub model: Option<PathBuf>,
    /// CoNLL file whose tokens are tagged; its tags are ignored.
    #[arg(long = "in", value_name = "FILE")]
    pub input: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    #[arg(long)]
    pub language: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_name = "FILE")]
    pub gold: PathBuf,
    /// Predicted CoNLL file.
    #[arg(long, value_name = "FILE", conflicts_with = "model", required_unless_present = "model")]
    pub pred: Option<PathBuf>,
    /// Trained artifact directory; tags the gold tokens first.
    #[arg(long, value_name = "DIR")]
    pub model: Option<PathBuf>,
    /// Row label in the report.
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long)]
    pub language: Option<String>,
    /// Report JSON output.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "markdown")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct LlmExtractArgs {
    /// CoNLL file with the sentences to ask about.
    #[arg(long = "in", value_name = "FILE")]
    pub input: Option<PathBuf>,
    /// IOB output.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Recorded responses (JSON lines) to serve instead of a live endpoint.
    #[arg(long, value_name = "FILE")]
    pub replay: Option<PathBuf>,
    /// Where to persist raw responses. Defaults to `<out>.responses.jsonl`.
    #[arg(long, value_name = "FILE")]
    pub responses: Option<PathBuf>,
    /// Run report (stats and, with --gold, metrics). Defaults to `<out>.report.json`.
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
    /// Gold CoNLL file to score the output against.
    #[arg(long, value_name = "FILE")]
    pub gold: Option<PathBuf>,
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long = "llm-model")]
    pub llm_model: Option<String>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub max_retries: Option<u32>,
    #[arg(long)]
    pub concurrency: Option<usize>,
    /// First retry delay in milliseconds.
    #[arg(long)]
    pub backoff_ms: Option<u64>,
    #[arg(long)]
    pub language: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Report JSON files written by `eval`.
    #[arg(long = "in", value_name = "FILE", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "markdown")]
    pub format: Format,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}
