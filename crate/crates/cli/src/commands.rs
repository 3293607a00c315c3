use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::Context;
use metaflora_core::corpus::{
    balance, read_conll, shuffle_split, tokenize_paragraphs, write_conll, LabelProjector,
    NameLexicon, SplitError, DEFAULT_MAX_ALL_O_RATIO, DEFAULT_SEED,
};
use metaflora_core::evaluation::{evaluate, parse_reports_json, render_report, EvalReport, ReportFormat};
use metaflora_core::generative::{
    extract, read_records, write_records, CompletionClient, ExtractOptions, PromptRequest, ReplayClient, RunStats,
    DEFAULT_MODEL,
};
use metaflora_core::{Dataset, Language};
use metaflora_tagger::{train, Tagger, TrainConfig};
use serde::Serialize;
use serde_json::json;

use crate::args::{
    BalanceSplitArgs, EvalArgs, Format, LlmExtractArgs, PredictArgs, ReportArgs, TagArgs, TrainArgs,
};
use crate::error::CliError;
use crate::llm::{ChatClient, API_KEY_VAR, DEFAULT_ENDPOINT};
use crate::manifest::{manifest_path, Manifest};
use crate::settings::RunConfig;

pub const DEFAULT_TRAIN_N: usize = 1500;
pub const DEFAULT_TEST_N: usize = 520;

/// Shared state for one command invocation.
pub struct Ctx {
    pub config: RunConfig,
    pub manifest: Option<PathBuf>,
}

impl Ctx {
    fn seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.config.seed).unwrap_or(DEFAULT_SEED)
    }

    fn language(&self, flag: Option<&str>) -> Result<Language, CliError> {
        match flag.or(self.config.language.as_deref()) {
            None => Ok(Language::English),
            Some(code) => code.parse().map_err(|e| CliError::usage(format!("{e}"))),
        }
    }

    fn finish(&self, manifest: &Manifest, primary: Option<&Path>) -> Result<(), CliError> {
        let path = match (&self.manifest, primary) {
            (Some(p), _) => p.clone(),
            (None, Some(p)) => manifest_path(p),
            (None, None) => PathBuf::from(format!("{}.manifest.json", manifest.command)),
        };
        manifest
            .write(&path)
            .with_context(|| format!("writing manifest {}", path.display()))?;
        Ok(())
    }
}

fn required(flag: Option<PathBuf>, config: &Option<PathBuf>, name: &str) -> Result<PathBuf, CliError> {
    flag.or_else(|| config.clone())
        .ok_or_else(|| CliError::usage(format!("missing --{name}")))
}

fn existing_file(path: &Path, what: &str) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::usage(format!("{what} not found: {}", path.display())))
    }
}

fn existing_dir(path: &Path, what: &str) -> Result<(), CliError> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(CliError::usage(format!("{what} not found: {}", path.display())))
    }
}

fn load_conll(path: &Path, language: Language) -> Result<Dataset, CliError> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(read_conll(BufReader::new(file), language).with_context(|| format!("reading {}", path.display()))?)
}

fn save_conll(d: &Dataset, path: &Path) -> Result<(), CliError> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_conll(d, BufWriter::new(file)).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    path.with_file_name(name)
}

fn tokens_of(d: &Dataset) -> Vec<Vec<String>> {
    d.sentences.iter().map(|s| s.tokens.clone()).collect()
}

pub fn tag(ctx: &Ctx, args: TagArgs) -> Result<(), CliError> {
    let corpus = required(args.corpus, &ctx.config.corpus, "corpus")?;
    let lexicon_path = required(args.lexicon, &ctx.config.lexicon, "lexicon")?;
    existing_file(&corpus, "corpus")?;
    existing_file(&lexicon_path, "lexicon")?;
    let filter = match args.language.as_deref().or(ctx.config.language.as_deref()) {
        None => None,
        Some(code) => Some(code.parse::<Language>().map_err(|e| CliError::usage(format!("{e}")))?),
    };

    let lexicon_file = File::open(&lexicon_path).with_context(|| format!("opening {}", lexicon_path.display()))?;
    let lexicon = NameLexicon::from_csv(lexicon_file)
        .map_err(|e| CliError::usage(format!("invalid lexicon {}: {e}", lexicon_path.display())))?;
    let text = fs::read_to_string(&corpus).with_context(|| format!("reading {}", corpus.display()))?;
    let projector = LabelProjector::new(&lexicon, filter);
    let sentences: Vec<_> = tokenize_paragraphs(&text).iter().map(|t| projector.project(t)).collect();
    let names: usize = sentences
        .iter()
        .map(|s| s.tags.iter().filter(|t| **t == metaflora_core::Tag::B).count())
        .sum();
    let named = sentences.iter().filter(|s| s.has_name()).count();
    let dataset = Dataset::new(filter.unwrap_or(Language::English), sentences);
    save_conll(&dataset, &args.out)?;
    println!("sentences: {}  with names: {named}  names: {names}", dataset.len());

    let mut m = Manifest::new(
        "tag",
        ctx.seed(None),
        json!({"corpus": corpus, "lexicon": lexicon_path, "out": args.out, "language": filter.map(|l| l.code())}),
    );
    m.input("corpus", &corpus)?;
    m.input("lexicon", &lexicon_path)?;
    m.output("conll", &args.out)?;
    m.results = json!({"sentences": dataset.len(), "sentences_with_names": named, "names": names});
    ctx.finish(&m, Some(&args.out))
}

pub fn balance_split(ctx: &Ctx, args: BalanceSplitArgs) -> Result<(), CliError> {
    let input = required(args.input, &ctx.config.dataset, "in")?;
    existing_file(&input, "dataset")?;
    let ratio = args.ratio.or(ctx.config.ratio).unwrap_or(DEFAULT_MAX_ALL_O_RATIO);
    let train_n = args.train_n.or(ctx.config.train_n).unwrap_or(DEFAULT_TRAIN_N);
    let test_n = args.test_n.or(ctx.config.test_n).unwrap_or(DEFAULT_TEST_N);
    let seed = ctx.seed(args.seed);
    let train_out = args.train_out.unwrap_or_else(|| with_suffix(&input, ".train.conll"));
    let test_out = args.test_out.unwrap_or_else(|| with_suffix(&input, ".test.conll"));

    let data = load_conll(&input, ctx.language(None)?)?;
    let usage = |e: SplitError| CliError::usage(e.to_string());
    let balanced = balance(&data, ratio, seed).map_err(usage)?;
    let (train_set, test_set) = shuffle_split(&balanced, train_n, test_n, seed).map_err(usage)?;
    save_conll(&train_set, &train_out)?;
    save_conll(&test_set, &test_out)?;
    let named = balanced.sentences.iter().filter(|s| s.has_name()).count();
    println!(
        "kept {} of {} sentences ({named} with names); train {} test {}",
        balanced.len(),
        data.len(),
        train_set.len(),
        test_set.len()
    );

    let mut m = Manifest::new(
        "balance-split",
        seed,
        json!({"in": input, "ratio": ratio, "train_n": train_n, "test_n": test_n,
               "train_out": train_out, "test_out": test_out}),
    );
    m.input("dataset", &input)?;
    m.output("train", &train_out)?;
    m.output("test", &test_out)?;
    m.results = json!({"input_sentences": data.len(), "kept": balanced.len(), "with_names": named,
                       "train": train_set.len(), "test": test_set.len()});
    ctx.finish(&m, Some(&train_out))
}

pub fn train_cmd(ctx: &Ctx, args: TrainArgs) -> Result<(), CliError> {
    let input = required(args.train_file, &ctx.config.dataset, "train")?;
    let out = required(args.out, &ctx.config.model, "out")?;
    existing_file(&input, "training set")?;
    let t = &ctx.config.train;
    let defaults = TrainConfig::default();
    let config = TrainConfig {
        model_id: args.model_id.or_else(|| t.model_id.clone()).unwrap_or(defaults.model_id),
        epochs: args.epochs.or(t.epochs).unwrap_or(defaults.epochs),
        learning_rate: args.lr.or(t.learning_rate).unwrap_or(defaults.learning_rate),
        batch_size: args.batch_size.or(t.batch_size).unwrap_or(defaults.batch_size),
        seed: ctx.seed(args.seed),
        max_sequence_length: args.max_len.or(t.max_sequence_length).unwrap_or(defaults.max_sequence_length),
        lowercase: t.lowercase,
        weight_decay: args.weight_decay.or(t.weight_decay).unwrap_or(defaults.weight_decay),
    };
    config.validate().map_err(|e| CliError::usage(e.to_string()))?;
    let data = load_conll(&input, ctx.language(args.language.as_deref())?)?;
    let outcome = train(&data, &config, &out)?;
    for e in &outcome.epochs {
        println!("epoch {}  loss {:.6}  {:.1}s", e.epoch, e.mean_loss, e.wall_time_s);
    }
    if outcome.truncated_sentences > 0 {
        eprintln!(
            "warning: {} sentences exceeded max_sequence_length and were truncated",
            outcome.truncated_sentences
        );
    }

    let mut m = Manifest::new("train", config.seed, serde_json::to_value(&outcome.handle.config)?);
    m.input("train", &input)?;
    m.output("model", &out)?;
    m.results = json!({"epochs": outcome.epochs, "truncated_sentences": outcome.truncated_sentences});
    ctx.finish(&m, Some(&out))
}

pub fn predict_cmd(ctx: &Ctx, args: PredictArgs) -> Result<(), CliError> {
    let model = required(args.model, &ctx.config.model, "model")?;
    let input = required(args.input, &ctx.config.dataset, "in")?;
    existing_dir(&model, "model directory")?;
    existing_file(&input, "input")?;
    let language = ctx.language(args.language.as_deref())?;
    let data = load_conll(&input, language)?;
    let tagger = Tagger::load(&model)?;
    let prediction = tagger.predict(&tokens_of(&data))?;
    let out = Dataset::new(language, prediction.sentences);
    save_conll(&out, &args.out)?;
    if prediction.truncated_sentences > 0 {
        eprintln!(
            "warning: {} sentences exceeded max_sequence_length; their tails were tagged O",
            prediction.truncated_sentences
        );
    }
    println!("tagged {} sentences", out.len());

    let mut m = Manifest::new(
        "predict",
        tagger.config().seed,
        json!({"model": model, "in": input, "out": args.out, "language": language.code()}),
    );
    m.input("model", &model)?;
    m.input("dataset", &input)?;
    m.output("conll", &args.out)?;
    m.results = json!({"sentences": out.len(), "truncated_sentences": prediction.truncated_sentences});
    ctx.finish(&m, Some(&args.out))
}

fn report_format(f: Format) -> ReportFormat {
    match f {
        Format::Markdown => ReportFormat::Markdown,
        Format::Json => ReportFormat::Json,
    }
}

pub fn eval(ctx: &Ctx, args: EvalArgs) -> Result<(), CliError> {
    existing_file(&args.gold, "gold file")?;
    let language = ctx.language(args.language.as_deref())?;
    let gold = load_conll(&args.gold, language)?;
    let mut m = Manifest::new("eval", ctx.seed(None), serde_json::Value::Null);
    m.input("gold", &args.gold)?;
    let (name, pred, seed) = match (&args.pred, &args.model) {
        (Some(pred_path), _) => {
            existing_file(pred_path, "prediction file")?;
            m.input("pred", pred_path)?;
            let name = pred_path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            (name, load_conll(pred_path, language)?.sentences, None)
        }
        (None, Some(model)) => {
            existing_dir(model, "model directory")?;
            m.input("model", model)?;
            let tagger = Tagger::load(model)?;
            let pred = tagger.predict(&tokens_of(&gold))?.sentences;
            (tagger.config().model_id.clone(), pred, Some(tagger.config().seed))
        }
        (None, None) => return Err(CliError::usage("one of --pred or --model is required")),
    };
    let name = args.name.unwrap_or(name);
    let report = evaluate(name.clone(), &gold.sentences, &pred)?;
    print!("{}", render_report(std::slice::from_ref(&report), report_format(args.format)));
    let out = args.out.or_else(|| ctx.config.report.clone());
    if let Some(out) = &out {
        write_json(&vec![report.clone()], out)?;
        m.output("report", out)?;
    }

    if let Some(seed) = seed {
        m.seed = seed;
    }
    m.config = json!({"gold": args.gold, "pred": args.pred, "model": args.model, "name": name,
                      "language": language.code(), "out": out});
    m.results = serde_json::to_value(&report)?;
    ctx.finish(&m, out.as_deref())
}

#[derive(Serialize)]
struct LlmReport<'a> {
    mode: &'a str,
    request: &'a PromptRequest,
    stats: &'a RunStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    evaluation: Option<EvalReport>,
}

pub fn llm_extract(ctx: &Ctx, args: LlmExtractArgs) -> Result<(), CliError> {
    let input = required(args.input, &ctx.config.dataset, "in")?;
    existing_file(&input, "input")?;
    if let Some(p) = &args.replay {
        existing_file(p, "replay file")?;
    }
    if let Some(p) = &args.gold {
        existing_file(p, "gold file")?;
    }
    let l = &ctx.config.llm;
    let defaults = PromptRequest::default();
    let request = PromptRequest {
        model_name: args.llm_model.or_else(|| l.model.clone()).unwrap_or_else(|| DEFAULT_MODEL.into()),
        temperature: args.temperature.or(l.temperature).unwrap_or(defaults.temperature),
        max_retries: args.max_retries.or(l.max_retries).unwrap_or(defaults.max_retries),
    };
    if request.temperature.is_nan() || request.temperature < 0.0 {
        return Err(CliError::usage("temperature must be non-negative"));
    }
    let concurrency = args.concurrency.or(l.concurrency).unwrap_or(4).max(1);
    let endpoint = args.endpoint.or_else(|| l.endpoint.clone()).unwrap_or_else(|| DEFAULT_ENDPOINT.into());
    let responses_out = args.responses.unwrap_or_else(|| with_suffix(&args.out, ".responses.jsonl"));
    let report_out = args
        .report
        .or_else(|| ctx.config.report.clone())
        .unwrap_or_else(|| with_suffix(&args.out, ".report.json"));

    let language = ctx.language(args.language.as_deref())?;
    let data = load_conll(&input, language)?;
    let (mode, client, backoff): (&str, Box<dyn CompletionClient>, Duration) = match &args.replay {
        Some(path) => {
            let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            let records = read_records(BufReader::new(file))?;
            ("replay", Box::new(ReplayClient::new(records)), Duration::ZERO)
        }
        None => {
            let key = std::env::var(API_KEY_VAR)
                .ok()
                .filter(|k| !k.is_empty())
                .ok_or_else(|| CliError::usage(format!("{API_KEY_VAR} is not set; pass --replay to use recorded responses")))?;
            let backoff = Duration::from_millis(args.backoff_ms.or(l.backoff_ms).unwrap_or(1000));
            ("live", Box::new(ChatClient::new(endpoint.clone(), key)?), backoff)
        }
    };
    let options = ExtractOptions {
        request: request.clone(),
        concurrency,
        backoff,
    };
    let run = extract(&tokens_of(&data), client.as_ref(), &options);

    save_conll(&Dataset::new(language, run.sentences.clone()), &args.out)?;
    let mut sink = BufWriter::new(File::create(&responses_out).with_context(|| format!("creating {}", responses_out.display()))?);
    write_records(&run.records, &mut sink)?;
    sink.flush()?;
    let evaluation = match &args.gold {
        Some(gold_path) => {
            let gold = load_conll(gold_path, language)?;
            Some(evaluate(request.model_name.clone(), &gold.sentences, &run.sentences)?)
        }
        None => None,
    };
    let report = LlmReport {
        mode,
        request: &request,
        stats: &run.stats,
        evaluation,
    };
    write_json(&report, &report_out)?;
    let s = &run.stats;
    println!(
        "sentences {}  yes {}  no {}  failed {}  retries {}  dropped names {}",
        s.sentences, s.yes_answers, s.no_answers, s.failed_sentences, s.retries, s.dropped_names
    );
    if let Some(e) = &report.evaluation {
        print!("{}", render_report(std::slice::from_ref(e), ReportFormat::Markdown));
    }

    let mut m = Manifest::new(
        "llm-extract",
        ctx.seed(None),
        json!({"in": input, "out": args.out, "mode": mode, "replay": args.replay,
               "endpoint": if mode == "live" { Some(&endpoint) } else { None },
               "request": request, "concurrency": concurrency, "backoff_ms": backoff.as_millis() as u64,
               "responses": responses_out, "report": report_out, "gold": args.gold,
               "language": language.code()}),
    );
    m.input("dataset", &input)?;
    if let Some(p) = &args.replay {
        m.input("replay", p)?;
    }
    if let Some(p) = &args.gold {
        m.input("gold", p)?;
    }
    m.output("conll", &args.out)?;
    m.output("responses", &responses_out)?;
    m.output("report", &report_out)?;
    m.results = serde_json::to_value(&report)?;
    ctx.finish(&m, Some(&args.out))
}

pub fn report(ctx: &Ctx, args: ReportArgs) -> Result<(), CliError> {
    let mut m = Manifest::new("report", ctx.seed(None), serde_json::Value::Null);
    let mut reports = Vec::new();
    for path in &args.inputs {
        existing_file(path, "report")?;
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        reports.extend(parse_reports_json(&text).with_context(|| format!("parsing {}", path.display()))?);
        m.input(&path.display().to_string(), path)?;
    }
    let rendered = render_report(&reports, report_format(args.format));
    match &args.out {
        Some(out) => {
            fs::write(out, &rendered).with_context(|| format!("writing {}", out.display()))?;
            m.output("report", out)?;
        }
        None => print!("{rendered}"),
    }
    m.config = json!({"in": args.inputs, "format": format!("{:?}", args.format).to_lowercase(), "out": args.out});
    m.results = json!({"rows": reports.len()});
    ctx.finish(&m, args.out.as_deref())
}
