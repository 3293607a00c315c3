//! Acceptance criteria, one result line each. Criterion 7 needs the full
//! dataset and a pre-trained checkpoint and reports SKIP unless
//! `METAFLORA_FULL_TRAIN`, `METAFLORA_FULL_TEST` and `METAFLORA_FULL_MODEL`
//! are set (`METAFLORA_FULL_TEST_ES` adds the zero-shot check).

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use metaflora_core::alignment::{align_labels, decode_word_labels, extract_spans, SubwordLabel};
use metaflora_core::corpus::{is_valid_iob, read_conll, repair_iob, write_conll};
use metaflora_core::evaluation::{evaluate, macro_prf, token_confusion};
use metaflora_core::generative::spans_to_iob;
use metaflora_core::{Dataset, LabeledSentence, Language, Tag};
use metaflora_tagger::{predict, train, TrainConfig, BUILTIN_TINY};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

use Verdict::{Fail, Pass, Skip};

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn run(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_metaflora"))
        .args(args)
        .env_remove("METAPHOR_LLM_API_KEY")
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn load(path: &Path) -> Dataset {
    read_conll(std::io::BufReader::new(fs::File::open(path).unwrap()), Language::English).unwrap()
}

const WORDS: &[&str] = &[
    "the", "(Red", "powder", "puff)", "rose", "lion's", "foot,", "blooms", "in", "spring.", "Moonlight", "a", "shrub",
];

fn random_tags(rng: &mut ChaCha8Rng, n: usize) -> Vec<Tag> {
    (0..n).map(|_| *Tag::ALL.choose(rng).unwrap()).collect()
}

fn random_sentence(rng: &mut ChaCha8Rng, max_len: usize) -> Vec<String> {
    let n = rng.random_range(1..=max_len);
    (0..n).map(|_| WORDS.choose(rng).unwrap().to_string()).collect()
}

/// Per-position tallies and P/R/F1 recomputed from scratch.
fn brute_force_macro(gold: &[Vec<Tag>], pred: &[Vec<Tag>]) -> (f64, f64, f64) {
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let (mut ps, mut rs, mut fs) = (0.0, 0.0, 0.0);
    for c in Tag::ALL {
        let (mut tp, mut fp, mut fn_) = (0, 0, 0);
        for (g, p) in gold.iter().zip(pred) {
            for (&gt, &pt) in g.iter().zip(p) {
                tp += (gt == c && pt == c) as usize;
                fp += (gt != c && pt == c) as usize;
                fn_ += (gt == c && pt != c) as usize;
            }
        }
        let p = ratio(tp, tp + fp);
        let r = ratio(tp, tp + fn_);
        let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
        ps += p;
        rs += r;
        fs += f;
    }
    (ps / 3.0, rs / 3.0, fs / 3.0)
}

fn metric_oracle() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pairs = 2000;
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let n_sent = rng.random_range(1..=4);
        let mut gold = Vec::new();
        let mut pred = Vec::new();
        for _ in 0..n_sent {
            let len = rng.random_range(1..=30);
            let tokens: Vec<String> = (0..len).map(|i| format!("w{i}")).collect();
            gold.push(LabeledSentence::new(tokens.clone(), random_tags(&mut rng, len)).unwrap());
            pred.push(LabeledSentence::new(tokens, random_tags(&mut rng, len)).unwrap());
        }
        let m = macro_prf(&token_confusion(&gold, &pred).unwrap());
        let g: Vec<Vec<Tag>> = gold.iter().map(|s| s.tags.clone()).collect();
        let p: Vec<Vec<Tag>> = pred.iter().map(|s| s.tags.clone()).collect();
        let (bp, br, bf) = brute_force_macro(&g, &p);
        worst = worst
            .max((m.precision - bp).abs())
            .max((m.recall - br).abs())
            .max((m.f1 - bf).abs());
    }
    let elapsed = start.elapsed();
    check(
        worst <= 1e-9 && elapsed < Duration::from_secs(30),
        format!("{pairs} pairs, max |diff| {worst:.1e}, {:.2}s", elapsed.as_secs_f64()),
    )
}

fn iob_integrity(model_dir: Option<&Path>) -> Verdict {
    let start = Instant::now();
    let cases = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut failures = Vec::new();

    for _ in 0..cases {
        let tokens = random_sentence(&mut rng, 30);
        let tags = random_tags(&mut rng, tokens.len());
        let once = repair_iob(&LabeledSentence::new(tokens.clone(), tags).unwrap());
        if !is_valid_iob(&once.tags) || repair_iob(&once) != once {
            failures.push("repair");
        }

        let names: Vec<String> = (0..rng.random_range(0..4))
            .map(|_| {
                let a = rng.random_range(0..tokens.len());
                let b = rng.random_range(a..tokens.len().min(a + 3));
                tokens[a..=b].join(" ")
            })
            .collect();
        let tagged = spans_to_iob(&tokens, &names).sentence;
        if !is_valid_iob(&tagged.tags) || tagged.tokens != tokens {
            failures.push("spans_to_iob");
        }

        let sentences: Vec<LabeledSentence> = (0..rng.random_range(1..4))
            .map(|_| {
                let t = random_sentence(&mut rng, 30);
                repair_iob(&LabeledSentence::new(t.clone(), random_tags(&mut rng, t.len())).unwrap())
            })
            .collect();
        let d = Dataset::new(Language::English, sentences);
        let mut buf = Vec::new();
        write_conll(&d, &mut buf).unwrap();
        if read_conll(&buf[..], Language::English).unwrap().sentences != d.sentences {
            failures.push("conll");
        }

        let valid = repair_iob(&LabeledSentence::new(tokens.clone(), random_tags(&mut rng, tokens.len())).unwrap());
        let counts: Vec<usize> = tokens.iter().map(|_| rng.random_range(1..=4)).collect();
        let aligned = align_labels(&tokens, &valid.tags, &counts).unwrap();
        let preds: Vec<Tag> = aligned
            .labels
            .iter()
            .map(|l| match l {
                SubwordLabel::Label(t) => *t,
                SubwordLabel::Ignore => *Tag::ALL.choose(&mut rng).unwrap(),
            })
            .collect();
        if decode_word_labels(&preds, &aligned.offsets).unwrap() != valid.tags {
            failures.push("align/decode");
        }
        let spans = extract_spans(&valid);
        if spans.windows(2).any(|w| w[0].end >= w[1].start) {
            failures.push("spans");
        }
    }

    let mut predicted = 0;
    if let Some(dir) = model_dir {
        let inputs: Vec<Vec<String>> = (0..cases).map(|_| random_sentence(&mut rng, 30)).collect();
        let handle = metaflora_tagger::ModelHandle {
            config: TrainConfig::default(),
            artifact_path: dir.to_path_buf(),
        };
        let out = predict(&handle, &inputs).unwrap();
        for (o, i) in out.sentences.iter().zip(&inputs) {
            if !is_valid_iob(&o.tags) || o.tags.len() != i.len() {
                failures.push("predict");
            }
        }
        predicted = out.sentences.len();
    }
    let elapsed = start.elapsed();
    check(
        failures.is_empty() && predicted == cases && elapsed < Duration::from_secs(120),
        format!(
            "{cases} cases each (repair, spans_to_iob, conll, align/decode, predict x{predicted}), {} failures, {:.2}s",
            failures.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn annotation_example(dir: &Path) -> Verdict {
    let out = dir.join("example.conll");
    let o = run(&[
        "tag",
        "--corpus",
        s(&fixture("corpus_en.txt")),
        "--lexicon",
        s(&fixture("single_name_lexicon.csv")),
        "--out",
        s(&out),
    ]);
    if o.status.code() != Some(0) {
        return Fail(String::from_utf8_lossy(&o.stderr).into_owned());
    }
    let first = &load(&out).sentences[0];
    let tags: Vec<&str> = first.tags.iter().map(|t| t.as_str()).collect();
    let tokens_ok = first.tokens.len() == 10 && first.tokens[2] == "(Red" && first.tokens[4] == "puff)";
    check(
        tokens_ok && tags == ["O", "O", "B", "I", "I", "O", "O", "O", "O", "O"],
        format!("{} -> {}", first.tokens.join(" "), tags.join(" ")),
    )
}

fn split_contract(dir: &Path) -> Verdict {
    let input = dir.join("synthetic.conll");
    let mut text = String::new();
    for i in 0..2020 {
        if i % 2 == 0 {
            text.push_str(&format!("s{i}\tO\nthe\tO\nRed\tB\npowder\tI\npuff\tI\n\n"));
        } else {
            text.push_str(&format!("s{i}\tO\nplain\tO\nshrub\tO\n\n"));
        }
    }
    fs::write(&input, text).unwrap();
    let split = |tag: &str| {
        let train = dir.join(format!("train_{tag}.conll"));
        let test = dir.join(format!("test_{tag}.conll"));
        let o = run(&[
            "balance-split",
            "--in",
            s(&input),
            "--ratio",
            "1.0",
            "--train-n",
            "1500",
            "--test-n",
            "520",
            "--seed",
            "42",
            "--train-out",
            s(&train),
            "--test-out",
            s(&test),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        (fs::read(&train).unwrap(), fs::read(&test).unwrap(), train, test)
    };
    let (a_train, a_test, train_path, test_path) = split("a");
    let (b_train, b_test, _, _) = split("b");
    let ids = |p: &Path| -> BTreeSet<String> { load(p).sentences.iter().map(|s| s.tokens[0].clone()).collect() };
    let (tr, te) = (ids(&train_path), ids(&test_path));
    let (n_tr, n_te) = (load(&train_path).len(), load(&test_path).len());
    let identical = a_train == b_train && a_test == b_test;
    let disjoint = tr.is_disjoint(&te);
    let covers = tr.len() + te.len() == 2020;
    check(
        identical && disjoint && covers && n_tr == 1500 && n_te == 520,
        format!("train {n_tr}, test {n_te}, disjoint {disjoint}, covers all {covers}, byte-identical rerun {identical}"),
    )
}

fn learnability(dir: &Path) -> (Verdict, Option<PathBuf>) {
    let start = Instant::now();
    let data = load(&fixture("smoke_train.conll"));
    let model_id = std::env::var("METAFLORA_SMOKE_MODEL").unwrap_or_else(|_| BUILTIN_TINY.to_string());
    let config = TrainConfig {
        model_id: model_id.clone(),
        epochs: 30,
        learning_rate: 3e-2,
        batch_size: 2,
        seed: 42,
        ..TrainConfig::default()
    };
    let out = dir.join("smoke_model");
    let outcome = match train(&data, &config, &out) {
        Ok(o) => o,
        Err(e) => return (Fail(format!("training failed: {e}")), None),
    };
    let tokens: Vec<Vec<String>> = data.sentences.iter().map(|s| s.tokens.clone()).collect();
    let pred = predict(&outcome.handle, &tokens).unwrap();
    let f1 = evaluate(&model_id, &data.sentences, &pred.sentences).unwrap().f1;
    let elapsed = start.elapsed();
    let detail = format!(
        "{model_id} (trained from scratch, no pre-trained checkpoint), {} sentences, {} epochs, training-set macro F1 {:.4}, {:.1}s",
        data.len(),
        config.epochs,
        f1,
        elapsed.as_secs_f64()
    );
    (check(data.len() == 32 && f1 >= 0.95 && elapsed <= Duration::from_secs(600), detail), Some(out))
}

fn replay(dir: &Path) -> Verdict {
    let gold = fixture("llm_gold.conll");
    let replay = fixture("llm_replay.jsonl");
    let records = fs::read_to_string(&replay).unwrap();
    let sentences: BTreeSet<String> = records
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["sentence"].to_string())
        .collect();
    let has = |needle: &str| records.lines().any(|l| l.contains(needle));
    let covers_cases = sentences.len() >= 10 && has(r#""raw_response": "No"#) && has("'Red powder puff'") && has(" and moonlight");

    let go = |tag: &str| {
        let out = dir.join(format!("llm_{tag}.conll"));
        let report = dir.join(format!("llm_{tag}.report.json"));
        let o = run(&[
            "llm-extract",
            "--in",
            s(&gold),
            "--replay",
            s(&replay),
            "--gold",
            s(&gold),
            "--out",
            s(&out),
            "--report",
            s(&report),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        (fs::read(&out).unwrap(), fs::read(&report).unwrap(), out, report)
    };
    let (a_out, a_report, out_path, report_path) = go("a");
    let (b_out, b_report, _, _) = go("b");
    let identical = a_out == b_out && a_report == b_report;

    let report: serde_json::Value = serde_json::from_slice(&fs::read(&report_path).unwrap()).unwrap();
    let dropped = report["stats"]["dropped_names"].as_u64().unwrap();
    let hallucinated = load(&out_path)
        .sentences
        .into_iter()
        .find(|s| s.text() == "The gardener planted daisies near the fence .")
        .map(|s| s.tags.iter().all(|&t| t == Tag::O))
        .unwrap_or(false);
    check(
        identical && covers_cases && hallucinated && dropped >= 1,
        format!(
            "{} sentences, byte-identical IOB and report {identical}, hallucinated name -> all-O {hallucinated}, dropped names {dropped}, macro F1 {:.4}",
            sentences.len(),
            report["evaluation"]["f1"].as_f64().unwrap() * 100.0
        ),
    )
}

fn full_scale(dir: &Path) -> Verdict {
    let vars = ["METAFLORA_FULL_TRAIN", "METAFLORA_FULL_TEST", "METAFLORA_FULL_MODEL"];
    let values: Vec<Option<String>> = vars.iter().map(|v| std::env::var(v).ok()).collect();
    let [Some(train_path), Some(test_path), Some(model)] = &values[..] else {
        return Skip(format!("set {} to run", vars.join(", ")));
    };
    let config = TrainConfig {
        model_id: model.clone(),
        ..TrainConfig::default()
    };
    let outcome = match train(&load(Path::new(train_path)), &config, &dir.join("full_model")) {
        Ok(o) => o,
        Err(e) => return Fail(format!("training failed: {e}")),
    };
    let score = |path: &Path| {
        let gold = load(path);
        let tokens: Vec<Vec<String>> = gold.sentences.iter().map(|s| s.tokens.clone()).collect();
        let pred = predict(&outcome.handle, &tokens).unwrap();
        evaluate(model.as_str(), &gold.sentences, &pred.sentences).unwrap().f1 * 100.0
    };
    let en = score(Path::new(test_path));
    let mut ok = (en - 92.2349).abs() <= 3.0;
    let mut detail = format!("English test macro F1 {en:.4} (target 92.2349 +/- 3)");
    if let Ok(es_path) = std::env::var("METAFLORA_FULL_TEST_ES") {
        let es = score(Path::new(&es_path));
        ok &= (es - 52.8657).abs() <= 5.0;
        detail.push_str(&format!(", zero-shot Spanish {es:.4} (target 52.8657 +/- 5)"));
    }
    check(ok, detail)
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let (learn, model) = learnability(dir.path());
    let results = [
        ("1 metric oracle equivalence", metric_oracle()),
        ("2 IOB integrity suite", iob_integrity(model.as_deref())),
        ("3 annotation example via `tag`", annotation_example(dir.path())),
        ("4 split contract", split_contract(dir.path())),
        ("5 learnability smoke test", learn),
        ("6 generative replay", replay(dir.path())),
        ("7 full-scale reproduction", full_scale(dir.path())),
    ];
    let mut failed = Vec::new();
    for (name, verdict) in &results {
        match verdict {
            Pass(d) => println!("PASS [{name}] {d}"),
            Skip(d) => println!("SKIP [{name}] {d}"),
            Fail(d) => {
                println!("FAIL [{name}] {d}");
                failed.push(*name);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
