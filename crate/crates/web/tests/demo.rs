use metaflora_core::Tag::{B, I, O};
use metaflora_web::{parse_answer, score, tag_with_lexicon};

const SHRUB: &str = "calliandra haematocephala (Red powder puff) is an evergreen, spreading shrub";

#[test]
fn tags_the_shrub_sentence() {
    let t = tag_with_lexicon(SHRUB, "surface,is_metaphoric,language\nRed powder puff,true,en\n").unwrap();
    assert_eq!(t.sentences.len(), 1);
    assert_eq!(t.sentences[0].tags, [O, O, B, I, I, O, O, O, O, O]);
    assert_eq!(t.sentences[0].spans[0].text, "(Red powder puff)");
    assert_eq!(t.names, 1);
    assert!(t.conll.starts_with("calliandra\tO\nhaematocephala\tO\n(Red\tB\n"));
}

#[test]
fn bad_lexicon_is_an_error() {
    assert!(tag_with_lexicon(SHRUB, "name\nRed powder puff\n").is_err());
}

#[test]
fn parses_answers() {
    let a = parse_answer("Yes, the metaphoric flower name is 'Red powder puff'.", SHRUB).unwrap();
    assert!(a.has_metaphor);
    assert_eq!(a.names, ["Red powder puff"]);
    assert_eq!(a.sentence.tags, [O, O, B, I, I, O, O, O, O, O]);
    assert!(a.prompt.ends_with(&format!(" : {SHRUB}")));

    let no = parse_answer("No.", SHRUB).unwrap();
    assert!(!no.has_metaphor && no.sentence.spans.is_empty());

    let made_up = parse_answer("Yes, it is 'Starlight'.", SHRUB).unwrap();
    assert_eq!(made_up.dropped, ["Starlight"]);
    assert!(made_up.sentence.tags.iter().all(|&t| t == O));

    assert!(parse_answer("Hmm.", SHRUB).is_err());
    assert!(parse_answer("No.", "  ").is_err());
}

#[test]
fn scores_conll_text() {
    let gold = "a\tB\nb\tI\nc\tO\n\n";
    let pred = "a\tB\nb\tO\nc\tO\n\n";
    let e = score(gold, pred).unwrap();
    assert!((e.report.f1 - (1.0 + 0.0 + 2.0 / 3.0) / 3.0).abs() < 1e-12);
    assert!(e.markdown.contains("| prediction | "));
    assert!(score(gold, "a\tB\n\n").is_err());
}
