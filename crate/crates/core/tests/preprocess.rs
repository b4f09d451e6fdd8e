use forge_core::preprocess::{Lexicon, Normalized, PreprocessConfig, Preprocessor};
use proptest::prelude::*;

const GOLDEN: &str = include_str!("fixtures/preprocess_golden.tsv");

fn golden_cases() -> Vec<(String, Option<String>)> {
    GOLDEN
        .lines()
        .filter(|l| !l.starts_with('#') || l.contains('\t'))
        .filter(|l| !l.starts_with("# input"))
        .map(|l| {
            let (input, expected) = l.split_once('\t').expect("tab-separated fixture line");
            let expected = (expected != "<dropped>").then(|| expected.to_string());
            (input.to_string(), expected)
        })
        .collect()
}

#[test]
fn golden_fixture() {
    let pp = Preprocessor::default();
    let cases = golden_cases();
    assert_eq!(cases.len(), 50);
    let mut failures = Vec::new();
    for (input, expected) in &cases {
        let got = pp.normalize(input).clean().map(|c| c.into_string());
        if &got != expected {
            failures.push(format!("{input:?}: expected {expected:?}, got {got:?}"));
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

#[test]
fn golden_outputs_are_fixed_points() {
    let pp = Preprocessor::default();
    for (_, expected) in golden_cases() {
        if let Some(e) = expected {
            assert_eq!(pp.normalize(&e).clean().map(|c| c.into_string()).as_deref(), Some(e.as_str()));
        }
    }
}

#[test]
fn token_count_matches_text() {
    let pp = Preprocessor::default();
    for (input, _) in golden_cases() {
        if let Normalized::Clean(c) = pp.normalize(&input) {
            assert_eq!(c.token_count(), c.as_str().split(' ').count());
        }
    }
}

#[test]
fn min_tokens_is_configurable() {
    let config = PreprocessConfig { min_tokens: 1, ..Default::default() };
    let pp = Preprocessor::with_lexicon(config, Lexicon::bundled());
    assert_eq!(pp.normalize("tab").clean().unwrap().as_str(), "tab");
    assert!(pp.normalize("@only").is_dropped());
}

#[test]
fn disabled_steps_leave_text_alone() {
    let config = PreprocessConfig::parse("urls=off\nmentions=no\npunctuation=0\nhashtags=false\nemoticons=off\n").unwrap();
    let pp = Preprocessor::with_lexicon(config, Lexicon::bundled());
    assert_eq!(pp.normalize("@Bob sooooo http://x #peace :)").clean().unwrap().as_str(), "@bob so http://x #peace :)");
}

#[test]
fn custom_lexicon_changes_segmentation() {
    let lex = std::sync::Arc::new(Lexicon::from_words(["no", "tra", "cism"]));
    let pp = Preprocessor::with_lexicon(PreprocessConfig::default(), lex);
    assert_eq!(pp.normalize("ok #notracism").clean().unwrap().as_str(), "ok no tra cism");
}

fn tweetish() -> impl Strategy<Value = String> {
    let piece = prop_oneof![
        "[a-zA-Z]{1,8}".boxed(),
        ("[a-z]{1,3}", "[a-z]", 3usize..7).prop_map(|(w, c, n)| format!("{w}{}", c.repeat(n))),
        "@[a-z0-9_]{1,8}",
        "#[a-zA-Z]{1,12}",
        "https?://[a-z./]{1,10}",
        "[!?.,;:'\"()\\-]{1,3}",
        Just(":)".to_string()),
        Just(":-(".to_string()),
        Just("<3".to_string()),
        Just("😂".to_string()),
        "[0-9]{1,4}",
        "[àéîõüßç]{1,3}",
        "\\PC{1,3}",
    ];
    prop::collection::vec(piece, 0..12).prop_map(|v| v.join(" "))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn normalization_is_idempotent(s in tweetish()) {
        let pp = Preprocessor::default();
        if let Some(once) = pp.normalize(&s).clean() {
            let twice = pp.normalize(once.as_str()).clean();
            prop_assert_eq!(twice.as_ref().map(|c| c.as_str()), Some(once.as_str()));
        }
    }

    #[test]
    fn output_is_lowercase_alphanumeric(s in tweetish()) {
        if let Some(c) = Preprocessor::default().normalize(&s).clean() {
            prop_assert!(c.as_str().chars().all(|ch| ch == ' ' || ch.is_alphanumeric()), "{:?}", c.as_str());
            prop_assert_eq!(c.as_str().to_lowercase(), c.as_str());
            prop_assert!(c.token_count() >= 2);
            prop_assert!(!c.as_str().contains("  "));
        }
    }
}
