//! Seeded synthetic tweet corpora for smoke tests and demos.
//!
//! Each class draws from its own small keyword vocabulary mixed with shared
//! filler words, then picks up the usual noise: mentions, links, hashtags,
//! elongated words and emoticons. Vocabularies are deliberately neutral.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datasets::{apportion, Corpus, CorpusId, LabeledExample};
use crate::label::{ClassLabel, NUM_CLASSES};

const VOCAB: [&[&str]; NUM_CLASSES] = [
    &[
        "storm", "thunder", "granite", "volcano", "glacier", "canyon", "tornado", "boulder", "lava", "avalanche", "quake",
        "cliff", "iceberg", "blizzard", "cyclone", "meteor", "crater", "lightning", "hail", "flood",
    ],
    &[
        "pickle", "waffle", "noodle", "pancake", "muffin", "pretzel", "biscuit", "dumpling", "cupcake", "donut", "bagel",
        "taco", "burrito", "nacho", "popcorn", "toast", "sandwich", "cookie", "brownie", "pudding",
    ],
    &[
        "garden", "library", "bicycle", "sunrise", "meadow", "violin", "harbor", "lantern", "orchard", "pottery", "museum",
        "picnic", "journey", "painting", "concert", "river", "forest", "window", "letter", "morning",
    ],
];

const FILLER: &[&str] = &[
    "the", "a", "is", "so", "just", "really", "today", "this", "that", "my", "you", "we", "they", "what", "about", "again",
    "very", "here", "there", "now", "still", "never", "always", "going", "think", "know", "like", "people", "time", "day",
];

const EMOTICONS: &[&str] = &[":)", ":(", ":d", ";)", ":p", "<3", "\u{1F602}", "\u{1F621}"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n: usize,
    /// Class proportions in label order; normalized before use.
    pub class_fractions: [f64; NUM_CLASSES],
    /// Probability that a body token is a class keyword rather than filler.
    pub signal: f64,
    /// Probability that a keyword comes from a different class.
    pub confusion: f64,
    pub min_tokens: usize,
    pub max_tokens: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n: 400,
            class_fractions: [0.15, 0.55, 0.30],
            signal: 0.5,
            confusion: 0.05,
            min_tokens: 5,
            max_tokens: 12,
            seed: 0,
        }
    }
}

fn elongate(word: &str, rng: &mut ChaCha8Rng) -> String {
    let last = word.chars().last().unwrap_or('o');
    let extra = rng.random_range(2..6);
    format!("{word}{}", last.to_string().repeat(extra))
}

fn tweet(label: ClassLabel, config: &SynthConfig, rng: &mut ChaCha8Rng) -> String {
    let mut parts: Vec<String> = Vec::new();
    if rng.random_bool(0.3) {
        parts.push(format!("@user{}", rng.random_range(0..1000)));
    }
    let len = rng.random_range(config.min_tokens..=config.max_tokens.max(config.min_tokens));
    let mut keywords = 0;
    for _ in 0..len {
        if rng.random_bool(config.signal) {
            let class = if rng.random_bool(config.confusion) {
                rng.random_range(0..NUM_CLASSES)
            } else {
                label.index()
            };
            let w = *VOCAB[class].choose(rng).expect("vocabulary");
            parts.push(if rng.random_bool(0.5) { w.to_uppercase() } else { w.to_string() });
            keywords += 1;
        } else {
            let w = *FILLER.choose(rng).expect("filler");
            parts.push(if rng.random_bool(0.1) { elongate(w, rng) } else { w.to_string() });
        }
    }
    if keywords == 0 {
        parts.push(VOCAB[label.index()].choose(rng).expect("vocabulary").to_string());
    }
    if rng.random_bool(0.2) {
        let a = VOCAB[label.index()].choose(rng).expect("vocabulary");
        let b = FILLER.choose(rng).expect("filler");
        parts.push(format!("#{b}{a}"));
    }
    if rng.random_bool(0.15) {
        parts.push(EMOTICONS.choose(rng).expect("emoticons").to_string());
    }
    if rng.random_bool(0.2) {
        parts.push(format!("https://t.co/{:08x}", rng.random::<u32>()));
    }
    if rng.random_bool(0.2) {
        let i = rng.random_range(0..parts.len());
        parts[i].push(*['!', '?', '.', ','].choose(rng).expect("punctuation"));
    }
    parts.join(" ")
}

/// Labels are apportioned exactly by `class_fractions` and then shuffled.
pub fn generate(config: &SynthConfig) -> Corpus {
    let total: f64 = config.class_fractions.iter().sum();
    let fractions: Vec<f64> = config.class_fractions.iter().map(|f| f / total).collect();
    let counts = apportion(config.n, &fractions);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut labels: Vec<ClassLabel> = ClassLabel::ALL
        .iter()
        .zip(&counts)
        .flat_map(|(&l, &c)| std::iter::repeat_n(l, c))
        .collect();
    rand::seq::SliceRandom::shuffle(labels.as_mut_slice(), &mut rng);
    let examples = labels
        .into_iter()
        .enumerate()
        .map(|(i, label)| LabeledExample {
            id: format!("synthetic:{i}"),
            text: tweet(label, config, &mut rng),
            label,
            source: CorpusId::Synthetic,
        })
        .collect();
    Corpus::new(examples)
}
