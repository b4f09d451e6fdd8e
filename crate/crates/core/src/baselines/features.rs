use std::collections::BTreeMap;
use std::hash::Hasher;

use fnv::FnvHasher;
use serde::{Deserialize, Serialize};

/// Width of the hashed feature space.
pub const FEATURE_DIM: usize = 1 << 18;
/// Index reserved for the constant bias input.
pub const BIAS_INDEX: u32 = 0;

/// Sparse non-negative feature counts, sorted by index. The bias slot is always present with value 1.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureVector {
    entries: Vec<(u32, f64)>,
}

impl FeatureVector {
    /// Builds a vector from `(index, value)` pairs; duplicate indices are summed.
    /// The bias slot is set to 1 regardless of the input.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u32, f64)>) -> Self {
        let mut map: BTreeMap<u32, f64> = BTreeMap::new();
        for (i, v) in pairs {
            if i != BIAS_INDEX {
                *map.entry(i).or_insert(0.0) += v;
            }
        }
        let mut entries = Vec::with_capacity(map.len() + 1);
        entries.push((BIAS_INDEX, 1.0));
        entries.extend(map);
        FeatureVector { entries }
    }

    /// Dense input `x` mapped to indices `1..=x.len()`, bias at 0.
    pub fn from_dense(x: &[f64]) -> Self {
        Self::from_pairs(x.iter().enumerate().map(|(i, &v)| (i as u32 + 1, v)))
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn get(&self, index: u32) -> f64 {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map(|p| self.entries[p].1)
            .unwrap_or(0.0)
    }

    /// Number of non-bias entries.
    pub fn nnz(&self) -> usize {
        self.entries.len().saturating_sub(1)
    }

    /// One past the largest index in use.
    pub fn min_dim(&self) -> usize {
        self.entries.last().map_or(1, |&(i, _)| i as usize + 1)
    }
}

/// How a text is turned into hashed features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureSpec {
    /// Character n-grams with `min <= n <= max`.
    CharNgrams { min: usize, max: usize },
    /// Whitespace-separated words.
    WordUnigrams,
}

impl FeatureSpec {
    pub fn featurize(&self, text: &str) -> FeatureVector {
        match *self {
            FeatureSpec::CharNgrams { min, max } => char_ngrams(text, min, max),
            FeatureSpec::WordUnigrams => {
                FeatureVector::from_pairs(text.split_whitespace().map(|w| (hash_index(b'w', w), 1.0)))
            }
        }
    }
}

/// Maps a feature key into `1..FEATURE_DIM` with 64-bit FNV-1a. The kind byte keeps
/// words and character n-grams with the same spelling apart.
pub fn hash_index(kind: u8, key: &str) -> u32 {
    let mut h = FnvHasher::default();
    h.write(&[kind]);
    h.write(key.as_bytes());
    (1 + h.finish() % (FEATURE_DIM as u64 - 1)) as u32
}

pub fn char_ngrams(text: &str, min: usize, max: usize) -> FeatureVector {
    let chars: Vec<char> = text.chars().collect();
    let mut pairs = Vec::new();
    let mut gram = String::new();
    for n in min.max(1)..=max {
        for window in chars.windows(n) {
            gram.clear();
            gram.extend(window);
            pairs.push((hash_index(b'c', &gram), 1.0));
        }
    }
    FeatureVector::from_pairs(pairs)
}
