//! Tweet normalization.
//!
//! The pipeline runs a fixed sequence of steps over each tweet:
//!
//! 1. lowercase
//! 2. URL removal (`http://`, `https://`, bare `t.co/` links)
//! 3. user-mention removal
//! 4. elongation collapse (`yeeessss` -> `yes`)
//! 5. stop words are kept (no-op)
//! 6. punctuation, unknown code points and delimiters removed
//! 7. hashtag `#` stripped and the body segmented (`#notracism` -> `not racism`)
//! 8. length filter: fewer than `min_tokens` tokens drops the tweet
//! 9. emoticon removal
//!
//! The length filter is evaluated on the final text, so a tweet that only
//! reaches the threshold because of emoticons is still dropped. Every removal
//! is replaced by whitespace, which keeps the pipeline idempotent.

mod config;
mod lexicon;

use std::path::PathBuf;
use std::sync::{Arc, LazyLock};

use regex::Regex;
use thiserror::Error;

pub use config::PreprocessConfig;
pub use lexicon::Lexicon;

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("cannot read lexicon {path}: {source}")]
    Lexicon {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// A tweet as it appears in a source corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawTweet {
    pub id: String,
    pub text: String,
}

impl RawTweet {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        RawTweet {
            id: id.into(),
            text: text.into(),
        }
    }
}

/// Normalized text: lowercase alphanumerics separated by single spaces.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CleanText {
    text: String,
    token_count: usize,
}

impl CleanText {
    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn token_count(&self) -> usize {
        self.token_count
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Normalized {
    Clean(CleanText),
    Dropped,
}

impl Normalized {
    pub fn clean(self) -> Option<CleanText> {
        match self {
            Normalized::Clean(c) => Some(c),
            Normalized::Dropped => None,
        }
    }

    pub fn is_dropped(&self) -> bool {
        matches!(self, Normalized::Dropped)
    }
}

static URL_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"https?://\S*|\bt\.co/\S*").expect("url pattern"));
static MENTION_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"@\w+").expect("mention pattern"));

/// ASCII emoticons, in lowercased form. Entries that are purely alphanumeric
/// (e.g. `xd`) are left out: they are indistinguishable from words once
/// punctuation is gone.
const EMOTICONS: &[&str] = &[
    ":)", ":-)", ":))", ":)))", ":(", ":-(", ":((", ":d", ":-d", ";)", ";-)", ";d", ":p", ":-p",
    ";p", ":o", ":-o", ":'(", ":')", ":/", ":-/", ":\\", ":|", ":-|", "<3", "</3", "<33", "^_^",
    "^^", "-_-", "o_o", "o.o", ":*", ":-*", ":3", "=)", "=(", "=d", "=p", "8)", "8-)", "b)",
    ":]", ":[", ">:(", ">:)", "d:", ":@", ":$", "x)", "x(", ":s", "(:", "):", "t_t", ";_;",
    "¯\\_(ツ)_/¯",
];

fn is_emoticon(token: &str) -> bool {
    EMOTICONS.contains(&token)
}

/// Pictographic emoji blocks plus the joiners and selectors used inside emoji sequences.
fn is_emoji(c: char) -> bool {
    matches!(c as u32,
        0x1F000..=0x1FAFF
        | 0x2600..=0x27BF
        | 0x2300..=0x23FF
        | 0x2B00..=0x2BFF
        | 0xFE0E..=0xFE0F
        | 0x200D
        | 0x20E3
        | 0xE0020..=0xE007F
        | 0x3030 | 0x303D | 0x3297 | 0x3299)
}

/// A character allowed in normalized output.
fn is_kept(c: char) -> bool {
    c.is_alphanumeric() && {
        let mut lower = c.to_lowercase();
        lower.next() == Some(c) && lower.next().is_none()
    }
}

/// Collapses emphatic letter repetition in a single word.
///
/// Runs of three or more identical letters become two. If that form is not a
/// lexicon word but the form with those runs reduced to one letter is, the
/// single-letter form wins. Runs of exactly two are never touched.
pub fn collapse_elongation(token: &str, lexicon: &Lexicon) -> String {
    let chars: Vec<char> = token.chars().collect();
    let mut runs: Vec<(char, usize)> = Vec::new();
    for &c in &chars {
        match runs.last_mut() {
            Some((prev, n)) if *prev == c => *n += 1,
            _ => runs.push((c, 1)),
        }
    }
    let elongated = |&(c, n): &(char, usize)| n >= 3 && c.is_alphabetic();
    if !runs.iter().any(elongated) {
        return token.to_string();
    }
    let render = |target: usize| -> String {
        runs.iter()
            .flat_map(|run| {
                let n = if elongated(run) { target } else { run.1 };
                std::iter::repeat_n(run.0, n)
            })
            .collect()
    };
    let double = render(2);
    if lexicon.contains(&double) {
        return double;
    }
    let single = render(1);
    if lexicon.contains(&single) {
        single
    } else {
        double
    }
}

/// Splits a hashtag body into lexicon words, greedily taking the longest
/// matching prefix from left to right. Once no prefix matches, the rest of the
/// body is emitted verbatim as a single token.
pub fn segment_hashtag(tag: &str, lexicon: &Lexicon) -> Vec<String> {
    let chars: Vec<char> = tag.chars().collect();
    let mut words = Vec::new();
    let mut start = 0;
    while start < chars.len() {
        let longest = (start + 1..=chars.len().min(start + lexicon.max_chars()))
            .rev()
            .find(|&end| lexicon.contains(&chars[start..end].iter().collect::<String>()));
        match longest {
            Some(end) => {
                words.push(chars[start..end].iter().collect());
                start = end;
            }
            None => {
                words.push(chars[start..].iter().collect());
                break;
            }
        }
    }
    words
}

/// Configured normalization pipeline. Cheap to clone and safe to share across threads.
#[derive(Debug, Clone)]
pub struct Preprocessor {
    config: PreprocessConfig,
    lexicon: Arc<Lexicon>,
}

impl Default for Preprocessor {
    fn default() -> Self {
        Preprocessor {
            config: PreprocessConfig::default(),
            lexicon: Lexicon::bundled(),
        }
    }
}

impl Preprocessor {
    /// Builds a pipeline, loading `config.lexicon_path` when set.
    pub fn new(config: PreprocessConfig) -> Result<Self, PreprocessError> {
        let lexicon = match &config.lexicon_path {
            Some(path) => Arc::new(Lexicon::load(path)?),
            None => Lexicon::bundled(),
        };
        Ok(Preprocessor { config, lexicon })
    }

    pub fn with_lexicon(config: PreprocessConfig, lexicon: Arc<Lexicon>) -> Self {
        Preprocessor { config, lexicon }
    }

    pub fn config(&self) -> &PreprocessConfig {
        &self.config
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn normalize_tweet(&self, tweet: &RawTweet) -> Normalized {
        self.normalize(&tweet.text)
    }

    pub fn normalize(&self, text: &str) -> Normalized {
        let cfg = &self.config;
        let mut s = if cfg.lowercase {
            text.to_lowercase()
        } else {
            text.to_string()
        };
        if cfg.urls {
            s = URL_RE.replace_all(&s, " ").into_owned();
        }
        if cfg.mentions {
            s = MENTION_RE.replace_all(&s, " ").into_owned();
        }
        if cfg.elongation {
            s = self.collapse_words(&s);
        }
        if cfg.punctuation {
            s = strip_punctuation(&s, cfg.emoticons);
        }
        let mut tokens: Vec<String> = s.split_whitespace().map(str::to_string).collect();
        if cfg.hashtags {
            tokens = tokens
                .into_iter()
                .flat_map(|t| match t.strip_prefix('#') {
                    Some(body) if !body.is_empty() => segment_hashtag(body, &self.lexicon),
                    _ => vec![t],
                })
                .collect();
        }
        if cfg.emoticons {
            tokens = tokens
                .into_iter()
                .filter(|t| !is_emoticon(t))
                .flat_map(|t| {
                    t.split(is_emoji)
                        .filter(|p| !p.is_empty())
                        .map(str::to_string)
                        .collect::<Vec<_>>()
                })
                .collect();
        }
        if tokens.len() < cfg.min_tokens || tokens.is_empty() {
            return Normalized::Dropped;
        }
        Normalized::Clean(CleanText {
            token_count: tokens.len(),
            text: tokens.join(" "),
        })
    }

    /// Applies elongation collapse to every maximal run of letters.
    fn collapse_words(&self, s: &str) -> String {
        let mut out = String::with_capacity(s.len());
        let mut word = String::new();
        for c in s.chars() {
            if c.is_alphabetic() {
                word.push(c);
            } else {
                if !word.is_empty() {
                    out.push_str(&collapse_elongation(&word, &self.lexicon));
                    word.clear();
                }
                out.push(c);
            }
        }
        if !word.is_empty() {
            out.push_str(&collapse_elongation(&word, &self.lexicon));
        }
        out
    }
}

/// Replaces every character outside letters, digits and whitespace with a
/// space. A `#` survives only where it opens a token followed by a kept
/// character. With `keep_emoticons`, whole emoticon tokens and emoji are left
/// in place (as separate tokens) for the emoticon step.
fn strip_punctuation(s: &str, keep_emoticons: bool) -> String {
    let mut out = String::with_capacity(s.len());
    for token in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        if keep_emoticons && is_emoticon(token) {
            out.push_str(token);
            continue;
        }
        let chars: Vec<char> = token.chars().collect();
        for (i, &c) in chars.iter().enumerate() {
            if is_kept(c) {
                out.push(c);
            } else if c == '#'
                && out.chars().last().is_none_or(|p| p == ' ')
                && chars.get(i + 1).is_some_and(|&n| is_kept(n))
            {
                out.push('#');
            } else if keep_emoticons && is_emoji(c) {
                out.push(' ');
                out.push(c);
                out.push(' ');
            } else {
                out.push(' ');
            }
        }
    }
    out
}
