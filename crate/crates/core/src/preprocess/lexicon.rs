use std::collections::HashSet;
use std::path::Path;
use std::sync::{Arc, LazyLock};

use super::PreprocessError;

static BUNDLED: LazyLock<Arc<Lexicon>> =
    LazyLock::new(|| Arc::new(Lexicon::from_text(include_str!("../../data/lexicon.txt"))));

/// Reference word list used for elongation checks and hashtag segmentation.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    words: HashSet<String>,
    max_chars: usize,
}

impl Lexicon {
    /// The English word list shipped with the crate.
    pub fn bundled() -> Arc<Lexicon> {
        Arc::clone(&BUNDLED)
    }

    /// One word per line; blank lines and `#` comments are ignored. Words are lowercased.
    pub fn from_text(text: &str) -> Self {
        Self::from_words(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let words: HashSet<String> = words.into_iter().map(|w| w.as_ref().to_lowercase()).collect();
        let max_chars = words.iter().map(|w| w.chars().count()).max().unwrap_or(0);
        Lexicon { words, max_chars }
    }

    pub fn load(path: &Path) -> Result<Self, PreprocessError> {
        let text = std::fs::read_to_string(path).map_err(|source| PreprocessError::Lexicon {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Self::from_text(&text))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Length in chars of the longest entry.
    pub fn max_chars(&self) -> usize {
        self.max_chars
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_list_has_expected_entries() {
        let lex = Lexicon::bundled();
        for w in ["yes", "so", "not", "racism", "peace", "cool", "the", "and", "is"] {
            assert!(lex.contains(w), "{w} missing");
        }
        for w in ["yess", "soo", "x", "xqzt9"] {
            assert!(!lex.contains(w), "{w} unexpectedly present");
        }
    }

    #[test]
    fn bundled_words_have_no_triple_runs() {
        let lex = Lexicon::bundled();
        for w in &lex.words {
            let c: Vec<char> = w.chars().collect();
            assert!(c.windows(3).all(|t| !(t[0] == t[1] && t[1] == t[2])), "{w}");
        }
    }

    #[test]
    fn comments_and_blanks_skipped() {
        let lex = Lexicon::from_text("# header\n\nFoo\n bar \n");
        assert_eq!(lex.len(), 2);
        assert!(lex.contains("foo"));
        assert_eq!(lex.max_chars(), 3);
    }
}
