use std::path::{Path, PathBuf};

use super::PreprocessError;

/// Per-step switches for the normalization pipeline plus the drop threshold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreprocessConfig {
    pub lexicon_path: Option<PathBuf>,
    pub min_tokens: usize,
    pub lowercase: bool,
    pub urls: bool,
    pub mentions: bool,
    pub elongation: bool,
    pub punctuation: bool,
    pub hashtags: bool,
    pub emoticons: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            lexicon_path: None,
            min_tokens: 2,
            lowercase: true,
            urls: true,
            mentions: true,
            elongation: true,
            punctuation: true,
            hashtags: true,
            emoticons: true,
        }
    }
}

impl PreprocessConfig {
    /// Parses `key=value` lines. Unset keys keep their defaults.
    ///
    /// Recognized keys: `lexicon_path`, `min_tokens`, `lowercase`, `urls`,
    /// `mentions`, `elongation`, `punctuation`, `hashtags`, `emoticons`.
    pub fn parse(text: &str) -> Result<Self, PreprocessError> {
        let mut cfg = PreprocessConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| PreprocessError::Config {
                line: line_no,
                message: format!("expected key=value, got {line:?}"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let flag = |v: &str| -> Result<bool, PreprocessError> {
                match v.to_ascii_lowercase().as_str() {
                    "1" | "true" | "on" | "yes" => Ok(true),
                    "0" | "false" | "off" | "no" => Ok(false),
                    _ => Err(PreprocessError::Config {
                        line: line_no,
                        message: format!("{key}: expected a boolean, got {v:?}"),
                    }),
                }
            };
            match key {
                "lexicon_path" => cfg.lexicon_path = Some(PathBuf::from(value)),
                "min_tokens" => {
                    cfg.min_tokens = value.parse().map_err(|_| PreprocessError::Config {
                        line: line_no,
                        message: format!("min_tokens: expected a non-negative integer, got {value:?}"),
                    })?
                }
                "lowercase" => cfg.lowercase = flag(value)?,
                "urls" => cfg.urls = flag(value)?,
                "mentions" => cfg.mentions = flag(value)?,
                "elongation" => cfg.elongation = flag(value)?,
                "punctuation" => cfg.punctuation = flag(value)?,
                "hashtags" => cfg.hashtags = flag(value)?,
                "emoticons" => cfg.emoticons = flag(value)?,
                other => {
                    return Err(PreprocessError::Config {
                        line: line_no,
                        message: format!("unknown key {other:?}"),
                    })
                }
            }
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, PreprocessError> {
        let text = std::fs::read_to_string(path).map_err(|source| PreprocessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::parse(&text)?;
        // relative lexicon paths resolve against the config file's directory
        if let (Some(lex), Some(dir)) = (cfg.lexicon_path.as_mut(), path.parent()) {
            if lex.is_relative() {
                *lex = dir.join(&*lex);
            }
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_and_keeps_defaults() {
        let cfg = PreprocessConfig::parse("# pp\nmin_tokens = 3\nhashtags=off\n").unwrap();
        assert_eq!(cfg.min_tokens, 3);
        assert!(!cfg.hashtags);
        assert!(cfg.urls && cfg.emoticons && cfg.lowercase);
        assert_eq!(cfg.lexicon_path, None);
    }

    #[test]
    fn rejects_unknown_key_and_bad_values() {
        let err = PreprocessConfig::parse("stem=true").unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
        assert!(PreprocessConfig::parse("urls=maybe").is_err());
        assert!(PreprocessConfig::parse("min_tokens=-1").is_err());
        assert!(PreprocessConfig::parse("just words").is_err());
    }
}
