//! Detaches a prefixed conjunction waw ("و", "and") from the following word
//! using a closed word list.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use crate::arabic::{is_arabic_script, normalize, ArabicString};
use crate::error::{Error, Result};

pub const WAW: &str = "\u{0648}";

const SEED_LEXICON: &str = include_str!("../data/waw_seed.txt");

/// A skipped line in a word-list file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineWarning {
    pub line: usize,
    pub text: String,
    pub reason: &'static str,
}

/// Parses a one-word-per-line list: blank and `#` lines are ignored, entries
/// are normalized, lines that are not Arabic script are reported and skipped.
pub(crate) fn parse_word_list(text: &str) -> (Vec<(usize, ArabicString)>, Vec<LineWarning>) {
    let mut words = Vec::new();
    let mut warnings = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !line.chars().all(is_arabic_script) {
            warnings.push(LineWarning {
                line: n + 1,
                text: line.to_string(),
                reason: "not a single Arabic-script word",
            });
            continue;
        }
        words.push((n + 1, normalize(line)));
    }
    (words, warnings)
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Default)]
pub struct WawLexicon {
    words: HashSet<String>,
    source: String,
}

impl WawLexicon {
    /// Builds a lexicon from word-list text. Returns the skipped lines.
    pub fn from_text(text: &str, source: impl Into<String>) -> (Self, Vec<LineWarning>) {
        let (entries, mut warnings) = parse_word_list(text);
        let mut words = HashSet::with_capacity(entries.len());
        for (line, w) in entries {
            if w.as_str() == WAW {
                warnings.push(LineWarning {
                    line,
                    text: w.into_string(),
                    reason: "bare conjunction is not a lexicon entry",
                });
                continue;
            }
            words.insert(w.into_string());
        }
        let lexicon = WawLexicon {
            words,
            source: source.into(),
        };
        (lexicon, warnings)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(Self, Vec<LineWarning>)> {
        let path = path.as_ref();
        let text = read_text(path)?;
        let (lex, warnings) = Self::from_text(&text, path.display().to_string());
        log::info!(
            "loaded {} waw-lexicon entries from {}",
            lex.len(),
            path.display()
        );
        for w in &warnings {
            log::warn!(
                "{}:{}: skipped {:?}: {}",
                path.display(),
                w.line,
                w.text,
                w.reason
            );
        }
        Ok((lex, warnings))
    }

    /// The bundled seed lexicon.
    pub fn seed() -> Self {
        Self::from_text(SEED_LEXICON, "builtin:waw_seed").0
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

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn split_waw(&self, token: &str) -> Vec<String> {
        split_waw(token, self)
    }
}

/// Splits `token` into `["و", rest]` when it starts with waw, has at least
/// three characters, is not itself a lexicon word, and `rest` is one.
pub fn split_waw(token: &str, lex: &WawLexicon) -> Vec<String> {
    if let Some(rest) = token.strip_prefix(WAW) {
        if token.chars().count() >= 3 && !lex.contains(token) && lex.contains(rest) {
            return vec![WAW.to_string(), rest.to_string()];
        }
    }
    vec![token.to_string()]
}

pub fn wawanize_turn<S: AsRef<str>>(tokens: &[S], lex: &WawLexicon) -> Vec<String> {
    tokens
        .iter()
        .flat_map(|t| split_waw(t.as_ref(), lex))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lex(words: &str) -> WawLexicon {
        WawLexicon::from_text(words, "test").0
    }

    #[test]
    fn dedup_and_normalize_on_load() {
        let (l, w) = WawLexicon::from_text("قال\nحساب\nقال\n", "t");
        assert_eq!(l.len(), 2);
        assert!(w.is_empty());
        let (l, _) = WawLexicon::from_text("ة\n", "t");
        assert!(l.contains("ه"));
        let (l, _) = WawLexicon::from_text("", "t");
        assert_eq!(l.len(), 0);
    }

    #[test]
    fn malformed_lines_are_reported() {
        let (l, w) = WawLexicon::from_text("# comment\nقال\nhello\nقال حساب\nو\n", "t");
        assert_eq!(l.len(), 1);
        assert_eq!(w.len(), 3);
        assert_eq!(w[0].line, 3);
        assert_eq!(w[1].line, 4);
        assert_eq!(w[2].line, 5);
    }

    #[test]
    fn splits() {
        let l = lex("قال\nتمام\n");
        assert_eq!(split_waw("وقال", &l), vec!["و", "قال"]);
        assert_eq!(split_waw("وقت", &l), vec!["وقت"]);
        assert_eq!(split_waw("و", &l), vec!["و"]);
        assert_eq!(
            wawanize_turn(&["وقال", "تمام"], &l),
            vec!["و", "قال", "تمام"]
        );
        assert!(wawanize_turn::<&str>(&[], &l).is_empty());
    }

    #[test]
    fn full_word_entry_wins() {
        let l = lex("واحد\nاحد\n");
        assert_eq!(split_waw("واحد", &l), vec!["واحد"]);
    }

    #[test]
    fn length_guard() {
        // "وه" would leave a one-letter remainder
        let l = lex("ه\n");
        assert_eq!(split_waw("وه", &l), vec!["وه"]);
    }

    #[test]
    fn seed_lexicon_is_clean() {
        let (l, w) = WawLexicon::from_text(SEED_LEXICON, "seed");
        assert!(w.is_empty(), "{w:?}");
        assert!(l.len() >= 200);
        for word in &l.words {
            assert_eq!(normalize(word).as_str(), word);
        }
    }

    proptest! {
        #[test]
        fn wawanize_invariants(tokens in prop::collection::vec("[وقالتمحسب]{1,5}", 0..8)) {
            let l = lex("قال\nحساب\nتم\nوقت\nسب\n");
            let out = wawanize_turn(&tokens, &l);
            prop_assert!(out.len() >= tokens.len());
            prop_assert_eq!(out.concat(), tokens.concat());
            prop_assert_eq!(wawanize_turn(&out, &l), out.clone());
        }
    }
}
