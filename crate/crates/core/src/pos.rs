//! Part-of-speech evidence for the feature extractor: three boolean signals
//! per token (conjunction, noun, proper noun).
//!
//! Two sources are provided. [`LexiconPosProvider`] looks words up in closed
//! lists; [`gold_pos`] maps raw tags coming from an external analyzer (the POS
//! column of a corpus file) through a configurable [`TagMapping`].

use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use crate::error::{Error, Result};
use crate::wawanizer::{parse_word_list, read_text, LineWarning};

pub const UNKNOWN_TAG: &str = "UNK";

const DEFAULT_CONJUNCTIONS: &str = include_str!("../data/conjunctions.txt");
const DEFAULT_PROPER_NOUNS: &str = include_str!("../data/proper_nouns.txt");
const DEFAULT_TAG_MAP: &str = include_str!("../data/tag_map.txt");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PosInfo {
    pub tag: String,
    pub is_conjunction: bool,
    pub is_noun: bool,
    pub is_proper_noun: bool,
}

impl PosInfo {
    pub fn unknown() -> Self {
        Self::untagged(UNKNOWN_TAG)
    }

    fn untagged(tag: &str) -> Self {
        PosInfo {
            tag: tag.to_string(),
            is_conjunction: false,
            is_noun: false,
            is_proper_noun: false,
        }
    }
}

/// Deterministic source of [`PosInfo`], one per input token.
pub trait PosProvider: Send + Sync {
    fn name(&self) -> &str;

    fn tag_tokens(&self, tokens: &[&str]) -> Vec<PosInfo>;
}

/// Closed-list tagger. Words absent from every list are tagged `UNK`.
#[derive(Debug, Clone, Default)]
pub struct LexiconPosProvider {
    conjunctions: HashSet<String>,
    nouns: HashSet<String>,
    proper_nouns: HashSet<String>,
}

fn word_set(text: &str) -> (HashSet<String>, Vec<LineWarning>) {
    let (words, warnings) = parse_word_list(text);
    (
        words.into_iter().map(|(_, w)| w.into_string()).collect(),
        warnings,
    )
}

impl LexiconPosProvider {
    /// The bundled conjunction list and proper-noun gazetteer.
    pub fn builtin() -> Self {
        LexiconPosProvider {
            conjunctions: word_set(DEFAULT_CONJUNCTIONS).0,
            nouns: HashSet::new(),
            proper_nouns: word_set(DEFAULT_PROPER_NOUNS).0,
        }
    }

    pub fn from_lists(
        conjunctions: &str,
        nouns: &str,
        proper_nouns: &str,
    ) -> (Self, Vec<LineWarning>) {
        let (conjunctions, mut warnings) = word_set(conjunctions);
        let (nouns, w) = word_set(nouns);
        warnings.extend(w);
        let (proper_nouns, w) = word_set(proper_nouns);
        warnings.extend(w);
        let provider = LexiconPosProvider {
            conjunctions,
            nouns,
            proper_nouns,
        };
        (provider, warnings)
    }

    /// Replaces the conjunction list with the contents of `path`.
    pub fn with_conjunctions_file(mut self, path: impl AsRef<Path>) -> Result<Self> {
        self.conjunctions = load_set(path.as_ref())?;
        Ok(self)
    }

    pub fn with_nouns_file(mut self, path: impl AsRef<Path>) -> Result<Self> {
        self.nouns = load_set(path.as_ref())?;
        Ok(self)
    }

    pub fn with_proper_nouns_file(mut self, path: impl AsRef<Path>) -> Result<Self> {
        self.proper_nouns = load_set(path.as_ref())?;
        Ok(self)
    }

    pub fn tag_word(&self, word: &str) -> PosInfo {
        let is_conjunction = self.conjunctions.contains(word);
        let is_noun = self.nouns.contains(word);
        let is_proper_noun = self.proper_nouns.contains(word);
        let tag = if is_conjunction {
            "CONJ"
        } else if is_proper_noun {
            "NOUN_PROP"
        } else if is_noun {
            "NOUN"
        } else {
            UNKNOWN_TAG
        };
        PosInfo {
            tag: tag.to_string(),
            is_conjunction,
            is_noun,
            is_proper_noun,
        }
    }
}

fn load_set(path: &Path) -> Result<HashSet<String>> {
    let (set, warnings) = word_set(&read_text(path)?);
    for w in &warnings {
        log::warn!(
            "{}:{}: skipped {:?}: {}",
            path.display(),
            w.line,
            w.text,
            w.reason
        );
    }
    Ok(set)
}

impl PosProvider for LexiconPosProvider {
    fn name(&self) -> &str {
        "lexicon"
    }

    fn tag_tokens(&self, tokens: &[&str]) -> Vec<PosInfo> {
        tokens.iter().map(|t| self.tag_word(t)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PosFlag {
    Conjunction,
    Noun,
    ProperNoun,
}

impl PosFlag {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "conj" => Some(PosFlag::Conjunction),
            "noun" => Some(PosFlag::Noun),
            "propn" => Some(PosFlag::ProperNoun),
            _ => None,
        }
    }
}

/// Maps raw analyzer tags to flags by case-insensitive prefix; the longest
/// matching prefix wins.
#[derive(Debug, Clone)]
pub struct TagMapping {
    rules: Vec<(String, PosFlag)>,
}

impl Default for TagMapping {
    fn default() -> Self {
        TagMapping::parse(DEFAULT_TAG_MAP, "builtin:tag_map").expect("bundled tag map parses")
    }
}

impl TagMapping {
    /// Parses `PREFIX=conj|noun|propn` lines; `#` lines and blanks are ignored.
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut rules = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (prefix, flag) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(source, n + 1, "expected PREFIX=conj|noun|propn"))?;
            let prefix = prefix.trim();
            if prefix.is_empty() {
                return Err(Error::parse(source, n + 1, "empty tag prefix"));
            }
            let flag = PosFlag::parse(flag.trim()).ok_or_else(|| {
                Error::parse(source, n + 1, format!("unknown flag {:?}", flag.trim()))
            })?;
            rules.push((prefix.to_lowercase(), flag));
        }
        // longest prefix first; stable order keeps file order among equals
        rules.sort_by_key(|r| std::cmp::Reverse(r.0.len()));
        Ok(TagMapping { rules })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&read_text(path)?, &path.display().to_string())
    }

    pub fn lookup(&self, tag: &str) -> Option<PosFlag> {
        let lower = tag.to_lowercase();
        self.rules
            .iter()
            .find(|(prefix, _)| lower.starts_with(prefix.as_str()))
            .map(|&(_, flag)| flag)
    }
}

/// Result of mapping a column of raw tags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldPos {
    pub infos: Vec<PosInfo>,
    /// Distinct non-empty tags with no mapping rule.
    pub unmapped: BTreeSet<String>,
}

/// Derives flags from raw tag strings. Empty and `_` tags carry no flags.
pub fn gold_pos<S: AsRef<str>>(tags: &[S], mapping: &TagMapping) -> GoldPos {
    let mut unmapped = BTreeSet::new();
    let infos = tags
        .iter()
        .map(|t| {
            let tag = t.as_ref();
            let mut info = PosInfo::untagged(tag);
            if tag.is_empty() || tag == "_" {
                return info;
            }
            match mapping.lookup(tag) {
                Some(PosFlag::Conjunction) => info.is_conjunction = true,
                Some(PosFlag::Noun) => info.is_noun = true,
                Some(PosFlag::ProperNoun) => info.is_proper_noun = true,
                None => {
                    if unmapped.insert(tag.to_string()) {
                        log::warn!("no POS mapping for tag {tag:?}");
                    }
                }
            }
            info
        })
        .collect();
    GoldPos { infos, unmapped }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexicon_conjunctions() {
        let p = LexiconPosProvider::builtin();
        let out = p.tag_tokens(&["لكن", "و", "xyz-unknown"]);
        assert_eq!(out.len(), 3);
        assert!(out[0].is_conjunction);
        assert!(out[1].is_conjunction);
        assert_eq!(out[2], PosInfo::unknown());
    }

    #[test]
    fn lexicon_proper_nouns() {
        let p = LexiconPosProvider::builtin();
        let out = p.tag_tokens(&["احمد", "مصر"]);
        assert!(out.iter().all(|i| i.is_proper_noun && !i.is_conjunction));
        assert_eq!(out[0].tag, "NOUN_PROP");
    }

    #[test]
    fn custom_lists() {
        let (p, w) = LexiconPosProvider::from_lists("لكن\n", "حساب\n", "bad line\n");
        assert_eq!(w.len(), 1);
        let out = p.tag_tokens(&["حساب"]);
        assert!(out[0].is_noun);
        assert_eq!(out[0].tag, "NOUN");
    }

    #[test]
    fn gold_mapping() {
        let m = TagMapping::default();
        let g = gold_pos(&["CONJ", "NOUN_PROP", "noun", "", "_", "verb", "verb"], &m);
        assert!(g.infos[0].is_conjunction);
        assert!(g.infos[1].is_proper_noun && !g.infos[1].is_noun);
        assert!(g.infos[2].is_noun);
        for i in &g.infos[3..] {
            assert!(!i.is_conjunction && !i.is_noun && !i.is_proper_noun);
        }
        assert_eq!(g.unmapped.len(), 1);
        assert_eq!(g.infos.len(), 7);
    }

    #[test]
    fn tag_map_errors() {
        assert!(TagMapping::parse("conj\n", "t").is_err());
        assert!(TagMapping::parse("conj=verb\n", "t").is_err());
        let m = TagMapping::parse("# c\nPV=noun\n", "t").unwrap();
        assert_eq!(m.lookup("pv_pass"), Some(PosFlag::Noun));
    }
}
