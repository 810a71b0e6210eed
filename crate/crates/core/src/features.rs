//! Sparse binary features over a sliding window.
//!
//! For a position `i` the extractor emits, as strings:
//!
//! * `W[o]=<word>` for every offset `o` in `-before..=+after`, with `<PAD>`
//!   outside the turn,
//! * `W[o,o+1]=<word>|<word>` for adjacent offsets when bigrams are enabled,
//! * `CONJ[o]`, `NOUN[o]`, `PROPN[o]` where the POS flag holds,
//! * `T[-k]=<tag>` for the `k` previous tags, with `<BOS>` before the turn.
//!
//! Words are Buckwalter forms. An [`Alphabet`] maps the strings to dense
//! indices.

use std::fmt;
use std::str::FromStr;

use indexmap::IndexSet;

use crate::corpus::SegTag;
use crate::error::{Error, Result};
use crate::pos::PosInfo;

pub const MAX_WINDOW: usize = 5;
pub const MAX_PREV_TAGS: usize = 5;
pub const PAD: &str = "<PAD>";
pub const BOS: &str = "<BOS>";

/// Position 0 always opens an utterance and is never decoded, so training
/// examples start here.
pub const FIRST_DECODED_POSITION: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FeatureTemplate {
    window_before: usize,
    window_after: usize,
    n_prev_tags: usize,
    use_pos: bool,
    bigrams: bool,
}

impl Default for FeatureTemplate {
    fn default() -> Self {
        FeatureTemplate {
            window_before: 2,
            window_after: 2,
            n_prev_tags: 3,
            use_pos: true,
            bigrams: false,
        }
    }
}

impl FeatureTemplate {
    pub fn new(window_before: usize, window_after: usize, n_prev_tags: usize) -> Result<Self> {
        for (name, w) in [("before", window_before), ("after", window_after)] {
            if !(1..=MAX_WINDOW).contains(&w) {
                return Err(Error::Config(format!(
                    "window {name} size {w} outside 1..={MAX_WINDOW}"
                )));
            }
        }
        if n_prev_tags > MAX_PREV_TAGS {
            return Err(Error::Config(format!(
                "{n_prev_tags} previous tags exceeds {MAX_PREV_TAGS}"
            )));
        }
        Ok(FeatureTemplate {
            window_before,
            window_after,
            n_prev_tags,
            ..FeatureTemplate::default()
        })
    }

    /// Symmetric window `-size/+size`.
    pub fn symmetric(size: usize, n_prev_tags: usize) -> Result<Self> {
        Self::new(size, size, n_prev_tags)
    }

    pub fn with_pos(mut self, use_pos: bool) -> Self {
        self.use_pos = use_pos;
        self
    }

    pub fn with_bigrams(mut self, bigrams: bool) -> Self {
        self.bigrams = bigrams;
        self
    }

    pub fn window_before(&self) -> usize {
        self.window_before
    }

    pub fn window_after(&self) -> usize {
        self.window_after
    }

    pub fn n_prev_tags(&self) -> usize {
        self.n_prev_tags
    }

    pub fn use_pos(&self) -> bool {
        self.use_pos
    }

    pub fn bigrams(&self) -> bool {
        self.bigrams
    }

    pub fn window_label(&self) -> String {
        format!("-{}/+{}", self.window_before, self.window_after)
    }

    fn offsets(&self) -> impl Iterator<Item = isize> {
        -(self.window_before as isize)..=self.window_after as isize
    }
}

/// Parses `-B/+A` (the `+` is optional).
pub fn parse_window(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::Config(format!("window {s:?} is not of the form -B/+A"));
    let (before, after) = s.trim().split_once('/').ok_or_else(bad)?;
    let before: usize = before
        .strip_prefix('-')
        .ok_or_else(bad)?
        .parse()
        .map_err(|_| bad())?;
    let after = after.strip_prefix('+').unwrap_or(after);
    let after: usize = after.parse().map_err(|_| bad())?;
    Ok((before, after))
}

impl fmt::Display for FeatureTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "window={} prev_tags={} pos={} bigrams={}",
            self.window_label(),
            self.n_prev_tags,
            self.use_pos,
            self.bigrams
        )
    }
}

impl FromStr for FeatureTemplate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut window = None;
        let mut prev = None;
        let mut pos = None;
        let mut bigrams = None;
        for field in s.split_whitespace() {
            let (k, v) = field
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("bad template field {field:?}")))?;
            let flag = || {
                v.parse::<bool>()
                    .map_err(|_| Error::Config(format!("bad boolean {v:?} for {k}")))
            };
            match k {
                "window" => window = Some(parse_window(v)?),
                "prev_tags" => {
                    prev = Some(
                        v.parse::<usize>()
                            .map_err(|_| Error::Config(format!("bad prev_tags value {v:?}")))?,
                    )
                }
                "pos" => pos = Some(flag()?),
                "bigrams" => bigrams = Some(flag()?),
                _ => return Err(Error::Config(format!("unknown template field {k:?}"))),
            }
        }
        let missing = |name: &str| Error::Config(format!("template lacks {name}"));
        let (before, after) = window.ok_or_else(|| missing("window"))?;
        Ok(
            FeatureTemplate::new(before, after, prev.ok_or_else(|| missing("prev_tags"))?)?
                .with_pos(pos.ok_or_else(|| missing("pos"))?)
                .with_bigrams(bigrams.ok_or_else(|| missing("bigrams"))?),
        )
    }
}

/// Feature string ↔ dense index. Once frozen, unseen strings are dropped.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Alphabet {
    features: IndexSet<String>,
    frozen: bool,
}

impl Alphabet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_features<I: IntoIterator<Item = String>>(features: I) -> Result<Self> {
        let mut alphabet = Alphabet::new();
        for f in features {
            if !alphabet.features.insert(f.clone()) {
                return Err(Error::Config(format!("duplicate feature {f:?}")));
            }
        }
        alphabet.freeze();
        Ok(alphabet)
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn get(&self, feature: &str) -> Option<u32> {
        self.features.get_index_of(feature).map(|i| i as u32)
    }

    /// Index of `feature`, adding it unless the alphabet is frozen.
    pub fn intern(&mut self, feature: &str) -> Option<u32> {
        if let Some(i) = self.get(feature) {
            return Some(i);
        }
        if self.frozen {
            return None;
        }
        let (i, _) = self.features.insert_full(feature.to_string());
        Some(i as u32)
    }

    pub fn feature(&self, index: u32) -> Option<&str> {
        self.features.get_index(index as usize).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.features.iter().map(String::as_str)
    }
}

/// Sorted, deduplicated indices of active binary features.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct FeatureVector {
    indices: Vec<u32>,
}

impl FeatureVector {
    pub fn from_indices(mut indices: Vec<u32>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        FeatureVector { indices }
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// One turn as seen by the extractor.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence<'a> {
    pub words: Vec<&'a str>,
    pub pos: Vec<PosInfo>,
}

impl<'a> Sequence<'a> {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

fn offset_label(o: isize) -> String {
    if o > 0 {
        format!("+{o}")
    } else {
        o.to_string()
    }
}

/// Feature strings for `position`. `history[j]` is the tag already assigned
/// to position `j`; only `history[..position]` is read.
pub fn feature_strings(
    seq: &Sequence<'_>,
    history: &[SegTag],
    position: usize,
    template: &FeatureTemplate,
) -> Result<Vec<String>> {
    let n = seq.len();
    if position >= n {
        return Err(Error::PositionOutOfRange { position, len: n });
    }
    if history.len() < position {
        return Err(Error::Misaligned(format!(
            "{} history tags for position {position}",
            history.len()
        )));
    }
    if template.use_pos && seq.pos.len() != n {
        return Err(Error::Misaligned(format!(
            "{} POS entries for {n} tokens",
            seq.pos.len()
        )));
    }
    let at = |o: isize| -> Option<usize> {
        let j = position as isize + o;
        (0..n as isize).contains(&j).then_some(j as usize)
    };
    let word = |o: isize| at(o).map_or(PAD, |j| seq.words[j]);

    let mut out = Vec::new();
    for o in template.offsets() {
        out.push(format!("W[{}]={}", offset_label(o), word(o)));
    }
    if template.bigrams {
        for o in -(template.window_before as isize)..template.window_after as isize {
            out.push(format!(
                "W[{},{}]={}|{}",
                offset_label(o),
                offset_label(o + 1),
                word(o),
                word(o + 1)
            ));
        }
    }
    if template.use_pos {
        for o in template.offsets() {
            if let Some(j) = at(o) {
                let info = &seq.pos[j];
                let label = offset_label(o);
                if info.is_conjunction {
                    out.push(format!("CONJ[{label}]"));
                }
                if info.is_noun {
                    out.push(format!("NOUN[{label}]"));
                }
                if info.is_proper_noun {
                    out.push(format!("PROPN[{label}]"));
                }
            }
        }
    }
    for k in 1..=template.n_prev_tags {
        let tag = position.checked_sub(k).map_or(BOS, |j| history[j].as_str());
        out.push(format!("T[-{k}]={tag}"));
    }
    Ok(out)
}

/// Training-time extraction: unseen features grow the alphabet unless it is
/// frozen.
pub fn extract(
    seq: &Sequence<'_>,
    history: &[SegTag],
    position: usize,
    template: &FeatureTemplate,
    alphabet: &mut Alphabet,
) -> Result<FeatureVector> {
    let strings = feature_strings(seq, history, position, template)?;
    Ok(FeatureVector::from_indices(
        strings.iter().filter_map(|s| alphabet.intern(s)).collect(),
    ))
}

/// Prediction-time extraction against a fixed alphabet; unseen features are
/// dropped.
pub fn extract_frozen(
    seq: &Sequence<'_>,
    history: &[SegTag],
    position: usize,
    template: &FeatureTemplate,
    alphabet: &Alphabet,
) -> Result<FeatureVector> {
    let strings = feature_strings(seq, history, position, template)?;
    Ok(FeatureVector::from_indices(
        strings.iter().filter_map(|s| alphabet.get(s)).collect(),
    ))
}

/// Extracts one example per decoded position of every gold-tagged turn,
/// using the gold tags as history, and returns the frozen alphabet.
pub fn training_examples(
    turns: &[(Sequence<'_>, &[SegTag])],
    template: &FeatureTemplate,
) -> Result<(Alphabet, Vec<(FeatureVector, SegTag)>)> {
    let mut alphabet = Alphabet::new();
    let mut examples = Vec::new();
    for (seq, gold) in turns {
        if gold.len() != seq.len() {
            return Err(Error::Misaligned(format!(
                "{} gold tags for {} tokens",
                gold.len(),
                seq.len()
            )));
        }
        for position in FIRST_DECODED_POSITION..seq.len() {
            let fv = extract(seq, gold, position, template, &mut alphabet)?;
            examples.push((fv, gold[position]));
        }
    }
    alphabet.freeze();
    Ok((alphabet, examples))
}

pub fn build_alphabet(
    turns: &[(Sequence<'_>, &[SegTag])],
    template: &FeatureTemplate,
) -> Result<Alphabet> {
    training_examples(turns, template).map(|(alphabet, _)| alphabet)
}
