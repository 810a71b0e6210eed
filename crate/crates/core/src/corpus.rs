//! Dialogue corpora: dialogue → turn → utterance, stored in a tab-separated
//! column format.
//!
//! ```text
//! # dialogue: D1 genre=Banks medium=Spoken
//! # turn: T1 speaker=Operator
//! 0  مساء  msA'  _  B-Seg  Greeting
//! 1  الخير  Alxyr  _  I-Seg  _
//!
//! ```
//!
//! Columns are `INDEX SURFACE BUCKWALTER POS TAG DA`; `_` marks an empty
//! cell. A DA label may only appear on a `B-Seg` row. A blank line closes the
//! current turn.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::ops::Range;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::arabic::{to_buckwalter, ArabicString};
use crate::error::{Error, Result};

const EMPTY: &str = "_";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum SegTag {
    /// First word of an utterance.
    BSeg,
    /// Any later word of an utterance.
    ISeg,
}

impl SegTag {
    pub const ALL: [SegTag; 2] = [SegTag::BSeg, SegTag::ISeg];

    pub fn as_str(self) -> &'static str {
        match self {
            SegTag::BSeg => "B-Seg",
            SegTag::ISeg => "I-Seg",
        }
    }
}

impl fmt::Display for SegTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SegTag {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "B-Seg" => Ok(SegTag::BSeg),
            "I-Seg" => Ok(SegTag::ISeg),
            _ => Err(format!(
                "unknown segment tag {s:?} (expected B-Seg or I-Seg)"
            )),
        }
    }
}

/// Utterance spans: one maximal run per `BSeg`. A sequence that does not
/// start with `BSeg` still gets a first span starting at 0.
pub fn spans_from_tags(tags: &[SegTag]) -> Vec<Range<usize>> {
    let mut spans = Vec::new();
    let mut start = 0;
    for (i, &t) in tags.iter().enumerate().skip(1) {
        if t == SegTag::BSeg {
            spans.push(start..i);
            start = i;
        }
    }
    if !tags.is_empty() {
        spans.push(start..tags.len());
    }
    spans
}

pub fn tags_from_spans(spans: &[Range<usize>]) -> Vec<SegTag> {
    let mut tags = Vec::new();
    for span in spans {
        tags.extend(span.clone().map(|i| {
            if i == span.start {
                SegTag::BSeg
            } else {
                SegTag::ISeg
            }
        }));
    }
    tags
}

macro_rules! text_enum {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
                match s {
                    $($text => Ok($name::$variant),)+
                    _ => Err(format!(concat!("unknown ", stringify!($name), " {:?}"), s)),
                }
            }
        }
    };
}

text_enum!(Speaker { Operator => "Operator", Customer => "Customer" });
text_enum!(Genre { Banks => "Banks", Flights => "Flights", Mno => "MNO" });
text_enum!(Medium { Spoken => "Spoken", Im => "IM" });

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: ArabicString,
    pub buckwalter: String,
    pub index: usize,
    /// Raw tag from an external analyzer, if the corpus carries one.
    pub pos: Option<String>,
}

impl Token {
    pub fn new(surface: ArabicString, index: usize) -> Self {
        let buckwalter = to_buckwalter(surface.as_str());
        Token {
            surface,
            buckwalter,
            index,
            pos: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Turn {
    pub dialogue_id: String,
    pub turn_id: String,
    pub speaker: Speaker,
    pub tokens: Vec<Token>,
    pub tags: Option<Vec<SegTag>>,
    /// One label per utterance.
    pub da_labels: Option<Vec<String>>,
}

impl Turn {
    fn invalid(&self, message: impl Into<String>) -> Error {
        Error::InvalidTurn {
            dialogue: self.dialogue_id.clone(),
            turn: self.turn_id.clone(),
            message: message.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tokens.is_empty() {
            return Err(self.invalid("turn has no tokens"));
        }
        for (i, tok) in self.tokens.iter().enumerate() {
            if tok.index != i {
                return Err(self.invalid(format!("token {i} has index {}", tok.index)));
            }
            if tok.buckwalter != to_buckwalter(tok.surface.as_str()) {
                return Err(self.invalid(format!(
                    "token {i}: transliteration {:?} does not match surface",
                    tok.buckwalter
                )));
            }
        }
        match (&self.tags, &self.da_labels) {
            (None, Some(_)) => return Err(self.invalid("dialogue-act labels without tags")),
            (Some(tags), labels) => {
                if tags.len() != self.tokens.len() {
                    return Err(self.invalid(format!(
                        "{} tags for {} tokens",
                        tags.len(),
                        self.tokens.len()
                    )));
                }
                if tags[0] != SegTag::BSeg {
                    return Err(self.invalid("first tag must be B-Seg"));
                }
                if let Some(labels) = labels {
                    let n = tags.iter().filter(|&&t| t == SegTag::BSeg).count();
                    if labels.len() != n {
                        return Err(self.invalid(format!(
                            "{} dialogue-act labels for {n} utterances",
                            labels.len()
                        )));
                    }
                }
            }
            (None, None) => {}
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn utterance_spans(&self) -> Option<Vec<Range<usize>>> {
        self.tags.as_deref().map(spans_from_tags)
    }

    /// Utterance count; an untagged turn counts as one utterance.
    pub fn n_utterances(&self) -> usize {
        match &self.tags {
            Some(tags) => tags.iter().filter(|&&t| t == SegTag::BSeg).count(),
            None => 1,
        }
    }

    pub fn surfaces(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.surface.as_str()).collect()
    }

    pub fn buckwalter(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.buckwalter.as_str()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dialogue {
    pub id: String,
    pub genre: Genre,
    pub medium: Medium,
    pub turns: Vec<Turn>,
}

impl Dialogue {
    /// Ids of turns whose speaker equals the previous turn's speaker.
    pub fn repeated_speaker_turns(&self) -> Vec<&str> {
        self.turns
            .windows(2)
            .filter(|w| w[0].speaker == w[1].speaker)
            .map(|w| w[1].turn_id.as_str())
            .collect()
    }
}

struct Parser<'a> {
    source: &'a str,
    dialogues: Vec<Dialogue>,
    dialogue_ids: HashSet<String>,
    turn_ids: HashSet<String>,
    open: Option<OpenTurn>,
}

struct OpenTurn {
    header_line: usize,
    turn_id: String,
    speaker: Speaker,
    rows: Vec<Row>,
}

struct Row {
    line: usize,
    token: Token,
    tag: Option<SegTag>,
    da: Option<String>,
}

fn header_fields(rest: &str) -> Option<(&str, BTreeMap<&str, &str>)> {
    let mut it = rest.split_whitespace();
    let id = it.next()?;
    let mut kv = BTreeMap::new();
    for field in it {
        let (k, v) = field.split_once('=')?;
        kv.insert(k, v);
    }
    Some((id, kv))
}

fn opt_cell(s: &str) -> Option<String> {
    (s != EMPTY).then(|| s.to_string())
}

impl<'a> Parser<'a> {
    fn err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::parse(self.source, line, message)
    }

    fn parse(mut self, text: &str) -> Result<Vec<Dialogue>> {
        for (n, line) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = line.strip_suffix('\r').unwrap_or(line);
            if let Some(rest) = line.strip_prefix("# dialogue:") {
                self.close_turn()?;
                self.open_dialogue(line_no, rest)?;
            } else if let Some(rest) = line.strip_prefix("# turn:") {
                self.close_turn()?;
                self.open_turn(line_no, rest)?;
            } else if line.starts_with('#') {
                continue;
            } else if line.trim().is_empty() {
                self.close_turn()?;
            } else {
                self.token_row(line_no, line)?;
            }
        }
        self.close_turn()?;
        Ok(self.dialogues)
    }

    fn open_dialogue(&mut self, line: usize, rest: &str) -> Result<()> {
        let (id, kv) =
            header_fields(rest).ok_or_else(|| self.err(line, "malformed dialogue header"))?;
        let mut genre = None;
        let mut medium = None;
        for (k, v) in kv {
            match k {
                "genre" => genre = Some(v.parse::<Genre>().map_err(|e| self.err(line, e))?),
                "medium" => medium = Some(v.parse::<Medium>().map_err(|e| self.err(line, e))?),
                _ => return Err(self.err(line, format!("unknown dialogue attribute {k:?}"))),
            }
        }
        let genre = genre.ok_or_else(|| self.err(line, "dialogue header lacks genre="))?;
        let medium = medium.ok_or_else(|| self.err(line, "dialogue header lacks medium="))?;
        if !self.dialogue_ids.insert(id.to_string()) {
            return Err(self.err(line, format!("duplicate dialogue id {id:?}")));
        }
        self.turn_ids.clear();
        self.dialogues.push(Dialogue {
            id: id.to_string(),
            genre,
            medium,
            turns: Vec::new(),
        });
        Ok(())
    }

    fn open_turn(&mut self, line: usize, rest: &str) -> Result<()> {
        if self.dialogues.is_empty() {
            return Err(self.err(line, "turn header before any dialogue header"));
        }
        let (id, kv) =
            header_fields(rest).ok_or_else(|| self.err(line, "malformed turn header"))?;
        let mut speaker = None;
        for (k, v) in kv {
            match k {
                "speaker" => speaker = Some(v.parse::<Speaker>().map_err(|e| self.err(line, e))?),
                _ => return Err(self.err(line, format!("unknown turn attribute {k:?}"))),
            }
        }
        let speaker = speaker.ok_or_else(|| self.err(line, "turn header lacks speaker="))?;
        if !self.turn_ids.insert(id.to_string()) {
            return Err(self.err(line, format!("duplicate turn id {id:?}")));
        }
        self.open = Some(OpenTurn {
            header_line: line,
            turn_id: id.to_string(),
            speaker,
            rows: Vec::new(),
        });
        Ok(())
    }

    fn token_row(&mut self, line: usize, text: &str) -> Result<()> {
        let cols: Vec<&str> = text.split('\t').collect();
        if cols.len() != 6 {
            return Err(self.err(
                line,
                format!("expected 6 tab-separated columns, found {}", cols.len()),
            ));
        }
        let index: usize = cols[0]
            .parse()
            .map_err(|_| self.err(line, format!("bad token index {:?}", cols[0])))?;
        let surface = ArabicString::new(cols[1]);
        if surface.is_empty() || surface.as_str().chars().any(char::is_whitespace) {
            return Err(self.err(line, "surface must be a single non-empty word"));
        }
        let expected_bw = to_buckwalter(surface.as_str());
        let buckwalter = match cols[2] {
            EMPTY => expected_bw,
            bw if bw == expected_bw => expected_bw,
            bw => {
                return Err(self.err(
                    line,
                    format!(
                        "transliteration {bw:?} does not match surface (expected {expected_bw:?})"
                    ),
                ))
            }
        };
        let tag = match cols[4] {
            EMPTY => None,
            t => Some(t.parse::<SegTag>().map_err(|e| self.err(line, e))?),
        };
        let open = self
            .open
            .as_mut()
            .ok_or_else(|| Error::parse(self.source, line, "token row outside a turn"))?;
        if index != open.rows.len() {
            return Err(Error::parse(
                self.source,
                line,
                format!("token index {index}, expected {}", open.rows.len()),
            ));
        }
        open.rows.push(Row {
            line,
            token: Token {
                surface,
                buckwalter,
                index,
                pos: opt_cell(cols[3]),
            },
            tag,
            da: opt_cell(cols[5]),
        });
        Ok(())
    }

    fn close_turn(&mut self) -> Result<()> {
        let Some(open) = self.open.take() else {
            return Ok(());
        };
        let dialogue = self.dialogues.last_mut().expect("turn inside a dialogue");
        let invalid = |message: String| Error::InvalidTurn {
            dialogue: dialogue.id.clone(),
            turn: open.turn_id.clone(),
            message,
        };
        if open.rows.is_empty() {
            return Err(invalid(format!(
                "line {}: turn has no tokens",
                open.header_line
            )));
        }
        let n_tagged = open.rows.iter().filter(|r| r.tag.is_some()).count();
        let tags = if n_tagged == 0 {
            None
        } else if n_tagged == open.rows.len() {
            Some(open.rows.iter().map(|r| r.tag.unwrap()).collect::<Vec<_>>())
        } else {
            return Err(invalid("some but not all tokens are tagged".into()));
        };
        let mut labels = Vec::new();
        let mut unlabeled_b = 0;
        for row in &open.rows {
            match (row.tag, &row.da) {
                (Some(SegTag::BSeg), Some(da)) => labels.push(da.clone()),
                (Some(SegTag::BSeg), None) => unlabeled_b += 1,
                (_, Some(_)) => {
                    return Err(invalid(format!(
                        "line {}: dialogue-act label on a row that does not start an utterance",
                        row.line
                    )))
                }
                (_, None) => {}
            }
        }
        let da_labels = match (labels.is_empty(), unlabeled_b) {
            (true, _) => None,
            (false, 0) => Some(labels),
            (false, _) => {
                return Err(invalid(
                    "dialogue-act labels must be given for all utterances or none".into(),
                ))
            }
        };
        let turn = Turn {
            dialogue_id: dialogue.id.clone(),
            turn_id: open.turn_id,
            speaker: open.speaker,
            tokens: open.rows.into_iter().map(|r| r.token).collect(),
            tags,
            da_labels,
        };
        turn.validate()?;
        dialogue.turns.push(turn);
        Ok(())
    }
}

/// Parses corpus text; `source` names the input in error messages.
pub fn parse_corpus(text: &str, source: &str) -> Result<Vec<Dialogue>> {
    let parser = Parser {
        source,
        dialogues: Vec::new(),
        dialogue_ids: HashSet::new(),
        turn_ids: HashSet::new(),
        open: None,
    };
    let dialogues = parser.parse(text)?;
    for d in &dialogues {
        let repeats = d.repeated_speaker_turns();
        if !repeats.is_empty() {
            log::info!(
                "dialogue {}: speaker does not alternate at turns {:?}",
                d.id,
                repeats
            );
        }
    }
    Ok(dialogues)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<Dialogue>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&text, &path.display().to_string())
}

pub fn write_corpus(dialogues: &[Dialogue]) -> String {
    let mut out = String::new();
    for d in dialogues {
        out.push_str(&format!(
            "# dialogue: {} genre={} medium={}\n",
            d.id, d.genre, d.medium
        ));
        for turn in &d.turns {
            out.push_str(&format!(
                "# turn: {} speaker={}\n",
                turn.turn_id, turn.speaker
            ));
            let mut labels = turn.da_labels.iter().flatten();
            for (i, tok) in turn.tokens.iter().enumerate() {
                let tag = turn.tags.as_ref().map(|t| t[i]);
                let da = match tag {
                    Some(SegTag::BSeg) => labels.next().map(String::as_str),
                    _ => None,
                };
                out.push_str(&format!(
                    "{}\t{}\t{}\t{}\t{}\t{}\n",
                    i,
                    tok.surface,
                    tok.buckwalter,
                    tok.pos.as_deref().unwrap_or(EMPTY),
                    tag.map_or(EMPTY, SegTag::as_str),
                    da.unwrap_or(EMPTY),
                ));
            }
            out.push('\n');
        }
    }
    out
}

pub fn save_corpus(dialogues: &[Dialogue], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_corpus(dialogues)).map_err(|e| Error::io(path, e))
}

/// Position of a turn inside a corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TurnRef {
    pub dialogue: usize,
    pub turn: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSplit {
    pub train: Vec<TurnRef>,
    pub dev: Vec<TurnRef>,
    pub test: Vec<TurnRef>,
    pub ratios: [f64; 3],
}

pub const DEFAULT_RATIOS: [f64; 3] = [0.70, 0.20, 0.10];

/// Smallest domain size that can honor the test ratio.
pub const MIN_DOMAIN_TURNS: usize = 10;

/// Bucket sizes for `n` items by largest remainder; each bucket is within one
/// item of `n * ratio`. Ties on the remainder go to the earlier bucket.
pub fn bucket_sizes(n: usize, ratios: [f64; 3]) -> [usize; 3] {
    let exact = ratios.map(|r| r * n as f64);
    let mut sizes = exact.map(|x| x.floor() as usize);
    let assigned: usize = sizes.iter().sum();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        if (fa - fb).abs() < 1e-9 {
            a.cmp(&b)
        } else {
            fb.total_cmp(&fa)
        }
    });
    for &k in order.iter().take(n.saturating_sub(assigned)) {
        sizes[k] += 1;
    }
    sizes
}

/// Splits every genre independently into contiguous train/dev/test turn
/// ranges, in document order unless `shuffle_seed` is given.
pub fn split_corpus(
    dialogues: &[Dialogue],
    ratios: [f64; 3],
    shuffle_seed: Option<u64>,
) -> Result<CorpusSplit> {
    if ratios.iter().any(|r| !(0.0..=1.0).contains(r))
        || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9
    {
        return Err(Error::Config(format!(
            "split ratios {ratios:?} must be in [0, 1] and sum to 1"
        )));
    }
    let mut by_genre: BTreeMap<Genre, Vec<TurnRef>> = BTreeMap::new();
    for (di, d) in dialogues.iter().enumerate() {
        let refs = by_genre.entry(d.genre).or_default();
        refs.extend((0..d.turns.len()).map(|ti| TurnRef {
            dialogue: di,
            turn: ti,
        }));
    }
    let mut split = CorpusSplit {
        train: Vec::new(),
        dev: Vec::new(),
        test: Vec::new(),
        ratios,
    };
    for (genre, mut refs) in by_genre {
        if refs.len() < MIN_DOMAIN_TURNS {
            return Err(Error::Config(format!(
                "domain {genre} has {} turns; at least {MIN_DOMAIN_TURNS} are needed to split",
                refs.len()
            )));
        }
        if let Some(seed) = shuffle_seed {
            refs.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        }
        let [n_train, n_dev, _] = bucket_sizes(refs.len(), ratios);
        split.train.extend_from_slice(&refs[..n_train]);
        split.dev.extend_from_slice(&refs[n_train..n_train + n_dev]);
        split.test.extend_from_slice(&refs[n_train + n_dev..]);
    }
    split.train.sort_unstable();
    split.dev.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}

/// Builds a corpus holding only the referenced turns; dialogues with no
/// selected turn are dropped.
pub fn materialize(dialogues: &[Dialogue], refs: &[TurnRef]) -> Vec<Dialogue> {
    let mut refs = refs.to_vec();
    refs.sort_unstable();
    let mut out: Vec<Dialogue> = Vec::new();
    let mut current = None;
    for r in refs {
        let src = &dialogues[r.dialogue];
        if current != Some(r.dialogue) {
            out.push(Dialogue {
                turns: Vec::new(),
                ..src.clone()
            });
            current = Some(r.dialogue);
        }
        out.last_mut()
            .unwrap()
            .turns
            .push(src.turns[r.turn].clone());
    }
    out
}

pub fn all_turns(dialogues: &[Dialogue]) -> impl Iterator<Item = &Turn> {
    dialogues.iter().flat_map(|d| d.turns.iter())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CorpusStats {
    pub n_dialogues: usize,
    pub n_turns: usize,
    pub n_segmented_turns: usize,
    pub n_utterances_in_segmented_turns: usize,
    pub n_utterances: usize,
    pub n_words: usize,
    pub words_per_turn: f64,
    pub words_per_utterance: f64,
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Counts by enumeration. A turn is segmented when it holds two or more
/// utterances.
pub fn corpus_stats(dialogues: &[Dialogue]) -> CorpusStats {
    let mut s = CorpusStats {
        n_dialogues: dialogues.len(),
        ..CorpusStats::default()
    };
    for turn in all_turns(dialogues) {
        let u = turn.n_utterances();
        s.n_turns += 1;
        s.n_words += turn.len();
        s.n_utterances += u;
        if u >= 2 {
            s.n_segmented_turns += 1;
            s.n_utterances_in_segmented_turns += u;
        }
    }
    s.words_per_turn = ratio(s.n_words, s.n_turns);
    s.words_per_utterance = ratio(s.n_words, s.n_utterances);
    s
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Total Number of Dialogues\t{}", self.n_dialogues)?;
        writeln!(f, "Total Number of Turns\t{}", self.n_turns)?;
        writeln!(f, "Number of Segmented Turns\t{}", self.n_segmented_turns)?;
        writeln!(
            f,
            "Number of Utterances from Segmented Turns\t{}",
            self.n_utterances_in_segmented_turns
        )?;
        writeln!(f, "Total Number of Utterances\t{}", self.n_utterances)?;
        writeln!(f, "Words\t{}", self.n_words)?;
        writeln!(f, "Words per Turn\t{:.1}", self.words_per_turn)?;
        writeln!(f, "Words per Utterance\t{:.1}", self.words_per_utterance)
    }
}
