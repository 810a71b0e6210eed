//! Arabic character unification and Buckwalter transliteration.
//!
//! The transliteration table lives in `data/buckwalter.tsv` and is compiled
//! into the binary. Every mapped codepoint has exactly one ASCII symbol, so
//! the mapping is reversible on the mapped domain.

use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use thiserror::Error;
use unicode_normalization::char::canonical_combining_class;
use unicode_normalization::UnicodeNormalization;

const TABLE_TSV: &str = include_str!("../data/buckwalter.tsv");

const ALEF: char = '\u{0627}';
const ALEF_HAMZA_ABOVE: char = '\u{0623}';
const ALEF_HAMZA_BELOW: char = '\u{0625}';
const ALEF_MADDA: char = '\u{0622}';
const TEH_MARBUTA: char = '\u{0629}';
const HEH: char = '\u{0647}';
const ALEF_MAKSURA: char = '\u{0649}';
const YEH: char = '\u{064A}';

/// Text in NFC form. Construction always normalizes to NFC.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ArabicString(String);

impl ArabicString {
    pub fn new(text: &str) -> Self {
        ArabicString(text.nfc().collect())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn char_len(&self) -> usize {
        self.0.chars().count()
    }
}

impl fmt::Display for ArabicString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for ArabicString {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl From<&str> for ArabicString {
    fn from(s: &str) -> Self {
        ArabicString::new(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranslitError {
    #[error("no Arabic letter for symbol {symbol:?} at position {position}")]
    UnmappedSymbol { position: usize, symbol: char },
}

/// Bidirectional Buckwalter mapping.
#[derive(Debug)]
pub struct TransliterationTable {
    forward: HashMap<char, char>,
    reverse: HashMap<char, char>,
}

impl TransliterationTable {
    /// Parses the TSV layout `codepoint-hex<TAB>glyph<TAB>ascii`.
    ///
    /// Panics on a malformed or non-injective table; the table is static
    /// data and a bad row is a build defect.
    fn parse(tsv: &str) -> Self {
        let mut forward = HashMap::new();
        let mut reverse = HashMap::new();
        for (n, line) in tsv.lines().enumerate() {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            assert_eq!(
                cols.len(),
                3,
                "buckwalter.tsv:{}: expected 3 columns",
                n + 1
            );
            let cp = u32::from_str_radix(cols[0], 16)
                .ok()
                .and_then(char::from_u32)
                .unwrap_or_else(|| panic!("buckwalter.tsv:{}: bad codepoint", n + 1));
            assert_eq!(
                cols[1].chars().collect::<Vec<_>>(),
                vec![cp],
                "buckwalter.tsv:{}: glyph does not match codepoint",
                n + 1
            );
            let mut ascii = cols[2].chars();
            let sym = match (ascii.next(), ascii.next()) {
                (Some(c), None) if c.is_ascii_graphic() => c,
                _ => panic!("buckwalter.tsv:{}: symbol must be one ASCII char", n + 1),
            };
            assert!(
                forward.insert(cp, sym).is_none(),
                "duplicate codepoint {cp:?}"
            );
            assert!(
                reverse.insert(sym, cp).is_none(),
                "duplicate symbol {sym:?}"
            );
        }
        TransliterationTable { forward, reverse }
    }

    pub fn get() -> &'static TransliterationTable {
        static TABLE: OnceLock<TransliterationTable> = OnceLock::new();
        TABLE.get_or_init(|| TransliterationTable::parse(TABLE_TSV))
    }

    pub fn to_ascii(&self, c: char) -> Option<char> {
        self.forward.get(&c).copied()
    }

    pub fn to_arabic(&self, symbol: char) -> Option<char> {
        self.reverse.get(&symbol).copied()
    }

    /// Mapped Arabic codepoints in codepoint order.
    pub fn arabic_chars(&self) -> Vec<char> {
        let mut v: Vec<char> = self.forward.keys().copied().collect();
        v.sort_unstable();
        v
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }
}

/// Unifies Arabic letter variants and whitespace.
///
/// After NFC, the alef variants with hamza or madda become bare alef, teh
/// marbuta becomes heh and alef maksura becomes yeh. A combining hamza or
/// madda left in the combining sequence of an alef is the decomposed spelling
/// of one of those variants and is dropped with it. Whitespace runs collapse
/// to one space and the ends are trimmed.
pub fn normalize(s: &str) -> ArabicString {
    let mut unified = String::with_capacity(s.len());
    let mut in_alef_cluster = false;
    for c in s.nfc() {
        match c {
            ALEF | ALEF_HAMZA_ABOVE | ALEF_HAMZA_BELOW | ALEF_MADDA => {
                unified.push(ALEF);
                in_alef_cluster = true;
            }
            '\u{0653}' | '\u{0654}' | '\u{0655}' if in_alef_cluster => {}
            TEH_MARBUTA => {
                unified.push(HEH);
                in_alef_cluster = false;
            }
            ALEF_MAKSURA => {
                unified.push(YEH);
                in_alef_cluster = false;
            }
            c => {
                if canonical_combining_class(c) == 0 {
                    in_alef_cluster = false;
                }
                unified.push(c);
            }
        }
    }
    let collapsed = unified.split_whitespace().collect::<Vec<_>>().join(" ");
    ArabicString::new(&collapsed)
}

/// Transliterates mapped Arabic codepoints; anything else passes through.
pub fn to_buckwalter(s: &str) -> String {
    let table = TransliterationTable::get();
    s.chars().map(|c| table.to_ascii(c).unwrap_or(c)).collect()
}

/// Inverse of [`to_buckwalter`] for text made of Buckwalter symbols,
/// whitespace and ASCII digits.
pub fn from_buckwalter(s: &str) -> Result<ArabicString, TranslitError> {
    let table = TransliterationTable::get();
    let mut out = String::with_capacity(s.len() * 2);
    for (position, c) in s.chars().enumerate() {
        if c.is_whitespace() || c.is_ascii_digit() {
            out.push(c);
        } else if let Some(a) = table.to_arabic(c) {
            out.push(a);
        } else {
            return Err(TranslitError::UnmappedSymbol {
                position,
                symbol: c,
            });
        }
    }
    Ok(ArabicString::new(&out))
}

/// `true` if `c` belongs to one of the Arabic Unicode blocks.
pub fn is_arabic_script(c: char) -> bool {
    matches!(c as u32,
        0x0600..=0x06FF | 0x0750..=0x077F | 0x08A0..=0x08FF | 0xFB50..=0xFDFF | 0xFE70..=0xFEFF)
}
