#![allow(dead_code)]

use std::path::PathBuf;

use useg::corpus::{load_corpus, Dialogue};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn toy() -> Vec<Dialogue> {
    load_corpus(fixture("toy.useg")).expect("toy fixture parses")
}

pub fn sample() -> Vec<Dialogue> {
    load_corpus(fixture("sample.useg")).expect("sample fixture parses")
}

/// Counts produced by `tests/fixtures/count_fixture.py toy.useg`.
pub mod toy_counts {
    pub const DIALOGUES: usize = 9;
    pub const TURNS: usize = 52;
    pub const SEGMENTED_TURNS: usize = 46;
    pub const UTTERANCES_IN_SEGMENTED: usize = 105;
    pub const UTTERANCES: usize = 111;
    pub const WORDS: usize = 309;
    pub const BOUNDARIES_AFTER_FIRST: usize = 59;
    /// Alphabet sizes for windows -1/+1 .. -5/+5 with 3 previous tags.
    pub const ALPHABET: [usize; 5] = [476, 724, 925, 1081, 1198];
}
