//! Boundary precision/recall/F1 and token accuracy.
//!
//! The positive class is `B-Seg` at positions after the first; position 0
//! is always `B-Seg` and only enters P/R/F1 when `include_first` is set.
//! Accuracy counts every position.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{all_turns, Dialogue, SegTag, Turn};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub n_tokens: usize,
    pub n_correct_tokens: usize,
}

impl Counts {
    pub fn add(&mut self, other: &Counts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.n_tokens += other.n_tokens;
        self.n_correct_tokens += other.n_correct_tokens;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    pub counts: Counts,
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    let denom = precision + recall;
    if denom > 0.0 {
        2.0 * precision * recall / denom
    } else {
        0.0
    }
}

/// `num / denom`, or `vacuous` when nothing was counted.
fn rate(num: usize, denom: usize, vacuous: f64) -> f64 {
    if denom == 0 {
        vacuous
    } else {
        num as f64 / denom as f64
    }
}

impl Metrics {
    /// With no predicted and no gold boundaries, precision and recall are 1.
    pub fn from_counts(counts: Counts) -> Self {
        let precision = rate(
            counts.tp,
            counts.tp + counts.fp,
            if counts.fn_ == 0 { 1.0 } else { 0.0 },
        );
        let recall = rate(
            counts.tp,
            counts.tp + counts.fn_,
            if counts.fp == 0 { 1.0 } else { 0.0 },
        );
        Metrics {
            precision,
            recall,
            f1: f1_score(precision, recall),
            accuracy: rate(counts.n_correct_tokens, counts.n_tokens, 1.0),
            counts,
        }
    }

    /// Metrics known only as rates (for instance published figures).
    pub fn from_rates(precision: f64, recall: f64, accuracy: f64) -> Self {
        Metrics {
            precision,
            recall,
            f1: f1_score(precision, recall),
            accuracy,
            counts: Counts::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EvalOptions {
    /// Count position 0 towards P/R/F1.
    pub include_first: bool,
}

pub fn count_tags(gold: &[SegTag], pred: &[SegTag], options: EvalOptions) -> Counts {
    let mut c = Counts::default();
    for (i, (&g, &p)) in gold.iter().zip(pred).enumerate() {
        c.n_tokens += 1;
        if g == p {
            c.n_correct_tokens += 1;
        }
        if i == 0 && !options.include_first {
            continue;
        }
        match (p, g) {
            (SegTag::BSeg, SegTag::BSeg) => c.tp += 1,
            (SegTag::BSeg, SegTag::ISeg) => c.fp += 1,
            (SegTag::ISeg, SegTag::BSeg) => c.fn_ += 1,
            (SegTag::ISeg, SegTag::ISeg) => {}
        }
    }
    c
}

fn turn_tags<'a>(turn: &'a Turn, side: &str) -> Result<&'a [SegTag]> {
    turn.tags.as_deref().ok_or_else(|| {
        Error::Misaligned(format!(
            "{side} turn {}/{} has no tags",
            turn.dialogue_id, turn.turn_id
        ))
    })
}

/// Scores aligned turn lists. Turns must pair up by id and token count.
pub fn evaluate<'a>(
    gold: impl IntoIterator<Item = &'a Turn>,
    pred: impl IntoIterator<Item = &'a Turn>,
    options: EvalOptions,
) -> Result<Metrics> {
    let gold: Vec<&Turn> = gold.into_iter().collect();
    let pred: Vec<&Turn> = pred.into_iter().collect();
    if gold.len() != pred.len() {
        return Err(Error::Misaligned(format!(
            "{} gold turns but {} predicted turns",
            gold.len(),
            pred.len()
        )));
    }
    let mut counts = Counts::default();
    for (g, p) in gold.iter().zip(&pred) {
        if (&g.dialogue_id, &g.turn_id) != (&p.dialogue_id, &p.turn_id) {
            return Err(Error::Misaligned(format!(
                "gold turn {}/{} is paired with predicted turn {}/{}",
                g.dialogue_id, g.turn_id, p.dialogue_id, p.turn_id
            )));
        }
        let (gt, pt) = (turn_tags(g, "gold")?, turn_tags(p, "predicted")?);
        if gt.len() != pt.len() {
            return Err(Error::Misaligned(format!(
                "turn {}/{}: {} gold tokens but {} predicted tokens",
                g.dialogue_id,
                g.turn_id,
                gt.len(),
                pt.len()
            )));
        }
        counts.add(&count_tags(gt, pt, options));
    }
    Ok(Metrics::from_counts(counts))
}

pub fn evaluate_corpora(
    gold: &[Dialogue],
    pred: &[Dialogue],
    options: EvalOptions,
) -> Result<Metrics> {
    evaluate(all_turns(gold), all_turns(pred), options)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    Tsv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(ReportFormat::Table),
            "tsv" => Ok(ReportFormat::Tsv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(Error::Config(format!(
                "unknown report format {s:?} (expected table, tsv or json)"
            ))),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Table => "table",
            ReportFormat::Tsv => "tsv",
            ReportFormat::Json => "json",
        })
    }
}

pub fn percent(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

fn row(m: &Metrics) -> [String; 4] {
    [m.precision, m.recall, m.f1, m.accuracy].map(percent)
}

/// Renders P, R, F1 and Acc as percentages with two decimals.
pub fn report(metrics: &Metrics, format: ReportFormat) -> String {
    match format {
        ReportFormat::Table => format!("P R F1 Acc\n{}\n", row(metrics).join(" ")),
        ReportFormat::Tsv => format!("P\tR\tF1\tAcc\n{}\n", row(metrics).join("\t")),
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(metrics).expect("metrics serialize");
            s.push('\n');
            s
        }
    }
}
