//! Greedy left-to-right segmentation of turns into utterances.
//!
//! Position 0 is always `B-Seg`. Every later position is classified from
//! its window features plus the tags already predicted for the positions
//! before it, so decoding a turn is sequential.

use std::ops::Range;

use rayon::prelude::*;

use crate::arabic::{normalize, ArabicString};
use crate::corpus::{spans_from_tags, Dialogue, SegTag, Token, Turn};
use crate::error::{Error, Result};
use crate::features::{extract_frozen, training_examples, FeatureTemplate, Sequence};
use crate::pos::{gold_pos, PosProvider, TagMapping};
use crate::svm::{BinarySolution, LinearModel, TrainConfig};
use crate::wawanizer::{wawanize_turn, WawLexicon};

/// Whitespace-tokenizes, normalizes, splits prefixed waw and transliterates.
pub fn preprocess(raw: &str, lexicon: &WawLexicon) -> Result<Vec<Token>> {
    let normalized = normalize(raw);
    if normalized.is_empty() {
        return Err(Error::EmptyInput("turn has no words".into()));
    }
    let words: Vec<&str> = normalized.as_str().split(' ').collect();
    Ok(wawanize_turn(&words, lexicon)
        .into_iter()
        .enumerate()
        .map(|(i, w)| Token::new(ArabicString::new(&w), i))
        .collect())
}

/// Where per-token POS evidence comes from.
#[derive(Clone, Copy)]
pub enum PosSource<'a> {
    /// Tag surface forms with a provider.
    Provider(&'a dyn PosProvider),
    /// Map the corpus POS column through a tag mapping.
    Gold(&'a TagMapping),
}

pub fn token_sequence<'a>(tokens: &'a [Token], pos: PosSource<'_>) -> Sequence<'a> {
    let words = tokens.iter().map(|t| t.buckwalter.as_str()).collect();
    let pos = match pos {
        PosSource::Provider(p) => {
            let surfaces: Vec<&str> = tokens.iter().map(|t| t.surface.as_str()).collect();
            p.tag_tokens(&surfaces)
        }
        PosSource::Gold(mapping) => {
            let raw: Vec<&str> = tokens
                .iter()
                .map(|t| t.pos.as_deref().unwrap_or(""))
                .collect();
            gold_pos(&raw, mapping).infos
        }
    };
    Sequence { words, pos }
}

fn class_tag(class: &str) -> Result<SegTag> {
    class
        .parse()
        .map_err(|_| Error::ModelMismatch(format!("model class {class:?} is not a segment tag")))
}

/// Greedy decoding of one turn.
pub fn decode(model: &LinearModel, seq: &Sequence<'_>) -> Result<Vec<SegTag>> {
    if seq.is_empty() {
        return Err(Error::EmptyInput("cannot tag an empty turn".into()));
    }
    let template = model.template();
    let mut tags = Vec::with_capacity(seq.len());
    tags.push(SegTag::BSeg);
    for position in 1..seq.len() {
        let fv = extract_frozen(seq, &tags, position, template, model.alphabet())?;
        tags.push(class_tag(model.predict(&fv)?)?);
    }
    Ok(tags)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segmentation {
    pub tokens: Vec<Token>,
    pub tags: Vec<SegTag>,
    pub utterances: Vec<Range<usize>>,
}

impl Segmentation {
    pub fn from_tags(tokens: Vec<Token>, tags: Vec<SegTag>) -> Self {
        let utterances = spans_from_tags(&tags);
        Segmentation {
            tokens,
            tags,
            utterances,
        }
    }

    /// Utterances as space-joined surface text.
    pub fn utterance_texts(&self) -> Vec<String> {
        self.utterances
            .iter()
            .map(|r| {
                self.tokens[r.clone()]
                    .iter()
                    .map(|t| t.surface.as_str())
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect()
    }
}

pub struct SegmenterPipeline {
    lexicon: WawLexicon,
    pos: Box<dyn PosProvider>,
    model: LinearModel,
}

impl SegmenterPipeline {
    pub fn new(lexicon: WawLexicon, pos: Box<dyn PosProvider>, model: LinearModel) -> Self {
        SegmenterPipeline {
            lexicon,
            pos,
            model,
        }
    }

    pub fn model(&self) -> &LinearModel {
        &self.model
    }

    pub fn lexicon(&self) -> &WawLexicon {
        &self.lexicon
    }

    pub fn preprocess(&self, raw: &str) -> Result<Vec<Token>> {
        preprocess(raw, &self.lexicon)
    }

    pub fn tag_turn(&self, tokens: &[Token]) -> Result<Vec<SegTag>> {
        decode(
            &self.model,
            &token_sequence(tokens, PosSource::Provider(self.pos.as_ref())),
        )
    }

    pub fn segment(&self, raw: &str) -> Result<Segmentation> {
        let tokens = self.preprocess(raw)?;
        let tags = self.tag_turn(&tokens)?;
        Ok(Segmentation::from_tags(tokens, tags))
    }
}

/// Trains a segmentation model on gold-tagged turns.
pub fn train_segmenter<'t>(
    turns: impl IntoIterator<Item = &'t Turn>,
    pos: PosSource<'_>,
    template: FeatureTemplate,
    config: &TrainConfig,
) -> Result<(LinearModel, Vec<BinarySolution>)> {
    let turns: Vec<&Turn> = turns.into_iter().collect();
    let mut labeled = Vec::with_capacity(turns.len());
    for turn in &turns {
        let gold = turn.tags.as_deref().ok_or_else(|| Error::InvalidTurn {
            dialogue: turn.dialogue_id.clone(),
            turn: turn.turn_id.clone(),
            message: "training turn has no gold tags".into(),
        })?;
        labeled.push((token_sequence(&turn.tokens, pos), gold));
    }
    let (alphabet, examples) = training_examples(&labeled, &template)?;
    let examples: Vec<_> = examples
        .into_iter()
        .map(|(fv, tag)| (fv, tag.as_str()))
        .collect();
    LinearModel::train(&examples, alphabet, template, config)
}

/// Tags every turn of a corpus. Tokens and metadata are kept; gold tags
/// and dialogue-act labels are replaced by the prediction.
pub fn tag_corpus(
    model: &LinearModel,
    dialogues: &[Dialogue],
    pos: PosSource<'_>,
) -> Result<Vec<Dialogue>> {
    dialogues
        .iter()
        .map(|d| {
            let turns = d
                .turns
                .par_iter()
                .map(|turn| {
                    let seq = token_sequence(&turn.tokens, pos);
                    let tags = decode(model, &seq).map_err(|e| Error::InvalidTurn {
                        dialogue: turn.dialogue_id.clone(),
                        turn: turn.turn_id.clone(),
                        message: e.to_string(),
                    })?;
                    Ok(Turn {
                        tags: Some(tags),
                        da_labels: None,
                        ..turn.clone()
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Dialogue { turns, ..d.clone() })
        })
        .collect()
}
