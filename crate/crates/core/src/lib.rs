//! Segmentation of Arabic dialogue turns into utterances.
//!
//! A turn is normalized, transliterated to Buckwalter, split at prefixed
//! conjunction waw, and tagged token by token with `B-Seg`/`I-Seg` by a
//! one-vs-rest linear SVM over sliding-window features.

pub mod arabic;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod features;
pub mod metrics;
pub mod pos;
pub mod segmenter;
pub mod svm;
pub mod wawanizer;

pub use arabic::{from_buckwalter, normalize, to_buckwalter, ArabicString, TranslitError};
pub use corpus::{Dialogue, SegTag, Token, Turn};
pub use error::{Error, Result};
pub use features::{Alphabet, FeatureTemplate, FeatureVector};
pub use metrics::{evaluate, Metrics, ReportFormat};
pub use pos::{LexiconPosProvider, PosInfo, PosProvider, TagMapping};
pub use segmenter::{Segmentation, SegmenterPipeline};
pub use svm::{LinearModel, TrainConfig};
pub use wawanizer::{split_waw, WawLexicon};
