use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{train_ovr, BinarySolution, OvrClassifier, TrainConfig};
use crate::error::{Error, Result};
use crate::features::{Alphabet, FeatureTemplate, FeatureVector};

pub const MODEL_HEADER: &str = "USEG-MODEL v1";

/// A trained classifier together with the alphabet and template that define
/// its feature space.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    classifier: OvrClassifier,
    alphabet: Alphabet,
    template: FeatureTemplate,
}

impl LinearModel {
    pub fn from_parts(
        classes: Vec<String>,
        weights: Vec<Vec<f64>>,
        bias: Vec<f64>,
        mut alphabet: Alphabet,
        template: FeatureTemplate,
    ) -> Result<Self> {
        let classifier = OvrClassifier::new(classes, weights, bias)?;
        if classifier.dimension() != alphabet.len() {
            return Err(Error::ModelMismatch(format!(
                "{} weights per class for an alphabet of {}",
                classifier.dimension(),
                alphabet.len()
            )));
        }
        alphabet.freeze();
        Ok(LinearModel {
            classifier,
            alphabet,
            template,
        })
    }

    /// Trains on labeled feature vectors. Classes are ordered by name.
    pub fn train<L: AsRef<str>>(
        examples: &[(FeatureVector, L)],
        mut alphabet: Alphabet,
        template: FeatureTemplate,
        config: &TrainConfig,
    ) -> Result<(Self, Vec<BinarySolution>)> {
        let classes: Vec<String> = examples
            .iter()
            .map(|(_, l)| l.as_ref().to_string())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let labels: Vec<usize> = examples
            .iter()
            .map(|(_, l)| classes.iter().position(|c| c == l.as_ref()).unwrap())
            .collect();
        let rows: Vec<&FeatureVector> = examples.iter().map(|(fv, _)| fv).collect();
        let (classifier, solutions) = train_ovr(&rows, &labels, classes, alphabet.len(), config)?;
        alphabet.freeze();
        let model = LinearModel {
            classifier,
            alphabet,
            template,
        };
        Ok((model, solutions))
    }

    pub fn classes(&self) -> &[String] {
        self.classifier.classes()
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        self.classifier.weights()
    }

    pub fn bias(&self) -> &[f64] {
        self.classifier.bias()
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn template(&self) -> &FeatureTemplate {
        &self.template
    }

    pub fn classifier(&self) -> &OvrClassifier {
        &self.classifier
    }

    /// `score[k] = w_k·fv + b_k`, aligned with [`classes`](Self::classes).
    pub fn score(&self, fv: &FeatureVector) -> Result<Vec<f64>> {
        self.classifier.scores(fv)
    }

    /// Best class name; ties go to the earlier class.
    pub fn predict(&self, fv: &FeatureVector) -> Result<&str> {
        let k = self.classifier.predict(fv)?;
        Ok(&self.classes()[k])
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{MODEL_HEADER}").unwrap();
        writeln!(out, "template\t{}", self.template).unwrap();
        writeln!(out, "classes\t{}", self.classes().join("\t")).unwrap();
        writeln!(out, "alphabet\t{}", self.alphabet.len()).unwrap();
        for (i, f) in self.alphabet.iter().enumerate() {
            writeln!(out, "{i}\t{f}").unwrap();
        }
        for (class, w) in self.classes().iter().zip(self.weights()) {
            let pairs: Vec<String> = w
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(i, v)| format!("{i}:{v:.16e}"))
                .collect();
            writeln!(out, "weights\t{class}\t{}", pairs.join(" ")).unwrap();
        }
        for (class, b) in self.classes().iter().zip(self.bias()) {
            writeln!(out, "bias\t{class}\t{b:.16e}").unwrap();
        }
        out
    }

    pub fn from_text(text: &str, source: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(n, l)| (n + 1, l));
        let mut next = |what: &str| {
            lines.next().ok_or_else(|| {
                Error::parse(
                    source,
                    0,
                    format!("unexpected end of file, expected {what}"),
                )
            })
        };
        let err = |line: usize, msg: String| Error::parse(source, line, msg);

        let (n, header) = next("header")?;
        if header != MODEL_HEADER {
            return Err(err(n, format!("expected {MODEL_HEADER:?}")));
        }

        let (n, line) = next("template")?;
        let template: FeatureTemplate = line
            .strip_prefix("template\t")
            .ok_or_else(|| err(n, "expected template line".into()))?
            .parse()
            .map_err(|e: Error| err(n, e.to_string()))?;

        let (n, line) = next("classes")?;
        let classes: Vec<String> = line
            .strip_prefix("classes\t")
            .ok_or_else(|| err(n, "expected classes line".into()))?
            .split('\t')
            .map(str::to_string)
            .collect();

        let (n, line) = next("alphabet")?;
        let size: usize = line
            .strip_prefix("alphabet\t")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| err(n, "expected alphabet size".into()))?;
        let mut features = Vec::with_capacity(size);
        for i in 0..size {
            let (n, line) = next("alphabet entry")?;
            let (idx, feature) = line
                .split_once('\t')
                .ok_or_else(|| err(n, "expected index<TAB>feature".into()))?;
            if idx.parse::<usize>().ok() != Some(i) {
                return Err(err(n, format!("expected alphabet index {i}")));
            }
            features.push(feature.to_string());
        }
        let alphabet = Alphabet::from_features(features).map_err(|e| err(0, e.to_string()))?;

        let mut weights = Vec::with_capacity(classes.len());
        for class in &classes {
            let (n, line) = next("weights")?;
            let mut parts = line.splitn(3, '\t');
            if parts.next() != Some("weights") || parts.next() != Some(class.as_str()) {
                return Err(err(n, format!("expected weights for {class}")));
            }
            let mut w = vec![0.0; size];
            for pair in parts.next().unwrap_or("").split_whitespace() {
                let parsed = pair
                    .split_once(':')
                    .and_then(|(i, v)| Some((i.parse::<usize>().ok()?, v.parse::<f64>().ok()?)));
                match parsed {
                    Some((i, v)) if i < size => w[i] = v,
                    _ => return Err(err(n, format!("bad weight entry {pair:?}"))),
                }
            }
            weights.push(w);
        }

        let mut bias = Vec::with_capacity(classes.len());
        for class in &classes {
            let (n, line) = next("bias")?;
            let mut parts = line.split('\t');
            let value = match (parts.next(), parts.next(), parts.next(), parts.next()) {
                (Some("bias"), Some(c), Some(v), None) if c == class => v.parse::<f64>().ok(),
                _ => None,
            };
            bias.push(value.ok_or_else(|| err(n, format!("expected bias for {class}")))?);
        }
        if let Some((n, extra)) = lines.find(|(_, l)| !l.trim().is_empty()) {
            return Err(err(n, format!("trailing content {extra:?}")));
        }
        LinearModel::from_parts(classes, weights, bias, alphabet, template)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, &path.display().to_string())
    }
}
