//! One-vs-rest linear SVM over sparse features.

mod dcd;
mod model;

use std::collections::BTreeMap;

use rayon::prelude::*;

pub use dcd::{
    dual_objective, primal_objective, solve_binary, BinaryProblem, BinarySolution, SolverParams,
    SparseRow,
};
pub use model::{LinearModel, MODEL_HEADER};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Hinge-loss weight against the L2 regularizer.
    pub c: f64,
    /// Upper bound on coordinate-descent sweeps per class.
    pub max_iters: usize,
    /// Stop once every projected gradient in a sweep is below this.
    pub tol: f64,
    pub shuffle_seed: u64,
    /// Multiplier on `c` for examples of the named class (default 1).
    pub class_weights: BTreeMap<String, f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            c: 1.0,
            max_iters: 1000,
            tol: 1e-4,
            shuffle_seed: 0,
            class_weights: BTreeMap::new(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Config(format!("C must be positive, got {}", self.c)));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::Config(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        for (class, &w) in &self.class_weights {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::Config(format!(
                    "class weight for {class} must be positive"
                )));
            }
        }
        Ok(())
    }

    fn class_weight(&self, class: &str) -> f64 {
        self.class_weights.get(class).copied().unwrap_or(1.0)
    }

    fn solver_params(&self) -> SolverParams {
        SolverParams {
            tol: self.tol,
            max_iters: self.max_iters,
            seed: self.shuffle_seed,
        }
    }
}

/// Per-class weight vectors and biases; scores are `w_k·x + b_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct OvrClassifier {
    classes: Vec<String>,
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

impl OvrClassifier {
    pub fn new(classes: Vec<String>, weights: Vec<Vec<f64>>, bias: Vec<f64>) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::Config(
                "a classifier needs at least one class".into(),
            ));
        }
        if weights.len() != classes.len() || bias.len() != classes.len() {
            return Err(Error::Config(format!(
                "{} classes but {} weight vectors and {} biases",
                classes.len(),
                weights.len(),
                bias.len()
            )));
        }
        let dim = weights[0].len();
        if weights.iter().any(|w| w.len() != dim) {
            return Err(Error::Config("weight vectors differ in length".into()));
        }
        let mut seen = classes.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != classes.len() {
            return Err(Error::Config("duplicate class names".into()));
        }
        Ok(OvrClassifier {
            classes,
            weights,
            bias,
        })
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn dimension(&self) -> usize {
        self.weights[0].len()
    }

    pub fn scores<R: SparseRow>(&self, row: &R) -> Result<Vec<f64>> {
        let dim = self.dimension();
        if row.dimension() > dim {
            return Err(Error::ModelMismatch(format!(
                "feature index {} outside a model of {dim} features",
                row.dimension() - 1
            )));
        }
        Ok(self
            .weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| row.dot(w) + b)
            .collect())
    }

    /// Index of the best-scoring class; ties go to the earlier class.
    pub fn predict<R: SparseRow>(&self, row: &R) -> Result<usize> {
        Ok(argmax(&self.scores(row)?))
    }

    /// Multiplies every weight and bias by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        OvrClassifier {
            classes: self.classes.clone(),
            weights: self
                .weights
                .iter()
                .map(|w| w.iter().map(|v| v * factor).collect())
                .collect(),
            bias: self.bias.iter().map(|b| b * factor).collect(),
        }
    }
}

pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (k, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = k;
        }
    }
    best
}

/// Trains one binary SVM per class, each class against all others.
///
/// `labels[i]` indexes into `classes`. Per-class problems run in parallel;
/// the result does not depend on scheduling.
pub fn train_ovr<R: SparseRow + Sync>(
    rows: &[R],
    labels: &[usize],
    classes: Vec<String>,
    n_features: usize,
    config: &TrainConfig,
) -> Result<(OvrClassifier, Vec<BinarySolution>)> {
    config.validate()?;
    if rows.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if rows.len() != labels.len() {
        return Err(Error::Misaligned(format!(
            "{} examples but {} labels",
            rows.len(),
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes.len()) {
        return Err(Error::Config(format!("label {bad} has no class")));
    }
    if let Some(d) = rows.iter().map(SparseRow::dimension).max() {
        if d > n_features {
            return Err(Error::Config(format!(
                "feature index {} outside {n_features} features",
                d - 1
            )));
        }
    }
    let present: std::collections::BTreeSet<usize> = labels.iter().copied().collect();
    if present.len() == 1 {
        log::warn!(
            "training set holds a single class ({}); the model will always predict it",
            classes[labels[0]]
        );
    }
    let upper: Vec<f64> = labels
        .iter()
        .map(|&l| config.c * config.class_weight(&classes[l]))
        .collect();
    let params = config.solver_params();
    let solutions: Vec<BinarySolution> = (0..classes.len())
        .into_par_iter()
        .map(|k| {
            let positive: Vec<bool> = labels.iter().map(|&l| l == k).collect();
            let problem = BinaryProblem {
                rows,
                positive: &positive,
                upper: &upper,
                n_features,
            };
            let solution = solve_binary(&problem, &params);
            if !solution.converged {
                log::warn!(
                    "class {}: stopped after {} sweeps with violation {:.3e}",
                    classes[k],
                    solution.sweeps,
                    solution.max_violation
                );
            }
            solution
        })
        .collect();
    let weights = solutions.iter().map(|s| s.weights.clone()).collect();
    let bias = solutions.iter().map(|s| s.bias).collect();
    Ok((OvrClassifier::new(classes, weights, bias)?, solutions))
}
