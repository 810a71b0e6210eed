//! Dual coordinate descent for the L2-regularized L1-loss (hinge) SVM.
//!
//! The bias is an always-on feature of value 1, so it is regularized with
//! the weights and the dual stays box-constrained:
//!
//! ```text
//! min_α  ½ αᵀQα − Σα    s.t. 0 ≤ α_i ≤ U_i,   Q_ij = y_i y_j (x_i·x_j + 1)
//! ```
//!
//! `w = Σ α_i y_i x_i` and `b = Σ α_i y_i` are maintained incrementally, so
//! one coordinate step costs a sparse dot product.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::features::FeatureVector;

/// Read access to a sparse example.
pub trait SparseRow {
    fn for_each_entry<F: FnMut(usize, f64)>(&self, f: F);

    fn dot(&self, w: &[f64]) -> f64 {
        let mut s = 0.0;
        self.for_each_entry(|i, v| s += w[i] * v);
        s
    }

    fn squared_norm(&self) -> f64 {
        let mut s = 0.0;
        self.for_each_entry(|_, v| s += v * v);
        s
    }

    fn add_scaled_to(&self, scale: f64, w: &mut [f64]) {
        self.for_each_entry(|i, v| w[i] += scale * v);
    }

    /// One past the largest index, 0 for an empty row.
    fn dimension(&self) -> usize {
        let mut d = 0;
        self.for_each_entry(|i, _| d = d.max(i + 1));
        d
    }
}

impl SparseRow for FeatureVector {
    fn for_each_entry<F: FnMut(usize, f64)>(&self, mut f: F) {
        for &i in self.indices() {
            f(i as usize, 1.0);
        }
    }
}

impl SparseRow for Vec<(usize, f64)> {
    fn for_each_entry<F: FnMut(usize, f64)>(&self, mut f: F) {
        for &(i, v) in self {
            f(i, v);
        }
    }
}

impl<R: SparseRow + ?Sized> SparseRow for &R {
    fn for_each_entry<F: FnMut(usize, f64)>(&self, f: F) {
        (**self).for_each_entry(f)
    }
}

/// A binary problem: `positive[i]` gives `y_i = +1`, `upper[i]` the box bound.
#[derive(Debug, Clone, Copy)]
pub struct BinaryProblem<'a, R> {
    pub rows: &'a [R],
    pub positive: &'a [bool],
    pub upper: &'a [f64],
    pub n_features: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinarySolution {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub alpha: Vec<f64>,
    /// `½ αᵀQα − Σα` at the returned `alpha`.
    pub dual_objective: f64,
    pub sweeps: usize,
    /// Largest projected-gradient magnitude seen in the last sweep.
    pub max_violation: f64,
    pub converged: bool,
}

impl BinarySolution {
    pub fn decision_value<R: SparseRow>(&self, row: &R) -> f64 {
        row.dot(&self.weights) + self.bias
    }
}

fn sign(positive: bool) -> f64 {
    if positive {
        1.0
    } else {
        -1.0
    }
}

pub fn dual_objective(weights: &[f64], bias: f64, alpha: &[f64]) -> f64 {
    let sq: f64 = weights.iter().map(|w| w * w).sum::<f64>() + bias * bias;
    0.5 * sq - alpha.iter().sum::<f64>()
}

/// `½(‖w‖² + b²) + Σ U_i max(0, 1 − y_i (w·x_i + b))`.
pub fn primal_objective<R: SparseRow>(
    problem: &BinaryProblem<'_, R>,
    weights: &[f64],
    bias: f64,
) -> f64 {
    let sq: f64 = weights.iter().map(|w| w * w).sum::<f64>() + bias * bias;
    let loss: f64 = problem
        .rows
        .iter()
        .zip(problem.positive)
        .zip(problem.upper)
        .map(|((x, &p), &u)| u * (1.0 - sign(p) * (x.dot(weights) + bias)).max(0.0))
        .sum();
    0.5 * sq + loss
}

pub fn solve_binary<R: SparseRow>(
    problem: &BinaryProblem<'_, R>,
    params: &SolverParams,
) -> BinarySolution {
    let n = problem.rows.len();
    assert_eq!(problem.positive.len(), n);
    assert_eq!(problem.upper.len(), n);

    let mut w = vec![0.0; problem.n_features];
    let mut b = 0.0;
    let mut alpha = vec![0.0; n];
    let diag: Vec<f64> = problem
        .rows
        .iter()
        .map(|x| x.squared_norm() + 1.0)
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let mut sweeps = 0;
    let mut max_violation = f64::INFINITY;
    let mut converged = n == 0;
    while !converged && sweeps < params.max_iters {
        order.shuffle(&mut rng);
        max_violation = 0.0f64;
        for &i in &order {
            let x = &problem.rows[i];
            let y = sign(problem.positive[i]);
            let u = problem.upper[i];
            let g = y * (x.dot(&w) + b) - 1.0;
            let pg = if alpha[i] <= 0.0 {
                g.min(0.0)
            } else if alpha[i] >= u {
                g.max(0.0)
            } else {
                g
            };
            max_violation = max_violation.max(pg.abs());
            if pg == 0.0 {
                continue;
            }
            let old = alpha[i];
            alpha[i] = (old - g / diag[i]).clamp(0.0, u);
            let step = alpha[i] - old;
            // exact change of the dual objective along coordinate i
            debug_assert!(
                g * step + 0.5 * diag[i] * step * step <= 1e-12 * (1.0 + g.abs()),
                "dual objective increased"
            );
            let scaled = step * y;
            x.add_scaled_to(scaled, &mut w);
            b += scaled;
        }
        sweeps += 1;
        converged = max_violation < params.tol;
    }

    BinarySolution {
        dual_objective: dual_objective(&w, b, &alpha),
        weights: w,
        bias: b,
        alpha,
        sweeps,
        max_violation: if n == 0 { 0.0 } else { max_violation },
        converged,
    }
}
