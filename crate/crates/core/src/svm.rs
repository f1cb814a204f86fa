//! Weighted soft-margin binary SVM on a precomputed kernel.
//!
//! Labels `y in {0, 1}` map to signs `t = 2y - 1`. The dual
//!
//! ```text
//! max  sum_i a_i - 1/2 sum_ij a_i a_j t_i t_j K_ij
//! s.t. 0 <= a_i <= C * w_i,  sum_i a_i t_i = 0
//! ```
//!
//! is solved by SMO with maximal-violating-pair working-set selection. The
//! per-sample upper bound `C * w_i` is how sample weights enter the fit, so a
//! zero-weight sample can never become a support vector.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::GramMatrix;

const TAU: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    /// Stop once the maximal KKT violation falls below this gap.
    pub kkt_tolerance: f64,
    /// Iteration cap, counted in sweeps of `n` pair updates.
    pub max_passes: usize,
    /// Reserved for randomized tie-breaking. Selection is currently
    /// first-index, so the seed does not influence the result.
    pub seed: u64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            kkt_tolerance: 1e-3,
            max_passes: 10_000,
            seed: 0,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.kkt_tolerance > 0.0) {
            return Err(Error::Parameter(format!(
                "kkt_tolerance must be positive, got {}",
                self.kkt_tolerance
            )));
        }
        if self.max_passes == 0 {
            return Err(Error::Parameter("max_passes must be positive".into()));
        }
        Ok(())
    }
}

/// Records how `{0, 1}` labels map onto SVM signs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelConvention {
    /// `y = 0 -> t = -1`, `y = 1 -> t = +1`.
    #[default]
    #[serde(rename = "y0=-1,y1=+1")]
    ZeroNegOnePos,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedSVM {
    /// `a_i * t_i` for every training sample.
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
    pub support_indices: Vec<usize>,
    #[serde(rename = "C")]
    pub c: f64,
    pub sample_weights: Vec<f64>,
    pub converged: bool,
    /// Set when the weighted training set holds a single class; the model
    /// then predicts that class everywhere.
    pub degenerate_class: Option<u8>,
    pub label_convention: LabelConvention,
    pub iterations: usize,
    pub objective: f64,
}

impl TrainedSVM {
    pub fn n_train(&self) -> usize {
        self.dual_coefs.len()
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate_class.is_some()
    }

    /// `a_i >= 0` recovered from the signed coefficients.
    pub fn alphas(&self) -> Vec<f64> {
        self.dual_coefs.iter().map(|c| c.abs()).collect()
    }

    pub fn decision_function(&self, kernel_row: &[f64]) -> Result<f64> {
        decision_function(self, kernel_row)
    }

    pub fn predict(&self, kernel_row: &[f64]) -> Result<u8> {
        predict(self, kernel_row)
    }

    /// Predictions for every row of a (test x train) Gram.
    pub fn predict_gram(&self, gram: &GramMatrix) -> Result<Vec<u8>> {
        (0..gram.rows())
            .map(|i| self.predict(gram.row(i)))
            .collect()
    }
}

pub fn sign_of(label: u8) -> f64 {
    if label == 1 {
        1.0
    } else {
        -1.0
    }
}

fn check_labels(labels: &[u8]) -> Result<()> {
    match labels.iter().find(|&&y| y > 1) {
        Some(y) => Err(Error::Parameter(format!("labels must be 0 or 1, got {y}"))),
        None => Ok(()),
    }
}

/// Dual objective `sum a - 1/2 a^T Q a` for nonnegative `alphas`.
pub fn dual_objective(gram: &GramMatrix, labels: &[u8], alphas: &[f64]) -> f64 {
    let n = alphas.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alphas[i] == 0.0 {
            continue;
        }
        let ti = sign_of(labels[i]);
        let mut s = 0.0;
        for j in 0..n {
            s += alphas[j] * sign_of(labels[j]) * gram.get(i, j);
        }
        quad += alphas[i] * ti * s;
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

/// Fits with the per-sample box `0 <= a_i <= c * weights[i]`.
pub fn train_weighted_svm(
    gram: &GramMatrix,
    labels: &[u8],
    c: f64,
    weights: &[f64],
    settings: &SolverSettings,
) -> Result<TrainedSVM> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Parameter(format!("C must be positive, got {c}")));
    }
    if weights.len() != labels.len() {
        return Err(Error::dim(labels.len(), weights.len(), "sample weights"));
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
        return Err(Error::Parameter(format!(
            "sample weights must be finite and nonnegative, got {w}"
        )));
    }
    let bounds: Vec<f64> = weights.iter().map(|w| c * w).collect();
    let mut model = train_with_bounds(gram, labels, &bounds, settings)?;
    model.c = c;
    model.sample_weights = weights.to_vec();
    Ok(model)
}

/// Fits with explicit per-sample upper bounds. The returned model records
/// `c = 1` and the bounds as its sample weights.
pub fn train_with_bounds(
    gram: &GramMatrix,
    labels: &[u8],
    upper: &[f64],
    settings: &SolverSettings,
) -> Result<TrainedSVM> {
    settings.validate()?;
    let n = labels.len();
    if !gram.is_square() {
        return Err(Error::dim(
            gram.rows(),
            gram.cols(),
            "training Gram must be square",
        ));
    }
    if gram.rows() != n {
        return Err(Error::dim(gram.rows(), n, "labels vs training Gram"));
    }
    if upper.len() != n {
        return Err(Error::dim(n, upper.len(), "per-sample bounds"));
    }
    check_labels(labels)?;

    let mut present = [false; 2];
    for (&y, &u) in labels.iter().zip(upper) {
        if u > 0.0 {
            present[y as usize] = true;
        }
    }
    let base = TrainedSVM {
        dual_coefs: vec![0.0; n],
        bias: 0.0,
        support_indices: Vec::new(),
        c: 1.0,
        sample_weights: upper.to_vec(),
        converged: true,
        degenerate_class: None,
        label_convention: LabelConvention::ZeroNegOnePos,
        iterations: 0,
        objective: 0.0,
    };
    match present {
        [false, false] => {
            return Err(Error::Parameter(
                "no training sample has a positive weight".into(),
            ))
        }
        [true, true] => {}
        [zero, _] => {
            let class = if zero { 0 } else { 1 };
            return Ok(TrainedSVM {
                bias: sign_of(class),
                degenerate_class: Some(class),
                ..base
            });
        }
    }

    let t: Vec<f64> = labels.iter().map(|&y| sign_of(y)).collect();
    let k = |i: usize, j: usize| gram.get(i, j);
    let mut alpha = vec![0.0; n];
    // gradient of 1/2 a^T Q a - e^T a
    let mut grad = vec![-1.0; n];
    let max_iter = settings.max_passes.saturating_mul(n.max(1));
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iter {
        let mut i = usize::MAX;
        let mut g_max = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut g_min = f64::INFINITY;
        for s in 0..n {
            let in_up = (t[s] > 0.0 && alpha[s] < upper[s]) || (t[s] < 0.0 && alpha[s] > 0.0);
            let in_low = (t[s] > 0.0 && alpha[s] > 0.0) || (t[s] < 0.0 && alpha[s] < upper[s]);
            let v = -t[s] * grad[s];
            if in_up && v > g_max {
                g_max = v;
                i = s;
            }
            if in_low && v < g_min {
                g_min = v;
                j = s;
            }
        }
        if i == usize::MAX || j == usize::MAX || g_max - g_min < settings.kkt_tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        let (ci, cj) = (upper[i], upper[j]);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if t[i] != t[j] {
            let mut quad = k(i, i) + k(j, j) - 2.0 * k(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > ci - cj {
                if alpha[i] > ci {
                    alpha[i] = ci;
                    alpha[j] = ci - diff;
                }
            } else if alpha[j] > cj {
                alpha[j] = cj;
                alpha[i] = cj + diff;
            }
        } else {
            let mut quad = k(i, i) + k(j, j) - 2.0 * k(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > ci {
                if alpha[i] > ci {
                    alpha[i] = ci;
                    alpha[j] = sum - ci;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > cj {
                if alpha[j] > cj {
                    alpha[j] = cj;
                    alpha[i] = sum - cj;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for s in 0..n {
            grad[s] += t[s] * (t[i] * k(i, s) * di + t[j] * k(j, s) * dj);
        }
    }

    let bias = compute_bias(&t, &alpha, &grad, upper);
    let dual_coefs: Vec<f64> = alpha.iter().zip(&t).map(|(a, t)| a * t).collect();
    let support_indices = (0..n).filter(|&s| alpha[s] > 0.0).collect();
    let objective = dual_objective(gram, labels, &alpha);
    Ok(TrainedSVM {
        dual_coefs,
        bias,
        support_indices,
        converged,
        iterations,
        objective,
        ..base
    })
}

/// Mean of `t_j - sum_i a_i t_i K_ij = -t_j g_j` over free vectors, falling
/// back to the midpoint of the interval allowed by bounded ones.
fn compute_bias(t: &[f64], alpha: &[f64], grad: &[f64], upper: &[f64]) -> f64 {
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for s in 0..t.len() {
        if upper[s] <= 0.0 {
            continue;
        }
        let b = -t[s] * grad[s];
        let at_upper = alpha[s] >= upper[s];
        let at_lower = alpha[s] <= 0.0;
        if !at_upper && !at_lower {
            free_sum += b;
            free_count += 1;
        } else if (at_lower && t[s] > 0.0) || (at_upper && t[s] < 0.0) {
            // needs f(x_s) >= 1 (t=+1, a=0) or f(x_s) >= -1 (t=-1, a=C): b >= value
            lo = lo.max(b);
        } else {
            hi = hi.min(b);
        }
    }
    if free_count > 0 {
        free_sum / free_count as f64
    } else {
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => 0.5 * (lo + hi),
            (true, false) => lo,
            (false, true) => hi,
            (false, false) => 0.0,
        }
    }
}

/// `sum_i dual_coefs[i] * kernel_row[i] + bias`.
pub fn decision_function(model: &TrainedSVM, kernel_row: &[f64]) -> Result<f64> {
    if kernel_row.len() != model.n_train() {
        return Err(Error::dim(
            model.n_train(),
            kernel_row.len(),
            "kernel row length",
        ));
    }
    if let Some(class) = model.degenerate_class {
        return Ok(sign_of(class));
    }
    Ok(model
        .dual_coefs
        .iter()
        .zip(kernel_row)
        .map(|(a, k)| a * k)
        .sum::<f64>()
        + model.bias)
}

/// Class 1 when the decision value is `>= 0`.
pub fn predict(model: &TrainedSVM, kernel_row: &[f64]) -> Result<u8> {
    Ok(label_for(decision_function(model, kernel_row)?))
}

pub fn label_for(decision: f64) -> u8 {
    u8::from(decision >= 0.0)
}
