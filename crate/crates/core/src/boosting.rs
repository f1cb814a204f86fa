//! Boosted QSVM ensembles.
//!
//! Each round runs a grid search over (feature map, alpha, C) with the current
//! sample weights, scores candidates by unweighted validation accuracy and
//! keeps the best. The chosen feature map is then excluded from later rounds,
//! so every member of the ensemble uses a different kernel. Rounds are
//! weighted by `ln((1 - err) / err)` and misclassified training samples have
//! their weights multiplied by `exp(alpha_m)`.
//!
//! Boosting stops when a round classifies the (weighted) training set
//! perfectly, when a round is no better than chance (`err >= 0.5`), when
//! `max_rounds` is reached, or when the feature-map menu runs out. The fitted
//! sequence is finally truncated to the prefix with the lowest validation
//! error.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datasets::LabeledDataset;
use crate::error::{Error, Result};
use crate::kernels::GramCache;
use crate::quantum_sim::{FeatureMap, FeatureMapSpec};
use crate::svm::{train_weighted_svm, SolverSettings, TrainedSVM};

/// Labels of the default two-qubit feature-map menu, in grid order.
pub const DEFAULT_MENU: [&str; 9] = [
    "Z", "ZZ", "Z,ZZ", "X,XX", "Y,YY", "Z,XX", "Z,YY", "X,YY", "X,Y,ZZ",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub feature_maps: Vec<FeatureMap>,
    pub alphas: Vec<f64>,
    #[serde(rename = "Cs")]
    pub cs: Vec<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            feature_maps: DEFAULT_MENU
                .iter()
                .map(|l| FeatureMap::from_labels(l).expect("default menu is valid"))
                .collect(),
            alphas: vec![0.5, 1.0, 1.5, 2.0],
            cs: vec![1.0, 10.0, 100.0],
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.feature_maps.is_empty() || self.alphas.is_empty() || self.cs.is_empty() {
            return Err(Error::Parameter("grid lists must be non-empty".into()));
        }
        if let Some(a) = self.alphas.iter().find(|&&a| !(a > 0.0 && a <= 2.0)) {
            return Err(Error::Parameter(format!("grid alpha {a} outside (0, 2]")));
        }
        if let Some(c) = self.cs.iter().find(|&&c| !(1.0..=100.0).contains(&c)) {
            return Err(Error::Parameter(format!("grid C {c} outside [1, 100]")));
        }
        let mut ids = HashSet::new();
        for m in &self.feature_maps {
            if !ids.insert(m.id()) {
                return Err(Error::Parameter(format!(
                    "duplicate feature map {}",
                    m.id()
                )));
            }
        }
        Ok(())
    }

    pub fn n_cells(&self) -> usize {
        self.feature_maps.len() * self.alphas.len() * self.cs.len()
    }
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub feature_map: FeatureMap,
    pub alpha: f64,
    #[serde(rename = "C")]
    pub c: f64,
}

impl GridPoint {
    pub fn spec(&self, n_qubits: usize) -> Result<FeatureMapSpec> {
        self.feature_map.with_alpha(n_qubits, self.alpha)
    }
}

impl fmt::Display for GridPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "paulis={};reps={};alpha={:?};map={};C={:?}",
            self.feature_map
                .paulis
                .iter()
                .map(|t| t.to_string())
                .collect::<Vec<_>>()
                .join(","),
            self.feature_map.reps,
            self.alpha,
            self.feature_map.data_map.id(),
            self.c
        )
    }
}

/// Per-sample boosting weights; strictly positive and finite.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleWeights(Vec<f64>);

impl SampleWeights {
    pub fn ones(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::Parameter("sample weights must be non-empty".into()));
        }
        if let Some(v) = w.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::Parameter(format!(
                "sample weights must be positive and finite, got {v}"
            )));
        }
        Ok(Self(w))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `sum w_i [pred_i != truth_i] / sum w_i`.
pub fn estimator_error(predictions: &[u8], truth: &[u8], weights: &SampleWeights) -> Result<f64> {
    if predictions.len() != truth.len() {
        return Err(Error::dim(
            truth.len(),
            predictions.len(),
            "predictions vs labels",
        ));
    }
    if weights.len() != truth.len() {
        return Err(Error::dim(truth.len(), weights.len(), "weights vs labels"));
    }
    let total: f64 = weights.as_slice().iter().sum();
    let wrong: f64 = predictions
        .iter()
        .zip(truth)
        .zip(weights.as_slice())
        .filter(|((p, t), _)| p != t)
        .fold(0.0, |acc, (_, w)| acc + w);
    Ok(wrong / total)
}

/// `ln((1 - err) / err)`, defined for `0 < err < 0.5`.
pub fn estimator_weight(err: f64) -> Result<f64> {
    if !(err > 0.0 && err < 0.5) {
        return Err(Error::Contract(format!(
            "estimator weight needs 0 < err < 0.5, got {err}"
        )));
    }
    Ok(((1.0 - err) / err).ln())
}

/// Multiplies misclassified weights by `exp(alpha_m)`. No renormalization.
pub fn update_weights(
    weights: &SampleWeights,
    misclassified: &[bool],
    alpha_m: f64,
) -> Result<SampleWeights> {
    if misclassified.len() != weights.len() {
        return Err(Error::dim(
            weights.len(),
            misclassified.len(),
            "misclassification mask",
        ));
    }
    let factor = alpha_m.exp();
    SampleWeights::new(
        weights
            .as_slice()
            .iter()
            .zip(misclassified)
            .map(|(&w, &m)| if m { w * factor } else { w })
            .collect(),
    )
}

pub fn accuracy(predictions: &[u8], truth: &[u8]) -> f64 {
    let hits = predictions
        .iter()
        .zip(truth)
        .filter(|(p, t)| p == t)
        .count();
    hits as f64 / truth.len() as f64
}

/// Winner of one round's grid search.
#[derive(Clone, Debug)]
pub struct Candidate {
    pub point: GridPoint,
    pub model: TrainedSVM,
    pub val_accuracy: f64,
    pub train_predictions: Vec<u8>,
}

fn check_dataset(d: &LabeledDataset, what: &'static str) -> Result<usize> {
    if d.is_empty() {
        return Err(Error::Parameter(format!("{what} set is empty")));
    }
    if d.x.len() != d.y.len() {
        return Err(Error::dim(d.y.len(), d.x.len(), what));
    }
    Ok(d.x[0].len())
}

/// Fits one weighted SVM per non-excluded (feature map, alpha, C) cell and
/// returns the cell with the highest validation accuracy. Ties go to the
/// earliest cell in (menu order, ascending alpha, ascending C).
pub fn grid_search_best(
    train: &LabeledDataset,
    weights: &SampleWeights,
    val: &LabeledDataset,
    grid: &GridSpec,
    excluded: &HashSet<String>,
    solver: &SolverSettings,
    cache: &GramCache,
) -> Result<Candidate> {
    let n_qubits = check_dataset(train, "training")?;
    check_dataset(val, "validation")?;
    if weights.len() != train.len() {
        return Err(Error::dim(
            train.len(),
            weights.len(),
            "weights vs training set",
        ));
    }
    let alphas = sorted(&grid.alphas);
    let cs = sorted(&grid.cs);
    let jobs: Vec<(&FeatureMap, f64)> = grid
        .feature_maps
        .iter()
        .filter(|m| !excluded.contains(&m.id()))
        .flat_map(|m| alphas.iter().map(move |&a| (m, a)))
        .collect();
    if jobs.is_empty() {
        return Err(Error::Exhausted);
    }

    let per_job: Vec<Candidate> = jobs
        .par_iter()
        .map(|&(map, alpha)| -> Result<Candidate> {
            let spec = map.with_alpha(n_qubits, alpha)?;
            let k_train = cache.fidelity(&spec, &train.x, &train.x)?;
            let k_val = cache.fidelity(&spec, &val.x, &train.x)?;
            let mut best: Option<Candidate> = None;
            for &c in &cs {
                let model = train_weighted_svm(&k_train, &train.y, c, weights.as_slice(), solver)?;
                let val_accuracy = accuracy(&model.predict_gram(&k_val)?, &val.y);
                if best.as_ref().is_none_or(|b| val_accuracy > b.val_accuracy) {
                    let train_predictions = model.predict_gram(&k_train)?;
                    best = Some(Candidate {
                        point: GridPoint {
                            feature_map: map.clone(),
                            alpha,
                            c,
                        },
                        model,
                        val_accuracy,
                        train_predictions,
                    });
                }
            }
            Ok(best.expect("C list is non-empty"))
        })
        .collect::<Result<_>>()?;

    let mut best: Option<Candidate> = None;
    for cand in per_job {
        if best
            .as_ref()
            .is_none_or(|b| cand.val_accuracy > b.val_accuracy)
        {
            best = Some(cand);
        }
    }
    Ok(best.expect("at least one job"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Perfect,
    WorseThanRandom,
    MaxReached,
    MapsExhausted,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Perfect => "perfect",
            StopReason::WorseThanRandom => "worse_than_random",
            StopReason::MaxReached => "max_reached",
            StopReason::MapsExhausted => "maps_exhausted",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoostingRound {
    #[serde(flatten)]
    pub point: GridPoint,
    pub err_m: f64,
    pub alpha_m: f64,
    pub val_accuracy: f64,
    /// The round classified the weighted training set without error; it then
    /// stands alone in any prefix vote that reaches it.
    pub perfect: bool,
    pub svm: TrainedSVM,
}

/// A round selected and then dropped because it was no better than chance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RejectedRound {
    #[serde(flatten)]
    pub point: GridPoint,
    pub err_m: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoostedEnsemble {
    pub rounds: Vec<BoostingRound>,
    pub pruned_length: usize,
    pub stop_reason: StopReason,
    pub rejected: Option<RejectedRound>,
    /// Scaled training features; kernel rows for new points are taken against
    /// these.
    pub train_features: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoostConfig {
    pub max_rounds: usize,
    pub solver: SolverSettings,
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self {
            max_rounds: 10,
            solver: SolverSettings::default(),
        }
    }
}

/// Weighted vote `sum alpha_m G_m / sum alpha_m`; label 1 iff the score is at
/// least 0.5.
pub fn weighted_vote(alphas: &[f64], votes: &[u8]) -> Result<(f64, u8)> {
    if alphas.len() != votes.len() {
        return Err(Error::dim(alphas.len(), votes.len(), "votes vs rounds"));
    }
    if alphas.is_empty() {
        return Err(Error::Parameter("cannot vote with no rounds".into()));
    }
    let total: f64 = alphas.iter().sum();
    let yes: f64 = alphas
        .iter()
        .zip(votes)
        .filter(|(_, &v)| v == 1)
        .map(|(a, _)| a)
        .sum();
    let score = yes / total;
    Ok((score, u8::from(score >= 0.5)))
}

/// Smallest prefix length with minimal error.
pub fn best_prefix(errors: &[f64]) -> usize {
    let mut best = 0;
    for (k, e) in errors.iter().enumerate() {
        if e.total_cmp(&errors[best]) == Ordering::Less {
            best = k;
        }
    }
    best + 1
}

impl BoostedEnsemble {
    pub fn n_qubits(&self) -> usize {
        self.train_features.first().map_or(0, Vec::len)
    }

    /// Rounds voting for the prefix of length `k`. A perfect round ends the
    /// sequence and votes alone.
    pub fn prefix_rounds(&self, k: usize) -> &[BoostingRound] {
        assert!(
            k >= 1 && k <= self.rounds.len(),
            "prefix length {k} out of range"
        );
        if self.rounds[k - 1].perfect {
            &self.rounds[k - 1..k]
        } else {
            &self.rounds[..k]
        }
    }

    pub fn active_rounds(&self) -> &[BoostingRound] {
        self.prefix_rounds(self.pruned_length)
    }

    /// Per-round predictions of `x`, one vector per fitted round.
    pub fn round_predictions(&self, x: &[Vec<f64>], cache: &GramCache) -> Result<Vec<Vec<u8>>> {
        self.rounds
            .iter()
            .map(|r| self.predict_round(r, x, cache))
            .collect()
    }

    fn predict_round(
        &self,
        r: &BoostingRound,
        x: &[Vec<f64>],
        cache: &GramCache,
    ) -> Result<Vec<u8>> {
        let spec = r.point.spec(self.n_qubits())?;
        let gram = cache.fidelity(&spec, x, &self.train_features)?;
        r.svm.predict_gram(&gram)
    }

    /// Validation error of each prefix `1..=len`.
    pub fn prefix_errors(&self, data: &LabeledDataset, cache: &GramCache) -> Result<Vec<f64>> {
        let preds = self.round_predictions(&data.x, cache)?;
        (1..=self.rounds.len())
            .map(|k| {
                let labels = self.vote_prefix(k, &preds)?;
                Ok(1.0 - accuracy(&labels, &data.y))
            })
            .collect()
    }

    fn vote_prefix(&self, k: usize, preds: &[Vec<u8>]) -> Result<Vec<u8>> {
        let first = if self.rounds[k - 1].perfect { k - 1 } else { 0 };
        let alphas: Vec<f64> = self.rounds[first..k].iter().map(|r| r.alpha_m).collect();
        let n = preds.first().map_or(0, Vec::len);
        (0..n)
            .map(|i| {
                let votes: Vec<u8> = preds[first..k].iter().map(|p| p[i]).collect();
                Ok(weighted_vote(&alphas, &votes)?.1)
            })
            .collect()
    }

    /// Labels from the pruned ensemble.
    pub fn predict(&self, x: &[Vec<f64>], cache: &GramCache) -> Result<Vec<u8>> {
        let rounds = self.active_rounds();
        let preds = rounds
            .iter()
            .map(|r| self.predict_round(r, x, cache))
            .collect::<Result<Vec<_>>>()?;
        let alphas: Vec<f64> = rounds.iter().map(|r| r.alpha_m).collect();
        (0..x.len())
            .map(|i| {
                let votes: Vec<u8> = preds.iter().map(|p| p[i]).collect();
                Ok(weighted_vote(&alphas, &votes)?.1)
            })
            .collect()
    }
}

/// Score and label for one point from per-round kernel rows, one row per
/// active round in order.
pub fn predict_ensemble<R: AsRef<[f64]>>(
    ensemble: &BoostedEnsemble,
    gram_rows: &[R],
) -> Result<(f64, u8)> {
    let rounds = ensemble.active_rounds();
    if gram_rows.len() != rounds.len() {
        return Err(Error::dim(
            rounds.len(),
            gram_rows.len(),
            "kernel rows vs active rounds",
        ));
    }
    let votes = rounds
        .iter()
        .zip(gram_rows)
        .map(|(r, row)| r.svm.predict(row.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    let alphas: Vec<f64> = rounds.iter().map(|r| r.alpha_m).collect();
    weighted_vote(&alphas, &votes)
}

/// Sets `pruned_length` to the prefix with the lowest validation error.
pub fn prune_by_validation(
    mut ensemble: BoostedEnsemble,
    val: &LabeledDataset,
    cache: &GramCache,
) -> Result<BoostedEnsemble> {
    if ensemble.rounds.is_empty() {
        return Err(Error::Parameter("cannot prune an empty ensemble".into()));
    }
    let errors = ensemble.prefix_errors(val, cache)?;
    ensemble.pruned_length = best_prefix(&errors);
    Ok(ensemble)
}

/// Runs the boosting loop and prunes the result on `val`.
pub fn fit_boosted(
    train: &LabeledDataset,
    val: &LabeledDataset,
    grid: &GridSpec,
    config: &BoostConfig,
    cache: &GramCache,
) -> Result<BoostedEnsemble> {
    grid.validate()?;
    if config.max_rounds == 0 {
        return Err(Error::Parameter("max_rounds must be at least 1".into()));
    }
    check_dataset(train, "training")?;
    if train.y.iter().any(|&y| y > 1) || val.y.iter().any(|&y| y > 1) {
        return Err(Error::Parameter("labels must be 0 or 1".into()));
    }

    let mut weights = SampleWeights::ones(train.len());
    let mut excluded = HashSet::new();
    let mut rounds: Vec<BoostingRound> = Vec::new();
    let mut rejected = None;

    let stop_reason = loop {
        if rounds.len() == config.max_rounds {
            break StopReason::MaxReached;
        }
        let cand =
            match grid_search_best(train, &weights, val, grid, &excluded, &config.solver, cache) {
                Err(Error::Exhausted) => break StopReason::MapsExhausted,
                other => other?,
            };
        let misclassified: Vec<bool> = cand
            .train_predictions
            .iter()
            .zip(&train.y)
            .map(|(p, y)| p != y)
            .collect();
        let err_m = estimator_error(&cand.train_predictions, &train.y, &weights)?;
        let make_round = |alpha_m: f64, perfect: bool| BoostingRound {
            point: cand.point.clone(),
            err_m,
            alpha_m,
            val_accuracy: cand.val_accuracy,
            perfect,
            svm: cand.model.clone(),
        };

        if err_m <= 0.0 {
            rounds.push(make_round(1.0, true));
            break StopReason::Perfect;
        }
        if err_m >= 0.5 {
            if rounds.is_empty() {
                rounds.push(make_round(1.0, false));
            } else {
                rejected = Some(RejectedRound {
                    point: cand.point.clone(),
                    err_m,
                });
            }
            break StopReason::WorseThanRandom;
        }

        let alpha_m = estimator_weight(err_m)?;
        excluded.insert(cand.point.feature_map.id());
        rounds.push(make_round(alpha_m, false));
        weights = update_weights(&weights, &misclassified, alpha_m)?;
    };

    let ensemble = BoostedEnsemble {
        pruned_length: rounds.len(),
        rounds,
        stop_reason,
        rejected,
        train_features: train.x.clone(),
    };
    prune_by_validation(ensemble, val, cache)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(v: &[f64]) -> SampleWeights {
        SampleWeights::new(v.to_vec()).unwrap()
    }

    #[test]
    fn estimator_error_examples() {
        assert_eq!(
            estimator_error(&[1, 0, 1], &[1, 0, 1], &w(&[1.0; 3])).unwrap(),
            0.0
        );
        assert_eq!(
            estimator_error(&[1, 0, 1, 1], &[1, 0, 1, 0], &w(&[1.0; 4])).unwrap(),
            0.25
        );
        assert_eq!(
            estimator_error(&[0, 1], &[1, 1], &w(&[3.0, 1.0])).unwrap(),
            0.75
        );
        assert!(estimator_error(&[0], &[1, 1], &w(&[1.0, 1.0])).is_err());
    }

    #[test]
    fn estimator_weight_examples() {
        assert!((estimator_weight(0.25).unwrap() - 3f64.ln()).abs() < 1e-15);
        assert!((estimator_weight(0.25).unwrap() - 1.0986).abs() < 1e-4);
        assert!((estimator_weight(0.1).unwrap() - 9f64.ln()).abs() < 1e-15);
        assert!((estimator_weight(0.1).unwrap() - 2.1972).abs() < 1e-4);
        let near = estimator_weight(0.5 - 1e-9).unwrap();
        assert!(near > 0.0 && near < 1e-8);
        for bad in [0.0, 0.5, 0.7, -0.1, f64::NAN] {
            assert!(matches!(estimator_weight(bad), Err(Error::Contract(_))));
        }
    }

    #[test]
    fn update_weights_examples() {
        let base = w(&[1.0, 1.0]);
        assert_eq!(update_weights(&base, &[false, false], 2.0).unwrap(), base);
        let up = update_weights(&base, &[true, false], 3f64.ln()).unwrap();
        assert!((up.as_slice()[0] - 3.0).abs() < 1e-14);
        assert_eq!(up.as_slice()[1], 1.0);
        assert_eq!(update_weights(&base, &[true, true], 0.0).unwrap(), base);
        assert!(update_weights(&base, &[true], 1.0).is_err());
    }

    #[test]
    fn sample_weights_positive() {
        assert!(SampleWeights::new(vec![1.0, 0.0]).is_err());
        assert!(SampleWeights::new(vec![]).is_err());
        assert_eq!(SampleWeights::ones(3).as_slice(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn vote_examples() {
        assert_eq!(weighted_vote(&[0.7], &[1]).unwrap(), (1.0, 1));
        assert_eq!(weighted_vote(&[1.0, 1.0], &[1, 0]).unwrap(), (0.5, 1));
        let (l3, l9) = (3f64.ln(), 9f64.ln());
        let (score, label) = weighted_vote(&[l3, l9, l3], &[1, 0, 1]).unwrap();
        let expected = 2.0 * l3 / (2.0 * l3 + l9);
        assert_eq!(score, expected);
        assert!((score - 0.5).abs() < 1e-15);
        assert_eq!(label, 1);
        assert!(weighted_vote(&[1.0], &[1, 0]).is_err());
    }

    #[test]
    fn prefix_choice() {
        assert_eq!(best_prefix(&[0.2, 0.1, 0.1]), 2);
        assert_eq!(best_prefix(&[0.3]), 1);
        assert_eq!(best_prefix(&[0.1, 0.3, 0.1]), 1);
        assert_eq!(best_prefix(&[0.3, 0.2, 0.0]), 3);
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::default().validate().is_ok());
        assert_eq!(GridSpec::default().n_cells(), 9 * 4 * 3);
        let bad_alpha = GridSpec {
            alphas: vec![0.0],
            ..GridSpec::default()
        };
        assert!(bad_alpha.validate().is_err());
        let bad_c = GridSpec {
            cs: vec![0.5],
            ..GridSpec::default()
        };
        assert!(bad_c.validate().is_err());
        let mut dup = GridSpec::default();
        dup.feature_maps.push(dup.feature_maps[0].clone());
        assert!(dup.validate().is_err());
    }

    #[test]
    fn grid_point_text() {
        let p = GridPoint {
            feature_map: FeatureMap::from_labels("Z,ZZ").unwrap(),
            alpha: 1.5,
            c: 10.0,
        };
        assert_eq!(
            p.to_string(),
            "paulis=Z,ZZ;reps=2;alpha=1.5;map=havlicek-default;C=10.0"
        );
        assert_eq!(
            p.spec(2).unwrap().canonical(),
            "paulis=Z,ZZ;reps=2;alpha=1.5;map=havlicek-default"
        );
    }
}
