//! Multi-dataset experiment harness.
//!
//! For every family and dataset index the harness generates a dataset, splits
//! and scales it, fits a boosted QSVM, takes the ensemble's first round as the
//! single-QSVM reference, grid-searches a classical SVM baseline, and scores
//! all three on the held-out test split. Seeds for datasets and splits are
//! derived from one master seed.

mod baseline;
mod report;

pub use baseline::{classical_svm_baseline, BaselineGrid, BaselineKernel, BaselineResult};
pub use report::{
    aggregate, emit_report, read_records_csv, write_records_csv, BoxStats, EnsembleSizeStats,
    ImprovementStats, SummaryStats, QUARTILE_CONVENTION,
};

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boosting::{
    accuracy, fit_boosted, BoostConfig, BoostedEnsemble, BoostingRound, GridSpec,
};
use crate::datasets::{
    generate, split_and_scale, DatasetKind, DatasetParams, SplitDataset, SplitSizes,
};
use crate::error::{Error, Result};
use crate::kernels::{ClassicalKernel, GramCache};
use crate::rng::derive_seed;
use crate::svm::{SolverSettings, TrainedSVM};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub families: Vec<DatasetKind>,
    pub datasets_per_family: usize,
    pub n_samples: usize,
    pub split: SplitSizes,
    pub dataset: DatasetParams,
    pub grid: GridSpec,
    pub baseline: BaselineGrid,
    pub max_rounds: usize,
    pub solver: SolverSettings,
    pub master_seed: u64,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            families: DatasetKind::ALL.to_vec(),
            datasets_per_family: 10,
            n_samples: 150,
            split: SplitSizes::default(),
            dataset: DatasetParams::default(),
            grid: GridSpec::default(),
            baseline: BaselineGrid::default(),
            max_rounds: 10,
            solver: SolverSettings::default(),
            master_seed: 2021,
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    /// Datasets per family in the full-scale study.
    pub const FULL_SCALE_DATASETS: usize = 50;

    pub fn full_scale(mut self) -> Self {
        self.datasets_per_family = Self::FULL_SCALE_DATASETS;
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.families.is_empty() {
            return Err(Error::Parameter(
                "at least one dataset family is required".into(),
            ));
        }
        if self.datasets_per_family == 0 {
            return Err(Error::Parameter(
                "datasets_per_family must be at least 1".into(),
            ));
        }
        if self.split.total() > self.n_samples {
            return Err(Error::Parameter(format!(
                "split sizes sum to {} but n_samples is {}",
                self.split.total(),
                self.n_samples
            )));
        }
        if self.max_rounds == 0 {
            return Err(Error::Parameter("max_rounds must be at least 1".into()));
        }
        self.grid.validate()?;
        self.baseline.validate()?;
        self.solver.validate()
    }

    pub fn boost_config(&self) -> BoostConfig {
        BoostConfig {
            max_rounds: self.max_rounds,
            solver: self.solver,
        }
    }

    pub fn dataset_seed(&self, family: DatasetKind, index: usize) -> u64 {
        derive_seed(self.master_seed, &[family.tag(), index as u64])
    }

    pub fn split_seed(&self, family: DatasetKind, index: usize) -> u64 {
        derive_seed(self.dataset_seed(family, index), &[1])
    }

    /// Generates and splits dataset `index` of `family`.
    pub fn make_split(&self, family: DatasetKind, index: usize) -> Result<SplitDataset> {
        let data = generate(
            family,
            self.n_samples,
            &self.dataset,
            self.dataset_seed(family, index),
        )?;
        split_and_scale(&data, self.split, self.split_seed(family, index))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelId {
    BoostedQsvm,
    SingleQsvm,
    SvmBaseline,
}

impl ModelId {
    pub const ALL: [ModelId; 3] = [
        ModelId::BoostedQsvm,
        ModelId::SingleQsvm,
        ModelId::SvmBaseline,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelId::BoostedQsvm => "boosted_qsvm",
            ModelId::SingleQsvm => "single_qsvm",
            ModelId::SvmBaseline => "svm_baseline",
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelId::ALL
            .into_iter()
            .find(|m| m.as_str() == s.trim())
            .ok_or_else(|| Error::Parse(format!("unknown model {s:?}")))
    }
}

/// One model's outcome on one dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub family: DatasetKind,
    pub dataset_index: usize,
    pub dataset_seed: u64,
    pub model: ModelId,
    pub test_accuracy: f64,
    pub val_accuracy: f64,
    /// Pruned ensemble length for the boosted model, 1 otherwise.
    pub ensemble_size: usize,
    pub rounds_fitted: usize,
    pub stop_reason: String,
    /// Chosen grid points, `|`-separated.
    pub grid_points: String,
    pub error: String,
    pub wall_time_s: f64,
}

impl RunRecord {
    pub fn is_ok(&self) -> bool {
        self.error.is_empty()
    }

    fn failed(family: DatasetKind, index: usize, seed: u64, model: ModelId, err: &Error) -> Self {
        RunRecord {
            family,
            dataset_index: index,
            dataset_seed: seed,
            model,
            test_accuracy: 0.0,
            val_accuracy: 0.0,
            ensemble_size: 0,
            rounds_fitted: 0,
            stop_reason: String::new(),
            grid_points: String::new(),
            error: err.to_string(),
            wall_time_s: 0.0,
        }
    }

    fn sort_key(&self) -> (DatasetKind, usize, ModelId) {
        (self.family, self.dataset_index, self.model)
    }
}

/// Serialized form of any trained model, self-contained for prediction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelArtifact {
    BoostedQsvm {
        ensemble: BoostedEnsemble,
    },
    SingleQsvm {
        round: BoostingRound,
        train_features: Vec<Vec<f64>>,
    },
    SvmBaseline {
        kernel: ClassicalKernel,
        #[serde(rename = "C")]
        c: f64,
        svm: TrainedSVM,
        train_features: Vec<Vec<f64>>,
    },
}

impl ModelArtifact {
    pub fn id(&self) -> ModelId {
        match self {
            ModelArtifact::BoostedQsvm { .. } => ModelId::BoostedQsvm,
            ModelArtifact::SingleQsvm { .. } => ModelId::SingleQsvm,
            ModelArtifact::SvmBaseline { .. } => ModelId::SvmBaseline,
        }
    }

    /// The ensemble's first round on its own.
    pub fn single_from(ensemble: &BoostedEnsemble) -> Self {
        ModelArtifact::SingleQsvm {
            round: ensemble.rounds[0].clone(),
            train_features: ensemble.train_features.clone(),
        }
    }

    pub fn predict(&self, x: &[Vec<f64>], cache: &GramCache) -> Result<Vec<u8>> {
        match self {
            ModelArtifact::BoostedQsvm { ensemble } => ensemble.predict(x, cache),
            ModelArtifact::SingleQsvm {
                round,
                train_features,
            } => {
                let n = train_features.first().map_or(0, Vec::len);
                let spec = round.point.spec(n)?;
                let gram = cache.fidelity(&spec, x, train_features)?;
                round.svm.predict_gram(&gram)
            }
            ModelArtifact::SvmBaseline {
                kernel,
                svm,
                train_features,
                ..
            } => svm.predict_gram(&kernel.gram(x, train_features)?),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Outcome of all three models on one split.
#[derive(Clone, Debug)]
pub struct DatasetRun {
    pub records: Vec<RunRecord>,
    pub artifacts: Vec<ModelArtifact>,
}

/// Fits and scores the three models on one prepared split.
pub fn run_split(
    config: &ExperimentConfig,
    family: DatasetKind,
    index: usize,
    split: &SplitDataset,
) -> DatasetRun {
    let seed = split.source.seed;
    let mut records = Vec::with_capacity(3);
    let mut artifacts = Vec::with_capacity(3);
    let cache = GramCache::new();

    let started = Instant::now();
    let boosted = fit_boosted(
        &split.train,
        &split.val,
        &config.grid,
        &config.boost_config(),
        &cache,
    );
    let boost_time = started.elapsed().as_secs_f64();
    match boosted.and_then(|ens| {
        let pruned = ModelArtifact::BoostedQsvm {
            ensemble: ens.clone(),
        };
        let single = ModelArtifact::single_from(&ens);
        let b_test = accuracy(&pruned.predict(&split.test.x, &cache)?, &split.test.y);
        let b_val = accuracy(&pruned.predict(&split.val.x, &cache)?, &split.val.y);
        let s_test = accuracy(&single.predict(&split.test.x, &cache)?, &split.test.y);
        Ok((ens, pruned, single, b_test, b_val, s_test))
    }) {
        Ok((ens, pruned, single, b_test, b_val, s_test)) => {
            let points: Vec<String> = ens.rounds.iter().map(|r| r.point.to_string()).collect();
            records.push(RunRecord {
                family,
                dataset_index: index,
                dataset_seed: seed,
                model: ModelId::BoostedQsvm,
                test_accuracy: b_test,
                val_accuracy: b_val,
                ensemble_size: ens.pruned_length,
                rounds_fitted: ens.rounds.len(),
                stop_reason: ens.stop_reason.as_str().to_string(),
                grid_points: points[..ens.pruned_length].join("|"),
                error: String::new(),
                wall_time_s: boost_time,
            });
            records.push(RunRecord {
                family,
                dataset_index: index,
                dataset_seed: seed,
                model: ModelId::SingleQsvm,
                test_accuracy: s_test,
                val_accuracy: ens.rounds[0].val_accuracy,
                ensemble_size: 1,
                rounds_fitted: 1,
                stop_reason: String::new(),
                grid_points: points[0].clone(),
                error: String::new(),
                wall_time_s: boost_time,
            });
            artifacts.push(pruned);
            artifacts.push(single);
        }
        Err(e) => {
            records.push(RunRecord::failed(
                family,
                index,
                seed,
                ModelId::BoostedQsvm,
                &e,
            ));
            records.push(RunRecord::failed(
                family,
                index,
                seed,
                ModelId::SingleQsvm,
                &e,
            ));
        }
    }

    let started = Instant::now();
    match classical_svm_baseline(split, &config.baseline, &config.solver) {
        Ok(b) => {
            records.push(RunRecord {
                family,
                dataset_index: index,
                dataset_seed: seed,
                model: ModelId::SvmBaseline,
                test_accuracy: b.test_accuracy,
                val_accuracy: b.val_accuracy,
                ensemble_size: 1,
                rounds_fitted: 1,
                stop_reason: String::new(),
                grid_points: format!("{};C={:?}", b.kernel.id(), b.c),
                error: String::new(),
                wall_time_s: started.elapsed().as_secs_f64(),
            });
            artifacts.push(ModelArtifact::SvmBaseline {
                kernel: b.kernel,
                c: b.c,
                svm: b.model,
                train_features: split.train.x.clone(),
            });
        }
        Err(e) => records.push(RunRecord::failed(
            family,
            index,
            seed,
            ModelId::SvmBaseline,
            &e,
        )),
    }
    DatasetRun { records, artifacts }
}

pub fn model_path(dir: &Path, family: DatasetKind, index: usize, model: ModelId) -> PathBuf {
    dir.join("models")
        .join(format!("{family}-{index:03}-{model}.json"))
}

/// Runs the sweep. Records come back sorted by (family, dataset index,
/// model); when `output_dir` is set every trained model is written under
/// `models/`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    config.validate()?;
    if let Some(dir) = &config.output_dir {
        fs::create_dir_all(dir.join("models"))?;
    }
    let jobs: Vec<(DatasetKind, usize)> = config
        .families
        .iter()
        .flat_map(|&f| (0..config.datasets_per_family).map(move |i| (f, i)))
        .collect();
    let per_job: Vec<Vec<RunRecord>> = jobs
        .par_iter()
        .map(|&(family, index)| -> Result<Vec<RunRecord>> {
            let split = match config.make_split(family, index) {
                Ok(s) => s,
                Err(e) => {
                    let seed = config.dataset_seed(family, index);
                    return Ok(ModelId::ALL
                        .iter()
                        .map(|&m| RunRecord::failed(family, index, seed, m, &e))
                        .collect());
                }
            };
            let run = run_split(config, family, index, &split);
            if let Some(dir) = &config.output_dir {
                for art in &run.artifacts {
                    fs::write(model_path(dir, family, index, art.id()), art.to_json()?)?;
                }
            }
            Ok(run.records)
        })
        .collect::<Result<_>>()?;
    let mut records: Vec<RunRecord> = per_job.into_iter().flatten().collect();
    records.sort_by_key(RunRecord::sort_key);
    Ok(records)
}
