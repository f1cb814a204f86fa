use serde::{Deserialize, Serialize};

use crate::boosting::accuracy;
use crate::datasets::SplitDataset;
use crate::error::{Error, Result};
use crate::kernels::ClassicalKernel;
use crate::svm::{train_weighted_svm, SolverSettings, TrainedSVM};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKernel {
    Rbf,
    Linear,
}

/// Classical SVM grid. Cells run in kernel order, then ascending gamma (RBF
/// only), then ascending C; the first cell wins ties.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineGrid {
    pub kernels: Vec<BaselineKernel>,
    #[serde(rename = "Cs")]
    pub cs: Vec<f64>,
    pub gammas: Vec<f64>,
}

impl Default for BaselineGrid {
    fn default() -> Self {
        Self {
            kernels: vec![BaselineKernel::Rbf, BaselineKernel::Linear],
            cs: vec![0.1, 1.0, 10.0, 100.0],
            gammas: vec![0.0001, 0.001, 0.01, 0.1, 1.0, 10.0],
        }
    }
}

impl BaselineGrid {
    pub fn validate(&self) -> Result<()> {
        if self.kernels.is_empty() || self.cs.is_empty() {
            return Err(Error::Parameter(
                "baseline kernels and Cs must be non-empty".into(),
            ));
        }
        if self.kernels.contains(&BaselineKernel::Rbf) && self.gammas.is_empty() {
            return Err(Error::Parameter(
                "rbf baseline needs at least one gamma".into(),
            ));
        }
        if let Some(c) = self.cs.iter().find(|&&c| !(0.1..=100.0).contains(&c)) {
            return Err(Error::Parameter(format!(
                "baseline C {c} outside [0.1, 100]"
            )));
        }
        if let Some(g) = self.gammas.iter().find(|&&g| !(0.0001..=10.0).contains(&g)) {
            return Err(Error::Parameter(format!(
                "baseline gamma {g} outside [0.0001, 10]"
            )));
        }
        Ok(())
    }

    /// Grid cells in tie-break order.
    pub fn cells(&self) -> Vec<(ClassicalKernel, f64)> {
        let sorted = |v: &[f64]| {
            let mut v = v.to_vec();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };
        let cs = sorted(&self.cs);
        let mut out = Vec::new();
        for kind in &self.kernels {
            match kind {
                BaselineKernel::Rbf => {
                    for gamma in sorted(&self.gammas) {
                        out.extend(cs.iter().map(|&c| (ClassicalKernel::Rbf { gamma }, c)));
                    }
                }
                BaselineKernel::Linear => {
                    out.extend(cs.iter().map(|&c| (ClassicalKernel::Linear, c)));
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct BaselineResult {
    pub kernel: ClassicalKernel,
    pub c: f64,
    pub model: TrainedSVM,
    pub val_accuracy: f64,
    pub test_accuracy: f64,
}

/// Grid search of a unit-weight classical SVM scored on validation accuracy.
pub fn classical_svm_baseline(
    split: &SplitDataset,
    grid: &BaselineGrid,
    solver: &SolverSettings,
) -> Result<BaselineResult> {
    grid.validate()?;
    let weights = vec![1.0; split.train.len()];
    let mut best: Option<(ClassicalKernel, f64, TrainedSVM, f64)> = None;
    let mut last_kernel = None;
    let mut grams = None;
    for (kernel, c) in grid.cells() {
        if last_kernel != Some(kernel) {
            let k_train = kernel.gram(&split.train.x, &split.train.x)?;
            let k_val = kernel.gram(&split.val.x, &split.train.x)?;
            grams = Some((k_train, k_val));
            last_kernel = Some(kernel);
        }
        let (k_train, k_val) = grams.as_ref().expect("set above");
        let model = train_weighted_svm(k_train, &split.train.y, c, &weights, solver)?;
        let acc = accuracy(&model.predict_gram(k_val)?, &split.val.y);
        if best.as_ref().is_none_or(|b| acc > b.3) {
            best = Some((kernel, c, model, acc));
        }
    }
    let (kernel, c, model, val_accuracy) = best.expect("grid has cells");
    let k_test = kernel.gram(&split.test.x, &split.train.x)?;
    let test_accuracy = accuracy(&model.predict_gram(&k_test)?, &split.test.y);
    Ok(BaselineResult {
        kernel,
        c,
        model,
        val_accuracy,
        test_accuracy,
    })
}
