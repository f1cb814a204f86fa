//! Box-plot statistics, ensemble-size and boosting-gain tables, and the files
//! they are written to.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ModelId, RunRecord};
use crate::datasets::DatasetKind;
use crate::error::{Error, Result};

/// Quartiles are medians of the lower and upper halves, with the overall
/// median excluded from both halves when the count is odd.
pub const QUARTILE_CONVENTION: &str = "tukey-hinges (halves exclude the median)";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub family: DatasetKind,
    pub model: ModelId,
    pub count: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    /// `q1 - 1.5 (q3 - q1)`
    pub lower_whisker: f64,
    /// `q3 + 1.5 (q3 - q1)`
    pub upper_whisker: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSizeStats {
    pub family: DatasetKind,
    pub runs: usize,
    pub mean: f64,
    pub max: usize,
    /// Ensembles with more than one learner.
    pub count_gt1: usize,
}

/// Test-accuracy gain of the boosted model over its first round, restricted
/// to datasets whose pruned ensemble exceeds a size threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImprovementStats {
    pub family: DatasetKind,
    pub count_gt2: usize,
    pub mean_gt2: Option<f64>,
    pub max_gt2: Option<f64>,
    pub count_gt1: usize,
    pub mean_gt1: Option<f64>,
    pub max_gt1: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub quartile_convention: String,
    pub boxes: Vec<BoxStats>,
    pub ensemble_sizes: Vec<EnsembleSizeStats>,
    pub improvements: Vec<ImprovementStats>,
    pub failed_runs: usize,
}

impl SummaryStats {
    pub fn box_for(&self, family: DatasetKind, model: ModelId) -> Option<&BoxStats> {
        self.boxes
            .iter()
            .find(|b| b.family == family && b.model == model)
    }

    pub fn ensemble_for(&self, family: DatasetKind) -> Option<&EnsembleSizeStats> {
        self.ensemble_sizes.iter().find(|e| e.family == family)
    }

    pub fn improvement_for(&self, family: DatasetKind) -> Option<&ImprovementStats> {
        self.improvements.iter().find(|e| e.family == family)
    }
}

fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// `(q1, median, q3)` of a non-empty sample.
pub fn quartiles(values: &[f64]) -> (f64, f64, f64) {
    assert!(!values.is_empty(), "quartiles of an empty sample");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let median = median_sorted(&v);
    if n == 1 {
        return (v[0], median, v[0]);
    }
    let lower = &v[..n / 2];
    let upper = &v[n.div_ceil(2)..];
    (median_sorted(lower), median, median_sorted(upper))
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn max(v: &[f64]) -> Option<f64> {
    v.iter().copied().reduce(f64::max)
}

pub fn aggregate(records: &[RunRecord]) -> Result<SummaryStats> {
    if records.is_empty() {
        return Err(Error::Parameter("no run records to aggregate".into()));
    }
    let ok: Vec<&RunRecord> = records.iter().filter(|r| r.is_ok()).collect();
    let failed_runs = records.len() - ok.len();

    let mut acc: BTreeMap<(DatasetKind, ModelId), Vec<f64>> = BTreeMap::new();
    for r in &ok {
        acc.entry((r.family, r.model))
            .or_default()
            .push(r.test_accuracy);
    }
    let boxes = acc
        .into_iter()
        .map(|((family, model), v)| {
            let (q1, median, q3) = quartiles(&v);
            let iqr = q3 - q1;
            BoxStats {
                family,
                model,
                count: v.len(),
                median,
                q1,
                q3,
                lower_whisker: q1 - 1.5 * iqr,
                upper_whisker: q3 + 1.5 * iqr,
            }
        })
        .collect();

    let mut sizes: BTreeMap<DatasetKind, Vec<usize>> = BTreeMap::new();
    let mut singles: BTreeMap<(DatasetKind, usize), f64> = BTreeMap::new();
    for r in &ok {
        match r.model {
            ModelId::BoostedQsvm => sizes.entry(r.family).or_default().push(r.ensemble_size),
            ModelId::SingleQsvm => {
                singles.insert((r.family, r.dataset_index), r.test_accuracy);
            }
            ModelId::SvmBaseline => {}
        }
    }
    let ensemble_sizes = sizes
        .iter()
        .map(|(&family, v)| EnsembleSizeStats {
            family,
            runs: v.len(),
            mean: v.iter().sum::<usize>() as f64 / v.len() as f64,
            max: v.iter().copied().max().unwrap_or(0),
            count_gt1: v.iter().filter(|&&s| s > 1).count(),
        })
        .collect();

    let mut gains: BTreeMap<DatasetKind, Vec<(usize, f64)>> = BTreeMap::new();
    for r in ok.iter().filter(|r| r.model == ModelId::BoostedQsvm) {
        if let Some(single) = singles.get(&(r.family, r.dataset_index)) {
            gains
                .entry(r.family)
                .or_default()
                .push((r.ensemble_size, r.test_accuracy - single));
        }
    }
    let improvements = gains
        .into_iter()
        .map(|(family, v)| {
            let above = |k: usize| -> Vec<f64> {
                v.iter().filter(|(s, _)| *s > k).map(|(_, g)| *g).collect()
            };
            let (gt2, gt1) = (above(2), above(1));
            ImprovementStats {
                family,
                count_gt2: gt2.len(),
                mean_gt2: mean(&gt2),
                max_gt2: max(&gt2),
                count_gt1: gt1.len(),
                mean_gt1: mean(&gt1),
                max_gt1: max(&gt1),
            }
        })
        .collect();

    Ok(SummaryStats {
        quartile_convention: QUARTILE_CONVENTION.to_string(),
        boxes,
        ensemble_sizes,
        improvements,
        failed_runs,
    })
}

pub fn write_records_csv<W: Write>(out: W, records: &[RunRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv<R: Read>(input: R) -> Result<Vec<RunRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// Writes `records.csv`, `summary.json` and `boxplot.csv` into `dir`.
pub fn emit_report(stats: &SummaryStats, records: &[RunRecord], dir: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(Error::Parameter(
            "refusing to write a report with no run records".into(),
        ));
    }
    fs::create_dir_all(dir)?;
    write_records_csv(fs::File::create(dir.join("records.csv"))?, records)?;
    fs::write(
        dir.join("summary.json"),
        serde_json::to_string_pretty(stats)? + "\n",
    )?;

    let mut w = csv::Writer::from_path(dir.join("boxplot.csv"))?;
    w.write_record([
        "family",
        "model",
        "count",
        "median",
        "q1",
        "q3",
        "lower_whisker",
        "upper_whisker",
    ])?;
    for b in &stats.boxes {
        w.write_record([
            b.family.to_string(),
            b.model.to_string(),
            b.count.to_string(),
            b.median.to_string(),
            b.q1.to_string(),
            b.q3.to_string(),
            b.lower_whisker.to_string(),
            b.upper_whisker.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
