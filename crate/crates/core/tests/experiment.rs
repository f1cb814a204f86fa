mod common;

use std::fs;

use common::without_wall_time;
use qboost::boosting::accuracy;
use qboost::datasets::DatasetKind;
use qboost::experiment::{
    aggregate, emit_report, model_path, read_records_csv, run_experiment, write_records_csv,
    ExperimentConfig, ModelArtifact, ModelId,
};
use qboost::kernels::GramCache;

fn tiny(families: &[DatasetKind], per_family: usize) -> ExperimentConfig {
    ExperimentConfig {
        families: families.to_vec(),
        datasets_per_family: per_family,
        master_seed: 77,
        ..ExperimentConfig::default()
    }
}

#[test]
fn one_dataset_yields_three_records_and_reloadable_models() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny(&[DatasetKind::Circles], 1);
    cfg.output_dir = Some(dir.path().to_path_buf());
    let records = run_experiment(&cfg).unwrap();
    assert_eq!(records.len(), 3);
    let models: Vec<ModelId> = records.iter().map(|r| r.model).collect();
    assert_eq!(models, ModelId::ALL.to_vec());
    assert!(records
        .iter()
        .all(|r| r.is_ok() && r.family == DatasetKind::Circles));

    let split = cfg.make_split(DatasetKind::Circles, 0).unwrap();
    let cache = GramCache::new();
    for r in &records {
        let path = model_path(dir.path(), DatasetKind::Circles, 0, r.model);
        let artifact = ModelArtifact::from_json(&fs::read_to_string(path).unwrap()).unwrap();
        assert_eq!(artifact.id(), r.model);
        let preds = artifact.predict(&split.test.x, &cache).unwrap();
        assert_eq!(accuracy(&preds, &split.test.y), r.test_accuracy);
    }

    let boosted = &records[0];
    let single = &records[1];
    if boosted.ensemble_size == 1 {
        assert_eq!(boosted.test_accuracy, single.test_accuracy);
    }
    assert_eq!(single.ensemble_size, 1);
    assert_eq!(records[2].ensemble_size, 1);
}

#[test]
fn reruns_reproduce_records_exactly() {
    let cfg = tiny(&[DatasetKind::Xor, DatasetKind::Moons], 1);
    let render = |cfg: &ExperimentConfig| {
        let mut buf = Vec::new();
        write_records_csv(&mut buf, &run_experiment(cfg).unwrap()).unwrap();
        without_wall_time(&String::from_utf8(buf).unwrap())
    };
    let first = render(&cfg);
    assert_eq!(first, render(&cfg));
    assert!(first.starts_with("family,dataset_index,dataset_seed,model,test_accuracy"));

    let mut other = cfg.clone();
    other.master_seed = 78;
    assert_ne!(first, render(&other));
}

#[test]
fn report_files_round_trip() {
    let records = run_experiment(&tiny(&[DatasetKind::Moons], 2)).unwrap();
    let stats = aggregate(&records).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit_report(&stats, &records, dir.path()).unwrap();

    let back = read_records_csv(fs::File::open(dir.path().join("records.csv")).unwrap()).unwrap();
    assert_eq!(back, records);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(
        summary["quartile_convention"],
        "tukey-hinges (halves exclude the median)"
    );
    let boxplot = fs::read_to_string(dir.path().join("boxplot.csv")).unwrap();
    assert_eq!(boxplot.lines().count(), 1 + 3);
    assert!(boxplot.starts_with("family,model,count,median,q1,q3,lower_whisker,upper_whisker\n"));

    let size = stats.ensemble_for(DatasetKind::Moons).unwrap();
    assert_eq!(size.runs, 2);
    assert!(size.max <= 10);
}

#[test]
fn config_json_is_strict() {
    assert!(ExperimentConfig::from_json(r#"{"datasets_per_family": 3}"#).is_ok());
    assert!(ExperimentConfig::from_json(r#"{"datasets_per_fam": 3}"#).is_err());
    assert!(ExperimentConfig::from_json(r#"{"grid": {"feature_maps": ["paulis=Z;reps=2;map=havlicek-default"], "alphas": [3.0], "Cs": [1.0]}}"#).is_err());
    let cfg = ExperimentConfig::from_json(r#"{"families": ["circles"], "max_rounds": 4}"#).unwrap();
    assert_eq!(cfg.families, vec![DatasetKind::Circles]);
    assert_eq!(cfg.max_rounds, 4);
}
