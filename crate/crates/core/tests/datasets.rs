use std::collections::HashSet;
use std::f64::consts::PI;
use std::io::BufReader;

use proptest::prelude::*;

use qboost::datasets::{
    generate, make_circles, make_moons, make_xor, read_dataset_csv, split_and_scale,
    write_dataset_csv, xor_label, DatasetKind, DatasetParams, SplitSizes,
};

fn kind() -> impl Strategy<Value = DatasetKind> {
    prop::sample::select(DatasetKind::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generators_are_deterministic(kind in kind(), seed in any::<u64>(), n in 4usize..80) {
        let p = DatasetParams::default();
        let a = generate(kind, n, &p, seed).unwrap();
        prop_assert_eq!(&a, &generate(kind, n, &p, seed).unwrap());
        prop_assert_eq!(a.len(), n);
        prop_assert!(a.has_both_classes());
        prop_assert!(a.x.iter().all(|r| r.len() == 2 && r.iter().all(|v| v.is_finite())));
    }

    #[test]
    fn xor_respects_margin_and_labels(seed in any::<u64>(), margin in 0.0f64..0.5) {
        let d = make_xor(60, margin, seed).unwrap();
        for (p, &y) in d.x.iter().zip(&d.y) {
            prop_assert!(p[0].abs() <= 1.0 && p[1].abs() <= 1.0);
            prop_assert!((p[0] * p[1]).abs() >= margin);
            prop_assert_eq!(y, xor_label(p[0], p[1]));
        }
        prop_assert_eq!(d.y.iter().filter(|&&y| y == 1).count(), 30);
    }

    #[test]
    fn split_is_disjoint_balanced_and_scaled(kind in kind(), seed in any::<u64>()) {
        let d = generate(kind, 150, &DatasetParams::default(), seed).unwrap();
        let s = split_and_scale(&d, SplitSizes::default(), seed ^ 0xabc).unwrap();
        let all: HashSet<usize> = s.train_idx.iter().chain(&s.val_idx).chain(&s.test_idx).copied().collect();
        prop_assert_eq!(all.len(), 150);
        prop_assert_eq!((s.train.len(), s.val.len(), s.test.len()), (50, 50, 50));
        prop_assert!(s.train.has_both_classes() && s.val.has_both_classes() && s.test.has_both_classes());
        for feature in 0..2 {
            let col: Vec<f64> = s.train.x.iter().map(|r| r[feature]).collect();
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(lo, 0.0);
            prop_assert!((hi - PI).abs() < 1e-15);
        }
        for (i, &src) in s.test_idx.iter().enumerate() {
            prop_assert_eq!(&s.test.x[i], &s.scaler.transform_point(&d.x[src]));
            prop_assert_eq!(s.test.y[i], d.y[src]);
        }
    }
}

#[test]
fn noiseless_shapes() {
    let m = make_moons(10, 0.0, 0).unwrap();
    assert_eq!(m.x[0], vec![1.0, 0.0]);
    assert_eq!(m.y[0], 0);
    let first_inner = m.y.iter().position(|&y| y == 1).unwrap();
    assert_eq!(m.x[first_inner], vec![0.0, 0.5]);

    let c = make_circles(20, 0.5, 0.0, 0).unwrap();
    assert_eq!(c.x[0], vec![1.0, 0.0]);
    for (p, &y) in c.x.iter().zip(&c.y) {
        let r = p[0].hypot(p[1]);
        let want = if y == 1 { 0.5 } else { 1.0 };
        assert!((r - want).abs() < 1e-12);
    }
}

#[test]
fn parameter_errors() {
    assert!(make_xor(10, 1.0, 0).is_err());
    assert!(make_moons(10, -0.1, 0).is_err());
    assert!(make_circles(10, 1.0, 0.1, 0).is_err());
    assert!(make_circles(10, 0.0, 0.1, 0).is_err());
    assert!(make_moons(2, 0.1, 0).is_err());
}

#[test]
fn csv_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("circles.csv");
    let params = DatasetParams::default();
    let d = generate(DatasetKind::Circles, 150, &params, 12).unwrap();
    let s = split_and_scale(&d, SplitSizes::default(), 13).unwrap();
    let mut file = std::fs::File::create(&path).unwrap();
    write_dataset_csv(&mut file, &d, &params, Some(&s)).unwrap();
    drop(file);

    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("# kind=circles n=150 seed=12"));
    assert!(text.lines().any(|l| l == "x1,x2,y,split"));

    let back = read_dataset_csv(BufReader::new(std::fs::File::open(&path).unwrap())).unwrap();
    assert_eq!(back.data, d);
    let split = back.to_split().unwrap();
    assert_eq!(
        (split.train, split.val, split.test),
        (s.train, s.val, s.test)
    );
}
