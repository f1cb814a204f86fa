mod common;

use num_complex::Complex64;
use proptest::prelude::*;

use common::{random_point, random_spec};
use qboost::kernels::{
    fidelity_kernel, gram_matrix, rbf_kernel, self_gram, ClassicalKernel, GramCache, GramMatrix,
};
use qboost::quantum_sim::{dense_unitary_oracle, FeatureMap, FeatureMapSpec};
use qboost::rng::SeededRng;

fn oracle_kernel(spec: &FeatureMapSpec, x: &[f64], y: &[f64]) -> f64 {
    let a = dense_unitary_oracle(spec, x).unwrap();
    let b = dense_unitary_oracle(spec, y).unwrap();
    a.column(0)
        .iter()
        .zip(b.column(0).iter())
        .map(|(u, v)| u.conj() * v)
        .sum::<Complex64>()
        .norm_sqr()
}

fn points(n_qubits: usize, count: usize, rng: &mut SeededRng) -> Vec<Vec<f64>> {
    (0..count).map(|_| random_point(n_qubits, rng)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn self_gram_is_a_valid_kernel(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = SeededRng::new(seed);
        let spec = random_spec(n, &mut rng);
        let x = points(n, 20, &mut rng);
        let g = self_gram(&spec, &x).unwrap();
        prop_assert!(g.max_asymmetry() <= 1e-12);
        for i in 0..20 {
            prop_assert!((g.get(i, i) - 1.0).abs() <= 1e-12);
        }
        prop_assert!(g.min_eigenvalue() >= -1e-9);
        prop_assert!(g.values().iter().all(|&v| (-1e-12..=1.0 + 1e-12).contains(&v)));
    }

    #[test]
    fn kernel_matches_oracle_overlap(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = SeededRng::new(seed);
        let spec = random_spec(n, &mut rng);
        let x = random_point(n, &mut rng);
        let y = random_point(n, &mut rng);
        let k = fidelity_kernel(&spec, &x, &y).unwrap();
        prop_assert!((k - oracle_kernel(&spec, &x, &y)).abs() < 1e-10);
    }
}

#[test]
fn zero_alpha_gives_all_ones() {
    let mut rng = SeededRng::new(5);
    for labels in ["Z", "Z,ZZ", "X,Y,ZZ"] {
        let spec = FeatureMap::from_labels(labels)
            .unwrap()
            .with_alpha(2, 0.0)
            .unwrap();
        let g = self_gram(&spec, &points(2, 12, &mut rng)).unwrap();
        assert!(g.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
    }
}

#[test]
fn z_zz_kernel_example() {
    let spec = FeatureMap::from_labels("Z,ZZ")
        .unwrap()
        .with_alpha(2, 1.0)
        .unwrap();
    let (x, y) = ([0.3, 1.2], [2.0, 0.5]);
    let k = fidelity_kernel(&spec, &x, &y).unwrap();
    assert!((k - oracle_kernel(&spec, &x, &y)).abs() < 1e-12);
    assert!((fidelity_kernel(&spec, &x, &x).unwrap() - 1.0).abs() < 1e-12);
    assert!((k - fidelity_kernel(&spec, &y, &x).unwrap()).abs() < 1e-14);
}

#[test]
fn cross_gram_entries_match_pairwise_kernel() {
    let mut rng = SeededRng::new(9);
    let spec = random_spec(2, &mut rng);
    let a = points(2, 5, &mut rng);
    let b = points(2, 7, &mut rng);
    let g = gram_matrix(&spec, &a, &b).unwrap();
    assert_eq!((g.rows(), g.cols()), (5, 7));
    for i in 0..5 {
        for j in 0..7 {
            assert!((g.get(i, j) - fidelity_kernel(&spec, &a[i], &b[j]).unwrap()).abs() < 1e-14);
        }
    }
}

#[test]
fn cache_returns_identical_matrices() {
    let mut rng = SeededRng::new(4);
    let spec = random_spec(2, &mut rng);
    let a = points(2, 6, &mut rng);
    let b = points(2, 4, &mut rng);
    let cache = GramCache::new();
    let first = cache.fidelity(&spec, &a, &b).unwrap();
    let again = cache.fidelity(&spec, &a, &b).unwrap();
    assert!(std::sync::Arc::ptr_eq(&first, &again));
    assert_eq!(*first, gram_matrix(&spec, &a, &b).unwrap());
    let sym = cache.fidelity(&spec, &a, &a.clone()).unwrap();
    assert_eq!(*sym, self_gram(&spec, &a).unwrap());
    assert_eq!(cache.len(), 2);
}

#[test]
fn gram_csv_has_header_and_exact_values() {
    let rows = vec![vec![1.0, 0.25], vec![0.25, 1.0]];
    let g = GramMatrix::from_rows(rows, "paulis=Z;reps=2;alpha=1.0;map=havlicek-default").unwrap();
    let mut buf = Vec::new();
    g.write_csv(&mut buf).unwrap();
    assert_eq!(
        String::from_utf8(buf).unwrap(),
        "# spec=paulis=Z;reps=2;alpha=1.0;map=havlicek-default\n1.0,0.25\n0.25,1.0\n"
    );
}

#[test]
fn classical_kernels() {
    let rbf = ClassicalKernel::Rbf { gamma: 0.5 };
    let v = rbf.eval(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
    assert!((v - (-1.0f64).exp()).abs() < 1e-15);
    assert_eq!(
        ClassicalKernel::Linear
            .eval(&[1.0, 2.0], &[3.0, -1.0])
            .unwrap(),
        1.0
    );
    assert!(rbf_kernel(&[0.0], &[1.0], 0.0).is_err());
    let g = rbf
        .gram(&[vec![0.0], vec![1.0]], &[vec![0.0], vec![1.0]])
        .unwrap();
    assert!(g.min_eigenvalue() > 0.0);
}
