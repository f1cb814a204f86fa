//! Independent reference implementations used by the integration tests.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use qboost::quantum_sim::{FeatureMap, FeatureMapSpec};
use qboost::rng::SeededRng;

/// Largest elementwise difference after rotating `b` onto the global phase
/// of `a` (aligned on the largest-magnitude entry of `a`).
pub fn phase_aligned_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let k = (0..a.len())
        .max_by(|&i, &j| a[i].norm().total_cmp(&a[j].norm()))
        .unwrap();
    let phase = if b[k].norm() > 0.0 {
        (a[k] / b[k]) / (a[k] / b[k]).norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y * phase).norm())
        .fold(0.0, f64::max)
}

/// `exp(i * theta * g)` by scaling and squaring of a Taylor series.
pub fn expm_i(g: &DMatrix<Complex64>, theta: f64) -> DMatrix<Complex64> {
    let n = g.nrows();
    let a = g * Complex64::new(0.0, theta);
    let norm = a.iter().map(|z| z.norm()).sum::<f64>().max(1e-300);
    let squarings = norm.log2().ceil().max(0.0) as u32 + 1;
    let scaled = &a / Complex64::new(2f64.powi(squarings as i32), 0.0);
    let mut sum = DMatrix::<Complex64>::identity(n, n);
    let mut term = DMatrix::<Complex64>::identity(n, n);
    for k in 1..40 {
        term = &term * &scaled / Complex64::new(k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

pub fn sign(y: u8) -> f64 {
    if y == 1 {
        1.0
    } else {
        -1.0
    }
}

/// `sum a - 1/2 sum_ij a_i a_j t_i t_j K_ij`, computed directly.
pub fn dual_value(k: &[Vec<f64>], y: &[u8], a: &[f64]) -> f64 {
    let n = a.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += a[i] * a[j] * sign(y[i]) * sign(y[j]) * k[i][j];
        }
    }
    a.iter().sum::<f64>() - 0.5 * quad
}

/// Exact maximum of the box- and equality-constrained SVM dual by exhaustive
/// active-set enumeration: every variable is pinned at 0, pinned at its upper
/// bound, or free, and each free set is solved as a linear KKT system.
pub fn qp_oracle(k: &[Vec<f64>], y: &[u8], upper: &[f64]) -> (f64, Vec<f64>) {
    let n = y.len();
    assert!(n <= 8, "oracle is exponential in n");
    let t: Vec<f64> = y.iter().map(|&v| sign(v)).collect();
    let q = |i: usize, j: usize| t[i] * t[j] * k[i][j];
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut state = vec![0u8; n];
    for code in 0..3usize.pow(n as u32) {
        let mut c = code;
        for s in state.iter_mut() {
            *s = (c % 3) as u8;
            c /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut a: Vec<f64> = (0..n)
            .map(|i| if state[i] == 1 { upper[i] } else { 0.0 })
            .collect();
        if !free.is_empty() {
            let m = free.len();
            let mut lhs = DMatrix::<f64>::zeros(m + 1, m + 1);
            let mut rhs = DVector::<f64>::zeros(m + 1);
            for (r, &i) in free.iter().enumerate() {
                for (c, &j) in free.iter().enumerate() {
                    lhs[(r, c)] = q(i, j);
                }
                lhs[(r, m)] = t[i];
                lhs[(m, r)] = t[i];
                let fixed: f64 = (0..n)
                    .filter(|&j| state[j] == 1)
                    .map(|j| q(i, j) * a[j])
                    .sum();
                rhs[r] = 1.0 - fixed;
            }
            rhs[m] = -(0..n)
                .filter(|&j| state[j] == 1)
                .map(|j| t[j] * a[j])
                .sum::<f64>();
            // A singular face never holds the only optimum: moving along its
            // null space reaches a smaller face with the same value.
            let Some(sol) = lhs.clone().full_piv_lu().solve(&rhs) else {
                continue;
            };
            if (&lhs * &sol - &rhs).amax() > 1e-9 {
                continue;
            }
            for (r, &i) in free.iter().enumerate() {
                a[i] = sol[r];
            }
        }
        let feasible = a
            .iter()
            .zip(upper)
            .all(|(&v, &u)| v >= -1e-12 && v <= u + 1e-12)
            && a.iter().zip(&t).map(|(v, s)| v * s).sum::<f64>().abs() < 1e-9;
        if !feasible {
            continue;
        }
        let value = dual_value(k, y, &a);
        if best.as_ref().is_none_or(|b| value > b.0) {
            best = Some((value, a));
        }
    }
    best.expect("a = 0 is always feasible")
}

/// Random PSD kernel `A A^T / r` with entries of `A` uniform in [-1, 1].
pub fn random_psd(n: usize, rng: &mut SeededRng) -> Vec<Vec<f64>> {
    let r = 1 + rng.below(n + 1);
    let a: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..r).map(|_| rng.uniform_in(-1.0, 1.0)).collect())
        .collect();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..r).map(|l| a[i][l] * a[j][l]).sum::<f64>() / r as f64)
                .collect()
        })
        .collect()
}

/// Labels with at least one sample of each class.
pub fn random_labels(n: usize, rng: &mut SeededRng) -> Vec<u8> {
    loop {
        let y: Vec<u8> = (0..n).map(|_| rng.below(2) as u8).collect();
        if y.contains(&0) && y.contains(&1) {
            return y;
        }
    }
}

const TERMS_1: [&str; 3] = ["X", "Y", "Z"];
const TERMS_2: [&str; 9] = ["XX", "XY", "XZ", "YX", "YY", "YZ", "ZX", "ZY", "ZZ"];

/// A random feature map on `n` qubits with one to three distinct terms of
/// order at most two, one to three repetitions and alpha in (0, 2].
pub fn random_spec(n: usize, rng: &mut SeededRng) -> FeatureMapSpec {
    let mut labels: Vec<&str> = Vec::new();
    let count = 1 + rng.below(3);
    while labels.len() < count {
        let pick = if n >= 2 && rng.below(2) == 1 {
            TERMS_2[rng.below(TERMS_2.len())]
        } else {
            TERMS_1[rng.below(TERMS_1.len())]
        };
        if !labels.contains(&pick) {
            labels.push(pick);
        }
    }
    let mut map = FeatureMap::from_labels(&labels.join(",")).unwrap();
    map.reps = 1 + rng.below(3);
    let alpha = 2.0 * (1.0 - rng.uniform());
    FeatureMapSpec::new(map, n, alpha).unwrap()
}

pub fn random_point(n: usize, rng: &mut SeededRng) -> Vec<f64> {
    (0..n)
        .map(|_| rng.uniform_in(0.0, std::f64::consts::PI))
        .collect()
}

/// Records CSV text with the wall-time column removed.
pub fn without_wall_time(csv_text: &str) -> String {
    let mut lines = csv_text.lines();
    let header: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
    let col = header
        .iter()
        .position(|h| *h == "wall_time_s")
        .expect("wall_time_s column");
    assert_eq!(col, header.len() - 1, "wall time is the last column");
    std::iter::once(header[..col].join(","))
        .chain(lines.map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head).to_string()))
        .collect::<Vec<_>>()
        .join("\n")
}
