//! Fidelity quantum kernel, classical baseline kernels and Gram assembly.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::io::Write;
use std::sync::{Arc, RwLock};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum_sim::{feature_map_state, FeatureMapSpec, Statevector};

/// Dense kernel matrix between two sample sets, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    spec_id: String,
}

impl GramMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>, spec_id: impl Into<String>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::dim(cols, r.len(), "Gram row length"));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            values: rows.into_iter().flatten().collect(),
            spec_id: spec_id.into(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn spec_id(&self) -> &str {
        &self.spec_id
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_asymmetry(&self) -> f64 {
        assert!(self.is_square(), "asymmetry of a non-square Gram");
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in i + 1..self.cols {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Smallest eigenvalue of the symmetric part.
    pub fn min_eigenvalue(&self) -> f64 {
        assert!(self.is_square(), "eigenvalues of a non-square Gram");
        let m = DMatrix::from_fn(self.rows, self.cols, |i, j| {
            0.5 * (self.get(i, j) + self.get(j, i))
        });
        m.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Row-major CSV with a `# spec=<id>` header line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# spec={}", self.spec_id)?;
        for i in 0..self.rows {
            let line: Vec<String> = self.row(i).iter().map(|v| format!("{v:?}")).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }
}

/// `|<Phi(x)|Phi(y)>|^2`.
pub fn fidelity_kernel(spec: &FeatureMapSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    let a = feature_map_state(spec, x)?;
    let b = feature_map_state(spec, y)?;
    Ok(a.inner(&b)?.norm_sqr())
}

fn states(spec: &FeatureMapSpec, samples: &[Vec<f64>]) -> Result<Vec<Statevector>> {
    samples
        .par_iter()
        .map(|x| feature_map_state(spec, x))
        .collect()
}

fn overlap(a: &Statevector, b: &Statevector) -> f64 {
    a.amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(u, v)| u.conj() * v)
        .sum::<num_complex::Complex64>()
        .norm_sqr()
}

/// Fidelity Gram between two sample sets. Passing the same slice twice takes
/// the symmetric path.
pub fn gram_matrix(spec: &FeatureMapSpec, xa: &[Vec<f64>], xb: &[Vec<f64>]) -> Result<GramMatrix> {
    if std::ptr::eq(xa, xb) {
        return self_gram(spec, xa);
    }
    let sa = states(spec, xa)?;
    let sb = states(spec, xb)?;
    let rows: Vec<Vec<f64>> = sa
        .par_iter()
        .map(|a| sb.iter().map(|b| overlap(a, b)).collect())
        .collect();
    Ok(GramMatrix {
        rows: xa.len(),
        cols: xb.len(),
        values: rows.into_iter().flatten().collect(),
        spec_id: spec.canonical(),
    })
}

/// Fidelity Gram of a set against itself: upper triangle computed, then mirrored.
pub fn self_gram(spec: &FeatureMapSpec, x: &[Vec<f64>]) -> Result<GramMatrix> {
    let s = states(spec, x)?;
    let m = x.len();
    let upper: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| (i..m).map(|j| overlap(&s[i], &s[j])).collect())
        .collect();
    let mut values = vec![0.0; m * m];
    for (i, row) in upper.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let j = i + off;
            values[i * m + j] = v;
            values[j * m + i] = v;
        }
    }
    Ok(GramMatrix {
        rows: m,
        cols: m,
        values,
        spec_id: spec.canonical(),
    })
}

/// `exp(-gamma * |x - y|^2)`.
pub fn rbf_kernel(x: &[f64], y: &[f64], gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::Parameter(format!(
            "rbf gamma must be positive, got {gamma}"
        )));
    }
    if x.len() != y.len() {
        return Err(Error::dim(x.len(), y.len(), "rbf kernel arguments"));
    }
    let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((-gamma * d2).exp())
}

pub fn linear_kernel(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::dim(x.len(), y.len(), "linear kernel arguments"));
    }
    Ok(x.iter().zip(y).map(|(a, b)| a * b).sum())
}

/// Classical kernels used by the SVM baseline.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClassicalKernel {
    Rbf { gamma: f64 },
    Linear,
}

impl ClassicalKernel {
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        match *self {
            ClassicalKernel::Rbf { gamma } => rbf_kernel(x, y, gamma),
            ClassicalKernel::Linear => linear_kernel(x, y),
        }
    }

    pub fn id(&self) -> String {
        match self {
            ClassicalKernel::Rbf { gamma } => format!("rbf;gamma={gamma:?}"),
            ClassicalKernel::Linear => "linear".to_string(),
        }
    }

    pub fn gram(&self, xa: &[Vec<f64>], xb: &[Vec<f64>]) -> Result<GramMatrix> {
        let mut values = Vec::with_capacity(xa.len() * xb.len());
        for a in xa {
            for b in xb {
                values.push(self.eval(a, b)?);
            }
        }
        Ok(GramMatrix {
            rows: xa.len(),
            cols: xb.len(),
            values,
            spec_id: self.id(),
        })
    }
}

fn content_hash(samples: &[Vec<f64>]) -> u64 {
    let mut h = DefaultHasher::new();
    samples.len().hash(&mut h);
    for row in samples {
        row.len().hash(&mut h);
        for v in row {
            v.to_bits().hash(&mut h);
        }
    }
    h.finish()
}

type CacheKey = (String, u64, usize, u64, usize);

/// Fidelity Gram matrices keyed on the canonical spec text and the content of
/// both sample sets. Safe to share across threads.
#[derive(Debug, Default)]
pub struct GramCache {
    entries: RwLock<HashMap<CacheKey, Arc<GramMatrix>>>,
}

impl GramCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("gram cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cached equivalent of [`gram_matrix`]; the symmetric path is used when
    /// both sets have identical content.
    pub fn fidelity(
        &self,
        spec: &FeatureMapSpec,
        xa: &[Vec<f64>],
        xb: &[Vec<f64>],
    ) -> Result<Arc<GramMatrix>> {
        let (ha, hb) = (content_hash(xa), content_hash(xb));
        let key = (spec.canonical(), ha, xa.len(), hb, xb.len());
        if let Some(g) = self.entries.read().expect("gram cache poisoned").get(&key) {
            return Ok(Arc::clone(g));
        }
        let g = if ha == hb && xa == xb {
            self_gram(spec, xa)?
        } else {
            gram_matrix(spec, xa, xb)?
        };
        let g = Arc::new(g);
        self.entries
            .write()
            .expect("gram cache poisoned")
            .entry(key)
            .or_insert_with(|| Arc::clone(&g));
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum_sim::FeatureMap;

    fn spec(labels: &str, alpha: f64) -> FeatureMapSpec {
        FeatureMap::from_labels(labels)
            .unwrap()
            .with_alpha(2, alpha)
            .unwrap()
    }

    #[test]
    fn self_kernel_is_one() {
        let s = spec("Z,ZZ", 1.3);
        let k = fidelity_kernel(&s, &[0.4, 2.2], &[0.4, 2.2]).unwrap();
        assert!((k - 1.0).abs() < 1e-12);
    }

    #[test]
    fn alpha_zero_is_data_independent() {
        let s = spec("X,YY", 0.0);
        let k = fidelity_kernel(&s, &[0.1, 3.0], &[2.5, 0.2]).unwrap();
        assert!((k - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_sample_gram() {
        let s = spec("Z,ZZ", 1.0);
        let x = vec![vec![0.3, 0.9]];
        let g = gram_matrix(&s, &x, &x).unwrap();
        assert_eq!((g.rows(), g.cols()), (1, 1));
        assert!((g.get(0, 0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn three_sample_gram_symmetric() {
        let s = spec("Z,ZZ", 1.0);
        let x = vec![vec![0.3, 0.9], vec![1.7, 2.9], vec![3.1, 0.0]];
        let g = gram_matrix(&s, &x, &x).unwrap();
        assert_eq!(g.max_asymmetry(), 0.0);
        for i in 0..3 {
            assert!((g.get(i, i) - 1.0).abs() < 1e-12);
        }
        // the non-symmetric path agrees
        let y = x.clone();
        let g2 = gram_matrix(&s, &x, &y).unwrap();
        for (a, b) in g.values().iter().zip(g2.values()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn rectangular_gram_matches_pointwise_kernel() {
        let s = spec("Y,XX", 0.7);
        let a = vec![vec![0.3, 0.9], vec![1.7, 2.9]];
        let b = vec![vec![3.1, 0.0], vec![0.5, 0.5], vec![2.0, 1.0]];
        let g = gram_matrix(&s, &a, &b).unwrap();
        assert_eq!((g.rows(), g.cols()), (2, 3));
        for i in 0..2 {
            for j in 0..3 {
                let k = fidelity_kernel(&s, &a[i], &b[j]).unwrap();
                assert!((g.get(i, j) - k).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn dimension_errors() {
        let s = spec("Z", 1.0);
        assert!(matches!(
            fidelity_kernel(&s, &[1.0], &[1.0, 2.0]),
            Err(Error::Dimension { .. })
        ));
        assert!(gram_matrix(&s, &[vec![1.0, 2.0, 3.0]], &[vec![1.0, 2.0]]).is_err());
        assert!(linear_kernel(&[1.0], &[1.0, 2.0]).is_err());
        assert!(rbf_kernel(&[1.0], &[1.0, 2.0], 1.0).is_err());
    }

    #[test]
    fn rbf_values() {
        assert_eq!(rbf_kernel(&[0.4, 0.1], &[0.4, 0.1], 3.0).unwrap(), 1.0);
        let v = rbf_kernel(&[0.0, 0.0], &[1.0, 0.0], 1.0).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-15);
        assert!((v - 0.36788).abs() < 1e-5);
        let mut prev = 1.0;
        for gamma in [0.01, 0.1, 1.0, 10.0, 100.0, 1000.0] {
            let k = rbf_kernel(&[0.0, 0.0], &[1.0, 0.5], gamma).unwrap();
            assert!(k < prev);
            prev = k;
        }
        assert!(prev < 1e-300);
        assert!(matches!(
            rbf_kernel(&[0.0], &[1.0], 0.0),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            rbf_kernel(&[0.0], &[1.0], -1.0),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn linear_values() {
        assert_eq!(linear_kernel(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(linear_kernel(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 5.0);
    }

    #[test]
    fn cache_is_transparent() {
        let s = spec("Z,ZZ", 1.0);
        let a = vec![vec![0.3, 0.9], vec![1.7, 2.9], vec![3.1, 0.0]];
        let b = vec![vec![0.5, 0.5]];
        let cache = GramCache::new();
        let direct_aa = gram_matrix(&s, &a, &a).unwrap();
        let direct_ab = gram_matrix(&s, &a, &b).unwrap();
        let cached_aa = cache.fidelity(&s, &a, &a.clone()).unwrap();
        let cached_ab = cache.fidelity(&s, &a, &b).unwrap();
        assert_eq!(*cached_aa, direct_aa);
        assert_eq!(*cached_ab, direct_ab);
        assert_eq!(cache.len(), 2);
        let again = cache.fidelity(&s, &a, &a).unwrap();
        assert!(Arc::ptr_eq(&again, &cached_aa));
        // a different alpha is a different key
        cache.fidelity(&spec("Z,ZZ", 0.5), &a, &a).unwrap();
        assert_eq!(cache.len(), 3);
    }

    #[test]
    fn csv_export() {
        let s = spec("Z", 1.0);
        let x = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        let g = gram_matrix(&s, &x, &x).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "# spec=paulis=Z;reps=2;alpha=1.0;map=havlicek-default"
        );
        assert_eq!(lines.count(), 2);
    }

    #[test]
    fn classical_gram_shape() {
        let a = vec![vec![0.0, 1.0], vec![1.0, 1.0]];
        let b = vec![vec![2.0, 0.0]];
        let g = ClassicalKernel::Linear.gram(&a, &b).unwrap();
        assert_eq!((g.rows(), g.cols()), (2, 1));
        assert_eq!(g.row(1), &[2.0]);
        assert_eq!(ClassicalKernel::Rbf { gamma: 0.5 }.id(), "rbf;gamma=0.5");
    }
}
