//! Dense-matrix construction of feature-map circuits.
//!
//! Every operator is built as an explicit `2^n x 2^n` matrix through Kronecker
//! products and multiplied in circuit order. Nothing here touches the
//! statevector kernels, so the two paths can check each other.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{FeatureMapSpec, PauliString};
use crate::error::{Error, Result};

pub const ORACLE_MAX_QUBITS: usize = 6;

fn from_2x2(m: [[Complex64; 2]; 2]) -> DMatrix<Complex64> {
    DMatrix::from_fn(2, 2, |r, c| m[r][c])
}

/// Kronecker product over qubits with qubit 0 as the least-significant factor,
/// i.e. `ops[n-1] (x) ... (x) ops[0]`.
fn kron_qubits(ops: &[DMatrix<Complex64>]) -> DMatrix<Complex64> {
    let mut acc = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
    for op in ops.iter().rev() {
        acc = acc.kronecker(op);
    }
    acc
}

fn check_size(n: usize) -> Result<()> {
    if n == 0 || n > ORACLE_MAX_QUBITS {
        return Err(Error::Size(format!(
            "dense oracle supports 1..={ORACLE_MAX_QUBITS} qubits, got {n}"
        )));
    }
    Ok(())
}

pub fn dense_pauli_matrix(p: &PauliString) -> Result<DMatrix<Complex64>> {
    check_size(p.n_qubits())?;
    let ops: Vec<_> = p.letters().iter().map(|l| from_2x2(l.matrix())).collect();
    Ok(kron_qubits(&ops))
}

pub fn dense_hadamard_layer(n: usize) -> Result<DMatrix<Complex64>> {
    check_size(n)?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let single = DMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(h, 0.0),
            Complex64::new(h, 0.0),
            Complex64::new(h, 0.0),
            Complex64::new(-h, 0.0),
        ],
    );
    Ok(kron_qubits(&vec![single; n]))
}

/// `cos(theta) I + i sin(theta) P`.
pub fn dense_term_unitary(p: &PauliString, theta: f64) -> Result<DMatrix<Complex64>> {
    let pm = dense_pauli_matrix(p)?;
    let dim = pm.nrows();
    let id = DMatrix::<Complex64>::identity(dim, dim);
    Ok(id * Complex64::new(theta.cos(), 0.0) + pm * Complex64::new(0.0, theta.sin()))
}

/// The full circuit unitary `U_Phi(x)`, repetitions and rotations multiplied
/// in circuit order. Its first column is the feature-map state.
pub fn dense_unitary_oracle(spec: &FeatureMapSpec, x: &[f64]) -> Result<DMatrix<Complex64>> {
    let n = spec.n_qubits();
    check_size(n)?;
    if x.len() != n {
        return Err(Error::dim(n, x.len(), "feature vector length"));
    }
    let h = dense_hadamard_layer(n)?;
    let dim = 1 << n;
    let mut u = DMatrix::<Complex64>::identity(dim, dim);
    for _ in 0..spec.reps() {
        u = &h * u;
        for rot in spec.rotations() {
            let theta = spec.alpha() * spec.data_map().coefficient(&rot.subset, x);
            u = dense_term_unitary(&rot.pauli, theta)? * u;
        }
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum_sim::FeatureMap;

    #[test]
    fn pauli_ordering_puts_letter_zero_on_low_bit() {
        // "XI": X on qubit 0 maps |00> (index 0) to |01> (index 1).
        let m = dense_pauli_matrix(&"XI".parse().unwrap()).unwrap();
        assert_eq!(m[(1, 0)], Complex64::new(1.0, 0.0));
        assert_eq!(m[(2, 0)], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn alpha_zero_single_rep_is_hadamard() {
        let spec = FeatureMap::from_labels("Z").unwrap();
        let spec = FeatureMapSpec::new(FeatureMap { reps: 1, ..spec }, 1, 0.0).unwrap();
        let u = dense_unitary_oracle(&spec, &[0.7]).unwrap();
        let h = dense_hadamard_layer(1).unwrap();
        assert!((u - h).norm() < 1e-15);
    }

    #[test]
    fn size_guard() {
        let spec = FeatureMap::from_labels("Z")
            .unwrap()
            .with_alpha(7, 1.0)
            .unwrap();
        assert!(matches!(
            dense_unitary_oracle(&spec, &[0.0; 7]),
            Err(Error::Size(_))
        ));
    }
}
