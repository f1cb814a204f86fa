//! Dense statevector simulation of Pauli feature-map circuits.
//!
//! Qubit `q` is bit `q` of the amplitude index. A feature map of `reps`
//! repetitions applies, per repetition, a Hadamard on every qubit followed by
//! one rotation `exp(i * theta * P)` per expanded Pauli term, in listed order.
//! [`dense_unitary_oracle`] builds the same circuit as an explicit matrix
//! product and is kept independent of the statevector path for verification.

mod feature_map;
mod oracle;
mod pauli;

pub use feature_map::{
    feature_map_state, DataMap, FeatureMap, FeatureMapSpec, PauliTerm, Rotation,
};
pub use oracle::{
    dense_hadamard_layer, dense_pauli_matrix, dense_term_unitary, dense_unitary_oracle,
    ORACLE_MAX_QUBITS,
};
pub use pauli::{Pauli, PauliString};

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest qubit count accepted by the simulator.
pub const MAX_QUBITS: usize = 12;

/// Normalized vector of `2^n` complex amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl Statevector {
    /// Wraps raw amplitudes. The length must be a power of two with at least
    /// one qubit, and the vector must be normalized within 1e-10.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Size(format!(
                "statevector length {len} is not 2^n for n >= 1"
            )));
        }
        let n_qubits = len.trailing_zeros() as usize;
        check_qubits(n_qubits)?;
        let state = Self {
            n_qubits,
            amplitudes,
        };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Parameter(format!(
                "statevector is not normalized (squared norm {norm})"
            )));
        }
        Ok(state)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`, conjugating `self`.
    pub fn inner(&self, other: &Statevector) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::dim(
                self.n_qubits,
                other.n_qubits,
                "inner product qubits",
            ));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub(crate) fn hadamard_all_in_place(&mut self) {
        let h = FRAC_1_SQRT_2;
        let len = self.amplitudes.len();
        for q in 0..self.n_qubits {
            let bit = 1 << q;
            for k in 0..len {
                if k & bit == 0 {
                    let a = self.amplitudes[k];
                    let b = self.amplitudes[k | bit];
                    self.amplitudes[k] = (a + b) * h;
                    self.amplitudes[k | bit] = (a - b) * h;
                }
            }
        }
    }

    /// `exp(i theta P) = cos(theta) I + i sin(theta) P`, valid since `P^2 = I`.
    pub(crate) fn pauli_rotation_in_place(&mut self, p: &PauliString, theta: f64) -> Result<()> {
        if p.n_qubits() != self.n_qubits {
            return Err(Error::dim(
                self.n_qubits,
                p.n_qubits(),
                "Pauli string length",
            ));
        }
        let flip = p.flip_mask();
        let sign = p.sign_mask();
        // Y|b> = i (-1)^b |1-b>, so every Y contributes a factor i up front.
        let base_phase = Complex64::i().powu(p.y_count() as u32);
        let (c, s) = (theta.cos(), theta.sin());
        let is = Complex64::new(0.0, s);

        let old = &self.amplitudes;
        let mut out = vec![Complex64::new(0.0, 0.0); old.len()];
        for (k, &amp) in old.iter().enumerate() {
            let phase = if (k & sign).count_ones().is_multiple_of(2) {
                base_phase
            } else {
                -base_phase
            };
            out[k] += amp * c;
            out[k ^ flip] += is * phase * amp;
        }
        self.amplitudes = out;
        Ok(())
    }
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::Size(format!(
            "qubit count {n} outside supported range 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

/// `|0...0>` on `n` qubits.
pub fn zero_state(n: usize) -> Result<Statevector> {
    check_qubits(n)?;
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n];
    amplitudes[0] = Complex64::new(1.0, 0.0);
    Ok(Statevector {
        n_qubits: n,
        amplitudes,
    })
}

pub fn apply_hadamard_all(state: &Statevector) -> Statevector {
    let mut out = state.clone();
    out.hadamard_all_in_place();
    out
}

/// Returns `exp(i * theta * P) |state>`.
pub fn apply_pauli_rotation(
    state: &Statevector,
    p: &PauliString,
    theta: f64,
) -> Result<Statevector> {
    let mut out = state.clone();
    out.pauli_rotation_in_place(p, theta)?;
    Ok(out)
}
