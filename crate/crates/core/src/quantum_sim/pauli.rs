use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Single-qubit Pauli operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Result<Self> {
        match c {
            'I' => Ok(Pauli::I),
            'X' => Ok(Pauli::X),
            'Y' => Ok(Pauli::Y),
            'Z' => Ok(Pauli::Z),
            other => Err(Error::Parse(format!(
                "unknown Pauli letter {other:?} (expected one of I, X, Y, Z)"
            ))),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    /// The 2x2 matrix in row-major order.
    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Pauli::I => [[l, o], [o, l]],
            Pauli::X => [[o, l], [l, o]],
            Pauli::Y => [[o, -i], [i, o]],
            Pauli::Z => [[l, o], [o, -l]],
        }
    }
}

/// Tensor product of single-qubit Paulis, one letter per qubit.
///
/// Letter `k` acts on qubit `k`, and qubit `k` is bit `k` of the amplitude
/// index (qubit 0 is the least-significant bit). The text form is written in
/// the same order, so `"XZ"` puts `X` on qubit 0 and `Z` on qubit 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    letters: Vec<Pauli>,
}

impl PauliString {
    pub fn new(letters: Vec<Pauli>) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::Parameter("empty Pauli string".into()));
        }
        if letters.iter().all(|&p| p == Pauli::I) {
            return Err(Error::Parameter(
                "Pauli string must contain at least one non-identity letter".into(),
            ));
        }
        Ok(Self { letters })
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn n_qubits(&self) -> usize {
        self.letters.len()
    }

    /// Bits flipped by the operator (qubits carrying X or Y).
    pub(crate) fn flip_mask(&self) -> usize {
        self.mask_where(|p| matches!(p, Pauli::X | Pauli::Y))
    }

    /// Bits contributing a sign (qubits carrying Y or Z).
    pub(crate) fn sign_mask(&self) -> usize {
        self.mask_where(|p| matches!(p, Pauli::Y | Pauli::Z))
    }

    pub(crate) fn y_count(&self) -> usize {
        self.letters.iter().filter(|&&p| p == Pauli::Y).count()
    }

    fn mask_where(&self, pred: impl Fn(Pauli) -> bool) -> usize {
        self.letters
            .iter()
            .enumerate()
            .filter(|(_, &p)| pred(p))
            .fold(0, |m, (q, _)| m | (1 << q))
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .trim()
            .chars()
            .map(Pauli::from_char)
            .collect::<Result<Vec<_>>>()?;
        PauliString::new(letters)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.letters {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}
