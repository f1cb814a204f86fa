use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{check_qubits, zero_state, Pauli, PauliString, Statevector};
use crate::error::{Error, Result};

/// A Pauli label such as `Z` or `ZZ`, applied to every qubit subset of its
/// length. On two qubits `Z` expands to `Z` on qubit 0 and `Z` on qubit 1,
/// while `ZZ` expands to the single pair `(0, 1)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliTerm {
    letters: Vec<Pauli>,
}

impl PauliTerm {
    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn order(&self) -> usize {
        self.letters.len()
    }
}

impl FromStr for PauliTerm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .trim()
            .chars()
            .map(Pauli::from_char)
            .collect::<Result<Vec<_>>>()?;
        if letters.is_empty() {
            return Err(Error::Parse("empty Pauli term".into()));
        }
        if letters.contains(&Pauli::I) {
            return Err(Error::Parse(format!(
                "Pauli term {s:?} may only use X, Y and Z"
            )));
        }
        Ok(Self { letters })
    }
}

impl fmt::Display for PauliTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.letters {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

/// Coefficient function `phi_S(x)` for a qubit subset `S`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum DataMap {
    /// `phi_{i}(x) = x_i`, `phi_{i,j}(x) = (pi - x_i)(pi - x_j)`.
    #[default]
    HavlicekDefault,
}

impl DataMap {
    pub fn id(self) -> &'static str {
        match self {
            DataMap::HavlicekDefault => "havlicek-default",
        }
    }

    pub fn max_order(self) -> usize {
        match self {
            DataMap::HavlicekDefault => 2,
        }
    }

    pub fn coefficient(self, subset: &[usize], x: &[f64]) -> f64 {
        match self {
            DataMap::HavlicekDefault => match *subset {
                [i] => x[i],
                [i, j] => (PI - x[i]) * (PI - x[j]),
                _ => unreachable!("subset order checked at construction"),
            },
        }
    }
}

impl FromStr for DataMap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "havlicek-default" => Ok(DataMap::HavlicekDefault),
            other => Err(Error::Parse(format!("unknown data map {other:?}"))),
        }
    }
}

/// A feature-map family without its rotation factor: the Pauli menu, the
/// repetition count and the data map. This is the identity excluded from later
/// grids once a boosting round selects it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct FeatureMap {
    pub paulis: Vec<PauliTerm>,
    pub reps: usize,
    pub data_map: DataMap,
}

impl FeatureMap {
    pub const DEFAULT_REPS: usize = 2;

    pub fn new(paulis: Vec<PauliTerm>, reps: usize, data_map: DataMap) -> Result<Self> {
        if paulis.is_empty() {
            return Err(Error::Parameter(
                "feature map needs at least one Pauli term".into(),
            ));
        }
        if reps == 0 {
            return Err(Error::Parameter("reps must be positive".into()));
        }
        if let Some(t) = paulis.iter().find(|t| t.order() > data_map.max_order()) {
            return Err(Error::Parameter(format!(
                "Pauli term {t} has order {} but data map {} supports at most {}",
                t.order(),
                data_map.id(),
                data_map.max_order()
            )));
        }
        Ok(Self {
            paulis,
            reps,
            data_map,
        })
    }

    /// Menu built from comma-separated labels with default reps and data map.
    pub fn from_labels(labels: &str) -> Result<Self> {
        let paulis = parse_terms(labels)?;
        Self::new(paulis, Self::DEFAULT_REPS, DataMap::default())
    }

    /// Canonical identity text, e.g. `paulis=Z,ZZ;reps=2;map=havlicek-default`.
    pub fn id(&self) -> String {
        self.to_string()
    }

    pub fn with_alpha(&self, n_qubits: usize, alpha: f64) -> Result<FeatureMapSpec> {
        FeatureMapSpec::new(self.clone(), n_qubits, alpha)
    }

    fn paulis_text(&self) -> String {
        self.paulis
            .iter()
            .map(|t| t.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl fmt::Display for FeatureMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "paulis={};reps={};map={}",
            self.paulis_text(),
            self.reps,
            self.data_map.id()
        )
    }
}

impl FromStr for FeatureMap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let kv = parse_pairs(s)?;
        if kv.alpha.is_some() {
            return Err(Error::Parse(format!(
                "feature map identity {s:?} must not carry alpha"
            )));
        }
        kv.into_map()
    }
}

impl TryFrom<String> for FeatureMap {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<FeatureMap> for String {
    fn from(m: FeatureMap) -> String {
        m.to_string()
    }
}

/// One rotation of the expanded circuit: the full-width Pauli string and the
/// qubit subset it acts on.
#[derive(Clone, Debug, PartialEq)]
pub struct Rotation {
    pub pauli: PauliString,
    pub subset: Vec<usize>,
}

/// A fully specified feature map: family, qubit count and rotation factor.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMapSpec {
    map: FeatureMap,
    n_qubits: usize,
    alpha: f64,
    rotations: Vec<Rotation>,
}

impl FeatureMapSpec {
    /// The simulator accepts any finite alpha; grids restrict it to (0, 2].
    pub fn new(map: FeatureMap, n_qubits: usize, alpha: f64) -> Result<Self> {
        check_qubits(n_qubits)?;
        if !alpha.is_finite() {
            return Err(Error::Parameter(format!(
                "alpha must be finite, got {alpha}"
            )));
        }
        let rotations = expand_rotations(&map.paulis, n_qubits)?;
        Ok(Self {
            map,
            n_qubits,
            alpha,
            rotations,
        })
    }

    /// Parses the canonical text `paulis=..;reps=..;alpha=..;map=..`.
    pub fn parse(text: &str, n_qubits: usize) -> Result<Self> {
        let kv = parse_pairs(text)?;
        let alpha = kv
            .alpha
            .ok_or_else(|| Error::Parse(format!("feature map spec {text:?} is missing alpha")))?;
        Self::new(kv.into_map()?, n_qubits, alpha)
    }

    pub fn map(&self) -> &FeatureMap {
        &self.map
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn reps(&self) -> usize {
        self.map.reps
    }

    pub fn data_map(&self) -> DataMap {
        self.map.data_map
    }

    /// Per-repetition rotations in circuit order.
    pub fn rotations(&self) -> &[Rotation] {
        &self.rotations
    }

    /// Rotation angles `alpha * phi_S(x)` in the same order as [`Self::rotations`].
    pub fn angles(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_qubits {
            return Err(Error::dim(self.n_qubits, x.len(), "feature vector length"));
        }
        Ok(self
            .rotations
            .iter()
            .map(|r| self.alpha * self.map.data_map.coefficient(&r.subset, x))
            .collect())
    }

    pub fn canonical(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for FeatureMapSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "paulis={};reps={};alpha={:?};map={}",
            self.map.paulis_text(),
            self.map.reps,
            self.alpha,
            self.map.data_map.id()
        )
    }
}

/// The state `U_Phi(x)|0...0>`.
pub fn feature_map_state(spec: &FeatureMapSpec, x: &[f64]) -> Result<Statevector> {
    let angles = spec.angles(x)?;
    let mut state = zero_state(spec.n_qubits)?;
    for _ in 0..spec.reps() {
        state.hadamard_all_in_place();
        for (rot, &theta) in spec.rotations.iter().zip(&angles) {
            state.pauli_rotation_in_place(&rot.pauli, theta)?;
        }
    }
    Ok(state)
}

fn expand_rotations(terms: &[PauliTerm], n_qubits: usize) -> Result<Vec<Rotation>> {
    let mut out = Vec::new();
    for term in terms {
        if term.order() > n_qubits {
            return Err(Error::Parameter(format!(
                "Pauli term {term} needs {} qubits but the map has {n_qubits}",
                term.order()
            )));
        }
        for subset in combinations(n_qubits, term.order()) {
            let mut letters = vec![Pauli::I; n_qubits];
            for (&q, &p) in subset.iter().zip(term.letters()) {
                letters[q] = p;
            }
            out.push(Rotation {
                pauli: PauliString::new(letters)?,
                subset,
            });
        }
    }
    Ok(out)
}

/// k-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

fn parse_terms(s: &str) -> Result<Vec<PauliTerm>> {
    s.split(',').map(str::parse).collect()
}

struct Pairs {
    paulis: Option<Vec<PauliTerm>>,
    reps: Option<usize>,
    alpha: Option<f64>,
    map: Option<DataMap>,
}

impl Pairs {
    fn into_map(self) -> Result<FeatureMap> {
        let paulis = self
            .paulis
            .ok_or_else(|| Error::Parse("feature map is missing paulis".into()))?;
        FeatureMap::new(
            paulis,
            self.reps.unwrap_or(FeatureMap::DEFAULT_REPS),
            self.map.unwrap_or_default(),
        )
    }
}

fn parse_pairs(s: &str) -> Result<Pairs> {
    let mut kv = Pairs {
        paulis: None,
        reps: None,
        alpha: None,
        map: None,
    };
    for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected key=value, got {part:?}")))?;
        let value = value.trim();
        let dup = match key.trim() {
            "paulis" => kv.paulis.replace(parse_terms(value)?).is_some(),
            "reps" => kv
                .reps
                .replace(
                    value
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad reps {value:?}")))?,
                )
                .is_some(),
            "alpha" => kv
                .alpha
                .replace(
                    value
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad alpha {value:?}")))?,
                )
                .is_some(),
            "map" => kv.map.replace(value.parse()?).is_some(),
            other => return Err(Error::Parse(format!("unknown key {other:?}"))),
        };
        if dup {
            return Err(Error::Parse(format!("duplicate key in {s:?}")));
        }
    }
    Ok(kv)
}
