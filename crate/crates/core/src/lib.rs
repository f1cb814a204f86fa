//! Boosted ensembles of quantum-kernel support vector machines.
//!
//! The crate is organized bottom-up:
//!
//! * [`quantum_sim`]: dense statevector simulation of Pauli feature maps,
//!   with a dense-matrix oracle for cross-checking.
//! * [`kernels`]: the fidelity kernel `|<Phi(x)|Phi(y)>|^2`, classical RBF and
//!   linear kernels, Gram assembly and caching.
//! * [`svm`]: a weighted soft-margin SVM on precomputed kernels, trained by SMO.
//! * [`boosting`]: the boosting loop with per-round grid search, feature-map
//!   exclusion, early stopping and validation pruning.
//! * [`datasets`]: seeded XOR, moons and circles generators with splitting and
//!   scaling.
//! * [`experiment`]: the multi-dataset harness, aggregation and reports.
//!
//! The `book/` directory at the repository root walks through each layer.

pub mod boosting;
pub mod datasets;
pub mod error;
pub mod experiment;
pub mod kernels;
pub mod quantum_sim;
pub mod rng;
pub mod svm;

pub use error::{Error, Result};
