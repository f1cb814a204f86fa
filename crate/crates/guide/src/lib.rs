//! The book's code listings, compiled and run as doctests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/feature_maps.md")]
pub mod feature_maps {}
#[doc = include_str!("../../../book/src/kernels.md")]
pub mod kernels {}
#[doc = include_str!("../../../book/src/svm.md")]
pub mod svm {}
#[doc = include_str!("../../../book/src/boosting.md")]
pub mod boosting {}
#[doc = include_str!("../../../book/src/datasets.md")]
pub mod datasets {}
#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
