//! Recovery of low-rank symmetric tensors from polynomial measurements.
//!
//! The crate works with order-`ℓ` symmetric tensors on `ℝ^d` stored by their
//! `(d+ℓ−1 choose ℓ)` free entries, measurements `Y_i = ⟨T*, X_i^{⊗ℓ}⟩` with
//! i.i.d. log-concave coordinates, and the quantities that govern how many of
//! them pin down `T*`: moment Hankel determinants, packings of rank-`r`
//! tensors, and Fano / anti-concentration bounds.

pub mod bounds;
pub mod error;
pub mod experiments;
pub mod measurements;
pub mod orthopoly;
pub mod packing;
pub mod recovery;
pub mod report;
pub mod rng;
pub mod symtensor;

pub use error::{Error, Result};
pub use measurements::{DistributionSpec, MeasurementSet, TeacherNetwork};
pub use symtensor::{MultiIndex, RankOneSum, SymmetricTensor};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/symmetric-tensors.md")]
    mod symmetric_tensors {}
    #[doc = include_str!("../../../book/src/measurements.md")]
    mod measurements {}
    #[doc = include_str!("../../../book/src/orthogonal-polynomials.md")]
    mod orthogonal_polynomials {}
    #[doc = include_str!("../../../book/src/recovery.md")]
    mod recovery {}
    #[doc = include_str!("../../../book/src/packing-and-fano.md")]
    mod packing_and_fano {}
    #[doc = include_str!("../../../book/src/bounds.md")]
    mod bounds {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
