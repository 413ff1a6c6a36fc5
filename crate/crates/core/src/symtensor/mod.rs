//! Compressed symmetric tensors.
//!
//! An order-`ℓ` symmetric tensor on `ℝ^d` has one free value per multi-index
//! `α` with `|α| = ℓ`: every index tuple `I` with occurrence vector `β_I = α`
//! carries the same entry `T_α`. [`SymmetricTensor`] stores exactly those
//! `(d+ℓ−1 choose ℓ)` entries in the canonical graded-lexicographic order and
//! applies the multinomial weight `N_α` wherever a formula sums over tuples:
//!
//! ```text
//! ⟨T, x^{⊗ℓ}⟩ = Σ_α N_α T_α Π_j x(j)^{α_j}        ‖T‖²_F = Σ_α N_α T_α²
//! ```

mod dense;
mod multi_index;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{check_dim, Error, Result};

pub use dense::{permutations, DenseTensor, MAX_DENSE_ENTRIES};
pub use multi_index::{
    beta_of_index, binomial, enumerate_multi_indices, multinomial, sym_dim, Basis, MultiIndex,
    MAX_BASIS_LEN,
};

/// One symmetric rank-one term `λ v^{⊗ℓ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankOneTerm {
    pub lambda: f64,
    pub v: Vec<f64>,
}

/// A factored tensor `Σ_i λ_i v_i^{⊗ℓ}`. The order is supplied when the sum
/// is materialized or evaluated.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RankOneSum {
    pub terms: Vec<RankOneTerm>,
}

impl RankOneSum {
    pub fn new(terms: Vec<RankOneTerm>) -> Self {
        RankOneSum { terms }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (f64, Vec<f64>)>) -> Self {
        RankOneSum {
            terms: pairs
                .into_iter()
                .map(|(lambda, v)| RankOneTerm { lambda, v })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Common vector dimension; errors if the terms disagree.
    pub fn dim(&self) -> Result<Option<usize>> {
        let mut d = None;
        for t in &self.terms {
            match d {
                None => d = Some(t.v.len()),
                Some(d0) => check_dim(d0, t.v.len())?,
            }
        }
        Ok(d)
    }

    /// Entry at a (0-based) index tuple, `Σ_i λ_i Π_k v_i(i_k)`.
    pub fn entry(&self, index: &[usize]) -> f64 {
        self.terms
            .iter()
            .map(|t| t.lambda * index.iter().map(|&i| t.v[i]).product::<f64>())
            .sum()
    }

    /// `Σ_i λ_i ⟨v_i, x⟩^ℓ` without materializing.
    pub fn apply(&self, x: &[f64], ell: u32) -> f64 {
        self.terms
            .iter()
            .map(|t| t.lambda * dot(&t.v, x).powi(ell as i32))
            .sum()
    }

    pub fn as_pairs(&self) -> Vec<(f64, Vec<f64>)> {
        self.terms.iter().map(|t| (t.lambda, t.v.clone())).collect()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Order-`ℓ` symmetric tensor on `ℝ^d`, stored as the common entry value
/// `T_α` per multi-index (not the weighted `N_α T_α`).
#[derive(Clone)]
pub struct SymmetricTensor {
    basis: Arc<Basis>,
    values: Vec<f64>,
}

impl fmt::Debug for SymmetricTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymmetricTensor")
            .field("d", &self.d())
            .field("ell", &self.ell())
            .field("values", &self.values)
            .finish()
    }
}

impl PartialEq for SymmetricTensor {
    fn eq(&self, other: &Self) -> bool {
        self.d() == other.d() && self.ell() == other.ell() && self.values == other.values
    }
}

impl SymmetricTensor {
    pub fn zeros(d: usize, ell: u32) -> Result<Self> {
        let basis = Basis::get(d, ell)?;
        let values = vec![0.0; basis.len()];
        Ok(SymmetricTensor { basis, values })
    }

    /// Coefficients in canonical order.
    pub fn from_values(d: usize, ell: u32, values: Vec<f64>) -> Result<Self> {
        let basis = Basis::get(d, ell)?;
        check_dim(basis.len(), values.len())?;
        Ok(SymmetricTensor { basis, values })
    }

    /// `e_j^{⊗ℓ}` (0-based `j`).
    pub fn unit_power(d: usize, ell: u32, j: usize) -> Result<Self> {
        if j >= d {
            return Err(Error::invalid(format!("coordinate {j} out of range for d={d}")));
        }
        let mut alpha = vec![0u32; d];
        alpha[j] = ell;
        let mut t = Self::zeros(d, ell)?;
        t.set(&MultiIndex::new(alpha), 1.0)?;
        Ok(t)
    }

    /// Materialize `Σ_i λ_i v_i^{⊗ℓ}`: `T_α = Σ_i λ_i Π_j v_i(j)^{α_j}`.
    pub fn from_rank_one_sum(s: &RankOneSum, ell: u32) -> Result<Self> {
        let d = s
            .dim()?
            .ok_or_else(|| Error::invalid("empty rank-one sum has no dimension; use zeros"))?;
        Self::from_rank_one_sum_in(s, d, ell)
    }

    /// As [`Self::from_rank_one_sum`] with an explicit dimension, so empty sums
    /// materialize to zero.
    pub fn from_rank_one_sum_in(s: &RankOneSum, d: usize, ell: u32) -> Result<Self> {
        let mut t = Self::zeros(d, ell)?;
        let mut mono = vec![0.0; t.values.len()];
        for term in &s.terms {
            check_dim(d, term.v.len())?;
            t.basis.monomials_into(&term.v, &mut mono);
            for (val, m) in t.values.iter_mut().zip(&mono) {
                *val += term.lambda * m;
            }
        }
        Ok(t)
    }

    pub fn d(&self) -> usize {
        self.basis.d()
    }

    pub fn ell(&self) -> u32 {
        self.basis.ell()
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, alpha: &MultiIndex) -> Option<f64> {
        self.basis.position(alpha).map(|i| self.values[i])
    }

    pub fn set(&mut self, alpha: &MultiIndex, value: f64) -> Result<()> {
        let i = self
            .basis
            .position(alpha)
            .ok_or_else(|| Error::invalid(format!("multi-index {:?} not in basis", alpha.as_slice())))?;
        self.values[i] = value;
        Ok(())
    }

    /// Entry at a (0-based) index tuple, `T_{β_I}`.
    pub fn entry(&self, index: &[usize]) -> Result<f64> {
        check_dim(self.ell() as usize, index.len())?;
        let beta = beta_of_index(index, self.d())?;
        Ok(self.get(&beta).expect("occurrence vector lies in the basis"))
    }

    /// `⟨T, x^{⊗ℓ}⟩ = Σ_α N_α T_α Π_j x(j)^{α_j}`.
    pub fn apply(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.d(), x.len())?;
        let mono = self.basis.monomials(x);
        Ok(self
            .values
            .iter()
            .zip(&mono)
            .zip(self.basis.weights_f64())
            .map(|((t, m), w)| w * t * m)
            .sum())
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        check_dim(self.d(), other.d())?;
        if self.ell() != other.ell() {
            return Err(Error::invalid(format!(
                "order mismatch: {} vs {}",
                self.ell(),
                other.ell()
            )));
        }
        Ok(())
    }

    /// Frobenius inner product `Σ_α N_α T_α U_α`.
    pub fn frobenius_inner(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .zip(self.basis.weights_f64())
            .map(|((a, b), w)| w * a * b)
            .sum())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_inner(self).expect("same shape").sqrt()
    }

    pub fn scaled(&self, c: f64) -> Self {
        SymmetricTensor {
            basis: Arc::clone(&self.basis),
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    /// `self + c·other`.
    pub fn add_scaled(&self, other: &Self, c: f64) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(SymmetricTensor {
            basis: Arc::clone(&self.basis),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + c * b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add_scaled(other, -1.0)
    }

    /// Largest `|T_α|`.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Full `d^ℓ` array with entry `T_{β_I}` at `I`.
    pub fn dense_expand(&self) -> Result<DenseTensor> {
        let d = self.d();
        let mut beta = vec![0u32; d];
        DenseTensor::from_fn(d, self.ell(), |idx| {
            beta.iter_mut().for_each(|b| *b = 0);
            for &i in idx {
                beta[i] += 1;
            }
            self.get(&MultiIndex::new(beta.clone()))
                .expect("occurrence vector lies in the basis")
        })
    }

    pub fn to_record(&self) -> SymmetricTensorRecord {
        SymmetricTensorRecord {
            d: self.d(),
            ell: self.ell(),
            values: self
                .basis
                .indices()
                .iter()
                .cloned()
                .zip(self.values.iter().copied())
                .collect(),
        }
    }

    pub fn from_record(rec: SymmetricTensorRecord) -> Result<Self> {
        let mut t = Self::zeros(rec.d, rec.ell)?;
        check_dim(t.values.len(), rec.values.len())?;
        for (pos, (alpha, v)) in rec.values.into_iter().enumerate() {
            if t.basis.indices()[pos] != alpha {
                return Err(Error::invalid(format!(
                    "record entry {pos} has multi-index {:?}, expected canonical {:?}",
                    alpha.as_slice(),
                    t.basis.indices()[pos].as_slice()
                )));
            }
            t.values[pos] = v;
        }
        Ok(t)
    }
}

/// Text form of a [`SymmetricTensor`]: `{d, ell, values: [[alpha, coefficient], …]}`
/// in canonical order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricTensorRecord {
    pub d: usize,
    pub ell: u32,
    pub values: Vec<(MultiIndex, f64)>,
}

impl Serialize for SymmetricTensor {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_record().serialize(s)
    }
}

impl<'de> Deserialize<'de> for SymmetricTensor {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rec = SymmetricTensorRecord::deserialize(d)?;
        SymmetricTensor::from_record(rec).map_err(serde::de::Error::custom)
    }
}

/// Tensor with i.i.d. standard normal free entries `T_α`.
pub fn random_symmetric(d: usize, ell: u32, seed: u64) -> Result<SymmetricTensor> {
    use rand_distr::{Distribution, StandardNormal};
    let basis = Basis::get(d, ell)?;
    let mut rng = crate::rng::substream(seed, 0);
    let values = (0..basis.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
    Ok(SymmetricTensor { basis, values })
}

/// `Σ_{i<r} λ_i v_i^{⊗ℓ}` factors with standard normal `λ_i` and entries of `v_i`.
pub fn random_rank_one_sum(d: usize, r: usize, seed: u64) -> RankOneSum {
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = crate::rng::substream(seed, 1);
    RankOneSum::from_pairs((0..r).map(|_| {
        let lambda: f64 = StandardNormal.sample(&mut rng);
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        (lambda, v)
    }))
}
