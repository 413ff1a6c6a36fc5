use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use once_cell::sync::Lazy;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest symmetric space a [`Basis`] will enumerate.
pub const MAX_BASIS_LEN: u64 = 5_000_000;

/// Occurrence-count vector `α ∈ ℕ₀^d` labelling one class of equal entries of
/// a symmetric tensor.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(alpha: Vec<u32>) -> Self {
        MultiIndex(alpha)
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Product `Π_j x(j)^{α_j}`.
    pub fn monomial(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .map(|(&a, &xj)| xj.powi(a as i32))
            .product()
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}

/// All multi-indices of dimension `d` and degree `ell`, graded-lexicographic
/// (at fixed degree: lexicographically descending, so `(2,0)` precedes `(1,1)`).
pub fn enumerate_multi_indices(d: usize, ell: u32) -> Vec<MultiIndex> {
    assert!(d >= 1, "dimension must be positive");
    let mut out = Vec::new();
    let mut current = vec![0u32; d];
    fill(&mut current, 0, ell, &mut out);
    out
}

fn fill(current: &mut [u32], pos: usize, remaining: u32, out: &mut Vec<MultiIndex>) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(MultiIndex(current.to_vec()));
        return;
    }
    for a in (0..=remaining).rev() {
        current[pos] = a;
        fill(current, pos + 1, remaining - a, out);
    }
    current[pos] = 0;
}

/// Multinomial coefficient `N_α = ℓ!/(α_1!⋯α_d!)`: the number of index tuples
/// `I ∈ [d]^ℓ` whose occurrence vector equals `α`.
pub fn multinomial(alpha: &MultiIndex) -> Result<u64> {
    // Product of binomials C(α_1+…+α_k, α_k), each exact.
    let mut total: u64 = 1;
    let mut running: u64 = 0;
    for &a in alpha.as_slice() {
        running += a as u64;
        let b = binomial(running, a as u64)?;
        total = total
            .checked_mul(b)
            .ok_or_else(|| Error::capacity(format!("multinomial of {:?} overflows u64", alpha.0)))?;
    }
    Ok(total)
}

/// `C(n, k)` with overflow detection.
pub fn binomial(n: u64, k: u64) -> Result<u64> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) at every step.
        acc = acc
            .checked_mul((n - i) as u128)
            .ok_or_else(|| Error::capacity(format!("binomial({n}, {k}) overflows")))?
            / (i as u128 + 1);
    }
    u64::try_from(acc).map_err(|_| Error::capacity(format!("binomial({n}, {k}) overflows u64")))
}

/// Dimension `(d+ℓ−1 choose ℓ)` of the space of order-`ℓ` symmetric tensors on `ℝ^d`.
pub fn sym_dim(d: usize, ell: u32) -> Result<u64> {
    if d == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    binomial(d as u64 + ell as u64 - 1, ell as u64)
}

/// Occurrence counts of a (0-based) index tuple: `β_j = |{k : i_k = j}|`.
pub fn beta_of_index(index: &[usize], d: usize) -> Result<MultiIndex> {
    let mut beta = vec![0u32; d];
    for &i in index {
        if i >= d {
            return Err(Error::invalid(format!("index {i} out of range for d={d}")));
        }
        beta[i] += 1;
    }
    Ok(MultiIndex(beta))
}

/// The canonical enumeration of `{α : |α| = ℓ}` together with multinomial
/// weights and a reverse lookup. Shared across tensors of the same shape.
#[derive(Debug)]
pub struct Basis {
    d: usize,
    ell: u32,
    indices: Vec<MultiIndex>,
    weights: Vec<u64>,
    weights_f64: Vec<f64>,
    lookup: HashMap<MultiIndex, usize>,
}

static BASIS_CACHE: Lazy<RwLock<HashMap<(usize, u32), Arc<Basis>>>> =
    Lazy::new(|| RwLock::new(HashMap::new()));

impl Basis {
    /// Shared basis for `(d, ell)`; built once per process.
    pub fn get(d: usize, ell: u32) -> Result<Arc<Basis>> {
        if let Some(b) = BASIS_CACHE.read().expect("basis cache poisoned").get(&(d, ell)) {
            return Ok(Arc::clone(b));
        }
        let basis = Arc::new(Basis::build(d, ell)?);
        let mut cache = BASIS_CACHE.write().expect("basis cache poisoned");
        Ok(Arc::clone(cache.entry((d, ell)).or_insert(basis)))
    }

    fn build(d: usize, ell: u32) -> Result<Basis> {
        let n = sym_dim(d, ell)?;
        if n > MAX_BASIS_LEN {
            return Err(Error::capacity(format!(
                "symmetric space of dimension {n} (d={d}, ell={ell}) exceeds {MAX_BASIS_LEN}"
            )));
        }
        let indices = enumerate_multi_indices(d, ell);
        debug_assert_eq!(indices.len() as u64, n);
        let weights = indices.iter().map(multinomial).collect::<Result<Vec<_>>>()?;
        let weights_f64 = weights.iter().map(|&w| w as f64).collect();
        let lookup = indices.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();
        Ok(Basis {
            d,
            ell,
            indices,
            weights,
            weights_f64,
            lookup,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    /// Exact `N_α` per position.
    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    pub fn weights_f64(&self) -> &[f64] {
        &self.weights_f64
    }

    pub fn position(&self, alpha: &MultiIndex) -> Option<usize> {
        self.lookup.get(alpha).copied()
    }

    /// Table `pw[j][k] = x(j)^k` for `k ≤ ℓ`.
    fn power_table(&self, x: &[f64]) -> Vec<f64> {
        let stride = self.ell as usize + 1;
        let mut pw = vec![1.0; self.d * stride];
        for (j, &xj) in x.iter().enumerate() {
            for k in 1..stride {
                pw[j * stride + k] = pw[j * stride + k - 1] * xj;
            }
        }
        pw
    }

    /// Raw monomials `Π_j x(j)^{α_j}` in canonical order, written into `out`.
    pub fn monomials_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.d);
        debug_assert_eq!(out.len(), self.len());
        let stride = self.ell as usize + 1;
        let pw = self.power_table(x);
        for (slot, alpha) in out.iter_mut().zip(&self.indices) {
            *slot = alpha
                .as_slice()
                .iter()
                .enumerate()
                .map(|(j, &a)| pw[j * stride + a as usize])
                .product();
        }
    }

    pub fn monomials(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.monomials_into(x, &mut out);
        out
    }

    /// Weighted monomials `N_α Π_j x(j)^{α_j}`: one row of the design matrix.
    pub fn weighted_monomials(&self, x: &[f64]) -> Vec<f64> {
        let mut out = self.monomials(x);
        for (o, w) in out.iter_mut().zip(&self.weights_f64) {
            *o *= w;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    #[test]
    fn enumeration_examples() {
        assert_eq!(enumerate_multi_indices(1, 3), vec![mi(&[3])]);
        assert_eq!(
            enumerate_multi_indices(2, 2),
            vec![mi(&[2, 0]), mi(&[1, 1]), mi(&[0, 2])]
        );
        assert_eq!(enumerate_multi_indices(3, 2).len(), 6);
        assert_eq!(enumerate_multi_indices(3, 0), vec![mi(&[0, 0, 0])]);
    }

    #[test]
    fn enumeration_matches_multiset_count() {
        // Independent count: distinct sorted tuples of [d]^ℓ.
        for d in 1..=5usize {
            for ell in 0..=4u32 {
                let mut seen = std::collections::BTreeSet::new();
                let total = d.pow(ell);
                for code in 0..total {
                    let mut c = code;
                    let mut tuple: Vec<usize> = (0..ell).map(|_| {
                        let i = c % d;
                        c /= d;
                        i
                    }).collect();
                    tuple.sort();
                    seen.insert(tuple);
                }
                let listed = enumerate_multi_indices(d, ell);
                assert_eq!(listed.len(), seen.len());
                assert_eq!(sym_dim(d, ell).unwrap() as usize, seen.len());
                let unique: std::collections::BTreeSet<_> = listed.iter().collect();
                assert_eq!(unique.len(), listed.len());
                assert!(listed.iter().all(|a| a.degree() == ell));
            }
        }
    }

    #[test]
    fn multinomial_examples() {
        assert_eq!(multinomial(&mi(&[3, 0])).unwrap(), 1);
        assert_eq!(multinomial(&mi(&[1, 1, 1])).unwrap(), 6);
        assert_eq!(multinomial(&mi(&[2, 1])).unwrap(), 3);
        assert_eq!(multinomial(&mi(&[0, 0])).unwrap(), 1);
    }

    #[test]
    fn multinomial_overflow_is_capacity_error() {
        let err = multinomial(&mi(&[30, 30, 30])).unwrap_err();
        assert!(matches!(err, Error::Capacity(_)));
    }

    #[test]
    fn sym_dim_examples() {
        assert_eq!(sym_dim(2, 3).unwrap(), 4);
        assert_eq!(sym_dim(1, 7).unwrap(), 1);
        assert_eq!(sym_dim(3, 2).unwrap(), 6);
        assert!(sym_dim(0, 2).is_err());
        assert!(matches!(sym_dim(1 << 40, 40), Err(Error::Capacity(_))));
    }

    #[test]
    fn multinomial_theorem() {
        for d in 1..=6usize {
            for ell in 0..=5u32 {
                let s: u64 = enumerate_multi_indices(d, ell)
                    .iter()
                    .map(|a| multinomial(a).unwrap())
                    .sum();
                assert_eq!(s, (d as u64).pow(ell), "d={d} ell={ell}");
            }
        }
    }

    #[test]
    fn beta_examples() {
        // 1-based tuples from the examples, shifted to 0-based.
        assert_eq!(beta_of_index(&[0, 0, 0], 2).unwrap(), mi(&[3, 0]));
        assert_eq!(beta_of_index(&[1, 0, 1], 3).unwrap(), mi(&[1, 2, 0]));
        assert_eq!(beta_of_index(&[0, 1, 2], 3).unwrap(), mi(&[1, 1, 1]));
        assert!(beta_of_index(&[3], 3).is_err());
    }

    #[test]
    fn basis_lookup_roundtrip() {
        let b = Basis::get(3, 3).unwrap();
        for (i, a) in b.indices().iter().enumerate() {
            assert_eq!(b.position(a), Some(i));
        }
        assert!(Arc::ptr_eq(&b, &Basis::get(3, 3).unwrap()));
    }
}
