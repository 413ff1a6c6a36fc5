//! Full `d^ℓ` arrays. Used as an independent oracle for the compressed
//! representation, so nothing here goes through multi-indices.

use crate::error::{Error, Result};

/// Largest dense tensor (entry count) this module will allocate.
pub const MAX_DENSE_ENTRIES: u64 = 10_000_000;

/// Row-major order-`ℓ` array over `[d]^ℓ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    d: usize,
    ell: u32,
    data: Vec<f64>,
}

fn dense_len(d: usize, ell: u32) -> Result<usize> {
    let n = (d as u64)
        .checked_pow(ell)
        .filter(|&n| n <= MAX_DENSE_ENTRIES)
        .ok_or_else(|| {
            Error::capacity(format!("dense tensor d={d}, ell={ell} exceeds {MAX_DENSE_ENTRIES} entries"))
        })?;
    Ok(n as usize)
}

/// Decode a flat row-major offset into an index tuple.
fn decode(mut offset: usize, d: usize, out: &mut [usize]) {
    for slot in out.iter_mut().rev() {
        *slot = offset % d;
        offset /= d;
    }
}

impl DenseTensor {
    pub fn zeros(d: usize, ell: u32) -> Result<Self> {
        Ok(DenseTensor {
            d,
            ell,
            data: vec![0.0; dense_len(d, ell)?],
        })
    }

    /// Build entry by entry from a function of the index tuple.
    pub fn from_fn(d: usize, ell: u32, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let mut t = Self::zeros(d, ell)?;
        let mut idx = vec![0usize; ell as usize];
        for (off, slot) in t.data.iter_mut().enumerate() {
            decode(off, d, &mut idx);
            *slot = f(&idx);
        }
        Ok(t)
    }

    /// `Σ_i λ_i v_i^{⊗ℓ}` by direct outer products.
    pub fn from_terms(terms: &[(f64, Vec<f64>)], ell: u32) -> Result<Self> {
        let d = terms.first().map(|t| t.1.len()).unwrap_or(1);
        Self::from_fn(d, ell, |idx| {
            terms
                .iter()
                .map(|(lambda, v)| lambda * idx.iter().map(|&i| v[i]).product::<f64>())
                .sum()
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    fn offset(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.d + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    /// Euclidean inner product in `ℝ^{d^ℓ}`.
    pub fn inner(&self, other: &DenseTensor) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    /// `⟨T, x^{⊗ℓ}⟩ = Σ_I T_I x(i_1)⋯x(i_ℓ)`.
    pub fn contract(&self, x: &[f64]) -> f64 {
        let mut idx = vec![0usize; self.ell as usize];
        self.data
            .iter()
            .enumerate()
            .map(|(off, &t)| {
                decode(off, self.d, &mut idx);
                t * idx.iter().map(|&i| x[i]).product::<f64>()
            })
            .sum()
    }

    /// Largest absolute deviation between `T_I` and `T_{π(I)}` over all index
    /// tuples and all permutations `π` of the tuple positions.
    pub fn max_asymmetry(&self) -> f64 {
        let ell = self.ell as usize;
        let perms = permutations(ell);
        let mut idx = vec![0usize; ell];
        let mut permuted = vec![0usize; ell];
        let mut worst = 0.0f64;
        for off in 0..self.data.len() {
            decode(off, self.d, &mut idx);
            for p in &perms {
                for (k, &pk) in p.iter().enumerate() {
                    permuted[k] = idx[pk];
                }
                worst = worst.max((self.data[off] - self.get(&permuted)).abs());
            }
        }
        worst
    }
}

/// All permutations of `0..n` (Heap's algorithm).
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut a: Vec<usize> = (0..n).collect();
    let mut out = vec![a.clone()];
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            out.push(a.clone());
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutation_count() {
        assert_eq!(permutations(0).len(), 1);
        assert_eq!(permutations(3).len(), 6);
        assert_eq!(permutations(4).len(), 24);
    }

    #[test]
    fn rejects_huge() {
        assert!(matches!(DenseTensor::zeros(100, 4), Err(Error::Capacity(_))));
    }

    #[test]
    fn outer_product_contracts() {
        let t = DenseTensor::from_terms(&[(2.0, vec![1.0, -1.0])], 3).unwrap();
        let x = [0.5, 2.0];
        // 2 * <v,x>^3 = 2 * (-1.5)^3
        assert!((t.contract(&x) - 2.0 * (-1.5f64).powi(3)).abs() < 1e-12);
        assert_eq!(t.max_asymmetry(), 0.0);
    }
}
