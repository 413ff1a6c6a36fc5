use std::collections::BTreeMap;

use crate::symtensor::{RankOneSum, SymmetricTensor};

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Writes `u = s·g·u'` with `g` the gcd of the entries and `s` the sign of the
/// first nonzero one; returns `(u', s·g)`, or `None` for the zero vector.
fn canonical(u: &[i64]) -> Option<(Vec<i64>, i64)> {
    let g = u.iter().fold(0, |acc, &x| gcd(acc, x));
    if g == 0 {
        return None;
    }
    let first = *u.iter().find(|&&x| x != 0).expect("nonzero vector");
    let sg = first.signum() * g;
    Some((u.iter().map(|x| x / sg).collect(), sg))
}

/// `T = Σ_α N_α T_α · e_{i_1}⊙⋯⊙e_{i_ℓ}`, with every symmetrized basis
/// element replaced by the folded polarization identity
///
/// ```text
/// x_1⊙⋯⊙x_ℓ = 1/(2^{ℓ−1} ℓ!) Σ_{ε ∈ {±1}^ℓ, ε_1 = 1} (Π_k ε_k) (Σ_k ε_k x_k)^{⊗ℓ}
/// ```
///
/// Integer vectors are reduced to a canonical primitive form so equal powers
/// merge; coefficients within one basis element are combined exactly in
/// integers and exact zeros are dropped. The result has at most
/// `2^{ℓ−1}·sym_dim(d, ℓ)` terms, each vector having small integer entries.
pub fn polarization_decompose(t: &SymmetricTensor) -> RankOneSum {
    let ell = t.ell() as usize;
    let d = t.d();
    let basis = t.basis();
    let denom: f64 = (1..=ell).map(|k| k as f64).product::<f64>() * 2f64.powi(ell as i32 - 1);
    let mut merged: BTreeMap<Vec<i64>, f64> = BTreeMap::new();

    for ((alpha, &value), &weight) in basis.indices().iter().zip(t.values()).zip(basis.weights_f64()) {
        if value == 0.0 {
            continue;
        }
        let slots: Vec<usize> = alpha
            .as_slice()
            .iter()
            .enumerate()
            .flat_map(|(j, &a)| std::iter::repeat_n(j, a as usize))
            .collect();
        let mut local: BTreeMap<Vec<i64>, i64> = BTreeMap::new();
        for mask in 0..(1u64 << (ell - 1)) {
            let mut u = vec![0i64; d];
            let mut sign = 1i64;
            for (k, &j) in slots.iter().enumerate() {
                let eps = if k > 0 && mask >> (k - 1) & 1 == 1 { -1 } else { 1 };
                sign *= eps;
                u[j] += eps;
            }
            if let Some((canon, sg)) = canonical(&u) {
                *local.entry(canon).or_insert(0) += sign * sg.pow(ell as u32);
            }
        }
        let scale = weight * value / denom;
        for (v, num) in local {
            if num != 0 {
                *merged.entry(v).or_insert(0.0) += num as f64 * scale;
            }
        }
    }
    RankOneSum::from_pairs(
        merged
            .into_iter()
            .filter(|(_, w)| *w != 0.0)
            .map(|(v, w)| (w, v.into_iter().map(|x| x as f64).collect())),
    )
}
