//! Sign codebooks and packings of low-rank symmetric tensors.
//!
//! A Gilbert–Varshamov codebook is a set of `±1` vectors whose normalized
//! pairwise inner products are at most `ε` in magnitude. Normalizing the
//! codewords to `v_i = v'_i/√d` and summing `r` of them gives the packing
//! members `T_S = Σ_{i∈S} v_i^{⊗ℓ}`. Distances between members only involve
//! the Gram matrix `G_ij = ⟨v_i, v_j⟩`:
//!
//! ```text
//! ‖T_S − T_S'‖²_F = Σ_{i,i'∈S∖S'} G^ℓ + Σ_{i,i'∈S'∖S} G^ℓ − 2 Σ_{i∈S∖S', j∈S'∖S} G^ℓ
//! ```

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, substream, tag};
use crate::symtensor::{binomial, sym_dim, Basis, RankOneSum, SymmetricTensor};

/// Largest symmetric dimension for which every entry is checked for integrality.
pub const FULL_INTEGRALITY_LIMIT: u64 = 200_000;
/// Entries sampled for the integrality check above that limit.
pub const SAMPLED_INTEGRALITY_ENTRIES: usize = 2_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    pub d: usize,
    pub vectors: Vec<Vec<i8>>,
    pub epsilon: f64,
    /// Number of full resamples used, counting the successful one.
    pub attempts: usize,
}

fn sign_dot(a: &[i8], b: &[i8]) -> i64 {
    a.iter().zip(b).map(|(x, y)| (*x as i64) * (*y as i64)).sum()
}

impl Codebook {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// `v'_i / √d`.
    pub fn normalized(&self, i: usize) -> Vec<f64> {
        let s = 1.0 / (self.d as f64).sqrt();
        self.vectors[i].iter().map(|&x| x as f64 * s).collect()
    }

    /// `max_{i<j} |⟨v'_i, v'_j⟩| / d`.
    pub fn max_pairwise(&self) -> f64 {
        let mut worst = 0;
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                worst = worst.max(sign_dot(&self.vectors[i], &self.vectors[j]).abs());
            }
        }
        worst as f64 / self.d as f64
    }

    /// `G_ij = ⟨v'_i, v'_j⟩ / d`.
    pub fn gram(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        let mut g = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let v = sign_dot(&self.vectors[i], &self.vectors[j]) as f64 / self.d as f64;
                g[i][j] = v;
                g[j][i] = v;
            }
        }
        g
    }
}

/// Draws `n` uniform sign vectors, resampling the whole set until every pair
/// satisfies `|⟨v'_i, v'_j⟩| ≤ εd`.
pub fn gv_codebook(d: usize, n: usize, epsilon: f64, seed: u64, max_attempts: usize) -> Result<Codebook> {
    if n < 2 {
        return Err(Error::invalid("codebook needs at least 2 vectors"));
    }
    if d == 0 {
        return Err(Error::invalid("codebook dimension must be positive"));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::invalid(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    let limit = epsilon * d as f64;
    for attempt in 0..max_attempts {
        let mut rng = substream(seed, attempt as u64);
        let vectors: Vec<Vec<i8>> = (0..n)
            .map(|_| (0..d).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect())
            .collect();
        let ok = (0..n).all(|i| {
            (i + 1..n).all(|j| sign_dot(&vectors[i], &vectors[j]).abs() as f64 <= limit)
        });
        if ok {
            return Ok(Codebook {
                d,
                vectors,
                epsilon,
                attempts: attempt + 1,
            });
        }
    }
    Err(Error::Exhausted {
        attempts: max_attempts,
        d,
        n,
        epsilon,
    })
}

/// `‖T_S − T_S'‖_F` from the Gram matrix of unit vectors.
pub fn gram_distance(s: &[usize], s2: &[usize], gram: &[Vec<f64>], ell: u32) -> Result<f64> {
    for &i in s.iter().chain(s2) {
        let diag = gram
            .get(i)
            .and_then(|row| row.get(i))
            .ok_or_else(|| Error::invalid(format!("index {i} outside the Gram matrix")))?;
        if (diag - 1.0).abs() > 1e-10 {
            return Err(Error::invalid(format!("Gram diagonal {diag} at {i} is not 1")));
        }
    }
    let only_s: Vec<usize> = s.iter().copied().filter(|i| !s2.contains(i)).collect();
    let only_s2: Vec<usize> = s2.iter().copied().filter(|i| !s.contains(i)).collect();
    let block = |a: &[usize], b: &[usize]| -> f64 {
        a.iter()
            .map(|&i| b.iter().map(|&j| gram[i][j].powi(ell as i32)).sum::<f64>())
            .sum()
    };
    let sq = block(&only_s, &only_s) + block(&only_s2, &only_s2) - 2.0 * block(&only_s, &only_s2);
    Ok(sq.max(0.0).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackingOptions {
    /// Codebook tolerance; `r^{−0.01}` (kept below 1) when absent.
    pub epsilon: Option<f64>,
    /// Codebook size; the smallest `N` with `C(N, r) ≥ M` when absent.
    pub codebook_size: Option<usize>,
    pub max_attempts: usize,
}

impl Default for PackingOptions {
    fn default() -> Self {
        PackingOptions {
            epsilon: None,
            codebook_size: None,
            max_attempts: 1000,
        }
    }
}

/// `ε = r^{−0.01}`, capped at `1 − 1/d` so that no two codewords coincide up
/// to sign.
pub fn default_epsilon(r: usize, d: usize) -> f64 {
    (r as f64).powf(-0.01).min(1.0 - 1.0 / d as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackingSet {
    pub d: usize,
    pub ell: u32,
    pub r: usize,
    pub codebook: Codebook,
    /// Sorted, 0-based index sets of size `r`.
    pub subsets: Vec<Vec<usize>>,
    pub gram: Vec<Vec<f64>>,
}

impl PackingSet {
    pub fn len(&self) -> usize {
        self.subsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsets.is_empty()
    }

    /// `T_S` as a factored sum with unit weights.
    pub fn member(&self, i: usize) -> RankOneSum {
        RankOneSum::from_pairs(self.subsets[i].iter().map(|&j| (1.0, self.codebook.normalized(j))))
    }

    pub fn member_tensor(&self, i: usize) -> Result<SymmetricTensor> {
        SymmetricTensor::from_rank_one_sum_in(&self.member(i), self.d, self.ell)
    }

    pub fn distance(&self, a: usize, b: usize) -> Result<f64> {
        gram_distance(&self.subsets[a], &self.subsets[b], &self.gram, self.ell)
    }

    /// `‖T_S‖_F = √(Σ_{i,i'∈S} G_{ii'}^ℓ)`.
    pub fn norm(&self, i: usize) -> f64 {
        let s = &self.subsets[i];
        let sq: f64 = s
            .iter()
            .map(|&a| s.iter().map(|&b| self.gram[a][b].powi(self.ell as i32)).sum::<f64>())
            .sum();
        sq.max(0.0).sqrt()
    }

    /// Number of codewords outside the intersection: `k = |S ∖ S'|`.
    pub fn k(&self, a: usize, b: usize) -> usize {
        self.subsets[a].iter().filter(|i| !self.subsets[b].contains(i)).count()
    }
}

pub fn build_packing(d: usize, ell: u32, r: usize, m: usize, seed: u64) -> Result<PackingSet> {
    build_packing_with(d, ell, r, m, seed, &PackingOptions::default())
}

/// Codebook plus `M` distinct `r`-subsets drawn uniformly by rejection.
pub fn build_packing_with(
    d: usize,
    ell: u32,
    r: usize,
    m: usize,
    seed: u64,
    opts: &PackingOptions,
) -> Result<PackingSet> {
    if r == 0 || m == 0 || ell == 0 {
        return Err(Error::invalid("r, M and ℓ must be positive"));
    }
    let n = match opts.codebook_size {
        Some(n) => n,
        None => {
            let mut n = r.max(2);
            while (binomial(n as u64, r as u64)?) < m as u64 {
                n += 1;
            }
            n
        }
    };
    if n < r {
        return Err(Error::invalid(format!("codebook size {n} is smaller than r = {r}")));
    }
    let available = binomial(n as u64, r as u64)?;
    if (m as u64) > available {
        return Err(Error::invalid(format!(
            "cannot draw {m} distinct {r}-subsets from {n} codewords ({available} exist)"
        )));
    }
    let epsilon = opts.epsilon.unwrap_or_else(|| default_epsilon(r, d));
    let codebook = gv_codebook(d, n, epsilon, derive_seed(seed, tag::CODEBOOK, 0), opts.max_attempts)?;

    let mut rng = substream(derive_seed(seed, tag::SUBSET, 0), 0);
    let mut subsets: Vec<Vec<usize>> = Vec::with_capacity(m);
    let mut seen = std::collections::HashSet::new();
    while subsets.len() < m {
        let mut s = sample(&mut rng, n, r).into_vec();
        s.sort_unstable();
        if seen.insert(s.clone()) {
            subsets.push(s);
        }
    }
    let gram = codebook.gram();
    Ok(PackingSet {
        d,
        ell,
        r,
        codebook,
        subsets,
        gram,
    })
}

/// Outcome of [`verify_packing`]. Squared quantities are compared on the
/// squared-distance scale, matching how the bounds are stated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackingReport {
    pub members: usize,
    /// `+∞` for a single-member packing.
    pub min_distance: f64,
    pub worst_pair: Option<(usize, usize)>,
    /// `k = |S ∖ S'|` at the worst pair.
    pub k_at_worst: usize,
    pub k_max: usize,
    pub epsilon: f64,
    /// `2k − 3k²ε^ℓ` at the worst pair.
    pub tr_in_bound: f64,
    /// `2k − (4k² − 2k)ε^ℓ` at the worst pair, counting every off-diagonal term.
    pub rigorous_bound: f64,
    /// Every pair satisfies `dist² ≥ 2k − 3k²ε^ℓ` where that bound is positive.
    pub tr_in_holds: bool,
    pub rigorous_holds: bool,
    pub min_distance_at_least_one: bool,
    pub max_norm: f64,
    pub norm_ok: bool,
    pub integrality_ok: bool,
    pub integrality_entries_checked: usize,
    /// Realized `max |⟨v'_i, v'_j⟩| / d`.
    pub pairwise_epsilon: f64,
    pub duplicate_subsets: bool,
    /// `log C(N, r)`.
    pub log_subsets: f64,
    /// `r(c·d·ε² − log r)` with `c = 1`.
    pub cardinality_rhs: f64,
}

/// Exact verification of a packing through the Gram matrix.
pub fn verify_packing(p: &PackingSet) -> Result<PackingReport> {
    let ell = p.ell as i32;
    let eps_l = p.codebook.epsilon.powi(ell);
    let tr_in = |k: f64| 2.0 * k - 3.0 * k * k * eps_l;
    let rigorous = |k: f64| 2.0 * k - (4.0 * k * k - 2.0 * k) * eps_l;
    let slack = 1e-9;

    let pairs: Vec<(usize, usize)> = (0..p.len())
        .flat_map(|a| (a + 1..p.len()).map(move |b| (a, b)))
        .collect();
    let dists = pairs
        .par_iter()
        .map(|&(a, b)| Ok((a, b, p.distance(a, b)?, p.k(a, b))))
        .collect::<Result<Vec<_>>>()?;

    let mut min_distance = f64::INFINITY;
    let mut worst_pair = None;
    let mut k_at_worst = 0;
    let mut k_max = 0;
    let mut tr_in_holds = true;
    let mut rigorous_holds = true;
    let mut duplicate = false;
    for &(a, b, dist, k) in &dists {
        k_max = k_max.max(k);
        if k == 0 {
            duplicate = true;
        }
        let sq = dist * dist;
        let (t, g) = (tr_in(k as f64), rigorous(k as f64));
        if t > 0.0 && sq < t - slack {
            tr_in_holds = false;
        }
        if g > 0.0 && sq < g - slack {
            rigorous_holds = false;
        }
        if dist < min_distance {
            min_distance = dist;
            worst_pair = Some((a, b));
            k_at_worst = k;
        }
    }
    let max_norm = (0..p.len()).map(|i| p.norm(i)).fold(0.0, f64::max);
    let (integrality_ok, checked) = check_integrality(p)?;
    let n = p.codebook.len() as f64;
    let r = p.r as f64;
    let eps = p.codebook.epsilon;
    Ok(PackingReport {
        members: p.len(),
        min_distance,
        worst_pair,
        k_at_worst,
        k_max,
        epsilon: eps,
        tr_in_bound: tr_in(k_at_worst as f64),
        rigorous_bound: rigorous(k_at_worst as f64),
        tr_in_holds,
        rigorous_holds,
        min_distance_at_least_one: min_distance >= 1.0,
        max_norm,
        norm_ok: max_norm <= r + 1e-9,
        integrality_ok,
        integrality_entries_checked: checked,
        pairwise_epsilon: p.codebook.max_pairwise(),
        duplicate_subsets: duplicate,
        log_subsets: ln_binomial(n, r),
        cardinality_rhs: r * (p.d as f64 * eps * eps - r.ln()),
    })
}

fn ln_binomial(n: f64, k: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0)
}

/// Compares `d^{ℓ/2}·T_S(I)` computed in floating point with the integer
/// `Σ_{i∈S} Π_k v'_i(I_k)`, on every entry when the symmetric dimension is
/// small and on a seeded sample of tuples otherwise.
fn check_integrality(p: &PackingSet) -> Result<(bool, usize)> {
    let scale = (p.d as f64).powf(p.ell as f64 / 2.0);
    let ell = p.ell as usize;
    let tuples: Vec<Vec<usize>> = if sym_dim(p.d, p.ell)? <= FULL_INTEGRALITY_LIMIT {
        Basis::get(p.d, p.ell)?
            .indices()
            .iter()
            .map(|alpha| {
                alpha
                    .as_slice()
                    .iter()
                    .enumerate()
                    .flat_map(|(j, &a)| std::iter::repeat_n(j, a as usize))
                    .collect()
            })
            .collect()
    } else {
        let mut rng = substream(derive_seed(p.d as u64, tag::SUBSET, p.ell as u64), 1);
        (0..SAMPLED_INTEGRALITY_ENTRIES)
            .map(|_| (0..ell).map(|_| rng.random_range(0..p.d)).collect())
            .collect()
    };
    let checked = tuples.len() * p.len();
    let ok = (0..p.len()).into_par_iter().all(|m| {
        let member = p.member(m);
        tuples.iter().all(|idx| {
            let exact: i64 = p.subsets[m]
                .iter()
                .map(|&i| idx.iter().map(|&j| p.codebook.vectors[i][j] as i64).product::<i64>())
                .sum();
            let float = member.entry(idx) * scale;
            (float - exact as f64).abs() <= 1e-9 * scale.max(1.0) && float.round() == exact as f64
        })
    });
    Ok((ok, checked))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symtensor::DenseTensor;

    #[test]
    fn gv_examples() {
        let cb = gv_codebook(64, 8, 0.5, 3, 10).unwrap();
        assert_eq!(cb.attempts, 1);
        for i in 0..8 {
            for j in i + 1..8 {
                assert!(sign_dot(&cb.vectors[i], &cb.vectors[j]).abs() <= 32);
            }
        }
        assert_eq!(gv_codebook(5, 2, 1.0, 0, 1).unwrap().attempts, 1);
        assert!(matches!(
            gv_codebook(4, 1000, 0.1, 0, 20),
            Err(Error::Exhausted { attempts: 20, .. })
        ));
        assert!(gv_codebook(4, 1, 0.5, 0, 1).is_err());
        assert!(gv_codebook(4, 3, 0.0, 0, 1).is_err());
    }

    #[test]
    fn gram_distance_examples() {
        let g = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(gram_distance(&[0], &[0], &g, 3).unwrap(), 0.0);
        assert!((gram_distance(&[0], &[1], &g, 3).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let bad = vec![vec![2.0]];
        assert!(gram_distance(&[0], &[0], &bad, 2).is_err());
    }

    #[test]
    fn gram_distance_matches_dense() {
        let cb = gv_codebook(6, 6, 1.0, 5, 1).unwrap();
        let g = cb.gram();
        let ell = 3;
        let dense = |s: &[usize]| {
            let terms: Vec<(f64, Vec<f64>)> = s.iter().map(|&i| (1.0, cb.normalized(i))).collect();
            DenseTensor::from_terms(&terms, ell).unwrap()
        };
        for (s, s2) in [(vec![0, 1], vec![2, 3]), (vec![0, 4], vec![0, 5]), (vec![1, 2], vec![2, 1])] {
            let (a, b) = (dense(&s), dense(&s2));
            let diff: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            assert!((gram_distance(&s, &s2, &g, ell).unwrap() - diff).abs() < 1e-10);
        }
    }

    #[test]
    fn rank_one_packing() {
        let p = build_packing(64, 3, 1, 3, 1).unwrap();
        assert_eq!(p.len(), 3);
        for a in 0..3 {
            for b in a + 1..3 {
                let (i, j) = (p.subsets[a][0], p.subsets[b][0]);
                let want = (2.0 - 2.0 * p.gram[i][j].powi(3)).sqrt();
                assert!((p.distance(a, b).unwrap() - want).abs() < 1e-12);
            }
        }
        let rep = verify_packing(&p).unwrap();
        assert!(rep.integrality_ok && rep.norm_ok && !rep.duplicate_subsets);
    }

    #[test]
    fn single_member() {
        let p = build_packing(16, 2, 2, 1, 4).unwrap();
        let rep = verify_packing(&p).unwrap();
        assert_eq!(rep.min_distance, f64::INFINITY);
        assert!(rep.max_norm <= 2.0 + 1e-12);
        assert!(rep.worst_pair.is_none());
    }

    #[test]
    fn duplicate_subset_is_flagged() {
        let mut p = build_packing(16, 3, 2, 2, 4).unwrap();
        p.subsets[1] = p.subsets[0].clone();
        let rep = verify_packing(&p).unwrap();
        assert_eq!(rep.min_distance, 0.0);
        assert!(rep.duplicate_subsets);
        assert!(!rep.min_distance_at_least_one);
    }

    #[test]
    fn too_many_subsets() {
        let opts = PackingOptions {
            codebook_size: Some(3),
            ..Default::default()
        };
        assert!(build_packing_with(8, 2, 2, 4, 0, &opts).is_err());
    }
}
