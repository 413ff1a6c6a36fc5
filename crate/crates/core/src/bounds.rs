//! Closed-form bounds and the simulations that confront them.
//!
//! Every absolute constant the formulas leave unspecified is an explicit
//! argument and is echoed in the report's `constants_used`.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::measurements::{sample_vectors, DistributionSpec};
use crate::orthopoly::{moments_of, second_moment_exact};
use crate::packing::PackingSet;
use crate::report::{Cell, CsvTable};
use crate::rng::{derive_seed, substream, tag};
use crate::symtensor::SymmetricTensor;

/// Packings larger than this are not decoded exhaustively.
pub const MAX_FANO_PACKING: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub inputs: BTreeMap<String, f64>,
    pub value: f64,
    pub constants_used: BTreeMap<String, f64>,
}

impl BoundReport {
    fn new(name: &str, inputs: &[(&str, f64)], value: f64, constants: &[(&str, f64)]) -> Self {
        BoundReport {
            name: name.to_string(),
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            value,
            constants_used: constants.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    /// Rows `bound_name, parameters, value, constants` with `k=v;…` lists.
    pub fn to_csv(reports: &[BoundReport]) -> String {
        let join = |m: &BTreeMap<String, f64>| {
            m.iter()
                .map(|(k, v)| format!("{k}={}", crate::report::fmt_f64(*v)))
                .collect::<Vec<_>>()
                .join(";")
        };
        let mut t = CsvTable::new(["bound_name", "parameters", "value", "constants"]);
        for r in reports {
            t.push(vec![
                Cell::Text(r.name.clone()),
                Cell::Text(join(&r.inputs)),
                Cell::Real(r.value),
                Cell::Text(join(&r.constants_used)),
            ]);
        }
        t.render()
    }
}

fn check_covering(d: usize, r: usize, ell: u32, eps: f64, c: f64) -> Result<()> {
    if d < 2 || r == 0 || ell == 0 {
        return Err(Error::invalid("covering bound needs d ≥ 2, r ≥ 1, ℓ ≥ 1"));
    }
    if !(eps > 0.0 && eps <= 2.0) {
        return Err(Error::invalid(format!("covering bound needs 0 < ε ≤ 2, got {eps}")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::invalid("constant C must be positive"));
    }
    Ok(())
}

/// `log N(ζ_S(2r), ε) ≤ 2rℓd·log(2/ε) + C·rℓ²d·log d`.
pub fn covering_bound(d: usize, r: usize, ell: u32, eps: f64, c: f64) -> Result<BoundReport> {
    check_covering(d, r, ell, eps, c)?;
    let (df, rf, lf) = (d as f64, r as f64, ell as f64);
    let value = 2.0 * rf * lf * df * (2.0 / eps).ln() + c * rf * lf * lf * df * df.ln();
    Ok(BoundReport::new(
        "covering_sym",
        &[("d", df), ("r", rf), ("ell", lf), ("eps", eps)],
        value,
        &[("C", c)],
    ))
}

/// `log N(ζ_CP(r), ε) ≤ rℓd·log(1/ε) + C·rℓ²d·log d`.
pub fn covering_bound_cp(d: usize, r: usize, ell: u32, eps: f64, c: f64) -> Result<BoundReport> {
    check_covering(d, r, ell, eps, c)?;
    let (df, rf, lf) = (d as f64, r as f64, ell as f64);
    let value = rf * lf * df * (1.0 / eps).ln() + c * rf * lf * lf * df * df.ln();
    Ok(BoundReport::new(
        "covering_cp",
        &[("d", df), ("r", rf), ("ell", lf), ("eps", eps)],
        value,
        &[("C", c)],
    ))
}

/// `min(1, C·ℓ·(ε/√m₂)^{1/ℓ})`.
pub fn carbery_wright_bound(ell: u32, eps: f64, second_moment: f64, c: f64) -> Result<f64> {
    if !(second_moment > 0.0) {
        return Err(Error::invalid("anti-concentration bound needs a positive second moment"));
    }
    if !(eps > 0.0) || ell == 0 {
        return Err(Error::invalid("anti-concentration bound needs ε > 0 and ℓ ≥ 1"));
    }
    Ok((c * ell as f64 * (eps / second_moment.sqrt()).powf(1.0 / ell as f64)).min(1.0))
}

/// `⌈C·r·d⌉`, requiring `C > 2ℓ²`.
pub fn sample_threshold(d: usize, r: usize, ell: u32, c: f64) -> Result<u64> {
    let floor = 2.0 * (ell as f64).powi(2);
    if !(c > floor) {
        return Err(Error::invalid(format!(
            "the recovery threshold assumes C > 2ℓ² = {floor}; got C = {c}"
        )));
    }
    Ok((c * r as f64 * d as f64).ceil() as u64)
}

/// `max(0, 1 − (N·(log 3r + ℓ·log(Bd)) + 1) / log|Ψ|)`.
pub fn fano_lower_bound(n: usize, log_psi: f64, r: usize, b: f64, d: usize, ell: u32) -> Result<f64> {
    if !(log_psi > 0.0) {
        return Err(Error::invalid("Fano bound needs log|Ψ| > 0"));
    }
    let per_sample = (3.0 * r as f64).ln() + ell as f64 * (b * d as f64).ln();
    Ok((1.0 - (n as f64 * per_sample + 1.0) / log_psi).max(0.0))
}

/// `d^{ℓ/2}·⟨T_S, x^{⊗ℓ}⟩ = Σ_{i∈S} ⟨v'_i, x⟩^ℓ` for an integer vector `x`.
fn integer_label(p: &PackingSet, member: usize, x: &[i64]) -> i128 {
    p.subsets[member]
        .iter()
        .map(|&i| {
            let s: i64 = p.codebook.vectors[i].iter().zip(x).map(|(v, xj)| *v as i64 * xj).sum();
            (s as i128).pow(p.ell)
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FanoReport {
    pub n: usize,
    pub trials: usize,
    pub members: usize,
    /// Error rate of the consistency decoder with uniform tie-breaking.
    pub empirical_error: f64,
    /// Error rate when every tie counts as an error.
    pub strict_error: f64,
    pub bound: f64,
    /// Binomial standard error at the bound, `√(b(1−b)/trials)`.
    pub sigma: f64,
}

/// Draws `T*` uniformly from the packing and `N` discrete measurements per
/// trial, then decodes by exhaustive label consistency. Labels are compared
/// exactly through their integer form.
pub fn fano_simulation(
    p: &PackingSet,
    dist: &DistributionSpec,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<FanoReport> {
    let b = dist
        .integer_bound()
        .ok_or_else(|| Error::invalid("the Fano simulation needs a discrete-integer law"))?;
    if p.is_empty() {
        return Err(Error::invalid("empty packing"));
    }
    if p.len() > MAX_FANO_PACKING {
        return Err(Error::capacity(format!(
            "exhaustive decoding over {} members exceeds {MAX_FANO_PACKING}",
            p.len()
        )));
    }
    if trials == 0 {
        return Err(Error::invalid("at least one trial is required"));
    }
    let bits = (p.ell as f64) * ((b as f64 * p.d as f64).max(1.0)).log2() + (p.r as f64).log2() + 2.0;
    if bits > 120.0 {
        return Err(Error::capacity("integer labels would overflow 128 bits"));
    }
    let outcomes: Vec<(bool, bool)> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<(bool, bool)> {
            let trial_seed = derive_seed(seed, tag::TRIAL, t as u64);
            let mut rng = substream(trial_seed, u64::MAX);
            let truth = rng.random_range(0..p.len());
            let x = sample_vectors(dist, p.d, n, derive_seed(trial_seed, tag::MEASURE, 0))?;
            let xi: Vec<Vec<i64>> = x.iter().map(|row| row.iter().map(|v| *v as i64).collect()).collect();
            let y: Vec<i128> = xi.iter().map(|row| integer_label(p, truth, row)).collect();
            let consistent: Vec<usize> = (0..p.len())
                .filter(|&m| xi.iter().zip(&y).all(|(row, yi)| integer_label(p, m, row) == *yi))
                .collect();
            let guess = consistent[rng.random_range(0..consistent.len())];
            let strict_ok = consistent.len() == 1 && consistent[0] == truth;
            Ok((guess != truth, !strict_ok))
        })
        .collect::<Result<Vec<_>>>()?;
    let errors = outcomes.iter().filter(|o| o.0).count();
    let strict = outcomes.iter().filter(|o| o.1).count();
    let bound = fano_lower_bound(n, (p.len() as f64).ln(), p.r, b as f64, p.d, p.ell).unwrap_or(0.0);
    Ok(FanoReport {
        n,
        trials,
        members: p.len(),
        empirical_error: errors as f64 / trials as f64,
        strict_error: strict as f64 / trials as f64,
        bound,
        sigma: (bound * (1.0 - bound) / trials as f64).sqrt(),
    })
}

/// Distinct integer labels `Σ_{i∈S} ⟨v'_i, x⟩^ℓ` over every `r`-subset of
/// sign vectors in `{±1}^d` and every `x ∈ {−B..B}^d`, with the cap
/// `2r(Bd)^ℓ + 1`.
pub fn label_support(d: usize, ell: u32, r: usize, b: u32) -> Result<(usize, u64)> {
    if d > 4 || b > 3 || r > 2 {
        return Err(Error::capacity("exhaustive label enumeration is limited to d ≤ 4, B ≤ 3, r ≤ 2"));
    }
    let signs: Vec<Vec<i64>> = (0..1u32 << d)
        .map(|m| (0..d).map(|j| if m >> j & 1 == 1 { 1 } else { -1 }).collect())
        .collect();
    let side = 2 * b as i64 + 1;
    let xs: Vec<Vec<i64>> = (0..side.pow(d as u32))
        .map(|mut k| {
            (0..d)
                .map(|_| {
                    let v = k % side - b as i64;
                    k /= side;
                    v
                })
                .collect()
        })
        .collect();
    let subsets: Vec<Vec<usize>> = match r {
        1 => (0..signs.len()).map(|i| vec![i]).collect(),
        _ => (0..signs.len())
            .flat_map(|i| (i + 1..signs.len()).map(move |j| vec![i, j]))
            .collect(),
    };
    let mut labels = BTreeSet::new();
    for s in &subsets {
        for x in &xs {
            let y: i128 = s
                .iter()
                .map(|&i| (signs[i].iter().zip(x).map(|(a, b)| a * b).sum::<i64>() as i128).pow(ell))
                .sum();
            labels.insert(y);
        }
    }
    let cap = 2 * r as u64 * (b as u64 * d as u64).pow(ell) + 1;
    Ok((labels.len(), cap))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnticoncentrationRow {
    pub eps: f64,
    pub empirical_prob: f64,
    pub cw_bound: f64,
    /// `erf((ε/|c|)^{1/ℓ}/√2)` when `T = c·e_j^{⊗ℓ}` under a standard normal law.
    pub closed_form: Option<f64>,
    /// Binomial standard error at the closed form, or at the empirical value.
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnticoncentrationReport {
    pub rows: Vec<AnticoncentrationRow>,
    pub second_moment: f64,
    pub samples: usize,
    pub constants_used: BTreeMap<String, f64>,
}

/// `c` and `j` when `T = c·e_j^{⊗ℓ}`.
fn as_coordinate_power(t: &SymmetricTensor) -> Option<(f64, usize)> {
    let mut found = None;
    for (alpha, &v) in t.basis().indices().iter().zip(t.values()) {
        if v == 0.0 {
            continue;
        }
        if found.is_some() {
            return None;
        }
        let j = alpha.as_slice().iter().position(|&a| a == t.ell())?;
        found = Some((v, j));
    }
    found
}

/// Empirical `P[|⟨T, X^{⊗ℓ}⟩| ≤ ε]` over `samples` draws for every `ε` in the
/// grid, next to the anti-concentration bound with constant `c`.
pub fn anticoncentration_experiment(
    t: &SymmetricTensor,
    dist: &DistributionSpec,
    eps_grid: &[f64],
    samples: usize,
    seed: u64,
    c: f64,
) -> Result<AnticoncentrationReport> {
    if samples < 10_000 {
        return Err(Error::invalid("anti-concentration needs at least 10^4 samples"));
    }
    if eps_grid.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::invalid("ε grid must be positive"));
    }
    let ell = t.ell();
    let m2 = second_moment_exact(t, &moments_of(dist, 2 * ell as usize)?)?;
    let sampler = dist.sampler()?;
    let basis = t.basis().clone();
    let mut values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map_init(
            || vec![0.0; basis.len()],
            |mono, i| {
                use rand_distr::Distribution;
                let mut rng = substream(seed, i as u64);
                let x: Vec<f64> = (0..t.d()).map(|_| sampler.sample(&mut rng)).collect();
                basis.monomials_into(&x, mono);
                mono.iter()
                    .zip(t.values())
                    .zip(basis.weights_f64())
                    .map(|((m, v), w)| m * v * w)
                    .sum::<f64>()
                    .abs()
            },
        )
        .collect();
    values.sort_by(f64::total_cmp);
    let coord = match dist {
        DistributionSpec::Gaussian { mean, std } if *mean == 0.0 && *std == 1.0 => as_coordinate_power(t),
        _ => None,
    };
    let rows = eps_grid
        .iter()
        .map(|&eps| {
            let hits = values.partition_point(|v| *v <= eps);
            let p = hits as f64 / samples as f64;
            let closed = coord.map(|(cv, _)| erf((eps / cv.abs()).powf(1.0 / ell as f64) / 2f64.sqrt()));
            let q = closed.unwrap_or(p);
            Ok(AnticoncentrationRow {
                eps,
                empirical_prob: p,
                cw_bound: if m2 > 0.0 { carbery_wright_bound(ell, eps, m2, c)? } else { 1.0 },
                closed_form: closed,
                sigma: (q * (1.0 - q) / samples as f64).sqrt(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AnticoncentrationReport {
        rows,
        second_moment: m2,
        samples,
        constants_used: [("C".to_string(), c)].into_iter().collect(),
    })
}

/// Least-squares slope of `log p` against `log ε` over rows with `p > 0`.
pub fn loglog_slope(rows: &[AnticoncentrationRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.empirical_prob > 0.0)
        .map(|r| (r.eps.ln(), r.empirical_prob.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// `n` points log-spaced from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..n).map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packing::build_packing;
    use approx::assert_relative_eq;

    #[test]
    fn covering_examples() {
        let r = covering_bound(10, 2, 3, 0.1, 1.0).unwrap();
        let want = 120.0 * 20f64.ln() + 180.0 * 10f64.ln();
        assert_relative_eq!(r.value, want, max_relative = 1e-14);
        assert!((r.value - 773.92).abs() < 0.1);
        assert_eq!(r.constants_used["C"], 1.0);
        // At ε = 2 the first term vanishes.
        let tiny = covering_bound(10, 2, 3, 2.0, 1e-300).unwrap();
        assert!(tiny.value.abs() < 1e-290);
        let base = covering_bound(5, 2, 2, 0.5, 1.0).unwrap().value;
        assert!(covering_bound(5, 2, 2, 0.6, 1.0).unwrap().value < base);
        assert!(covering_bound(6, 2, 2, 0.5, 1.0).unwrap().value > base);
        assert!(covering_bound(5, 3, 2, 0.5, 1.0).unwrap().value > base);
        assert!(covering_bound(1, 2, 2, 0.5, 1.0).is_err());
        assert!(covering_bound(5, 2, 2, 2.5, 1.0).is_err());
    }

    #[test]
    fn covering_subset_path() {
        // ζ_S(2r) ⊂ ζ_CP(2r): the symmetric bound at ε equals the CP bound at
        // (2r, ε/2) with the constant halved, hence is at most the CP bound at (2r, ε/2, C).
        for (d, r, ell, eps, c) in [(10, 2, 3, 0.1, 1.0), (4, 1, 2, 1.5, 0.3), (50, 5, 7, 0.01, 2.0)] {
            let s = covering_bound(d, r, ell, eps, c).unwrap().value;
            let cp_half = covering_bound_cp(d, 2 * r, ell, eps / 2.0, c / 2.0).unwrap().value;
            assert_relative_eq!(s, cp_half, max_relative = 1e-13);
            assert!(s <= covering_bound_cp(d, 2 * r, ell, eps / 2.0, c).unwrap().value);
        }
    }

    #[test]
    fn carbery_wright_examples() {
        assert_eq!(carbery_wright_bound(3, 1.0, 1.0, 1.0).unwrap(), 1.0);
        assert_relative_eq!(carbery_wright_bound(2, 1e-4, 1.0, 1.0).unwrap(), 0.02, max_relative = 1e-12);
        let a = carbery_wright_bound(3, 1e-6, 1.0, 1.0).unwrap();
        let b = carbery_wright_bound(3, 1e-6, 2.0, 1.0).unwrap();
        assert_relative_eq!(b / a, 2f64.powf(-1.0 / 6.0), max_relative = 1e-12);
        assert!(carbery_wright_bound(3, 1e-6, 0.0, 1.0).is_err());
    }

    #[test]
    fn threshold_examples() {
        assert!(sample_threshold(4, 1, 3, 18.0).is_err());
        assert_eq!(sample_threshold(4, 1, 3, 19.0).unwrap(), 76);
        assert_eq!(sample_threshold(10, 2, 2, 9.0).unwrap(), 180);
    }

    #[test]
    fn fano_bound_examples() {
        let v = fano_lower_bound(0, 16f64.ln(), 1, 1.0, 16, 3).unwrap();
        assert_relative_eq!(v, 1.0 - 1.0 / 16f64.ln(), max_relative = 1e-14);
        assert!((v - 0.639).abs() < 1e-3);
        assert!(fano_lower_bound(5, 1e300, 1, 1.0, 16, 3).unwrap() > 1.0 - 1e-12);
        assert_eq!(fano_lower_bound(1000, 16f64.ln(), 1, 1.0, 16, 3).unwrap(), 0.0);
        let mut prev = 1.0;
        for n in 0..10 {
            let b = fano_lower_bound(n, 100.0, 2, 1.0, 8, 2).unwrap();
            assert!(b <= prev);
            assert!(fano_lower_bound(n, 101.0, 2, 1.0, 8, 2).unwrap() >= b);
            prev = b;
        }
        assert!(fano_lower_bound(1, 0.0, 1, 1.0, 4, 2).is_err());
    }

    #[test]
    fn fano_single_member() {
        let p = build_packing(8, 3, 1, 1, 0).unwrap();
        let rep = fano_simulation(&p, &DistributionSpec::uniform_integers(1), 2, 50, 1).unwrap();
        assert_eq!(rep.empirical_error, 0.0);
        assert_eq!(rep.strict_error, 0.0);
    }

    #[test]
    fn label_alphabet_cap() {
        let (count, cap) = label_support(2, 2, 1, 1).unwrap();
        assert_eq!(cap, 9);
        assert!(count as u64 <= cap);
        // ⟨v', x⟩ ∈ {−2..2}, so the squares are {0, 1, 4}.
        assert_eq!(count, 3);
        let (count, cap) = label_support(2, 3, 2, 1).unwrap();
        assert!(count as u64 <= cap);
    }

    #[test]
    fn anticoncentration_edges() {
        let t = SymmetricTensor::unit_power(2, 2, 0).unwrap();
        let g = DistributionSpec::standard_normal();
        let rep = anticoncentration_experiment(&t, &g, &[1e3], 10_000, 3, 1.0).unwrap();
        assert_eq!(rep.rows[0].empirical_prob, 1.0);
        assert_relative_eq!(rep.second_moment, 3.0);
        assert!(anticoncentration_experiment(&t, &g, &[0.1], 100, 3, 1.0).is_err());
    }

    #[test]
    fn grid_and_slope() {
        let g = log_grid(1e-6, 1e-2, 5);
        assert_relative_eq!(g[0], 1e-6, max_relative = 1e-12);
        assert_relative_eq!(g[4], 1e-2, max_relative = 1e-12);
        let rows: Vec<AnticoncentrationRow> = g
            .iter()
            .map(|&eps| AnticoncentrationRow {
                eps,
                empirical_prob: 0.3 * eps.powf(0.5),
                cw_bound: 1.0,
                closed_form: None,
                sigma: 0.0,
            })
            .collect();
        assert_relative_eq!(loglog_slope(&rows).unwrap(), 0.5, max_relative = 1e-10);
    }
}
