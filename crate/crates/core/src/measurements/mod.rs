//! Measurement vectors, labelled datasets and teacher networks.
//!
//! A dataset is `N` vectors `X_i` with i.i.d. coordinates and exact labels
//! `Y_i = ⟨T*, X_i^{⊗ℓ}⟩`. There is no noise channel.

mod distribution;

use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::report::fmt_f64;
use crate::rng::substream;
use crate::symtensor::{dot, RankOneSum, SymmetricTensor};

pub use distribution::{DistributionSpec, Sampler};

/// `N × d` matrix of i.i.d. draws. Row `i` comes from substream `i` of `seed`.
pub fn sample_vectors(dist: &DistributionSpec, d: usize, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let sampler = dist.sampler()?;
    Ok((0..n)
        .map(|i| {
            let mut rng = substream(seed, i as u64);
            (0..d).map(|_| sampler.sample(&mut rng)).collect()
        })
        .collect())
}

/// Shape of the tensor that generated a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorMeta {
    pub d: usize,
    pub ell: u32,
    /// Symmetric rank of the generator when known.
    pub r: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub dist: DistributionSpec,
    pub seed: u64,
    pub meta: TensorMeta,
}

/// Labels `Y_i = ⟨T*, X_i^{⊗ℓ}⟩` for freshly drawn `X_i`.
pub fn generate(tstar: &SymmetricTensor, dist: &DistributionSpec, n: usize, seed: u64) -> Result<MeasurementSet> {
    let x = sample_vectors(dist, tstar.d(), n, seed)?;
    MeasurementSet::label(tstar, x, dist.clone(), seed)
}

impl MeasurementSet {
    /// Label given vectors with `tstar`.
    pub fn label(tstar: &SymmetricTensor, x: Vec<Vec<f64>>, dist: DistributionSpec, seed: u64) -> Result<Self> {
        let basis = tstar.basis();
        let mut mono = vec![0.0; basis.len()];
        let mut y = Vec::with_capacity(x.len());
        for row in &x {
            check_dim(tstar.d(), row.len())?;
            basis.monomials_into(row, &mut mono);
            y.push(
                tstar
                    .values()
                    .iter()
                    .zip(&mono)
                    .zip(basis.weights_f64())
                    .map(|((t, m), w)| w * t * m)
                    .sum(),
            );
        }
        Ok(MeasurementSet {
            x,
            y,
            dist,
            seed,
            meta: TensorMeta {
                d: tstar.d(),
                ell: tstar.ell(),
                r: None,
            },
        })
    }

    pub fn with_rank(mut self, r: usize) -> Self {
        self.meta.r = Some(r);
        self
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn d(&self) -> usize {
        self.meta.d
    }

    pub fn ell(&self) -> u32 {
        self.meta.ell
    }

    /// Copy with labels multiplied by `c`.
    pub fn scaled_labels(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.y.iter_mut().for_each(|y| *y *= c);
        out
    }

    /// First `n` samples.
    pub fn truncated(&self, n: usize) -> Self {
        let mut out = self.clone();
        out.x.truncate(n);
        out.y.truncate(n);
        out
    }

    /// Header lines (`# key=value`) followed by a CSV body `x1,…,xd,y`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("# symrec measurement set v1\n");
        out.push_str(&format!("# d={}\n# ell={}\n# n={}\n", self.meta.d, self.meta.ell, self.len()));
        match self.meta.r {
            Some(r) => out.push_str(&format!("# r={r}\n")),
            None => out.push_str("# r=unknown\n"),
        }
        out.push_str(&format!("# seed={}\n", self.seed));
        out.push_str(&format!(
            "# dist={}\n",
            serde_json::to_string(&self.dist).expect("distribution serializes")
        ));
        let cols: Vec<String> = (1..=self.meta.d).map(|j| format!("x{j}")).chain(["y".to_string()]).collect();
        out.push_str(&cols.join(","));
        out.push('\n');
        for (row, y) in self.x.iter().zip(&self.y) {
            let cells: Vec<String> = row.iter().chain(std::iter::once(y)).map(|v| fmt_f64(*v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut d = None;
        let mut ell = None;
        let mut n = None;
        let mut r = None;
        let mut seed = None;
        let mut dist = None;
        let mut x = Vec::new();
        let mut y = Vec::new();
        let mut saw_columns = false;
        for line in text.lines() {
            if let Some(h) = line.strip_prefix('#') {
                let Some((k, v)) = h.trim().split_once('=') else { continue };
                let bad = |e: &dyn std::fmt::Display| Error::invalid(format!("header {k}: {e}"));
                match k {
                    "d" => d = Some(v.parse::<usize>().map_err(|e| bad(&e))?),
                    "ell" => ell = Some(v.parse::<u32>().map_err(|e| bad(&e))?),
                    "n" => n = Some(v.parse::<usize>().map_err(|e| bad(&e))?),
                    "r" => r = v.parse::<usize>().ok(),
                    "seed" => seed = Some(v.parse::<u64>().map_err(|e| bad(&e))?),
                    "dist" => {
                        dist = Some(serde_json::from_str::<DistributionSpec>(v).map_err(|e| bad(&e))?)
                    }
                    _ => {}
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            if !saw_columns {
                saw_columns = true;
                continue;
            }
            let vals = line
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::invalid(format!("bad CSV row {line:?}: {e}")))?;
            let (label, row) = vals.split_last().ok_or_else(|| Error::invalid("empty CSV row"))?;
            x.push(row.to_vec());
            y.push(*label);
        }
        let missing = |k: &str| Error::invalid(format!("missing header {k}"));
        let d = d.ok_or_else(|| missing("d"))?;
        let set = MeasurementSet {
            x,
            y,
            dist: dist.ok_or_else(|| missing("dist"))?,
            seed: seed.ok_or_else(|| missing("seed"))?,
            meta: TensorMeta {
                d,
                ell: ell.ok_or_else(|| missing("ell"))?,
                r,
            },
        };
        check_dim(n.ok_or_else(|| missing("n"))?, set.len())?;
        for row in &set.x {
            check_dim(d, row.len())?;
        }
        Ok(set)
    }
}

/// Width-`r` network `x ↦ Σ_j a_j ⟨W_j, x⟩^ℓ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeacherNetwork {
    pub a: Vec<f64>,
    pub w: Vec<Vec<f64>>,
}

impl TeacherNetwork {
    pub fn new(a: Vec<f64>, w: Vec<Vec<f64>>) -> Result<Self> {
        check_dim(a.len(), w.len())?;
        if let Some(first) = w.first() {
            for row in &w {
                check_dim(first.len(), row.len())?;
            }
        }
        Ok(TeacherNetwork { a, w })
    }

    /// Output weights and hidden rows drawn from a standard normal.
    pub fn random(d: usize, r: usize, seed: u64) -> Result<Self> {
        let g = DistributionSpec::standard_normal();
        let w = sample_vectors(&g, d, r, seed)?;
        let a = sample_vectors(&g, r, 1, seed.wrapping_add(1))?.remove(0);
        Self::new(a, w)
    }

    pub fn width(&self) -> usize {
        self.a.len()
    }

    pub fn evaluate(&self, x: &[f64], ell: u32) -> f64 {
        self.a
            .iter()
            .zip(&self.w)
            .map(|(a, w)| a * dot(w, x).powi(ell as i32))
            .sum()
    }

    /// `T* = Σ_j a_j W_j^{⊗ℓ}`.
    pub fn tensorize(&self, ell: u32) -> Result<SymmetricTensor> {
        if ell == 0 {
            return Err(Error::invalid("network order must be at least 1"));
        }
        let d = self
            .w
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::invalid("network has no hidden units"))?;
        SymmetricTensor::from_rank_one_sum_in(&self.as_rank_one_sum(), d, ell)
    }

    pub fn as_rank_one_sum(&self) -> RankOneSum {
        RankOneSum::from_pairs(self.a.iter().copied().zip(self.w.iter().cloned()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampling_is_deterministic() {
        let g = DistributionSpec::standard_normal();
        assert_eq!(sample_vectors(&g, 3, 2, 7).unwrap(), sample_vectors(&g, 3, 2, 7).unwrap());
        assert_ne!(sample_vectors(&g, 3, 2, 7).unwrap(), sample_vectors(&g, 3, 2, 8).unwrap());
        // Rows are substreams: a prefix of a longer draw is the shorter draw.
        let long = sample_vectors(&g, 3, 5, 7).unwrap();
        assert_eq!(&long[..2], &sample_vectors(&g, 3, 2, 7).unwrap()[..]);
    }

    #[test]
    fn discrete_uniform_mean_is_centered() {
        let d = 4;
        let n = 10_000;
        let x = sample_vectors(&DistributionSpec::uniform_integers(1), d, n, 11).unwrap();
        let mean: f64 = x.iter().flatten().sum::<f64>() / (n * d) as f64;
        assert!(mean.abs() <= 4.0 / ((n * d) as f64).sqrt(), "mean {mean}");
        assert!(x.iter().flatten().all(|v| [-1.0, 0.0, 1.0].contains(v)));
    }

    #[test]
    fn uniform_second_moment() {
        let x = sample_vectors(&DistributionSpec::symmetric_uniform(), 1, 100_000, 3).unwrap();
        let m2: f64 = x.iter().map(|r| r[0] * r[0]).sum::<f64>() / x.len() as f64;
        assert!((m2 - 1.0 / 3.0).abs() <= 0.01 / 3.0, "m2 {m2}");
    }

    #[test]
    fn generate_examples() {
        let g = DistributionSpec::standard_normal();
        let zero = SymmetricTensor::zeros(3, 2).unwrap();
        assert!(generate(&zero, &g, 10, 1).unwrap().y.iter().all(|&y| y == 0.0));

        let e1 = SymmetricTensor::unit_power(3, 4, 0).unwrap();
        let ms = generate(&e1, &g, 10, 2).unwrap();
        for (x, y) in ms.x.iter().zip(&ms.y) {
            assert!((*y - x[0].powi(4)).abs() <= 1e-14 * y.abs());
        }
    }

    #[test]
    fn tensorize_examples() {
        let net = TeacherNetwork::new(vec![1.0], vec![vec![1.0, 0.0]]).unwrap();
        assert_eq!(net.tensorize(2).unwrap(), SymmetricTensor::unit_power(2, 2, 0).unwrap());

        let w = vec![0.3, -0.7, 1.1];
        let net = TeacherNetwork::new(vec![1.0, -1.0], vec![w.clone(), w]).unwrap();
        assert_eq!(net.tensorize(3).unwrap().max_abs(), 0.0);
        assert!(net.tensorize(0).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let t = SymmetricTensor::unit_power(2, 3, 1).unwrap();
        let ms = generate(&t, &DistributionSpec::symmetric_uniform(), 4, 9).unwrap().with_rank(1);
        let text = ms.to_csv();
        assert!(text.contains("x1,x2,y\n"));
        let back = MeasurementSet::from_csv(&text).unwrap();
        assert_eq!(back, ms);
    }
}
