use nalgebra::{DMatrix, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurements::MeasurementSet;
use crate::rng::{derive_seed, substream, tag};
use crate::symtensor::{dot, RankOneSum, SymmetricTensor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeOptions {
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions {
            restarts: 10,
            max_iters: 500,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    /// Smallest `max_i |⟨T, X_i^{⊗ℓ}⟩|` found over unit-Frobenius candidates.
    pub value: f64,
    pub best_restart: usize,
    pub restart_values: Vec<f64>,
    /// The minimizing candidate, scaled to unit Frobenius norm.
    pub candidate: RankOneSum,
}

const RIDGE: f64 = 1e-10;
const DAMPING: f64 = 1e-8;

struct Candidate<'a> {
    x: &'a [Vec<f64>],
    ell: i32,
    lambda: Vec<f64>,
    v: Vec<Vec<f64>>,
}

impl Candidate<'_> {
    fn preds(&self) -> Vec<f64> {
        self.x
            .iter()
            .map(|xi| {
                self.v
                    .iter()
                    .zip(&self.lambda)
                    .map(|(vj, l)| l * dot(vj, xi).powi(self.ell))
                    .sum()
            })
            .collect()
    }

    fn gram(&self) -> DMatrix<f64> {
        let r = self.v.len();
        DMatrix::from_fn(r, r, |j, k| dot(&self.v[j], &self.v[k]).powi(self.ell))
    }

    /// Coefficients of the candidate. Scoring goes through these so that
    /// near-parallel factors with large cancelling weights cannot fake a
    /// small norm.
    fn materialize(&self) -> Option<SymmetricTensor> {
        let d = self.v.first()?.len();
        let s = RankOneSum::from_pairs(self.lambda.iter().copied().zip(self.v.iter().cloned()));
        SymmetricTensor::from_rank_one_sum_in(&s, d, self.ell as u32).ok()
    }

    /// Labels and Frobenius norm of the materialized candidate.
    fn scored(&self) -> Option<(Vec<f64>, f64)> {
        let t = self.materialize()?;
        let n = t.frobenius_norm();
        if !(n > 0.0 && n.is_finite()) {
            return None;
        }
        let preds = self.x.iter().map(|xi| t.apply(xi).unwrap_or(f64::NAN)).collect();
        Some((preds, n))
    }

    /// `Σ_i ⟨T, X_i⟩² / ‖T‖²_F`.
    fn ratio(&self) -> f64 {
        match self.scored() {
            Some((preds, n)) => {
                let r = preds.iter().map(|p| p * p).sum::<f64>() / (n * n);
                if r.is_nan() {
                    f64::INFINITY
                } else {
                    r
                }
            }
            None => f64::INFINITY,
        }
    }

    fn normalize(&mut self) {
        for j in 0..self.v.len() {
            let n = dot(&self.v[j], &self.v[j]).sqrt();
            if n > 0.0 {
                self.v[j].iter_mut().for_each(|x| *x /= n);
                self.lambda[j] *= n.powi(self.ell);
            }
        }
        if let Some(t) = self.materialize() {
            let n = t.frobenius_norm();
            if n > 0.0 && n.is_finite() {
                self.lambda.iter_mut().for_each(|l| *l /= n);
            }
        }
    }

    /// Minimizes `λᵀAᵀAλ` subject to `λᵀGλ = 1` (smallest generalized
    /// eigenpair, with a small ridge on `G`).
    fn lambda_step(&mut self) {
        let r = self.v.len();
        let n = self.x.len();
        let a = DMatrix::from_fn(n, r, |i, j| dot(&self.v[j], &self.x[i]).powi(self.ell));
        let ata = a.transpose() * &a;
        let mut g = self.gram();
        let ridge = RIDGE * g.trace().max(1.0);
        for j in 0..r {
            g[(j, j)] += ridge;
        }
        let Some(chol) = g.cholesky() else { return };
        let l = chol.l();
        let Some(l_inv) = l.clone().try_inverse() else { return };
        let b = &l_inv * ata * l_inv.transpose();
        let b = (&b + b.transpose()) * 0.5;
        let eig = SymmetricEigen::new(b);
        let k = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|x, y| x.1.total_cmp(y.1))
            .map(|(k, _)| k)
            .expect("non-empty");
        let u = eig.eigenvectors.column(k).into_owned();
        let lam = l_inv.transpose() * u;
        let before = self.ratio();
        let old = std::mem::replace(&mut self.lambda, lam.iter().copied().collect());
        if self.ratio() > before {
            self.lambda = old;
        }
    }

    /// Damped Gauss–Newton on `v_j` toward `⟨T, X_i⟩ = 0`, accepted only if
    /// the normalized objective decreases.
    fn block_step(&mut self, j: usize) {
        let d = self.v[j].len();
        let preds = self.preds();
        let mut h = DMatrix::<f64>::zeros(d, d);
        let mut g = nalgebra::DVector::<f64>::zeros(d);
        for (i, xi) in self.x.iter().enumerate() {
            let c = self.lambda[j] * self.ell as f64 * dot(&self.v[j], xi).powi(self.ell - 1);
            for a in 0..d {
                g[a] -= c * xi[a] * preds[i];
                for b in 0..d {
                    h[(a, b)] += c * c * xi[a] * xi[b];
                }
            }
        }
        let trace = h.trace();
        if !(trace > 0.0 && trace.is_finite()) {
            return;
        }
        let mu = DAMPING * trace / d as f64;
        for a in 0..d {
            h[(a, a)] += mu;
        }
        let Some(chol) = h.cholesky() else { return };
        let delta = chol.solve(&g);
        let before = self.ratio();
        let old = self.v[j].clone();
        let mut step = 1.0;
        for _ in 0..30 {
            self.v[j] = old.iter().zip(delta.iter()).map(|(v, dv)| v + step * dv).collect();
            if self.ratio() < before {
                return;
            }
            step *= 0.5;
        }
        self.v[j] = old;
    }

    fn value(&self) -> f64 {
        match self.scored() {
            Some((preds, n)) => preds.iter().fold(0.0f64, |m, p| m.max(p.abs())) / n,
            None => f64::INFINITY,
        }
    }
}

fn unit_gaussian(d: usize, rng: &mut impl rand::Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let n = dot(&v, &v).sqrt();
        if n > 0.0 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn run(ms: &MeasurementSet, two_r: usize, opts: &ProbeOptions, k: usize) -> (f64, RankOneSum) {
    let mut rng = substream(derive_seed(opts.seed, tag::RESTART, k as u64), 1);
    let v: Vec<Vec<f64>> = (0..two_r).map(|_| unit_gaussian(ms.d(), &mut rng)).collect();
    let lambda = (0..two_r).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut c = Candidate {
        x: &ms.x,
        ell: ms.ell() as i32,
        lambda,
        v,
    };
    c.normalize();
    let mut best = c.ratio();
    let mut stalled = 0;
    for _ in 0..opts.max_iters {
        c.lambda_step();
        for j in 0..two_r {
            c.block_step(j);
        }
        c.normalize();
        let now = c.ratio();
        if now < 1e-30 {
            break;
        }
        if now > best * (1.0 - 1e-10) {
            stalled += 1;
            if stalled >= 10 {
                break;
            }
        } else {
            stalled = 0;
        }
        best = best.min(now);
    }
    let sum = RankOneSum::from_pairs(c.lambda.iter().copied().zip(c.v.iter().cloned()));
    (c.value(), sum)
}

/// Upper bound on `inf_{T ∈ ζ_S(2r)} max_i |⟨T, X_i^{⊗ℓ}⟩|` by alternating
/// minimization over unit-Frobenius rank-`two_r` candidates.
pub fn uniqueness_probe(ms: &MeasurementSet, two_r: usize, restarts: usize, seed: u64) -> Result<f64> {
    let opts = ProbeOptions {
        restarts,
        seed,
        ..Default::default()
    };
    Ok(uniqueness_probe_with(ms, two_r, &opts)?.value)
}

pub fn uniqueness_probe_with(ms: &MeasurementSet, two_r: usize, opts: &ProbeOptions) -> Result<ProbeResult> {
    if two_r == 0 {
        return Err(Error::invalid("probe rank must be at least 1"));
    }
    if opts.restarts == 0 {
        return Err(Error::invalid("at least one restart is required"));
    }
    if ms.is_empty() {
        let mut e1 = vec![0.0; ms.d()];
        if let Some(first) = e1.first_mut() {
            *first = 1.0;
        }
        return Ok(ProbeResult {
            value: 0.0,
            best_restart: 0,
            restart_values: vec![0.0; opts.restarts],
            candidate: RankOneSum::from_pairs([(1.0, e1)]),
        });
    }
    let runs: Vec<(f64, RankOneSum)> = (0..opts.restarts)
        .into_par_iter()
        .map(|k| run(ms, two_r, opts, k))
        .collect();
    let mut best = 0;
    for (k, r) in runs.iter().enumerate() {
        if r.0 < runs[best].0 {
            best = k;
        }
    }
    Ok(ProbeResult {
        value: runs[best].0,
        best_restart: best,
        restart_values: runs.iter().map(|r| r.0).collect(),
        candidate: runs[best].1.clone(),
    })
}
