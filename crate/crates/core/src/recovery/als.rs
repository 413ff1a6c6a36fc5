use nalgebra::{DMatrix, DVector, SVD};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{label_scale, Estimate, RecoveryResult};
use crate::error::{Error, Result};
use crate::measurements::MeasurementSet;
use crate::rng::{derive_seed, substream, tag};
use crate::symtensor::{dot, RankOneSum};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlsOptions {
    pub restarts: usize,
    pub max_iters: usize,
    /// Residual tolerance relative to `max(1, ‖Y‖_∞)`.
    pub tol: f64,
    pub seed: u64,
}

impl Default for AlsOptions {
    fn default() -> Self {
        AlsOptions {
            restarts: 10,
            max_iters: 500,
            tol: 1e-10,
            seed: 0,
        }
    }
}

/// Relative Levenberg damping on each block's normal equations.
const DAMPING: f64 = 1e-8;
const BACKTRACK_STEPS: usize = 30;
const STALL_WINDOW: usize = 5;

struct Model<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    ell: i32,
    lambda: Vec<f64>,
    v: Vec<Vec<f64>>,
    /// `proj[j][i] = ⟨v_j, X_i⟩`.
    proj: Vec<Vec<f64>>,
}

impl<'a> Model<'a> {
    fn new(x: &'a [Vec<f64>], y: &'a [f64], ell: u32, v: Vec<Vec<f64>>) -> Self {
        let proj = v.iter().map(|vj| x.iter().map(|xi| dot(vj, xi)).collect()).collect();
        Model {
            x,
            y,
            ell: ell as i32,
            lambda: vec![0.0; v.len()],
            v,
            proj,
        }
    }

    fn residuals(&self) -> Vec<f64> {
        (0..self.y.len())
            .map(|i| {
                let pred: f64 = (0..self.v.len())
                    .map(|j| self.lambda[j] * self.proj[j][i].powi(self.ell))
                    .sum();
                self.y[i] - pred
            })
            .collect()
    }

    fn objective(&self) -> f64 {
        self.residuals().iter().map(|r| r * r).sum()
    }

    fn residual_inf(&self) -> f64 {
        self.residuals().iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    /// `λ` by (minimum-norm) least squares with the `v_j` fixed.
    fn lambda_step(&mut self) -> Result<()> {
        let (n, r) = (self.y.len(), self.v.len());
        let a = DMatrix::from_fn(n, r, |i, j| self.proj[j][i].powi(self.ell));
        let svd = SVD::new(a, true, true);
        let smax = svd.singular_values.iter().fold(0.0f64, |m, v| m.max(*v));
        let tol = smax * n.max(r) as f64 * f64::EPSILON;
        let sol = svd
            .solve(&DVector::from_column_slice(self.y), tol)
            .map_err(|e| Error::Degenerate(format!("λ least squares: {e}")))?;
        self.lambda = sol.iter().copied().collect();
        Ok(())
    }

    /// One damped Gauss–Newton step on `v_j`, accepted only if the objective
    /// decreases (halving the step otherwise), then `v_j` is normalized with its
    /// scale absorbed into `λ_j`.
    fn block_step(&mut self, j: usize) {
        let d = self.v[j].len();
        let ell = self.ell;
        let res = self.residuals();
        let mut h = DMatrix::<f64>::zeros(d, d);
        let mut g = DVector::<f64>::zeros(d);
        for (i, xi) in self.x.iter().enumerate() {
            let c = self.lambda[j] * ell as f64 * self.proj[j][i].powi(ell - 1);
            for a in 0..d {
                let ja = c * xi[a];
                g[a] += ja * res[i];
                for b in a..d {
                    h[(a, b)] += ja * c * xi[b];
                }
            }
        }
        for a in 0..d {
            for b in 0..a {
                h[(a, b)] = h[(b, a)];
            }
        }
        let trace = h.trace();
        if trace > 0.0 && trace.is_finite() {
            let mu = DAMPING * trace / d as f64;
            for a in 0..d {
                h[(a, a)] += mu;
            }
            if let Some(chol) = h.cholesky() {
                let delta = chol.solve(&g);
                let before = self.objective();
                let old_v = self.v[j].clone();
                let old_proj = self.proj[j].clone();
                let mut step = 1.0;
                let mut accepted = false;
                for _ in 0..BACKTRACK_STEPS {
                    self.v[j] = old_v.iter().zip(delta.iter()).map(|(v, dv)| v + step * dv).collect();
                    self.proj[j] = self.x.iter().map(|xi| dot(&self.v[j], xi)).collect();
                    if self.objective() < before {
                        accepted = true;
                        break;
                    }
                    step *= 0.5;
                }
                if !accepted {
                    self.v[j] = old_v;
                    self.proj[j] = old_proj;
                }
            }
        }
        let norm = dot(&self.v[j], &self.v[j]).sqrt();
        if norm > 0.0 && norm.is_finite() {
            self.v[j].iter_mut().for_each(|v| *v /= norm);
            self.proj[j].iter_mut().for_each(|p| *p /= norm);
            self.lambda[j] *= norm.powi(ell);
        }
    }
}

struct Run {
    lambda: Vec<f64>,
    v: Vec<Vec<f64>>,
    residual: f64,
    iterations: usize,
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

fn run_restart(ms: &MeasurementSet, r: usize, opts: &AlsOptions, k: usize, target: f64) -> Result<Run> {
    let mut rng = substream(derive_seed(opts.seed, tag::RESTART, k as u64), 0);
    let v: Vec<Vec<f64>> = (0..r).map(|_| unit_gaussian(ms.d(), &mut rng)).collect();
    let mut model = Model::new(&ms.x, &ms.y, ms.ell(), v);
    let mut history = Vec::with_capacity(opts.max_iters + 1);
    let mut iterations = 0;
    model.lambda_step()?;
    history.push(model.residual_inf());
    for it in 1..=opts.max_iters {
        iterations = it;
        for j in 0..r {
            model.block_step(j);
        }
        model.lambda_step()?;
        let res = model.residual_inf();
        history.push(res);
        if res <= target {
            break;
        }
        if it >= STALL_WINDOW && history[it - STALL_WINDOW] - res < target {
            break;
        }
    }
    Ok(Run {
        residual: model.residual_inf(),
        lambda: model.lambda,
        v: model.v,
        iterations,
    })
}

/// Best-over-restarts rank-`r` fit of `Σ_j λ_j ⟨v_j, X_i⟩^ℓ` to the labels by
/// cyclic block updates: `λ` by exact least squares, then each `v_j` by a
/// damped Gauss–Newton step. Restarts run in parallel and are reduced by
/// lowest residual, then lowest restart index.
pub fn rank_min_als(ms: &MeasurementSet, r: usize, opts: &AlsOptions) -> Result<RecoveryResult> {
    if r == 0 {
        return Err(Error::invalid("rank must be at least 1"));
    }
    if opts.restarts == 0 {
        return Err(Error::invalid("at least one restart is required"));
    }
    let (d, ell) = (ms.d(), ms.ell());
    let target = opts.tol * label_scale(ms);
    if ms.y.iter().all(|&y| y == 0.0) {
        let est = Estimate::Factors {
            d,
            ell,
            sum: RankOneSum::default(),
        };
        return Ok(RecoveryResult::finish(est, ms, 0, 0, opts.tol));
    }
    let runs = (0..opts.restarts)
        .into_par_iter()
        .map(|k| run_restart(ms, r, opts, k, target))
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (k, run) in runs.iter().enumerate() {
        if run.residual < runs[best].residual {
            best = k;
        }
    }
    let restart_residuals = runs.iter().map(|r| r.residual).collect();
    let chosen = &runs[best];
    let est = Estimate::Factors {
        d,
        ell,
        sum: RankOneSum::from_pairs(chosen.lambda.iter().copied().zip(chosen.v.iter().cloned())),
    };
    let mut out = RecoveryResult::finish(est, ms, opts.restarts, chosen.iterations, opts.tol);
    out.restart_residuals = restart_residuals;
    Ok(out)
}
