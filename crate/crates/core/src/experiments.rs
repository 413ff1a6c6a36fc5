//! Seeded experiment drivers producing CSV tables.
//!
//! Each driver is a pure function of its configuration: trial `t` draws from
//! seeds derived from `(seed, t)`, trials may run in parallel, and rows are
//! always emitted in trial order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    anticoncentration_experiment, fano_simulation, loglog_slope, sample_threshold, AnticoncentrationReport,
    FanoReport,
};
use crate::error::{Error, Result};
use crate::measurements::{generate, DistributionSpec, TeacherNetwork};
use crate::orthopoly::{moments_of, second_moment_exact};
use crate::packing::{build_packing_with, PackingOptions};
use crate::recovery::{
    design_matrix, erm_solve, null_space_witness, rank_min_als, uniqueness_probe_with, AlsOptions, ProbeOptions,
};
use crate::report::{Cell, CsvTable};
use crate::rng::{derive_seed, tag};
use crate::symtensor::SymmetricTensor;

fn trial_seed(seed: u64, t: usize) -> u64 {
    derive_seed(seed, tag::TRIAL, t as u64)
}

fn rel_error(est: &SymmetricTensor, truth: &SymmetricTensor) -> Result<f64> {
    let diff = est.sub(truth)?.frobenius_norm();
    let n = truth.frobenius_norm();
    Ok(if n > 0.0 { diff / n } else { diff })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoverConfig {
    pub d: usize,
    pub ell: u32,
    pub r: usize,
    /// Sample-size constant; `N = ⌈C·r·d⌉` unless `n` is given.
    pub c: f64,
    pub n: Option<usize>,
    pub trials: usize,
    pub restarts: usize,
    pub max_iters: usize,
    pub tol: f64,
    /// Relative Frobenius error counted as a successful recovery.
    pub success_tol: f64,
    pub seed: u64,
    pub dist: DistributionSpec,
}

impl Default for RecoverConfig {
    fn default() -> Self {
        RecoverConfig {
            d: 4,
            ell: 3,
            r: 1,
            c: 19.0,
            n: None,
            trials: 20,
            restarts: 10,
            max_iters: 500,
            tol: 1e-10,
            success_tol: 1e-6,
            seed: 0,
            dist: DistributionSpec::standard_normal(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoverRow {
    pub trial: usize,
    pub n: usize,
    pub rel_error: f64,
    pub residual_inf: f64,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoverOutcome {
    pub n: usize,
    pub rows: Vec<RecoverRow>,
    pub success_rate: f64,
}

impl RecoverOutcome {
    pub fn to_csv(&self) -> String {
        let mut t = CsvTable::new(["trial", "n", "rel_error", "residual_inf", "converged", "iterations"]);
        for r in &self.rows {
            t.push(vec![
                r.trial.into(),
                r.n.into(),
                r.rel_error.into(),
                r.residual_inf.into(),
                r.converged.into(),
                r.iterations.into(),
            ]);
        }
        t.render()
    }
}

/// Random rank-`r` teacher tensors fitted by [`rank_min_als`].
pub fn recover_experiment(cfg: &RecoverConfig) -> Result<RecoverOutcome> {
    let n = match cfg.n {
        Some(n) => n,
        None => sample_threshold(cfg.d, cfg.r, cfg.ell, cfg.c)? as usize,
    };
    if cfg.trials == 0 {
        return Err(Error::invalid("at least one trial is required"));
    }
    let rows = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let s = trial_seed(cfg.seed, t);
            let net = TeacherNetwork::random(cfg.d, cfg.r, derive_seed(s, tag::TENSOR, 0))?;
            let truth = net.tensorize(cfg.ell)?;
            let ms = generate(&truth, &cfg.dist, n, derive_seed(s, tag::MEASURE, 0))?;
            let opts = AlsOptions {
                restarts: cfg.restarts,
                max_iters: cfg.max_iters,
                tol: cfg.tol,
                seed: derive_seed(s, tag::RESTART, 0),
            };
            let fit = rank_min_als(&ms, cfg.r, &opts)?;
            Ok(RecoverRow {
                trial: t,
                n,
                rel_error: rel_error(&fit.estimate.materialize()?, &truth)?,
                residual_inf: fit.residual_inf,
                converged: fit.converged,
                iterations: fit.iterations,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ok = rows.iter().filter(|r| r.rel_error <= cfg.success_tol).count();
    Ok(RecoverOutcome {
        n,
        success_rate: ok as f64 / rows.len() as f64,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErmConfig {
    pub d: usize,
    pub ell: u32,
    pub n: usize,
    pub trials: usize,
    pub lambdas: Vec<f64>,
    pub seed: u64,
    pub dist: DistributionSpec,
}

impl Default for ErmConfig {
    fn default() -> Self {
        ErmConfig {
            d: 3,
            ell: 2,
            n: 6,
            trials: 100,
            lambdas: vec![1.0, 10.0, 100.0],
            seed: 0,
            dist: DistributionSpec::standard_normal(),
        }
    }
}

/// One ERM trial; witness columns are filled when the kernel is nontrivial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErmRow {
    pub trial: usize,
    pub unique: bool,
    pub rank: usize,
    pub rel_error: f64,
    pub witness: bool,
    /// `E⟨T̄, X^{⊗ℓ}⟩²`.
    pub witness_second_moment: f64,
    pub lambda: f64,
    /// `max_i |⟨T*+λT̄, X_i^{⊗ℓ}⟩ − Y_i|`.
    pub empirical_loss: f64,
    /// `E⟨λT̄, X^{⊗ℓ}⟩²` computed directly.
    pub population_loss: f64,
    /// `λ²·E⟨T̄, X^{⊗ℓ}⟩²`.
    pub predicted_loss: f64,
}

pub fn erm_csv(rows: &[ErmRow]) -> String {
    let mut t = CsvTable::new([
        "trial",
        "unique",
        "rank",
        "rel_error",
        "witness",
        "witness_second_moment",
        "lambda",
        "empirical_loss",
        "population_loss",
        "predicted_loss",
    ]);
    for r in rows {
        t.push(vec![
            r.trial.into(),
            r.unique.into(),
            r.rank.into(),
            r.rel_error.into(),
            r.witness.into(),
            r.witness_second_moment.into(),
            r.lambda.into(),
            r.empirical_loss.into(),
            r.population_loss.into(),
            r.predicted_loss.into(),
        ]);
    }
    t.render()
}

/// ERM round trips; with `N < sym_dim` each trial also scales a null-space
/// witness into `T(λ) = T* + λT̄`.
pub fn erm_experiment(cfg: &ErmConfig) -> Result<Vec<ErmRow>> {
    let m = moments_of(&cfg.dist, 2 * cfg.ell as usize)?;
    let per_trial = (0..cfg.trials)
        .into_par_iter()
        .map(|t| -> Result<Vec<ErmRow>> {
            let s = trial_seed(cfg.seed, t);
            let truth = crate::symtensor::random_symmetric(cfg.d, cfg.ell, derive_seed(s, tag::TENSOR, 0))?;
            let ms = generate(&truth, &cfg.dist, cfg.n, derive_seed(s, tag::MEASURE, 0))?;
            let fit = erm_solve(&ms)?;
            let rel = rel_error(&fit.estimate.materialize()?, &truth)?;
            let base = ErmRow {
                trial: t,
                unique: fit.unique.unwrap_or(false),
                rank: fit.rank.unwrap_or(0),
                rel_error: rel,
                witness: false,
                witness_second_moment: 0.0,
                lambda: 0.0,
                empirical_loss: fit.residual_inf,
                population_loss: 0.0,
                predicted_loss: 0.0,
            };
            let Some(w) = null_space_witness(&ms)? else { return Ok(vec![base]) };
            let m2 = second_moment_exact(&w, &m)?;
            let dm = design_matrix(&ms)?;
            cfg.lambdas
                .iter()
                .map(|&lambda| {
                    let t_l = truth.add_scaled(&w, lambda)?;
                    let labels = dm.apply(&t_l)?;
                    let emp = labels.iter().zip(&ms.y).fold(0.0f64, |a, (p, y)| a.max((p - y).abs()));
                    let pop = second_moment_exact(&t_l.sub(&truth)?, &m)?;
                    Ok(ErmRow {
                        witness: true,
                        witness_second_moment: m2,
                        lambda,
                        empirical_loss: emp,
                        population_loss: pop,
                        predicted_loss: lambda * lambda * m2,
                        ..base.clone()
                    })
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_trial.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub d: usize,
    pub ell: u32,
    pub r: usize,
    pub n: usize,
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
    pub dist: DistributionSpec,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            d: 4,
            ell: 3,
            r: 1,
            n: 76,
            restarts: 50,
            max_iters: 500,
            seed: 0,
            dist: DistributionSpec::standard_normal(),
        }
    }
}

/// Probe over rank-`2r` unit tensors for `N` measurement vectors (labels are
/// irrelevant to the probe, so none are generated from a tensor).
pub fn probe_experiment(cfg: &ProbeConfig) -> Result<crate::recovery::ProbeResult> {
    let zero = SymmetricTensor::zeros(cfg.d, cfg.ell)?;
    let ms = generate(&zero, &cfg.dist, cfg.n, derive_seed(cfg.seed, tag::MEASURE, 0))?;
    let opts = ProbeOptions {
        restarts: cfg.restarts,
        max_iters: cfg.max_iters,
        seed: derive_seed(cfg.seed, tag::RESTART, 0),
    };
    uniqueness_probe_with(&ms, 2 * cfg.r, &opts)
}

pub fn probe_csv(res: &crate::recovery::ProbeResult) -> String {
    let mut t = CsvTable::new(["restart", "probe_value", "best"]);
    for (k, v) in res.restart_values.iter().enumerate() {
        t.push(vec![k.into(), (*v).into(), (k == res.best_restart).into()]);
    }
    t.render()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FanoConfig {
    pub d: usize,
    pub ell: u32,
    pub r: usize,
    pub members: usize,
    pub bound: u32,
    pub ns: Vec<usize>,
    pub trials: usize,
    pub epsilon: Option<f64>,
    pub seed: u64,
}

impl Default for FanoConfig {
    fn default() -> Self {
        FanoConfig {
            d: 16,
            ell: 3,
            r: 1,
            members: 16,
            bound: 1,
            ns: vec![0, 1, 2, 4, 8, 16],
            trials: 2000,
            epsilon: None,
            seed: 0,
        }
    }
}

/// Fano simulation at each `N` over a single packing.
pub fn fano_experiment(cfg: &FanoConfig) -> Result<Vec<FanoReport>> {
    let opts = PackingOptions {
        epsilon: cfg.epsilon,
        ..Default::default()
    };
    let p = build_packing_with(cfg.d, cfg.ell, cfg.r, cfg.members, derive_seed(cfg.seed, tag::CODEBOOK, 1), &opts)?;
    let dist = DistributionSpec::uniform_integers(cfg.bound);
    cfg.ns
        .iter()
        .map(|&n| fano_simulation(&p, &dist, n, cfg.trials, derive_seed(cfg.seed, tag::TRIAL, n as u64)))
        .collect()
}

pub fn fano_csv(rows: &[FanoReport]) -> String {
    let mut t = CsvTable::new(["n", "trials", "members", "empirical_error", "strict_error", "fano_bound", "sigma"]);
    for r in rows {
        t.push(vec![
            r.n.into(),
            r.trials.into(),
            r.members.into(),
            r.empirical_error.into(),
            r.strict_error.into(),
            r.bound.into(),
            r.sigma.into(),
        ]);
    }
    t.render()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnticoncConfig {
    pub d: usize,
    pub ell: u32,
    pub samples: usize,
    pub eps_lo: f64,
    pub eps_hi: f64,
    pub grid_points: usize,
    pub c: f64,
    pub seed: u64,
    pub dist: DistributionSpec,
}

impl Default for AnticoncConfig {
    fn default() -> Self {
        AnticoncConfig {
            d: 3,
            ell: 2,
            samples: 1_000_000,
            eps_lo: 1e-6,
            eps_hi: 1e-2,
            grid_points: 9,
            c: 1.0,
            seed: 0,
            dist: DistributionSpec::standard_normal(),
        }
    }
}

/// Small-ball probabilities of `⟨e_1^{⊗ℓ}, X^{⊗ℓ}⟩` on a log grid.
pub fn anticonc_experiment(cfg: &AnticoncConfig) -> Result<(AnticoncentrationReport, Option<f64>)> {
    let t = SymmetricTensor::unit_power(cfg.d, cfg.ell, 0)?;
    let grid = crate::bounds::log_grid(cfg.eps_lo, cfg.eps_hi, cfg.grid_points);
    let rep = anticoncentration_experiment(&t, &cfg.dist, &grid, cfg.samples, cfg.seed, cfg.c)?;
    let slope = loglog_slope(&rep.rows);
    Ok((rep, slope))
}

pub fn anticonc_csv(rep: &AnticoncentrationReport) -> String {
    let mut t = CsvTable::new(["eps", "empirical_prob", "cw_bound", "closed_form", "sigma"]);
    for r in &rep.rows {
        t.push(vec![
            r.eps.into(),
            r.empirical_prob.into(),
            r.cw_bound.into(),
            r.closed_form.map(Cell::Real).unwrap_or(Cell::Text(String::new())),
            r.sigma.into(),
        ]);
    }
    t.render()
}
