//! One function per subcommand: resolve the configuration, run the library,
//! and assemble the report.

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use symrec::bounds::{
    carbery_wright_bound, covering_bound, covering_bound_cp, fano_lower_bound, sample_threshold, BoundReport,
};
use symrec::experiments::{
    anticonc_csv, anticonc_experiment, erm_csv, erm_experiment, fano_csv, fano_experiment, probe_csv,
    probe_experiment, recover_experiment, AnticoncConfig, ErmConfig, FanoConfig, ProbeConfig, RecoverConfig,
};
use symrec::measurements::{generate, TeacherNetwork};
use symrec::packing::{build_packing_with, verify_packing, PackingOptions, FULL_INTEGRALITY_LIMIT, SAMPLED_INTEGRALITY_ENTRIES};
use symrec::recovery::DIRECT_TOL;
use symrec::report::{Cell, CsvTable};
use symrec::symtensor::{random_rank_one_sum, RankOneSum, SymmetricTensor};
use symrec::DistributionSpec;

use crate::args::*;
use crate::config::{resolve, to_value};
use crate::error::CliResult;
use crate::output::Report;

type File<'a> = Option<&'a Map<String, Value>>;

/// Tolerance on zero empirical loss for witnesses and on teacher labels.
const LABEL_TOL: f64 = 1e-8;

/// Number of standard errors allowed below the Fano bound.
const FANO_SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpandConfig {
    pub d: usize,
    pub ell: u32,
    pub r: usize,
    pub seed: u64,
    /// `[λ, v]` pairs; replaces the random sum when present.
    pub terms: Option<Vec<(f64, Vec<f64>)>>,
}

impl Default for ExpandConfig {
    fn default() -> Self {
        ExpandConfig {
            d: 3,
            ell: 3,
            r: 2,
            seed: 0,
            terms: None,
        }
    }
}

pub fn expand(a: &ExpandArgs, file: File) -> CliResult<Report> {
    let cfg: ExpandConfig = resolve(ExpandConfig::default(), file, a)?;
    let (sum, d) = match &cfg.terms {
        Some(terms) => {
            let s = RankOneSum::from_pairs(terms.iter().cloned());
            let d = s.dim()?.unwrap_or(cfg.d);
            (s, d)
        }
        None => (random_rank_one_sum(cfg.d, cfg.r, cfg.seed), cfg.d),
    };
    let t = SymmetricTensor::from_rank_one_sum_in(&sum, d, cfg.ell)?;
    let mut csv = CsvTable::new(["index", "alpha", "n_alpha", "t_alpha"]);
    let basis = t.basis().clone();
    for (k, ((alpha, w), v)) in basis.indices().iter().zip(basis.weights()).zip(t.values()).enumerate() {
        let alpha: Vec<String> = alpha.as_slice().iter().map(u32::to_string).collect();
        csv.push(vec![k.into(), Cell::Text(alpha.join(";")), (*w).into(), (*v).into()]);
    }
    Ok(Report::new("expand", to_value(&cfg)?).csv("", csv.render()).summary(json!({
        "d": d,
        "ell": cfg.ell,
        "terms": sum.len(),
        "sym_dim": basis.len(),
        "frobenius_norm": t.frobenius_norm(),
    })))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoveringConfig {
    pub d: usize,
    pub r: usize,
    pub ell: u32,
    pub eps: f64,
    pub c: f64,
}

impl Default for CoveringConfig {
    fn default() -> Self {
        CoveringConfig {
            d: 10,
            r: 2,
            ell: 3,
            eps: 0.1,
            c: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CwConfig {
    pub ell: u32,
    pub eps: f64,
    pub second_moment: f64,
    pub c: f64,
}

impl Default for CwConfig {
    fn default() -> Self {
        CwConfig {
            ell: 3,
            eps: 1e-3,
            second_moment: 1.0,
            c: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdConfig {
    pub d: usize,
    pub r: usize,
    pub ell: u32,
    pub c: f64,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        ThresholdConfig {
            d: 4,
            r: 1,
            ell: 3,
            c: 19.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FanoBoundConfig {
    pub n: usize,
    pub log_psi: f64,
    pub r: usize,
    pub b: f64,
    pub d: usize,
    pub ell: u32,
}

impl Default for FanoBoundConfig {
    fn default() -> Self {
        FanoBoundConfig {
            n: 0,
            log_psi: 16f64.ln(),
            r: 1,
            b: 1.0,
            d: 16,
            ell: 3,
        }
    }
}

fn bound_report(name: &str, inputs: &[(&str, f64)], value: f64, constants: &[(&str, f64)]) -> BoundReport {
    BoundReport {
        name: name.to_string(),
        inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        value,
        constants_used: constants.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
    }
}

pub fn bounds(cmd: &BoundsCommand, file: File) -> CliResult<Report> {
    let (config, rep) = match cmd {
        BoundsCommand::Covering(a) | BoundsCommand::CoveringCp(a) => {
            let cfg: CoveringConfig = resolve(CoveringConfig::default(), file, a)?;
            let f = if matches!(cmd, BoundsCommand::Covering(_)) { covering_bound } else { covering_bound_cp };
            (to_value(&cfg)?, f(cfg.d, cfg.r, cfg.ell, cfg.eps, cfg.c)?)
        }
        BoundsCommand::Cw(a) => {
            let cfg: CwConfig = resolve(CwConfig::default(), file, a)?;
            let v = carbery_wright_bound(cfg.ell, cfg.eps, cfg.second_moment, cfg.c)?;
            let rep = bound_report(
                "carbery_wright",
                &[("ell", cfg.ell as f64), ("eps", cfg.eps), ("second_moment", cfg.second_moment)],
                v,
                &[("C", cfg.c)],
            );
            (to_value(&cfg)?, rep)
        }
        BoundsCommand::Threshold(a) => {
            let cfg: ThresholdConfig = resolve(ThresholdConfig::default(), file, a)?;
            let v = sample_threshold(cfg.d, cfg.r, cfg.ell, cfg.c)?;
            let rep = bound_report(
                "sample_threshold",
                &[("d", cfg.d as f64), ("r", cfg.r as f64), ("ell", cfg.ell as f64)],
                v as f64,
                &[("C", cfg.c)],
            );
            (to_value(&cfg)?, rep)
        }
        BoundsCommand::Fano(a) => {
            let cfg: FanoBoundConfig = resolve(FanoBoundConfig::default(), file, a)?;
            let v = fano_lower_bound(cfg.n, cfg.log_psi, cfg.r, cfg.b, cfg.d, cfg.ell)?;
            let rep = bound_report(
                "fano",
                &[
                    ("n", cfg.n as f64),
                    ("log_psi", cfg.log_psi),
                    ("r", cfg.r as f64),
                    ("b", cfg.b),
                    ("d", cfg.d as f64),
                    ("ell", cfg.ell as f64),
                ],
                v,
                &[],
            );
            (to_value(&cfg)?, rep)
        }
    };
    let summary = json!({ "bound_name": rep.name, "value": rep.value });
    Ok(Report::new(format!("bounds-{}", cmd.name()), config)
        .csv("", BoundReport::to_csv(std::slice::from_ref(&rep)))
        .constants(&rep.constants_used)
        .summary(summary))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PackConfig {
    pub d: usize,
    pub ell: u32,
    pub r: usize,
    pub members: usize,
    pub epsilon: Option<f64>,
    pub codebook_size: Option<usize>,
    pub max_attempts: usize,
    pub seed: u64,
}

impl Default for PackConfig {
    fn default() -> Self {
        PackConfig {
            d: 128,
            ell: 7,
            r: 3,
            members: 20,
            epsilon: Some(0.2),
            codebook_size: None,
            max_attempts: PackingOptions::default().max_attempts,
            seed: 0,
        }
    }
}

pub fn pack(a: &PackArgs, file: File) -> CliResult<Report> {
    let cfg: PackConfig = resolve(PackConfig::default(), file, a)?;
    let opts = PackingOptions {
        epsilon: cfg.epsilon,
        codebook_size: cfg.codebook_size,
        max_attempts: cfg.max_attempts,
    };
    let p = build_packing_with(cfg.d, cfg.ell, cfg.r, cfg.members, cfg.seed, &opts)?;
    let rep = verify_packing(&p)?;

    let mut members = CsvTable::new(["member", "subset", "norm"]);
    for (i, s) in p.subsets.iter().enumerate() {
        let s: Vec<String> = s.iter().map(usize::to_string).collect();
        members.push(vec![i.into(), Cell::Text(s.join(";")), p.norm(i).into()]);
    }
    let mut header = vec!["codeword".to_string()];
    header.extend((1..=cfg.d).map(|j| format!("x{j}")));
    let mut codebook = CsvTable::new(header);
    for (i, v) in p.codebook.vectors.iter().enumerate() {
        let mut row: Vec<Cell> = vec![i.into()];
        row.extend(v.iter().map(|&x| Cell::Int(x as i64)));
        codebook.push(row);
    }
    let report = Report::new("pack", to_value(&cfg)?)
        .csv("", members.render())
        .csv("_codebook", codebook.render())
        .constant("epsilon", rep.epsilon)
        .constant("cardinality_c", 1.0)
        .constant("full_integrality_limit", FULL_INTEGRALITY_LIMIT as f64)
        .constant("sampled_integrality_entries", SAMPLED_INTEGRALITY_ENTRIES as f64)
        .summary(json!({ "codebook_attempts": p.codebook.attempts, "verification": rep }))
        .require(rep.tr_in_holds && rep.integrality_ok && rep.norm_ok && !rep.duplicate_subsets, || {
            format!(
                "packing verification failed: pair bound {}, integrality {}, norms {}, duplicates {}",
                rep.tr_in_holds, rep.integrality_ok, rep.norm_ok, rep.duplicate_subsets
            )
        });
    Ok(report)
}

pub fn erm(a: &ErmArgs, file: File) -> CliResult<Report> {
    let cfg: ErmConfig = resolve(ErmConfig::default(), file, a)?;
    let rows = erm_experiment(&cfg)?;
    let unique = rows.iter().filter(|r| r.unique).count();
    let witnesses = rows.iter().filter(|r| r.witness).count();
    let worst_unique = rows.iter().filter(|r| r.unique).map(|r| r.rel_error).fold(0.0, f64::max);
    let worst_witness = rows
        .iter()
        .filter(|r| r.witness)
        .map(|r| r.empirical_loss / r.lambda.abs().max(1.0))
        .fold(0.0, f64::max);
    let nonpositive = rows.iter().filter(|r| r.witness && !(r.witness_second_moment > 0.0)).count();
    let report = Report::new("erm", to_value(&cfg)?)
        .csv("", erm_csv(&rows))
        .constant("direct_tol", DIRECT_TOL)
        .constant("label_tol", LABEL_TOL)
        .summary(json!({
            "rows": rows.len(),
            "unique_rows": unique,
            "witness_rows": witnesses,
            "worst_unique_rel_error": worst_unique,
            "worst_witness_loss_per_lambda": worst_witness,
        }))
        .require(worst_unique <= LABEL_TOL, || format!("unique ERM solution off by relative {worst_unique:e}"))
        .require(worst_witness <= LABEL_TOL && nonpositive == 0, || {
            format!("witness invalid: loss/λ {worst_witness:e}, {nonpositive} with zero second moment")
        });
    Ok(report)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecoverRun {
    #[serde(flatten)]
    pub base: RecoverConfig,
    pub min_success: Option<f64>,
}

pub fn recover(a: &RecoverArgs, file: File) -> CliResult<Report> {
    let defaults = RecoverRun {
        base: RecoverConfig::default(),
        min_success: None,
    };
    let cfg: RecoverRun = resolve(defaults, file, a)?;
    let out = recover_experiment(&cfg.base)?;
    let mut report = Report::new("recover", to_value(&cfg)?)
        .csv("", out.to_csv())
        .constant("C", cfg.base.c)
        .constant("tol", cfg.base.tol)
        .constant("success_tol", cfg.base.success_tol)
        .summary(json!({ "n": out.n, "success_rate": out.success_rate }));
    if let Some(min) = cfg.min_success {
        report = report.require(out.success_rate >= min, || format!("success rate {} below {min}", out.success_rate));
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeRun {
    #[serde(flatten)]
    pub base: ProbeConfig,
    pub expect_below: Option<f64>,
    pub expect_above: Option<f64>,
}

pub fn probe(a: &ProbeArgs, file: File) -> CliResult<Report> {
    let defaults = ProbeRun {
        base: ProbeConfig::default(),
        expect_below: None,
        expect_above: None,
    };
    let cfg: ProbeRun = resolve(defaults, file, a)?;
    let res = probe_experiment(&cfg.base)?;
    let mut report = Report::new("probe", to_value(&cfg)?)
        .csv("", probe_csv(&res))
        .constant("two_r", 2.0 * cfg.base.r as f64)
        .summary(json!({ "probe_value": res.value, "best_restart": res.best_restart }));
    if let Some(hi) = cfg.expect_below {
        report = report.require(res.value <= hi, || format!("probe value {:e} above {hi:e}", res.value));
    }
    if let Some(lo) = cfg.expect_above {
        report = report.require(res.value >= lo, || format!("probe value {:e} below {lo:e}", res.value));
    }
    Ok(report)
}

pub fn fano_sim(a: &FanoArgs, file: File) -> CliResult<Report> {
    let cfg: FanoConfig = resolve(FanoConfig::default(), file, a)?;
    let rows = fano_experiment(&cfg)?;
    let violations: Vec<usize> = rows
        .iter()
        .filter(|r| r.empirical_error < r.bound - FANO_SIGMAS * r.sigma)
        .map(|r| r.n)
        .collect();
    let report = Report::new("fano-sim", to_value(&cfg)?)
        .csv("", fano_csv(&rows))
        .constant("sigma_multiplier", FANO_SIGMAS)
        .summary(json!({ "violations": violations }))
        .require(violations.is_empty(), || format!("empirical error below the Fano bound at N = {violations:?}"));
    Ok(report)
}

pub fn anticonc(a: &AnticoncArgs, file: File) -> CliResult<Report> {
    let cfg: AnticoncConfig = resolve(AnticoncConfig::default(), file, a)?;
    let (rep, slope) = anticonc_experiment(&cfg)?;
    Ok(Report::new("anticonc", to_value(&cfg)?)
        .csv("", anticonc_csv(&rep))
        .constants(&rep.constants_used)
        .summary(json!({ "loglog_slope": slope, "second_moment": rep.second_moment })))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TeacherConfig {
    pub d: usize,
    pub r: usize,
    pub ell: u32,
    pub n: usize,
    pub seed: u64,
    pub dist: DistributionSpec,
}

impl Default for TeacherConfig {
    fn default() -> Self {
        TeacherConfig {
            d: 4,
            r: 3,
            ell: 3,
            n: 100,
            seed: 0,
            dist: DistributionSpec::standard_normal(),
        }
    }
}

pub fn teacher(a: &TeacherArgs, file: File) -> CliResult<Report> {
    let cfg: TeacherConfig = resolve(TeacherConfig::default(), file, a)?;
    let net = TeacherNetwork::random(cfg.d, cfg.r, cfg.seed)?;
    let t = net.tensorize(cfg.ell)?;
    let ms = generate(&t, &cfg.dist, cfg.n, cfg.seed)?.with_rank(cfg.r);
    let gap = ms
        .x
        .iter()
        .zip(&ms.y)
        .map(|(x, y)| (net.evaluate(x, cfg.ell) - y).abs() / y.abs().max(1.0))
        .fold(0.0, f64::max);

    let mut header = vec!["unit".to_string(), "a".to_string()];
    header.extend((1..=cfg.d).map(|j| format!("w{j}")));
    let mut weights = CsvTable::new(header);
    for (j, (aj, wj)) in net.a.iter().zip(&net.w).enumerate() {
        let mut row: Vec<Cell> = vec![j.into(), (*aj).into()];
        row.extend(wj.iter().map(|&x| Cell::Real(x)));
        weights.push(row);
    }
    let report = Report::new("teacher", to_value(&cfg)?)
        .csv("", ms.to_csv())
        .csv("_weights", weights.render())
        .constant("label_tol", LABEL_TOL)
        .summary(json!({ "max_label_gap": gap, "tensor_frobenius_norm": t.frobenius_norm() }))
        .require(gap <= LABEL_TOL, || format!("network output differs from tensor label by {gap:e}"));
    Ok(report)
}
