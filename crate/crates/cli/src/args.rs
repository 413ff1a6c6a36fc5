//! Command-line surface. Every experiment flag is optional so that unset
//! flags fall through to the config file and then to the library defaults.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;
use symrec::DistributionSpec;

use crate::output::OUT_DIR_ENV;

#[derive(Debug, Parser)]
#[command(
    name = "symrec",
    version,
    about = "Seeded experiments on symmetric tensor recovery from rank-one measurements",
    after_help = "Unset flags are read from --config (a JSON object), then from built-in defaults.\n\
                  Exit status: 0 success, 1 invalid input, 2 capacity exceeded, 3 experiment assertion failed."
)]
pub struct Cli {
    /// JSON object whose keys are the subcommand's parameters; flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Directory for CSV and manifest files.
    #[arg(long, global = true, value_name = "DIR", env = OUT_DIR_ENV, default_value = ".")]
    pub out_dir: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Materialize a rank-one sum into canonical coefficients.
    Expand(ExpandArgs),
    /// Evaluate a closed-form bound.
    #[command(subcommand)]
    Bounds(BoundsCommand),
    /// Build and verify a Gilbert–Varshamov packing of rank-r tensors.
    Pack(PackArgs),
    /// Least-squares recovery and null-space witnesses.
    Erm(ErmArgs),
    /// Rank-constrained recovery of random teacher tensors.
    Recover(RecoverArgs),
    /// Search for a unit rank-2r tensor invisible to the measurements.
    Probe(ProbeArgs),
    /// Decoding error on a packing against the Fano lower bound.
    FanoSim(FanoArgs),
    /// Small-ball probabilities against the anti-concentration bound.
    Anticonc(AnticoncArgs),
    /// Sample a teacher network and its tensorized measurements.
    Teacher(TeacherArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Expand(_) => "expand",
            Command::Bounds(_) => "bounds",
            Command::Pack(_) => "pack",
            Command::Erm(_) => "erm",
            Command::Recover(_) => "recover",
            Command::Probe(_) => "probe",
            Command::FanoSim(_) => "fano-sim",
            Command::Anticonc(_) => "anticonc",
            Command::Teacher(_) => "teacher",
        }
    }
}

fn parse_json(s: &str) -> Result<Value, String> {
    serde_json::from_str(s).map_err(|e| e.to_string())
}

#[derive(Debug, Args, Serialize)]
pub struct ExpandArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Explicit terms as JSON, e.g. `[[1.0, [1, 0]], [-2.0, [0.5, 0.5]]]`.
    #[arg(long, value_parser = parse_json)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub terms: Option<Value>,
}

#[derive(Debug, Subcommand)]
pub enum BoundsCommand {
    /// Log covering number of unit rank-2r symmetric tensors.
    Covering(CoveringArgs),
    /// Log covering number of the subset-of-codewords family.
    CoveringCp(CoveringArgs),
    /// Anti-concentration bound `C·ℓ·(ε/√E⟨T,X⟩²)^{1/ℓ}`.
    Cw(CwArgs),
    /// Sample size `⌈C·r·d⌉`.
    Threshold(ThresholdArgs),
    /// Fano lower bound on the decoding error.
    Fano(FanoBoundArgs),
}

impl BoundsCommand {
    pub fn name(&self) -> &'static str {
        match self {
            BoundsCommand::Covering(_) => "covering",
            BoundsCommand::CoveringCp(_) => "covering-cp",
            BoundsCommand::Cw(_) => "cw",
            BoundsCommand::Threshold(_) => "threshold",
            BoundsCommand::Fano(_) => "fano",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct CoveringArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[arg(long = "C", visible_alias = "c")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct CwArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub second_moment: Option<f64>,
    #[arg(long = "C", visible_alias = "c")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct ThresholdArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<u32>,
    #[arg(long = "C", visible_alias = "c")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct FanoBoundArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Natural log of the packing size.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_psi: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    /// Integer bound B of the measurement alphabet.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<u32>,
}

#[derive(Debug, Args, Serialize)]
pub struct PackArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    /// Number of packing members M.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub members: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub codebook_size: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_attempts: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct ErmArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    /// Witness scales λ, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dist: Option<DistributionSpec>,
}

#[derive(Debug, Args, Serialize)]
pub struct RecoverArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    /// Sample-size constant, N = ⌈C·r·d⌉.
    #[arg(long = "C", visible_alias = "c")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    /// Explicit sample size, overriding C.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub success_tol: Option<f64>,
    /// Fail with exit status 3 when the success rate is below this.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_success: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dist: Option<DistributionSpec>,
}

#[derive(Debug, Args, Serialize)]
pub struct ProbeArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    /// Fail with exit status 3 unless the probe value is at most this.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expect_below: Option<f64>,
    /// Fail with exit status 3 unless the probe value is at least this.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expect_above: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dist: Option<DistributionSpec>,
}

#[derive(Debug, Args, Serialize)]
pub struct FanoArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    /// Packing size |Ψ|.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub members: Option<usize>,
    /// Integer bound B of the measurement alphabet.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<u32>,
    /// Sample sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ns: Option<Vec<usize>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct AnticoncArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_lo: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_hi: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    #[arg(long = "C", visible_alias = "c")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dist: Option<DistributionSpec>,
}

#[derive(Debug, Args, Serialize)]
pub struct TeacherArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    /// Hidden width.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dist: Option<DistributionSpec>,
}
