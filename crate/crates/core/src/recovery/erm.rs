use nalgebra::{DMatrix, DVector, SVD};

use super::design::{design_matrix, DesignMatrix};
use super::{Estimate, RecoveryResult};
use crate::error::{Error, Result};
use crate::measurements::MeasurementSet;
use crate::symtensor::{sym_dim, SymmetricTensor};

/// Largest symmetric dimension for the square SVD used by the witness search.
pub const MAX_WITNESS_COLS: usize = 3000;

fn rank_tol(sigma_max: f64, rows: usize, cols: usize) -> f64 {
    sigma_max * rows.max(cols) as f64 * f64::EPSILON
}

/// Least-squares fit on the symmetric space.
///
/// With `N ≥ sym_dim` and a full-column-rank QR factor the zero-loss solution
/// is unique and flagged as such; otherwise the minimum-norm solution from the
/// SVD is returned and `unique` is false.
pub fn erm_solve(ms: &MeasurementSet) -> Result<RecoveryResult> {
    let dm = design_matrix(ms)?;
    let (n, p) = (dm.rows(), dm.cols());
    if n == 0 {
        let zero = SymmetricTensor::zeros(ms.d(), ms.ell())?;
        return Ok(RecoveryResult::finish(Estimate::Coefficients(zero), ms, 1, 0, 0.0).with_rank(false, 0));
    }
    let y = DVector::from_column_slice(&ms.y);

    if n >= p {
        let qr = dm.matrix.clone().qr();
        let r = qr.r();
        let diag_max = r.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = rank_tol(diag_max, n, p);
        if r.diagonal().iter().all(|v| v.abs() > tol) {
            let qty = qr.q().transpose() * &y;
            let x = r
                .solve_upper_triangular(&qty)
                .ok_or_else(|| Error::Degenerate("triangular solve failed".into()))?;
            let t = SymmetricTensor::from_values(ms.d(), ms.ell(), x.iter().copied().collect())?;
            return Ok(RecoveryResult::finish(Estimate::Coefficients(t), ms, 1, 0, 0.0).with_rank(true, p));
        }
    }

    let svd = SVD::new(dm.matrix.clone(), true, true);
    let smax = svd.singular_values.iter().fold(0.0f64, |m, v| m.max(*v));
    let tol = rank_tol(smax, n, p);
    let rank = svd.rank(tol);
    let x = svd
        .solve(&y, tol)
        .map_err(|e| Error::Degenerate(format!("SVD solve: {e}")))?;
    let t = SymmetricTensor::from_values(ms.d(), ms.ell(), x.iter().copied().collect())?;
    Ok(RecoveryResult::finish(Estimate::Coefficients(t), ms, 1, 0, 0.0).with_rank(false, rank))
}

/// A unit-Frobenius `T̄ ≠ 0` with `M · vec(T̄) ≈ 0`, or `None` when the
/// design matrix has full column rank.
pub fn null_space_witness(ms: &MeasurementSet) -> Result<Option<SymmetricTensor>> {
    let p = sym_dim(ms.d(), ms.ell())? as usize;
    if p > MAX_WITNESS_COLS {
        return Err(Error::capacity(format!(
            "witness search needs a {p}×{p} SVD (limit {MAX_WITNESS_COLS})"
        )));
    }
    let dm = design_matrix(ms)?;
    witness_from_design(&dm)
}

pub(crate) fn witness_from_design(dm: &DesignMatrix) -> Result<Option<SymmetricTensor>> {
    let (n, p) = (dm.rows(), dm.cols());
    // Pad to at least p rows so the SVD exposes a full basis of right vectors.
    let rows = n.max(p);
    let mut padded = DMatrix::zeros(rows, p);
    padded.view_mut((0, 0), (n, p)).copy_from(&dm.matrix);
    let svd = SVD::new(padded, false, true);
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let (k, smin) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, s)| (k, *s))
        .expect("non-empty");
    let smax = svd.singular_values.iter().fold(0.0f64, |m, v| m.max(*v));
    let scale = dm.norm_inf().max(f64::MIN_POSITIVE);
    if n >= p && smin > rank_tol(smax, rows, p) {
        return Ok(None);
    }
    let raw: Vec<f64> = v_t.row(k).iter().copied().collect();
    let t = SymmetricTensor::from_values(dm.d, dm.ell, raw)?;
    let norm = t.frobenius_norm();
    if norm == 0.0 {
        return Ok(None);
    }
    let t = t.scaled(1.0 / norm);
    let resid = dm.apply(&t)?.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if resid <= 1e-9 * scale {
        Ok(Some(t))
    } else {
        Ok(None)
    }
}
