use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::measurements::MeasurementSet;
use crate::symtensor::{Basis, SymmetricTensor};

/// Largest `N · sym_dim` accepted for a dense design matrix.
pub const MAX_DESIGN_ENTRIES: u64 = 10_000_000;

/// `M[i][α] = N_α Π_j X_i(j)^{α_j}`, columns in canonical multi-index order,
/// so `M · vec(T)` are the labels of `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub d: usize,
    pub ell: u32,
    pub matrix: DMatrix<f64>,
}

pub fn design_matrix(ms: &MeasurementSet) -> Result<DesignMatrix> {
    let basis = Basis::get(ms.d(), ms.ell())?;
    let n = ms.len();
    let p = basis.len();
    if (n as u64).saturating_mul(p as u64) > MAX_DESIGN_ENTRIES {
        return Err(Error::capacity(format!(
            "design matrix {n}×{p} exceeds {MAX_DESIGN_ENTRIES} entries"
        )));
    }
    let mut matrix = DMatrix::zeros(n, p);
    let mut row = vec![0.0; p];
    for (i, x) in ms.x.iter().enumerate() {
        crate::error::check_dim(ms.d(), x.len())?;
        basis.monomials_into(x, &mut row);
        for (j, (m, w)) in row.iter().zip(basis.weights_f64()).enumerate() {
            matrix[(i, j)] = m * w;
        }
    }
    Ok(DesignMatrix {
        d: ms.d(),
        ell: ms.ell(),
        matrix,
    })
}

impl DesignMatrix {
    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    /// `M · vec(T)`.
    pub fn apply(&self, t: &SymmetricTensor) -> Result<Vec<f64>> {
        crate::error::check_dim(self.cols(), t.values().len())?;
        let v = DVector::from_column_slice(t.values());
        Ok((&self.matrix * v).iter().copied().collect())
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        self.matrix
            .row_iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}
