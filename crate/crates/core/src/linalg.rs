//! Small dense helpers shared by the topology and objective modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense matrix in row-major order, the layout used by every JSON fixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix with {} entries",
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

impl From<&DMatrix<f64>> for DenseMatrix {
    fn from(m: &DMatrix<f64>) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            data.extend(m.row(i).iter().copied());
        }
        DenseMatrix {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// `(λ_min, λ_max)` of a symmetric matrix.
pub fn extreme_eigenvalues(m: &DMatrix<f64>) -> (f64, f64) {
    let ev = symmetric_eigenvalues(m);
    (ev[0], ev[ev.len() - 1])
}

pub fn row(m: &DMatrix<f64>, i: usize) -> DVector<f64> {
    m.row(i).transpose()
}

/// Column means as a vector (the network average `x̄ = (1/n) 1ᵀ x`).
pub fn column_mean(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows() as f64;
    DVector::from_iterator(m.ncols(), m.column_iter().map(|c| c.sum() / n))
}

/// `‖m − 1 m̄‖_F`, the consensus violation.
pub fn consensus_violation(m: &DMatrix<f64>) -> f64 {
    let mean = column_mean(m);
    let mut acc = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let d = m[(i, j)] - mean[j];
            acc += d * d;
        }
    }
    acc.sqrt()
}

/// Uniform Gaussian matrix with orthonormal columns via QR.
pub(crate) fn orthonormal_columns(rng: &mut crate::rng::Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(rows, cols, |_, _| crate::rng::normal(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    // Sign fix so the draw is Haar distributed.
    for j in 0..cols {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_matrix_is_row_major() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let d = DenseMatrix::from(&m);
        assert_eq!(d.data, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(d.to_matrix().unwrap(), m);
    }

    #[test]
    fn wrong_length_is_rejected() {
        let d = DenseMatrix { rows: 2, cols: 2, data: vec![1.0; 3] };
        assert!(d.to_matrix().is_err());
    }

    #[test]
    fn orthonormal_draw() {
        let mut rng = crate::rng::seeded(4);
        let q = orthonormal_columns(&mut rng, 6, 4);
        let gram = q.transpose() * &q;
        assert!((gram - DMatrix::identity(4, 4)).abs().max() < 1e-12);
    }
}
