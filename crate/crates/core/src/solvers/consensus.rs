use nalgebra::DMatrix;

use crate::graph::WeightMatrix;

/// Sparse view of `W`: for every agent, the weights of itself and its
/// neighbours. Applying it simulates one synchronous exchange round.
#[derive(Debug, Clone)]
pub struct Mixing {
    rows: Vec<Vec<(usize, f64)>>,
}

impl Mixing {
    pub fn new(w: &WeightMatrix) -> Self {
        Self::from_dense(w.matrix())
    }

    pub(crate) fn from_dense(w: &DMatrix<f64>) -> Self {
        let rows = (0..w.nrows())
            .map(|i| {
                (0..w.ncols())
                    .filter(|&j| w[(i, j)] != 0.0)
                    .map(|j| (j, w[(i, j)]))
                    .collect()
            })
            .collect();
        Mixing { rows }
    }

    pub fn agents(&self) -> usize {
        self.rows.len()
    }

    /// One round: `out = W v`.
    pub fn apply(&self, v: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(v.nrows(), v.ncols());
        for c in 0..v.ncols() {
            let col = v.column(c);
            let mut dst = out.column_mut(c);
            for (i, row) in self.rows.iter().enumerate() {
                dst[i] = row.iter().map(|&(j, w)| w * col[j]).sum();
            }
        }
        out
    }
}

/// `Wᴿ v` as `R` successive rounds; adds `R` to `comms`.
pub fn consensus_sweep(v: DMatrix<f64>, mixing: &Mixing, rounds: usize, comms: &mut u64) -> DMatrix<f64> {
    let mut cur = v;
    for _ in 0..rounds {
        cur = mixing.apply(&cur);
    }
    *comms += rounds as u64;
    cur
}
