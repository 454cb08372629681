//! Fixtures and plain-array oracles shared by the integration tests.
//!
//! The oracles deliberately avoid nalgebra and the crate's own kernels: every
//! product is a hand-written loop over `Vec<Vec<f64>>`.

#![allow(dead_code)]

use dgmbb_core::graph::{metropolis_weights, Graph};
use dgmbb_core::{LeastSquaresInstance, WeightMatrix};
use nalgebra::{DMatrix, DVector};

pub type Stack = Vec<Vec<f64>>;

/// Per-agent measurement matrices of the 3-agent, 2-dimensional fixture.
pub const PATH3_M: [[[f64; 2]; 2]; 3] = [[[1.0, 0.0], [0.0, 0.8]], [[0.9, 0.1], [0.0, 0.75]], [[0.8, 0.0], [0.2, 0.9]]];
pub const PATH3_Y: [[f64; 2]; 3] = [[1.0, -0.5], [0.3, 0.8], [-0.6, 1.1]];
/// Metropolis weights of the path 0–1–2 (degrees 1, 2, 1).
pub const PATH3_W: [[f64; 3]; 3] =
    [[2.0 / 3.0, 1.0 / 3.0, 0.0], [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], [0.0, 1.0 / 3.0, 2.0 / 3.0]];
pub const PATH3_X0: [[f64; 2]; 3] = [[1.0, -1.0], [0.5, 2.0], [-0.3, 0.7]];
pub const PATH3_ALPHAS: [f64; 3] = [0.3, 0.45, 0.6];

pub fn path3_instance() -> LeastSquaresInstance {
    let ms = PATH3_M.iter().map(|m| DMatrix::from_row_slice(2, 2, &[m[0][0], m[0][1], m[1][0], m[1][1]])).collect();
    let ys = PATH3_Y.iter().map(|y| DVector::from_column_slice(y)).collect();
    LeastSquaresInstance::from_parts(ms, ys).unwrap()
}

pub fn path3_weights() -> WeightMatrix {
    metropolis_weights(&Graph::path(3).unwrap()).unwrap()
}

pub fn path3_x0() -> DMatrix<f64> {
    DMatrix::from_fn(3, 2, |i, c| PATH3_X0[i][c])
}

pub fn to_stack(m: &DMatrix<f64>) -> Stack {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|c| m[(i, c)]).collect()).collect()
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &Stack) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, row) in b.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            worst = worst.max((a[(i, c)] - v).abs());
        }
    }
    worst
}

/// `∇f_i(x) = M_iᵀ(M_i x − y_i)` for every row of `x`.
pub fn oracle_gradient(x: &Stack) -> Stack {
    x.iter()
        .enumerate()
        .map(|(i, xi)| {
            let m = &PATH3_M[i];
            let r: Vec<f64> = (0..2).map(|a| m[a][0] * xi[0] + m[a][1] * xi[1] - PATH3_Y[i][a]).collect();
            (0..2).map(|c| m[0][c] * r[0] + m[1][c] * r[1]).collect()
        })
        .collect()
}

pub fn mix(x: &Stack, rounds: usize) -> Stack {
    let mut cur = x.clone();
    for _ in 0..rounds {
        cur = (0..3)
            .map(|i| (0..cur[0].len()).map(|c| (0..3).map(|j| PATH3_W[i][j] * cur[j][c]).sum()).collect())
            .collect();
    }
    cur
}

pub fn add(a: &Stack, b: &Stack, scale: f64) -> Stack {
    a.iter().zip(b).map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x + scale * y).collect()).collect()
}

/// `x − diag(α) v`.
pub fn descend(x: &Stack, v: &Stack, alphas: &[f64]) -> Stack {
    x.iter()
        .zip(v)
        .zip(alphas)
        .map(|((rx, rv), a)| rx.iter().zip(rv).map(|(x, v)| x - a * v).collect())
        .collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Normal-equations optimum of the path fixture by Cramer's rule.
pub fn oracle_optimum() -> [f64; 2] {
    let (mut h, mut b) = ([[0.0; 2]; 2], [0.0; 2]);
    for i in 0..3 {
        let m = &PATH3_M[i];
        for r in 0..2 {
            for c in 0..2 {
                h[r][c] += m[0][r] * m[0][c] + m[1][r] * m[1][c];
            }
            b[r] += m[0][r] * PATH3_Y[i][0] + m[1][r] * PATH3_Y[i][1];
        }
    }
    let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    [(b[0] * h[1][1] - h[0][1] * b[1]) / det, (h[0][0] * b[1] - b[0] * h[1][0]) / det]
}
