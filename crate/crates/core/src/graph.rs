//! Network topology: connected undirected graphs, Metropolis mixing weights,
//! and the spectral gap `δ = ‖W − (1/n)11ᵀ‖₂`.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigenvalues;
use crate::rng;

/// Resampling budget for disconnected Erdős–Rényi draws.
pub const MAX_RESAMPLES: usize = 1000;

/// Tolerance on row and column sums of a mixing matrix.
pub const STOCHASTIC_TOL: f64 = 1e-12;

pub const GRAPH_SCHEMA: &str = "dgmbb.graph.v1";
pub const WEIGHTS_SCHEMA: &str = "dgmbb.weights.v1";

/// Simple, connected, undirected graph on agents `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphFile", into = "GraphFile")]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GraphFile {
    schema: String,
    n: usize,
    edges: Vec<[usize; 2]>,
}

impl TryFrom<GraphFile> for Graph {
    type Error = Error;

    fn try_from(f: GraphFile) -> Result<Self> {
        if f.schema != GRAPH_SCHEMA {
            return Err(Error::invalid(format!("unknown graph schema {:?}", f.schema)));
        }
        Graph::new(f.n, f.edges.into_iter().map(|[i, j]| (i, j)))
    }
}

impl From<Graph> for GraphFile {
    fn from(g: Graph) -> Self {
        GraphFile {
            schema: GRAPH_SCHEMA.to_string(),
            n: g.n,
            edges: g.edges.iter().map(|&(i, j)| [i, j]).collect(),
        }
    }
}

impl Graph {
    /// Builds a graph from an edge list. Edges are stored as `(min, max)` in
    /// sorted order; self-loops, duplicates, out-of-range endpoints and
    /// disconnected graphs are rejected.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let g = Self::unchecked(n, edges)?;
        if !g.is_connected() {
            return Err(Error::Disconnected);
        }
        Ok(g)
    }

    fn unchecked(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("graph needs at least one agent"));
        }
        let mut list = Vec::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::invalid(format!("edge ({a},{b}) out of range for n={n}")));
            }
            if a == b {
                return Err(Error::invalid(format!("self-loop at agent {a}")));
            }
            list.push((a.min(b), a.max(b)));
        }
        list.sort_unstable();
        if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::invalid(format!("duplicate edge {:?}", w[0])));
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(i, j) in &list {
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
        for nb in &mut adjacency {
            nb.sort_unstable();
        }
        Ok(Graph { n, edges: list, adjacency })
    }

    pub fn path(n: usize) -> Result<Self> {
        Self::new(n, (1..n).map(|i| (i - 1, i)))
    }

    pub fn complete(n: usize) -> Result<Self> {
        Self::new(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].binary_search(&j).is_ok()
    }

    pub fn mean_degree(&self) -> f64 {
        2.0 * self.edges.len() as f64 / self.n as f64
    }

    /// Breadth-first search from agent 0 reaches every agent.
    pub fn is_connected(&self) -> bool {
        self.reachable_from(0) == self.n
    }

    pub fn reachable_from(&self, start: usize) -> usize {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count
    }
}

/// Erdős–Rényi `G(n, r_c)` conditioned on connectivity.
///
/// Pairs `(i, j)` with `i < j` are visited in lexicographic order and kept
/// when a uniform draw falls below `r_c`. A disconnected sample is discarded
/// and the whole draw repeated with `seed + 1`, up to [`MAX_RESAMPLES`] times.
pub fn generate_erdos_renyi(n: usize, r_c: f64, seed: u64) -> Result<Graph> {
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    if !(r_c > 0.0 && r_c <= 1.0) {
        return Err(Error::invalid(format!("connectivity ratio {r_c} outside (0, 1]")));
    }
    for attempt in 0..MAX_RESAMPLES {
        let mut rng = rng::seeded(seed.wrapping_add(attempt as u64));
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng::uniform01(&mut rng) < r_c {
                    edges.push((i, j));
                }
            }
        }
        let g = Graph::unchecked(n, edges)?;
        if g.is_connected() {
            if attempt > 0 {
                log::debug!("Erdős–Rényi draw connected after {} resamples", attempt);
            }
            return Ok(g);
        }
    }
    Err(Error::RetriesExhausted { n, r_c, attempts: MAX_RESAMPLES })
}

/// Symmetric doubly stochastic mixing matrix with its spectral gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WeightsFile", into = "WeightsFile")]
pub struct WeightMatrix {
    w: DMatrix<f64>,
    delta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct WeightsFile {
    schema: String,
    n: usize,
    /// Row-major `n × n` entries.
    weights: Vec<f64>,
    delta: f64,
}

impl TryFrom<WeightsFile> for WeightMatrix {
    type Error = Error;

    fn try_from(f: WeightsFile) -> Result<Self> {
        if f.schema != WEIGHTS_SCHEMA {
            return Err(Error::invalid(format!("unknown weights schema {:?}", f.schema)));
        }
        if f.weights.len() != f.n * f.n {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for n={}",
                f.weights.len(),
                f.n
            )));
        }
        WeightMatrix::from_matrix(DMatrix::from_row_slice(f.n, f.n, &f.weights))
    }
}

impl From<WeightMatrix> for WeightsFile {
    fn from(w: WeightMatrix) -> Self {
        let n = w.n();
        let mut weights = Vec::with_capacity(n * n);
        for i in 0..n {
            weights.extend(w.w.row(i).iter().copied());
        }
        WeightsFile {
            schema: WEIGHTS_SCHEMA.to_string(),
            n,
            weights,
            delta: w.delta,
        }
    }
}

impl WeightMatrix {
    /// Validates a user-supplied mixing matrix (symmetric, doubly stochastic,
    /// nonnegative, `δ < 1`) and records its spectral gap.
    pub fn from_matrix(w: DMatrix<f64>) -> Result<Self> {
        if !w.is_square() || w.nrows() == 0 {
            return Err(Error::DimensionMismatch("mixing matrix must be square".into()));
        }
        let report = validate_weights(&w, None, STOCHASTIC_TOL);
        if !(report.row_sums && report.column_sums && report.symmetric && report.nonnegative) {
            return Err(Error::invalid(format!(
                "mixing matrix is not symmetric doubly stochastic: {report:?}"
            )));
        }
        let delta = spectral_gap(&w)?;
        Ok(WeightMatrix { w, delta })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn n(&self) -> usize {
        self.w.nrows()
    }

    /// `‖W − (1/n)11ᵀ‖₂`.
    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// Metropolis constant edge weights: `w_ij = 1 / (1 + max(deg_i, deg_j))` on
/// edges, the remainder of each row on the diagonal.
pub fn metropolis_weights(g: &Graph) -> Result<WeightMatrix> {
    let n = g.n();
    let mut w = DMatrix::zeros(n, n);
    for &(i, j) in g.edges() {
        let v = 1.0 / (1 + g.degree(i).max(g.degree(j))) as f64;
        w[(i, j)] = v;
        w[(j, i)] = v;
    }
    for i in 0..n {
        let off: f64 = g.neighbors(i).iter().map(|&j| w[(i, j)]).sum();
        w[(i, i)] = 1.0 - off;
    }
    let delta = spectral_gap(&w)?;
    Ok(WeightMatrix { w, delta })
}

/// Largest absolute eigenvalue of `W − (1/n)11ᵀ` for symmetric `W`.
fn deflated_norm(w: &DMatrix<f64>) -> f64 {
    let n = w.nrows();
    let avg = 1.0 / n as f64;
    let deflated = w.map(|v| v - avg);
    symmetric_eigenvalues(&deflated).into_iter().fold(0.0, |m, e| m.max(e.abs()))
}

/// Spectral gap `δ` of a symmetric doubly stochastic matrix. Values at or
/// above `1 − 1e-12` indicate a disconnected graph or invalid weights.
pub fn spectral_gap(w: &DMatrix<f64>) -> Result<f64> {
    let delta = deflated_norm(w);
    if delta >= 1.0 - 1e-12 {
        return Err(Error::SpectralGapTooLarge { delta });
    }
    Ok(delta)
}

/// Diagnostic checklist for a candidate mixing matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightReport {
    pub row_sums: bool,
    pub column_sums: bool,
    pub symmetric: bool,
    pub nonnegative: bool,
    /// `None` when no graph was supplied.
    pub sparsity: Option<bool>,
    pub delta: f64,
    pub delta_below_one: bool,
    pub max_row_sum_error: f64,
    pub max_column_sum_error: f64,
}

impl WeightReport {
    pub fn passed(&self) -> bool {
        self.row_sums
            && self.column_sums
            && self.symmetric
            && self.nonnegative
            && self.sparsity.unwrap_or(true)
            && self.delta_below_one
    }
}

pub fn validate_weights(w: &DMatrix<f64>, graph: Option<&Graph>, tol: f64) -> WeightReport {
    let n = w.nrows();
    let max_row_sum_error = (0..n).map(|i| (w.row(i).sum() - 1.0).abs()).fold(0.0, f64::max);
    let max_column_sum_error = (0..w.ncols())
        .map(|j| (w.column(j).sum() - 1.0).abs())
        .fold(0.0, f64::max);
    let symmetric = w.is_square() && (0..n).all(|i| (0..i).all(|j| (w[(i, j)] - w[(j, i)]).abs() <= tol));
    let nonnegative = w.iter().all(|&v| v >= 0.0);
    let sparsity = graph.map(|g| {
        g.n() == n
            && (0..n).all(|i| (0..n).all(|j| i == j || w[(i, j)] == 0.0 || g.has_edge(i, j)))
    });
    let delta = if w.is_square() { deflated_norm(w) } else { f64::NAN };
    WeightReport {
        row_sums: max_row_sum_error <= tol,
        column_sums: max_column_sum_error <= tol,
        symmetric,
        nonnegative,
        sparsity,
        delta,
        delta_below_one: delta < 1.0 - 1e-12,
        max_row_sum_error,
        max_column_sum_error,
    }
}
