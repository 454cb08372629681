//! Multi-agent smooth strongly convex objectives `f(x) = (1/n) Σ f_i(x)` and
//! the distributed least-squares sensing problem.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{extreme_eigenvalues, orthonormal_columns, DenseMatrix};
use crate::rng;

pub const INSTANCE_SCHEMA: &str = "dgmbb.instance.v1";

/// Default measurement noise scale for generated instances.
pub const DEFAULT_NOISE: f64 = 0.01;

/// Per-agent smooth strongly convex objectives.
///
/// `lipschitz` and `strong_convexity` must bound every agent's gradient
/// individually, since the local BB step bounds rely on per-agent constants.
pub trait Objective: Sync {
    fn agents(&self) -> usize;
    fn dim(&self) -> usize;
    fn value(&self, agent: usize, x: &[f64]) -> f64;
    fn gradient_into(&self, agent: usize, x: &[f64], out: &mut [f64]);
    fn lipschitz(&self) -> f64;
    fn strong_convexity(&self) -> f64;

    /// `z = ∇f_i(x_new) − ∇f_i(x_old)` for the step `s = x_new − x_old`.
    ///
    /// The default subtracts the two gradients. Objectives with a known
    /// Hessian should return `∇²f_i·s` instead: once `‖s‖` approaches the
    /// rounding level of `‖x‖` the subtraction cancels and the BB quotient
    /// built from `(s, z)` leaves `[1/L, 1/μ]`.
    fn gradient_difference_into(&self, agent: usize, s: &[f64], g_new: &[f64], g_old: &[f64], out: &mut [f64]) {
        let _ = (agent, s);
        for ((o, a), b) in out.iter_mut().zip(g_new).zip(g_old) {
            *o = a - b;
        }
    }

    fn gradient(&self, agent: usize, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.gradient_into(agent, x, &mut out);
        out
    }

    /// Stacked local gradients `∇f(X)`, row `i` evaluated at row `i` of `x`.
    fn stacked_gradient(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let (n, p) = (self.agents(), self.dim());
        let mut out = DMatrix::zeros(n, p);
        let mut xi = vec![0.0; p];
        let mut gi = vec![0.0; p];
        for i in 0..n {
            for (c, v) in xi.iter_mut().enumerate() {
                *v = x[(i, c)];
            }
            self.gradient_into(i, &xi, &mut gi);
            for (c, v) in gi.iter().enumerate() {
                out[(i, c)] = *v;
            }
        }
        out
    }

    /// `f(x) = (1/n) Σ f_i(x)`.
    fn average_value(&self, x: &[f64]) -> f64 {
        (0..self.agents()).map(|i| self.value(i, x)).sum::<f64>() / self.agents() as f64
    }

    fn average_gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut acc = vec![0.0; self.dim()];
        let mut g = vec![0.0; self.dim()];
        for i in 0..self.agents() {
            self.gradient_into(i, x, &mut g);
            for (a, b) in acc.iter_mut().zip(&g) {
                *a += b;
            }
        }
        let n = self.agents() as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        acc
    }
}

#[derive(Debug, Clone)]
struct Agent {
    m: DMatrix<f64>,
    y: DVector<f64>,
    // Cached M_iᵀM_i and M_iᵀy_i; the gradient is `hessian·x − rhs`.
    hessian: DMatrix<f64>,
    rhs: DVector<f64>,
}

/// `f_i(x) = ½‖M_i x − y_i‖²` for each agent.
#[derive(Debug, Clone)]
pub struct LeastSquaresInstance {
    agents: Vec<Agent>,
    p: usize,
    x_star: DVector<f64>,
    lipschitz: f64,
    strong_convexity: f64,
    signal: Option<DVector<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct InstanceFile {
    schema: String,
    n: usize,
    p: usize,
    agents: Vec<AgentFile>,
    x_star: Vec<f64>,
    lipschitz: f64,
    mu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    signal: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct AgentFile {
    m: DenseMatrix,
    y: Vec<f64>,
}

impl Serialize for LeastSquaresInstance {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        InstanceFile {
            schema: INSTANCE_SCHEMA.to_string(),
            n: self.agents.len(),
            p: self.p,
            agents: self
                .agents
                .iter()
                .map(|a| AgentFile { m: DenseMatrix::from(&a.m), y: a.y.iter().copied().collect() })
                .collect(),
            x_star: self.x_star.iter().copied().collect(),
            lipschitz: self.lipschitz,
            mu: self.strong_convexity,
            signal: self.signal.as_ref().map(|v| v.iter().copied().collect()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LeastSquaresInstance {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let f = InstanceFile::deserialize(d)?;
        if f.schema != INSTANCE_SCHEMA {
            return Err(D::Error::custom(format!("unknown instance schema {:?}", f.schema)));
        }
        let mut ms = Vec::with_capacity(f.agents.len());
        let mut ys = Vec::with_capacity(f.agents.len());
        for a in f.agents {
            ms.push(a.m.to_matrix().map_err(D::Error::custom)?);
            ys.push(DVector::from_vec(a.y));
        }
        let mut inst = LeastSquaresInstance::from_parts(ms, ys).map_err(D::Error::custom)?;
        if inst.agents.len() != f.n || inst.p != f.p {
            return Err(D::Error::custom("instance header disagrees with agent data"));
        }
        // The file's constants may be looser bounds than the realized ones.
        if f.lipschitz < inst.lipschitz * (1.0 - 1e-12) || f.mu > inst.strong_convexity * (1.0 + 1e-12) {
            return Err(D::Error::custom("stated L/mu do not bound the agent Hessians"));
        }
        inst.lipschitz = f.lipschitz;
        inst.strong_convexity = f.mu;
        inst.signal = f.signal.map(DVector::from_vec);
        Ok(inst)
    }
}

impl LeastSquaresInstance {
    /// Builds an instance from raw measurements. `L` and `μ` are the uniform
    /// per-agent bounds `max_i λ_max(M_iᵀM_i)` and `min_i λ_min(M_iᵀM_i)`;
    /// every agent must be strongly convex on its own.
    pub fn from_parts(ms: Vec<DMatrix<f64>>, ys: Vec<DVector<f64>>) -> Result<Self> {
        if ms.is_empty() || ms.len() != ys.len() {
            return Err(Error::DimensionMismatch(format!("{} matrices, {} measurement vectors", ms.len(), ys.len())));
        }
        let p = ms[0].ncols();
        if p == 0 {
            return Err(Error::invalid("decision dimension must be positive"));
        }
        let mut agents = Vec::with_capacity(ms.len());
        let mut lipschitz = 0.0_f64;
        let mut strong_convexity = f64::INFINITY;
        for (i, (m, y)) in ms.into_iter().zip(ys).enumerate() {
            if m.ncols() != p || m.nrows() != y.len() {
                return Err(Error::DimensionMismatch(format!(
                    "agent {i}: M is {}x{}, y has {} entries, p={p}",
                    m.nrows(),
                    m.ncols(),
                    y.len()
                )));
            }
            let hessian = m.transpose() * &m;
            let rhs = m.transpose() * &y;
            let (lo, hi) = extreme_eigenvalues(&hessian);
            lipschitz = lipschitz.max(hi);
            strong_convexity = strong_convexity.min(lo);
            agents.push(Agent { m, y, hessian, rhs });
        }
        if strong_convexity <= 1e-12 * lipschitz.max(1.0) {
            return Err(Error::RankDeficient(format!(
                "an agent Hessian has smallest eigenvalue {strong_convexity:e}"
            )));
        }
        let mut inst = LeastSquaresInstance {
            agents,
            p,
            x_star: DVector::zeros(p),
            lipschitz,
            strong_convexity,
            signal: None,
        };
        inst.x_star = inst.solve_normal_equations()?;
        Ok(inst)
    }

    fn solve_normal_equations(&self) -> Result<DVector<f64>> {
        let mut h = DMatrix::zeros(self.p, self.p);
        let mut b = DVector::zeros(self.p);
        for a in &self.agents {
            h += &a.hessian;
            b += &a.rhs;
        }
        let chol = h.cholesky().ok_or(Error::SingularSystem)?;
        Ok(chol.solve(&b))
    }

    /// The unique minimizer, from the normal equations
    /// `(Σ M_iᵀM_i) x = Σ M_iᵀ y_i`.
    pub fn optimum(&self) -> &DVector<f64> {
        &self.x_star
    }

    /// Planted ground-truth signal, when the instance was generated.
    pub fn signal(&self) -> Option<&DVector<f64>> {
        self.signal.as_ref()
    }

    pub fn measurement(&self, agent: usize) -> (&DMatrix<f64>, &DVector<f64>) {
        (&self.agents[agent].m, &self.agents[agent].y)
    }

    pub fn agent_hessian(&self, agent: usize) -> &DMatrix<f64> {
        &self.agents[agent].hessian
    }

    /// `(1/n) Σ M_iᵀM_i`.
    pub fn average_hessian(&self) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(self.p, self.p);
        for a in &self.agents {
            h += &a.hessian;
        }
        h / self.agents.len() as f64
    }

    /// Extreme eigenvalues `(μ, L)` of the average Hessian.
    pub fn hessian_spectrum_bounds(&self) -> (f64, f64) {
        extreme_eigenvalues(&self.average_hessian())
    }

    /// `M_iᵀ(M_i x − y_i)` evaluated from the measurements (not the cached
    /// normal-equation form used on the solver hot path).
    pub fn local_gradient(&self, agent: usize, x: &DVector<f64>) -> DVector<f64> {
        let a = &self.agents[agent];
        a.m.transpose() * (&a.m * x - &a.y)
    }

    /// Norm of the averaged gradient at `x*`.
    pub fn stationarity_residual(&self) -> f64 {
        let g = self.average_gradient(self.x_star.as_slice());
        g.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl Objective for LeastSquaresInstance {
    fn agents(&self) -> usize {
        self.agents.len()
    }

    fn dim(&self) -> usize {
        self.p
    }

    fn value(&self, agent: usize, x: &[f64]) -> f64 {
        let a = &self.agents[agent];
        let r = &a.m * DVector::from_column_slice(x) - &a.y;
        0.5 * r.norm_squared()
    }

    fn gradient_into(&self, agent: usize, x: &[f64], out: &mut [f64]) {
        let a = &self.agents[agent];
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = -a.rhs[r];
            for (c, xc) in x.iter().enumerate() {
                acc += a.hessian[(r, c)] * xc;
            }
            *o = acc;
        }
    }

    /// Exact for a quadratic: `z = M_iᵀM_i s`.
    fn gradient_difference_into(&self, agent: usize, s: &[f64], _: &[f64], _: &[f64], out: &mut [f64]) {
        let h = &self.agents[agent].hessian;
        for (r, o) in out.iter_mut().enumerate() {
            *o = s.iter().enumerate().map(|(c, sc)| h[(r, c)] * sc).sum();
        }
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn strong_convexity(&self) -> f64 {
        self.strong_convexity
    }
}

/// Parameters of the synthetic distributed sensing problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensingSpec {
    pub n: usize,
    /// Measurements per agent.
    pub m: usize,
    pub p: usize,
    #[serde(rename = "L")]
    pub lipschitz: f64,
    pub mu: f64,
    #[serde(default = "default_noise")]
    pub noise: f64,
}

fn default_noise() -> f64 {
    DEFAULT_NOISE
}

impl SensingSpec {
    /// `n = 200, m_i = 20, p = 10, L = 1, μ = 0.5`.
    pub fn reference() -> Self {
        SensingSpec { n: 200, m: 20, p: 10, lipschitz: 1.0, mu: 0.5, noise: DEFAULT_NOISE }
    }
}

/// Generates `y_i = M_i·signal + noise·e_i` with Gaussian data.
///
/// Each Gaussian draw `M_i = U Σ Vᵀ` keeps its left singular vectors; its
/// squared singular values are mapped affinely onto `[μ, L]` and its right
/// singular vectors are replaced so the extreme directions are shared by all
/// agents. That makes every `M_iᵀM_i` have spectrum in `[μ, L]` with both
/// endpoints attained, and the average Hessian spans exactly `[μ, L]` too.
pub fn generate_sensing_instance(spec: &SensingSpec, seed: u64) -> Result<LeastSquaresInstance> {
    let SensingSpec { n, m, p, lipschitz, mu, noise } = *spec;
    if n == 0 || p == 0 {
        return Err(Error::invalid("n and p must be positive"));
    }
    if !(mu > 0.0 && mu <= lipschitz && lipschitz.is_finite()) {
        return Err(Error::invalid(format!("need 0 < mu <= L, got mu={mu}, L={lipschitz}")));
    }
    if noise < 0.0 {
        return Err(Error::invalid("noise scale must be nonnegative"));
    }
    if m * n < p || m < p {
        return Err(Error::RankDeficient(format!(
            "m_i={m} measurements per agent cannot make a {p}-dimensional local problem strongly convex"
        )));
    }
    if p == 1 && mu != lipschitz {
        return Err(Error::RankDeficient("p = 1 admits only mu = L".into()));
    }

    let mut rng = rng::seeded(seed);
    let shared = orthonormal_columns(&mut rng, p, p);
    let signal = DVector::from_fn(p, |_, _| rng::normal(&mut rng));

    let mut ms = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let draw = DMatrix::from_fn(m, p, |_, _| rng::normal(&mut rng));
        let svd = draw.svd(true, false);
        let u = svd.u.expect("left singular vectors requested");
        // nalgebra does not promise an order; sort descending.
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let sq: Vec<f64> = order.iter().map(|&k| svd.singular_values[k].powi(2)).collect();
        let (hi, lo) = (sq[0], sq[p - 1]);
        if p > 1 && hi - lo <= 1e-12 * hi {
            return Err(Error::RankDeficient("degenerate Gaussian draw".into()));
        }
        let eig: Vec<f64> = sq
            .iter()
            .map(|&s| if p == 1 { lipschitz } else { mu + (lipschitz - mu) * (s - lo) / (hi - lo) })
            .collect();

        // Right basis: [u_max, rotated complement, u_min].
        let mut v = DMatrix::zeros(p, p);
        v.set_column(0, &shared.column(0));
        if p > 1 {
            v.set_column(p - 1, &shared.column(1));
        }
        if p > 2 {
            let rot = orthonormal_columns(&mut rng, p - 2, p - 2);
            let complement = shared.columns(2, p - 2) * rot;
            for k in 0..p - 2 {
                v.set_column(k + 1, &complement.column(k));
            }
        }

        let mut mi = DMatrix::zeros(m, p);
        for (slot, &k) in order.iter().enumerate() {
            let scaled = u.column(k) * eig[slot].sqrt();
            mi += scaled * v.column(slot).transpose();
        }
        let e = DVector::from_fn(m, |_, _| rng::normal(&mut rng));
        ys.push(&mi * &signal + e * noise);
        ms.push(mi);
    }

    let mut inst = LeastSquaresInstance::from_parts(ms, ys)?;
    let (lo, hi) = inst.hessian_spectrum_bounds();
    let tol = 1e-9 * lipschitz.max(1.0);
    if (lo - mu).abs() > tol || (hi - lipschitz).abs() > tol {
        return Err(Error::Numerical(format!(
            "average Hessian spectrum [{lo}, {hi}] misses target [{mu}, {lipschitz}]"
        )));
    }
    // Report the targets exactly; the realized per-agent bounds agree to rounding.
    inst.lipschitz = lipschitz;
    inst.strong_convexity = mu;
    inst.signal = Some(signal);
    Ok(inst)
}
