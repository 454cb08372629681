//! Convergence certificates for DGM-BB-C.
//!
//! The consensus error, tracking error and optimality gap of DGM-BB-C obey
//! `v_{k+1} ≤ G^α v_k` entrywise, with `G^α` a nonnegative 3×3 matrix built
//! from `δ^R`, `L`, `μ`, `n` and the largest step `α_max`. When `ρ(G^α) < 1`
//! the iterates converge geometrically. A positive vector `c` with
//! `G^α c < c` witnesses `ρ(G^α) < 1`; choosing `c` well gives the smallest
//! `R` that makes such a witness exist for every `α_max ≤ 1/μ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Problem and network constants the certificate depends on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemConstants {
    #[serde(rename = "L")]
    pub lipschitz: f64,
    pub mu: f64,
    pub n: usize,
}

impl ProblemConstants {
    pub fn new(lipschitz: f64, mu: f64, n: usize) -> Result<Self> {
        if !(mu > 0.0 && mu <= lipschitz && lipschitz.is_finite()) || n == 0 {
            return Err(Error::invalid(format!("need 0 < mu <= L and n >= 1 (L={lipschitz}, mu={mu}, n={n})")));
        }
        Ok(ProblemConstants { lipschitz, mu, n })
    }

    fn sqrt_n(&self) -> f64 {
        (self.n as f64).sqrt()
    }

    /// Smallest admissible `c₃` for given `c₁, c₂`: `L(Lc₁ + c₂)/(μ²√n)`.
    pub fn c3_floor(&self, c1: f64, c2: f64) -> f64 {
        let (l, mu) = (self.lipschitz, self.mu);
        l * (l * c1 + c2) / (mu * mu * self.sqrt_n())
    }

    /// `2/L − μ/L²`, the mean-step ceiling of the convergence guarantee.
    pub fn mean_step_ceiling(&self) -> f64 {
        2.0 / self.lipschitz - self.mu / (self.lipschitz * self.lipschitz)
    }
}

pub type Matrix3 = [[f64; 3]; 3];

/// Comparison matrix with the optimality-gap contraction `λ` bounded by
/// `1 − μ/L`.
pub fn build_g_alpha(delta: f64, rounds: usize, k: &ProblemConstants, alpha_max: f64) -> Result<Matrix3> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::invalid(format!("delta={delta} outside [0, 1)")));
    }
    if rounds == 0 || !(alpha_max > 0.0) {
        return Err(Error::invalid("need R >= 1 and alpha_max > 0"));
    }
    Ok(g_alpha_with_lambda(delta.powi(rounds as i32), k, alpha_max, 1.0 - k.mu / k.lipschitz))
}

/// Comparison matrix for contraction `δ^R = d` and bottom-right entry `lambda`.
pub fn g_alpha_with_lambda(d: f64, k: &ProblemConstants, alpha: f64, lambda: f64) -> Matrix3 {
    let (l, sn) = (k.lipschitz, k.sqrt_n());
    [
        [d + d * l * alpha, d * alpha, d * l * sn * alpha],
        [2.0 * d * l + d * l * l * alpha, d + d * l * alpha, d * l * l * sn * alpha],
        [l * alpha / sn, alpha / sn, lambda],
    ]
}

/// `λ = max{|1 − μᾱ|, |1 − Lᾱ|}` for mean step `ᾱ`, the per-iteration
/// contraction of the averaged iterate.
pub fn lambda(mean_alpha: f64, k: &ProblemConstants) -> f64 {
    (1.0 - k.mu * mean_alpha).abs().max((1.0 - k.lipschitz * mean_alpha).abs())
}

/// Spectral radius of a nonnegative 3×3 matrix.
///
/// The Perron root is the largest real root of the characteristic cubic
/// `λ³ − tr λ² + m λ − det`. It is located through the critical points of the
/// cubic and refined by bisection, then cross-checked against a power
/// iteration on `G + I` accelerated by repeated squaring.
pub fn spectral_radius_3x3(g: &Matrix3) -> Result<f64> {
    if g.iter().flatten().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::invalid("spectral_radius_3x3 expects a finite nonnegative matrix"));
    }
    let root = perron_root_cubic(g);
    let power = perron_root_power(g)?;
    let scale = 1.0 + root.abs();
    if (root - power).abs() > 1e-12 * scale {
        return Err(Error::Numerical(format!(
            "spectral radius disagreement: cubic {root:.17e}, power iteration {power:.17e}, matrix {g:?}"
        )));
    }
    Ok(root)
}

fn cubic_coefficients(g: &Matrix3) -> (f64, f64, f64) {
    let tr = g[0][0] + g[1][1] + g[2][2];
    let minors = g[0][0] * g[1][1] - g[0][1] * g[1][0] + g[0][0] * g[2][2] - g[0][2] * g[2][0] + g[1][1] * g[2][2]
        - g[1][2] * g[2][1];
    let det = g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1]) - g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0])
        + g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0]);
    (tr, minors, det)
}

/// Largest real root of `p(λ) = λ³ − aλ² + bλ − c`.
fn perron_root_cubic(g: &Matrix3) -> f64 {
    let (a, b, c) = cubic_coefficients(g);
    let p = |x: f64| ((x - a) * x + b) * x - c;
    // Every root is bounded by the largest row sum of a nonnegative matrix.
    let upper = g.iter().map(|r| r.iter().sum::<f64>()).fold(0.0, f64::max);
    let hi = upper.max(0.0) + 1e-300;

    // Critical points of p: 3λ² − 2aλ + b = 0.
    let disc = a * a - 3.0 * b;
    let lo = if disc >= 0.0 {
        let sq = disc.sqrt();
        let r2 = (a + sq) / 3.0;
        let pr2 = p(r2);
        let tol = 64.0 * f64::EPSILON * (1.0 + a.abs() + b.abs() + c.abs()) * (1.0 + r2.abs()).powi(3);
        if pr2.abs() <= tol {
            // Double (or triple) root at the larger critical point.
            return r2.max(0.0);
        }
        if pr2 < 0.0 {
            r2
        } else {
            // The only real root lies left of the smaller critical point.
            let r1 = (a - sq) / 3.0;
            return bisect(&p, r1.min(0.0) - 1.0 - a.abs() - b.abs() - c.abs(), r1).max(0.0);
        }
    } else {
        // p is monotone; one real root.
        -1.0 - a.abs() - b.abs() - c.abs()
    };
    bisect(&p, lo, hi.max(lo))
}

fn bisect(p: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    // Invariant: p(lo) <= 0 <= p(hi) for an increasing crossing.
    if p(hi) < 0.0 {
        return hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if p(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Power method on the shifted matrix `G + I` with repeated squaring.
fn perron_root_power(g: &Matrix3) -> Result<f64> {
    let mut shifted = *g;
    for (i, row) in shifted.iter_mut().enumerate() {
        row[i] += 1.0;
    }
    let mut acc = shifted;
    for _ in 0..64 {
        acc = matmul(&acc, &acc);
        let scale = acc.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Numerical("power iteration collapsed".into()));
        }
        acc.iter_mut().flatten().for_each(|v| *v /= scale);
    }
    // Columns of the limit span the dominant eigenvector; take the largest.
    let col = (0..3)
        .max_by(|&i, &j| {
            let ni: f64 = (0..3).map(|r| acc[r][i].powi(2)).sum();
            let nj: f64 = (0..3).map(|r| acc[r][j].powi(2)).sum();
            ni.total_cmp(&nj)
        })
        .unwrap_or(0);
    let v = [acc[0][col], acc[1][col], acc[2][col]];
    let mut rho = 0.0;
    let mut v_cur = v;
    // A few plain power steps polish the estimate.
    for _ in 0..8 {
        let w = matvec(&shifted, &v_cur);
        let nv = norm(&v_cur);
        let nw = norm(&w);
        if !(nv > 0.0) {
            return Err(Error::Numerical("power iteration produced a zero vector".into()));
        }
        rho = nw / nv;
        v_cur = [w[0] / nw, w[1] / nw, w[2] / nw];
    }
    Ok(rho - 1.0)
}

fn matmul(a: &Matrix3, b: &Matrix3) -> Matrix3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn matvec(a: &Matrix3, v: &[f64; 3]) -> [f64; 3] {
    [
        a[0][0] * v[0] + a[0][1] * v[1] + a[0][2] * v[2],
        a[1][0] * v[0] + a[1][1] * v[1] + a[1][2] * v[2],
        a[2][0] * v[0] + a[2][1] * v[1] + a[2][2] * v[2],
    ]
}

fn norm(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn check_c(c: &[f64; 3], k: &ProblemConstants) -> Result<()> {
    if c.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::invalid(format!("c must be positive, got {c:?}")));
    }
    let floor = k.c3_floor(c[0], c[1]);
    if !(c[2] > floor) {
        return Err(Error::ConstraintViolated(format!("c3={} must exceed L(Lc1+c2)/(mu^2 sqrt n)={floor}", c[2])));
    }
    Ok(())
}

/// `C = Lc₁ + c₂ + L√n c₃`.
pub fn c_total(c: &[f64; 3], k: &ProblemConstants) -> f64 {
    k.lipschitz * c[0] + c[1] + k.lipschitz * k.sqrt_n() * c[2]
}

/// `Δ = min{μc₁/(C + μc₁), μc₂/(LC + 2Lμc₁ + μc₂)}`; `δ^R < Δ` is the
/// inner-loop requirement.
pub fn delta_bound(c: &[f64; 3], k: &ProblemConstants) -> Result<f64> {
    check_c(c, k)?;
    Ok(delta_terms(c, k).0.min(delta_terms(c, k).1))
}

/// Both terms of the minimum defining `Δ`.
pub fn delta_terms(c: &[f64; 3], k: &ProblemConstants) -> (f64, f64) {
    let (l, mu) = (k.lipschitz, k.mu);
    let big_c = c_total(c, k);
    (mu * c[0] / (big_c + mu * c[0]), mu * c[1] / (l * big_c + 2.0 * l * mu * c[0] + mu * c[1]))
}

/// Tolerance for deciding that `ln Δ / ln δ` is an integer.
pub const INTEGER_TOL: f64 = 1e-12;

/// `R_min = ⌈lnΔ/lnδ⌉ + φ(lnΔ/lnδ)`, with `φ(x) = 1` for positive integers.
/// `δ = 0` needs a single round.
pub fn min_inner_loops(big_delta: f64, delta: f64) -> Result<usize> {
    if !(big_delta > 0.0 && big_delta < 1.0) {
        return Err(Error::invalid(format!("Delta={big_delta} outside (0, 1)")));
    }
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::invalid(format!("delta={delta} outside [0, 1)")));
    }
    if delta == 0.0 {
        return Ok(1);
    }
    let x = big_delta.ln() / delta.ln();
    let nearest = x.round();
    let mut r = if nearest >= 1.0 && (x - nearest).abs() <= INTEGER_TOL {
        nearest as usize + 1
    } else {
        (x.ceil() as usize).max(1)
    };
    while !(delta.powi(r as i32) < big_delta) {
        r += 1;
    }
    Ok(r)
}

/// The three terms of the step-size ceiling `α̂`, or an error when
/// `δ^R ≥ c₂/(2Lc₁ + c₂)` makes the second one non-positive.
pub fn alpha_hat_terms(c: &[f64; 3], delta: f64, rounds: usize, k: &ProblemConstants) -> Result<[f64; 3]> {
    if c.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::invalid("c must be positive"));
    }
    let (l, mu) = (k.lipschitz, k.mu);
    let d = delta.powi(rounds as i32);
    if !(d < c[1] / (2.0 * l * c[0] + c[1])) {
        return Err(Error::ConstraintViolated(format!(
            "delta^R={d} must be below c2/(2Lc1+c2)={}",
            c[1] / (2.0 * l * c[0] + c[1])
        )));
    }
    let big_c = c_total(c, k);
    let third = mu * k.sqrt_n() * c[2] / (l * (l * c[0] + c[1]));
    if d == 0.0 {
        return Ok([f64::INFINITY, f64::INFINITY, third]);
    }
    Ok([
        (1.0 - d) * c[0] / (d * big_c),
        ((1.0 - d) * c[1] - 2.0 * d * l * c[0]) / (d * l * big_c),
        third,
    ])
}

/// `α̂`: any `α_max < α̂` makes `c` a witness for `ρ(G^α) < 1`.
pub fn alpha_hat(c: &[f64; 3], delta: f64, rounds: usize, k: &ProblemConstants) -> Result<f64> {
    let t = alpha_hat_terms(c, delta, rounds, k)?;
    Ok(t[0].min(t[1]).min(t[2]))
}

/// Relative margin kept above the `c₃` floor.
pub const C3_MARGIN: f64 = 1e-6;

fn normalized_delta(c2: f64, c3: f64, k: &ProblemConstants) -> f64 {
    let (a, b) = delta_terms(&[1.0, c2, c3], k);
    a.min(b)
}

fn project_c3(c2: f64, c3: f64, k: &ProblemConstants) -> f64 {
    c3.max(k.c3_floor(1.0, c2) * (1.0 + C3_MARGIN))
}

/// Picks `c` (normalized to `c₁ = 1`) maximizing `Δ`, which minimizes the
/// inner-loop bound. Coordinate search in log-space over `(c₂, c₃)` from a
/// 9×9 grid of log-spaced starts; `c₃` is kept `C3_MARGIN` above its floor.
pub fn select_c(k: &ProblemConstants, delta: f64) -> Result<([f64; 3], usize)> {
    let starts: Vec<f64> = (0..9).map(|i| 10f64.powf(-2.0 + 0.5 * i as f64)).collect();
    let mut best = (f64::NEG_INFINITY, 1.0, 1.0);
    for &c2_start in &starts {
        for &c3_mult in &starts {
            let mut c2 = c2_start;
            let mut c3 = project_c3(c2, k.c3_floor(1.0, c2) * (1.0 + c3_mult), k);
            let mut val = normalized_delta(c2, c3, k);
            let mut step = 1.0_f64;
            while step > 1e-12 {
                let mut improved = false;
                for (dc2, dc3) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
                    let n2 = c2 * dc2.exp();
                    let n3 = project_c3(n2, c3 * dc3.exp(), k);
                    let nv = normalized_delta(n2, n3, k);
                    if nv > val {
                        (c2, c3, val) = (n2, n3, nv);
                        improved = true;
                    }
                }
                if !improved {
                    step *= 0.5;
                }
            }
            if val > best.0 {
                best = (val, c2, c3);
            }
        }
    }
    let c = [1.0, best.1, best.2];
    let r = min_inner_loops(delta_bound(&c, k)?, delta)?;
    Ok((c, r))
}

/// Admissibility report for one `(problem, network, R, α_max)` configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub constants: ProblemConstants,
    pub delta: f64,
    pub rounds: usize,
    pub alpha_max: f64,
    pub c: [f64; 3],
    #[serde(rename = "C")]
    pub c_total: f64,
    #[serde(rename = "Delta")]
    pub big_delta: f64,
    pub r_min: usize,
    /// `None` when `δ^R ≥ c₂/(2Lc₁ + c₂)`.
    pub alpha_hat: Option<f64>,
    pub g_alpha: Matrix3,
    pub rho: f64,
    /// `ρ(G^α) < 1`.
    pub admissible: bool,
    /// `G^α c < c` entrywise.
    pub witness: bool,
    /// `α_max ≤ α̂`.
    pub alpha_within_hat: bool,
    pub rounds_sufficient: bool,
    pub mean_alpha_max: Option<f64>,
    /// Mean step below `2/L`.
    pub mean_step_below_2_over_l: Option<bool>,
    /// Mean step at most `2/L − μ/L²`.
    pub mean_step_below_ceiling: Option<bool>,
}

pub const CERTIFICATE_SCHEMA: &str = "dgmbb.certificate.v1";

impl Certificate {
    /// Adds the mean-step flags for a run's `ᾱ_max`.
    pub fn with_mean_step(mut self, mean_alpha_max: f64) -> Self {
        self.mean_alpha_max = Some(mean_alpha_max);
        self.mean_step_below_2_over_l = Some(mean_alpha_max < 2.0 / self.constants.lipschitz);
        self.mean_step_below_ceiling = Some(mean_alpha_max <= self.constants.mean_step_ceiling());
        self
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("certificate serializes");
        v.as_object_mut()
            .expect("struct serializes to an object")
            .insert("schema".into(), CERTIFICATE_SCHEMA.into());
        v
    }
}

/// Builds the full certificate: `c` from [`select_c`], `Δ`, `R_min`, `α̂`,
/// `G^α` and its spectral radius, plus the witness check `G^α c < c`.
pub fn certify(k: &ProblemConstants, delta: f64, rounds: usize, alpha_max: f64) -> Result<Certificate> {
    let g = build_g_alpha(delta, rounds, k, alpha_max)?;
    let rho = spectral_radius_3x3(&g)?;
    let (c, r_min) = select_c(k, delta)?;
    let big_delta = delta_bound(&c, k)?;
    let alpha_hat = alpha_hat(&c, delta, rounds, k).ok();
    let gc = matvec(&g, &c);
    Ok(Certificate {
        constants: *k,
        delta,
        rounds,
        alpha_max,
        c,
        c_total: c_total(&c, k),
        big_delta,
        r_min,
        alpha_hat,
        g_alpha: g,
        rho,
        admissible: rho < 1.0,
        witness: (0..3).all(|i| gc[i] < c[i]),
        alpha_within_hat: alpha_hat.is_some_and(|a| alpha_max <= a),
        rounds_sufficient: rounds >= r_min,
        mean_alpha_max: None,
        mean_step_below_2_over_l: None,
        mean_step_below_ceiling: None,
    })
}
