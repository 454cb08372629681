//! Local Barzilai–Borwein step sizes.
//!
//! Each agent forms `s = x_k − x_{k−1}` and `z = ∇f_i(x_k) − ∇f_i(x_{k−1})`
//! from its own history and picks either the long step `sᵀs / sᵀz` or the
//! short step `sᵀz / zᵀz`. For a μ-strongly convex `f_i` with L-Lipschitz
//! gradient both land in `[1/L, 1/μ]`, and the short step never exceeds the
//! long one.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BbVariant {
    /// `sᵀs / sᵀz`
    Long,
    /// `sᵀz / zᵀz`
    #[default]
    Short,
}

impl std::str::FromStr for BbVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "long" | "bb1" => Ok(BbVariant::Long),
            "short" | "bb2" => Ok(BbVariant::Short),
            other => Err(format!("unknown BB variant {other:?} (expected long|short)")),
        }
    }
}

impl std::fmt::Display for BbVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BbVariant::Long => "long",
            BbVariant::Short => "short",
        })
    }
}

/// Iterate and gradient differences of one agent.
#[derive(Debug, Clone, Copy)]
pub struct CurvaturePair<'a> {
    pub s: &'a [f64],
    pub z: &'a [f64],
}

/// Why a BB formula produced no step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BbFallback {
    /// The agent did not move (`s = 0`).
    ZeroStep,
    /// `sᵀz ≤ 0`, impossible in exact arithmetic for strongly convex `f_i`.
    NonPositiveCurvature,
    /// `z = 0` with `s ≠ 0`.
    ZeroGradientChange,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl CurvaturePair<'_> {
    fn products(&self) -> Result<(f64, f64, f64), BbFallback> {
        debug_assert_eq!(self.s.len(), self.z.len());
        let ss = dot(self.s, self.s);
        if ss == 0.0 {
            return Err(BbFallback::ZeroStep);
        }
        let sz = dot(self.s, self.z);
        if sz <= 0.0 || !sz.is_finite() {
            return Err(BbFallback::NonPositiveCurvature);
        }
        Ok((ss, sz, dot(self.z, self.z)))
    }
}

/// `sᵀs / sᵀz`.
pub fn bb_long(pair: CurvaturePair<'_>) -> Result<f64, BbFallback> {
    let (ss, sz, _) = pair.products()?;
    Ok(ss / sz)
}

/// `sᵀz / zᵀz`.
pub fn bb_short(pair: CurvaturePair<'_>) -> Result<f64, BbFallback> {
    let (_, sz, zz) = pair.products()?;
    if zz == 0.0 {
        return Err(BbFallback::ZeroGradientChange);
    }
    Ok(sz / zz)
}

pub fn bb_step(variant: BbVariant, pair: CurvaturePair<'_>) -> Result<f64, BbFallback> {
    match variant {
        BbVariant::Long => bb_long(pair),
        BbVariant::Short => bb_short(pair),
    }
}

/// `1/L − tol ≤ α ≤ 1/μ + tol`.
pub fn assert_bb_bounds(alpha: f64, lipschitz: f64, mu: f64, tol: f64) -> bool {
    alpha >= 1.0 / lipschitz - tol && alpha <= 1.0 / mu + tol
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_curvature() {
        let s = [0.3, -1.2, 2.0];
        let pair = CurvaturePair { s: &s, z: &s };
        assert_eq!(bb_long(pair), Ok(1.0));
        assert_eq!(bb_short(pair), Ok(1.0));
    }

    #[test]
    fn scalar_ratio() {
        let pair = CurvaturePair { s: &[1.0, 0.0], z: &[2.0, 0.0] };
        assert_eq!(bb_long(pair), Ok(0.5));
    }

    #[test]
    fn diagonal_hessian_fixture() {
        // H = diag(0.5, 1), s = (1, 1) => z = (0.5, 1).
        let pair = CurvaturePair { s: &[1.0, 1.0], z: &[0.5, 1.0] };
        let long = bb_long(pair).unwrap();
        let short = bb_short(pair).unwrap();
        assert!((long - 4.0 / 3.0).abs() < 1e-15);
        assert!((short - 1.2).abs() < 1e-15);
        assert!(short <= long);
        assert!(assert_bb_bounds(long, 1.0, 0.5, 0.0));
        assert!(assert_bb_bounds(short, 1.0, 0.5, 0.0));
    }

    #[test]
    fn degenerate_pairs_signal_fallback() {
        let zero = [0.0, 0.0];
        assert_eq!(bb_long(CurvaturePair { s: &zero, z: &zero }), Err(BbFallback::ZeroStep));
        assert_eq!(bb_short(CurvaturePair { s: &zero, z: &[1.0, 0.0] }), Err(BbFallback::ZeroStep));
        let neg = CurvaturePair { s: &[1.0, 0.0], z: &[-1.0, 0.0] };
        assert_eq!(bb_long(neg), Err(BbFallback::NonPositiveCurvature));
        assert_eq!(bb_short(neg), Err(BbFallback::NonPositiveCurvature));
        let flat = CurvaturePair { s: &[1.0, 0.0], z: &[0.0, 0.0] };
        assert_eq!(bb_short(flat), Err(BbFallback::NonPositiveCurvature));
    }

    #[test]
    fn bounds_check() {
        assert!(assert_bb_bounds(1.0, 1.0, 0.5, 1e-9));
        assert!(!assert_bb_bounds(2.5, 1.0, 0.5, 1e-9));
        assert!(!assert_bb_bounds(0.9, 1.0, 0.5, 1e-9));
        assert!(assert_bb_bounds(2.0 + 5e-10, 1.0, 0.5, 1e-9));
    }

    #[test]
    fn variant_parsing() {
        assert_eq!("long".parse::<BbVariant>(), Ok(BbVariant::Long));
        assert_eq!("short".parse::<BbVariant>(), Ok(BbVariant::Short));
        assert!("medium".parse::<BbVariant>().is_err());
        assert_eq!(BbVariant::default(), BbVariant::Short);
    }
}
