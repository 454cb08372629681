use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::tune::TuneOptions;
use crate::bb::BbVariant;
use crate::error::{Error, Result};
use crate::graph::{generate_erdos_renyi, metropolis_weights, Graph, WeightMatrix};
use crate::objective::{generate_sensing_instance, LeastSquaresInstance, Objective, SensingSpec};
use crate::rng::{derive_seed, STREAM_GRAPH, STREAM_INSTANCE};
use crate::solvers::{Method, ERROR_FLOOR};
use crate::theory::{select_c, ProblemConstants};

pub const PLAN_SCHEMA_VERSION: u32 = 1;
/// `α₀` used when a DGM-BB-C entry does not set one.
pub const DEFAULT_ALPHA0: f64 = 1.4;
/// Per-agent multiplier range applied to tuned steps of ATC-DIGing and DGM-C.
pub const DEFAULT_PERTURBATION: [f64; 2] = [0.6, 1.2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InstanceSource {
    Sensing {
        #[serde(flatten)]
        spec: SensingSpec,
        /// Overrides the seed derived from the plan seed.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    /// Instance JSON (`dgmbb.instance.v1`).
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphSource {
    ErdosRenyi {
        r_c: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Path,
    Complete,
    /// Graph JSON (`dgmbb.graph.v1`); Metropolis weights are built from it.
    File { path: PathBuf },
    /// Weight-matrix JSON (`dgmbb.weights.v1`) used as-is.
    Weights { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostWeights {
    pub c_c: f64,
    pub c_g: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        CostWeights { c_c: 1.0, c_g: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StopSpec {
    pub max_iters: usize,
    pub target: f64,
}

impl Default for StopSpec {
    fn default() -> Self {
        StopSpec { max_iters: 1000, target: ERROR_FLOOR }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Auto {
    Auto,
}

/// `R` given explicitly or `"auto"` for the certificate's `R_min`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RoundsSpec {
    Fixed(usize),
    Auto(Auto),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tuned {
    Tuned,
}

/// A constant step given explicitly or `"tuned"` by grid search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StepSpec {
    Value(f64),
    Tuned(Tuned),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// DGM-BB-C and DGM-C only; defaults to `"auto"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounds: Option<RoundsSpec>,
    /// DGM-BB-C only; defaults to `short`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bb: Option<BbVariant>,
    /// DGM-BB-C only; defaults to [`DEFAULT_ALPHA0`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha0: Option<f64>,
    /// Constant-step methods only; defaults to `"tuned"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<StepSpec>,
    /// Per-agent uniform multipliers `[lo, hi]` on the constant step.
    /// Defaults to [`DEFAULT_PERTURBATION`] for ATC-DIGing and DGM-C.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturb: Option<[f64; 2]>,
}

impl MethodSpec {
    pub fn new(method: Method) -> Self {
        MethodSpec { method, label: None, rounds: None, bb: None, alpha0: None, step: None, perturb: None }
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.method.name().to_string())
    }

    pub fn rounds_spec(&self) -> RoundsSpec {
        self.rounds.unwrap_or(RoundsSpec::Auto(Auto::Auto))
    }

    pub fn step_spec(&self) -> StepSpec {
        self.step.unwrap_or(StepSpec::Tuned(Tuned::Tuned))
    }

    pub fn perturbation(&self) -> Option<[f64; 2]> {
        self.perturb
            .or_else(|| matches!(self.method, Method::AtcDiging | Method::DgmC).then_some(DEFAULT_PERTURBATION))
    }

    fn validate(&self) -> Result<()> {
        let m = self.method;
        let bad = |what: &str| Err(Error::Plan(format!("{what} does not apply to {m}")));
        if self.rounds.is_some() && !m.uses_inner_rounds() {
            return bad("rounds");
        }
        if (self.bb.is_some() || self.alpha0.is_some()) && m != Method::DgmBbC {
            return bad("bb/alpha0");
        }
        if (self.step.is_some() || self.perturb.is_some()) && !m.uses_constant_step() {
            return bad("step/perturb");
        }
        if let Some(RoundsSpec::Fixed(0)) = self.rounds {
            return Err(Error::Plan("rounds must be at least 1".into()));
        }
        if let Some(a) = self.alpha0 {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::Plan(format!("alpha0 must be positive, got {a}")));
            }
        }
        if let Some(StepSpec::Value(a)) = self.step {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::Plan(format!("step must be positive, got {a}")));
            }
        }
        if let Some([lo, hi]) = self.perturb {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(Error::Plan(format!("perturbation range [{lo}, {hi}] is invalid")));
            }
        }
        Ok(())
    }
}

/// Optional axes expanded for every DGM-BB-C entry (`alpha0`) and every
/// multi-consensus entry (`rounds`).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepAxes {
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub alpha0: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub rounds: Vec<usize>,
    /// Accuracy at which sweep points are compared (default `1e-8`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
}

pub const DEFAULT_SWEEP_TARGET: f64 = 1e-8;

/// A complete, versioned experiment description (TOML on disk).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub schema_version: u32,
    #[serde(default = "default_name")]
    pub name: String,
    /// Plan-level seed; component seeds are derived from it.
    #[serde(default)]
    pub seed: u64,
    pub instance: InstanceSource,
    pub graph: GraphSource,
    #[serde(default)]
    pub cost: CostWeights,
    #[serde(default)]
    pub stop: StopSpec,
    #[serde(default)]
    pub tuning: TuneOptions,
    #[serde(default)]
    pub methods: Vec<MethodSpec>,
    #[serde(default)]
    pub sweep: SweepAxes,
    /// Directory for CSV files and `summary.json`; nothing is written when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_name() -> String {
    "experiment".into()
}

/// Materialized problem data of a plan.
#[derive(Debug, Clone)]
pub struct Setup {
    pub instance: LeastSquaresInstance,
    pub graph: Option<Graph>,
    pub weights: WeightMatrix,
    pub instance_seed: Option<u64>,
    pub graph_seed: Option<u64>,
    pub constants: ProblemConstants,
    /// `c` selected for the realized spectral gap, and its `R_min`.
    pub c: [f64; 3],
    pub r_min: usize,
}

impl ExperimentPlan {
    pub fn new(seed: u64, instance: InstanceSource, graph: GraphSource, methods: Vec<MethodSpec>) -> Self {
        ExperimentPlan {
            schema_version: PLAN_SCHEMA_VERSION,
            name: default_name(),
            seed,
            instance,
            graph,
            cost: CostWeights::default(),
            stop: StopSpec::default(),
            tuning: TuneOptions::default(),
            methods,
            sweep: SweepAxes::default(),
            output: None,
            base_dir: PathBuf::new(),
        }
    }

    /// The sensing benchmark (`n = 200, m_i = 20, p = 10, L = 1, μ = 0.5`)
    /// on an Erdős–Rényi graph with connection probability `r_c`.
    pub fn reference(seed: u64, r_c: f64, methods: Vec<MethodSpec>) -> Self {
        Self::new(
            seed,
            InstanceSource::Sensing { spec: SensingSpec::reference(), seed: None },
            GraphSource::ErdosRenyi { r_c, seed: None },
            methods,
        )
    }

    pub fn from_toml_str(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut plan: ExperimentPlan = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        plan.base_dir = base_dir.into();
        plan.validate()?;
        Ok(plan)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml_str(&text, base)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_dir(&self) -> Option<PathBuf> {
        self.output.as_deref().map(|p| self.resolve(p))
    }

    pub fn sweep_target(&self) -> f64 {
        self.sweep.target.unwrap_or(DEFAULT_SWEEP_TARGET)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != PLAN_SCHEMA_VERSION {
            return Err(Error::Plan(format!(
                "unsupported schema_version {} (expected {PLAN_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.methods.is_empty() {
            return Err(Error::Plan("at least one method is required".into()));
        }
        for m in &self.methods {
            m.validate()?;
        }
        if !(self.cost.c_c >= 0.0 && self.cost.c_g >= 0.0) {
            return Err(Error::Plan("cost weights must be nonnegative".into()));
        }
        if !(self.stop.target >= 0.0) || self.stop.max_iters == 0 {
            return Err(Error::Plan("stop.target must be >= 0 and stop.max_iters >= 1".into()));
        }
        if self.sweep.alpha0.iter().any(|a| !(*a > 0.0)) || self.sweep.rounds.contains(&0) {
            return Err(Error::Plan("sweep axes must hold positive values".into()));
        }
        if self.tuning.points == 0 || !(self.tuning.lo > 0.0 && self.tuning.lo <= self.tuning.hi) {
            return Err(Error::Plan("tuning grid is empty or inverted".into()));
        }
        if let GraphSource::ErdosRenyi { r_c, .. } = self.graph {
            if !(r_c > 0.0 && r_c <= 1.0) {
                return Err(Error::Plan(format!("r_c={r_c} outside (0, 1]")));
            }
        }
        for p in self.referenced_files() {
            if !p.exists() {
                return Err(Error::Plan(format!("referenced file {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    fn referenced_files(&self) -> Vec<PathBuf> {
        let mut out = Vec::new();
        if let InstanceSource::File { path } = &self.instance {
            out.push(self.resolve(path));
        }
        if let GraphSource::File { path } | GraphSource::Weights { path } = &self.graph {
            out.push(self.resolve(path));
        }
        out
    }

    /// Builds the instance, graph, weights and certificate constants.
    pub fn setup(&self) -> Result<Setup> {
        let (instance, instance_seed) = match &self.instance {
            InstanceSource::Sensing { spec, seed } => {
                let s = seed.unwrap_or_else(|| derive_seed(self.seed, STREAM_INSTANCE));
                (generate_sensing_instance(spec, s)?, Some(s))
            }
            InstanceSource::File { path } => {
                let text = std::fs::read_to_string(self.resolve(path))?;
                (serde_json::from_str(&text)?, None)
            }
        };
        let n = instance.agents();
        let (graph, weights, graph_seed) = match &self.graph {
            GraphSource::ErdosRenyi { r_c, seed } => {
                let s = seed.unwrap_or_else(|| derive_seed(self.seed, STREAM_GRAPH));
                let g = generate_erdos_renyi(n, *r_c, s)?;
                let w = metropolis_weights(&g)?;
                (Some(g), w, Some(s))
            }
            GraphSource::Path => {
                let g = Graph::path(n)?;
                let w = metropolis_weights(&g)?;
                (Some(g), w, None)
            }
            GraphSource::Complete => {
                let g = Graph::complete(n)?;
                let w = metropolis_weights(&g)?;
                (Some(g), w, None)
            }
            GraphSource::File { path } => {
                let g: Graph = serde_json::from_str(&std::fs::read_to_string(self.resolve(path))?)?;
                let w = metropolis_weights(&g)?;
                (Some(g), w, None)
            }
            GraphSource::Weights { path } => {
                let w: WeightMatrix = serde_json::from_str(&std::fs::read_to_string(self.resolve(path))?)?;
                (None, w, None)
            }
        };
        if weights.n() != n {
            return Err(Error::DimensionMismatch(format!("graph has {} agents, instance has {n}", weights.n())));
        }
        let constants = ProblemConstants::new(instance.lipschitz(), instance.strong_convexity(), n)?;
        let (c, r_min) = select_c(&constants, weights.delta())?;
        Ok(Setup { instance, graph, weights, instance_seed, graph_seed, constants, c, r_min })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PLAN: &str = r#"
schema_version = 1
name = "smoke"
seed = 11

[instance]
kind = "sensing"
n = 6
m = 5
p = 3
L = 1.0
mu = 0.5

[graph]
kind = "erdos_renyi"
r_c = 0.6

[stop]
max_iters = 200
target = 1e-10

[[methods]]
method = "dgm-bb-c"
rounds = "auto"
alpha0 = 1.0

[[methods]]
method = "atc-diging"
step = 0.8

[[methods]]
method = "dgd"
step = "tuned"
"#;

    #[test]
    fn parses_toml() {
        let plan = ExperimentPlan::from_toml_str(PLAN, ".").unwrap();
        assert_eq!(plan.methods.len(), 3);
        assert_eq!(plan.methods[0].rounds_spec(), RoundsSpec::Auto(Auto::Auto));
        assert_eq!(plan.methods[1].step_spec(), StepSpec::Value(0.8));
        assert_eq!(plan.methods[1].perturbation(), Some(DEFAULT_PERTURBATION));
        assert_eq!(plan.methods[2].step_spec(), StepSpec::Tuned(Tuned::Tuned));
        assert_eq!(plan.methods[2].perturbation(), None);
        assert_eq!(plan.cost, CostWeights { c_c: 1.0, c_g: 1.0 });
        let again = ExperimentPlan::from_toml_str(&plan.to_toml().unwrap(), ".").unwrap();
        assert_eq!(again, plan);
    }

    #[test]
    fn empty_method_list_rejected() {
        let text = PLAN.split("[[methods]]").next().unwrap();
        assert!(matches!(ExperimentPlan::from_toml_str(text, "."), Err(Error::Plan(_))));
    }

    #[test]
    fn wrong_version_and_misplaced_keys_rejected() {
        let v2 = PLAN.replace("schema_version = 1", "schema_version = 2");
        assert!(ExperimentPlan::from_toml_str(&v2, ".").is_err());
        let bad = PLAN.replace("step = 0.8", "alpha0 = 0.8");
        assert!(ExperimentPlan::from_toml_str(&bad, ".").is_err());
        let unknown = PLAN.replace("name = \"smoke\"", "nmae = \"smoke\"");
        assert!(matches!(ExperimentPlan::from_toml_str(&unknown, "."), Err(Error::Config(_))));
    }

    #[test]
    fn missing_fixture_rejected() {
        let text = PLAN.replace("kind = \"erdos_renyi\"\nr_c = 0.6", "kind = \"file\"\npath = \"nope.json\"");
        assert!(matches!(ExperimentPlan::from_toml_str(&text, "/nonexistent"), Err(Error::Plan(_))));
    }

    #[test]
    fn setup_is_deterministic() {
        let plan = ExperimentPlan::from_toml_str(PLAN, ".").unwrap();
        let a = plan.setup().unwrap();
        let b = plan.setup().unwrap();
        assert_eq!(a.graph, b.graph);
        assert_eq!(a.instance.optimum(), b.instance.optimum());
        assert_eq!(a.instance_seed, Some(derive_seed(11, STREAM_INSTANCE)));
        assert!(a.r_min >= 1);
    }
}
