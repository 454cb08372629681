use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use dgmbb_core::graph::{generate_erdos_renyi, metropolis_weights};
use dgmbb_core::harness::{run_experiment, write_atomic, ExperimentOutcome, MethodSpec};
use dgmbb_core::objective::{generate_sensing_instance, SensingSpec};
use dgmbb_core::theory::{alpha_hat, certify, delta_bound, min_inner_loops, select_c};
use dgmbb_core::{Error, ExperimentPlan, Method, ProblemConstants};

use crate::report;
use crate::{CompareArgs, GenerateCommand, PlanArgs, RunArgs, Status, SweepArgs, TheoryArgs};

fn load_plan(args: &PlanArgs) -> Result<ExperimentPlan> {
    let mut plan =
        ExperimentPlan::from_file(&args.plan).with_context(|| format!("loading {}", args.plan.display()))?;
    if let Some(out) = &args.output {
        // Relative to the working directory, not the plan file.
        plan.output = Some(std::env::current_dir()?.join(out));
    }
    if let Some(seed) = args.seed {
        plan.seed = seed;
    }
    if let Some(m) = args.max_iters {
        plan.stop.max_iters = m;
    }
    if let Some(t) = args.target {
        plan.stop.target = t;
    }
    plan.validate()?;
    Ok(plan)
}

/// Runs the plan; a divergence is reported and turned into `Failed` after
/// its artifacts have been written.
fn execute(plan: &ExperimentPlan) -> Result<Option<ExperimentOutcome>> {
    match run_experiment(plan) {
        Ok(outcome) => Ok(Some(outcome)),
        Err(e @ Error::Diverged { .. }) => {
            eprintln!("error: {e}");
            if let Some(dir) = plan.output_dir() {
                eprintln!("partial results written to {}", dir.display());
            }
            Ok(None)
        }
        Err(e) => Err(e.into()),
    }
}

fn finish(outcome: &ExperimentOutcome) -> Status {
    let failures = outcome.invariant_failures();
    for (label, msg) in &failures {
        eprintln!("invariant failed in {label}: {msg}");
    }
    if let Some(path) = &outcome.summary {
        eprintln!("wrote {}", path.display());
    }
    if failures.is_empty() {
        Status::Ok
    } else {
        Status::Failed
    }
}

fn matches_entry(spec: &MethodSpec, key: &str) -> bool {
    spec.label() == key || key.parse::<Method>().is_ok_and(|m| m == spec.method)
}

pub fn run(args: RunArgs) -> Result<Status> {
    let mut plan = load_plan(&args.plan)?;
    let keep = match &args.method {
        Some(key) => plan
            .methods
            .iter()
            .position(|m| matches_entry(m, key))
            .with_context(|| format!("no method entry matches {key:?}"))?,
        None => 0,
    };
    plan.methods = vec![plan.methods.swap_remove(keep)];
    let Some(outcome) = execute(&plan)? else { return Ok(Status::Failed) };
    report::print_runs(&outcome, args.plan.at, args.plan.json, false)?;
    Ok(finish(&outcome))
}

pub fn compare(args: CompareArgs) -> Result<Status> {
    let plan = load_plan(&args.plan)?;
    let Some(outcome) = execute(&plan)? else { return Ok(Status::Failed) };
    report::print_runs(&outcome, args.plan.at, args.plan.json, true)?;
    Ok(finish(&outcome))
}

pub fn sweep(args: SweepArgs) -> Result<Status> {
    let mut plan = load_plan(&args.plan)?;
    let by_alpha = !args.alpha0.is_empty();
    plan.methods.retain(|m| if by_alpha { m.method == Method::DgmBbC } else { m.method.uses_inner_rounds() });
    if plan.methods.is_empty() {
        bail!("the plan has no {} entry to sweep", if by_alpha { "dgm-bb-c" } else { "dgm-bb-c or dgm-c" });
    }
    plan.sweep.alpha0 = args.alpha0;
    plan.sweep.rounds = args.rounds;
    plan.sweep.target = Some(args.plan.at);
    plan.validate()?;
    let Some(outcome) = execute(&plan)? else { return Ok(Status::Failed) };
    if args.plan.json {
        report::print_runs(&outcome, args.plan.at, true, false)?;
    } else {
        report::print_sweep(&plan, &outcome, by_alpha)?;
    }
    Ok(finish(&outcome))
}

pub fn theory(args: TheoryArgs) -> Result<Status> {
    let (k, delta) = match &args.plan {
        Some(path) => {
            let setup = ExperimentPlan::from_file(path)?.setup()?;
            (setup.constants, setup.weights.delta())
        }
        None => {
            let (Some(l), Some(mu), Some(n), Some(delta)) = (args.lipschitz, args.mu, args.n, args.delta) else {
                bail!("--L, --mu, --n and --delta are required without --plan");
            };
            (ProblemConstants::new(l, mu, n)?, delta)
        }
    };
    if !matches!(args.c.len(), 0 | 3) {
        bail!("--c takes exactly three values, got {}", args.c.len());
    }
    let (_, r_min) = select_c(&k, delta)?;
    let rounds = args.rounds.unwrap_or(r_min);
    let alpha_max = args.alpha_max.unwrap_or(1.0 / k.mu);
    let cert = certify(&k, delta, rounds, alpha_max)?;
    let mut doc = cert.to_json();
    if let [c1, c2, c3] = args.c[..] {
        let c = [c1, c2, c3];
        let big_delta = delta_bound(&c, &k)?;
        let r = min_inner_loops(big_delta, delta)?;
        doc["supplied_c"] = serde_json::json!({
            "c": c,
            "Delta": big_delta,
            "r_min": r,
            "alpha_hat": alpha_hat(&c, delta, rounds, &k).ok(),
        });
    }
    println!("{}", serde_json::to_string_pretty(&doc)?);
    let certified = cert.admissible && cert.rounds_sufficient;
    Ok(if args.require_admissible && !certified { Status::Failed } else { Status::Ok })
}

fn emit(text: String, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => {
            write_atomic(path, text.as_bytes())?;
            eprintln!("wrote {}", path.display());
        }
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn lines(mut s: String) -> String {
    s.push('\n');
    s
}

pub fn generate(cmd: GenerateCommand) -> Result<Status> {
    match cmd {
        GenerateCommand::Instance { n, m, p, lipschitz, mu, noise, seed, output } => {
            let spec = SensingSpec { n, m, p, lipschitz, mu, noise };
            emit(lines(serde_json::to_string_pretty(&generate_sensing_instance(&spec, seed)?)?), output.as_deref())?;
        }
        GenerateCommand::Graph { n, r_c, seed, weights, output } => {
            let g = generate_erdos_renyi(n, r_c, seed)?;
            let text = if weights {
                serde_json::to_string_pretty(&metropolis_weights(&g)?)?
            } else {
                serde_json::to_string_pretty(&g)?
            };
            emit(lines(text), output.as_deref())?;
        }
        GenerateCommand::Plan { r_c, seed, output } => {
            let methods = Method::ALL.into_iter().map(MethodSpec::new).collect();
            let mut plan = ExperimentPlan::reference(seed, r_c, methods);
            plan.name = "reference".into();
            plan.validate()?;
            emit(plan.to_toml()?, output.as_deref())?;
        }
    }
    Ok(Status::Ok)
}
