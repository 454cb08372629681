use std::io::Write;

use anyhow::Result;
use dgmbb_core::harness::{run_summary, ExperimentOutcome, SUMMARY_SCHEMA};
use dgmbb_core::{ExperimentPlan, Objective};

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "-".into(), |v| v.to_string())
}

fn sci(v: f64) -> String {
    format!("{v:.3e}")
}

fn header(out: &mut impl Write, outcome: &ExperimentOutcome) -> Result<()> {
    let s = &outcome.setup;
    writeln!(
        out,
        "n={} p={} L={} mu={} delta={:.4} R_min={}",
        s.constants.n,
        s.instance.dim(),
        s.constants.lipschitz,
        s.constants.mu,
        s.weights.delta(),
        s.r_min
    )?;
    for (key, t) in &outcome.tuned {
        writeln!(out, "tuned {key}: alpha={} ({} iterations)", sci(t.alpha), opt(t.iterations))?;
    }
    Ok(())
}

/// One line per run; with `rank`, ordered by cost to reach `at` (runs that
/// never reach it last).
pub fn print_runs(outcome: &ExperimentOutcome, at: f64, json: bool, rank: bool) -> Result<()> {
    let mut runs: Vec<_> = outcome.runs.iter().collect();
    if rank {
        runs.sort_by(|a, b| {
            let ca = a.record.first_reaching(at).map_or(f64::INFINITY, |r| r.cost);
            let cb = b.record.first_reaching(at).map_or(f64::INFINITY, |r| r.cost);
            ca.total_cmp(&cb)
        });
    }
    let mut out = std::io::stdout().lock();
    if json {
        let doc = serde_json::json!({
            "schema": SUMMARY_SCHEMA,
            "at": at,
            "runs": runs.iter().map(|r| run_summary(&r.cell.label, &r.record)).collect::<Vec<_>>(),
        });
        writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
        return Ok(());
    }
    header(&mut out, outcome)?;
    writeln!(
        out,
        "{:<22} {:<14} {:>6} {:>10} {:>8} {:>8} {:>10} {:>10} {:>7}",
        "label", "status", "iters", "rel_err", "k@at", "comm@at", "cost@at", "alpha_max", "rho"
    )?;
    for r in runs {
        let rec = &r.record;
        let hit = rec.first_reaching(at);
        let status = serde_json::to_value(rec.status)?;
        writeln!(
            out,
            "{:<22} {:<14} {:>6} {:>10} {:>8} {:>8} {:>10} {:>10} {:>7}",
            r.cell.label,
            status.as_str().unwrap_or("?"),
            rec.iterations(),
            sci(rec.final_rel_err()),
            opt(hit.map(|h| h.k)),
            opt(hit.map(|h| h.comm_rounds)),
            opt(hit.map(|h| format!("{:.1}", h.cost))),
            if rec.diagnostics.alpha_max > 0.0 { format!("{:.4}", rec.diagnostics.alpha_max) } else { "-".into() },
            opt(rec.meta.certificate.as_ref().map(|c| format!("{:.4}", c.rho))),
        )?;
    }
    Ok(())
}

/// Per-entry sweep tables with the spread `max/min` of iterations-to-target.
pub fn print_sweep(plan: &ExperimentPlan, outcome: &ExperimentOutcome, by_alpha: bool) -> Result<()> {
    let at = plan.sweep_target();
    let mut out = std::io::stdout().lock();
    header(&mut out, outcome)?;
    let axis = if by_alpha { "alpha0" } else { "R" };
    for (entry, spec) in plan.methods.iter().enumerate() {
        let runs: Vec<_> = outcome.runs.iter().filter(|r| r.cell.entry == entry).collect();
        writeln!(out, "\n{} ({axis} sweep, target {at:e})", spec.label())?;
        writeln!(out, "{:>8} {:>8} {:>8} {:>10} {:>10}", axis, "iters", "comm", "cost", "rel_err")?;
        let mut iters = Vec::new();
        for r in &runs {
            let hit = r.record.first_reaching(at);
            iters.push(hit.map(|h| h.k));
            writeln!(
                out,
                "{:>8} {:>8} {:>8} {:>10} {:>10}",
                r.cell.axis_value.map_or_else(|| "-".into(), |v| v.to_string()),
                opt(hit.map(|h| h.k)),
                opt(hit.map(|h| h.comm_rounds)),
                opt(hit.map(|h| format!("{:.1}", h.cost))),
                sci(r.record.final_rel_err()),
            )?;
        }
        let spread = iters.iter().copied().collect::<Option<Vec<usize>>>().and_then(|v| {
            let (lo, hi) = (*v.iter().min()?, *v.iter().max()?);
            (lo > 0).then(|| hi as f64 / lo as f64)
        });
        writeln!(out, "spread max/min iterations: {}", opt(spread.map(|s| format!("{s:.3}"))))?;
    }
    Ok(())
}
