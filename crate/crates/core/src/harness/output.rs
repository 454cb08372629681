use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::record::{MetricsRow, RunRecord};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "k,rel_err,grad_evals,comm_rounds,cost,mean_alpha,max_alpha,v1,v2,v3";
pub const SUMMARY_SCHEMA: &str = "dgmbb.summary.v1";

/// Scientific notation with 17 significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn csv_string(rows: &[MetricsRow]) -> String {
    let mut out = String::with_capacity(64 + rows.len() * 200);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.k,
            format_float(r.rel_err),
            r.grad_evals,
            r.comm_rounds,
            format_float(r.cost),
            format_float(r.mean_alpha),
            format_float(r.max_alpha),
            format_float(r.v1),
            format_float(r.v2),
            format_float(r.v3),
        );
    }
    out
}

/// Writes `contents` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let wrap = |source| Error::Write { path: path.to_path_buf(), source };
    let name = path
        .file_name()
        .ok_or_else(|| Error::invalid(format!("{} has no file name", path.display())))?
        .to_string_lossy();
    let tmp: PathBuf = path.with_file_name(format!(".{name}.{}.tmp", std::process::id()));
    fs::write(&tmp, contents).map_err(wrap)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        wrap(e)
    })
}

pub fn write_csv(rows: &[MetricsRow], path: &Path) -> Result<()> {
    write_atomic(path, csv_string(rows).as_bytes())
}

pub fn emit_csv(record: &RunRecord, path: &Path) -> Result<()> {
    write_csv(&record.rows, path)
}

/// Accuracy levels reported in summaries besides each run's own target.
pub const SUMMARY_TARGETS: [f64; 3] = [1e-6, 1e-8, 1e-10];

fn finite_or_null(v: f64) -> serde_json::Value {
    if v.is_finite() {
        v.into()
    } else {
        serde_json::Value::Null
    }
}

/// Summary entry of one run: step statistics, certificate radius and the
/// iteration/communication/gradient/cost counts at which each accuracy level
/// was first reached.
pub fn run_summary(label: &str, record: &RunRecord) -> serde_json::Value {
    let mut targets: Vec<f64> = SUMMARY_TARGETS.to_vec();
    if !targets.contains(&record.meta.target) {
        targets.push(record.meta.target);
    }
    let to_target: Vec<serde_json::Value> = targets
        .iter()
        .map(|&t| match record.first_reaching(t) {
            Some(r) => serde_json::json!({
                "target": t,
                "iterations": r.k,
                "comm_rounds": r.comm_rounds,
                "grad_evals": r.grad_evals,
                "cost": r.cost,
            }),
            None => serde_json::json!({ "target": t, "iterations": null }),
        })
        .collect();
    let last = record.final_row();
    let d = &record.diagnostics;
    serde_json::json!({
        "label": label,
        "method": record.meta.method,
        "status": record.status,
        "rounds": record.meta.rounds,
        "bb": record.meta.bb,
        "initial_steps_mean": record.meta.initial_steps.iter().sum::<f64>() / record.meta.initial_steps.len().max(1) as f64,
        "iterations": record.iterations(),
        "final_rel_err": finite_or_null(last.rel_err),
        "comm_rounds": last.comm_rounds,
        "grad_evals": last.grad_evals,
        "cost": finite_or_null(last.cost),
        "alpha_max": d.alpha_max,
        "mean_alpha_max": d.mean_alpha_max,
        "rho": record.meta.certificate.as_ref().map(|c| c.rho),
        "max_tracking_error": d.max_tracking_error,
        "bb_fallbacks": d.bb_fallbacks,
        "step_condition_violations": d.step_condition_violations,
        "invariant_failures": record.invariant_failures(),
        "to_target": to_target,
    })
}

pub fn emit_summary<'a>(
    records: impl IntoIterator<Item = (&'a str, &'a RunRecord)>,
    extra: serde_json::Value,
    path: &Path,
) -> Result<()> {
    let runs: Vec<serde_json::Value> = records.into_iter().map(|(l, r)| run_summary(l, r)).collect();
    let mut doc = serde_json::json!({ "schema": SUMMARY_SCHEMA, "runs": runs });
    if let (Some(obj), serde_json::Value::Object(more)) = (doc.as_object_mut(), extra) {
        obj.extend(more);
    }
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_only_for_no_rows() {
        assert_eq!(csv_string(&[]), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(1.0), "1.0000000000000000e0");
        assert_eq!(format_float(f64::NAN), "NaN");
        let v = 0.123_456_789_012_345_68;
        assert_eq!(format_float(v).parse::<f64>().unwrap(), v);
    }

    #[test]
    fn unwritable_path_is_reported() {
        let err = write_csv(&[], Path::new("/nonexistent-dir/x.csv")).unwrap_err();
        assert!(matches!(err, Error::Write { .. }));
    }
}
