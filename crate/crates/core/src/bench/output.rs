//! Tabular outputs of a run. Column sets are stable; floats use Rust's
//! shortest round-trip `{:e}` form and missing values are empty cells.

use std::collections::BTreeMap;
use std::path::Path;

use super::run::ReportBundle;
use crate::error::Result;
use crate::metrics::{coeff_stats, coefficient_runs, mean_sd, ExperimentReport};

pub const REPORTS_JSON: &str = "reports.json";
pub const MANIFEST_JSON: &str = "manifest.json";
pub const SHD_CSV: &str = "shd.csv";
pub const EQUATIONS_CSV: &str = "equations.csv";
pub const COEFFICIENTS_CSV: &str = "coefficients.csv";
pub const DIFF_ERRORS_CSV: &str = "diff_errors.csv";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const COEFF_SUMMARY_CSV: &str = "coeff_summary.csv";

pub(crate) fn num(v: f64) -> String {
    format!("{v:e}")
}

pub(crate) fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn cell_cols(r: &ExperimentReport) -> [String; 4] {
    [
        r.cell.dataset.clone(),
        r.cell.method.clone(),
        r.cell.noise.clone(),
        r.cell.repeat.to_string(),
    ]
}

pub(crate) fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reports grouped by `(dataset, method, noise)`, in key order.
pub fn group_reports(reports: &[ExperimentReport]) -> BTreeMap<(String, String, String), Vec<&ExperimentReport>> {
    let mut groups: BTreeMap<_, Vec<&ExperimentReport>> = BTreeMap::new();
    for r in reports {
        groups
            .entry((r.cell.dataset.clone(), r.cell.method.clone(), r.cell.noise.clone()))
            .or_default()
            .push(r);
    }
    groups
}

/// Writes the JSON bundle and every CSV table; returns the file names.
pub fn write_tables(bundle: &ReportBundle, dir: &Path) -> Result<Vec<String>> {
    std::fs::write(dir.join(REPORTS_JSON), serde_json::to_string_pretty(bundle)?)?;
    let reports = &bundle.reports;

    write_csv(
        &dir.join(SHD_CSV),
        &["dataset", "method", "noise", "repeat", "seed", "equations", "best_shd", "best_relative_loss", "best_equation"],
        reports.iter().map(|r| {
            let best = r.best_equations().into_iter().next();
            let mut row = cell_cols(r).to_vec();
            row.extend([
                r.seed.to_string(),
                r.equations.len().to_string(),
                r.best_shd().map(|s| s.to_string()).unwrap_or_default(),
                opt(best.map(|e| e.relative_loss)),
                best.map(|e| e.canonical_text()).unwrap_or_default(),
            ]);
            row
        }),
    )?;

    write_csv(
        &dir.join(EQUATIONS_CSV),
        &["dataset", "method", "noise", "repeat", "index", "shd", "complexity", "loss", "relative_loss", "flags", "equation"],
        reports.iter().flat_map(|r| {
            r.equations.iter().zip(&r.shd).enumerate().map(move |(i, (eq, s))| {
                let mut flags = Vec::new();
                if eq.flags.empty_support {
                    flags.push("empty_support".to_string());
                }
                if eq.flags.poor_fit {
                    flags.push("poor_fit".to_string());
                }
                flags.extend(eq.flags.dropped.iter().map(|d| format!("dropped:{d}")));
                let mut row = cell_cols(r).to_vec();
                row.extend([
                    i.to_string(),
                    s.to_string(),
                    eq.complexity.to_string(),
                    num(eq.loss),
                    num(eq.relative_loss),
                    flags.join(";"),
                    eq.canonical_text(),
                ]);
                row
            })
        }),
    )?;

    write_csv(
        &dir.join(COEFFICIENTS_CSV),
        &["dataset", "method", "noise", "repeat", "term", "true_value", "mean", "sd", "presence"],
        reports.iter().flat_map(|r| {
            r.coeff.iter().flat_map(move |c| {
                c.terms.iter().map(move |t| {
                    let mut row = cell_cols(r).to_vec();
                    row.extend([t.label.clone(), num(t.true_value), opt(t.mean), opt(t.sd), num(t.presence)]);
                    row
                })
            })
        }),
    )?;

    write_csv(
        &dir.join(DIFF_ERRORS_CSV),
        &["dataset", "method", "noise", "repeat", "derivative", "mse_full", "mse_interior", "strip"],
        reports.iter().flat_map(|r| {
            r.diff_errors.entries.iter().map(move |(label, e)| {
                let mut row = cell_cols(r).to_vec();
                row.extend([label.clone(), num(e.mse_full), num(e.mse_interior), r.diff_errors.strip.to_string()]);
                row
            })
        }),
    )?;

    let groups = group_reports(reports);
    let mut summary = Vec::new();
    let mut coeff_rows = Vec::new();
    for ((dataset, method, noise), rs) in &groups {
        let shds: Vec<f64> = rs.iter().filter_map(|r| r.best_shd()).map(|s| s as f64).collect();
        let (shd_mean, shd_sd) = mean_sd(&shds).unzip();
        let n = rs.len() as f64;
        let full = rs.iter().map(|r| r.diff_errors.mean().mse_full).sum::<f64>() / n;
        let interior = rs.iter().map(|r| r.diff_errors.mean().mse_interior).sum::<f64>() / n;
        let runs = coefficient_runs(rs);
        let stats = bundle.truths.get(dataset).and_then(|t| coeff_stats(&runs, t).ok());
        summary.push(vec![
            dataset.clone(),
            method.clone(),
            noise.clone(),
            rs.len().to_string(),
            opt(shd_mean),
            opt(shd_sd),
            opt(stats.as_ref().map(|s| s.pooled_error)),
            opt(stats.as_ref().and_then(|s| s.bias_error)),
            num(full),
            num(interior),
        ]);
        if let Some(s) = stats {
            for t in s.terms {
                coeff_rows.push(vec![
                    dataset.clone(),
                    method.clone(),
                    noise.clone(),
                    t.label,
                    num(t.true_value),
                    opt(t.mean),
                    opt(t.sd),
                    num(t.presence),
                    runs.len().to_string(),
                ]);
            }
        }
    }
    write_csv(
        &dir.join(SUMMARY_CSV),
        &[
            "dataset",
            "method",
            "noise",
            "cells",
            "shd_mean",
            "shd_sd",
            "pooled_coeff_error",
            "bias_coeff_error",
            "diff_mse_full",
            "diff_mse_interior",
        ],
        summary,
    )?;
    write_csv(
        &dir.join(COEFF_SUMMARY_CSV),
        &["dataset", "method", "noise", "term", "true_value", "mean", "sd", "presence", "runs"],
        coeff_rows,
    )?;

    Ok([
        REPORTS_JSON,
        SHD_CSV,
        EQUATIONS_CSV,
        COEFFICIENTS_CSV,
        DIFF_ERRORS_CSV,
        SUMMARY_CSV,
        COEFF_SUMMARY_CSV,
    ]
    .iter()
    .map(|s| s.to_string())
    .collect())
}
