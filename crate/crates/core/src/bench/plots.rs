//! SVG figures and their underlying CSV tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::output::{group_reports, num, write_csv};
use super::run::ReportBundle;
use crate::diffmethods::DiffMethod;
use crate::discovery::normalize_equation;
use crate::error::{Error, Result};
use crate::metrics::{coefficient_runs, mean_sd, scatter_points, ScatterPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotKind {
    CoeffBoxplot,
    ShdErrorScatter,
    ErrorTable,
}

impl PlotKind {
    pub const ALL: [PlotKind; 3] = [PlotKind::CoeffBoxplot, PlotKind::ShdErrorScatter, PlotKind::ErrorTable];

    pub fn key(self) -> &'static str {
        match self {
            PlotKind::CoeffBoxplot => "coeff_boxplot",
            PlotKind::ShdErrorScatter => "shd_error_scatter",
            PlotKind::ErrorTable => "error_table",
        }
    }
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.key() == s)
            .ok_or_else(|| Error::Format(format!("unknown plot kind `{s}`; expected coeff_boxplot, shd_error_scatter or error_table")))
    }
}

/// Five-number summary with Tukey whiskers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    /// Most extreme values within 1.5 IQR of the box.
    pub whisker_lo: f64,
    pub whisker_hi: f64,
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Quartiles by linear interpolation between order statistics.
pub fn box_stats(values: &[f64]) -> Option<BoxStats> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let q1 = quantile(&v, 0.25);
    let q3 = quantile(&v, 0.75);
    let iqr = q3 - q1;
    let lo_fence = q1 - 1.5 * iqr;
    let hi_fence = q3 + 1.5 * iqr;
    Some(BoxStats {
        n: v.len(),
        min: v[0],
        q1,
        median: quantile(&v, 0.5),
        q3,
        max: v[v.len() - 1],
        whisker_lo: v.iter().copied().find(|&x| x >= lo_fence).unwrap_or(q1),
        whisker_hi: v.iter().rev().copied().find(|&x| x <= hi_fence).unwrap_or(q3),
    })
}

fn method_color(method: &str) -> &'static str {
    const PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];
    DiffMethod::from_str(method)
        .ok()
        .and_then(|m| DiffMethod::ALL.iter().position(|x| *x == m))
        .map(|i| PALETTE[i])
        .unwrap_or("#7f7f7f")
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn file_part(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect()
}

/// Round tick positions covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) {
        return vec![lo];
    }
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e-3 && v.abs() < 1e4 {
        format!("{}", (v * 1e6).round() / 1e6)
    } else {
        format!("{v:.0e}")
    }
}

struct Svg {
    body: String,
    width: f64,
    height: f64,
}

impl Svg {
    fn new(width: f64, height: f64) -> Self {
        Self {
            body: String::new(),
            width,
            height,
        }
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, extra: &str) {
        let _ = writeln!(
            self.body,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}"{extra}/>"#
        );
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str, stroke: &str) {
        let _ = writeln!(
            self.body,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{fill}" stroke="{stroke}"/>"#,
            w.max(0.0),
            h.max(0.0)
        );
    }

    fn circle(&mut self, x: f64, y: f64, r: f64, fill: &str) {
        let _ = writeln!(self.body, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r}" fill="{fill}"/>"#);
    }

    fn ring(&mut self, x: f64, y: f64, r: f64) {
        let _ = writeln!(self.body, r##"<circle cx="{x:.2}" cy="{y:.2}" r="{r}" fill="none" stroke="#333"/>"##);
    }

    fn text(&mut self, x: f64, y: f64, s: &str, anchor: &str, size: f64) {
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" font-size="{size}" text-anchor="{anchor}">{}</text>"#,
            esc(s)
        );
    }

    fn vtext(&mut self, x: f64, y: f64, s: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 {x:.2} {y:.2})">{}</text>"#,
            esc(s)
        );
    }

    fn finish(self) -> String {
        format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\">\n<rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            w = self.width,
            h = self.height
        )
    }
}

/// Coefficients of one term under one method, normalized to the truth.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxGroup {
    pub dataset: String,
    pub noise: String,
    pub term: String,
    pub true_value: f64,
    pub method: String,
    pub values: Vec<f64>,
}

/// Recovered coefficients of every true term, grouped by
/// `(dataset, noise, term, method)`. Groups without values are left out.
pub fn coefficient_groups(bundle: &ReportBundle) -> Vec<BoxGroup> {
    let mut out = Vec::new();
    for ((dataset, method, noise), rs) in group_reports(&bundle.reports) {
        let Some(truth) = bundle.truths.get(&dataset) else { continue };
        let runs: Vec<_> = coefficient_runs(&rs)
            .iter()
            .filter_map(|eq| normalize_equation(eq, &truth.designated, truth.convention).ok())
            .collect();
        for (term, true_value) in &truth.terms {
            let values: Vec<f64> = runs.iter().filter_map(|eq| eq.coefficient(term)).collect();
            if values.is_empty() {
                continue;
            }
            out.push(BoxGroup {
                dataset: dataset.clone(),
                noise: noise.clone(),
                term: truth.label(term),
                true_value: *true_value,
                method: method.clone(),
                values,
            });
        }
    }
    out
}

fn boxplot_svg(title: &str, panels: &BTreeMap<String, Vec<&BoxGroup>>, methods: &[String]) -> String {
    let panel_w = 40.0 + 34.0 * methods.len() as f64;
    let (left, top, plot_h) = (70.0, 40.0, 260.0);
    let width = left + panel_w * panels.len() as f64 + 30.0 * panels.len() as f64 + 20.0;
    let height = top + plot_h + 110.0;
    let mut svg = Svg::new(width, height);
    svg.text(width / 2.0, 22.0, title, "middle", 14.0);

    for (pi, (term, groups)) in panels.iter().enumerate() {
        let x0 = left + pi as f64 * (panel_w + 30.0);
        let truth = groups[0].true_value;
        let mut lo = truth;
        let mut hi = truth;
        for g in groups {
            for &v in &g.values {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        let pad = if hi > lo { 0.08 * (hi - lo) } else { 0.1 * truth.abs().max(1e-3) };
        let (lo, hi) = (lo - pad, hi + pad);
        let y = |v: f64| top + plot_h * (hi - v) / (hi - lo);

        svg.rect(x0, top, panel_w, plot_h, "none", "#333");
        for t in ticks(lo, hi, 5) {
            svg.line(x0 - 4.0, y(t), x0, y(t), "#333", "");
            svg.text(x0 - 6.0, y(t) + 4.0, &tick_label(t), "end", 10.0);
        }
        svg.line(x0, y(truth), x0 + panel_w, y(truth), "#888", r#" stroke-dasharray="4 3""#);
        svg.text(x0 + panel_w / 2.0, top + plot_h + 40.0, term, "middle", 12.0);

        for (mi, m) in methods.iter().enumerate() {
            let Some(g) = groups.iter().find(|g| &g.method == m) else { continue };
            let Some(b) = box_stats(&g.values) else { continue };
            let cx = x0 + 20.0 + 34.0 * mi as f64 + 17.0;
            let color = method_color(m);
            svg.line(cx, y(b.whisker_lo), cx, y(b.q1), "#333", "");
            svg.line(cx, y(b.q3), cx, y(b.whisker_hi), "#333", "");
            svg.line(cx - 6.0, y(b.whisker_lo), cx + 6.0, y(b.whisker_lo), "#333", "");
            svg.line(cx - 6.0, y(b.whisker_hi), cx + 6.0, y(b.whisker_hi), "#333", "");
            svg.rect(cx - 11.0, y(b.q3), 22.0, y(b.q1) - y(b.q3), color, "#333");
            svg.line(cx - 11.0, y(b.median), cx + 11.0, y(b.median), "#000", r#" stroke-width="2""#);
            for &v in &g.values {
                if v < b.whisker_lo || v > b.whisker_hi {
                    svg.ring(cx, y(v), 2.5);
                }
            }
        }
    }
    svg.vtext(18.0, top + plot_h / 2.0, "coefficient");
    legend(&mut svg, methods, left, top + plot_h + 62.0);
    svg.finish()
}

fn legend(svg: &mut Svg, methods: &[String], x0: f64, y0: f64) {
    for (i, m) in methods.iter().enumerate() {
        let x = x0 + (i % 3) as f64 * 130.0;
        let y = y0 + (i / 3) as f64 * 16.0;
        svg.rect(x, y - 9.0, 10.0, 10.0, method_color(m), "#333");
        svg.text(x + 14.0, y, m, "start", 11.0);
    }
}

fn scatter_svg(title: &str, xlabel: &str, points: &[(String, String, f64, f64)]) -> String {
    let (left, top, w, h) = (70.0, 40.0, 420.0, 300.0);
    let mut svg = Svg::new(left + w + 30.0, top + h + 110.0);
    svg.text(left + w / 2.0, 22.0, title, "middle", 14.0);
    svg.rect(left, top, w, h, "none", "#333");

    let xs: Vec<f64> = points.iter().map(|p| p.2).filter(|v| *v > 0.0 && v.is_finite()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.3).filter(|v| v.is_finite()).collect();
    let (xlo, xhi) = if xs.is_empty() {
        (-1.0, 1.0)
    } else {
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min).log10().floor();
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max).log10().ceil();
        (lo, if hi > lo { hi } else { lo + 1.0 })
    };
    let yhi = ys.iter().copied().fold(1.0, f64::max) * 1.1;
    let px = |v: f64| left + w * (v.log10() - xlo) / (xhi - xlo);
    let py = |v: f64| top + h * (yhi - v) / yhi;

    let mut d = xlo;
    while d <= xhi + 1e-9 {
        let x = left + w * (d - xlo) / (xhi - xlo);
        svg.line(x, top + h, x, top + h + 4.0, "#333", "");
        svg.text(x, top + h + 16.0, &format!("1e{}", d as i64), "middle", 10.0);
        d += 1.0;
    }
    for t in ticks(0.0, yhi, 5) {
        svg.line(left - 4.0, py(t), left, py(t), "#333", "");
        svg.text(left - 6.0, py(t) + 4.0, &tick_label(t), "end", 10.0);
    }
    svg.text(left + w / 2.0, top + h + 34.0, xlabel, "middle", 12.0);
    svg.vtext(20.0, top + h / 2.0, "mean SHD");

    let mut methods: Vec<String> = Vec::new();
    for (method, noise, x, y) in points {
        if !(*x > 0.0 && x.is_finite() && y.is_finite()) {
            continue;
        }
        svg.circle(px(*x), py(*y), 5.0, method_color(method));
        svg.text(px(*x) + 7.0, py(*y) - 5.0, &format!("{noise}%"), "start", 9.0);
        if !methods.contains(method) {
            methods.push(method.clone());
        }
    }
    legend(&mut svg, &methods, left, top + h + 62.0);
    svg.finish()
}

/// Writes the files of one plot kind into `dir`; returns their names.
pub fn emit_plots(bundle: &ReportBundle, kind: PlotKind, dir: &Path) -> Result<Vec<String>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    match kind {
        PlotKind::CoeffBoxplot => {
            let groups = coefficient_groups(bundle);
            let name = "coeff_boxplot.csv";
            write_csv(
                &dir.join(name),
                &["dataset", "noise", "term", "method", "true_value", "n", "min", "q1", "median", "q3", "max", "whisker_lo", "whisker_hi"],
                groups.iter().filter_map(|g| {
                    box_stats(&g.values).map(|b| {
                        vec![
                            g.dataset.clone(),
                            g.noise.clone(),
                            g.term.clone(),
                            g.method.clone(),
                            num(g.true_value),
                            b.n.to_string(),
                            num(b.min),
                            num(b.q1),
                            num(b.median),
                            num(b.q3),
                            num(b.max),
                            num(b.whisker_lo),
                            num(b.whisker_hi),
                        ]
                    })
                }),
            )?;
            written.push(name.to_string());

            let mut figures: BTreeMap<(String, String), BTreeMap<String, Vec<&BoxGroup>>> = BTreeMap::new();
            for g in &groups {
                figures
                    .entry((g.dataset.clone(), g.noise.clone()))
                    .or_default()
                    .entry(g.term.clone())
                    .or_default()
                    .push(g);
            }
            let methods = method_order(bundle);
            for ((dataset, noise), panels) in figures {
                let name = format!("coeff_boxplot_{}_noise{}.svg", file_part(&dataset), file_part(&noise));
                let title = format!("{dataset}: recovered coefficients, noise {noise}%");
                std::fs::write(dir.join(&name), boxplot_svg(&title, &panels, &methods))?;
                written.push(name);
            }
        }
        PlotKind::ShdErrorScatter => {
            let points = scatter_points(&bundle.reports);
            let name = "shd_error_scatter.csv";
            write_csv(
                &dir.join(name),
                &["method", "noise", "mean_diff_error_full", "mean_diff_error_interior", "mean_shd", "count"],
                points.iter().map(|p| {
                    vec![
                        p.method.clone(),
                        p.noise.clone(),
                        num(p.mean_diff_error_full),
                        num(p.mean_diff_error_interior),
                        num(p.mean_shd),
                        p.count.to_string(),
                    ]
                }),
            )?;
            written.push(name.to_string());
            if !points.is_empty() {
                let pick = |f: fn(&ScatterPoint) -> f64| -> Vec<(String, String, f64, f64)> {
                    points
                        .iter()
                        .map(|p| (p.method.clone(), p.noise.clone(), f(p), p.mean_shd))
                        .collect()
                };
                for (suffix, label, pts) in [
                    ("full", "mean differentiation MSE, full domain", pick(|p| p.mean_diff_error_full)),
                    ("interior", "mean differentiation MSE, interior", pick(|p| p.mean_diff_error_interior)),
                ] {
                    let name = format!("shd_error_scatter_{suffix}.svg");
                    let svg = scatter_svg(&format!("SHD vs differentiation error ({suffix})"), label, &pts);
                    std::fs::write(dir.join(&name), svg)?;
                    written.push(name);
                }
            }
        }
        PlotKind::ErrorTable => {
            let mut rows: BTreeMap<(String, String, String, String), Vec<(f64, f64)>> = BTreeMap::new();
            let mut order_rows: BTreeMap<(String, String, String, usize), Vec<(f64, f64)>> = BTreeMap::new();
            for r in &bundle.reports {
                let c = &r.cell;
                for (label, e) in &r.diff_errors.entries {
                    rows.entry((c.dataset.clone(), c.method.clone(), c.noise.clone(), label.clone()))
                        .or_default()
                        .push((e.mse_full, e.mse_interior));
                }
                for (order, e) in &r.diff_errors.per_order {
                    order_rows
                        .entry((c.dataset.clone(), c.method.clone(), c.noise.clone(), *order))
                        .or_default()
                        .push((e.mse_full, e.mse_interior));
                }
            }
            let stats = |v: &[(f64, f64)]| {
                let full: Vec<f64> = v.iter().map(|e| e.0).collect();
                let inner: Vec<f64> = v.iter().map(|e| e.1).collect();
                let (fm, fs) = mean_sd(&full).unwrap_or((f64::NAN, f64::NAN));
                let (im, is) = mean_sd(&inner).unwrap_or((f64::NAN, f64::NAN));
                [num(fm), num(fs), num(im), num(is), v.len().to_string()]
            };
            let header = ["mse_full_mean", "mse_full_sd", "mse_interior_mean", "mse_interior_sd", "cells"];
            let name = "error_table.csv";
            let mut h = vec!["dataset", "method", "noise", "derivative"];
            h.extend(header);
            write_csv(
                &dir.join(name),
                &h,
                rows.iter().map(|((d, m, n, l), v)| {
                    let mut row = vec![d.clone(), m.clone(), n.clone(), l.clone()];
                    row.extend(stats(v));
                    row
                }),
            )?;
            written.push(name.to_string());
            let name = "error_table_by_order.csv";
            let mut h = vec!["dataset", "method", "noise", "order"];
            h.extend(header);
            write_csv(
                &dir.join(name),
                &h,
                order_rows.iter().map(|((d, m, n, o), v)| {
                    let mut row = vec![d.clone(), m.clone(), n.clone(), o.to_string()];
                    row.extend(stats(v));
                    row
                }),
            )?;
            written.push(name.to_string());
        }
    }
    Ok(written)
}

fn method_order(bundle: &ReportBundle) -> Vec<String> {
    let mut present: Vec<String> = Vec::new();
    for r in &bundle.reports {
        if !present.contains(&r.cell.method) {
            present.push(r.cell.method.clone());
        }
    }
    let rank = |m: &String| {
        DiffMethod::from_str(m)
            .ok()
            .and_then(|x| DiffMethod::ALL.iter().position(|y| *y == x))
            .unwrap_or(usize::MAX)
    };
    present.sort_by(|a, b| rank(a).cmp(&rank(b)).then_with(|| a.cmp(b)));
    present
}

/// Every plot kind.
pub fn emit_all(bundle: &ReportBundle, dir: &Path) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for kind in PlotKind::ALL {
        out.extend(emit_plots(bundle, kind, dir)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::DatasetSpec;
    use crate::discovery::{CandidateEquation, TermSpec};
    use crate::metrics::{CellId, DiffError, DiffErrorReport, ExperimentReport, GroundTruth};
    use approx::assert_relative_eq;

    #[test]
    fn box_of_three() {
        let b = box_stats(&[3.2, 2.8, 3.0]).unwrap();
        assert_relative_eq!(b.median, 3.0);
        assert_relative_eq!(b.q1, 2.9);
        assert_relative_eq!(b.q3, 3.1);
        assert_eq!((b.min, b.max), (2.8, 3.2));
        assert!(box_stats(&[]).is_none());
    }

    #[test]
    fn whiskers_exclude_outliers() {
        let b = box_stats(&[1.0, 1.1, 1.2, 1.3, 10.0]).unwrap();
        assert_eq!(b.whisker_hi, 1.3);
        assert_eq!(b.max, 10.0);
    }

    #[test]
    fn tick_steps_are_round() {
        assert_eq!(ticks(0.0, 1.0, 5), vec![0.0, 0.2, 0.4, 0.6000000000000001, 0.8, 1.0]);
        assert_eq!(ticks(1.0, 1.0, 5), vec![1.0]);
    }

    fn bundle(methods: &[&str], noises: &[f64]) -> ReportBundle {
        let spec = DatasetSpec::damped_ode();
        let truth = GroundTruth::for_dataset(&spec);
        let names = truth.names.clone();
        let t = |s: &str| TermSpec::parse(s, &names).unwrap();
        let mut reports = Vec::new();
        for m in methods {
            for &n in noises {
                for (rep, c) in [2.8, 3.0, 3.2].into_iter().enumerate() {
                    let eq = CandidateEquation::from_regression(
                        t("u_tt"),
                        &[t("u"), t("u_t")],
                        &[-c, -0.25],
                        1e-3,
                        1.0,
                        names.clone(),
                    );
                    let mut entries = BTreeMap::new();
                    entries.insert("u_t".to_string(), DiffError { mse_full: 1e-2, mse_interior: 1e-4 });
                    reports.push(ExperimentReport {
                        cell: CellId::new("ode", m, n, rep),
                        seed: rep as u64,
                        equations: vec![eq],
                        shd: vec![0],
                        diff_errors: DiffErrorReport { strip: 3, entries, per_order: BTreeMap::new() },
                        coeff: None,
                    });
                }
            }
        }
        ReportBundle {
            schema_version: 1,
            truths: [("ode".to_string(), truth)].into_iter().collect(),
            reports,
        }
    }

    #[test]
    fn boxplot_groups_normalize_to_truth() {
        let groups = coefficient_groups(&bundle(&["gradient"], &[0.0]));
        let u = groups.iter().find(|g| g.term == "u").unwrap();
        assert_eq!(u.values, vec![2.8, 3.0, 3.2]);
        assert_relative_eq!(box_stats(&u.values).unwrap().median, 3.0);
        assert_eq!(groups.len(), 3);
    }

    #[test]
    fn scatter_csv_has_one_row_per_method_and_noise() {
        let dir = tempfile::tempdir().unwrap();
        let b = bundle(&["gradient", "spectral"], &[0.0, 0.5, 1.0]);
        emit_plots(&b, PlotKind::ShdErrorScatter, dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("shd_error_scatter.csv")).unwrap();
        assert_eq!(text.lines().count(), 1 + 6);
    }

    #[test]
    fn svgs_are_well_formed_with_viewbox() {
        let dir = tempfile::tempdir().unwrap();
        let b = bundle(&["gradient", "total_var"], &[0.0, 1.0]);
        let files = emit_all(&b, dir.path()).unwrap();
        let svgs: Vec<_> = files.iter().filter(|f| f.ends_with(".svg")).collect();
        assert_eq!(svgs.len(), 2 + 2);
        for f in svgs {
            let text = std::fs::read_to_string(dir.path().join(f)).unwrap();
            let mut reader = quick_xml::Reader::from_str(&text);
            let mut root_seen = false;
            loop {
                match reader.read_event() {
                    Ok(quick_xml::events::Event::Eof) => break,
                    Ok(quick_xml::events::Event::Start(e)) if e.name().into_inner() == "svg" => {
                        assert!(e.try_get_attribute("viewBox").unwrap().is_some(), "{f}");
                        root_seen = true;
                    }
                    Ok(_) => {}
                    Err(e) => panic!("{f}: {e}"),
                }
            }
            assert!(root_seen, "{f}");
        }
    }

    #[test]
    fn empty_bundle_writes_tables_only() {
        let dir = tempfile::tempdir().unwrap();
        let mut b = bundle(&["gradient"], &[0.0]);
        b.reports.clear();
        let files = emit_all(&b, dir.path()).unwrap();
        assert!(files.iter().all(|f| f.ends_with(".csv")));
    }

    #[test]
    fn plot_kind_parses() {
        assert_eq!("error_table".parse::<PlotKind>().unwrap(), PlotKind::ErrorTable);
        assert!("pie".parse::<PlotKind>().is_err());
    }
}
