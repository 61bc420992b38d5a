//! Minimal deterministic SVG plots: no styling knobs, fixed geometry, fixed
//! palette, coordinates rounded to 0.01 px so output is byte-stable.
//!
//! Three kinds:
//! * `error-vs-n` — per-estimator median error against n, log-log;
//! * `error-vs-outliers` — median error against the outlier count, linear x
//!   and log y (the breakdown view);
//! * `trace` — solver objective against iteration, both linear, fed by the
//!   `iteration,objective,median_block` CSV that `fit --trace` writes.

use crate::errors::CliError;
use crate::rates::MetricKind;
use crate::records::TrialRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PlotKind {
    ErrorVsN,
    ErrorVsOutliers,
    Trace,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 610.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 360.0;
const PALETTE: [&str; 5] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

type Series = (String, Vec<(f64, f64)>);

fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if v.abs() >= 0.01 && v.abs() < 1e5 {
        let mut s = format!("{v:.3}");
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
        s
    } else {
        format!("{v:.2e}")
    }
}

/// Median of the metric at each distinct x, one series per estimator in
/// first-appearance order. Rows must be `ok` with a finite positive metric;
/// non-positive x is dropped only on log-scaled axes.
fn median_series(
    records: &[TrialRecord],
    x_of: impl Fn(&TrialRecord) -> f64,
    metric: MetricKind,
    x_log: bool,
) -> Vec<Series> {
    let mut series: Vec<(String, Vec<(f64, Vec<f64>)>)> = Vec::new();
    for r in records {
        let m = match metric {
            MetricKind::ErrL1 => r.err_l1,
            MetricKind::ErrL2 => r.err_l2,
            MetricKind::SigmaErr => r.sigma_err,
        };
        let xv = x_of(r);
        if r.status != "ok" || !(m.is_finite() && m > 0.0) || (x_log && !(xv > 0.0)) {
            continue;
        }
        let bucket = match series.iter_mut().find(|(k, _)| *k == r.estimator) {
            Some((_, b)) => b,
            None => {
                series.push((r.estimator.clone(), Vec::new()));
                &mut series.last_mut().expect("just pushed").1
            }
        };
        match bucket.iter_mut().find(|(v, _)| *v == xv) {
            Some((_, ms)) => ms.push(m),
            None => bucket.push((xv, vec![m])),
        }
    }
    series
        .into_iter()
        .map(|(name, buckets)| {
            let mut pts: Vec<(f64, f64)> = buckets
                .iter()
                .map(|(xv, ms)| {
                    (*xv, momsl::mom::quantile(ms, 0.5).expect("nonempty by construction"))
                })
                .collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            (name, pts)
        })
        .collect()
}

pub fn render_error_plot(
    records: &[TrialRecord],
    kind: PlotKind,
    metric: MetricKind,
) -> Result<String, CliError> {
    let metric_name = match metric {
        MetricKind::ErrL1 => "err_l1",
        MetricKind::ErrL2 => "err_l2",
        MetricKind::SigmaErr => "sigma_err",
    };
    match kind {
        PlotKind::ErrorVsN => {
            let series = median_series(records, |r| r.n as f64, metric, true);
            svg(&series, true, true, "n", metric_name, "median error vs sample size")
        }
        PlotKind::ErrorVsOutliers => {
            let series = median_series(records, |r| r.n_outliers as f64, metric, false);
            svg(&series, false, true, "outliers", metric_name, "median error vs outlier count")
        }
        PlotKind::Trace => {
            unreachable!("trace plots are rendered from a trace CSV, not bench records")
        }
    }
}

/// Parse the `iteration,objective,median_block` CSV from `fit --trace` and
/// render objective against iteration.
pub fn render_trace_plot(text: &str) -> Result<String, CliError> {
    const HEADER: &str = "iteration,objective,median_block";
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == HEADER => {}
        Some((_, h)) => {
            return Err(CliError::Usage(format!(
                "parse error at line 1: expected trace header `{HEADER}`, found `{h}`"
            )))
        }
        None => return Err(CliError::Usage("parse error at line 1: empty trace file".into())),
    }
    let mut pts = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(CliError::Usage(format!(
                "parse error at line {lineno}: expected 3 fields, got {}",
                fields.len()
            )));
        }
        let iter: f64 = fields[0].parse().map_err(|_| {
            CliError::Usage(format!("parse error at line {lineno}: bad iteration `{}`", fields[0]))
        })?;
        let obj: f64 = fields[1].parse().map_err(|_| {
            CliError::Usage(format!("parse error at line {lineno}: bad objective `{}`", fields[1]))
        })?;
        if pts.last().is_some_and(|&(prev, _)| iter <= prev) {
            return Err(CliError::Usage(format!(
                "parse error at line {lineno}: iterations must increase"
            )));
        }
        pts.push((iter, obj));
    }
    svg(&[("objective".to_string(), pts)], false, false, "iteration", "objective", "solver trace")
}

fn transformed_bounds(series: &[Series], log: bool, pick_x: bool) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (_, pts) in series {
        for &(x, y) in pts {
            let v = if pick_x { x } else { y };
            let t = if log { v.log10() } else { v };
            lo = lo.min(t);
            hi = hi.max(t);
        }
    }
    if lo == hi {
        // single value: pad so the point sits mid-plot
        lo -= 0.5;
        hi += 0.5;
    }
    (lo, hi)
}

fn svg(
    series: &[Series],
    x_log: bool,
    y_log: bool,
    x_label: &str,
    y_label: &str,
    title: &str,
) -> Result<String, CliError> {
    let series: Vec<&Series> = series.iter().filter(|(_, pts)| !pts.is_empty()).collect();
    if series.is_empty() {
        return Err(CliError::Infeasible("no plottable points after filtering".into()));
    }
    let onto = |pts: &[(f64, f64)]| -> Vec<(f64, f64)> {
        pts.iter()
            .map(|&(x, y)| {
                (if x_log { x.log10() } else { x }, if y_log { y.log10() } else { y })
            })
            .collect()
    };
    let owned: Vec<Series> = series.iter().map(|s| (*s).clone()).collect();
    let (x_lo, x_hi) = transformed_bounds(&owned, x_log, true);
    let (y_lo, y_hi) = transformed_bounds(&owned, y_log, false);
    let px = |t: f64| LEFT + (t - x_lo) / (x_hi - x_lo) * (RIGHT - LEFT);
    let py = |t: f64| BOTTOM - (t - y_lo) / (y_hi - y_lo) * (BOTTOM - TOP);

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"monospace\" font-size=\"12\">\n"
    ));
    out.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    out.push_str(&format!(
        "<rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
        RIGHT - LEFT,
        BOTTOM - TOP
    ));
    out.push_str(&format!(
        "<text x=\"{:.2}\" y=\"14\" text-anchor=\"middle\">{title}</text>\n",
        (LEFT + RIGHT) / 2.0
    ));

    // 3 ticks per axis at the transformed lo/mid/hi; labels name the raw value
    for (i, t) in [x_lo, (x_lo + x_hi) / 2.0, x_hi].iter().enumerate() {
        let x = px(*t);
        let raw = if x_log { 10f64.powf(*t) } else { *t };
        out.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{BOTTOM}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
            BOTTOM + 5.0
        ));
        out.push_str(&format!(
            "<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>\n",
            BOTTOM + 18.0,
            fmt_num(raw)
        ));
        if i == 1 {
            out.push_str(&format!(
                "<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{x_label}</text>\n",
                BOTTOM + 34.0
            ));
        }
    }
    for (i, t) in [y_lo, (y_lo + y_hi) / 2.0, y_hi].iter().enumerate() {
        let y = py(*t);
        let raw = if y_log { 10f64.powf(*t) } else { *t };
        out.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{LEFT}\" y2=\"{y:.2}\" stroke=\"black\"/>\n",
            LEFT - 5.0
        ));
        out.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>\n",
            LEFT - 8.0,
            y + 4.0,
            fmt_num(raw)
        ));
        if i == 1 {
            out.push_str(&format!(
                "<text x=\"14\" y=\"{y:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {y:.2})\">{y_label}</text>\n"
            ));
        }
    }

    for (s_idx, (name, pts)) in series.iter().enumerate() {
        let color = PALETTE[s_idx % PALETTE.len()];
        let tpts = onto(pts);
        let path: Vec<String> =
            tpts.iter().map(|&(tx, ty)| format!("{:.2},{:.2}", px(tx), py(ty))).collect();
        out.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            path.join(" ")
        ));
        for &(tx, ty) in &tpts {
            out.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>\n",
                px(tx),
                py(ty)
            ));
        }
        let ly = TOP + 14.0 + 16.0 * s_idx as f64;
        out.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            RIGHT - 150.0,
            RIGHT - 120.0
        ));
        out.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\">{name}</text>\n",
            RIGHT - 114.0,
            ly + 4.0
        ));
    }
    out.push_str("</svg>\n");
    Ok(out)
}
