//! Empirical convergence rates: OLS of log(median error) on log(x).
//!
//! Records are grouped (by estimator or by cell), the chosen error metric is
//! reduced to a median at each distinct x value, and a line is fitted through
//! the (ln x, ln median) points. The slope is the empirical rate exponent;
//! e.g. a √n-consistent error shows a slope near −1/2 against x = n.

use momsl::mom::quantile;

use crate::errors::CliError;
use crate::records::TrialRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum XVar {
    N,
    D,
    S,
    Outliers,
}

impl XVar {
    fn of(self, r: &TrialRecord) -> f64 {
        match self {
            XVar::N => r.n as f64,
            XVar::D => r.d as f64,
            XVar::S => r.s as f64,
            XVar::Outliers => r.n_outliers as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MetricKind {
    ErrL1,
    ErrL2,
    SigmaErr,
}

impl MetricKind {
    fn of(self, r: &TrialRecord) -> f64 {
        match self {
            MetricKind::ErrL1 => r.err_l1,
            MetricKind::ErrL2 => r.err_l2,
            MetricKind::SigmaErr => r.sigma_err,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum GroupBy {
    Estimator,
    Cell,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateLine {
    pub group: String,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Least squares through `points`; Syy = 0 (all y equal) reports r² = 1.
fn ols(points: &[(f64, f64)]) -> (f64, f64, f64) {
    assert!(points.len() >= 2, "OLS needs at least 2 points, got {}", points.len());
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    assert!(sxx > 0.0, "distinct x values required");
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        let sse: f64 = points
            .iter()
            .map(|p| {
                let e = p.1 - (intercept + slope * p.0);
                e * e
            })
            .sum();
        1.0 - sse / syy
    };
    (slope, intercept, r2)
}

/// One fitted line per group, in first-appearance order. Only `status == ok`
/// rows with a finite positive metric at a positive x participate; a median
/// of 0 (exact recovery) drops that x. Groups left with fewer than 3 usable
/// x values are an infeasible request, not a silent omission.
pub fn fit_rates(
    records: &[TrialRecord],
    x: XVar,
    metric: MetricKind,
    group_by: GroupBy,
) -> Result<Vec<RateLine>, CliError> {
    let mut groups: Vec<(String, Vec<&TrialRecord>)> = Vec::new();
    for r in records {
        let key = match group_by {
            GroupBy::Estimator => r.estimator.clone(),
            GroupBy::Cell => r.cell_id.clone(),
        };
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, rows)) => rows.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    if groups.is_empty() {
        return Err(CliError::Infeasible("no records to fit rates on".into()));
    }

    let mut out = Vec::new();
    for (key, rows) in groups {
        let mut per_x: Vec<(f64, Vec<f64>)> = Vec::new();
        for r in rows {
            let xv = x.of(r);
            let m = metric.of(r);
            if r.status != "ok" || !(m.is_finite() && m > 0.0) || !(xv > 0.0) {
                continue;
            }
            match per_x.iter_mut().find(|(v, _)| *v == xv) {
                Some((_, ms)) => ms.push(m),
                None => per_x.push((xv, vec![m])),
            }
        }
        let points: Vec<(f64, f64)> = per_x
            .iter()
            .map(|(xv, ms)| {
                let med = quantile(ms, 0.5).expect("nonempty, finite by filter");
                (*xv, med)
            })
            .filter(|(_, med)| *med > 0.0)
            .map(|(xv, med)| (xv.ln(), med.ln()))
            .collect();
        if points.len() < 3 {
            return Err(CliError::Infeasible(format!(
                "group `{key}` has {} usable x value(s); rate fitting needs at least 3",
                points.len()
            )));
        }
        let (slope, intercept, r2) = ols(&points);
        out.push(RateLine { group: key, slope, intercept, r2 });
    }
    Ok(out)
}

pub fn render(lines: &[RateLine]) -> String {
    let mut out = String::from("group,slope,intercept,r2\n");
    for l in lines {
        out.push_str(&format!("{},{},{},{}\n", l.group, l.slope, l.intercept, l.r2));
    }
    out
}
