//! Bench output rows and their CSV encoding.
//!
//! The schema is fixed:
//! `cell_id,estimator,trial,n,d,s,sigma_star,n_outliers,err_l1,err_l2,sigma_err,s_selected,runtime_ms,status,seed`.
//! Floats are written with Rust's shortest-roundtrip formatting, so
//! `parse(emit(rows))` reproduces every field exactly.

use crate::errors::CliError;

/// The five estimators the harness knows how to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Estimator {
    MomFixed,
    MomEstSigma,
    MomAdaptive,
    SqrtLasso,
    Lasso,
}

pub const ALL_ESTIMATORS: [Estimator; 5] = [
    Estimator::MomFixed,
    Estimator::MomEstSigma,
    Estimator::MomAdaptive,
    Estimator::SqrtLasso,
    Estimator::Lasso,
];

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::MomFixed => "mom-fixed",
            Estimator::MomEstSigma => "mom-est-sigma",
            Estimator::MomAdaptive => "mom-adaptive",
            Estimator::SqrtLasso => "sqrt-lasso",
            Estimator::Lasso => "lasso",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        ALL_ESTIMATORS.into_iter().find(|e| e.name() == name)
    }
}

/// One (cell, estimator, trial) outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub cell_id: String,
    pub estimator: String,
    pub trial: u64,
    pub n: usize,
    pub d: usize,
    pub s: usize,
    pub sigma_star: f64,
    pub n_outliers: usize,
    /// NaN when the trial did not produce a fit (status ≠ "ok").
    pub err_l1: f64,
    pub err_l2: f64,
    pub sigma_err: f64,
    pub s_selected: Option<usize>,
    /// 0 unless the run was started with `--timing`; wall-clock timings would
    /// otherwise break byte-level reproducibility of the output.
    pub runtime_ms: u64,
    pub status: String,
    pub seed: u64,
}

pub const HEADER: &str = "cell_id,estimator,trial,n,d,s,sigma_star,n_outliers,err_l1,err_l2,sigma_err,s_selected,runtime_ms,status,seed";

pub fn emit(records: &[TrialRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(HEADER);
    out.push('\n');
    for r in records {
        let s_sel = r.s_selected.map(|v| v.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.cell_id,
            r.estimator,
            r.trial,
            r.n,
            r.d,
            r.s,
            r.sigma_star,
            r.n_outliers,
            r.err_l1,
            r.err_l2,
            r.sigma_err,
            s_sel,
            r.runtime_ms,
            r.status,
            r.seed
        ));
    }
    out
}

pub fn parse(text: &str) -> Result<Vec<TrialRecord>, CliError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == HEADER => {}
        Some((_, h)) => {
            return Err(CliError::Usage(format!(
                "parse error at line 1: expected bench header `{HEADER}`, found `{h}`"
            )))
        }
        None => return Err(CliError::Usage("parse error at line 1: empty file".into())),
    }
    let mut records = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 15 {
            return Err(CliError::Usage(format!(
                "parse error at line {lineno}: expected 15 fields, found {}",
                fields.len()
            )));
        }
        let err = |what: &str| {
            CliError::Usage(format!("parse error at line {lineno}: invalid {what}"))
        };
        records.push(TrialRecord {
            cell_id: fields[0].to_string(),
            estimator: fields[1].to_string(),
            trial: fields[2].parse().map_err(|_| err("trial"))?,
            n: fields[3].parse().map_err(|_| err("n"))?,
            d: fields[4].parse().map_err(|_| err("d"))?,
            s: fields[5].parse().map_err(|_| err("s"))?,
            sigma_star: fields[6].parse().map_err(|_| err("sigma_star"))?,
            n_outliers: fields[7].parse().map_err(|_| err("n_outliers"))?,
            err_l1: fields[8].parse().map_err(|_| err("err_l1"))?,
            err_l2: fields[9].parse().map_err(|_| err("err_l2"))?,
            sigma_err: fields[10].parse().map_err(|_| err("sigma_err"))?,
            s_selected: if fields[11].is_empty() {
                None
            } else {
                Some(fields[11].parse().map_err(|_| err("s_selected"))?)
            },
            runtime_ms: fields[12].parse().map_err(|_| err("runtime_ms"))?,
            status: fields[13].to_string(),
            seed: fields[14].parse().map_err(|_| err("seed"))?,
        });
    }
    Ok(records)
}
