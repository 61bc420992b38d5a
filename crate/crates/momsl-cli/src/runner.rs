//! Benchmark execution.
//!
//! Each (cell, trial) pair is one unit of work: the dataset is generated
//! once and every requested estimator runs on it, so comparisons between
//! estimators are paired. Units run concurrently when `jobs > 1`; the output
//! is sorted by (cell, estimator, trial) in config order afterwards, so the
//! emitted CSV does not depend on scheduling.
//!
//! Seed chain per unit: `trial_seed = mix(mix(master, cell_index), trial)`,
//! then `data_seed = mix(trial_seed, 0)` and `fit_seed = mix(trial_seed, 1)`.
//! The same fit seed is shared by all estimators of the unit.

use std::time::Instant;

use momsl::datagen::generate;
use momsl::error::Error;
use momsl::estimators::{
    fit_adaptive, fit_estimated_sigma_plus, fit_fixed_s, lasso_baseline, sqrt_lasso_baseline,
    AdaptiveConfig, FitResult,
};
use momsl::mix_seed;
use momsl::solver::SolverConfig;

use crate::config::ExperimentConfig;
use crate::errors::CliError;
use crate::metrics::{interpolation_bound, l1_err, l2_err, lp_err, sample_sd};
use crate::records::{Estimator, TrialRecord};

/// Universal square-root-LASSO penalty √(2·ln d/n); the plain LASSO scales
/// it by a response-based noise proxy.
pub fn universal_mu(n: usize, d: usize) -> f64 {
    assert!(n > 0 && d > 0, "need n ≥ 1 and d ≥ 1, got n={n}, d={d}");
    (2.0 * (d as f64).ln() / n as f64).sqrt()
}

const BASELINE_ITERS: usize = 1000;
const BASELINE_TOL: f64 = 1e-8;

fn status_of(err: &Error) -> &'static str {
    match err {
        Error::Infeasible(_) => "infeasible",
        Error::Diverged { .. } => "diverged",
        _ => "error",
    }
}

fn run_unit(
    cfg: &ExperimentConfig,
    cell_idx: usize,
    trial: u64,
    timing: bool,
) -> Vec<(usize, usize, u64, TrialRecord)> {
    let cell = &cfg.cells[cell_idx];
    let trial_seed = mix_seed(mix_seed(cfg.seed, cell_idx as u64), trial);
    let data_seed = mix_seed(trial_seed, 0);
    let fit_seed = mix_seed(trial_seed, 1);
    let tuning = cfg.tuning_for(cell);
    let solver_cfg = SolverConfig { max_iters: cfg.max_iters, ..Default::default() };

    let base = TrialRecord {
        cell_id: cell.id(),
        estimator: String::new(),
        trial,
        n: cell.n,
        d: cell.d,
        s: cell.s,
        sigma_star: cell.sigma_star,
        n_outliers: cell.contamination.count(),
        err_l1: f64::NAN,
        err_l2: f64::NAN,
        sigma_err: f64::NAN,
        s_selected: None,
        runtime_ms: 0,
        status: String::new(),
        seed: trial_seed,
    };

    let data = match generate(&cell.gen_spec(cfg.beta_pattern, data_seed)) {
        Ok(data) => data,
        Err(e) => {
            // dataset failure poisons every estimator of the unit
            let status = status_of(&e).to_string();
            return cfg
                .estimators
                .iter()
                .enumerate()
                .map(|(e_idx, est)| {
                    let mut r = base.clone();
                    r.estimator = est.name().to_string();
                    r.status = status.clone();
                    (cell_idx, e_idx, trial, r)
                })
                .collect();
        }
    };
    let truth = data.truth.as_ref().expect("synthetic data retains ground truth");

    cfg.estimators
        .iter()
        .enumerate()
        .map(|(e_idx, est)| {
            let start = Instant::now();
            let fit: Result<FitResult, Error> = match est {
                Estimator::MomFixed => fit_fixed_s(
                    &data.x,
                    &data.y,
                    cell.s,
                    cfg.sigma_plus,
                    &tuning,
                    &solver_cfg,
                    fit_seed,
                ),
                Estimator::MomEstSigma => {
                    fit_estimated_sigma_plus(&data.x, &data.y, cell.s, &tuning, &solver_cfg, fit_seed)
                }
                Estimator::MomAdaptive => fit_adaptive(
                    &data.x,
                    &data.y,
                    &AdaptiveConfig { s_plus: cfg.s_plus, ..Default::default() },
                    cfg.sigma_plus,
                    &tuning,
                    &solver_cfg,
                    fit_seed,
                ),
                Estimator::SqrtLasso => sqrt_lasso_baseline(
                    &data.x,
                    &data.y,
                    universal_mu(cell.n, cell.d),
                    BASELINE_ITERS,
                    BASELINE_TOL,
                ),
                Estimator::Lasso => lasso_baseline(
                    &data.x,
                    &data.y,
                    universal_mu(cell.n, cell.d) * sample_sd(&data.y),
                    BASELINE_ITERS,
                    BASELINE_TOL,
                ),
            };
            let mut r = base.clone();
            r.estimator = est.name().to_string();
            r.n_outliers = data.outliers.len();
            if timing {
                r.runtime_ms = start.elapsed().as_millis() as u64;
            }
            match fit {
                Ok(fit) => {
                    r.err_l1 = l1_err(&fit.beta, &truth.beta_star);
                    r.err_l2 = l2_err(&fit.beta, &truth.beta_star);
                    r.sigma_err = (fit.sigma - truth.sigma_star).abs();
                    r.s_selected = fit.s_selected;
                    r.status = "ok".to_string();
                    // ‖v‖_p ≤ ‖v‖₁^{2/p−1}‖v‖₂^{2−2/p} for every error vector
                    for p in [1.25, 1.5, 2.0] {
                        let lp = lp_err(&fit.beta, &truth.beta_star, p);
                        let bound = interpolation_bound(r.err_l1, r.err_l2, p);
                        assert!(
                            lp <= bound * (1.0 + 1e-9),
                            "norm interpolation violated at p={p}: {lp} > {bound}"
                        );
                    }
                }
                Err(e) => r.status = status_of(&e).to_string(),
            }
            (cell_idx, e_idx, trial, r)
        })
        .collect()
}

pub fn run_bench(
    cfg: &ExperimentConfig,
    jobs: usize,
    timing: bool,
) -> Result<Vec<TrialRecord>, CliError> {
    if jobs == 0 {
        return Err(CliError::Usage("--jobs must be ≥ 1".into()));
    }
    let units: Vec<(usize, u64)> = (0..cfg.cells.len())
        .flat_map(|c| (0..cfg.trials).map(move |t| (c, t)))
        .collect();
    let run = |&(cell_idx, trial): &(usize, u64)| run_unit(cfg, cell_idx, trial, timing);
    let mut keyed: Vec<(usize, usize, u64, TrialRecord)> = if jobs == 1 {
        units.iter().flat_map(run).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| CliError::Runtime(format!("failed to build thread pool: {e}")))?;
        pool.install(|| {
            use rayon::prelude::*;
            units.par_iter().flat_map_iter(run).collect()
        })
    };
    keyed.sort_by(|a, b| (a.0, a.1, a.2).cmp(&(b.0, b.1, b.2)));
    Ok(keyed.into_iter().map(|(_, _, _, r)| r).collect())
}
