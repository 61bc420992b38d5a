//! Subcommand implementations. Each returns the text destined for stdout;
//! file outputs are written in place. All randomness flows from the `--seed`
//! flags, so identical invocations produce identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use momsl::criterion::CriterionParams;
use momsl::datagen::{generate, Dataset, GenSpec};
use momsl::estimators::{
    fit_adaptive, fit_estimated_sigma_plus, lasso_baseline, schedule, sqrt_lasso_baseline,
    AdaptiveConfig, DEFAULT_C, FitResult, TuningSchedule,
};
use momsl::mom::BlockPartition;
use momsl::solver::{solve, SolverConfig, TraceMode};

use crate::config::{
    parse_beta_pattern, parse_config, parse_contamination, parse_design, parse_noise,
};
use crate::errors::CliError;
use crate::metrics::sample_sd;
use crate::plot::{render_error_plot, render_trace_plot, PlotKind};
use crate::rates::{fit_rates, render, GroupBy, MetricKind, XVar};
use crate::records::{self, Estimator};
use crate::runner::{run_bench, universal_mu};

#[derive(clap::Args, Debug)]
pub struct FitArgs {
    /// Estimator to run.
    #[arg(long, value_enum)]
    pub estimator: Estimator,
    /// Sparsity level driving the block/penalty schedule
    /// (mom-fixed, mom-est-sigma).
    #[arg(long)]
    pub sparsity: Option<usize>,
    /// Known upper bound on the noise standard deviation
    /// (mom-fixed, mom-adaptive).
    #[arg(long)]
    pub sigma_plus: Option<f64>,
    /// Block count: `auto` resolves the schedule from --sparsity; an explicit
    /// integer overrides it (mom-fixed only).
    #[arg(long, default_value = "auto")]
    pub blocks: String,
    /// Penalty override: μ for the saddle fit and sqrt-lasso, λ for lasso.
    #[arg(long)]
    pub mu: Option<f64>,
    /// Upper bound on the unknown sparsity (mom-adaptive only).
    #[arg(long)]
    pub s_plus: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 4000)]
    pub max_iters: usize,
    /// Write the per-iteration objective trace CSV here (mom-fixed only).
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Dataset CSV with header y,x1,...,xd.
    pub data: PathBuf,
}

#[derive(clap::Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    /// Number of nonzero coefficients.
    #[arg(long)]
    pub sparsity: usize,
    /// Noise standard deviation σ*.
    #[arg(long)]
    pub sigma: f64,
    /// gaussian | student:NU | rademacher
    #[arg(long, default_value = "gaussian")]
    pub design: String,
    /// gaussian | student:NU
    #[arg(long, default_value = "gaussian")]
    pub noise: String,
    /// none | response:COUNT:MAG | leverage:COUNT:FACTOR | flip:COUNT:MAG
    #[arg(long, default_value = "none")]
    pub contamination: String,
    /// prefix | random:MAGNITUDE
    #[arg(long, default_value = "prefix")]
    pub beta_pattern: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output dataset CSV path.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional key,value CSV with σ* and the nonzero coefficients.
    #[arg(long)]
    pub truth_out: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
pub struct BenchArgs {
    /// Experiment config file (flat key = value).
    #[arg(long)]
    pub config: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
    /// Concurrent (cell, trial) units.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Record wall-clock runtimes. Off by default so output is byte-stable.
    #[arg(long)]
    pub timing: bool,
}

#[derive(clap::Args, Debug)]
pub struct RatesArgs {
    /// Regressor for the log-log fit.
    #[arg(long, value_enum)]
    pub x: XVar,
    #[arg(long, value_enum)]
    pub metric: MetricKind,
    #[arg(long, value_enum, default_value = "estimator")]
    pub group_by: GroupBy,
    /// Bench output CSV.
    pub csv: PathBuf,
}

#[derive(clap::Args, Debug)]
pub struct PlotArgs {
    #[arg(long, value_enum)]
    pub kind: PlotKind,
    /// Error column to plot (ignored by --kind trace).
    #[arg(long, value_enum, default_value = "err-l2")]
    pub metric: MetricKind,
    /// Output SVG path.
    #[arg(long)]
    pub out: PathBuf,
    /// Bench CSV, or a trace CSV for --kind trace.
    pub input: PathBuf,
}

fn read_input(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn reject(cond: bool, msg: &str) -> Result<(), CliError> {
    if cond {
        return Err(CliError::Usage(msg.into()));
    }
    Ok(())
}

/// `auto` → None, integer → Some.
fn parse_blocks(raw: &str) -> Result<Option<usize>, CliError> {
    if raw == "auto" {
        return Ok(None);
    }
    raw.parse::<usize>().map(Some).map_err(|_| {
        CliError::Usage(format!("--blocks takes `auto` or a positive integer, got `{raw}`"))
    })
}

struct FitSummary {
    estimator: Estimator,
    n: usize,
    d: usize,
    blocks: usize,
    mu: f64,
    sigma_plus: f64,
    sigma_hat: f64,
    s_selected: Option<usize>,
    iterations: usize,
    converged: bool,
    objective: f64,
    beta: Vec<f64>,
}

impl FitSummary {
    fn from_result(estimator: Estimator, n: usize, d: usize, fit: FitResult) -> Self {
        FitSummary {
            estimator,
            n,
            d,
            blocks: fit.k_used,
            mu: fit.mu_used,
            sigma_plus: fit.diagnostics.sigma_plus_used,
            sigma_hat: fit.sigma,
            s_selected: fit.s_selected,
            iterations: fit.diagnostics.iterations,
            converged: fit.diagnostics.converged,
            objective: fit.diagnostics.objective,
            beta: fit.beta,
        }
    }

    fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("estimator: {}\n", self.estimator.name()));
        out.push_str(&format!("n: {}\n", self.n));
        out.push_str(&format!("d: {}\n", self.d));
        out.push_str(&format!("blocks: {}\n", self.blocks));
        out.push_str(&format!("mu: {}\n", self.mu));
        out.push_str(&format!("sigma_plus: {}\n", self.sigma_plus));
        out.push_str(&format!("sigma_hat: {}\n", self.sigma_hat));
        if let Some(s) = self.s_selected {
            out.push_str(&format!("s_selected: {s}\n"));
        }
        out.push_str(&format!("iterations: {}\n", self.iterations));
        out.push_str(&format!("converged: {}\n", self.converged));
        out.push_str(&format!("objective: {}\n", self.objective));
        let nonzeros: Vec<(usize, f64)> = self
            .beta
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(j, v)| (j, *v))
            .collect();
        out.push_str(&format!("beta_nonzeros: {}\n", nonzeros.len()));
        out.push_str("beta:\n");
        for (j, v) in nonzeros {
            out.push_str(&format!("  {j}: {v}\n"));
        }
        out
    }
}

pub fn run_fit(args: &FitArgs) -> Result<String, CliError> {
    let text = read_input(&args.data)?;
    let data = Dataset::from_csv(&text)?;
    let n = data.x.n_rows();
    let d = data.x.n_cols();
    if n == 0 {
        return Err(CliError::Usage("dataset has no rows".into()));
    }
    let blocks = parse_blocks(&args.blocks)?;
    let est = args.estimator;
    reject(
        args.trace.is_some() && est != Estimator::MomFixed,
        "--trace is only available for mom-fixed",
    )?;
    reject(
        blocks.is_some() && est != Estimator::MomFixed,
        "explicit --blocks is only available for mom-fixed",
    )?;
    reject(
        args.s_plus.is_some() && est != Estimator::MomAdaptive,
        "--s-plus only applies to mom-adaptive",
    )?;
    let tuning = TuningSchedule::default();
    let solver_cfg = SolverConfig {
        max_iters: args.max_iters,
        trace: if args.trace.is_some() { TraceMode::Objective } else { TraceMode::Off },
        ..Default::default()
    };

    let summary = match est {
        Estimator::MomFixed => {
            let sigma_plus = args
                .sigma_plus
                .ok_or_else(|| CliError::Usage("mom-fixed needs --sigma-plus".into()))?;
            let sched_for = |s: usize| -> Result<_, CliError> {
                let sched = schedule(n, d, s, &tuning)?;
                if blocks.is_none() && sched.k_raw > n {
                    return Err(CliError::Infeasible(format!(
                        "sparsity {s} requires {} blocks but only {n} samples are available",
                        sched.k_raw
                    )));
                }
                Ok(sched)
            };
            let (k, mu) = match (blocks, args.sparsity, args.mu) {
                (None, Some(s), mu) => {
                    let sched = sched_for(s)?;
                    (sched.k, mu.unwrap_or(sched.mu))
                }
                (None, None, _) => {
                    return Err(CliError::Usage(
                        "mom-fixed with --blocks auto needs --sparsity".into(),
                    ))
                }
                (Some(k), _, Some(mu)) => (k, mu),
                (Some(k), Some(s), None) => (k, sched_for(s)?.mu),
                (Some(_), None, None) => {
                    return Err(CliError::Usage(
                        "explicit --blocks needs --mu or --sparsity to set the penalty".into(),
                    ))
                }
            };
            let partition = BlockPartition::new(n, k, args.seed)?;
            let params = CriterionParams::new(DEFAULT_C, mu, sigma_plus)?;
            let state = solve(&data.x, &data.y, &partition, &params, &solver_cfg, None)?;
            if let Some(path) = &args.trace {
                let mut t = String::from("iteration,objective,median_block\n");
                for p in state.objective_trace()? {
                    t.push_str(&format!("{},{},{}\n", p.iter, p.objective, p.median_block));
                }
                fs::write(path, t)?;
            }
            FitSummary {
                estimator: est,
                n,
                d,
                blocks: k,
                mu,
                sigma_plus,
                sigma_hat: state.sigma_avg,
                s_selected: None,
                iterations: state.iterations,
                converged: state.converged,
                objective: state.objective,
                beta: state.beta_avg,
            }
        }
        Estimator::MomEstSigma => {
            reject(args.sigma_plus.is_some(), "mom-est-sigma estimates the noise bound itself; drop --sigma-plus")?;
            reject(args.mu.is_some(), "mom-est-sigma sets its penalty from the schedule; drop --mu")?;
            let s = args
                .sparsity
                .ok_or_else(|| CliError::Usage("mom-est-sigma needs --sparsity".into()))?;
            let fit =
                fit_estimated_sigma_plus(&data.x, &data.y, s, &tuning, &solver_cfg, args.seed)?;
            FitSummary::from_result(est, n, d, fit)
        }
        Estimator::MomAdaptive => {
            reject(args.sparsity.is_some(), "mom-adaptive selects the sparsity itself; drop --sparsity")?;
            reject(args.mu.is_some(), "mom-adaptive sets its penalty per level; drop --mu")?;
            let sigma_plus = args
                .sigma_plus
                .ok_or_else(|| CliError::Usage("mom-adaptive needs --sigma-plus".into()))?;
            let cfg = AdaptiveConfig {
                s_plus: args.s_plus.unwrap_or(AdaptiveConfig::default().s_plus),
                ..Default::default()
            };
            let fit =
                fit_adaptive(&data.x, &data.y, &cfg, sigma_plus, &tuning, &solver_cfg, args.seed)?;
            FitSummary::from_result(est, n, d, fit)
        }
        Estimator::SqrtLasso | Estimator::Lasso => {
            reject(args.sparsity.is_some(), "the baselines take no --sparsity; use --mu to tune them")?;
            reject(args.sigma_plus.is_some(), "the baselines take no --sigma-plus")?;
            let fit = if est == Estimator::SqrtLasso {
                let mu = args.mu.unwrap_or_else(|| universal_mu(n, d));
                sqrt_lasso_baseline(&data.x, &data.y, mu, args.max_iters, 1e-8)?
            } else {
                let lambda =
                    args.mu.unwrap_or_else(|| universal_mu(n, d) * sample_sd(&data.y));
                lasso_baseline(&data.x, &data.y, lambda, args.max_iters, 1e-8)?
            };
            FitSummary::from_result(est, n, d, fit)
        }
    };
    Ok(summary.render())
}

pub fn run_simulate(args: &SimulateArgs) -> Result<String, CliError> {
    let design = parse_design(&args.design).map_err(CliError::Usage)?;
    let noise = parse_noise(&args.noise).map_err(CliError::Usage)?;
    let contamination = parse_contamination(&args.contamination).map_err(CliError::Usage)?;
    let pattern = parse_beta_pattern(&args.beta_pattern).map_err(CliError::Usage)?;
    let spec = GenSpec {
        n: args.n,
        d: args.d,
        design,
        beta_pattern: pattern.to_pattern(args.sparsity),
        noise: noise.to_model(args.sigma),
        contamination,
        seed: args.seed,
    };
    let data = generate(&spec)?;
    fs::write(&args.out, data.to_csv())?;
    if let Some(tpath) = &args.truth_out {
        let truth = data.truth.as_ref().expect("synthetic data retains ground truth");
        let mut t = String::from("key,value\n");
        t.push_str(&format!("sigma_star,{}\n", truth.sigma_star));
        for (j, b) in truth.beta_star.iter().enumerate() {
            if *b != 0.0 {
                t.push_str(&format!("beta_{j},{b}\n"));
            }
        }
        fs::write(tpath, t)?;
    }
    Ok(format!(
        "wrote {}: n={} d={} outliers={}\n",
        args.out.display(),
        args.n,
        args.d,
        data.outliers.len()
    ))
}

pub fn run_bench_cmd(args: &BenchArgs) -> Result<String, CliError> {
    let text = read_input(&args.config)?;
    let cfg = parse_config(&text)?;
    let recs = run_bench(&cfg, args.jobs, args.timing)?;
    fs::write(&args.out, records::emit(&recs))?;
    Ok(format!("wrote {}: {} records\n", args.out.display(), recs.len()))
}

pub fn run_rates(args: &RatesArgs) -> Result<String, CliError> {
    let text = read_input(&args.csv)?;
    let recs = records::parse(&text)?;
    let lines = fit_rates(&recs, args.x, args.metric, args.group_by)?;
    Ok(render(&lines))
}

pub fn run_plot(args: &PlotArgs) -> Result<String, CliError> {
    let text = read_input(&args.input)?;
    let svg = match args.kind {
        PlotKind::Trace => render_trace_plot(&text)?,
        kind => {
            let recs = records::parse(&text)?;
            render_error_plot(&recs, kind, args.metric)?
        }
    };
    fs::write(&args.out, svg)?;
    Ok(format!("wrote {}\n", args.out.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::TempDir;

    fn write_dataset(dir: &TempDir, n: usize, d: usize, s: usize, sigma: f64) -> PathBuf {
        let spec = GenSpec {
            n,
            d,
            design: momsl::datagen::Design::GaussianIsotropic,
            beta_pattern: momsl::datagen::BetaPattern::PrefixOnes { s },
            noise: momsl::datagen::NoiseModel::Gaussian { sigma },
            contamination: momsl::datagen::Contamination::None,
            seed: 5,
        };
        let path = dir.path().join("data.csv");
        fs::write(&path, generate(&spec).unwrap().to_csv()).unwrap();
        path
    }

    fn fit_args(estimator: Estimator, data: PathBuf) -> FitArgs {
        FitArgs {
            estimator,
            sparsity: None,
            sigma_plus: None,
            blocks: "auto".into(),
            mu: None,
            s_plus: None,
            seed: 3,
            max_iters: 150,
            trace: None,
            data,
        }
    }

    #[test]
    fn fit_summary_has_the_frozen_field_order() {
        let dir = TempDir::new().unwrap();
        let data = write_dataset(&dir, 60, 8, 2, 0.3);
        let args = FitArgs {
            sparsity: Some(2),
            sigma_plus: Some(1.0),
            ..fit_args(Estimator::MomFixed, data)
        };
        let out = run_fit(&args).unwrap();
        let keys: Vec<&str> =
            out.lines().map(|l| l.split(':').next().unwrap()).take(11).collect();
        assert_eq!(
            keys,
            [
                "estimator",
                "n",
                "d",
                "blocks",
                "mu",
                "sigma_plus",
                "sigma_hat",
                "iterations",
                "converged",
                "objective",
                "beta_nonzeros"
            ]
        );
        assert!(out.contains("estimator: mom-fixed\n"));
        // rerun is byte-identical
        assert_eq!(out, run_fit(&args).unwrap());
    }

    #[test]
    fn fit_flag_matrix_rejects_mismatched_flags() {
        let dir = TempDir::new().unwrap();
        let data = write_dataset(&dir, 40, 6, 2, 0.3);
        let cases: Vec<(FitArgs, &str)> = vec![
            (
                fit_args(Estimator::MomFixed, data.clone()),
                "needs --sigma-plus",
            ),
            (
                FitArgs {
                    sigma_plus: Some(1.0),
                    ..fit_args(Estimator::MomFixed, data.clone())
                },
                "needs --sparsity",
            ),
            (
                FitArgs {
                    sigma_plus: Some(1.0),
                    blocks: "7".into(),
                    ..fit_args(Estimator::MomFixed, data.clone())
                },
                "needs --mu or --sparsity",
            ),
            (
                FitArgs {
                    sigma_plus: Some(1.0),
                    blocks: "seven".into(),
                    ..fit_args(Estimator::MomFixed, data.clone())
                },
                "`auto` or a positive integer",
            ),
            (
                FitArgs {
                    sparsity: Some(2),
                    sigma_plus: Some(1.0),
                    ..fit_args(Estimator::MomEstSigma, data.clone())
                },
                "drop --sigma-plus",
            ),
            (
                FitArgs {
                    blocks: "5".into(),
                    mu: Some(0.1),
                    ..fit_args(Estimator::SqrtLasso, data.clone())
                },
                "only available for mom-fixed",
            ),
            (
                FitArgs {
                    trace: Some(dir.path().join("t.csv")),
                    mu: Some(0.1),
                    ..fit_args(Estimator::Lasso, data.clone())
                },
                "only available for mom-fixed",
            ),
            (
                FitArgs {
                    sparsity: Some(2),
                    sigma_plus: Some(1.0),
                    ..fit_args(Estimator::MomAdaptive, data.clone())
                },
                "drop --sparsity",
            ),
            (
                FitArgs {
                    s_plus: Some(4),
                    mu: Some(0.1),
                    ..fit_args(Estimator::SqrtLasso, data)
                },
                "only applies to mom-adaptive",
            ),
        ];
        for (args, needle) in cases {
            let err = run_fit(&args).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{needle}");
            assert!(err.to_string().contains(needle), "`{err}` lacks `{needle}`");
        }
    }

    #[test]
    fn fit_infeasible_schedule_exits_3_and_explicit_blocks_override() {
        let dir = TempDir::new().unwrap();
        let data = write_dataset(&dir, 20, 64, 4, 0.3);
        let args = FitArgs {
            sparsity: Some(4),
            sigma_plus: Some(1.0),
            ..fit_args(Estimator::MomFixed, data.clone())
        };
        assert_eq!(run_fit(&args).unwrap_err().exit_code(), 3);
        // explicit --blocks sidesteps the schedule's feasibility complaint
        let args = FitArgs { blocks: "10".into(), ..args };
        let out = run_fit(&args).unwrap();
        assert!(out.contains("blocks: 10\n"));
    }

    #[test]
    fn fit_trace_file_has_monotone_iterations() {
        let dir = TempDir::new().unwrap();
        let data = write_dataset(&dir, 50, 6, 2, 0.3);
        let trace_path = dir.path().join("trace.csv");
        let args = FitArgs {
            sparsity: Some(2),
            sigma_plus: Some(1.0),
            trace: Some(trace_path.clone()),
            ..fit_args(Estimator::MomFixed, data)
        };
        run_fit(&args).unwrap();
        let text = fs::read_to_string(&trace_path).unwrap();
        assert!(text.starts_with("iteration,objective,median_block\n"));
        assert!(render_trace_plot(&text).is_ok(), "trace feeds the trace plot");
    }

    #[test]
    fn simulate_writes_dataset_and_truth() {
        let dir = TempDir::new().unwrap();
        let out = dir.path().join("sim.csv");
        let truth = dir.path().join("truth.csv");
        let args = SimulateArgs {
            n: 30,
            d: 5,
            sparsity: 2,
            sigma: 0.5,
            design: "gaussian".into(),
            noise: "gaussian".into(),
            contamination: "response:3:1000".into(),
            beta_pattern: "prefix".into(),
            seed: 9,
            out: out.clone(),
            truth_out: Some(truth.clone()),
        };
        let msg = run_simulate(&args).unwrap();
        assert_eq!(msg, format!("wrote {}: n=30 d=5 outliers=3\n", out.display()));
        let data = Dataset::from_csv(&fs::read_to_string(&out).unwrap()).unwrap();
        assert_eq!(data.y.len(), 30);
        let t = fs::read_to_string(&truth).unwrap();
        assert!(t.starts_with("key,value\nsigma_star,0.5\nbeta_0,1\nbeta_1,1\n"));
        // bad value syntax is a usage error
        let bad = SimulateArgs { design: "uniform".into(), ..args };
        assert_eq!(run_simulate(&bad).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn missing_input_files_are_usage_errors() {
        let gone = PathBuf::from("/nonexistent/nope.csv");
        assert_eq!(
            run_fit(&fit_args(Estimator::Lasso, gone.clone())).unwrap_err().exit_code(),
            2
        );
        let args = RatesArgs {
            x: XVar::N,
            metric: MetricKind::ErrL2,
            group_by: GroupBy::Estimator,
            csv: gone.clone(),
        };
        assert_eq!(run_rates(&args).unwrap_err().exit_code(), 2);
        let args = BenchArgs { config: gone, out: PathBuf::from("o.csv"), jobs: 1, timing: false };
        assert_eq!(run_bench_cmd(&args).unwrap_err().exit_code(), 2);
    }
}
