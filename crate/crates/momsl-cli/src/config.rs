//! Flat `key = value` experiment configuration.
//!
//! Grid keys accept comma-separated lists and expand into a cartesian
//! product of cells: `n`, `d`, `s`, `sigma_star`, `design`, `noise`,
//! `contamination`, `iota_k`, `iota_mu`. Everything else is a scalar.
//! Lines are `key = value`; `#` starts a comment; no environment variables
//! are consulted.
//!
//! ```text
//! n             = 250, 500, 1000      # grid
//! d             = 200
//! s             = 4
//! sigma_star    = 0.5
//! design        = gaussian            # gaussian | student:NU | rademacher
//! noise         = gaussian            # gaussian | student:NU
//! contamination = none, response:20:10000
//! trials        = 30
//! estimators    = mom-fixed, sqrt-lasso
//! seed          = 42
//! sigma_plus    = 1
//! s_plus        = 32                  # adaptive sparsity bound
//! beta_pattern  = prefix              # prefix | random:MAGNITUDE
//! c1_tilde      = 2.5                 # block-count constant
//! c2_tilde      = 5                   # penalty constant
//! iota_k        = 1                   # sweepable tuning factors
//! iota_mu       = 1
//! max_iters     = 4000
//! ```

use momsl::datagen::{BetaPattern, Contamination, Design, GenSpec, NoiseModel};
use momsl::estimators::TuningSchedule;

use crate::errors::CliError;
use crate::records::Estimator;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseKind {
    Gaussian,
    Student { nu: f64 },
}

impl NoiseKind {
    pub fn to_model(self, sigma: f64) -> NoiseModel {
        match self {
            NoiseKind::Gaussian => NoiseModel::Gaussian { sigma },
            NoiseKind::Student { nu } => NoiseModel::StudentT { nu, sigma },
        }
    }

    fn slug(self) -> String {
        match self {
            NoiseKind::Gaussian => "gaussian".into(),
            NoiseKind::Student { nu } => format!("student{nu}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaPatternSpec {
    Prefix,
    Random { magnitude: f64 },
}

impl BetaPatternSpec {
    pub fn to_pattern(self, s: usize) -> BetaPattern {
        match self {
            BetaPatternSpec::Prefix => BetaPattern::PrefixOnes { s },
            BetaPatternSpec::Random { magnitude } => BetaPattern::RandomSupport { s, magnitude },
        }
    }
}

/// One grid point; the per-trial seed is injected later.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub n: usize,
    pub d: usize,
    pub s: usize,
    pub sigma_star: f64,
    pub design: Design,
    pub noise: NoiseKind,
    pub contamination: Contamination,
    pub iota_k: f64,
    pub iota_mu: f64,
}

impl Cell {
    pub fn gen_spec(&self, pattern: BetaPatternSpec, seed: u64) -> GenSpec {
        GenSpec {
            n: self.n,
            d: self.d,
            design: self.design,
            beta_pattern: pattern.to_pattern(self.s),
            noise: self.noise.to_model(self.sigma_star),
            contamination: self.contamination,
            seed,
        }
    }

    /// Stable identifier used in the bench CSV. The ι factors appear only
    /// when they deviate from 1 so that default runs keep compact ids.
    pub fn id(&self) -> String {
        let mut id = format!(
            "n{}_d{}_s{}_sig{}_{}_{}_{}",
            self.n,
            self.d,
            self.s,
            self.sigma_star,
            design_slug(self.design),
            self.noise.slug(),
            contamination_slug(self.contamination),
        );
        if self.iota_k != 1.0 {
            id.push_str(&format!("_ik{}", self.iota_k));
        }
        if self.iota_mu != 1.0 {
            id.push_str(&format!("_im{}", self.iota_mu));
        }
        id
    }
}

pub fn design_slug(d: Design) -> String {
    match d {
        Design::GaussianIsotropic => "gaussian".into(),
        Design::StudentT { nu } => format!("student{nu}"),
        Design::Rademacher => "rademacher".into(),
    }
}

pub fn contamination_slug(c: Contamination) -> String {
    match c {
        Contamination::None => "none".into(),
        Contamination::Response { count, magnitude } => format!("response{count}x{magnitude}"),
        Contamination::Leverage { count, factor } => format!("leverage{count}x{factor}"),
        Contamination::Flip { count, magnitude } => format!("flip{count}x{magnitude}"),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub cells: Vec<Cell>,
    pub trials: u64,
    pub estimators: Vec<Estimator>,
    pub seed: u64,
    pub sigma_plus: f64,
    pub s_plus: usize,
    pub beta_pattern: BetaPatternSpec,
    pub c1_tilde: f64,
    pub c2_tilde: f64,
    pub max_iters: usize,
}

impl ExperimentConfig {
    pub fn tuning_for(&self, cell: &Cell) -> TuningSchedule {
        TuningSchedule {
            c1_tilde: self.c1_tilde,
            c2_tilde: self.c2_tilde,
            iota_k: cell.iota_k,
            iota_mu: cell.iota_mu,
        }
    }
}

pub fn parse_design(raw: &str) -> Result<Design, String> {
    match raw.split_once(':') {
        None if raw == "gaussian" => Ok(Design::GaussianIsotropic),
        None if raw == "rademacher" => Ok(Design::Rademacher),
        Some(("student", nu)) => {
            let nu: f64 = nu.parse().map_err(|_| format!("bad student dof `{nu}`"))?;
            Ok(Design::StudentT { nu })
        }
        _ => Err(format!("unknown design `{raw}` (gaussian | student:NU | rademacher)")),
    }
}

pub fn parse_noise(raw: &str) -> Result<NoiseKind, String> {
    match raw.split_once(':') {
        None if raw == "gaussian" => Ok(NoiseKind::Gaussian),
        Some(("student", nu)) => {
            let nu: f64 = nu.parse().map_err(|_| format!("bad student dof `{nu}`"))?;
            Ok(NoiseKind::Student { nu })
        }
        _ => Err(format!("unknown noise `{raw}` (gaussian | student:NU)")),
    }
}

pub fn parse_contamination(raw: &str) -> Result<Contamination, String> {
    if raw == "none" {
        return Ok(Contamination::None);
    }
    let parts: Vec<&str> = raw.split(':').collect();
    if parts.len() != 3 {
        return Err(format!(
            "unknown contamination `{raw}` (none | response:COUNT:MAG | leverage:COUNT:FACTOR | flip:COUNT:MAG)"
        ));
    }
    let count: usize = parts[1].parse().map_err(|_| format!("bad count `{}`", parts[1]))?;
    let level: f64 = parts[2].parse().map_err(|_| format!("bad level `{}`", parts[2]))?;
    match parts[0] {
        "response" => Ok(Contamination::Response { count, magnitude: level }),
        "leverage" => Ok(Contamination::Leverage { count, factor: level }),
        "flip" => Ok(Contamination::Flip { count, magnitude: level }),
        other => Err(format!("unknown contamination kind `{other}`")),
    }
}

pub fn parse_beta_pattern(raw: &str) -> Result<BetaPatternSpec, String> {
    match raw.split_once(':') {
        None if raw == "prefix" => Ok(BetaPatternSpec::Prefix),
        Some(("random", mag)) => {
            let magnitude: f64 =
                mag.parse().map_err(|_| format!("bad magnitude `{mag}`"))?;
            Ok(BetaPatternSpec::Random { magnitude })
        }
        _ => Err(format!("unknown beta pattern `{raw}` (prefix | random:MAGNITUDE)")),
    }
}

const KNOWN_KEYS: [&str; 16] = [
    "n",
    "d",
    "s",
    "sigma_star",
    "design",
    "noise",
    "contamination",
    "iota_k",
    "iota_mu",
    "trials",
    "estimators",
    "seed",
    "sigma_plus",
    "s_plus",
    "beta_pattern",
    "max_iters",
];

pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let mut kv: Vec<(String, String, usize)> = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Usage(format!(
                "config line {lineno}: expected `key = value`, found `{line}`"
            )));
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) && !["c1_tilde", "c2_tilde"].contains(&key.as_str())
        {
            return Err(CliError::Usage(format!("config line {lineno}: unknown key `{key}`")));
        }
        if kv.iter().any(|(k, _, _)| *k == key) {
            return Err(CliError::Usage(format!("config line {lineno}: duplicate key `{key}`")));
        }
        kv.push((key, value, lineno));
    }

    let get = |key: &str| kv.iter().find(|(k, _, _)| k == key).map(|(_, v, l)| (v.as_str(), *l));
    let required = |key: &str| {
        get(key).ok_or_else(|| CliError::Usage(format!("config is missing required key `{key}`")))
    };
    fn list<T>(
        raw: (&str, usize),
        what: &str,
        f: impl Fn(&str) -> Result<T, String>,
    ) -> Result<Vec<T>, CliError> {
        let (value, lineno) = raw;
        let items: Result<Vec<T>, String> =
            value.split(',').map(|v| f(v.trim())).collect();
        let items =
            items.map_err(|e| CliError::Usage(format!("config line {lineno}: {what}: {e}")))?;
        if items.is_empty() {
            return Err(CliError::Usage(format!("config line {lineno}: empty {what} list")));
        }
        Ok(items)
    }
    fn scalar<T: std::str::FromStr>(
        raw: Option<(&str, usize)>,
        what: &str,
        default: T,
    ) -> Result<T, CliError> {
        match raw {
            None => Ok(default),
            Some((value, lineno)) => value.parse().map_err(|_| {
                CliError::Usage(format!("config line {lineno}: bad {what} `{value}`"))
            }),
        }
    }

    let parse_usize = |v: &str| v.parse::<usize>().map_err(|_| format!("bad integer `{v}`"));
    let parse_f64 = |v: &str| v.parse::<f64>().map_err(|_| format!("bad number `{v}`"));

    let ns = list(required("n")?, "n", parse_usize)?;
    let ds = list(required("d")?, "d", parse_usize)?;
    let ss = list(required("s")?, "s", parse_usize)?;
    let sigmas = list(required("sigma_star")?, "sigma_star", parse_f64)?;
    let designs = match get("design") {
        Some(raw) => list(raw, "design", parse_design)?,
        None => vec![Design::GaussianIsotropic],
    };
    let noises = match get("noise") {
        Some(raw) => list(raw, "noise", parse_noise)?,
        None => vec![NoiseKind::Gaussian],
    };
    let contams = match get("contamination") {
        Some(raw) => list(raw, "contamination", parse_contamination)?,
        None => vec![Contamination::None],
    };
    let iota_ks = match get("iota_k") {
        Some(raw) => list(raw, "iota_k", parse_f64)?,
        None => vec![1.0],
    };
    let iota_mus = match get("iota_mu") {
        Some(raw) => list(raw, "iota_mu", parse_f64)?,
        None => vec![1.0],
    };
    for (name, vals) in [("iota_k", &iota_ks), ("iota_mu", &iota_mus)] {
        for &v in vals {
            if !(0.5..=2.0).contains(&v) {
                return Err(CliError::Usage(format!("{name} must lie in [1/2, 2], got {v}")));
            }
        }
    }

    let estimators = list(required("estimators")?, "estimators", |v| {
        Estimator::parse(v).ok_or_else(|| format!("unknown estimator `{v}`"))
    })?;
    let trials: u64 = scalar(Some(required("trials")?), "trials", 0)?;
    if trials == 0 {
        return Err(CliError::Usage("trials must be ≥ 1".into()));
    }
    let seed: u64 = scalar(Some(required("seed")?), "seed", 0)?;
    let sigma_plus: f64 = scalar(get("sigma_plus"), "sigma_plus", 1.0)?;
    let s_plus: usize = scalar(get("s_plus"), "s_plus", 32)?;
    let max_iters: usize = scalar(get("max_iters"), "max_iters", 4000)?;
    let defaults = TuningSchedule::default();
    let c1_tilde: f64 = scalar(get("c1_tilde"), "c1_tilde", defaults.c1_tilde)?;
    let c2_tilde: f64 = scalar(get("c2_tilde"), "c2_tilde", defaults.c2_tilde)?;
    if !(c1_tilde > 0.0 && c2_tilde > 0.0) {
        return Err(CliError::Usage("tuning constants must be positive".into()));
    }
    let beta_pattern = match get("beta_pattern") {
        Some((value, lineno)) => parse_beta_pattern(value)
            .map_err(|e| CliError::Usage(format!("config line {lineno}: {e}")))?,
        None => BetaPatternSpec::Prefix,
    };

    let mut cells = Vec::new();
    for &n in &ns {
        for &d in &ds {
            for &s in &ss {
                for &sigma_star in &sigmas {
                    for &design in &designs {
                        for &noise in &noises {
                            for &contamination in &contams {
                                for &iota_k in &iota_ks {
                                    for &iota_mu in &iota_mus {
                                        cells.push(Cell {
                                            n,
                                            d,
                                            s,
                                            sigma_star,
                                            design,
                                            noise,
                                            contamination,
                                            iota_k,
                                            iota_mu,
                                        });
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    assert!(!cells.is_empty(), "nonempty lists always produce at least one cell");

    Ok(ExperimentConfig {
        cells,
        trials,
        estimators,
        seed,
        sigma_plus,
        s_plus,
        beta_pattern,
        c1_tilde,
        c2_tilde,
        max_iters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "\
n = 250, 500
d = 200
s = 4
sigma_star = 0.5
trials = 3
estimators = mom-fixed, sqrt-lasso
seed = 7
contamination = none, response:20:10000
";

    #[test]
    fn grid_expansion_and_defaults() {
        let cfg = parse_config(BASE).unwrap();
        assert_eq!(cfg.cells.len(), 4);
        assert_eq!(cfg.trials, 3);
        assert_eq!(cfg.estimators.len(), 2);
        assert_eq!(cfg.sigma_plus, 1.0);
        assert_eq!(cfg.s_plus, 32);
        assert_eq!(cfg.c1_tilde, TuningSchedule::default().c1_tilde);
        // ordering: n varies slowest, contamination fastest
        assert_eq!(cfg.cells[0].n, 250);
        assert_eq!(cfg.cells[0].contamination, Contamination::None);
        assert_eq!(
            cfg.cells[1].contamination,
            Contamination::Response { count: 20, magnitude: 1e4 }
        );
        assert_eq!(cfg.cells[2].n, 500);
    }

    #[test]
    fn cell_ids_are_stable_and_comma_free() {
        let cfg = parse_config(BASE).unwrap();
        assert_eq!(cfg.cells[0].id(), "n250_d200_s4_sig0.5_gaussian_gaussian_none");
        assert_eq!(
            cfg.cells[1].id(),
            "n250_d200_s4_sig0.5_gaussian_gaussian_response20x10000"
        );
        for c in &cfg.cells {
            assert!(!c.id().contains(','));
        }
    }

    #[test]
    fn iota_grid_is_sweepable_and_marked_in_ids() {
        let text = format!("{BASE}iota_k = 0.5, 1\n");
        let cfg = parse_config(&text).unwrap();
        assert_eq!(cfg.cells.len(), 8);
        assert!(cfg.cells[0].id().ends_with("_ik0.5"));
        assert!(!cfg.cells[1].id().contains("_ik"));
        let t = cfg.tuning_for(&cfg.cells[0]);
        assert_eq!(t.iota_k, 0.5);
    }

    #[test]
    fn rejects_malformed_input() {
        for (bad, needle) in [
            ("n = 250\n", "missing required key"),
            (&format!("{BASE}bogus = 3\n") as &str, "unknown key `bogus`"),
            (&format!("{BASE}n = 10\n"), "duplicate key `n`"),
            (&format!("{BASE}iota_k = 9\n"), "must lie in [1/2, 2]"),
            ("just words\n", "expected `key = value`"),
            (&BASE.replace("mom-fixed", "ols"), "unknown estimator"),
            (&BASE.replace("trials = 3", "trials = 0"), "trials must be"),
        ] {
            let err = parse_config(bad).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{bad}");
            assert!(err.to_string().contains(needle), "`{err}` lacks `{needle}`");
        }
    }

    #[test]
    fn value_parsers_cover_the_documented_syntax() {
        assert!(matches!(parse_design("student:7"), Ok(Design::StudentT { .. })));
        assert!(parse_design("uniform").is_err());
        assert!(matches!(parse_noise("student:5"), Ok(NoiseKind::Student { .. })));
        assert!(matches!(
            parse_contamination("leverage:10:50"),
            Ok(Contamination::Leverage { count: 10, .. })
        ));
        assert!(matches!(
            parse_contamination("flip:5:2"),
            Ok(Contamination::Flip { count: 5, .. })
        ));
        assert!(parse_contamination("response:20").is_err());
        assert!(matches!(
            parse_beta_pattern("random:2.5"),
            Ok(BetaPatternSpec::Random { .. })
        ));
    }
}
