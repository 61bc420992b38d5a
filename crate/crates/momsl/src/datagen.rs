//! Synthetic regression data with ground truth retained, plus an outlier
//! injection operator.
//!
//! Generation is a pure function of the spec. Every row gets its own RNG
//! stream keyed by the row index, so output is independent of generation
//! order; coefficient-pattern and contamination randomness live on dedicated
//! streams.

use rand::distributions::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{dot, RowMatrix};

/// Row distribution for the design matrix. All designs have i.i.d. entries
/// with mean zero and unit variance, hence isotropic rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Design {
    GaussianIsotropic,
    /// Entries t_ν/√(ν/(ν−2)). Requires ν ≥ max(5, ln d): heavy tails are
    /// the point, but the row moments must stay controlled as d grows.
    StudentT { nu: f64 },
    /// Entries ±1.
    Rademacher,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    Gaussian { sigma: f64 },
    /// t_ν scaled to standard deviation `sigma`. ν > 4 keeps the fourth
    /// moment finite.
    StudentT { nu: f64, sigma: f64 },
}

impl NoiseModel {
    pub fn sigma(&self) -> f64 {
        match *self {
            NoiseModel::Gaussian { sigma } => sigma,
            NoiseModel::StudentT { sigma, .. } => sigma,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaPattern {
    /// 1 on the first `s` coordinates, 0 elsewhere.
    PrefixOnes { s: usize },
    /// ±magnitude on a seeded random support of size `s`.
    RandomSupport { s: usize, magnitude: f64 },
}

impl BetaPattern {
    pub fn sparsity(&self) -> usize {
        match *self {
            BetaPattern::PrefixOnes { s } => s,
            BetaPattern::RandomSupport { s, .. } => s,
        }
    }
}

/// Outlier model. `count` rows, chosen by seed, are modified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Contamination {
    None,
    /// Replace y_i by ±magnitude.
    Response { count: usize, magnitude: f64 },
    /// Scale the whole row x_i by `factor`; y_i untouched.
    Leverage { count: usize, factor: f64 },
    /// y_i ← −magnitude·y_i.
    Flip { count: usize, magnitude: f64 },
}

impl Contamination {
    pub fn count(&self) -> usize {
        match *self {
            Contamination::None => 0,
            Contamination::Response { count, .. }
            | Contamination::Leverage { count, .. }
            | Contamination::Flip { count, .. } => count,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub n: usize,
    pub d: usize,
    pub design: Design,
    pub beta_pattern: BetaPattern,
    pub noise: NoiseModel,
    pub contamination: Contamination,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub beta_star: Vec<f64>,
    pub sigma_star: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: RowMatrix,
    pub y: Vec<f64>,
    /// Present for synthetic data, absent for data read from CSV.
    pub truth: Option<GroundTruth>,
    /// Sorted indices of rows touched by contamination.
    pub outliers: Vec<usize>,
}

fn draw_design(rng: &mut ChaCha8Rng, design: Design) -> f64 {
    match design {
        Design::GaussianIsotropic => rng.sample(StandardNormal),
        Design::StudentT { nu } => {
            let t = rand_distr::StudentT::new(nu).expect("validated nu");
            t.sample(rng) * ((nu - 2.0) / nu).sqrt()
        }
        Design::Rademacher => {
            if rng.gen_bool(0.5) {
                1.0
            } else {
                -1.0
            }
        }
    }
}

fn draw_noise(rng: &mut ChaCha8Rng, noise: NoiseModel) -> f64 {
    match noise {
        NoiseModel::Gaussian { sigma } => {
            let z: f64 = rng.sample(StandardNormal);
            sigma * z
        }
        NoiseModel::StudentT { nu, sigma } => {
            let t = rand_distr::StudentT::new(nu).expect("validated nu");
            sigma * t.sample(rng) * ((nu - 2.0) / nu).sqrt()
        }
    }
}

fn validate(spec: &GenSpec) -> Result<()> {
    if spec.n == 0 || spec.d == 0 {
        return Err(Error::InvalidInput(format!(
            "need n ≥ 1 and d ≥ 1, got n={}, d={}",
            spec.n, spec.d
        )));
    }
    let s = spec.beta_pattern.sparsity();
    if s > spec.d {
        return Err(Error::InvalidInput(format!(
            "support size {s} exceeds dimension {}",
            spec.d
        )));
    }
    if let Design::StudentT { nu } = spec.design {
        let min_nu = 5.0f64.max((spec.d as f64).ln());
        if !(nu >= min_nu) {
            return Err(Error::InvalidInput(format!(
                "heavy-tailed design needs nu ≥ max(5, ln d) = {min_nu}, got {nu}"
            )));
        }
    }
    match spec.noise {
        NoiseModel::Gaussian { sigma } => {
            if !(sigma >= 0.0) {
                return Err(Error::InvalidInput(format!("noise sigma must be ≥ 0, got {sigma}")));
            }
        }
        NoiseModel::StudentT { nu, sigma } => {
            if !(sigma >= 0.0) {
                return Err(Error::InvalidInput(format!("noise sigma must be ≥ 0, got {sigma}")));
            }
            if !(nu > 4.0) {
                return Err(Error::InvalidInput(format!(
                    "heavy-tailed noise needs nu > 4 for a finite fourth moment, got {nu}"
                )));
            }
        }
    }
    if spec.contamination.count() > spec.n {
        return Err(Error::InvalidInput(format!(
            "cannot corrupt {} of {} rows",
            spec.contamination.count(),
            spec.n
        )));
    }
    Ok(())
}

fn beta_star(spec: &GenSpec) -> Vec<f64> {
    let mut beta = vec![0.0; spec.d];
    match spec.beta_pattern {
        BetaPattern::PrefixOnes { s } => {
            for b in beta.iter_mut().take(s) {
                *b = 1.0;
            }
        }
        BetaPattern::RandomSupport { s, magnitude } => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(0);
            let mut support = rand::seq::index::sample(&mut rng, spec.d, s).into_vec();
            support.sort_unstable();
            for j in support {
                beta[j] = if rng.gen_bool(0.5) { magnitude } else { -magnitude };
            }
        }
    }
    beta
}

/// Draw a dataset: X with i.i.d. isotropic rows, y = Xβ* + ζ, then the
/// contamination operator applied to `count` seeded rows.
pub fn generate(spec: &GenSpec) -> Result<Dataset> {
    validate(spec)?;
    let beta = beta_star(spec);
    let mut x = RowMatrix::zeros(spec.n, spec.d);
    let mut y = vec![0.0; spec.n];
    for i in 0..spec.n {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(2 + i as u64);
        let row = x.row_mut(i);
        for v in row.iter_mut() {
            *v = draw_design(&mut rng, spec.design);
        }
        y[i] = dot(x.row(i), &beta) + draw_noise(&mut rng, spec.noise);
    }
    let clean = Dataset {
        x,
        y,
        truth: Some(GroundTruth { beta_star: beta, sigma_star: spec.noise.sigma() }),
        outliers: Vec::new(),
    };
    let mut sub = ChaCha8Rng::seed_from_u64(spec.seed);
    sub.set_stream(1);
    contaminate(&clean, &spec.contamination, sub.gen())
}

/// Apply an outlier model to `count` seeded rows of `data`, returning the
/// corrupted copy with its outlier index set extended.
pub fn contaminate(data: &Dataset, model: &Contamination, seed: u64) -> Result<Dataset> {
    let n = data.y.len();
    if model.count() > n {
        return Err(Error::InvalidInput(format!(
            "cannot corrupt {} of {n} rows",
            model.count()
        )));
    }
    let mut out = data.clone();
    if model.count() == 0 {
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hit = rand::seq::index::sample(&mut rng, n, model.count()).into_vec();
    hit.sort_unstable();
    match *model {
        Contamination::None => unreachable!("count() == 0 handled above"),
        Contamination::Response { magnitude, .. } => {
            for &i in &hit {
                out.y[i] = if rng.gen_bool(0.5) { magnitude } else { -magnitude };
            }
        }
        Contamination::Leverage { factor, .. } => {
            for &i in &hit {
                for v in out.x.row_mut(i) {
                    *v *= factor;
                }
            }
        }
        Contamination::Flip { magnitude, .. } => {
            for &i in &hit {
                out.y[i] = -magnitude * out.y[i];
            }
        }
    }
    out.outliers.extend(hit);
    out.outliers.sort_unstable();
    out.outliers.dedup();
    Ok(out)
}

impl Dataset {
    /// CSV with header `y,x1,...,xd`. Floats print in shortest
    /// round-trip form, so write → read is lossless.
    pub fn to_csv(&self) -> String {
        let d = self.x.n_cols();
        let mut out = String::from("y");
        for j in 1..=d {
            out.push_str(&format!(",x{j}"));
        }
        out.push('\n');
        for i in 0..self.y.len() {
            out.push_str(&format!("{}", self.y[i]));
            for v in self.x.row(i) {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }

    /// Inverse of [`to_csv`](Self::to_csv). Ground truth and outlier
    /// provenance are not representable in the format, so `truth` is `None`.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Parse { line: 1, msg: "empty input".into() })?;
        let cols: Vec<&str> = header.split(',').collect();
        if cols[0] != "y" || cols.len() < 2 {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected header y,x1,...,xd, got {header:?}"),
            });
        }
        let d = cols.len() - 1;
        for (j, c) in cols[1..].iter().enumerate() {
            if *c != format!("x{}", j + 1) {
                return Err(Error::Parse {
                    line: 1,
                    msg: format!("expected column x{}, got {c:?}", j + 1),
                });
            }
        }
        let mut y = Vec::new();
        let mut data = Vec::new();
        for (idx, row) in lines {
            let line = idx + 1;
            if row.is_empty() {
                continue;
            }
            let fields: Vec<&str> = row.split(',').collect();
            if fields.len() != d + 1 {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected {} fields, got {}", d + 1, fields.len()),
                });
            }
            for (pos, f) in fields.iter().enumerate() {
                let v: f64 = f.trim().parse().map_err(|_| Error::Parse {
                    line,
                    msg: format!("bad number {f:?} in field {}", pos + 1),
                })?;
                if pos == 0 {
                    y.push(v);
                } else {
                    data.push(v);
                }
            }
        }
        let n = y.len();
        let x = RowMatrix::from_vec(n, d, data).expect("field count checked per row");
        Ok(Dataset { x, y, truth: None, outliers: Vec::new() })
    }
}
