//! The convex-concave criterion.
//!
//! Two candidates compete: the min player (β, σ) and the max player (γ, χ),
//! each a coefficient vector paired with a noise-scale guess. Per sample, the
//! functional `r_c` pairs their squared losses antisymmetrically; per block,
//! `block_criterion` averages it; globally, `t_k_mu` takes the median over
//! blocks and adds the ℓ₁ penalty gap μ(|β|₁ − |γ|₁).
//!
//! `r_c` is 1-homogeneous jointly in (y-scale, β, σ, γ, χ), which is what
//! makes the penalty level μ noise-scale-free. The naive difference of
//! square-root-lasso objectives (`r_c_naive`) lacks this stability as the
//! scale variables approach zero; it is kept only for side-by-side
//! exploration and is used by nothing else.

use crate::error::{Error, Result};
use crate::linalg::{dot, l1_norm, RowMatrix};
use crate::mom::{quantile, BlockPartition};

/// Parameters of the criterion. `c` controls the weight of the loss-gap term
/// (theory wants c > 2), `mu` the ℓ₁ penalty, and the two scale bounds box
/// the noise variables: σ, χ ∈ [sigma_floor, sigma_plus].
#[derive(Debug, Clone, PartialEq)]
pub struct CriterionParams {
    pub c: f64,
    pub mu: f64,
    pub sigma_plus: f64,
    pub sigma_floor: f64,
}

impl CriterionParams {
    /// Default floor: 10⁻⁶·σ₊. The criterion's natural domain is open at 0;
    /// the floor only prevents division blow-up in pathological states.
    pub fn new(c: f64, mu: f64, sigma_plus: f64) -> Result<Self> {
        Self::with_floor(c, mu, sigma_plus, 1e-6 * sigma_plus)
    }

    pub fn with_floor(c: f64, mu: f64, sigma_plus: f64, sigma_floor: f64) -> Result<Self> {
        if !(c > 2.0) {
            return Err(Error::InvalidInput(format!("criterion constant must exceed 2, got {c}")));
        }
        if !(mu >= 0.0) {
            return Err(Error::InvalidInput(format!("penalty must be nonnegative, got {mu}")));
        }
        if !(sigma_plus > 0.0) {
            return Err(Error::InvalidInput(format!("scale bound must be positive, got {sigma_plus}")));
        }
        if !(sigma_floor > 0.0 && sigma_floor < sigma_plus) {
            return Err(Error::InvalidInput(format!(
                "scale floor must lie in (0, {sigma_plus}), got {sigma_floor}"
            )));
        }
        Ok(CriterionParams { c, mu, sigma_plus, sigma_floor })
    }
}

/// One player's state: coefficients and a noise-scale candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct PlayerPoint {
    pub beta: Vec<f64>,
    pub sigma: f64,
}

impl PlayerPoint {
    pub fn origin(d: usize, sigma: f64) -> Self {
        PlayerPoint { beta: vec![0.0; d], sigma }
    }
}

/// (y − xᵀβ)².
///
/// Panics if `beta` and `x` have different lengths.
pub fn squared_loss(beta: &[f64], x: &[f64], y: f64) -> f64 {
    assert_eq!(beta.len(), x.len(), "squared_loss: dimension mismatch");
    let r = y - dot(x, beta);
    r * r
}

/// The pairing functional
/// (σ−χ)·(1 − 2(ℓ_f+ℓ_g)/(σ+χ)²) + 2c(ℓ_f−ℓ_g)/(σ+χ).
///
/// Antisymmetric under swapping (ℓ_g, χ) ↔ (ℓ_f, σ); affine and decreasing
/// in ℓ_g for c > 1. Panics on nonpositive scales.
pub fn r_c(ell_g: f64, chi: f64, ell_f: f64, sigma: f64, c: f64) -> f64 {
    assert!(sigma > 0.0 && chi > 0.0, "r_c: scales must be positive");
    let s = sigma + chi;
    let d = sigma - chi;
    d * (1.0 - 2.0 * (ell_f + ell_g) / (s * s)) + 2.0 * c * (ell_f - ell_g) / s
}

/// Naive difference of square-root-lasso objectives, ℓ_f/σ + σ − ℓ_g/χ − χ.
/// Unstable as χ → 0 (the 1/χ pole); exploratory comparison only.
pub fn r_c_naive(ell_g: f64, chi: f64, ell_f: f64, sigma: f64) -> f64 {
    assert!(sigma > 0.0 && chi > 0.0, "r_c_naive: scales must be positive");
    ell_f / sigma + sigma - ell_g / chi - chi
}

/// Mean of `r_c` over the samples of one block, in ascending index order.
///
/// Panics if the block is empty or an index is out of range.
pub fn block_criterion(
    x: &RowMatrix,
    y: &[f64],
    block: &[usize],
    min_player: &PlayerPoint,
    max_player: &PlayerPoint,
    params: &CriterionParams,
) -> f64 {
    assert!(!block.is_empty(), "block_criterion: empty block");
    let mut acc = 0.0;
    for &i in block {
        let lf = squared_loss(&min_player.beta, x.row(i), y[i]);
        let lg = squared_loss(&max_player.beta, x.row(i), y[i]);
        acc += r_c(lg, max_player.sigma, lf, min_player.sigma, params.c);
    }
    acc / block.len() as f64
}

/// The penalized global criterion: median over blocks of `block_criterion`
/// plus μ·(|β|₁ − |γ|₁).
pub fn t_k_mu(
    x: &RowMatrix,
    y: &[f64],
    partition: &BlockPartition,
    min_player: &PlayerPoint,
    max_player: &PlayerPoint,
    params: &CriterionParams,
) -> Result<f64> {
    let vals: Vec<f64> = partition
        .blocks()
        .iter()
        .map(|blk| block_criterion(x, y, blk, min_player, max_player, params))
        .collect();
    let med = quantile(&vals, 0.5)?;
    Ok(med + params.mu * (l1_norm(&min_player.beta) - l1_norm(&max_player.beta)))
}

/// Gradients of `block_criterion` with respect to all four variables,
/// averaged over the block. The penalty is *not* included: it is handled by
/// the solver's proximal step.
#[derive(Debug, Clone)]
pub struct BlockGradients {
    pub beta: Vec<f64>,
    pub sigma: f64,
    pub gamma: Vec<f64>,
    pub chi: f64,
}

/// Closed forms, with S = σ+χ, D = σ−χ, L₊ = ℓ_f+ℓ_g, L₋ = ℓ_f−ℓ_g:
///   ∂r/∂ℓ_f = −2D/S² + 2c/S          ∂r/∂ℓ_g = −2D/S² − 2c/S
///   ∂r/∂σ   = 1 − 2L₊(S−2D)/S³ − 2cL₋/S²
///   ∂r/∂χ   = −1 + 2L₊(S+2D)/S³ − 2cL₋/S²
/// and the chain rule contributes ∂ℓ_β/∂β = −2(y−xᵀβ)·x per sample.
pub fn block_criterion_gradients(
    x: &RowMatrix,
    y: &[f64],
    block: &[usize],
    min_player: &PlayerPoint,
    max_player: &PlayerPoint,
    params: &CriterionParams,
) -> BlockGradients {
    assert!(!block.is_empty(), "block_criterion_gradients: empty block");
    let d = x.n_cols();
    let c = params.c;
    let sigma = min_player.sigma;
    let chi = max_player.sigma;
    assert!(sigma > 0.0 && chi > 0.0, "block_criterion_gradients: scales must be positive");
    let s = sigma + chi;
    let dd = sigma - chi;
    let s2 = s * s;
    let s3 = s2 * s;
    let dr_dlf = -2.0 * dd / s2 + 2.0 * c / s;
    let dr_dlg = -2.0 * dd / s2 - 2.0 * c / s;

    let mut g_beta = vec![0.0; d];
    let mut g_gamma = vec![0.0; d];
    let mut g_sigma = 0.0;
    let mut g_chi = 0.0;
    for &i in block {
        let xi = x.row(i);
        let rf = y[i] - dot(xi, &min_player.beta);
        let rg = y[i] - dot(xi, &max_player.beta);
        let lf = rf * rf;
        let lg = rg * rg;
        let lp = lf + lg;
        let lm = lf - lg;
        g_sigma += 1.0 - 2.0 * lp * (s - 2.0 * dd) / s3 - 2.0 * c * lm / s2;
        g_chi += -1.0 + 2.0 * lp * (s + 2.0 * dd) / s3 - 2.0 * c * lm / s2;
        let cf = dr_dlf * (-2.0 * rf);
        let cg = dr_dlg * (-2.0 * rg);
        for j in 0..d {
            g_beta[j] += cf * xi[j];
            g_gamma[j] += cg * xi[j];
        }
    }
    let inv = 1.0 / block.len() as f64;
    for v in g_beta.iter_mut().chain(g_gamma.iter_mut()) {
        *v *= inv;
    }
    BlockGradients { beta: g_beta, sigma: g_sigma * inv, gamma: g_gamma, chi: g_chi * inv }
}
