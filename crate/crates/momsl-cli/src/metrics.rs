//! Coefficient-error metrics and the ℓ_p interpolation bound.

/// ‖a − b‖_p for p ≥ 1.
pub fn lp_err(a: &[f64], b: &[f64], p: f64) -> f64 {
    assert_eq!(a.len(), b.len(), "length mismatch: {} vs {}", a.len(), b.len());
    assert!(p >= 1.0, "lp_err needs p ≥ 1, got {p}");
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs().powf(p))
        .sum::<f64>()
        .powf(1.0 / p)
}

pub fn l1_err(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "length mismatch: {} vs {}", a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

pub fn l2_err(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "length mismatch: {} vs {}", a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// ‖v‖_1^{2/p−1}·‖v‖_2^{2−2/p}: for p ∈ [1, 2] the norm-interpolation upper
/// bound on ‖v‖_p.
pub fn interpolation_bound(l1: f64, l2: f64, p: f64) -> f64 {
    assert!((1.0..=2.0).contains(&p), "interpolation holds for p ∈ [1,2], got {p}");
    l1.powf(2.0 / p - 1.0) * l2.powf(2.0 - 2.0 / p)
}

/// Sample standard deviation (denominator n − 1; 0 for n < 2).
pub fn sample_sd(y: &[f64]) -> f64 {
    if y.len() < 2 {
        return 0.0;
    }
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    (y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
}
