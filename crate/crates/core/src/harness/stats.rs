//! Statistical utilities for the experiment harness.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Sample mean.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Root mean squared value (used on error samples, so no centering).
pub fn rmse(errors: &[f64]) -> f64 {
    (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt()
}

/// Two-sample Kolmogorov–Smirnov statistic: the sup distance between the
/// empirical CDFs.
pub fn ks_distance(sample_a: &[f64], sample_b: &[f64]) -> Result<f64> {
    if sample_a.is_empty() || sample_b.is_empty() {
        return Err(Error::Domain("KS distance needs two non-empty samples".into()));
    }
    let mut a = sample_a.to_vec();
    let mut b = sample_b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let step_a = 1.0 / a.len() as f64;
    let step_b = 1.0 / b.len() as f64;
    let (mut i, mut j) = (0usize, 0usize);
    let mut cdf_gap = 0.0f64;
    let mut sup = 0.0f64;
    while i < a.len() || j < b.len() {
        let next_a = a.get(i).copied().unwrap_or(f64::INFINITY);
        let next_b = b.get(j).copied().unwrap_or(f64::INFINITY);
        if next_a <= next_b {
            cdf_gap += step_a;
            i += 1;
        }
        if next_b <= next_a {
            cdf_gap -= step_b;
            j += 1;
        }
        sup = sup.max(cdf_gap.abs());
    }
    Ok(sup)
}

/// Fraction of |error_i| <= z_{(1+level)/2} sqrt(variance_i).
pub fn coverage(errors: &[f64], variances: &[f64], level: f64) -> Result<f64> {
    if errors.len() != variances.len() || errors.is_empty() {
        return Err(Error::Domain("coverage needs matching non-empty samples".into()));
    }
    if !(0.0 < level && level < 1.0) {
        return Err(Error::Domain(format!("confidence level {level} outside (0, 1)")));
    }
    if variances.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Domain("coverage needs strictly positive variances".into()));
    }
    let z = Normal::standard().inverse_cdf(0.5 * (1.0 + level));
    let hits = errors
        .iter()
        .zip(variances.iter())
        .filter(|(e, v)| e.abs() <= z * v.sqrt())
        .count();
    Ok(hits as f64 / errors.len() as f64)
}

/// Least-squares slope of log(rmse) against log(delta).
pub fn rate_regression(delta_grid: &[f64], rmse_per_delta: &[f64]) -> Result<f64> {
    if delta_grid.len() != rmse_per_delta.len() || delta_grid.len() < 3 {
        return Err(Error::Domain("rate regression needs at least three grid points".into()));
    }
    if delta_grid.iter().chain(rmse_per_delta.iter()).any(|v| !(*v > 0.0)) {
        return Err(Error::Domain("rate regression needs positive deltas and errors".into()));
    }
    let xs: Vec<f64> = delta_grid.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = rmse_per_delta.iter().map(|r| r.ln()).collect();
    let mx = mean(&xs);
    let my = mean(&ys);
    let sxy: f64 = xs.iter().zip(ys.iter()).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}
