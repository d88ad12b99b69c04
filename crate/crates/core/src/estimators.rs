//! Power variations, realized skewness and the pre-averaged estimators.
//!
//! All sums run over increments with t_i within the horizon, i.e. over
//! i = 1..N with N = max{i : t_i <= T}; observations beyond the horizon are
//! excluded exactly as the estimator definitions require.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{KernelConstants, KernelSpec};
use crate::simkit::SamplingTimes;

/// Guard threshold on the realized-volatility denominator of the skewness.
pub const RV_GUARD: f64 = 1e-12;
/// Guard threshold on PRV in the noisy skewness ratio.
pub const PRV_GUARD: f64 = 1e-10;
/// Relative tolerance of the summation-by-parts self-check in pre-averaging.
const SBP_TOLERANCE: f64 = 1e-12;

/// An observed series: values aligned with observation times.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedSeries {
    pub times: SamplingTimes,
    pub values: Vec<f64>,
    pub is_noisy: bool,
}

impl ObservedSeries {
    pub fn new(times: SamplingTimes, values: Vec<f64>, is_noisy: bool) -> Result<Self> {
        if times.times.len() != values.len() {
            return Err(Error::Domain(format!(
                "series length {} does not match {} observation times",
                values.len(),
                times.times.len()
            )));
        }
        Ok(Self { times, values, is_noisy })
    }

    /// Number of increments within the horizon.
    fn n_increments(&self) -> usize {
        self.times.n_count.min(self.values.len().saturating_sub(1))
    }

    fn increment(&self, i: usize) -> f64 {
        self.values[i] - self.values[i - 1]
    }
}

/// Test functions for raw power variations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum PowerFunction {
    Square,
    Cube,
    AbsCube,
    /// g_a(x) = |x|^3 sin(2a log|x|), extended by its limit g_a(0) = 0.
    Oscillating { a: f64 },
}

impl PowerFunction {
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            PowerFunction::Square => x * x,
            PowerFunction::Cube => x * x * x,
            PowerFunction::AbsCube => {
                let a = x.abs();
                a * a * a
            }
            PowerFunction::Oscillating { a } => {
                if x == 0.0 {
                    0.0
                } else {
                    let m = x.abs();
                    m * m * m * (2.0 * a * m.ln()).sin()
                }
            }
        }
    }
}

/// Sum of g over the increments within the horizon.
pub fn power_variation(series: &ObservedSeries, g: PowerFunction) -> Result<f64> {
    power_variation_with(series, |x| g.apply(x))
}

/// Power variation for an arbitrary test function.
pub fn power_variation_with(series: &ObservedSeries, g: impl Fn(f64) -> f64) -> Result<f64> {
    if series.values.len() < 2 {
        return Err(Error::Domain("power variation needs at least two observations".into()));
    }
    let n = series.n_increments();
    Ok((1..=n).map(|i| g(series.increment(i))).sum())
}

/// Realized skewness output: the raw statistic, the consistent rescaling and
/// the irregular-grid variant that replaces the floor count by N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RealizedSkewness {
    /// floor(T / delta_n) * sum of cubed increments / (sum of squared)^{3/2}.
    pub raw: f64,
    /// raw / floor(T / delta_n); the consistent estimator of the skewness.
    pub scaled: f64,
    /// Variant of `raw` scaled by the realized count N instead of the floor;
    /// the definitions coincide on the equidistant grid.
    pub raw_ncount: f64,
}

/// Computes the realized skewness of a series.
pub fn realized_skewness(series: &ObservedSeries, delta_n: f64, horizon: f64) -> Result<RealizedSkewness> {
    if series.values.len() < 2 {
        return Err(Error::Domain("realized skewness needs at least two observations".into()));
    }
    if delta_n <= 0.0 || horizon <= 0.0 {
        return Err(Error::Domain("delta_n and horizon must be positive".into()));
    }
    let rv = power_variation(series, PowerFunction::Square)?;
    if rv <= RV_GUARD {
        return Err(Error::DegenerateDenominator(format!(
            "realized volatility {rv} at or below guard {RV_GUARD}"
        )));
    }
    let cubic = power_variation(series, PowerFunction::Cube)?;
    let scaled = cubic / (rv * rv.sqrt());
    let floor_count = (horizon / delta_n).floor();
    Ok(RealizedSkewness {
        raw: floor_count * scaled,
        scaled,
        raw_ncount: series.n_increments() as f64 * scaled,
    })
}

/// Pre-averaging window length k_n = max(2, round(theta / sqrt(delta_n))).
pub fn choose_kn(theta: f64, delta_n: f64) -> usize {
    let k = (theta / delta_n.sqrt()).round();
    if k.is_finite() && k >= 2.0 {
        k as usize
    } else {
        2
    }
}

/// Weighted pre-averaged increments
/// V̄_i = Σ_{p=1}^{k_n-1} g(p/k_n) (V_{i+p} − V_{i+p−1}), i = 0..N−k_n+1.
///
/// Every window is cross-checked against the summation-by-parts form
/// −Σ_{p=0}^{k_n−1} Δg_p (V_{i+p} − V_i); disagreement beyond 1e-12 relative
/// reports an internal error.
pub fn preaverage(series: &ObservedSeries, k_n: usize, kernel: &KernelSpec) -> Result<Vec<f64>> {
    let n = series.n_increments();
    if k_n < 2 {
        return Err(Error::Domain(format!("window length {k_n} must be at least 2")));
    }
    if n + 1 < k_n {
        return Err(Error::Domain(format!(
            "series with {} usable observations is shorter than the window {k_n}",
            n + 1
        )));
    }

    let weights: Vec<f64> = (1..k_n).map(|p| kernel.eval(p as f64 / k_n as f64)).collect::<Result<_>>()?;
    // Delta(g)_p = g((p+1)/k_n) - g(p/k_n) for p = 0..k_n-1, with g(0)=g(1)=0.
    let mut deltas = Vec::with_capacity(k_n);
    for p in 0..k_n {
        let right = if p + 1 == k_n { 0.0 } else { weights[p] };
        let left = if p == 0 { 0.0 } else { weights[p - 1] };
        deltas.push(right - left);
    }

    let last_window = n + 1 - k_n; // inclusive upper bound for i
    let mut out = Vec::with_capacity(last_window + 1);
    for i in 0..=last_window {
        let mut direct = 0.0;
        for (p, w) in weights.iter().enumerate() {
            direct += w * (series.values[i + p + 1] - series.values[i + p]);
        }
        let mut sbp = 0.0;
        for (p, d) in deltas.iter().enumerate() {
            sbp -= d * (series.values[i + p] - series.values[i]);
        }
        let scale = direct.abs().max(sbp.abs()).max(1.0);
        if (direct - sbp).abs() > SBP_TOLERANCE * scale {
            return Err(Error::Internal(format!(
                "summation-by-parts mismatch at window {i}: {direct} vs {sbp}"
            )));
        }
        out.push(direct);
    }
    Ok(out)
}

/// Pre-averaged realized volatility
/// PRV = (ψ₂ k_n)⁻¹ Σ (Ȳ_i)² − ψ₁/(2 ψ₂ k_n²) Σ (Y_{t_i} − Y_{t_{i-1}})².
///
/// The second term removes the noise bias of the first: the pre-averaged
/// noise contributes N α ψ₁/(ψ₂ k_n²) in expectation, which the k_n²-scaled
/// realized volatility of the raw increments cancels.
///
/// The bias correction may push small-sample values negative; the value is
/// returned as-is.
pub fn prv(
    series: &ObservedSeries,
    k_n: usize,
    kernel: &KernelSpec,
    constants: &KernelConstants,
) -> Result<f64> {
    let bars = preaverage(series, k_n, kernel)?;
    let main: f64 = bars.iter().map(|b| b * b).sum();
    let n = series.n_increments();
    let rv: f64 = (1..=n).map(|i| series.increment(i)).map(|d| d * d).sum();
    let kf = k_n as f64;
    Ok(main / (constants.psi2 * kf) - constants.psi1 * rv / (2.0 * constants.psi2 * kf * kf))
}

/// Pre-averaged cubic power variation PCV = (ψ₃ k_n)⁻¹ Σ (Ȳ_i)³.
pub fn pcv(
    series: &ObservedSeries,
    k_n: usize,
    kernel: &KernelSpec,
    constants: &KernelConstants,
) -> Result<f64> {
    let bars = preaverage(series, k_n, kernel)?;
    let main: f64 = bars.iter().map(|b| b * b * b).sum();
    Ok(main / (constants.psi3 * k_n as f64))
}

/// Noisy skewness ratio PCV / PRV^{3/2}; PRV at or below the guard is a
/// degenerate-denominator error so the harness can count it.
pub fn noisy_skew(prv_value: f64, pcv_value: f64) -> Result<f64> {
    if !(prv_value > PRV_GUARD) {
        return Err(Error::DegenerateDenominator(format!(
            "PRV {prv_value} at or below guard {PRV_GUARD}"
        )));
    }
    Ok(pcv_value / (prv_value * prv_value.sqrt()))
}

/// Tuning metadata attached to a set of estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tuning {
    pub delta_n: f64,
    pub theta: f64,
    pub k_n: usize,
    pub kernel_id: String,
}

/// Every estimator output for one observed series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateSet {
    pub rv: f64,
    pub cubic_pv: f64,
    pub abs_cubic_pv: f64,
    pub rdskew_raw: f64,
    pub rdskew_scaled: f64,
    pub rdskew_raw_ncount: f64,
    pub prv: f64,
    pub pcv: f64,
    /// PCV / PRV^{3/2}; absent when PRV is at or below its guard.
    pub noisy_skew: Option<f64>,
    pub tuning: Tuning,
}

/// Computes the full estimate set for one series.
pub fn estimate_all(
    series: &ObservedSeries,
    delta_n: f64,
    horizon: f64,
    theta: f64,
    kernel: &KernelSpec,
    constants: &KernelConstants,
) -> Result<EstimateSet> {
    if theta <= 0.0 {
        return Err(Error::Config(format!("theta {theta} must be positive")));
    }
    let rv = power_variation(series, PowerFunction::Square)?;
    let cubic_pv = power_variation(series, PowerFunction::Cube)?;
    let abs_cubic_pv = power_variation(series, PowerFunction::AbsCube)?;
    let skew = realized_skewness(series, delta_n, horizon)?;
    let k_n = choose_kn(theta, delta_n);
    let prv_value = prv(series, k_n, kernel, constants)?;
    let pcv_value = pcv(series, k_n, kernel, constants)?;
    let ratio = noisy_skew(prv_value, pcv_value).ok();
    Ok(EstimateSet {
        rv,
        cubic_pv,
        abs_cubic_pv,
        rdskew_raw: skew.raw,
        rdskew_scaled: skew.scaled,
        rdskew_raw_ncount: skew.raw_ncount,
        prv: prv_value,
        pcv: pcv_value,
        noisy_skew: ratio,
        tuning: Tuning { delta_n, theta, k_n, kernel_id: kernel.id().to_string() },
    })
}
