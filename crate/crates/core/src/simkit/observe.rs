//! Sampling a path at observation times and contaminating it with noise.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::{stream_rng, StreamKind};

use super::model::NoiseModel;
use super::model::NoiseFamily;
use super::path::PathRecord;
use super::sampling::SamplingTimes;

/// Latent values X_{t_i} by exact grid lookup (no interpolation). Fails if an
/// observation time was not inserted into the simulation grid.
pub fn sample_process(path: &PathRecord, times: &SamplingTimes) -> Result<Vec<f64>> {
    times
        .times
        .iter()
        .map(|&t| path.grid_index(t).map(|i| path.x[i]))
        .collect()
}

/// Spot volatility at the observation times, by the same exact lookup.
pub fn sigma_at_times(path: &PathRecord, times: &SamplingTimes) -> Result<Vec<f64>> {
    times
        .times
        .iter()
        .map(|&t| path.grid_index(t).map(|i| path.sigma[i]))
        .collect()
}

/// Observed series Y_i = X_i + eps_i with eps independent across i given the
/// path, Var(eps_i) = alpha(t_i). `sigma` must be supplied (aligned with
/// `times`) when the variance process couples to volatility.
pub fn apply_noise(
    latent: &[f64],
    times: &SamplingTimes,
    noise: &NoiseModel,
    seed: u64,
    sigma: Option<&[f64]>,
) -> Result<Vec<f64>> {
    noise.validate()?;
    if latent.len() != times.times.len() {
        return Err(Error::Domain(format!(
            "latent series length {} does not match {} observation times",
            latent.len(),
            times.times.len()
        )));
    }
    if noise.variance.needs_sigma() {
        match sigma {
            Some(s) if s.len() == latent.len() => {}
            _ => {
                return Err(Error::Config(
                    "sigma-coupled noise needs spot volatility at the observation times".into(),
                ))
            }
        }
    }

    let mut rng = stream_rng(seed, 0, StreamKind::Noise);
    let mut out = Vec::with_capacity(latent.len());
    for (i, (&x, &t)) in latent.iter().zip(times.times.iter()).enumerate() {
        let s = sigma.map(|v| v[i]).unwrap_or(0.0);
        let alpha = noise.variance.value(t, s);
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(Error::Config(format!("noise variance {alpha} at t = {t}")));
        }
        let eps = if alpha == 0.0 {
            0.0
        } else {
            let sd = alpha.sqrt();
            match noise.family {
                NoiseFamily::Gaussian => sd * rng.sample::<f64, _>(StandardNormal),
                NoiseFamily::TwoPoint => {
                    if rng.random::<bool>() {
                        sd
                    } else {
                        -sd
                    }
                }
            }
        };
        out.push(x + eps);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simkit::model::{AlphaSpec, JumpModel, ModelSpec};
    use crate::simkit::path::simulate_path_with_times;
    use crate::simkit::sampling::{generate_times, SamplingScheme};

    fn pipeline(sigma: f64, delta: f64) -> (PathRecord, SamplingTimes) {
        let model = ModelSpec::constant_vol(sigma, 1.0);
        let times = generate_times(&SamplingScheme::Equidistant, delta, 1.0, 3, None).unwrap();
        let path = simulate_path_with_times(&model, delta / 10.0, 3, &times.times).unwrap();
        (path, times)
    }

    #[test]
    fn constant_path_samples_constant() {
        let (path, times) = pipeline(0.0, 0.25);
        let series = sample_process(&path, &times).unwrap();
        assert!(series.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn one_jump_straddled_by_exactly_one_increment() {
        let model = ModelSpec::constant_vol(0.0, 1.0)
            .with_jumps(JumpModel::Deterministic { jumps: vec![(0.5, 2.5)] });
        let times = generate_times(&SamplingScheme::Equidistant, 0.2, 1.0, 0, None).unwrap();
        let path = simulate_path_with_times(&model, 0.02, 0, &times.times).unwrap();
        let series = sample_process(&path, &times).unwrap();
        let increments: Vec<f64> = series.windows(2).map(|w| w[1] - w[0]).collect();
        let nonzero: Vec<&f64> = increments.iter().filter(|v| **v != 0.0).collect();
        assert_eq!(nonzero.len(), 1);
        assert_eq!(*nonzero[0], 2.5);
    }

    #[test]
    fn increments_telescope() {
        let (path, times) = pipeline(0.7, 0.01);
        let series = sample_process(&path, &times).unwrap();
        let sum: f64 = series.windows(2).map(|w| w[1] - w[0]).sum();
        let expected = series.last().unwrap() - series.first().unwrap();
        // Correctly rounded differences telescope to machine precision.
        let tol = 2.0 * series.len() as f64 * f64::EPSILON;
        assert!((sum - expected).abs() <= tol, "{sum} vs {expected}");
    }

    #[test]
    fn missing_grid_time_is_an_internal_error() {
        let (path, _) = pipeline(0.1, 0.25);
        let foreign = generate_times(&SamplingScheme::Equidistant, 0.3, 1.0, 0, None).unwrap();
        assert!(matches!(sample_process(&path, &foreign), Err(Error::Internal(_))));
    }

    #[test]
    fn zero_noise_is_identity() {
        let (path, times) = pipeline(0.2, 0.1);
        let series = sample_process(&path, &times).unwrap();
        let noisy = apply_noise(&series, &times, &NoiseModel::gaussian(0.0), 5, None).unwrap();
        assert_eq!(series, noisy);
    }

    #[test]
    fn gaussian_noise_mean_is_clt_consistent() {
        let (path, times) = pipeline(0.0, 1e-5);
        let series = sample_process(&path, &times).unwrap();
        let noisy = apply_noise(&series, &times, &NoiseModel::gaussian(1e-4), 7, None).unwrap();
        let n = noisy.len() as f64;
        let mean: f64 = noisy.iter().zip(series.iter()).map(|(y, x)| y - x).sum::<f64>() / n;
        assert!(mean.abs() < 4.0 * 1e-2 / n.sqrt(), "noise mean {mean}");
    }

    #[test]
    fn two_point_noise_support() {
        let (path, times) = pipeline(0.0, 1e-3);
        let series = sample_process(&path, &times).unwrap();
        let noise = NoiseModel { family: NoiseFamily::TwoPoint, variance: AlphaSpec::Constant { value: 1e-4 } };
        let noisy = apply_noise(&series, &times, &noise, 9, None).unwrap();
        for (y, x) in noisy.iter().zip(series.iter()) {
            let eps = y - x;
            assert!((eps.abs() - 1e-2).abs() < 1e-15);
        }
    }

    #[test]
    fn heteroskedastic_noise_tracks_alpha() {
        // Empirical variance over a window around t approaches alpha(t).
        let (path, times) = pipeline(0.0, 1e-5);
        let series = sample_process(&path, &times).unwrap();
        let noise = NoiseModel {
            family: NoiseFamily::Gaussian,
            variance: AlphaSpec::Sinusoid { base: 2e-4, amplitude: 1e-4, period: 1.0 },
        };
        let noisy = apply_noise(&series, &times, &noise, 11, None).unwrap();
        let n = noisy.len();
        for center in [0.25f64, 0.5, 0.75] {
            let mid = (center * (n as f64 - 1.0)) as usize;
            let half = 5000usize;
            let window = &noisy[mid - half..mid + half];
            let m = window.len() as f64;
            let var: f64 = window.iter().map(|e| e * e).sum::<f64>() / m;
            let alpha = noise.variance.value(center, 0.0);
            // Variance of a sample variance of Gaussians: ~ 2 alpha^2 / m.
            let se = (2.0 * alpha * alpha / m).sqrt();
            assert!((var - alpha).abs() < 5.0 * se, "window at {center}: {var} vs {alpha}");
        }
    }

    #[test]
    fn length_mismatch_rejected() {
        let (path, times) = pipeline(0.1, 0.25);
        let series = sample_process(&path, &times).unwrap();
        let short = &series[..series.len() - 1];
        assert!(apply_noise(short, &times, &NoiseModel::gaussian(1e-4), 0, None).is_err());
    }
}
