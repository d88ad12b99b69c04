//! The canonical observation pipeline: times first, then a path whose grid
//! contains them, then exact sampling, then noise.

use crate::error::Result;

use super::model::{ModelSpec, NoiseModel};
use super::observe::{apply_noise, sample_process, sigma_at_times};
use super::path::{simulate_path, simulate_path_with_times, PathRecord};
use super::sampling::{generate_times, SamplingScheme, SamplingTimes};

/// One replication's simulation inputs.
///
/// When the scheme's intensity process couples to the spot volatility, the
/// observation times are generated against a pilot path with the same seed
/// (and therefore the same jump ledger); the returned path is then
/// re-simulated with the times inserted into its grid.
#[derive(Debug, Clone, Copy)]
pub struct ObservationPipeline<'a> {
    pub model: &'a ModelSpec,
    pub scheme: &'a SamplingScheme,
    pub noise: Option<&'a NoiseModel>,
    pub delta_n: f64,
    pub euler_step: f64,
    pub seed: u64,
}

impl ObservationPipeline<'_> {
    /// Runs the pipeline, returning the path, the observation times and the
    /// observed values (noisy when a noise model is present).
    pub fn run(&self) -> Result<(PathRecord, SamplingTimes, Vec<f64>)> {
        let horizon = self.model.horizon;
        let times = if self.scheme.g_spec().needs_path() {
            let pilot = simulate_path(self.model, self.euler_step, self.seed)?;
            generate_times(self.scheme, self.delta_n, horizon, self.seed, Some(&pilot))?
        } else {
            generate_times(self.scheme, self.delta_n, horizon, self.seed, None)?
        };
        let path = simulate_path_with_times(self.model, self.euler_step, self.seed, &times.times)?;
        let latent = sample_process(&path, &times)?;
        let values = match self.noise {
            Some(noise) => {
                let sigma = if noise.variance.needs_sigma() {
                    Some(sigma_at_times(&path, &times)?)
                } else {
                    None
                };
                apply_noise(&latent, &times, noise, self.seed, sigma.as_deref())?
            }
            None => latent,
        };
        Ok((path, times, values))
    }
}
