//! Versioned TOML config schemas. Every schema rejects unknown keys and
//! requires `version = 1`.

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use rdskew::harness::{Check, Scenario};
use rdskew::kernels::KernelSpec;
use rdskew::simkit::{AlphaSpec, GSpec, ModelSpec, NoiseModel, SamplingScheme};

pub const SCHEMA_VERSION: u32 = 1;

fn check_version(version: u32) -> Result<()> {
    if version != SCHEMA_VERSION {
        bail!("unsupported config version {version}, expected {SCHEMA_VERSION}");
    }
    Ok(())
}

pub fn load<T: serde::de::DeserializeOwned>(path: &std::path::Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
}

/// Weight-function choice in config files.
#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelConfig {
    /// g(x) = min(x, 1-x).
    Min,
    /// Piecewise polynomial: ascending-power coefficients per piece.
    Piecewise { breakpoints: Vec<f64>, coefficients: Vec<Vec<f64>> },
}

impl KernelConfig {
    pub fn build(&self) -> Result<KernelSpec> {
        Ok(match self {
            KernelConfig::Min => KernelSpec::min_kernel(),
            KernelConfig::Piecewise { breakpoints, coefficients } => {
                KernelSpec::piecewise("custom", breakpoints.clone(), coefficients.clone())?
            }
        })
    }
}

/// Parses the `--kernel` flag: `min` or a path to a kernel config file.
pub fn kernel_from_flag(flag: &str) -> Result<KernelSpec> {
    if flag == "min" {
        return Ok(KernelSpec::min_kernel());
    }
    let path = std::path::Path::new(flag);
    if path.exists() {
        let file: KernelFile = load(path)?;
        check_version(file.version)?;
        return file.kernel.build();
    }
    bail!("unknown kernel '{flag}' (use 'min' or a kernel config file path)");
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelFile {
    pub version: u32,
    pub kernel: KernelConfig,
}

/// `simulate` subcommand config.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub version: u32,
    pub seed: u64,
    pub model: ModelSpec,
    /// Euler step; defaults to the delta-derived rule when sampling is
    /// configured, otherwise required.
    pub euler_step: Option<f64>,
    pub sampling: Option<SamplingSection>,
    pub noise: Option<NoiseModel>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSection {
    pub delta_n: f64,
    pub scheme: SamplingScheme,
}

impl SimulateConfig {
    pub fn validated(self) -> Result<Self> {
        check_version(self.version)?;
        if self.euler_step.is_none() && self.sampling.is_none() {
            bail!("simulate config needs either euler_step or a [sampling] section");
        }
        if self.noise.is_some() && self.sampling.is_none() {
            bail!("noise in a simulate config needs a [sampling] section to act on");
        }
        Ok(self)
    }
}

/// `times` subcommand config.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimesConfig {
    pub version: u32,
    pub seed: u64,
    pub delta_n: f64,
    pub horizon: f64,
    pub scheme: SamplingScheme,
}

impl TimesConfig {
    pub fn validated(self) -> Result<Self> {
        check_version(self.version)?;
        Ok(self)
    }
}

/// `noise` subcommand config.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub version: u32,
    pub seed: u64,
    pub delta_n: f64,
    pub horizon: f64,
    pub noise: NoiseModel,
}

impl NoiseConfig {
    pub fn validated(self) -> Result<Self> {
        check_version(self.version)?;
        Ok(self)
    }
}

/// `limits` subcommand config: draws the limit laws and assembles the
/// covariance matrix for a previously exported path.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsConfig {
    pub version: u32,
    pub seed: u64,
    pub n_draws: usize,
    pub theta: f64,
    pub kernel: KernelConfig,
    #[serde(default)]
    pub quad_panels: Option<usize>,
    /// Sampling-intensity process for the covariance matrix; G = 1 if absent.
    pub g: Option<GSpec>,
    /// Noise-variance process; no noisy context if absent.
    pub alpha: Option<AlphaSpec>,
}

impl LimitsConfig {
    pub fn validated(self) -> Result<Self> {
        check_version(self.version)?;
        Ok(self)
    }
}

/// `experiment` subcommand config.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub version: u32,
    pub seed: u64,
    pub n_reps: usize,
    pub theta: f64,
    pub delta_grid: Vec<f64>,
    pub kernel: KernelConfig,
    #[serde(default)]
    pub quad_panels: Option<usize>,
    #[serde(default)]
    pub euler_step: Option<f64>,
    pub scenario: Scenario,
    #[serde(default)]
    pub checks: Vec<Check>,
}

impl ExperimentFile {
    pub fn validated(self) -> Result<Self> {
        check_version(self.version)?;
        Ok(self)
    }
}
