//! Model descriptions: price dynamics, jumps and microstructure noise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Drift specification for the log price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum DriftSpec {
    /// Constant drift b per unit time.
    Constant { value: f64 },
    /// Affine in the spot variance: b_t = intercept + slope * sigma_t^2.
    AffineInVariance { intercept: f64, slope: f64 },
}

impl DriftSpec {
    pub fn none() -> Self {
        DriftSpec::Constant { value: 0.0 }
    }

    pub(crate) fn value(&self, sigma: f64) -> f64 {
        match *self {
            DriftSpec::Constant { value } => value,
            DriftSpec::AffineInVariance { intercept, slope } => intercept + slope * sigma * sigma,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            DriftSpec::Constant { value } => value.is_finite(),
            DriftSpec::AffineInVariance { intercept, slope } => {
                intercept.is_finite() && slope.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config("non-finite drift parameter".into()))
        }
    }
}

/// Spot-volatility specification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum VolModel {
    /// Constant sigma (vol-of-vol is zero by construction).
    Constant { sigma: f64 },
    /// CIR-type stochastic variance
    /// dv = kappa (v_bar - v) dt + xi sqrt(v) dW_v, sigma = sqrt(v),
    /// with corr(dB, dW_v) = rho and full truncation of negative variance.
    Cir {
        kappa: f64,
        v_bar: f64,
        xi: f64,
        rho: f64,
        v0: f64,
    },
}

impl VolModel {
    pub(crate) fn initial_sigma(&self) -> f64 {
        match *self {
            VolModel::Constant { sigma } => sigma,
            VolModel::Cir { v0, .. } => v0.max(0.0).sqrt(),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            VolModel::Constant { sigma } => {
                if !sigma.is_finite() || sigma < 0.0 {
                    return Err(Error::Config(format!("invalid constant volatility {sigma}")));
                }
            }
            VolModel::Cir { kappa, v_bar, xi, rho, v0 } => {
                for (name, v) in [("kappa", kappa), ("v_bar", v_bar), ("xi", xi), ("v0", v0)] {
                    if !v.is_finite() || v < 0.0 {
                        return Err(Error::Config(format!("invalid CIR parameter {name} = {v}")));
                    }
                }
                if !rho.is_finite() || !(-1.0..=1.0).contains(&rho) {
                    return Err(Error::Config(format!("CIR leverage rho = {rho} outside [-1, 1]")));
                }
            }
        }
        Ok(())
    }
}

/// Jump-size distribution of the compound Poisson part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum JumpSizeDist {
    /// Every jump has the same size.
    PointMass { size: f64 },
    /// Two-sided (Laplace) with density exp(-|x|/scale)/(2 scale);
    /// the mean absolute size equals `scale`.
    TwoSidedExponential { scale: f64 },
    Gaussian { mean: f64, std_dev: f64 },
}

impl JumpSizeDist {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            JumpSizeDist::PointMass { size } => size.is_finite(),
            JumpSizeDist::TwoSidedExponential { scale } => scale.is_finite() && scale > 0.0,
            JumpSizeDist::Gaussian { mean, std_dev } => {
                mean.is_finite() && std_dev.is_finite() && std_dev >= 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config("invalid jump-size distribution".into()))
        }
    }
}

/// Jump component of the price.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum JumpModel {
    None,
    /// Finite-activity compound Poisson with constant intensity per unit time.
    CompoundPoisson { intensity: f64, sizes: JumpSizeDist },
    /// Fixed jumps at fixed times; used to pin scenarios in experiments.
    Deterministic { jumps: Vec<(f64, f64)> },
}

impl JumpModel {
    fn validate(&self, horizon: f64) -> Result<()> {
        match self {
            JumpModel::None => Ok(()),
            JumpModel::CompoundPoisson { intensity, sizes } => {
                if !intensity.is_finite() || *intensity < 0.0 {
                    return Err(Error::Config(format!("jump intensity {intensity} must be >= 0")));
                }
                sizes.validate()
            }
            JumpModel::Deterministic { jumps } => {
                for &(t, s) in jumps {
                    if !t.is_finite() || !s.is_finite() || t <= 0.0 || t >= horizon {
                        return Err(Error::Config(format!(
                            "deterministic jump ({t}, {s}) must lie strictly inside (0, horizon)"
                        )));
                    }
                }
                if jumps.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(Error::Config("deterministic jump times must be increasing".into()));
                }
                Ok(())
            }
        }
    }
}

/// Full description of one simulated price model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    /// Initial log price.
    pub x0: f64,
    pub drift: DriftSpec,
    pub vol: VolModel,
    pub jumps: JumpModel,
    /// Terminal time T.
    pub horizon: f64,
}

impl ModelSpec {
    /// Constant-volatility driftless model; the backbone of most scenarios.
    pub fn constant_vol(sigma: f64, horizon: f64) -> Self {
        Self {
            x0: 0.0,
            drift: DriftSpec::none(),
            vol: VolModel::Constant { sigma },
            jumps: JumpModel::None,
            horizon,
        }
    }

    pub fn with_jumps(mut self, jumps: JumpModel) -> Self {
        self.jumps = jumps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.x0.is_finite() {
            return Err(Error::Config("non-finite initial value".into()));
        }
        if !self.horizon.is_finite() || self.horizon <= 0.0 {
            return Err(Error::Config(format!("horizon {} must be positive", self.horizon)));
        }
        self.drift.validate()?;
        self.vol.validate()?;
        self.jumps.validate(self.horizon)
    }
}

/// Noise-variance process alpha_t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum AlphaSpec {
    Constant { value: f64 },
    /// alpha(t) = base + amplitude * sin(2 pi t / period).
    Sinusoid { base: f64, amplitude: f64, period: f64 },
    /// alpha(t) = scale * sigma_t^2, coupling the noise level to volatility.
    SigmaCoupled { scale: f64 },
}

impl AlphaSpec {
    /// Whether evaluation requires the spot volatility.
    pub fn needs_sigma(&self) -> bool {
        matches!(self, AlphaSpec::SigmaCoupled { .. })
    }

    /// alpha at time `t`; `sigma` is only consulted for the coupled form.
    pub fn value(&self, t: f64, sigma: f64) -> f64 {
        match *self {
            AlphaSpec::Constant { value } => value,
            AlphaSpec::Sinusoid { base, amplitude, period } => {
                base + amplitude * (2.0 * std::f64::consts::PI * t / period).sin()
            }
            AlphaSpec::SigmaCoupled { scale } => scale * sigma * sigma,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            AlphaSpec::Constant { value } => {
                if !value.is_finite() || value < 0.0 {
                    return Err(Error::Config(format!("noise variance {value} must be >= 0")));
                }
            }
            AlphaSpec::Sinusoid { base, amplitude, period } => {
                if !(base.is_finite() && amplitude.is_finite() && period.is_finite()) {
                    return Err(Error::Config("non-finite sinusoid noise parameter".into()));
                }
                if amplitude < 0.0 || base < amplitude || period <= 0.0 {
                    return Err(Error::Config(
                        "sinusoid noise needs base >= amplitude >= 0 and period > 0".into(),
                    ));
                }
            }
            AlphaSpec::SigmaCoupled { scale } => {
                if !scale.is_finite() || scale < 0.0 {
                    return Err(Error::Config(format!("noise scale {scale} must be >= 0")));
                }
            }
        }
        Ok(())
    }
}

/// Conditional distribution family of the noise; both are mean-zero by
/// construction and have finite sixth moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseFamily {
    Gaussian,
    /// Symmetric two-point distribution on {+sqrt(alpha), -sqrt(alpha)}.
    TwoPoint,
}

/// Microstructure-noise specification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    pub family: NoiseFamily,
    pub variance: AlphaSpec,
}

impl NoiseModel {
    pub fn gaussian(alpha: f64) -> Self {
        Self { family: NoiseFamily::Gaussian, variance: AlphaSpec::Constant { value: alpha } }
    }

    pub fn validate(&self) -> Result<()> {
        self.variance.validate()
    }
}
