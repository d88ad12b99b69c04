//! Observation-time schemes and mesh statistics.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, StreamKind};

use super::path::PathRecord;

/// Conditional-mean process G(t, sigma_t) of the restricted scheme: the
/// expected spacing is `delta_n * G` at each step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum GSpec {
    Constant { value: f64 },
    /// G(t) = base + amplitude * sin(2 pi t / period), requiring base > amplitude.
    Sinusoid { base: f64, amplitude: f64, period: f64 },
    /// G(t, sigma) = floor + scale * sigma^2; evaluation needs a path.
    SigmaCoupled { floor: f64, scale: f64 },
}

impl GSpec {
    pub const ONE: GSpec = GSpec::Constant { value: 1.0 };

    pub fn needs_path(&self) -> bool {
        matches!(self, GSpec::SigmaCoupled { .. })
    }

    pub fn value(&self, t: f64, sigma: f64) -> f64 {
        match *self {
            GSpec::Constant { value } => value,
            GSpec::Sinusoid { base, amplitude, period } => {
                base + amplitude * (2.0 * std::f64::consts::PI * t / period).sin()
            }
            GSpec::SigmaCoupled { floor, scale } => floor + scale * sigma * sigma,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            GSpec::Constant { value } => value.is_finite() && value > 0.0,
            GSpec::Sinusoid { base, amplitude, period } => {
                base.is_finite() && amplitude >= 0.0 && base > amplitude && period > 0.0
            }
            GSpec::SigmaCoupled { floor, scale } => floor > 0.0 && scale >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config("intensity process G must be strictly positive".into()))
        }
    }
}

/// Distribution of the i.i.d. spacing multipliers, all with unit mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpacingDist {
    /// epsilon = 1 (degenerate); reproduces the equidistant grid when G = 1.
    Degenerate,
    /// Uniform on (0.5, 1.5); bounded with all moments finite.
    Uniform,
    /// Unit-mean exponential.
    Exponential,
}

impl SpacingDist {
    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            SpacingDist::Degenerate => 1.0,
            SpacingDist::Uniform => 0.5 + rng.random::<f64>(),
            SpacingDist::Exponential => {
                let e: f64 = Exp1.sample(rng);
                e
            }
        }
    }
}

/// Observation-time scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum SamplingScheme {
    /// t_i = i * delta_n exactly.
    Equidistant,
    /// Restricted discretization: t_p = t_{p-1} + delta_n * G(t_{p-1}, sigma) * eps_p.
    Restricted { g: GSpec, epsilon: SpacingDist },
    /// Poisson arrivals with rate 1/delta_n (exponential spacings).
    PoissonArrivals,
}

impl SamplingScheme {
    /// Uniform(0.5, 1.5) multipliers with G = 1, the default stochastic scheme.
    pub fn restricted_uniform() -> Self {
        SamplingScheme::Restricted { g: GSpec::ONE, epsilon: SpacingDist::Uniform }
    }

    /// The intensity process implied by the scheme (G = 1 for the equidistant
    /// and Poisson cases).
    pub fn g_spec(&self) -> GSpec {
        match self {
            SamplingScheme::Equidistant | SamplingScheme::PoissonArrivals => GSpec::ONE,
            SamplingScheme::Restricted { g, .. } => *g,
        }
    }
}

/// An ordered observation-time sequence with its mesh statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingTimes {
    /// t_0 = 0 < t_1 < ...; the last time is the first to reach the horizon.
    pub times: Vec<f64>,
    /// N^n_T = max{i : t_i <= T}.
    pub n_count: usize,
    /// r_n(T): the largest spacing truncated at the horizon.
    pub mesh: f64,
    /// G evaluated at each observation time (oracle input for the covariance
    /// matrix of the pre-averaged estimators).
    pub g_process: Vec<f64>,
    /// Nominal spacing parameter delta_n of the scheme.
    pub delta_n: f64,
    pub horizon: f64,
}

impl SamplingTimes {
    /// Number of increments (t_{i-1}, t_i] with t_i <= T.
    pub fn increments_within_horizon(&self) -> usize {
        self.n_count
    }
}

/// Generates observation times covering [0, horizon]. A path is required
/// exactly when the scheme's G depends on the spot volatility; sigma is then
/// read off the path at the latest grid point at or before each time.
pub fn generate_times(
    scheme: &SamplingScheme,
    delta_n: f64,
    horizon: f64,
    seed: u64,
    path: Option<&PathRecord>,
) -> Result<SamplingTimes> {
    if !delta_n.is_finite() || delta_n <= 0.0 {
        return Err(Error::Config(format!("delta_n {delta_n} must be positive")));
    }
    if !horizon.is_finite() || horizon <= 0.0 {
        return Err(Error::Config(format!("horizon {horizon} must be positive")));
    }

    let times = match scheme {
        SamplingScheme::Equidistant => {
            let mut ts = Vec::with_capacity((horizon / delta_n) as usize + 2);
            let mut i = 0u64;
            loop {
                let t = i as f64 * delta_n;
                ts.push(t);
                if t >= horizon {
                    break;
                }
                i += 1;
            }
            ts
        }
        SamplingScheme::Restricted { g, epsilon } => {
            g.validate()?;
            if g.needs_path() && path.is_none() {
                return Err(Error::Config(
                    "sigma-coupled sampling scheme needs a simulated path".into(),
                ));
            }
            let mut rng = stream_rng(seed, 0, StreamKind::Times);
            let mut ts = vec![0.0];
            let mut t = 0.0f64;
            while t < horizon {
                let sigma = path.map(|p| sigma_before(p, t)).unwrap_or(0.0);
                let spacing = delta_n * g.value(t, sigma) * epsilon.draw(&mut rng);
                let next = t + spacing;
                if !(next > t) {
                    return Err(Error::Generation(format!(
                        "non-increasing observation time at t = {t} (spacing {spacing})"
                    )));
                }
                ts.push(next);
                t = next;
            }
            ts
        }
        SamplingScheme::PoissonArrivals => {
            let mut rng = stream_rng(seed, 0, StreamKind::Times);
            let mut ts = vec![0.0];
            let mut t = 0.0f64;
            while t < horizon {
                let e: f64 = Exp1.sample(&mut rng);
                let spacing = delta_n * e;
                let next = t + spacing;
                if !(next > t) {
                    return Err(Error::Generation(format!(
                        "non-increasing observation time at t = {t}"
                    )));
                }
                ts.push(next);
                t = next;
            }
            ts
        }
    };

    let (mesh, n_count) = mesh_scan(&times, horizon);
    let g_spec = scheme.g_spec();
    let g_process = times
        .iter()
        .map(|&t| g_spec.value(t, path.map(|p| sigma_before(p, t)).unwrap_or(0.0)))
        .collect();

    Ok(SamplingTimes { times, n_count, mesh, g_process, delta_n, horizon })
}

/// Spot volatility at the latest grid point at or before `t`.
fn sigma_before(path: &PathRecord, t: f64) -> f64 {
    match path.grid.binary_search_by(|g| g.partial_cmp(&t).unwrap()) {
        Ok(i) => path.sigma[i],
        Err(0) => path.sigma[0],
        Err(i) => path.sigma[i - 1],
    }
}

/// Mesh statistic r_n(t) and count N^n_t, with the t_{-1} = 0 convention.
pub fn mesh_stats(times: &SamplingTimes, t: f64) -> Result<(f64, usize)> {
    if t < 0.0 {
        return Err(Error::Domain(format!("time {t} must be nonnegative")));
    }
    Ok(mesh_scan(&times.times, t))
}

fn mesh_scan(times: &[f64], t: f64) -> (f64, usize) {
    let mut mesh = 0.0f64;
    let mut count = 0usize;
    let mut prev = 0.0f64; // t_{-1} = 0
    for (i, &ti) in times.iter().enumerate() {
        let gap = ti.min(t) - prev.min(t);
        if gap > mesh {
            mesh = gap;
        }
        if ti <= t && i > 0 {
            count = i;
        }
        prev = ti;
        if ti >= t {
            break;
        }
    }
    (mesh, count)
}
