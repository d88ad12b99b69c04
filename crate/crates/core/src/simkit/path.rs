//! Euler–Maruyama path simulation with a jump ledger and exact oracles.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, StreamKind};

use super::model::{JumpModel, JumpSizeDist, ModelSpec, VolModel};

/// Lower cap on the Euler step relative to the horizon.
const MIN_EULER_FRACTION: f64 = 1e-5;

/// Default Euler step for a target observation spacing: one tenth of the
/// spacing, floored at `1e-5 * horizon` for tractability.
pub fn default_euler_step(delta_n: f64, horizon: f64) -> f64 {
    (delta_n / 10.0).max(MIN_EULER_FRACTION * horizon).min(horizon)
}

/// One price jump with the spot volatility on both sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub time: f64,
    pub size: f64,
    /// Euler volatility at the grid point immediately before the jump time.
    pub sigma_minus: f64,
    /// Volatility at the jump time itself (no volatility co-jumps here).
    pub sigma_plus: f64,
}

/// Exact functionals of a simulated path, computed from the same realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathOracles {
    /// ∫₀ᵀ σ² ds (model value for constant volatility, trapezoid otherwise).
    pub integrated_variance: f64,
    /// Quadratic variation [X,X]_T = ∫σ²ds + Σ(ΔX)².
    pub qv: f64,
    /// Integrated quarticity ∫₀ᵀ σ⁴ ds.
    pub iq: f64,
    /// ∫₀ᵀ |σ|³ ds.
    pub abs_cubic_sigma: f64,
    pub squared_jump_sum: f64,
    pub cubic_jump_sum: f64,
    pub quartic_jump_sum: f64,
}

/// A simulated path on its fine grid.
///
/// `x` is the full log price, `xc` the continuous martingale part ∫σdB
/// (starting at zero), `sigma` the spot volatility at each grid time. The grid
/// always contains the horizon, every jump time and every requested
/// observation time.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub grid: Vec<f64>,
    pub x: Vec<f64>,
    pub xc: Vec<f64>,
    pub sigma: Vec<f64>,
    pub jumps: Vec<JumpEvent>,
    pub oracles: PathOracles,
    pub horizon: f64,
}

impl PathRecord {
    /// Index of `t` in the grid, requiring an exact match.
    pub fn grid_index(&self, t: f64) -> Result<usize> {
        self.grid
            .binary_search_by(|g| g.partial_cmp(&t).unwrap())
            .map_err(|_| Error::Internal(format!("time {t} is not a grid point")))
    }

    /// Recomputes the oracle functionals from the stored grid and ledger.
    /// This is the brute-force re-walk used to audit the stored values.
    pub fn recompute_oracles(&self, constant_sigma: Option<f64>) -> PathOracles {
        // Explicit products keep the oracles bit-reproducible; powi makes no
        // such guarantee across compilation contexts.
        let sq = |s: f64| s * s;
        let quart = |s: f64| (s * s) * (s * s);
        let abs_cube = |s: f64| {
            let a = s.abs();
            a * a * a
        };
        let (iv, iq, ac) = match constant_sigma {
            Some(s) => (sq(s) * self.horizon, quart(s) * self.horizon, abs_cube(s) * self.horizon),
            None => (
                trapezoid_up_to(&self.grid, &self.sigma, self.horizon, sq),
                trapezoid_up_to(&self.grid, &self.sigma, self.horizon, quart),
                trapezoid_up_to(&self.grid, &self.sigma, self.horizon, abs_cube),
            ),
        };
        let mut sq = 0.0;
        let mut cu = 0.0;
        let mut qu = 0.0;
        for j in &self.jumps {
            sq += j.size * j.size;
            cu += j.size * j.size * j.size;
            qu += j.size * j.size * j.size * j.size;
        }
        PathOracles {
            integrated_variance: iv,
            qv: iv + sq,
            iq,
            abs_cubic_sigma: ac,
            squared_jump_sum: sq,
            cubic_jump_sum: cu,
            quartic_jump_sum: qu,
        }
    }
}

/// Simulates one path; the grid is the union of the uniform Euler grid and
/// the jump times. Deterministic for a fixed `(model, euler_step, seed)`.
pub fn simulate_path(model: &ModelSpec, euler_step: f64, seed: u64) -> Result<PathRecord> {
    simulate_path_with_times(model, euler_step, seed, &[])
}

/// Simulates one path whose grid additionally contains `extra_times`
/// (typically observation times), eliminating interpolation at sampling.
///
/// The jump ledger is drawn before any grid-dependent randomness, so it is
/// identical across different `extra_times` for the same seed.
pub fn simulate_path_with_times(
    model: &ModelSpec,
    euler_step: f64,
    seed: u64,
    extra_times: &[f64],
) -> Result<PathRecord> {
    model.validate()?;
    if !euler_step.is_finite() || euler_step <= 0.0 {
        return Err(Error::Domain(format!("euler step {euler_step} must be positive")));
    }
    if euler_step > model.horizon {
        return Err(Error::Domain("euler step exceeds the horizon".into()));
    }

    let mut rng = stream_rng(seed, 0, StreamKind::Path);
    let jumps = draw_jumps(&model.jumps, model.horizon, &mut rng)?;

    let grid = build_grid(model.horizon, euler_step, &jumps, extra_times);
    let m = grid.len();

    let mut x = Vec::with_capacity(m);
    let mut xc = Vec::with_capacity(m);
    let mut sigma = Vec::with_capacity(m);
    x.push(model.x0);
    xc.push(0.0);
    sigma.push(model.vol.initial_sigma());

    // Pending jump cursor: jump times are grid points, applied at their index.
    let mut next_jump = 0usize;
    let mut ledger: Vec<JumpEvent> = Vec::with_capacity(jumps.len());

    let mut variance_state = match model.vol {
        VolModel::Constant { .. } => 0.0,
        VolModel::Cir { v0, .. } => v0,
    };

    for j in 1..m {
        let dt = grid[j] - grid[j - 1];
        let sqrt_dt = dt.sqrt();
        let s_prev = sigma[j - 1];
        let z1: f64 = rng.sample(StandardNormal);
        let db = sqrt_dt * z1;

        let diffusion = s_prev * db;
        let drift = model.drift.value(s_prev) * dt;

        let mut jump_size = 0.0;
        if next_jump < jumps.len() && jumps[next_jump].0 == grid[j] {
            jump_size = jumps[next_jump].1;
            next_jump += 1;
        }

        xc.push(xc[j - 1] + diffusion);
        x.push(x[j - 1] + drift + diffusion + jump_size);

        let s_next = match model.vol {
            VolModel::Constant { sigma } => sigma,
            VolModel::Cir { kappa, v_bar, xi, rho, .. } => {
                let z2: f64 = rng.sample(StandardNormal);
                let dw = (rho * z1 + (1.0 - rho * rho).sqrt() * z2) * sqrt_dt;
                let v_pos = variance_state.max(0.0);
                variance_state += kappa * (v_bar - variance_state) * dt + xi * v_pos.sqrt() * dw;
                variance_state.max(0.0).sqrt()
            }
        };
        sigma.push(s_next);

        if jump_size != 0.0 {
            ledger.push(JumpEvent {
                time: grid[j],
                size: jump_size,
                sigma_minus: s_prev,
                sigma_plus: sigma[j],
            });
        }
    }

    let constant_sigma = match model.vol {
        VolModel::Constant { sigma } => Some(sigma),
        VolModel::Cir { .. } => None,
    };
    let mut record = PathRecord {
        grid,
        x,
        xc,
        sigma,
        jumps: ledger,
        oracles: PathOracles {
            integrated_variance: 0.0,
            qv: 0.0,
            iq: 0.0,
            abs_cubic_sigma: 0.0,
            squared_jump_sum: 0.0,
            cubic_jump_sum: 0.0,
            quartic_jump_sum: 0.0,
        },
        horizon: model.horizon,
    };
    record.oracles = record.recompute_oracles(constant_sigma);
    Ok(record)
}

/// Jump times and sizes, drawn count-then-order-statistics (exact for a
/// constant intensity). Times are strictly inside (0, T).
fn draw_jumps(model: &JumpModel, horizon: f64, rng: &mut ChaCha8Rng) -> Result<Vec<(f64, f64)>> {
    match model {
        JumpModel::None => Ok(Vec::new()),
        JumpModel::Deterministic { jumps } => Ok(jumps.clone()),
        JumpModel::CompoundPoisson { intensity, sizes } => {
            let mean = intensity * horizon;
            let count = if mean > 0.0 {
                Poisson::new(mean)
                    .map_err(|e| Error::Config(format!("bad jump intensity: {e}")))?
                    .sample(rng) as usize
            } else {
                0
            };
            let mut times: Vec<f64> = (0..count)
                .map(|_| {
                    // Avoid the endpoints so every jump sits strictly inside the grid.
                    let u: f64 = rng.random::<f64>();
                    (u * horizon).clamp(f64::MIN_POSITIVE, horizon * (1.0 - 1e-12))
                })
                .collect();
            times.sort_by(|a, b| a.partial_cmp(b).unwrap());
            times.dedup();
            let draws = times
                .into_iter()
                .map(|t| Ok((t, draw_size(sizes, rng)?)))
                .collect::<Result<Vec<_>>>()?;
            Ok(draws)
        }
    }
}

fn draw_size(dist: &JumpSizeDist, rng: &mut ChaCha8Rng) -> Result<f64> {
    Ok(match *dist {
        JumpSizeDist::PointMass { size } => size,
        JumpSizeDist::TwoSidedExponential { scale } => {
            let magnitude = Exp::new(1.0 / scale)
                .map_err(|e| Error::Config(format!("bad jump scale: {e}")))?
                .sample(rng);
            if rng.random::<bool>() {
                magnitude
            } else {
                -magnitude
            }
        }
        JumpSizeDist::Gaussian { mean, std_dev } => Normal::new(mean, std_dev)
            .map_err(|e| Error::Config(format!("bad jump distribution: {e}")))?
            .sample(rng),
    })
}

/// Union of the uniform grid, the horizon, the jump times and the extra
/// times, sorted with exact duplicates removed.
fn build_grid(horizon: f64, euler_step: f64, jumps: &[(f64, f64)], extra_times: &[f64]) -> Vec<f64> {
    let n_steps = (horizon / euler_step).ceil() as usize;
    let mut grid: Vec<f64> = (0..=n_steps).map(|i| i as f64 * euler_step).collect();
    grid.push(horizon);
    grid.extend(jumps.iter().map(|&(t, _)| t));
    grid.extend(extra_times.iter().copied().filter(|t| t.is_finite() && *t >= 0.0));
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();
    grid
}

/// Trapezoid rule of f(sigma) over the grid restricted to [0, horizon].
fn trapezoid_up_to(grid: &[f64], sigma: &[f64], horizon: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mut total = 0.0;
    for j in 1..grid.len() {
        if grid[j] > horizon {
            break;
        }
        let dt = grid[j] - grid[j - 1];
        total += 0.5 * (f(sigma[j - 1]) + f(sigma[j])) * dt;
    }
    total
}
