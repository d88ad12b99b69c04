//! Asymptotic-law oracles: mixed-normal limit samplers, the covariance matrix
//! of the pre-averaged estimator pair, the delta-method variance of the noisy
//! skewness ratio, and the oscillating counterexample sequence.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelConstants;
use crate::rng::{stream_rng, StreamKind};
use crate::simkit::{AlphaSpec, GSpec, PathRecord};

/// 2 sqrt(2) / sqrt(pi): the conditional mean rate of the absolute cubic
/// variation of a Brownian path.
pub const ABS_CUBIC_MOMENT: f64 = 1.595769121605731;

/// One jump with the spot volatility on both sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpParams {
    pub size: f64,
    pub sigma_minus: f64,
    pub sigma_plus: f64,
}

/// Noise and sampling environment at a jump time (left and right limits).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpEnv {
    pub alpha_minus: f64,
    pub alpha_plus: f64,
    pub g_minus: f64,
    pub g_plus: f64,
}

/// Extra inputs needed for the noisy-case covariance matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisyParams {
    pub theta: f64,
    /// Aligned with the jump ledger.
    pub jump_env: Vec<JumpEnv>,
    /// ∫₀ᵀ σ⁴ G ds.
    pub sigma4_g: f64,
    /// ∫₀ᵀ σ² α ds.
    pub sigma2_alpha: f64,
    /// ∫₀ᵀ α²/G ds.
    pub alpha2_over_g: f64,
}

/// Path functionals feeding every limit-law oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitLawParams {
    pub iq: f64,
    pub qv: f64,
    pub jumps: Vec<JumpParams>,
    pub abs_cubic_sigma: f64,
    pub cubic_jump_sum: f64,
    pub noisy: Option<NoisyParams>,
}

impl LimitLawParams {
    /// Reads the oracle functionals off a simulated path.
    pub fn from_path(path: &PathRecord) -> Self {
        Self {
            iq: path.oracles.iq,
            qv: path.oracles.qv,
            jumps: path
                .jumps
                .iter()
                .map(|j| JumpParams { size: j.size, sigma_minus: j.sigma_minus, sigma_plus: j.sigma_plus })
                .collect(),
            abs_cubic_sigma: path.oracles.abs_cubic_sigma,
            cubic_jump_sum: path.oracles.cubic_jump_sum,
            noisy: None,
        }
    }

    /// Attaches the noisy-case environment: trapezoid integrals of sigma^4 G,
    /// sigma^2 alpha and alpha^2/G on the path's fine grid, plus left/right
    /// values of alpha and G at every jump time.
    pub fn with_noise_context(
        mut self,
        path: &PathRecord,
        g: &GSpec,
        alpha: &AlphaSpec,
        theta: f64,
    ) -> Result<Self> {
        if theta <= 0.0 {
            return Err(Error::Config(format!("theta {theta} must be positive")));
        }
        let mut sigma4_g = 0.0;
        let mut sigma2_alpha = 0.0;
        let mut alpha2_over_g = 0.0;
        let integrand = |t: f64, s: f64| -> Result<(f64, f64, f64)> {
            let gv = g.value(t, s);
            if !(gv > 0.0) {
                return Err(Error::Domain(format!(
                    "nonpositive sampling intensity G = {gv} at t = {t}"
                )));
            }
            let av = alpha.value(t, s);
            let s2 = s * s;
            Ok((s2 * s2 * gv, s2 * av, av * av / gv))
        };
        let mut f_prev = integrand(path.grid[0], path.sigma[0])?;
        let mut t_prev = path.grid[0];
        for j in 1..path.grid.len() {
            if path.grid[j] > path.horizon {
                break;
            }
            let f = integrand(path.grid[j], path.sigma[j])?;
            let dt = path.grid[j] - t_prev;
            sigma4_g += 0.5 * (f_prev.0 + f.0) * dt;
            sigma2_alpha += 0.5 * (f_prev.1 + f.1) * dt;
            alpha2_over_g += 0.5 * (f_prev.2 + f.2) * dt;
            f_prev = f;
            t_prev = path.grid[j];
        }
        let jump_env = path
            .jumps
            .iter()
            .map(|jp| JumpEnv {
                alpha_minus: alpha.value(jp.time, jp.sigma_minus),
                alpha_plus: alpha.value(jp.time, jp.sigma_plus),
                g_minus: g.value(jp.time, jp.sigma_minus),
                g_plus: g.value(jp.time, jp.sigma_plus),
            })
            .collect();
        self.noisy = Some(NoisyParams { theta, jump_env, sigma4_g, sigma2_alpha, alpha2_over_g });
        Ok(self)
    }

    /// F-conditional variance of the cubic-variation limit
    /// Z(X,3) = Σ 3(ΔX)² R_q, using E[R_q²] = (σ₋² + σ₊²)/2.
    pub fn cubic_limit_conditional_variance(&self) -> f64 {
        self.jumps
            .iter()
            .map(|j| {
                let weight = 3.0 * j.size * j.size;
                let r2 = 0.5 * (j.sigma_minus * j.sigma_minus + j.sigma_plus * j.sigma_plus);
                weight * weight * r2
            })
            .sum()
    }
}

/// Oracle targets of the skewness estimation problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleTargets {
    pub qv: f64,
    pub cubic_jump_sum: f64,
    /// Σ(ΔX)³ / [X,X]_T^{3/2}.
    pub skew_estimand: f64,
}

/// Reads the estimand triple from a path record.
pub fn oracle_targets(path: &PathRecord) -> Result<OracleTargets> {
    let qv = path.oracles.qv;
    if !(qv > 0.0) {
        return Err(Error::DegenerateDenominator(format!(
            "quadratic variation {qv} must be positive for the skewness ratio"
        )));
    }
    Ok(OracleTargets {
        qv,
        cubic_jump_sum: path.oracles.cubic_jump_sum,
        skew_estimand: path.oracles.cubic_jump_sum / (qv * qv.sqrt()),
    })
}

/// Auxiliary variables of one limit draw: kappa ~ U(0,1) and two standard
/// normals per jump, plus the global U⁰.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxDraw {
    pub u0: f64,
    pub per_jump: Vec<JumpAux>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpAux {
    pub kappa: f64,
    pub u: f64,
    pub u_prime: f64,
}

impl AuxDraw {
    fn draw(n_jumps: usize, rng: &mut ChaCha8Rng) -> Self {
        let u0: f64 = rng.sample(StandardNormal);
        let per_jump = (0..n_jumps)
            .map(|_| JumpAux {
                kappa: rng.random::<f64>(),
                u: rng.sample(StandardNormal),
                u_prime: rng.sample(StandardNormal),
            })
            .collect();
        Self { u0, per_jump }
    }
}

/// R_q = sqrt(kappa) sigma_- U + sqrt(1-kappa) sigma_+ U'; the Gaussian
/// perturbation of a jump landed inside one sampling interval.
pub fn r_q(aux: &JumpAux, jump: &JumpParams) -> f64 {
    aux.kappa.sqrt() * jump.sigma_minus * aux.u + (1.0 - aux.kappa).sqrt() * jump.sigma_plus * aux.u_prime
}

/// One draw of the bivariate limit: the realized-volatility component
/// sqrt(2 IQ) U⁰ + Σ 2 ΔX R_q and the companion Σ g'(ΔX) R_q, built from the
/// same auxiliary variables.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDraw {
    pub rv_component: f64,
    pub g_component: f64,
    pub aux: AuxDraw,
}

/// Samples the joint limit of (RV error, power-variation error) for a test
/// function with derivative `g_prime`. Components share the R_q sequence.
pub fn thm2_limit_sample_detailed(
    params: &LimitLawParams,
    g_prime: impl Fn(f64) -> f64,
    n_draws: usize,
    seed: u64,
) -> Vec<JointDraw> {
    let mut rng = stream_rng(seed, 0, StreamKind::LimitLaw);
    let sqrt_2iq = (2.0 * params.iq).sqrt();
    (0..n_draws)
        .map(|_| {
            let aux = AuxDraw::draw(params.jumps.len(), &mut rng);
            let mut z2 = 0.0;
            let mut gz = 0.0;
            for (jump, ja) in params.jumps.iter().zip(aux.per_jump.iter()) {
                let r = r_q(ja, jump);
                z2 += 2.0 * jump.size * r;
                gz += g_prime(jump.size) * r;
            }
            JointDraw { rv_component: sqrt_2iq * aux.u0 + z2, g_component: gz, aux }
        })
        .collect()
}

/// As [`thm2_limit_sample_detailed`], returning only the component pair.
pub fn thm2_limit_sample(
    params: &LimitLawParams,
    g_prime: impl Fn(f64) -> f64,
    n_draws: usize,
    seed: u64,
) -> Vec<(f64, f64)> {
    thm2_limit_sample_detailed(params, g_prime, n_draws, seed)
        .into_iter()
        .map(|d| (d.rv_component, d.g_component))
        .collect()
}

/// Samples the limit of the absolute cubic variation error: a deterministic
/// mean shift (2√2/√π) ∫|σ|³ds plus Σ 3 sign(ΔX)(ΔX)² R_q.
pub fn abs_cubic_limit_sample(params: &LimitLawParams, n_draws: usize, seed: u64) -> Vec<f64> {
    let shift = ABS_CUBIC_MOMENT * params.abs_cubic_sigma;
    let g_prime = |x: f64| {
        let sign = if x >= 0.0 { 1.0 } else { -1.0 };
        3.0 * sign * x * x
    };
    thm2_limit_sample_detailed(params, g_prime, n_draws, seed)
        .into_iter()
        .map(|d| shift + d.g_component)
        .collect()
}

/// Samples the limit G_T of the scaled realized-skewness error:
///
/// ```text
/// G_T = ( qv^{3/2} Z(X,3) − (3/2) qv^{1/2} Σ(ΔX)³ [ sqrt(2 IQ) U⁰ + Z(X,2) ] ) / qv³
/// ```
///
/// with Z(X,2) = Σ 2ΔX R_q and Z(X,3) = Σ 3(ΔX)² R_q sharing (U⁰, R_q).
pub fn skew_limit_sample(params: &LimitLawParams, n_draws: usize, seed: u64) -> Result<Vec<f64>> {
    let qv = params.qv;
    if !(qv > 0.0) {
        return Err(Error::DegenerateDenominator(format!(
            "quadratic variation {qv} must be positive"
        )));
    }
    let mut rng = stream_rng(seed, 0, StreamKind::LimitLaw);
    let sqrt_2iq = (2.0 * params.iq).sqrt();
    let qv_sqrt = qv.sqrt();
    let qv_32 = qv * qv_sqrt;
    let qv_cubed = qv * qv * qv;
    Ok((0..n_draws)
        .map(|_| {
            let aux = AuxDraw::draw(params.jumps.len(), &mut rng);
            let mut z2 = 0.0;
            let mut z3 = 0.0;
            for (jump, ja) in params.jumps.iter().zip(aux.per_jump.iter()) {
                let r = r_q(ja, jump);
                z2 += 2.0 * jump.size * r;
                z3 += 3.0 * jump.size * jump.size * r;
            }
            let rv_limit = sqrt_2iq * aux.u0 + z2;
            (qv_32 * z3 - 1.5 * qv_sqrt * params.cubic_jump_sum * rv_limit) / qv_cubed
        })
        .collect())
}

/// The asymptotic covariance of the Δ_n^{-1/4}-scaled (PRV, PCV) error pair,
/// stored by component. `gbar22_unsquared` carries the alternative (2,2)
/// jump block computed with the unsquared Φ₃₋ variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaMatrix {
    pub gamma_c: f64,
    pub gbar11: f64,
    pub gbar12: f64,
    pub gbar22: f64,
    pub gbar22_unsquared: f64,
}

impl GammaMatrix {
    /// The 2x2 matrix [[Γ^c + Γ̄¹¹, Γ̄¹²], [Γ̄¹², Γ̄²²]].
    pub fn entries(&self) -> [[f64; 2]; 2] {
        [[self.gamma_c + self.gbar11, self.gbar12], [self.gbar12, self.gbar22]]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let m = self.entries();
        let tr = m[0][0] + m[1][1];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        0.5 * (tr - (tr * tr - 4.0 * det).max(0.0).sqrt())
    }
}

/// Assembles the covariance matrix from path functionals and kernel
/// constants. Without a noisy context, the noise level is zero and G = 1, so
/// only the volatility terms contribute.
pub fn gamma_matrix(params: &LimitLawParams, theta: f64, constants: &KernelConstants) -> Result<GammaMatrix> {
    if !(theta > 0.0) {
        return Err(Error::Domain(format!("theta {theta} must be positive")));
    }
    let default_env = JumpEnv { alpha_minus: 0.0, alpha_plus: 0.0, g_minus: 1.0, g_plus: 1.0 };
    let (sigma4_g, sigma2_alpha, alpha2_over_g) = match &params.noisy {
        Some(n) => (n.sigma4_g, n.sigma2_alpha, n.alpha2_over_g),
        None => (params.iq, 0.0, 0.0),
    };

    let psi2_sq = constants.psi2 * constants.psi2;
    let psi3_sq = constants.psi3 * constants.psi3;
    let gamma_c = 4.0 / psi2_sq
        * (constants.phi22 * theta * sigma4_g
            + 2.0 * constants.phi12 / theta * sigma2_alpha
            + constants.phi11 / (theta * theta * theta) * alpha2_over_g);

    let mut gbar11 = 0.0;
    let mut gbar12 = 0.0;
    let mut gbar22 = 0.0;
    let mut gbar22_unsq = 0.0;
    for (q, jump) in params.jumps.iter().enumerate() {
        let env = match &params.noisy {
            Some(n) => n.jump_env.get(q).copied().unwrap_or(default_env),
            None => default_env,
        };
        if !(env.g_minus > 0.0 && env.g_plus > 0.0) {
            return Err(Error::Domain("nonpositive sampling intensity at a jump time".into()));
        }
        let dx = jump.size;
        let dx2 = dx * dx;
        let s2_plus_g = jump.sigma_plus * jump.sigma_plus * env.g_plus;
        let s2_minus_g = jump.sigma_minus * jump.sigma_minus * env.g_minus;

        gbar11 += 4.0 / psi2_sq
            * dx2
            * (constants.phi22 * theta * (s2_plus_g + s2_minus_g)
                + constants.phi12 / theta * (env.alpha_plus + env.alpha_minus));

        gbar12 += 6.0 / (constants.psi2 * constants.psi3)
            * dx2
            * dx
            * (theta * (constants.phi23_plus * s2_plus_g + constants.phi23_minus * s2_minus_g)
                + (constants.phi23p_plus * env.alpha_plus + constants.phi23p_minus * env.alpha_minus)
                    / theta);

        let quart = dx2 * dx2;
        gbar22 += 9.0 / psi3_sq
            * quart
            * (theta * (constants.phi3_plus * s2_plus_g + constants.phi3_minus * s2_minus_g)
                + (constants.phi3p_plus * env.alpha_plus + constants.phi3p_minus * env.alpha_minus)
                    / theta);
        gbar22_unsq += 9.0 / psi3_sq
            * quart
            * (theta * (constants.phi3_plus * s2_plus_g + constants.phi3_minus_unsquared * s2_minus_g)
                + (constants.phi3p_plus * env.alpha_plus + constants.phi3p_minus * env.alpha_minus)
                    / theta);
    }

    Ok(GammaMatrix { gamma_c, gbar11, gbar12, gbar22, gbar22_unsquared: gbar22_unsq })
}

/// Delta-method variance of the noisy skewness ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoisySkewVariance {
    pub variance: f64,
    /// Set when the (2,2) jump block vanishes (continuous path): the stated
    /// rate is degenerate and the variance is zero by construction.
    pub degenerate: bool,
}

/// d' Γ d with d = (d₁, d₂), d₁ = −(3/2) Σ(ΔX)³ / qv^{5/2}, d₂ = qv^{−3/2}.
pub fn noisy_skew_variance(gamma: &GammaMatrix, qv: f64, cubic_jump_sum: f64) -> Result<NoisySkewVariance> {
    if !(qv > 0.0) {
        return Err(Error::DegenerateDenominator(format!(
            "quadratic variation {qv} must be positive"
        )));
    }
    let qv_52 = qv * qv * qv.sqrt();
    let d1 = -1.5 * cubic_jump_sum / qv_52;
    let d2 = 1.0 / (qv * qv.sqrt());
    let variance =
        d1 * d1 * (gamma.gamma_c + gamma.gbar11) + 2.0 * d1 * d2 * gamma.gbar12 + d2 * d2 * gamma.gbar22;
    Ok(NoisySkewVariance { variance, degenerate: gamma.gbar22 == 0.0 })
}

// --- Counterexample quadrature -------------------------------------------

/// Point of the counterexample sequence: c_n at Δ_n = exp(−nπ/a).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CounterexamplePoint {
    pub n: u32,
    pub delta_n: f64,
    pub c_n: f64,
}

/// The oscillating sequence with its two Gaussian-moment coefficients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleSequence {
    pub a: f64,
    /// A = ∫₀^∞ x³ cos(2a log x) N(x) dx.
    pub coef_cos: f64,
    /// B = ∫₀^∞ x³ sin(2a log x) N(x) dx.
    pub coef_sin: f64,
    pub points: Vec<CounterexamplePoint>,
}

fn std_normal_density(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Integrates f over (1e-8, 12] with log-spaced panels below 1; the integrand
/// behaves like x³ near zero and has a Gaussian tail, so the truncation error
/// is far below 1e-12.
fn gaussian_moment_quadrature(f: impl Fn(f64) -> f64, panels: usize) -> f64 {
    let mut edges: Vec<f64> = (0..=8).map(|k| 1e-8 * 10f64.powi(k)).collect();
    edges.extend((2..=12).map(|k| k as f64));
    let per_segment = (panels / 4).max(64);
    let n = if per_segment % 2 == 0 { per_segment } else { per_segment + 1 };
    let mut total = 0.0;
    for pair in edges.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let h = (hi - lo) / n as f64;
        let mut seg = f(lo) + f(hi);
        for j in 1..n {
            let w = if j % 2 == 1 { 4.0 } else { 2.0 };
            seg += w * f(lo + j as f64 * h);
        }
        total += seg * h / 3.0;
    }
    total
}

/// A and B, the cos/sin Gaussian moments at frequency 2a.
pub fn counterexample_coefficients(a: f64, panels: usize) -> Result<(f64, f64)> {
    if a == 0.0 || !a.is_finite() {
        return Err(Error::Domain("frequency a must be nonzero".into()));
    }
    let coef_cos = gaussian_moment_quadrature(
        |x| x * x * x * (2.0 * a * x.ln()).cos() * std_normal_density(x),
        panels,
    );
    let coef_sin = gaussian_moment_quadrature(
        |x| x * x * x * (2.0 * a * x.ln()).sin() * std_normal_density(x),
        panels,
    );
    Ok((coef_cos, coef_sin))
}

/// c(Δ) = sin(a log Δ) A + cos(a log Δ) B for an arbitrary step Δ.
pub fn counterexample_cn(a: f64, coef_cos: f64, coef_sin: f64, delta: f64) -> f64 {
    let phase = a * delta.ln();
    phase.sin() * coef_cos + phase.cos() * coef_sin
}

/// Direct quadrature of c(Δ) = ∫₀^∞ x³ sin(2a log(√Δ x)) N(x) dx, bypassing
/// the trigonometric decomposition; used to cross-check the identity.
pub fn counterexample_direct(a: f64, delta: f64, panels: usize) -> f64 {
    let half_log_delta = 0.5 * delta.ln();
    gaussian_moment_quadrature(
        |x| x * x * x * (2.0 * a * (half_log_delta + x.ln())).sin() * std_normal_density(x),
        panels,
    )
}

/// Computes the sequence c_n at Δ_n = exp(−nπ/a) for n = 1..n_max. Errors if
/// |B| < 1e-10: that frequency yields a degenerate (non-oscillating)
/// counterexample.
pub fn counterexample_sequence(a: f64, n_max: u32, panels: usize) -> Result<CounterexampleSequence> {
    let (coef_cos, coef_sin) = counterexample_coefficients(a, panels)?;
    if coef_sin.abs() < 1e-10 {
        return Err(Error::Domain(format!(
            "a = {a} gives |B| = {:.3e} < 1e-10: degenerate counterexample",
            coef_sin.abs()
        )));
    }
    let points = (1..=n_max)
        .map(|n| {
            let delta_n = (-(n as f64) * std::f64::consts::PI / a).exp();
            CounterexamplePoint { n, delta_n, c_n: counterexample_cn(a, coef_cos, coef_sin, delta_n) }
        })
        .collect();
    Ok(CounterexampleSequence { a, coef_cos, coef_sin, points })
}

/// Scans candidate frequencies and returns the first with |B| > 1e-10,
/// together with its B value.
pub fn find_oscillation_frequency(candidates: &[f64], panels: usize) -> Option<(f64, f64)> {
    candidates.iter().copied().find_map(|a| {
        counterexample_coefficients(a, panels)
            .ok()
            .filter(|(_, b)| b.abs() > 1e-10)
            .map(|(_, b)| (a, b))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{kernel_constants, KernelSpec};
    use crate::simkit::{simulate_path, JumpModel, ModelSpec};
    use approx::assert_relative_eq;

    fn one_jump_params(j: f64, sigma: f64) -> LimitLawParams {
        LimitLawParams {
            iq: sigma.powi(4),
            qv: sigma * sigma + j * j,
            jumps: vec![JumpParams { size: j, sigma_minus: sigma, sigma_plus: sigma }],
            abs_cubic_sigma: sigma.abs().powi(3),
            cubic_jump_sum: j * j * j,
            noisy: None,
        }
    }

    fn variance(xs: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
    }

    #[test]
    fn oracle_targets_trivial_cases() {
        let pure_jump = ModelSpec::constant_vol(0.0, 1.0)
            .with_jumps(JumpModel::Deterministic { jumps: vec![(0.5, 1.0)] });
        let path = simulate_path(&pure_jump, 1e-3, 0).unwrap();
        let t = oracle_targets(&path).unwrap();
        assert_eq!((t.qv, t.cubic_jump_sum, t.skew_estimand), (1.0, 1.0, 1.0));

        let continuous = ModelSpec::constant_vol(1.0, 1.0);
        let path = simulate_path(&continuous, 1e-3, 0).unwrap();
        let t = oracle_targets(&path).unwrap();
        assert_eq!((t.qv, t.cubic_jump_sum, t.skew_estimand), (1.0, 0.0, 0.0));

        let zero = ModelSpec::constant_vol(0.0, 1.0);
        let path = simulate_path(&zero, 1e-3, 0).unwrap();
        assert!(oracle_targets(&path).is_err());
    }

    #[test]
    fn oracle_targets_match_ledger_recomputation() {
        use crate::simkit::JumpSizeDist;
        let model = ModelSpec::constant_vol(0.3, 1.0).with_jumps(JumpModel::CompoundPoisson {
            intensity: 2.0,
            sizes: JumpSizeDist::TwoSidedExponential { scale: 0.1 },
        });
        let path = simulate_path(&model, 1e-3, 77).unwrap();
        let t = oracle_targets(&path).unwrap();
        let cubic: f64 = path.jumps.iter().map(|j| j.size * j.size * j.size).sum();
        let sq: f64 = path.jumps.iter().map(|j| j.size * j.size).sum();
        let qv = 0.09 + sq;
        assert_relative_eq!(t.qv, qv, epsilon = 1e-14);
        assert_relative_eq!(t.cubic_jump_sum, cubic, epsilon = 1e-14);
        assert_relative_eq!(t.skew_estimand, cubic / (qv * qv.sqrt()), epsilon = 1e-14);
    }

    #[test]
    fn no_jumps_second_component_vanishes() {
        let params = LimitLawParams {
            iq: 2.0,
            qv: 1.0,
            jumps: vec![],
            abs_cubic_sigma: 1.0,
            cubic_jump_sum: 0.0,
            noisy: None,
        };
        let draws = thm2_limit_sample(&params, |x| 3.0 * x * x, 20_000, 1);
        assert!(draws.iter().all(|d| d.1 == 0.0));
        let firsts: Vec<f64> = draws.iter().map(|d| d.0).collect();
        let var = variance(&firsts);
        // Var = 2 IQ = 4; Monte Carlo tolerance ~ 4 sqrt(2/n) relative.
        assert!((var - 4.0).abs() < 4.0 * 4.0 * (2.0f64 / 20_000.0).sqrt());
    }

    #[test]
    fn one_jump_constant_sigma_r_is_exactly_gaussian() {
        // kappa + (1 - kappa) = 1 makes Var(R) = sigma^2 regardless of kappa;
        // Z(X,3) = 3 J^2 R then has variance 9 J^4 sigma^2.
        let (j, sigma) = (1.0, 0.5);
        let params = one_jump_params(j, sigma);
        let draws: Vec<f64> =
            thm2_limit_sample(&params, |x| 3.0 * x * x, 1_000_000, 2).iter().map(|d| d.1).collect();
        let var = variance(&draws);
        let want = 9.0 * j.powi(4) * sigma * sigma;
        assert_relative_eq!(var, want, max_relative = 0.01);
        assert_relative_eq!(params.cubic_limit_conditional_variance(), want, max_relative = 1e-12);
    }

    #[test]
    fn expected_r_squared_is_average_of_sides() {
        // E[R²] = (σ₋² + σ₊²)/2 by total variance over kappa ~ U(0,1).
        let params = LimitLawParams {
            iq: 1.0,
            qv: 1.0,
            jumps: vec![JumpParams { size: 1.0, sigma_minus: 0.2, sigma_plus: 0.7 }],
            abs_cubic_sigma: 0.0,
            cubic_jump_sum: 1.0,
            noisy: None,
        };
        let draws = thm2_limit_sample_detailed(&params, |_| 1.0, 1_000_000, 11);
        let mean_r2 = draws
            .iter()
            .map(|d| {
                let r = r_q(&d.aux.per_jump[0], &params.jumps[0]);
                r * r
            })
            .sum::<f64>()
            / draws.len() as f64;
        assert_relative_eq!(mean_r2, 0.5 * (0.04 + 0.49), max_relative = 0.01);
    }

    #[test]
    fn shared_rq_reproduces_component_bit_exactly() {
        let params = one_jump_params(0.8, 0.3);
        let g_prime = |x: f64| 3.0 * x * x;
        for d in thm2_limit_sample_detailed(&params, g_prime, 100, 3) {
            let mut regen = 0.0;
            for (jump, ja) in params.jumps.iter().zip(d.aux.per_jump.iter()) {
                regen += g_prime(jump.size) * r_q(ja, jump);
            }
            assert_eq!(regen, d.g_component);
        }
    }

    #[test]
    fn two_jump_covariance_matches_closed_form() {
        // Cov(comp1, comp2) = Σ 2 ΔX g'(ΔX) E[R²], E[R²] = (σ₋² + σ₊²)/2.
        let params = LimitLawParams {
            iq: 0.5,
            qv: 2.0,
            jumps: vec![
                JumpParams { size: 1.0, sigma_minus: 0.2, sigma_plus: 0.4 },
                JumpParams { size: -0.5, sigma_minus: 0.4, sigma_plus: 0.1 },
            ],
            abs_cubic_sigma: 0.1,
            cubic_jump_sum: 1.0 - 0.125,
            noisy: None,
        };
        let g_prime = |x: f64| 3.0 * x * x;
        let n = 1_000_000;
        let draws = thm2_limit_sample(&params, g_prime, n, 4);
        let mean1 = draws.iter().map(|d| d.0).sum::<f64>() / n as f64;
        let mean2 = draws.iter().map(|d| d.1).sum::<f64>() / n as f64;
        let cov = draws.iter().map(|d| (d.0 - mean1) * (d.1 - mean2)).sum::<f64>() / n as f64;
        let want: f64 = params
            .jumps
            .iter()
            .map(|j| {
                let r2 = 0.5 * (j.sigma_minus * j.sigma_minus + j.sigma_plus * j.sigma_plus);
                2.0 * j.size * g_prime(j.size) * r2
            })
            .sum();
        assert_relative_eq!(cov, want, max_relative = 0.02);
    }

    #[test]
    fn abs_cubic_limit_no_jumps_is_constant() {
        let params = LimitLawParams {
            iq: 1.0,
            qv: 1.0,
            jumps: vec![],
            abs_cubic_sigma: 1.0,
            cubic_jump_sum: 0.0,
            noisy: None,
        };
        let draws = abs_cubic_limit_sample(&params, 32, 5);
        for d in draws {
            assert_relative_eq!(d, 1.5957691216057307, epsilon = 1e-12);
        }
    }

    #[test]
    fn abs_cubic_sign_antisymmetry_with_matched_seeds() {
        let params = one_jump_params(1.0, 0.5);
        let flipped = one_jump_params(-1.0, 0.5);
        let a = abs_cubic_limit_sample(&params, 100, 6);
        let b = abs_cubic_limit_sample(&flipped, 100, 6);
        let shift = ABS_CUBIC_MOMENT * params.abs_cubic_sigma;
        for (x, y) in a.iter().zip(b.iter()) {
            assert_relative_eq!(x - shift, -(y - shift), epsilon = 1e-12);
        }
    }

    #[test]
    fn abs_cubic_variance_oracle() {
        let (j, sigma) = (1.0, 0.5);
        let params = one_jump_params(j, sigma);
        let draws = abs_cubic_limit_sample(&params, 1_000_000, 7);
        let var = variance(&draws);
        assert_relative_eq!(var, 9.0 * j.powi(4) * sigma * sigma, max_relative = 0.01);
    }

    #[test]
    fn skew_limit_no_jumps_is_zero() {
        let params = LimitLawParams {
            iq: 1.0,
            qv: 1.0,
            jumps: vec![],
            abs_cubic_sigma: 1.0,
            cubic_jump_sum: 0.0,
            noisy: None,
        };
        let draws = skew_limit_sample(&params, 64, 8).unwrap();
        assert!(draws.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn skew_limit_mean_zero() {
        let params = one_jump_params(1.0, 0.3);
        let n = 200_000;
        let draws = skew_limit_sample(&params, n, 9).unwrap();
        let mean = draws.iter().sum::<f64>() / n as f64;
        // Linear in centered Gaussians: mean 0; SE = SD / sqrt(n).
        let sd = variance(&draws).sqrt();
        assert!(mean.abs() < 4.0 * sd / (n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn skew_limit_scale_invariance_with_matched_seeds() {
        // Scaling jumps and sigma by c leaves G_T invariant: the numerator
        // picks up c^6 and the denominator qv^3 = c^6 as well.
        let params = one_jump_params(1.0, 0.3);
        let c: f64 = 2.5;
        let scaled = LimitLawParams {
            iq: params.iq * c.powi(4),
            qv: params.qv * c * c,
            jumps: params
                .jumps
                .iter()
                .map(|j| JumpParams {
                    size: c * j.size,
                    sigma_minus: c * j.sigma_minus,
                    sigma_plus: c * j.sigma_plus,
                })
                .collect(),
            abs_cubic_sigma: params.abs_cubic_sigma * c.powi(3),
            cubic_jump_sum: params.cubic_jump_sum * c.powi(3),
            noisy: None,
        };
        let a = skew_limit_sample(&params, 200, 10).unwrap();
        let b = skew_limit_sample(&scaled, 200, 10).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert_relative_eq!(x, y, max_relative = 1e-12);
        }
    }

    #[test]
    fn gamma_continuous_case() {
        let g = KernelSpec::min_kernel();
        let k = kernel_constants(&g, 1024).unwrap();
        let params = LimitLawParams {
            iq: 1.0,
            qv: 1.0,
            jumps: vec![],
            abs_cubic_sigma: 1.0,
            cubic_jump_sum: 0.0,
            noisy: None,
        };
        let gamma = gamma_matrix(&params, 1.0, &k).unwrap();
        assert_eq!(gamma.gbar11, 0.0);
        assert_eq!(gamma.gbar12, 0.0);
        assert_eq!(gamma.gbar22, 0.0);
        assert_relative_eq!(gamma.gamma_c, 4.0 * k.phi22 / (k.psi2 * k.psi2), max_relative = 1e-12);
        assert!(gamma.min_eigenvalue() >= -1e-10);
    }

    #[test]
    fn gamma_noisy_continuous_plugin() {
        // sigma = 1, alpha = 1e-4, G = 1, theta = 1, T = 1:
        // Gamma^c = 4/psi2^2 (Phi22 + 2 Phi12 1e-4 + Phi11 1e-8).
        let g = KernelSpec::min_kernel();
        let k = kernel_constants(&g, 1024).unwrap();
        let path = simulate_path(&ModelSpec::constant_vol(1.0, 1.0), 1e-3, 0).unwrap();
        let params = LimitLawParams::from_path(&path)
            .with_noise_context(&path, &GSpec::ONE, &AlphaSpec::Constant { value: 1e-4 }, 1.0)
            .unwrap();
        let gamma = gamma_matrix(&params, 1.0, &k).unwrap();
        let want = 4.0 / (k.psi2 * k.psi2) * (k.phi22 + 2.0 * k.phi12 * 1e-4 + k.phi11 * 1e-8);
        assert_relative_eq!(gamma.gamma_c, want, max_relative = 1e-9);
        assert!(gamma.min_eigenvalue() >= -1e-10);
    }

    #[test]
    fn gamma_jump_blocks_homogeneity() {
        let g = KernelSpec::min_kernel();
        let k = kernel_constants(&g, 1024).unwrap();
        let params = one_jump_params(0.7, 0.3);
        let c = 1.9;
        let scaled_jumps = LimitLawParams {
            jumps: params
                .jumps
                .iter()
                .map(|j| JumpParams { size: c * j.size, ..*j })
                .collect(),
            cubic_jump_sum: params.cubic_jump_sum * c.powi(3),
            ..params.clone()
        };
        let a = gamma_matrix(&params, 1.0, &k).unwrap();
        let b = gamma_matrix(&scaled_jumps, 1.0, &k).unwrap();
        assert_relative_eq!(b.gbar11, c * c * a.gbar11, max_relative = 1e-12);
        assert_relative_eq!(b.gbar12, c.powi(3) * a.gbar12, max_relative = 1e-12);
        assert_relative_eq!(b.gbar22, c.powi(4) * a.gbar22, max_relative = 1e-12);
    }

    #[test]
    fn noisy_skew_variance_arithmetic() {
        // All-ones components: (-1.5)^2 + 2(-1.5)(1) + 1 = 0.25.
        let gamma =
            GammaMatrix { gamma_c: 1.0, gbar11: 0.0, gbar12: 1.0, gbar22: 1.0, gbar22_unsquared: 1.0 };
        let v = noisy_skew_variance(&gamma, 1.0, 1.0).unwrap();
        assert_relative_eq!(v.variance, 0.25, epsilon = 1e-15);
        assert!(!v.degenerate);
    }

    #[test]
    fn noisy_skew_variance_degenerate_without_jumps() {
        let gamma =
            GammaMatrix { gamma_c: 2.0, gbar11: 0.0, gbar12: 0.0, gbar22: 0.0, gbar22_unsquared: 0.0 };
        let v = noisy_skew_variance(&gamma, 1.0, 0.0).unwrap();
        assert_eq!(v.variance, 0.0);
        assert!(v.degenerate);
    }

    #[test]
    fn noisy_skew_variance_matches_sampling_oracle() {
        // Sample (e1, e2) ~ N(0, Gamma) by Cholesky and push through the
        // delta map d1 e1 + d2 e2; the empirical variance must match d'Γd.
        let g = KernelSpec::min_kernel();
        let k = kernel_constants(&g, 1024).unwrap();
        let path = simulate_path(
            &ModelSpec::constant_vol(0.3, 1.0)
                .with_jumps(JumpModel::Deterministic { jumps: vec![(0.5, 1.0)] }),
            1e-3,
            0,
        )
        .unwrap();
        let params = LimitLawParams::from_path(&path)
            .with_noise_context(&path, &GSpec::ONE, &AlphaSpec::Constant { value: 1e-4 }, 1.0)
            .unwrap();
        let gamma = gamma_matrix(&params, 1.0, &k).unwrap();
        let qv = params.qv;
        let cubic = params.cubic_jump_sum;
        let closed = noisy_skew_variance(&gamma, qv, cubic).unwrap().variance;

        let m = gamma.entries();
        let l11 = m[0][0].sqrt();
        let l21 = m[0][1] / l11;
        let l22 = (m[1][1] - l21 * l21).max(0.0).sqrt();
        let d1 = -1.5 * cubic / (qv * qv * qv.sqrt());
        let d2 = 1.0 / (qv * qv.sqrt());
        let mut rng = stream_rng(1234, 0, StreamKind::LimitLaw);
        let n = 1_000_000;
        let samples: Vec<f64> = (0..n)
            .map(|_| {
                let z1: f64 = rng.sample(StandardNormal);
                let z2: f64 = rng.sample(StandardNormal);
                let e1 = l11 * z1;
                let e2 = l21 * z1 + l22 * z2;
                d1 * e1 + d2 * e2
            })
            .collect();
        assert_relative_eq!(variance(&samples), closed, max_relative = 0.01);
    }

    #[test]
    fn counterexample_coefficients_match_reference_quadrature() {
        // Reference values from 40-digit quadrature of the Gaussian moments.
        let (a05_cos, a05_sin) = counterexample_coefficients(0.5, 4096).unwrap();
        assert_relative_eq!(a05_cos, 0.622003932756646, max_relative = 1e-9);
        assert_relative_eq!(a05_sin, 0.3953259639255124, max_relative = 1e-9);
        let (a1_cos, a1_sin) = counterexample_coefficients(1.0, 4096).unwrap();
        assert_relative_eq!(a1_cos, 0.2258656994266237, max_relative = 1e-9);
        assert_relative_eq!(a1_sin, 0.5434545389843661, max_relative = 1e-9);
        let (_, a4_sin) = counterexample_coefficients(4.0, 4096).unwrap();
        assert_relative_eq!(a4_sin, 0.003837342937645878, max_relative = 1e-7);
    }

    #[test]
    fn counterexample_alternates_with_constant_magnitude() {
        let seq = counterexample_sequence(0.5, 21, 4096).unwrap();
        let c1 = seq.points[0].c_n;
        for w in seq.points.windows(2) {
            assert_relative_eq!(w[1].c_n, -w[0].c_n, epsilon = 1e-9 * c1.abs().max(1.0));
            assert!((w[1].c_n.abs() - c1.abs()).abs() < 1e-9);
        }
        // c_n = (-1)^n B on the special sequence, so c_1 = -B.
        assert_relative_eq!(c1, -seq.coef_sin, epsilon = 1e-9);
    }

    #[test]
    fn counterexample_identity_at_arbitrary_steps() {
        let a = 0.5;
        let (coef_cos, coef_sin) = counterexample_coefficients(a, 4096).unwrap();
        for delta in [0.9, 0.1, 0.017, 0.003, 0.0004] {
            let direct = counterexample_direct(a, delta, 4096);
            let via_identity = counterexample_cn(a, coef_cos, coef_sin, delta);
            assert_relative_eq!(direct, via_identity, epsilon = 1e-9);
        }
    }

    #[test]
    fn frequency_scan_finds_first_candidate() {
        let (a, b) = find_oscillation_frequency(&[0.5, 1.0, 2.0, 4.0], 2048).unwrap();
        assert_eq!(a, 0.5);
        assert!(b.abs() > 0.39);
    }

    #[test]
    fn zero_frequency_rejected() {
        assert!(counterexample_coefficients(0.0, 256).is_err());
    }
}
