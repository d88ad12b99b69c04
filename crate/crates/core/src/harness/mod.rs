//! Seeded Monte Carlo experiments comparing estimator errors against the
//! limit-law oracles.
//!
//! Replications are embarrassingly parallel: replication `r` derives its own
//! master seed from `(experiment seed, r)`, so a run produces bit-identical
//! reports on any number of workers. Degenerate-denominator replications are
//! counted as typed failures, never silently folded into summaries.

pub mod stats;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{estimate_all, power_variation, EstimateSet, PowerFunction};
use crate::kernels::{kernel_constants, KernelConstants, KernelSpec, DEFAULT_PANELS};
use crate::limitlaw::{
    counterexample_sequence, gamma_matrix, noisy_skew_variance, skew_limit_sample, GammaMatrix,
    LimitLawParams,
};
use crate::rng::{replication_seed, stream_rng, StreamKind};
use crate::estimators::ObservedSeries;
use crate::simkit::{
    default_euler_step, generate_times, sample_process, simulate_path_with_times, ModelSpec,
    NoiseModel, ObservationPipeline, SamplingScheme,
};

/// A complete simulation scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub model: ModelSpec,
    pub scheme: SamplingScheme,
    pub noise: Option<NoiseModel>,
}

/// One enabled verification with its thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum Check {
    /// RMSE of the scaled realized skewness decreases along the delta grid.
    Consistency,
    /// log-log rate slope of the RV error lies in [lo, hi].
    Rate { lo: f64, hi: f64 },
    /// Normalized cubic-variation errors pass a two-sample KS test against
    /// standard normal draws; `at_delta` selects the grid point (finest when
    /// absent).
    CltRaw {
        ks_threshold: f64,
        #[serde(default)]
        at_delta: Option<f64>,
    },
    /// Variance of scaled skewness errors matches the limit-draw variance.
    CltSkew {
        tolerance: f64,
        #[serde(default)]
        at_delta: Option<f64>,
    },
    /// Variance of the scaled PRV error matches the (1,1) covariance entry;
    /// the scaled PCV error is centered and its dispersion shrinks from the
    /// coarsest to the finest delta.
    CltNoisy {
        variance_tolerance: f64,
        #[serde(default)]
        at_delta: Option<f64>,
    },
    /// Oracle-variance confidence intervals for the noisy skewness ratio
    /// cover the estimand at a rate within [lo, hi].
    Coverage {
        level: f64,
        lo: f64,
        hi: f64,
        #[serde(default)]
        at_delta: Option<f64>,
    },
    /// The oscillating sequence alternates and the Monte Carlo means at two
    /// consecutive step indices differ in sign.
    Counterexample { a: f64, n_pair: (u32, u32), reps: usize },
}

impl Check {
    fn name(&self) -> &'static str {
        match self {
            Check::Consistency => "consistency",
            Check::Rate { .. } => "rate",
            Check::CltRaw { .. } => "clt_raw",
            Check::CltSkew { .. } => "clt_skew",
            Check::CltNoisy { .. } => "clt_noisy",
            Check::Coverage { .. } => "coverage",
            Check::Counterexample { .. } => "counterexample",
        }
    }

    fn needs_noise(&self) -> bool {
        matches!(self, Check::CltNoisy { .. } | Check::Coverage { .. })
    }

    fn is_distributional(&self) -> bool {
        matches!(
            self,
            Check::CltRaw { .. } | Check::CltSkew { .. } | Check::CltNoisy { .. } | Check::Coverage { .. }
        )
    }
}

/// Experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    /// Observation-spacing grid, sorted strictly descending.
    pub delta_grid: Vec<f64>,
    pub theta: f64,
    pub kernel: KernelSpec,
    #[serde(default = "default_panels")]
    pub quad_panels: usize,
    pub n_reps: usize,
    pub seed: u64,
    /// Overrides the per-delta default Euler step when set.
    pub euler_step: Option<f64>,
    pub checks: Vec<Check>,
}

fn default_panels() -> usize {
    DEFAULT_PANELS
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.scenario.model.validate()?;
        if let Some(noise) = &self.scenario.noise {
            noise.validate()?;
        }
        if self.delta_grid.is_empty() {
            return Err(Error::Config("delta grid must not be empty".into()));
        }
        if self.delta_grid.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::Config("delta grid entries must be positive".into()));
        }
        if self.delta_grid.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("delta grid must be sorted strictly descending".into()));
        }
        if !(self.theta > 0.0) {
            return Err(Error::Config(format!("theta {} must be positive", self.theta)));
        }
        for check in &self.checks {
            if check.needs_noise() && self.scenario.noise.is_none() {
                return Err(Error::Config(format!(
                    "check '{}' requires a noise model in the scenario",
                    check.name()
                )));
            }
            if check.is_distributional() && self.n_reps < 100 {
                return Err(Error::Config(format!(
                    "check '{}' needs at least 100 replications, got {}",
                    check.name(),
                    self.n_reps
                )));
            }
            if !matches!(check, Check::Counterexample { .. }) && self.n_reps == 0 {
                return Err(Error::Config(format!(
                    "check '{}' needs replications, got a dry run",
                    check.name()
                )));
            }
        }
        Ok(())
    }
}

/// Successful replication: estimates plus the oracles of the same path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Replication {
    pub rep: u64,
    pub estimates: EstimateSet,
    pub oracle_qv: f64,
    pub oracle_cubic: f64,
    pub oracle_estimand: f64,
    /// Conditional SD of the cubic-variation limit Σ 3(ΔX)² R_q.
    pub cubic_limit_sd: f64,
    /// One matched draw of the skewness limit G_T (absent when qv = 0).
    pub skew_limit_draw: Option<f64>,
    /// (1,1) entry of the covariance matrix, for noisy scenarios.
    pub gamma_entry11: Option<f64>,
    /// Delta-method variance of the noisy skewness ratio.
    pub noisy_skew_variance: Option<f64>,
    /// The variance above is structurally degenerate (no jumps).
    pub variance_degenerate: bool,
}

/// Per-delta results: successes, typed failures and summary errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaBlock {
    pub delta_n: f64,
    pub euler_step: f64,
    pub replications: Vec<Replication>,
    /// (replication index, message) of degenerate-denominator outcomes.
    pub degenerate: Vec<(u64, String)>,
    pub rmse_rdskew_scaled: Option<f64>,
    pub rmse_rv: Option<f64>,
}

impl DeltaBlock {
    fn skew_errors(&self) -> Vec<f64> {
        self.replications
            .iter()
            .map(|r| r.estimates.rdskew_scaled - r.oracle_estimand)
            .collect()
    }

    fn rv_errors(&self) -> Vec<f64> {
        self.replications.iter().map(|r| r.estimates.rv - r.oracle_qv).collect()
    }
}

/// Result of one enabled check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Full experiment output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub blocks: Vec<DeltaBlock>,
    pub checks: Vec<CheckResult>,
    pub all_passed: bool,
}

/// Runs one replication of a scenario at a fixed delta and returns either the
/// estimates or a typed degenerate outcome. Deterministic in (seed, rep).
pub fn run_replication(
    scenario: &Scenario,
    delta_n: f64,
    euler_step: f64,
    theta: f64,
    kernel: &KernelSpec,
    constants: &KernelConstants,
    experiment_seed: u64,
    rep: u64,
) -> Result<std::result::Result<Replication, String>> {
    let seed = replication_seed(experiment_seed, rep);
    let pipeline = ObservationPipeline {
        model: &scenario.model,
        scheme: &scenario.scheme,
        noise: scenario.noise.as_ref(),
        delta_n,
        euler_step,
        seed,
    };
    let (path, times, values) = pipeline.run()?;
    let series = ObservedSeries::new(times, values, scenario.noise.is_some())?;

    let estimates = match estimate_all(&series, delta_n, scenario.model.horizon, theta, kernel, constants)
    {
        Ok(e) => e,
        Err(Error::DegenerateDenominator(msg)) => return Ok(Err(msg)),
        Err(e) => return Err(e),
    };

    let mut params = LimitLawParams::from_path(&path);
    let mut gamma: Option<GammaMatrix> = None;
    let mut ratio_variance = None;
    let mut variance_degenerate = false;
    if let Some(noise) = &scenario.noise {
        params = params.with_noise_context(&path, &scenario.scheme.g_spec(), &noise.variance, theta)?;
        let g = gamma_matrix(&params, theta, constants)?;
        if params.qv > 0.0 {
            let v = noisy_skew_variance(&g, params.qv, params.cubic_jump_sum)?;
            ratio_variance = Some(v.variance);
            variance_degenerate = v.degenerate;
        }
        gamma = Some(g);
    }

    let oracle_qv = params.qv;
    let oracle_cubic = params.cubic_jump_sum;
    let oracle_estimand = if oracle_qv > 0.0 { oracle_cubic / (oracle_qv * oracle_qv.sqrt()) } else { 0.0 };
    let skew_limit_draw = if oracle_qv > 0.0 {
        Some(skew_limit_sample(&params, 1, seed)?[0])
    } else {
        None
    };

    Ok(Ok(Replication {
        rep,
        estimates,
        oracle_qv,
        oracle_cubic,
        oracle_estimand,
        cubic_limit_sd: params.cubic_limit_conditional_variance().sqrt(),
        skew_limit_draw,
        gamma_entry11: gamma.map(|g| g.gamma_c + g.gbar11),
        noisy_skew_variance: ratio_variance,
        variance_degenerate,
    }))
}

/// Runs the full experiment: every delta, every replication, every enabled
/// check. Replications run in parallel; the report is order-deterministic.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let constants = kernel_constants(&config.kernel, config.quad_panels)?;

    let mut blocks = Vec::with_capacity(config.delta_grid.len());
    for &delta_n in &config.delta_grid {
        let euler_step = config
            .euler_step
            .unwrap_or_else(|| default_euler_step(delta_n, config.scenario.model.horizon));
        let outcomes: Vec<_> = (0..config.n_reps as u64)
            .into_par_iter()
            .map(|rep| {
                run_replication(
                    &config.scenario,
                    delta_n,
                    euler_step,
                    config.theta,
                    &config.kernel,
                    &constants,
                    config.seed,
                    rep,
                )
                .map(|res| (rep, res))
            })
            .collect::<Result<Vec<_>>>()?;

        let mut replications = Vec::with_capacity(outcomes.len());
        let mut degenerate = Vec::new();
        for (rep, outcome) in outcomes {
            match outcome {
                Ok(r) => replications.push(r),
                Err(msg) => degenerate.push((rep, msg)),
            }
        }
        debug_assert_eq!(replications.len() + degenerate.len(), config.n_reps);

        let mut block = DeltaBlock {
            delta_n,
            euler_step,
            replications,
            degenerate,
            rmse_rdskew_scaled: None,
            rmse_rv: None,
        };
        if !block.replications.is_empty() {
            block.rmse_rdskew_scaled = Some(stats::rmse(&block.skew_errors()));
            block.rmse_rv = Some(stats::rmse(&block.rv_errors()));
        }
        blocks.push(block);
    }

    let mut results = Vec::with_capacity(config.checks.len());
    for check in &config.checks {
        results.push(evaluate_check(check, config, &blocks)?);
    }
    let all_passed = results.iter().all(|c| c.passed);
    Ok(ExperimentReport { config: config.clone(), blocks, checks: results, all_passed })
}

/// Block the check applies to: the exact grid entry when `at_delta` is set,
/// the finest (last) otherwise.
fn block_at<'a>(blocks: &'a [DeltaBlock], at_delta: Option<f64>) -> Result<&'a DeltaBlock> {
    match at_delta {
        Some(d) => blocks
            .iter()
            .find(|b| b.delta_n == d)
            .ok_or_else(|| Error::Config(format!("check delta {d} is not in the delta grid"))),
        None => blocks.last().ok_or_else(|| Error::Internal("no delta blocks".into())),
    }
}

fn evaluate_check(check: &Check, config: &ExperimentConfig, blocks: &[DeltaBlock]) -> Result<CheckResult> {
    let result = match check {
        Check::Consistency => {
            let rmses: Vec<f64> = blocks
                .iter()
                .map(|b| b.rmse_rdskew_scaled.ok_or_else(|| Error::Domain("no successful replications".into())))
                .collect::<Result<_>>()?;
            let passed = rmses.windows(2).all(|w| w[1] < w[0]);
            CheckResult {
                name: check.name().into(),
                passed,
                detail: format!("rmse across delta grid: {rmses:?}"),
            }
        }
        Check::Rate { lo, hi } => {
            let rmses: Vec<f64> = blocks
                .iter()
                .map(|b| b.rmse_rv.ok_or_else(|| Error::Domain("no successful replications".into())))
                .collect::<Result<_>>()?;
            let slope = stats::rate_regression(&config.delta_grid, &rmses)?;
            CheckResult {
                name: check.name().into(),
                passed: (*lo..=*hi).contains(&slope),
                detail: format!("log-log RV rate slope {slope:.4}, window [{lo}, {hi}]"),
            }
        }
        Check::CltRaw { ks_threshold, at_delta } => {
            let block = block_at(blocks, *at_delta)?;
            let sqrt_delta = block.delta_n.sqrt();
            let mut pooled = Vec::with_capacity(block.replications.len());
            let mut excluded = 0usize;
            for r in &block.replications {
                if r.cubic_limit_sd > 1e-150 {
                    pooled
                        .push((r.estimates.cubic_pv - r.oracle_cubic) / (sqrt_delta * r.cubic_limit_sd));
                } else {
                    excluded += 1;
                }
            }
            let mut rng = stream_rng(config.seed, u64::MAX, StreamKind::LimitLaw);
            let reference: Vec<f64> = (0..pooled.len())
                .map(|_| rand::Rng::sample::<f64, _>(&mut rng, rand_distr::StandardNormal))
                .collect();
            let distance = stats::ks_distance(&pooled, &reference)?;
            CheckResult {
                name: check.name().into(),
                passed: distance < *ks_threshold,
                detail: format!(
                    "KS distance {distance:.4} vs threshold {ks_threshold} ({} samples, {excluded} excluded)",
                    pooled.len()
                ),
            }
        }
        Check::CltSkew { tolerance, at_delta } => {
            let block = block_at(blocks, *at_delta)?;
            let sqrt_delta = block.delta_n.sqrt();
            let errors: Vec<f64> = block
                .replications
                .iter()
                .map(|r| (r.estimates.rdskew_scaled - r.oracle_estimand) / sqrt_delta)
                .collect();
            let draws: Vec<f64> =
                block.replications.iter().filter_map(|r| r.skew_limit_draw).collect();
            if errors.len() < 2 || draws.len() < 2 {
                return Err(Error::Domain("clt_skew needs at least two successful replications".into()));
            }
            let v_err = stats::sample_variance(&errors);
            let v_draw = stats::sample_variance(&draws);
            let ratio = v_err / v_draw;
            CheckResult {
                name: check.name().into(),
                passed: (ratio - 1.0).abs() <= *tolerance,
                detail: format!(
                    "scaled skew error variance {v_err:.6e} vs limit-draw variance {v_draw:.6e} (ratio {ratio:.4})"
                ),
            }
        }
        Check::CltNoisy { variance_tolerance, at_delta } => {
            let block = block_at(blocks, *at_delta)?;
            let scale = block.delta_n.powf(-0.25);
            let prv_errors: Vec<f64> = block
                .replications
                .iter()
                .map(|r| scale * (r.estimates.prv - r.oracle_qv))
                .collect();
            let v_prv = stats::sample_variance(&prv_errors);
            let targets: Vec<f64> =
                block.replications.iter().filter_map(|r| r.gamma_entry11).collect();
            if targets.is_empty() {
                return Err(Error::Domain("clt_noisy needs covariance oracles".into()));
            }
            let target = stats::mean(&targets);
            let var_ok = (v_prv / target - 1.0).abs() <= *variance_tolerance;

            let pcv_scaled: Vec<f64> = block
                .replications
                .iter()
                .map(|r| scale * (r.estimates.pcv - r.oracle_cubic))
                .collect();
            let m = stats::mean(&pcv_scaled);
            let se = (stats::sample_variance(&pcv_scaled) / pcv_scaled.len() as f64).sqrt();
            let centered_ok = m.abs() <= 3.0 * se;

            let mean_abs = |b: &DeltaBlock| {
                let s = b.delta_n.powf(-0.25);
                let v: Vec<f64> =
                    b.replications.iter().map(|r| (s * (r.estimates.pcv - r.oracle_cubic)).abs()).collect();
                stats::mean(&v)
            };
            let shrink_ok = if blocks.len() >= 2 {
                mean_abs(blocks.last().unwrap()) < mean_abs(&blocks[0])
            } else {
                true
            };
            CheckResult {
                name: check.name().into(),
                passed: var_ok && centered_ok && shrink_ok,
                detail: format!(
                    "PRV error variance {v_prv:.5} vs Gamma target {target:.5}; scaled PCV mean {m:.4} (se {se:.4}); dispersion shrinks: {shrink_ok}"
                ),
            }
        }
        Check::Coverage { level, lo, hi, at_delta } => {
            let block = block_at(blocks, *at_delta)?;
            let sqrt_delta = block.delta_n.sqrt();
            let mut errors = Vec::new();
            let mut variances = Vec::new();
            let mut skipped = 0usize;
            for r in &block.replications {
                match (r.estimates.noisy_skew, r.noisy_skew_variance) {
                    (Some(ratio), Some(var)) if var > 0.0 && !r.variance_degenerate => {
                        errors.push(ratio - r.oracle_estimand);
                        variances.push(sqrt_delta * var);
                    }
                    _ => skipped += 1,
                }
            }
            let rate = stats::coverage(&errors, &variances, *level)?;
            CheckResult {
                name: check.name().into(),
                passed: (*lo..=*hi).contains(&rate),
                detail: format!(
                    "coverage {rate:.4} at level {level} over {} intervals ({skipped} skipped), window [{lo}, {hi}]",
                    errors.len()
                ),
            }
        }
        Check::Counterexample { a, n_pair, reps } => {
            let n_max = n_pair.1.max(20);
            let seq = counterexample_sequence(*a, n_max, config.quad_panels)?;
            let c1 = seq.points[0].c_n;
            let alternates = seq.points.windows(2).all(|w| {
                (w[1].c_n + w[0].c_n).abs() < 1e-9 * c1.abs().max(1.0)
                    && (w[1].c_n.abs() - c1.abs()).abs() < 1e-9
            });
            let mean_at = |n: u32| -> Result<f64> {
                counterexample_mc_mean(*a, n, *reps, config.seed)
            };
            let m0 = mean_at(n_pair.0)?;
            let m1 = mean_at(n_pair.1)?;
            let sign_flip = m0 * m1 < 0.0;
            CheckResult {
                name: check.name().into(),
                passed: alternates && sign_flip,
                detail: format!(
                    "c_n alternates: {alternates}; MC means at n = {} and {}: {m0:.4}, {m1:.4}",
                    n_pair.0, n_pair.1
                ),
            }
        }
    };
    Ok(result)
}

/// Monte Carlo mean of Δ_n^{-1/2} Σ g_a(increments) for a standard Brownian
/// path observed on the equidistant grid with Δ_n = exp(−nπ/a).
///
/// Increments of a constant-volatility driftless path are exactly Gaussian at
/// any Euler step, so the simulation runs with step Δ_n.
pub fn counterexample_mc_mean(a: f64, n: u32, reps: usize, seed: u64) -> Result<f64> {
    let delta_n = (-(n as f64) * std::f64::consts::PI / a).exp();
    if !(delta_n < 1.0) {
        return Err(Error::Domain(format!("step exp(-{n} pi / {a}) is not below 1")));
    }
    let model = ModelSpec::constant_vol(1.0, 1.0);
    let scheme = SamplingScheme::Equidistant;
    let base = replication_seed(seed, 1_000_000 + n as u64);
    let sum: f64 = (0..reps as u64)
        .into_par_iter()
        .map(|rep| -> Result<f64> {
            let rep_seed = replication_seed(base, rep);
            let times = generate_times(&scheme, delta_n, 1.0, rep_seed, None)?;
            let path = simulate_path_with_times(&model, delta_n, rep_seed, &times.times)?;
            let values = sample_process(&path, &times)?;
            let series = ObservedSeries::new(times, values, false)?;
            let pv = power_variation(&series, PowerFunction::Oscillating { a })?;
            Ok(pv / delta_n.sqrt())
        })
        .collect::<Result<Vec<f64>>>()?
        .iter()
        .sum();
    Ok(sum / reps as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simkit::{DriftSpec, JumpModel, VolModel};

    fn small_config(checks: Vec<Check>, n_reps: usize) -> ExperimentConfig {
        ExperimentConfig {
            scenario: Scenario {
                model: ModelSpec {
                    x0: 0.0,
                    drift: DriftSpec::none(),
                    vol: VolModel::Constant { sigma: 0.3 },
                    jumps: JumpModel::Deterministic { jumps: vec![(0.5, 1.0)] },
                    horizon: 1.0,
                },
                scheme: SamplingScheme::Equidistant,
                noise: None,
            },
            delta_grid: vec![1e-2, 1e-3],
            theta: 1.0,
            kernel: KernelSpec::min_kernel(),
            quad_panels: 512,
            n_reps,
            seed: 7,
            euler_step: None,
            checks,
        }
    }

    #[test]
    fn dry_run_produces_config_echo() {
        let config = small_config(vec![], 0);
        let report = run_experiment(&config).unwrap();
        assert_eq!(report.config, config);
        assert_eq!(report.blocks.len(), 2);
        assert!(report.blocks.iter().all(|b| b.replications.is_empty()));
        assert!(report.all_passed);
    }

    #[test]
    fn consistency_rmse_decreases_for_one_jump_scenario() {
        let config = small_config(vec![Check::Consistency], 60);
        let report = run_experiment(&config).unwrap();
        assert!(report.all_passed, "{:?}", report.checks);
    }

    #[test]
    fn parallel_and_serial_reports_are_identical() {
        let config = small_config(vec![], 12);
        let serial = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_experiment(&config))
            .unwrap();
        let parallel = rayon::ThreadPoolBuilder::new()
            .num_threads(8)
            .build()
            .unwrap()
            .install(|| run_experiment(&config))
            .unwrap();
        assert_eq!(serial, parallel);
    }

    #[test]
    fn replication_accounting_is_conserved() {
        // sigma = 0 with no jumps: every replication hits the RV guard.
        let mut config = small_config(vec![], 10);
        config.scenario.model.vol = VolModel::Constant { sigma: 0.0 };
        config.scenario.model.jumps = JumpModel::None;
        let report = run_experiment(&config).unwrap();
        for block in &report.blocks {
            assert_eq!(block.replications.len(), 0);
            assert_eq!(block.degenerate.len(), 10);
        }
    }

    #[test]
    fn noisy_checks_require_noise_model() {
        let config = small_config(
            vec![Check::Coverage { level: 0.95, lo: 0.9, hi: 1.0, at_delta: None }],
            100,
        );
        assert!(matches!(run_experiment(&config), Err(Error::Config(_))));
    }

    #[test]
    fn distributional_checks_require_reps() {
        let config = small_config(vec![Check::CltRaw { ks_threshold: 0.05, at_delta: None }], 50);
        assert!(matches!(run_experiment(&config), Err(Error::Config(_))));
    }

    #[test]
    fn unsorted_grid_rejected() {
        let mut config = small_config(vec![], 1);
        config.delta_grid = vec![1e-3, 1e-2];
        assert!(matches!(run_experiment(&config), Err(Error::Config(_))));
    }

    #[test]
    fn counterexample_mc_mean_matches_quadrature_prediction() {
        // E[Δ^{-1/2} V(X^c, g_a)] = 2 floor(T/Δ) Δ c(Δ) exactly for Brownian
        // increments; at a = 0.5, n = 1 the prediction is about -0.79.
        let a = 0.5;
        let m = counterexample_mc_mean(a, 1, 400, 11).unwrap();
        let seq = counterexample_sequence(a, 1, 2048).unwrap();
        let delta = seq.points[0].delta_n;
        let predicted = 2.0 * (1.0f64 / delta).floor() * delta * seq.points[0].c_n;
        // SE at 400 reps is about 0.008; allow 5 standard errors.
        assert!((m - predicted).abs() < 0.05, "mc {m} vs predicted {predicted}");
    }
}
