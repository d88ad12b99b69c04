//! Property tests for the estimator and limit-law invariants.

use proptest::prelude::*;

use rdskew::estimators::{pcv, power_variation, prv, realized_skewness, ObservedSeries, PowerFunction};
use rdskew::harness::stats;
use rdskew::kernels::{kernel_constants, KernelSpec};
use rdskew::limitlaw::{gamma_matrix, JumpParams, LimitLawParams, NoisyParams};
use rdskew::simkit::SamplingTimes;

fn series_from(values: Vec<f64>) -> ObservedSeries {
    let n = values.len();
    let delta = 1.0 / (n - 1) as f64;
    let times = SamplingTimes {
        times: (0..n).map(|i| i as f64 * delta).collect(),
        n_count: n - 1,
        mesh: delta,
        g_process: vec![1.0; n],
        delta_n: delta,
        horizon: 1.0,
    };
    ObservedSeries::new(times, values, false).unwrap()
}

fn kernel_and_constants() -> (KernelSpec, rdskew::kernels::KernelConstants) {
    let g = KernelSpec::min_kernel();
    let k = kernel_constants(&g, 256).unwrap();
    (g, k)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn increments_telescope(values in prop::collection::vec(-10.0f64..10.0, 3..60)) {
        let s = series_from(values.clone());
        let total: f64 = (1..=s.times.n_count).map(|i| s.values[i] - s.values[i - 1]).sum();
        let expected = values[s.times.n_count] - values[0];
        // Each difference is correctly rounded, so the telescoped sum agrees
        // to accumulated machine precision.
        let tol = 2.0 * values.len() as f64 * f64::EPSILON
            * values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        prop_assert!((total - expected).abs() <= tol, "{total} vs {expected}");
    }

    #[test]
    fn estimator_parity_and_scale(
        values in prop::collection::vec(-5.0f64..5.0, 12..80),
        k_pick in 2usize..10,
        c in 0.25f64..4.0,
    ) {
        let (g, k) = kernel_and_constants();
        let s = series_from(values.clone());
        let k_n = k_pick.min(values.len() - 2).max(2);
        let flipped = series_from(values.iter().map(|v| -v).collect());
        let scaled = series_from(values.iter().map(|v| c * v).collect());

        prop_assert_eq!(pcv(&s, k_n, &g, &k).unwrap(), -pcv(&flipped, k_n, &g, &k).unwrap());
        prop_assert_eq!(prv(&s, k_n, &g, &k).unwrap(), prv(&flipped, k_n, &g, &k).unwrap());

        let rv = power_variation(&s, PowerFunction::Square).unwrap();
        if rv > 1e-9 {
            let a = realized_skewness(&s, s.times.delta_n, 1.0).unwrap();
            let b = realized_skewness(&flipped, s.times.delta_n, 1.0).unwrap();
            prop_assert_eq!(a.scaled, -b.scaled);
            let sc = realized_skewness(&scaled, s.times.delta_n, 1.0).unwrap();
            prop_assert!((a.scaled - sc.scaled).abs() <= 1e-10 * a.scaled.abs().max(1.0));
        }

        let prv_scaled = prv(&scaled, k_n, &g, &k).unwrap();
        let prv_base = prv(&s, k_n, &g, &k).unwrap();
        prop_assert!((prv_scaled - c * c * prv_base).abs() <= 1e-10 * prv_base.abs().max(1.0));
    }

    #[test]
    fn gamma_matrix_is_symmetric_and_psd(
        jumps in prop::collection::vec((-2.0f64..2.0, 0.01f64..2.0, 0.01f64..2.0), 0..6),
        theta in 0.2f64..4.0,
        alpha in 0.0f64..0.01,
        g_level in 0.2f64..3.0,
        iq in 0.01f64..4.0,
    ) {
        let (_, constants) = kernel_and_constants();
        let jump_params: Vec<JumpParams> = jumps
            .iter()
            .filter(|(size, _, _)| size.abs() > 1e-6)
            .map(|&(size, s_minus, s_plus)| JumpParams { size, sigma_minus: s_minus, sigma_plus: s_plus })
            .collect();
        let cubic: f64 = jump_params.iter().map(|j| j.size * j.size * j.size).sum();
        let env = jump_params
            .iter()
            .map(|_| rdskew::limitlaw::JumpEnv {
                alpha_minus: alpha,
                alpha_plus: alpha,
                g_minus: g_level,
                g_plus: g_level,
            })
            .collect();
        let params = LimitLawParams {
            iq,
            qv: iq.sqrt() + jump_params.iter().map(|j| j.size * j.size).sum::<f64>(),
            jumps: jump_params,
            abs_cubic_sigma: iq.sqrt(),
            cubic_jump_sum: cubic,
            noisy: Some(NoisyParams {
                theta,
                jump_env: env,
                sigma4_g: iq * g_level,
                sigma2_alpha: iq.sqrt() * alpha,
                alpha2_over_g: alpha * alpha / g_level,
            }),
        };
        let gamma = gamma_matrix(&params, theta, &constants).unwrap();
        let m = gamma.entries();
        prop_assert_eq!(m[0][1], m[1][0]);
        prop_assert!(gamma.min_eigenvalue() >= -1e-10, "min eigenvalue {}", gamma.min_eigenvalue());
    }

    #[test]
    fn ks_distance_is_a_metric_on_samples(
        a in prop::collection::vec(-50.0f64..50.0, 1..40),
        b in prop::collection::vec(-50.0f64..50.0, 1..40),
    ) {
        let d_ab = stats::ks_distance(&a, &b).unwrap();
        let d_ba = stats::ks_distance(&b, &a).unwrap();
        prop_assert!((0.0..=1.0).contains(&d_ab));
        prop_assert!((d_ab - d_ba).abs() < 1e-12);
        prop_assert_eq!(stats::ks_distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn kernel_scaling_laws(c in 0.1f64..5.0) {
        let g = KernelSpec::min_kernel();
        let base = kernel_constants(&g, 128).unwrap();
        let scaled = kernel_constants(&g.scaled(c), 128).unwrap();
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-10 * y.abs().max(1e-12);
        prop_assert!(close(scaled.psi2, c * c * base.psi2));
        prop_assert!(close(scaled.psi3, c * c * c * base.psi3));
        prop_assert!(close(scaled.phi22, c.powi(4) * base.phi22));
        prop_assert!(close(scaled.phi11, c.powi(4) * base.phi11));
        prop_assert!(close(scaled.phi12, c.powi(4) * base.phi12));
    }
}
