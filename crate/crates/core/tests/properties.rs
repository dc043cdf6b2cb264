//! Property tests of the invariants the library promises.

use proptest::prelude::*;

use genou::experiment::{parse_config, ExperimentConfig};
use genou::levy::{JumpLaw, LevyModel};
use genou::stats::summary::quantile;
use genou::stats::{
    cluster_size_distribution, extremal_index_blocks, extremal_index_runs, hill_estimator,
    sample_acv_with, tail_ratio, TailTransform,
};
use genou::Error;

fn jump_law() -> impl Strategy<Value = JumpLaw> {
    prop_oneof![
        (0.2f64..2.0).prop_map(|z| JumpLaw::TwoPoint { z }),
        (0.2f64..2.0).prop_map(|sd| JumpLaw::Gaussian { sd }),
        (0.2f64..2.0).prop_map(|z| JumpLaw::DeterministicAbs { z }),
    ]
}

fn model() -> impl Strategy<Value = LevyModel> {
    prop_oneof![
        (0.05f64..5.0, 0.1f64..3.0, 0.2f64..3.0).prop_map(|(l, a, s)| LevyModel::nelson(l, a, s)),
        (
            0.1f64..2.0,
            0.2f64..2.0,
            0.05f64..2.0,
            0.2f64..3.0,
            jump_law()
        )
            .prop_map(|(b, c, lg, mu, j)| LevyModel::cogarch(b, c, lg, mu, j)),
        (0.1f64..2.0, 0.2f64..2.0, 0.1f64..2.0).prop_map(|(m, s, e)| LevyModel::brownian(m, s, e)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn laplace_exponent_is_convex(m in model(), u in 0.0f64..4.0, v in 0.0f64..4.0, t in 0.0f64..1.0) {
        let psi = |x: f64| m.laplace_exponent(x).unwrap();
        let mix = t * u + (1.0 - t) * v;
        let chord = t * psi(u) + (1.0 - t) * psi(v);
        prop_assert!(psi(mix) <= chord + 1e-9 * (1.0 + chord.abs()));
        prop_assert_eq!(psi(0.0), 0.0);
    }

    #[test]
    fn root_is_a_sign_change(m in model()) {
        match m.find_alpha(None) {
            Ok(alpha) => {
                prop_assert!(alpha > 0.0);
                let psi = |x: f64| m.laplace_exponent(x).unwrap();
                let scale = psi(2.0 * alpha).abs().max(1.0);
                prop_assert!(psi(alpha).abs() <= 1e-9 * scale, "psi(alpha) = {}", psi(alpha));
                prop_assert!(psi(0.5 * alpha) < 0.0);
                prop_assert!(psi(1.5 * alpha) > 0.0);
            }
            Err(e) => prop_assert!(
                matches!(e, Error::NoPositiveRoot { .. } | Error::NotStationaryHeavyTail { .. }),
                "unexpected {e}"
            ),
        }
    }

    #[test]
    fn nelson_root_matches_closed_form(l in 0.01f64..10.0, s in 0.1f64..5.0) {
        let alpha = LevyModel::nelson(l, 1.0, s).find_alpha(None).unwrap();
        let exact = 1.0 + 2.0 * l / (s * s);
        prop_assert!((alpha - exact).abs() <= 1e-10 * exact.max(1.0));
    }

    #[test]
    fn hill_is_scale_invariant(
        data in prop::collection::vec(1.0f64..1e6, 50..400),
        power in -8i32..8,
        frac in 0.05f64..0.5,
    ) {
        let k = ((data.len() as f64 * frac) as usize).max(2);
        let factor = 2f64.powi(power);
        let scaled: Vec<f64> = data.iter().map(|x| x * factor).collect();
        match (hill_estimator(&data, k), hill_estimator(&scaled, k)) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a.alpha_hat, b.alpha_hat),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{a:?} vs {b:?}"),
        }
    }

    #[test]
    fn acv_matches_double_loop(
        data in prop::collection::vec(-10.0f64..10.0, 4..=50),
        centered in any::<bool>(),
    ) {
        let max_lag = (data.len() - 1) / 2;
        let est = sample_acv_with(&data, max_lag, centered).unwrap();
        let n = data.len();
        let mean = if centered { data.iter().sum::<f64>() / n as f64 } else { 0.0 };
        for h in 0..=max_lag {
            let mut s = 0.0;
            for t in 0..n - h {
                s += (data[t] - mean) * (data[t + h] - mean);
            }
            prop_assert_eq!(est.gamma_hat[h], s / n as f64);
        }
        prop_assert!(sample_acv_with(&data, n.div_ceil(2), centered).is_err());
    }

    #[test]
    fn tail_ratio_of_identical_samples_is_one(
        data in prop::collection::vec(0.0f64..100.0, 40_000..40_001),
    ) {
        let r = tail_ratio(&data, &data, 0.99, TailTransform::Identity).unwrap();
        prop_assert_eq!(r, 1.0);
    }

    #[test]
    fn extremal_estimates_lie_in_unit_interval(
        data in prop::collection::vec(0.0f64..1.0, 2000..4000),
        q in 0.9f64..0.97,
        b in 2usize..40,
    ) {
        let thr = quantile(&data, q);
        if let Ok(e) = extremal_index_blocks(&data, thr, b) {
            prop_assert!(e.theta_hat > 0.0 && e.theta_hat <= 1.0, "{e:?}");
        }
        if let Ok(e) = extremal_index_runs(&data, thr, b) {
            prop_assert!(e.theta_hat > 0.0 && e.theta_hat <= 1.0, "{e:?}");
        }
        if let Ok(c) = cluster_size_distribution(&data, thr, Some(b)) {
            let exceed = data.iter().filter(|&&x| x > thr).count();
            let total: usize = c.histogram.iter().enumerate().map(|(s, n)| s * n).sum();
            prop_assert_eq!(total, exceed);
        }
    }

    #[test]
    fn config_round_trips(
        seed in 0..=i64::MAX as u64,
        sixteenths in 1u32..64,
        reps in 200usize..1000,
        lambda in 0.1f64..5.0,
    ) {
        let h = f64::from(sixteenths) / 16.0;
        let text = format!(
            "tasks = [\"simulate\", \"extremes\"]\nseed = {seed}\nh = {h:?}\nreps = {reps}\n\n[model]\nfamily = \"nelson\"\nlambda = {lambda:?}\na = 1.0\nsigma = 1.0\n"
        );
        let config: ExperimentConfig = parse_config(&text).unwrap();
        let echoed = parse_config(&config.to_toml()).unwrap();
        prop_assert_eq!(&config, &echoed);
        prop_assert_eq!(config.seed, seed);
        prop_assert_eq!(config.h, h);
    }
}
