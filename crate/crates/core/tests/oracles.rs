//! Cross-checks between independent routes to the same answer.

use approx::assert_abs_diff_eq;
use multidelay::approx::{
    critical_delay_constant, critical_delay_neutral, ApproxKind, TaylorCoeffs,
};
use multidelay::integrator::{
    integrate_approx, integrate_fluid_mnl, integrate_multi_delay, HistorySpec,
};
use multidelay::lambert::lambert_w;
use multidelay::spectral::{count_zeros, Quasipolynomial};
use multidelay::sweep::{accuracy, ground_truth_classify, run_sweep, Classifier};
use multidelay::{
    DelayDistribution, DeltaStarRule, GridSpec, GroundTruthMethod, LinearModel, QueueModel,
    StabilityClass,
};
use num_complex::Complex64;

fn base() -> LinearModel {
    LinearModel::new(-1.0, -5.0).unwrap()
}

/// Real part of `alpha0 + W_0(C d e^{-alpha0 d}) / d`, the rightmost root of the single-delay equation.
fn lambert_re(m: &LinearModel, d: f64) -> f64 {
    let z = Complex64::new(m.c * d * (-m.alpha0 * d).exp(), 0.0);
    m.alpha0 + lambert_w(0, z).unwrap().re / d
}

#[test]
fn constant_critical_delay_matches_lambert_sign_change() {
    for (a, c) in [(-1.0, -5.0), (0.0, -1.0), (-2.0, -3.0), (-0.5, -8.0)] {
        let m = LinearModel::new(a, c).unwrap();
        let d = critical_delay_constant(&m).unwrap().delay;
        assert!(lambert_re(&m, d * (1.0 - 1e-6)) < 0.0);
        assert!(lambert_re(&m, d * (1.0 + 1e-6)) > 0.0);
        assert!(lambert_re(&m, d).abs() < 1e-9);
    }
    // the 0.2795 value is arccos(+0.2)/sqrt(24), a delay that is still stable
    assert!(lambert_re(&base(), 0.279531) < -0.5);
}

fn envelope_ratio(tr: &multidelay::integrator::Trajectory, t_end: f64) -> f64 {
    tr.max_abs_between(0.75 * t_end, t_end, 0) / tr.max_abs_between(0.5 * t_end, 0.75 * t_end, 0)
}

#[test]
fn neutral_threshold_brackets_time_stepping() {
    let coeffs = |d| TaylorCoeffs {
        delta_star: d,
        a0: -5.0,
        a1: 0.4,
        a2: 0.0,
    };
    let dcr = critical_delay_neutral(&base(), &coeffs(0.3)).unwrap().delay;
    assert_abs_diff_eq!(dcr, 0.2528715458562959, epsilon = 1e-12);
    let hist = HistorySpec::constant(1.0).unwrap();
    let t_end = 60.0;
    let below = integrate_approx(
        &base(),
        &coeffs(0.9 * dcr),
        ApproxKind::Neutral,
        &hist,
        t_end,
        0.002,
    )
    .unwrap();
    let above = integrate_approx(
        &base(),
        &coeffs(1.1 * dcr),
        ApproxKind::Neutral,
        &hist,
        t_end,
        0.002,
    )
    .unwrap();
    assert!(envelope_ratio(&below, t_end) < 0.95);
    assert!(envelope_ratio(&above, t_end) > 1.05);
}

#[test]
fn second_derivative_equation_has_unbounded_right_roots() {
    // r - alpha0 - e^{-r d}(A0 + A2 r^2) behaves like A2 r^2 e^{-r d} for large |r|, so roots with
    // ever larger real parts exist whatever the delay; no delay makes this equation decay
    for d in [0.45, 0.55] {
        let coeffs = TaylorCoeffs {
            delta_star: d,
            a0: -5.0,
            a1: 0.0,
            a2: -0.1,
        };
        let qp = Quasipolynomial::approximation(&base(), &coeffs, ApproxKind::SECOND);
        assert!(count_zeros(&qp, 0.5, 20.0, -80.0, 80.0).unwrap() > 0);
        let hist = HistorySpec::constant(1.0).unwrap();
        match integrate_approx(&base(), &coeffs, ApproxKind::SECOND, &hist, 30.0, 0.005) {
            Ok(tr) => assert!(envelope_ratio(&tr, 30.0) > 1.05),
            Err(e) => assert_eq!(multidelay::Error::from(e).kind(), "NonFiniteState"),
        }
    }
}

#[test]
fn integrator_and_spectral_agree_off_the_boundary() {
    for (d1, d2) in [(0.1, 0.2), (0.2, 0.9), (0.8, 0.9), (0.05, 0.6), (0.5, 0.5)] {
        let probs = [0.5, 0.5];
        let spec =
            ground_truth_classify(&base(), &[d1, d2], &probs, GroundTruthMethod::Spectral).unwrap();
        let integ =
            ground_truth_classify(&base(), &[d1, d2], &probs, GroundTruthMethod::Integrator)
                .unwrap();
        assert_ne!(spec.class, StabilityClass::Inconclusive);
        assert_eq!(spec.class, integ.class, "({d1}, {d2})");
    }
}

#[test]
fn equal_delays_reduce_to_single_delay() {
    let hist = HistorySpec::constant(1.0).unwrap();
    let two = DelayDistribution::new(vec![0.4, 0.4], vec![0.3, 0.7]).unwrap();
    let one = DelayDistribution::single(0.4).unwrap();
    let a = integrate_multi_delay(&base(), &two, &hist, 10.0, 0.01).unwrap();
    let b = integrate_multi_delay(&base(), &one, &hist, 10.0, 0.01).unwrap();
    for t in [1.0, 5.5, 10.0] {
        assert_abs_diff_eq!(a.value(t, 0), b.value(t, 0), epsilon = 1e-12);
    }
}

#[test]
fn swapping_the_reference_delay_mirrors_accuracy() {
    let g = GridSpec::square(0.01, 1.0, 30).unwrap();
    let truth = |p: f64| {
        run_sweep(
            &base(),
            &[p, 1.0 - p],
            &g,
            Classifier::GroundTruth(GroundTruthMethod::Spectral),
        )
        .unwrap()
    };
    for p in [0.2, 0.3] {
        let (t1, t2) = (truth(p), truth(1.0 - p));
        for kind in [ApproxKind::ConstantDelay, ApproxKind::Neutral] {
            let a = run_sweep(
                &base(),
                &[p, 1.0 - p],
                &g,
                Classifier::Approx {
                    kind,
                    rule: DeltaStarRule::FirstDelay,
                },
            )
            .unwrap();
            let b = run_sweep(
                &base(),
                &[1.0 - p, p],
                &g,
                Classifier::Approx {
                    kind,
                    rule: DeltaStarRule::SecondDelay,
                },
            )
            .unwrap();
            let (x, y) = (accuracy(&a, &t1).unwrap(), accuracy(&b, &t2).unwrap());
            assert!((x - y).abs() <= 0.5, "{kind} p={p}: {x} vs {y}");
        }
    }
}

#[test]
fn constant_mean_map_is_bounded_by_the_line() {
    let g = GridSpec::unit_square();
    let map = run_sweep(
        &base(),
        &[0.5, 0.5],
        &g,
        Classifier::Approx {
            kind: ApproxKind::ConstantDelay,
            rule: DeltaStarRule::Mean,
        },
    )
    .unwrap();
    let dcr = critical_delay_constant(&base()).unwrap().delay;
    for (i, v) in map.verdicts.iter().enumerate() {
        let pt = g.point(i);
        let mean = 0.5 * (pt[0] + pt[1]);
        let expected = if mean < dcr {
            StabilityClass::Stable
        } else {
            StabilityClass::Unstable
        };
        assert_eq!(v.class, expected, "{pt:?}");
    }
}

#[test]
fn fluid_model_rests_at_equilibrium() {
    let dist = DelayDistribution::new(vec![0.3, 0.7], vec![0.5, 0.5]).unwrap();
    let q = QueueModel::at_equilibrium(3, 2.0, 1.0, 5.0, dist).unwrap();
    let tr = integrate_fluid_mnl(&q, 20.0, 0.01).unwrap();
    let eq = q.equilibrium();
    for i in 0..3 {
        assert!(tr.component(i).iter().all(|x| (x - eq).abs() < 1e-9));
    }
}
