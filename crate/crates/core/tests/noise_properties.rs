mod common;

use std::f64::consts::PI;

use proptest::prelude::*;
use squeezefilter::noise::normalize_half_turn;
use squeezefilter::{
    apply_rotation, eq4_propagate, general_propagate, homodyne_variance, make_covariance,
    min_max_quadratures, QuadratureCovariance, SidebandTransmission, SqueezeParams,
};

use common::{eq4_oracle, scanned_min, transfer_matrix_oracle};

/// Physical state: squeezed to `v_min`, at least Heisenberg-limited, any orientation.
fn physical_state() -> impl Strategy<Value = QuadratureCovariance> {
    (0.05f64..5.0, 1.0f64..4.0, 0.0f64..PI).prop_map(|(v_min, excess, angle)| {
        let v_max = excess / v_min;
        let (lo, hi) = if v_min <= v_max {
            (v_min, v_max)
        } else {
            (v_max, v_min)
        };
        make_covariance(&SqueezeParams::new(lo, hi, angle).unwrap()).unwrap()
    })
}

fn diagonal_state() -> impl Strategy<Value = QuadratureCovariance> {
    (0.05f64..5.0, 1.0f64..4.0, any::<bool>()).prop_map(|(v, excess, flip)| {
        let other = excess / v;
        let (a, b) = if flip { (other, v) } else { (v, other) };
        QuadratureCovariance::diagonal(a, b).unwrap()
    })
}

fn passive() -> impl Strategy<Value = SidebandTransmission> {
    (0.0f64..=1.0, 0.0f64..=1.0, -PI..PI, -PI..PI)
        .prop_map(|(tp, tm, a, b)| SidebandTransmission::new(tp, tm, a, b).unwrap())
}

fn angle_distance(a: f64, b: f64) -> f64 {
    let d = normalize_half_turn(a - b);
    d.min(PI - d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn zero_phase_general_matches_eq4(t_plus in 0.0f64..=1.0, t_minus in 0.0f64..=1.0, v in diagonal_state()) {
        let t = SidebandTransmission::real(t_plus, t_minus).unwrap();
        let general = general_propagate(&t, &v).unwrap();
        let verbatim = eq4_propagate(t_plus, t_minus, &v).unwrap();
        let (vp, vm) = eq4_oracle(t_plus, t_minus, v.v_plus, v.v_minus);
        for (got, want) in [(general.v_plus, vp), (general.v_minus, vm), (verbatim.v_plus, vp), (verbatim.v_minus, vm)] {
            prop_assert!((got - want).abs() <= 1e-12, "{got} vs {want}");
        }
        prop_assert_eq!(general.c_cross, 0.0);
    }

    #[test]
    fn general_matches_transfer_matrix(t in passive(), v in physical_state()) {
        let got = general_propagate(&t, &v).unwrap();
        let want = transfer_matrix_oracle(&t, &v);
        for (g, w) in [(got.v_plus, want[0]), (got.v_minus, want[1]), (got.c_cross, want[2])] {
            prop_assert!((g - w).abs() <= 1e-12 * (1.0 + w.abs()), "{g} vs {w}");
        }
    }

    #[test]
    fn vacuum_is_a_fixed_point(t_plus in 0.0f64..=1.0, t_minus in 0.0f64..=1.0) {
        let t = SidebandTransmission::real(t_plus, t_minus).unwrap();
        prop_assert_eq!(general_propagate(&t, &QuadratureCovariance::VACUUM).unwrap(), QuadratureCovariance::VACUUM);
    }

    #[test]
    fn rotation_keeps_spectrum_and_turns_axis(v in physical_state(), phi in -10.0f64..10.0) {
        let before = min_max_quadratures(&v);
        let after = min_max_quadratures(&apply_rotation(&v, phi));
        prop_assert!((before.v_min - after.v_min).abs() <= 1e-12 * before.v_max);
        prop_assert!((before.v_max - after.v_max).abs() <= 1e-12 * before.v_max);
        if before.v_max - before.v_min > 1e-6 {
            prop_assert!(angle_distance(after.theta_min, before.theta_min + phi) < 1e-9);
        }
    }

    #[test]
    fn uniform_attenuation_moves_toward_shot_noise(t in 0.0f64..=1.0, v in diagonal_state()) {
        let out = general_propagate(&SidebandTransmission::real(t, t).unwrap(), &v).unwrap();
        for (o, i) in [(out.v_plus, v.v_plus), (out.v_minus, v.v_minus)] {
            prop_assert!(((o - 1.0).abs() - t * t * (i - 1.0).abs()).abs() <= 1e-12 * (1.0 + i));
        }
    }

    #[test]
    fn lossless_filter_is_a_rotation(a in -PI..PI, b in -PI..PI, v in physical_state()) {
        let t = SidebandTransmission::new(1.0, 1.0, a, b).unwrap();
        prop_assert_eq!(general_propagate(&t, &v).unwrap(), apply_rotation(&v, 0.5 * (a + b)));
    }

    #[test]
    fn eigen_decomposition_matches_definition(v in physical_state()) {
        let e = min_max_quadratures(&v);
        prop_assert!((homodyne_variance(&v, e.theta_min) - e.v_min).abs() <= 1e-12 * e.v_max);
        prop_assert!((homodyne_variance(&v, e.theta_max) - e.v_max).abs() <= 1e-12 * e.v_max);
        prop_assert!((0.0..PI).contains(&e.theta_min) && (0.0..PI).contains(&e.theta_max));
        prop_assert!(angle_distance(e.theta_max, e.theta_min + 0.5 * PI) < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn passive_filters_preserve_uncertainty(t in passive(), v in physical_state()) {
        let out = general_propagate(&t, &v).unwrap();
        prop_assert!(out.determinant() >= 1.0 - 1e-9, "det {}", out.determinant());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    // -3..0 dB squeezing and up to 10 dB antisqueezing; the grid step bounds
    // the scan error by 2·radius·(π/2e4)²
    #[test]
    fn homodyne_scan_finds_the_minimum(lo in -3.0f64..0.0, hi in 0.0f64..10.0, angle in 0.0f64..PI) {
        let v = make_covariance(&SqueezeParams::from_db(lo, hi, angle).unwrap()).unwrap();
        let (scan_min, _) = scanned_min(&v, 10_000);
        let e = min_max_quadratures(&v);
        prop_assert!((scan_min - e.v_min).abs() <= 1e-6 * e.v_min);
    }
}

#[test]
fn worked_examples_from_hand_evaluation() {
    // A+ = 0.7, A- = 0.1: 0.49·0.5 + 0.01·2 + 0.5 and 0.01·0.5 + 0.49·2 + 0.5
    let v = QuadratureCovariance::diagonal(0.5, 2.0).unwrap();
    let out = eq4_propagate(0.8, 0.6, &v).unwrap();
    assert!((out.v_plus - 0.765).abs() < 1e-15);
    assert!((out.v_minus - 1.485).abs() < 1e-15);
    let general = general_propagate(&SidebandTransmission::real(0.8, 0.6).unwrap(), &v).unwrap();
    assert!((general.v_plus - 0.765).abs() < 1e-15 && (general.v_minus - 1.485).abs() < 1e-15);

    let delayed =
        general_propagate(&SidebandTransmission::new(1.0, 1.0, 0.5, -0.5).unwrap(), &v).unwrap();
    assert_eq!(delayed, v);
}
