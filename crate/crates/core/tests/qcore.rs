use integrax::qcore::*;
use integrax::tensorlab::C64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[test]
fn q_numbers_of_small_integers() {
    let q = c(0.7, 0.0);
    assert_eq!(q_number(0, q).unwrap(), c(0.0, 0.0));
    assert!((q_number(1, q).unwrap() - 1.0).norm() < 1e-15);
    // [2]_q = q + 1/q
    assert!((q_number(2, q).unwrap() - (0.7 + 1.0 / 0.7)).norm() < 1e-14);
    assert!((q_number(2, q).unwrap().re - 2.128_571_428_571_428).abs() < 1e-12);
}

#[test]
fn q_numbers_are_undefined_at_unit_q() {
    assert!(q_number(3, c(1.0, 0.0)).is_err());
    assert!(q_number(3, c(-1.0, 0.0)).is_err());
}

#[test]
fn q_factorial_matches_products() {
    let q = c(0.6, 0.2);
    assert_eq!(q_factorial(0, q).unwrap(), c(1.0, 0.0));
    let expected = q_number(1, q).unwrap() * q_number(2, q).unwrap() * q_number(3, q).unwrap();
    assert!((q_factorial(3, q).unwrap() - expected).norm() < 1e-14);
}

#[test]
fn kappa_values() {
    assert_eq!(kappa(c(1.0, 0.0)), c(0.0, 0.0));
    assert!((kappa(c(0.5, 0.0)) - c(-1.5, 0.0)).norm() < 1e-15);
}

#[test]
fn f_series_vanishes_at_origin() {
    assert_eq!(f_series(2, c(0.0, 0.0), c(0.7, 0.0), DEFAULT_ORDER).unwrap(), c(0.0, 0.0));
}

#[test]
fn f2_sums_to_a_logarithm() {
    let (q, z) = (c(0.6, 0.0), c(0.3, 0.0));
    let sum = f_series(2, q * z, q, 60).unwrap() + f_series(2, z / q, q, 60).unwrap();
    assert!((sum + (1.0 - z).ln()).norm() < 1e-12);
}

#[test]
fn f3_difference_is_a_log_ratio() {
    let (q, z) = (c(0.5, 0.0), c(0.2, 0.0));
    let lhs =
        f_series(3, q.powi(3) * z, q, DEFAULT_ORDER).unwrap() - f_series(3, q.powi(-3) * z, q, DEFAULT_ORDER).unwrap();
    let rhs = -(1.0 - q * z).ln() + (1.0 - z / q).ln();
    assert!((lhs - rhs).norm() < 1e-12);
}

#[test]
fn f_series_refuses_divergent_arguments() {
    assert!(f_series(1, c(0.95, 0.0), c(0.7, 0.0), DEFAULT_ORDER).is_err());
    assert!(f_series(2, c(5.0, 0.0), c(0.2, 0.0), DEFAULT_ORDER).is_err());
    assert!(f_series(0, c(0.1, 0.0), c(0.7, 0.0), DEFAULT_ORDER).is_err());
    assert!(f_series(2, c(0.1, 0.0), c(0.7, 0.0), 0).is_err());
}

#[test]
fn params_defaults_and_helpers() {
    let p = ModelParams::homogeneous(3, c(0.7, 0.0)).with_grading(vec![2, 1, 0, 1]).unwrap();
    assert_eq!(p.dim(), 4);
    assert_eq!(p.s_total(), 4);
    assert_eq!(p.s_between(1, 3), 1);
    assert_eq!(p.s_between(0, 4), 4);
    assert!((p.q_pow(2.0) - c(0.49, 0.0)).norm() < 1e-15);
    assert_eq!(p.q_int(-1), c(0.7, 0.0).inv());
    assert!((p.zeta_s(c(0.0, 1.0)) - c(1.0, 0.0)).norm() < 1e-15);
}

#[test]
fn params_reject_invalid_input() {
    let q = c(0.7, 0.0);
    assert!(ModelParams::new(0, q, vec![1], vec![0.0]).is_err());
    assert!(ModelParams::new(1, q, vec![1], vec![0.0, 0.0]).is_err());
    assert!(ModelParams::new(1, q, vec![0, 0], vec![0.0, 0.0]).is_err());
    assert!(ModelParams::new(1, q, vec![1, 1], vec![0.0]).is_err());
    assert!(ModelParams::new(1, c(0.0, 1.0), vec![1, 1], vec![0.0, 0.0]).is_err());
    assert!(ModelParams::new(1, c(f64::NAN, 0.0), vec![1, 1], vec![0.0, 0.0]).is_err());
}

#[test]
fn params_json_form() {
    let p = ModelParams::new(2, c(0.7, 0.1), vec![1, 2, 0], vec![0.1, -0.2, 0.3]).unwrap();
    let text = serde_json::to_string(&p).unwrap();
    assert_eq!(text, r#"{"l":2,"q":[0.7,0.1],"s":[1,2,0],"phi":[0.1,-0.2,0.3]}"#);
    assert_eq!(serde_json::from_str::<ModelParams>(&text).unwrap(), p);
    let short: ModelParams = serde_json::from_str(r#"{"l":2,"q":[0.5,0.0]}"#).unwrap();
    assert_eq!(short, ModelParams::homogeneous(2, c(0.5, 0.0)));
    assert!(serde_json::from_str::<ModelParams>(r#"{"l":1,"q":[1.0,0.0]}"#).is_err());
}

fn small_q() -> impl Strategy<Value = C64> {
    (0.3..0.85f64, -0.3..0.3f64).prop_map(|(r, a)| C64::from_polar(r, a))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn q_numbers_are_odd(n in -12i32..=12, q in small_q()) {
        let a = q_number(n, q).unwrap();
        let b = q_number(-n, q).unwrap();
        prop_assert!((a + b).norm() <= 1e-12 * a.norm().max(1.0));
    }

    #[test]
    fn kappa_scales_q_numbers(n in -10i32..=10, q in small_q()) {
        let lhs = kappa(q) * q_number(n, q).unwrap();
        let rhs = q.powi(n) - q.powi(-n);
        prop_assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm().max(1.0));
    }

    #[test]
    fn q_numbers_are_symmetric_in_q(n in -10i32..=10, q in small_q()) {
        let a = q_number(n, q).unwrap();
        let b = q_number(n, q.inv()).unwrap();
        prop_assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0));
    }

    #[test]
    fn f_difference_identity_holds_for_every_rank(m in 1u32..=4, q in 0.3..0.8f64, r in 0.0..0.45f64, a in 0.0..std::f64::consts::TAU) {
        let q = c(q, 0.0);
        let z = C64::from_polar(r * q.re, a);
        let qm = q.powi(m as i32);
        let lhs = f_series(m, qm * z, q, DEFAULT_ORDER).unwrap() - f_series(m, z / qm, q, DEFAULT_ORDER).unwrap();
        let rhs = -(1.0 - q * z).ln() + (1.0 - z / q).ln();
        prop_assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn f_series_is_converged_at_default_order(m in 1u32..=4, q in small_q(), r in 0.0..0.6f64, a in 0.0..std::f64::consts::TAU) {
        let z = C64::from_polar(r, a);
        let once = f_series(m, z, q, DEFAULT_ORDER).unwrap();
        let twice = f_series(m, z, q, 2 * DEFAULT_ORDER).unwrap();
        prop_assert!((once - twice).norm() < 1e-14);
    }

    #[test]
    fn params_survive_json(l in 1usize..=4, re in 0.2..0.9f64, im in -0.3..0.3f64, seed in any::<u64>()) {
        let s: Vec<u32> = (0..=l).map(|k| ((seed >> (3 * k)) & 3) as u32 + 1).collect();
        let phi: Vec<f64> = (0..=l).map(|k| ((seed >> (5 * k)) & 31) as f64 / 7.0 - 2.0).collect();
        let p = ModelParams::new(l, c(re, im), s, phi).unwrap();
        let back: ModelParams = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        prop_assert_eq!(back, p);
    }
}
