use integrax::chain::*;
use integrax::exec::Execution;
use integrax::qcore::ModelParams;
use integrax::repkit::twist_operator;
use integrax::rmat::r_matrix;
use integrax::tensorlab::{embed, partial_trace, TensorOperator, C64, ONE};
use proptest::prelude::*;

fn params(l: usize) -> ModelParams {
    ModelParams::homogeneous(l, C64::new(0.7, 0.0))
}

#[test]
fn two_site_monodromy_is_a_product_of_embedded_r() {
    let p = params(2).with_grading(vec![1, 2, 0]).unwrap();
    let etas = vec![C64::new(1.1, 0.2), C64::new(0.8, -0.3)];
    let spec = ChainSpec::new(p.clone(), etas.clone()).unwrap();
    let z = C64::new(0.9, 0.4);
    let dims = [3, 3, 3];
    let r = |eta: C64, slots: &[usize]| embed(&r_matrix(&p, z / eta).unwrap(), slots, &dims).unwrap();
    let expected = &r(etas[1], &[1, 3]) * &r(etas[0], &[1, 2]);
    assert!(monodromy(&spec, z).unwrap().max_abs_diff(&expected) < 1e-14);
    let product = &monodromy(&spec, z).unwrap() * &monodromy_inverse(&spec, z).unwrap();
    assert!(product.max_abs_diff(&TensorOperator::identity(&dims)) < 1e-13);
}

#[test]
fn monodromy_products_act_on_trailing_legs() {
    let p = params(1);
    let spec = ChainSpec::new(p, vec![C64::new(1.2, 0.0), C64::new(0.9, 0.1)]).unwrap();
    let z = C64::new(0.6, 0.5);
    let mut x = TensorOperator::zeros(&[2, 2, 2, 2]);
    for k in 0..16 {
        x.set(k, (3 * k + 1) % 16, C64::new(k as f64 * 0.1, 1.0 - k as f64 * 0.05));
    }
    let m = monodromy(&spec, z).unwrap();
    // aux = 2: the monodromy acts on legs 2, 3, 4 of x.
    let big = embed(&m, &[2, 3, 4], &[2, 2, 2, 2]).unwrap();
    assert!(monodromy_times(&spec, z, 2, &x).unwrap().max_abs_diff(&(&big * &x)) < 1e-14);
    assert!(times_monodromy(&spec, z, 2, &x).unwrap().max_abs_diff(&(&x * &big)) < 1e-14);
}

#[test]
fn transfer_is_the_twisted_trace() {
    let p = params(1).with_twist(vec![0.4, -0.7]).unwrap();
    let spec = ChainSpec::homogeneous(p.clone(), 3).unwrap();
    let z = C64::new(1.3, -0.2);
    let m = monodromy(&spec, z).unwrap();
    let a = embed(&twist_operator(&p).matrix, &[1], &[2, 2, 2, 2]).unwrap();
    let expected = partial_trace(&(&m * &a), 1).unwrap();
    assert!(transfer(&spec, z).unwrap().max_abs_diff(&expected) < 1e-14);
}

#[test]
fn transfer_at_one_is_a_twisted_shift() {
    let p = params(2).with_twist(vec![0.3, 0.0, -0.2]).unwrap();
    let spec = ChainSpec::homogeneous(p, 3).unwrap();
    let t1 = transfer(&spec, ONE).unwrap();
    let inv = t1.monomial_inverse().unwrap();
    assert!((&t1 * &inv).max_abs_diff(&TensorOperator::identity(&[3, 3, 3])) < 1e-13);
}

#[test]
fn transfer_is_invariant_under_a_root_of_unity_shift() {
    for s in [vec![1, 1], vec![2, 1], vec![1, 2, 0]] {
        let l = s.len() - 1;
        let p = params(l).with_grading(s.clone()).unwrap().with_twist(vec![0.2; l + 1]).unwrap();
        let spec = ChainSpec::homogeneous(p.clone(), 3).unwrap();
        let z = C64::new(0.8, 0.45);
        let omega = C64::from_polar(1.0, std::f64::consts::TAU / p.s_total() as f64);
        let d = transfer(&spec, z).unwrap().max_abs_diff(&transfer(&spec, z * omega).unwrap());
        assert!(d < 1e-12, "s = {s:?}: {d}");
    }
}

#[test]
fn three_hamiltonian_routes_agree() {
    for (l, sites) in [(1, 4), (2, 3), (3, 2)] {
        let p = ModelParams::homogeneous(l, C64::new(0.55, 0.2))
            .with_grading((0..=l as u32).map(|k| 1 + k % 2).collect())
            .unwrap()
            .with_twist((0..=l).map(|k| 0.3 * k as f64 - 0.1).collect())
            .unwrap();
        let spec = ChainSpec::homogeneous(p.clone(), sites).unwrap();
        let logderiv = hamiltonian_logderiv(&spec, Execution::Sequential).unwrap();
        assert!(logderiv.max_abs_diff(&hamiltonian_explicit(&p, sites).unwrap()) < 1e-12, "l = {l}");
        assert!(logderiv.max_abs_diff(&hamiltonian_hv(&p, sites).unwrap()) < 1e-12, "l = {l}");
    }
}

#[test]
fn hamiltonian_matches_a_finite_difference_of_the_transfer() {
    let p = params(2).with_twist(vec![0.1, -0.4, 0.25]).unwrap();
    let spec = ChainSpec::homogeneous(p, 3).unwrap();
    let h = 1e-5;
    let t = |x: f64| transfer(&spec, C64::new(x, 0.0)).unwrap();
    let dt = (&t(1.0 + h) - &t(1.0 - h)).scale(C64::new(1.0 / (2.0 * h), 0.0));
    let fd = &dt * &t(1.0).inverse().unwrap();
    let exact = hamiltonian_logderiv(&spec, Execution::Parallel).unwrap();
    assert!(exact.max_abs_diff(&fd) < 1e-7 * exact.max_abs().max(1.0));
}

#[test]
fn xxz_form_and_two_site_spectrum() {
    let q = 0.6;
    let p = ModelParams::homogeneous(1, C64::new(q, 0.0));
    let xxz = xxz_hamiltonian(&p, 2).unwrap();
    let explicit = hamiltonian_explicit(&p, 2).unwrap();
    assert!(explicit.max_abs_diff(&xxz.scale(-(p.s_total() as f64) / p.kappa())) < 1e-13);
    // Two sites: the (↑↓, ↓↑) block is 4δ − 2σˣ and the aligned states sit at zero.
    let delta = (q + 1.0 / q) / 4.0;
    let spectrum = hermitian_spectrum(&xxz, 1e-12).unwrap();
    let mut expected = vec![0.0, 0.0, 4.0 * delta - 2.0, 4.0 * delta + 2.0];
    expected.sort_by(f64::total_cmp);
    for (a, b) in spectrum.iter().zip(&expected) {
        assert!((a - b).abs() < 1e-12, "{spectrum:?} vs {expected:?}");
    }
    assert!(xxz_hamiltonian(&params(2), 3).is_err());
}

#[test]
fn untwisted_hamiltonian_is_hermitian_for_real_q() {
    let p = params(2);
    let h = hamiltonian_explicit(&p, 3).unwrap();
    assert!(hermitian_spectrum(&h, 1e-12).is_some());
    let twisted = hamiltonian_explicit(&p.with_twist(vec![1.0, 0.0, 0.0]).unwrap(), 3).unwrap();
    assert!(hermitian_spectrum(&twisted, 1e-12).is_none());
}

#[test]
fn density_is_the_derivative_of_r_check() {
    let p = params(1).with_grading(vec![2, 1]).unwrap();
    let h = 1e-6;
    let flip = integrax::tensorlab::swap_operator(2);
    let rc = |x: f64| &flip * &r_matrix(&p, C64::new(x, 0.0)).unwrap();
    let fd = (&rc(1.0 + h) - &rc(1.0 - h)).scale(C64::new(1.0 / (2.0 * h), 0.0));
    assert!(local_density(&p).unwrap().max_abs_diff(&fd) < 1e-8);
}

#[test]
fn invalid_chains_are_rejected() {
    assert!(ChainSpec::new(params(1), vec![]).is_err());
    let spec = ChainSpec::homogeneous(params(1), 1).unwrap();
    assert!(hamiltonian_logderiv(&spec, Execution::Sequential).is_err());
    let inhom = ChainSpec::new(params(1), vec![ONE, C64::new(1.1, 0.0)]).unwrap();
    assert!(!inhom.is_homogeneous());
    assert!(transfer_log_derivative_numerator(&inhom, Execution::Sequential).is_err());
}

fn zeta() -> impl Strategy<Value = C64> {
    (0.5..1.5f64, 0.0..std::f64::consts::TAU).prop_map(|(r, a)| C64::from_polar(r, a))
}

fn chain() -> impl Strategy<Value = ChainSpec> {
    (1usize..=2, 1usize..=4)
        .prop_flat_map(|(l, n)| {
            (
                Just(l),
                0.4..0.85f64,
                prop::collection::vec(1u32..=2, l + 1),
                prop::collection::vec(-1.0..1.0f64, l + 1),
                prop::collection::vec(zeta(), n),
            )
        })
        .prop_map(|(l, q, s, phi, etas)| {
            ChainSpec::new(ModelParams::new(l, C64::new(q, 0.1), s, phi).unwrap(), etas).unwrap()
        })
}

fn away_from_poles(spec: &ChainSpec, zs: &[C64]) -> bool {
    let p = &spec.params;
    zs.iter().all(|&z| spec.etas.iter().all(|&eta| (ONE - p.q * p.q * p.zeta_s(z / eta)).norm() > 0.05))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transfers_commute(spec in chain(), z1 in zeta(), z2 in zeta()) {
        prop_assume!(away_from_poles(&spec, &[z1, z2]));
        let scale = transfer(&spec, z1).unwrap().norm() * transfer(&spec, z2).unwrap().norm();
        prop_assert!(transfer_commutator(&spec, z1, z2).unwrap() < 1e-12 * scale.max(1.0));
    }

    #[test]
    fn rtt_relation_holds(spec in chain(), z1 in zeta(), z2 in zeta()) {
        prop_assume!(away_from_poles(&spec, &[z1, z2]) && (ONE - spec.params.q * spec.params.q * spec.params.zeta_s(z1 / z2)).norm() > 0.05);
        prop_assert!(rmm_residual(&spec, z1, z2).unwrap() < 1e-10);
    }

    #[test]
    fn transfer_conserves_every_weight(spec in chain(), z in zeta()) {
        prop_assume!(away_from_poles(&spec, &[z]));
        let t = transfer(&spec, z).unwrap();
        let n = spec.params.dim();
        let dims = spec.quantum_dims();
        for i in 1..=n {
            let unit = TensorOperator::unit(n, i, i);
            let mut count = TensorOperator::zeros(&dims);
            for site in 1..=spec.sites {
                count = &count + &embed(&unit, &[site], &dims).unwrap();
            }
            prop_assert!(t.commutator(&count).max_abs() < 1e-12 * t.max_abs().max(1.0));
        }
    }

    #[test]
    fn sweep_modes_agree(spec in chain(), pairs in prop::collection::vec((zeta(), zeta()), 1..6)) {
        prop_assume!(pairs.iter().all(|&(a, b)| away_from_poles(&spec, &[a, b])));
        let seq = transfer_commutator_sweep(&spec, &pairs, Execution::Sequential).unwrap();
        let par = transfer_commutator_sweep(&spec, &pairs, Execution::Parallel).unwrap();
        prop_assert_eq!(seq, par);
    }
}
