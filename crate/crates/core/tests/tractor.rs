use std::f64::consts::SQRT_2;

use bggcheck_core::families::flat_forms;
use bggcheck_core::geometry::{MetricSpec, Signature};
use bggcheck_core::invariants;
use bggcheck_core::jet::Jet;
use bggcheck_core::point::Point;
use bggcheck_core::random;
use bggcheck_core::tractor::{
    self, connection, connection_form, g1_action, kostant_codiff, tractor_clifford, tractor_metric_h, tractor_pairing_b,
    SpinTractor, TractorSection, TractorValuedForm,
};
use bggcheck_core::Polynomial;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sig(p: usize, q: usize) -> Signature {
    Signature::for_metric(p, q).unwrap()
}

fn flat_point(s: Signature) -> Point {
    let m = MetricSpec::flat(s);
    let x = m.sample_points(1, 0).remove(0);
    Point::with_optional_spin(&m, &x, 4).unwrap()
}

fn c(pt: &Point, v: f64) -> Jet {
    Jet::constant(pt.n(), pt.order(), v)
}

fn standard(pt: &Point, rho: f64, mu: &[f64], sigma: f64) -> TractorSection {
    let mus: Vec<Jet> = (0..pt.n()).map(|a| c(pt, mu.get(a).copied().unwrap_or(0.0))).collect();
    TractorSection::standard(&c(pt, rho), &mus, &c(pt, sigma))
}

fn spin(pt: &Point, tau: &[f64], chi: &[f64]) -> TractorSection {
    TractorSection::Spin(SpinTractor {
        tau: tau.iter().map(|&v| c(pt, v)).collect(),
        chi: chi.iter().map(|&v| c(pt, v)).collect(),
    })
}

fn spin_values(s: &TractorSection) -> (Vec<f64>, Vec<f64>) {
    let x = s.as_spin().unwrap();
    (x.tau.iter().map(Jet::value).collect(), x.chi.iter().map(Jet::value).collect())
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn tractor_metric_examples() {
    let pt = flat_point(sig(2, 3));
    let s = standard(&pt, 0.0, &[], 1.0);
    let t = standard(&pt, 1.0, &[], 0.0);
    assert_eq!(tractor_metric_h(&pt, &s, &t).unwrap().value(), 1.0);
    for a in 0..5 {
        let mut mu = vec![0.0; 5];
        mu[a] = 1.0;
        let u = standard(&pt, 0.0, &mu, 0.0);
        assert_eq!(tractor_metric_h(&pt, &u, &u).unwrap().value(), pt.geo.signature.eta(a));
    }
}

#[test]
fn tractor_clifford_examples() {
    let pt = flat_point(sig(2, 3));
    let chi = [0.5, -1.0, 2.0, 0.25];
    let out = tractor_clifford(&pt, &standard(&pt, 1.0, &[], 0.0), &spin(&pt, &[0.0; 4], &chi)).unwrap();
    let (tau, rest) = spin_values(&out);
    assert_eq!(rest, vec![0.0; 4]);
    for (t, x) in tau.iter().zip(chi) {
        assert!((t - SQRT_2 * x).abs() < 1e-15);
    }

    let tau0 = [1.0, 0.0, -0.5, 3.0];
    let out = tractor_clifford(&pt, &standard(&pt, 0.0, &[], 1.0), &spin(&pt, &tau0, &[0.0; 4])).unwrap();
    let (top, bottom) = spin_values(&out);
    assert_eq!(top, vec![0.0; 4]);
    for (b, t) in bottom.iter().zip(tau0) {
        assert!((b + SQRT_2 * t).abs() < 1e-15);
    }
}

#[test]
fn tractor_pairing_examples() {
    for s in [sig(2, 3), sig(3, 3)] {
        let pt = flat_point(s);
        let d = pt.spin().unwrap().dim();
        let mut r = rng(3);
        let u: Vec<f64> = (0..d).map(|i| (i as f64 * 0.7).sin()).collect();
        let v: Vec<f64> = (0..d).map(|i| (i as f64 * 1.3 + 0.2).cos()).collect();
        let zero = vec![0.0; d];
        let b = tractor_pairing_b(&pt, &spin(&pt, &zero, &u), &spin(&pt, &zero, &v)).unwrap();
        assert_eq!(b.value(), 0.0);
        let b = tractor_pairing_b(&pt, &spin(&pt, &u, &zero), &spin(&pt, &zero, &v)).unwrap();
        let st = &pt.spin().unwrap().structure;
        let want = -s.parity() * st.pair_values(&u, &v);
        assert!((b.value() - want).abs() < 1e-14);
        assert!(invariants::pairing_invariance(&pt, &mut r).unwrap() < 1e-10);
    }
}

#[test]
fn nilpotent_action_examples() {
    let pt = flat_point(sig(2, 3));
    let mut ups = vec![c(&pt, 0.0); 5];
    ups[0] = c(&pt, 1.0);
    let s = standard(&pt, 0.0, &[0.0, 1.0], 0.0);
    assert_eq!(g1_action(&pt, &ups, &s).unwrap().max_abs(), 0.0);

    // Two steps on the σ slot reach ρ: υ•υ•(0,0,1) = (-|υ|², 0, 0); three vanish.
    let one = standard(&pt, 0.0, &[], 1.0);
    let twice = g1_action(&pt, &ups, &g1_action(&pt, &ups, &one).unwrap()).unwrap();
    let (rho, mu, sigma) = twice.standard_slots().unwrap();
    assert_eq!(rho.value(), -1.0);
    assert!(mu.iter().all(|m| m.max_abs() == 0.0));
    assert_eq!(sigma.max_abs(), 0.0);
    assert_eq!(g1_action(&pt, &ups, &twice).unwrap().max_abs(), 0.0);
}

#[test]
fn parallel_standard_tractors_on_the_flat_model() {
    let pt = flat_point(sig(2, 3));
    // (0, 0, 1) is parallel; (0, dx¹, 0) is not, since ∇_a σ = D_a σ - μ_a.
    let s = standard(&pt, 0.0, &[], 1.0);
    for a in 0..5 {
        assert_eq!(connection(&pt, a, &s).unwrap().max_abs(), 0.0);
    }
    let t = standard(&pt, 0.0, &[1.0], 0.0);
    let d0 = connection(&pt, 0, &t).unwrap();
    let (_, _, sigma) = d0.standard_slots().unwrap();
    assert_eq!(sigma.value(), -1.0);
}

#[test]
fn codifferential_of_a_sigma_slot_form() {
    let pt = flat_point(sig(2, 3));
    let zero = standard(&pt, 0.0, &[], 0.0);
    let mut comps = vec![zero; 5];
    comps[0] = standard(&pt, 0.0, &[], 2.5);
    let phi = TractorValuedForm { n: 5, degree: 1, comps };
    let out = kostant_codiff(&pt, &phi).unwrap();
    assert_eq!(out.degree, 0);
    let (rho, mu, sigma) = out.comps[0].standard_slots().unwrap();
    assert_eq!(rho.value(), 0.0);
    assert_eq!(sigma.value(), 0.0);
    for (a, m) in mu.iter().enumerate() {
        assert_eq!(m.value(), if a == 0 { 2.5 } else { 0.0 });
    }
}

#[test]
fn codifferential_of_parallel_sections_vanishes_on_the_flat_model() {
    let s = sig(2, 3);
    let m = MetricSpec::flat(s);
    let x = m.sample_points(1, 4).remove(0);
    let pt = Point::with_optional_spin(&m, &x, 4).unwrap();
    for k in [0, 1, 2] {
        for f in flat_forms(s, k).iter().take(6) {
            let j = f.jet_at(&x, 4).unwrap();
            let l0 = bggcheck_core::bgg::split_l0(&pt, &j).unwrap();
            let form = connection_form(&pt, &l0).unwrap();
            assert!(form.max_abs_value() < 1e-12);
            assert!(kostant_codiff(&pt, &form).unwrap().max_abs_value() < 1e-12);
        }
    }
}

#[test]
fn flat_and_conformally_flat_metrics_are_tractor_flat() {
    let s = sig(2, 3);
    let mut f = Polynomial::var(5, 1).scale(0.5);
    f.add_term(vec![1, 0, 1, 0, 0], -0.3);
    for m in [MetricSpec::flat(s), MetricSpec::conformally_flat(s, f)] {
        for x in m.sample_points(2, 1) {
            let pt = Point::with_optional_spin(&m, &x, 4).unwrap();
            let mut r = rng(9);
            assert!(invariants::curvature_max(&pt, &mut r).unwrap() < 1e-12);
            let sp = random::spin_tractor(&mut r, &pt, 4);
            assert!(tractor::curvature_form(&pt, &sp).unwrap().max_abs_value() < 1e-12);
        }
    }
}

#[test]
fn middle_block_of_tractor_curvature_is_the_weyl_tensor() {
    for s in [sig(2, 3), sig(3, 3), sig(4, 4)] {
        let m = MetricSpec::random_quartic(s, 40 + s.n() as u64, 0.2);
        let x = m.sample_points(1, 7).remove(0);
        let pt = Point::with_optional_spin(&m, &x, 4).unwrap();
        assert!(invariants::weyl_max(&pt) > 1e-2);
        assert!(invariants::curvature_weyl(&pt).unwrap() < 1e-7);
    }
}

#[test]
fn unsupported_bundles_are_rejected() {
    let pt = flat_point(sig(2, 3));
    let s = standard(&pt, 1.0, &[], 0.0);
    assert!(tractor_metric_h(&pt, &s, &spin(&pt, &[0.0; 4], &[0.0; 4])).is_err());
    assert!(tractor_clifford(&pt, &s, &s).is_err());
    let phi = TractorValuedForm { n: 5, degree: 0, comps: vec![s] };
    assert!(kostant_codiff(&pt, &phi).is_err());
}

/// One pointwise invariant over random data on a random quartic metric.
fn check(seed: u64, sig_ix: usize, f: fn(&Point, &mut ChaCha8Rng) -> bggcheck_core::Result<f64>, tol: f64) -> Result<(), TestCaseError> {
    let (p, q) = [(2, 3), (3, 3), (2, 2), (3, 4)][sig_ix];
    let m = MetricSpec::random_quartic(sig(p, q), seed % 16, 0.2);
    let x = m.sample_points(1, seed).remove(0);
    let pt = Point::with_optional_spin(&m, &x, 4).unwrap();
    let r = f(&pt, &mut rng(seed)).unwrap();
    prop_assert!(r < tol, "residual {r} in ({p},{q})");
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn clifford_relation_holds(seed in any::<u64>(), s in 0usize..4) {
        check(seed, s, invariants::clifford_relation, 1e-10)?;
    }

    #[test]
    fn pairing_is_invariant(seed in any::<u64>(), s in 0usize..4) {
        check(seed, s, invariants::pairing_invariance, 1e-10)?;
    }

    #[test]
    fn nilpotent_action_is_skew_for_h(seed in any::<u64>(), s in 0usize..2) {
        check(seed, s, invariants::g1_skew, 1e-10)?;
    }

    #[test]
    fn nilpotent_action_is_abelian_with_cube_zero(seed in any::<u64>(), s in 0usize..2) {
        check(seed, s, invariants::g1_abelian_nilpotent, 1e-10)?;
    }

    #[test]
    fn codifferential_squares_to_zero(seed in any::<u64>(), s in 0usize..2) {
        check(seed, s, invariants::codiff_squared, 1e-12)?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn connection_is_metric(seed in any::<u64>(), s in 0usize..2) {
        check(seed, s, invariants::metricity, 1e-9)?;
    }

    #[test]
    fn connection_obeys_leibniz_on_wedges(seed in any::<u64>(), s in 0usize..2) {
        check(seed, s, invariants::leibniz_wedge, 1e-9)?;
    }

    #[test]
    fn curvature_is_natural_on_wedges(seed in any::<u64>()) {
        check(seed, 0, invariants::curvature_naturality, 1e-9)?;
    }

    #[test]
    fn metric_is_bilinear_and_symmetric(seed in any::<u64>(), a in -2.0..2.0f64) {
        let m = MetricSpec::random_quartic(sig(2, 3), seed % 16, 0.2);
        let x = m.sample_points(1, seed).remove(0);
        let pt = Point::with_optional_spin(&m, &x, 4).unwrap();
        let mut r = rng(seed);
        let s = random::form_tractor(&mut r, &pt, 1);
        let t = random::form_tractor(&mut r, &pt, 1);
        let u = random::form_tractor(&mut r, &pt, 1);
        let st = tractor_metric_h(&pt, &s, &t).unwrap();
        prop_assert!((&st - &tractor_metric_h(&pt, &t, &s).unwrap()).max_abs() < 1e-14);
        let comb = s.scale(a).add(&u).unwrap();
        let lhs = tractor_metric_h(&pt, &comb, &t).unwrap();
        let rhs = &st.scale(a) + &tractor_metric_h(&pt, &u, &t).unwrap();
        prop_assert!((&lhs - &rhs).max_abs() < 1e-12);
    }
}
