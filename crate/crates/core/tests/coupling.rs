use bggcheck_core::bgg::{split_spinor, theta0_aes, theta0_ckf, theta0_twistor, EvalOptions};
use bggcheck_core::coupling::{
    aes_from_ckf_23, ckf_from_aes_23, cond_contract, cond_form_spinor, cond_wedge, couple_contract,
    couple_form_spinor, couple_spinor_pair, couple_wedge, coupling_report, decompose_ckf, genericity, perp_projection,
    projector, CouplingKind, CouplingVerdict,
};
use bggcheck_core::families::{flat_forms, flat_twistors};
use bggcheck_core::field::{BggKind, PolyField};
use bggcheck_core::forms::max_abs_value;
use bggcheck_core::geometry::{MetricSpec, Signature};
use bggcheck_core::jet::Jet;
use bggcheck_core::point::Point;
use bggcheck_core::random;
use bggcheck_core::scenario::generic_twistor;
use bggcheck_core::skew::Skew;
use bggcheck_core::{Error, Polynomial};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sig(p: usize, q: usize) -> Signature {
    Signature::for_metric(p, q).unwrap()
}

fn point(metric: &MetricSpec, x: &[f64]) -> Point {
    Point::with_optional_spin(metric, x, 4).unwrap()
}

fn form(field: &PolyField, x: &[f64]) -> Skew {
    field.jet_at(x, 4).unwrap().as_form().unwrap().clone()
}

fn spinor(field: &PolyField, x: &[f64]) -> Vec<Jet> {
    field.jet_at(x, 4).unwrap().as_spinor().unwrap().clone()
}

fn spin_max(s: &[Jet]) -> f64 {
    s.iter().fold(0.0, |m, j| m.max(j.value().abs()))
}

const X: [f64; 5] = [0.3, -0.1, 0.2, 0.4, -0.25];

fn one() -> PolyField {
    PolyField::scalar(Polynomial::constant(5, 1.0))
}

fn one_form(comps: Vec<Polynomial>) -> PolyField {
    PolyField::from_polys(BggKind::ConformalKillingForm { k: 1 }, comps)
}

fn rotation() -> PolyField {
    let z = Polynomial::zero;
    one_form(vec![Polynomial::var(5, 1).scale(-1.0), Polynomial::var(5, 0), z(), z(), z()])
}

/// `ξ_a = η_aa x^a`, the dilation field lowered.
fn dilation(s: Signature) -> PolyField {
    one_form((0..5).map(|a| Polynomial::var(5, a).scale(s.eta(a))).collect())
}

#[test]
fn wedge_examples() {
    let flat = MetricSpec::flat(sig(2, 3));
    let pt = point(&flat, &X);
    let w = couple_wedge(&pt, &form(&one(), &X), &form(&rotation(), &X)).unwrap();
    assert_eq!(w.rank(), 2);
    assert!((w.get(&[0, 1]).value() - 1.0).abs() < 1e-14);
    assert!((w.max_abs_value() - 1.0).abs() < 1e-14);
    let w = couple_wedge(&pt, &form(&one(), &X), &form(&dilation(sig(2, 3)), &X)).unwrap();
    assert!(w.max_abs_value() < 1e-14);
}

#[test]
fn contraction_examples() {
    let s = sig(2, 3);
    let flat = MetricSpec::flat(s);
    let pt = point(&flat, &X);
    let c = couple_contract(&pt, &form(&one(), &X), &form(&dilation(s), &X)).unwrap();
    assert_eq!(c.rank(), 0);
    assert!((c.comps()[0].value() - 5.0).abs() < 1e-14);
    let z = Polynomial::zero;
    let constant = one_form(vec![z(), Polynomial::constant(5, 3.0), z(), z(), z()]);
    let c = couple_contract(&pt, &form(&one(), &X), &form(&constant, &X)).unwrap();
    assert!(c.max_abs_value() < 1e-14);
    assert!(couple_contract(&pt, &form(&constant, &X), &form(&one(), &X)).is_err());
}

#[test]
fn short_contraction_conditions_vanish_identically() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (p, q) in [(2, 3), (3, 3)] {
        let m = MetricSpec::random_quartic(sig(p, q), 21, 0.2);
        let n = p + q;
        let pt = point(&m, &m.sample_points(1, 3)[0]);
        let mut f = |k| random::skew(&mut rng, n, k, n, 4);
        for (k, k2) in [(0, 1), (0, 2), (1, 2)] {
            let (s, t) = (f(k), f(k2));
            assert!(max_abs_value(&cond_contract(&pt, &s, &t).unwrap()) < 1e-14);
        }
        let (s, t) = (f(0), f(3));
        assert!(max_abs_value(&cond_contract(&pt, &s, &t).unwrap()) > 1e-4);
        let (s, t) = (f(0), f(1));
        assert!(max_abs_value(&cond_wedge(&pt, &s, &t).unwrap()) > 1e-4);
    }
}

#[test]
fn spinor_pair_examples() {
    let s = sig(2, 3);
    let flat = MetricSpec::flat(s);
    let pt = point(&flat, &X);
    let tw = flat_twistors(s).unwrap();
    let chi = spinor(&generic_twistor(s).unwrap(), &X);
    // b is skew in (2,3)
    assert!(couple_spinor_pair(&pt, &chi, &chi, 0).unwrap().max_abs() < 1e-14);

    let xi = couple_spinor_pair(&pt, &spinor(&tw[0], &X), &spinor(&tw[5], &X), 1).unwrap();
    assert!(xi.max_abs() > 0.1);
    assert!(max_abs_value(&theta0_ckf(&pt, &xi).unwrap()) < 1e-13);
    let sigma = couple_spinor_pair(&pt, &spinor(&tw[1], &X), &spinor(&tw[6], &X), 0).unwrap();
    assert!(theta0_aes(&pt, &sigma).unwrap().iter().flatten().all(|j| j.value().abs() < 1e-13));
}

#[test]
fn form_spinor_examples() {
    let s = sig(2, 3);
    let flat = MetricSpec::flat(s);
    let pt = point(&flat, &X);
    let tw = flat_twistors(s).unwrap();
    let d = tw.len() / 2;
    for i in 0..d {
        // σ = 1, χ = x·e_i
        let out = couple_form_spinor(&pt, &form(&one(), &X), &spinor(&tw[d + i], &X)).unwrap();
        for (j, c) in out.iter().enumerate() {
            assert!((c.value() - if i == j { 2.0 } else { 0.0 }).abs() < 1e-14);
        }
    }
    let r = cond_form_spinor(&pt, &form(&rotation(), &X), &spinor(&tw[0], &X));
    assert!(matches!(r, Err(Error::UnconditionalCase(1))));

    let out = couple_form_spinor(&pt, &form(&rotation(), &X), &spinor(&generic_twistor(s).unwrap(), &X)).unwrap();
    let res = theta0_twistor(&pt, &out).unwrap();
    assert!(res.iter().all(|c| spin_max(c) < 1e-13));
}

#[test]
fn genericity_of_twistor_spinors() {
    let s = sig(2, 3);
    let flat = MetricSpec::flat(s);
    let pt = point(&flat, &X);
    let tw = flat_twistors(s).unwrap();
    let (small, big) = genericity(&pt, &spinor(&tw[2], &X)).unwrap();
    assert_eq!(small, 0.0);
    assert_eq!(big, 0.0);
    let err = decompose_ckf(&pt, &spinor(&tw[2], &X), &form(&rotation(), &X));
    assert!(matches!(err, Err(Error::NonGeneric(_))));

    let (small, big) = genericity(&pt, &spinor(&generic_twistor(s).unwrap(), &X)).unwrap();
    assert!((small - 5.0).abs() < 1e-13);
    assert!((big / small - 2.0 * 2f64.sqrt() / 5.0).abs() < 1e-13);
}

#[test]
fn projector_on_two_forms_is_idempotent() {
    let s = sig(2, 3);
    let flat = MetricSpec::flat(s);
    let pt = point(&flat, &X);
    let x = split_spinor(&pt, &spinor(&generic_twistor(s).unwrap(), &X)).unwrap();
    let p = projector(&pt, &x, 1).unwrap();
    let (sign, res) = p.idempotency();
    assert_eq!(sign, 1.0);
    assert!(res < 1e-12, "{res}");
    assert!((p.eigen_scale - 3.0).abs() < 1e-12);
    assert_eq!(p.rank(1e-9), 7);
    assert_eq!(p.action_nullity(1e-9), 14);
    assert_eq!(p.matrix.nrows(), 21);

    let scaled = projector(&pt, &x.scale(3.0), 1).unwrap();
    assert!((&scaled.matrix - &p.matrix).amax() < 1e-12);

    let p0 = projector(&pt, &x, 0).unwrap();
    assert!((&p0.matrix - DMatrix::<f64>::identity(7, 7)).amax() < 1e-12);
}

#[test]
fn projector_on_three_forms_is_not_idempotent() {
    // Recorded failure: the image splits into eigenvalues 4 (x7) and 7 (x1).
    let s = sig(2, 3);
    let flat = MetricSpec::flat(s);
    let pt = point(&flat, &X);
    let x = split_spinor(&pt, &spinor(&generic_twistor(s).unwrap(), &X)).unwrap();
    let p = projector(&pt, &x, 2).unwrap();
    let (_, res) = p.idempotency();
    assert!(res > 1e-3, "{res}");
    let raw = &p.raw;
    let id = DMatrix::<f64>::identity(35, 35);
    let (a, b) = (raw - &id * 4.0, raw - &id * 7.0);
    assert!((raw * &a * &b).amax() < 1e-9);
    assert!((raw * &a).amax() > 1e-3 && (raw * &b).amax() > 1e-3);
    let rank = |m: &DMatrix<f64>| m.clone().svd(false, false).singular_values.iter().filter(|&&v| v > 1e-9).count();
    assert_eq!(rank(raw), 8);
    assert_eq!(rank(&a), 28);
    assert_eq!(rank(&b), 34);
}

fn coeff_row(s: &Skew) -> Vec<f64> {
    s.comps().iter().flat_map(|j| j.coeffs().to_vec()).collect()
}

#[test]
fn conformal_killing_fields_split_by_a_generic_twistor() {
    let s = sig(2, 3);
    let flat = MetricSpec::flat(s);
    let pt = point(&flat, &X);
    let chi = spinor(&generic_twistor(s).unwrap(), &X);
    let fields = flat_forms(s, 1);
    assert_eq!(fields.len(), 21);
    let mut rows = Vec::new();
    for f in &fields {
        let xi = form(f, &X);
        let d = decompose_ckf(&pt, &chi, &xi).unwrap();
        assert!(d.sym_residual < 1e-12);
        if let Some(l) = d.lambda {
            assert!((l - 3.0).abs() < 1e-12);
        }
        let again = decompose_ckf(&pt, &chi, &d.sym).unwrap();
        assert!(again.perp.max_abs_value() < 1e-12);
        assert!(again.lambda.is_none());
        rows.push(coeff_row(&perp_projection(&pt, &chi, &xi).unwrap()));
    }
    let m = DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]);
    let rank = m.svd(false, false).singular_values.iter().filter(|&&v| v > 1e-9).count();
    assert_eq!(rank, 7);
}

#[test]
fn scale_to_field_round_trip_is_minus_six() {
    let s = sig(2, 3);
    let flat = MetricSpec::flat(s);
    let mut f = Polynomial::var(5, 3).scale(0.3);
    f.add_term(vec![1, 1, 0, 0, 0], -0.2);
    let cf = flat.conformal_rescale(&f);
    let chi = generic_twistor(s).unwrap();
    let aes = flat_forms(s, 0);
    let sigma = aes[0].add(&aes[3]).unwrap().add(&aes[6].scale(0.5)).unwrap();
    for (m, chi, sigma) in [(&flat, chi.clone(), sigma.clone()), (&cf, chi.rescaled(&f), sigma.rescaled(&f))] {
        for x in m.sample_points(3, 13) {
            let pt = point(m, &x);
            let c = spinor(&chi, &x);
            let sg = form(&sigma, &x);
            let xi = ckf_from_aes_23(&pt, &c, &sg).unwrap();
            assert!(max_abs_value(&theta0_ckf(&pt, &xi).unwrap()) < 1e-10 * xi.max_abs());
            let back = aes_from_ckf_23(&pt, &c, &xi).unwrap();
            let ratio = back.comps()[0].value() / sg.comps()[0].value();
            assert!((ratio + 6.0).abs() < 1e-9, "{ratio}");
            assert_eq!(ckf_from_aes_23(&pt, &c, &Skew::zero(5, 0, 5, 4)).unwrap().max_abs(), 0.0);
        }
    }
    let flat6 = MetricSpec::flat(sig(3, 3));
    let pt = point(&flat6, &[0.0; 6]);
    let chi: Vec<Jet> = (0..8).map(|_| Jet::constant(6, 4, 1.0)).collect();
    assert!(ckf_from_aes_23(&pt, &chi, &Skew::zero(6, 0, 6, 4)).is_err());
}

#[test]
fn coupling_reports_on_the_flat_model_are_consistent() {
    let s = sig(2, 3);
    let flat = MetricSpec::flat(s);
    let xs = flat.sample_points(3, 4);
    let opts = EvalOptions { order: 4, tolerance: 1e-8 };
    let aes = flat_forms(s, 0);
    let k1 = flat_forms(s, 1);
    let k2 = flat_forms(s, 2);
    let tw = flat_twistors(s).unwrap();
    let g = generic_twistor(s).unwrap();
    let a = aes[1].add(&aes[6]).unwrap();
    let xi = k1[3].add(&k1[17]).unwrap();
    let cases: Vec<(CouplingKind, &PolyField, &PolyField)> = vec![
        (CouplingKind::Wedge { k: 0, k2: 1 }, &a, &xi),
        (CouplingKind::Wedge { k: 1, k2: 1 }, &xi, &k1[9]),
        (CouplingKind::Contract { k: 0, k2: 2 }, &a, &k2[11]),
        (CouplingKind::Contract { k: 1, k2: 2 }, &xi, &k2[4]),
        (CouplingKind::SpinorPair { k: 1 }, &g, &tw[3]),
        (CouplingKind::SpinorPair { k: 2 }, &g, &tw[6]),
        (CouplingKind::FormSpinor { k: 0 }, &a, &g),
        (CouplingKind::FormSpinor { k: 2 }, &k2[7], &g),
    ];
    for (kind, u, v) in cases {
        let r = coupling_report(&flat, kind, u, v, &xs, opts).unwrap();
        assert!(r.pass(), "{kind:?}: {r:?}");
        assert_eq!(r.verdict, CouplingVerdict::Consistent);
    }
    let r = coupling_report(&flat, CouplingKind::Wedge { k: 0, k2: 1 }, &PolyField::scalar(&Polynomial::var(5, 0) * &Polynomial::var(5, 0)), &xi, &xs, opts)
        .unwrap();
    assert_eq!(r.verdict, CouplingVerdict::PreconditionFailed);
    assert!(coupling_report(&flat, CouplingKind::Wedge { k: 1, k2: 0 }, &a, &xi, &xs, opts).is_err());
    assert!(CouplingKind::Wedge { k: 2, k2: 2 }.validate(5).is_err());
    assert!(CouplingKind::Contract { k: 2, k2: 1 }.validate(5).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn coupled_outputs_match_the_tractor_product(seed in any::<u64>(), which in 0usize..4) {
        // Random inputs on a random metric: the formula equals c · Π₀ of the
        // tractor product whether or not the inputs are solutions.
        let s = sig(2, 3);
        let m = MetricSpec::random_quartic(s, seed, 0.2);
        let xs = m.sample_points(1, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kind = [
            CouplingKind::Wedge { k: 1, k2: 1 },
            CouplingKind::Contract { k: 0, k2: 2 },
            CouplingKind::SpinorPair { k: 2 },
            CouplingKind::FormSpinor { k: 2 },
        ][which];
        let (ka, kb) = kind.input_kinds();
        let a = random::field(&mut rng, ka, 5, 4);
        let b = random::field(&mut rng, kb, 5, 4);
        let r = coupling_report(&m, kind, &a, &b, &xs, EvalOptions { order: 4, tolerance: 1e-8 }).unwrap();
        prop_assert!(r.tractor_pass, "{:?}", r.tractor_residual);
    }
}
