use bggcheck_core::jet::{layout, Jet};
use bggcheck_core::{MultiIndex, Polynomial};
use proptest::prelude::*;

fn mi(e: &[u32]) -> MultiIndex {
    MultiIndex(e.to_vec())
}

fn x(n: usize, i: usize) -> Polynomial {
    Polynomial::var(n, i)
}

#[test]
fn constant_polynomial_has_only_a_value() {
    let j = Polynomial::constant(2, 1.0).jet_at(&[0.0, 0.0], 2).unwrap();
    assert_eq!(j.value(), 1.0);
    assert!(j.coeffs()[1..].iter().all(|&c| c == 0.0));
}

#[test]
fn x1_squared_at_one_zero_by_finite_differences() {
    let p = &x(2, 0) * &x(2, 0);
    let j = p.jet_at(&[1.0, 0.0], 2).unwrap();
    // Central differences as an independent oracle.
    let h = 1e-3;
    let f = |t: f64| p.eval(&[1.0 + t, 0.0]);
    let d1 = (f(h) - f(-h)) / (2.0 * h);
    let d2 = (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h);
    assert!((j.coeff(&mi(&[1, 0])) - d1).abs() < 1e-9);
    assert!((j.coeff(&mi(&[2, 0])) - d2 / 2.0).abs() < 1e-6);
    assert_eq!(j.value(), 1.0);
    assert_eq!(j.coeff(&mi(&[1, 0])), 2.0);
    assert_eq!(j.coeff(&mi(&[2, 0])), 1.0);
    assert_eq!(j.coeff(&mi(&[0, 1])), 0.0);
    assert_eq!(j.coeff(&mi(&[1, 1])), 0.0);
    assert_eq!(j.coeff(&mi(&[0, 2])), 0.0);
}

#[test]
fn arithmetic_examples() {
    let a = Jet::variable(1, 2, 0, 0.0);
    assert_eq!((&a * &a).coeffs(), &[0.0, 0.0, 1.0]);
    let one_plus = Jet::variable(1, 1, 0, 0.0).add_const(1.0);
    let one_minus = (-Jet::variable(1, 1, 0, 0.0)).add_const(1.0);
    assert_eq!((&one_plus * &one_minus).coeffs(), &[1.0, 0.0]);
}

#[test]
fn partial_examples() {
    let p = &x(1, 0) * &x(1, 0);
    let d = p.jet_at(&[0.0], 3).unwrap().partial(0);
    assert_eq!(d.order(), 2);
    assert_eq!(d.coeffs(), &[0.0, 2.0, 0.0]);

    let c = Jet::constant(3, 4, 7.5).partial(1);
    assert_eq!(c.max_abs(), 0.0);

    let m = (&x(2, 0) * &x(2, 1)).jet_at(&[0.0, 0.0], 2).unwrap().partial(1);
    assert_eq!(m.order(), 1);
    assert_eq!(m.coeff(&mi(&[1, 0])), 1.0);
    assert_eq!(m.value(), 0.0);
    assert_eq!(m.coeff(&mi(&[0, 1])), 0.0);
}

#[test]
fn partial_errors() {
    assert!(Jet::constant(2, 0, 1.0).try_partial(0).is_err());
    assert!(Jet::constant(2, 2, 1.0).try_partial(2).is_err());
}

#[test]
fn reciprocal_examples() {
    assert_eq!(Jet::constant(2, 3, 1.0).reciprocal().value(), 1.0);
    assert_eq!(Jet::constant(2, 3, 2.0).reciprocal().value(), 0.5);
    let r = Jet::variable(1, 2, 0, 0.0).add_const(1.0).reciprocal();
    assert_eq!(r.coeffs(), &[1.0, -1.0, 1.0]);
    assert!(Jet::zero(2, 2).try_reciprocal().is_err());
}

#[test]
fn mismatched_dimensions_rejected() {
    let a = Jet::constant(2, 2, 1.0);
    let b = Jet::constant(3, 2, 1.0);
    assert!(a.checked_add(&b).is_err());
    assert!(a.checked_mul(&b).is_err());
    assert!(x(2, 0).jet_at(&[0.0, 0.0, 0.0], 2).is_err());
}

fn poly_strategy(n: usize, max_deg: u32) -> impl Strategy<Value = Polynomial> {
    prop::collection::vec((prop::collection::vec(0..=max_deg, n), -2.0..2.0f64), 1..5).prop_map(move |terms| {
        let mut p = Polynomial::zero();
        for (mut e, c) in terms {
            // Keep total degree at most max_deg.
            while e.iter().sum::<u32>() > max_deg {
                let i = e.iter().position(|&v| v > 0).unwrap();
                e[i] -= 1;
            }
            p.add_term(e, c);
        }
        if p.is_zero() {
            p = Polynomial::constant(n, 1.0);
        }
        p
    })
}

fn point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, n)
}

fn close(a: &Jet, b: &Jet, tol: f64) -> bool {
    a.coeffs().iter().zip(b.coeffs()).all(|(u, v)| (u - v).abs() <= tol * (1.0 + v.abs()))
}

fn random_jet(n: usize, order: usize) -> impl Strategy<Value = Jet> {
    let len = layout(n, order).len();
    prop::collection::vec(-1.0..1.0f64, len).prop_map(move |c| Jet::from_coeffs(n, order, c).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn ring_ops_match_polynomial_oracle(p in poly_strategy(3, 2), q in poly_strategy(3, 2), x0 in point(3)) {
        let jp = p.jet_at(&x0, 4).unwrap();
        let jq = q.jet_at(&x0, 4).unwrap();
        prop_assert!(close(&(&jp * &jq), &(&p * &q).jet_at(&x0, 4).unwrap(), 1e-12));
        prop_assert!(close(&(&jp + &jq), &(&p + &q).jet_at(&x0, 4).unwrap(), 1e-12));
        prop_assert!(close(&(&jp - &jq), &(&p - &q).jet_at(&x0, 4).unwrap(), 1e-12));
    }

    #[test]
    fn partial_matches_polynomial_derivative(p in poly_strategy(3, 4), x0 in point(3), d in 0usize..3) {
        let j = p.jet_at(&x0, 4).unwrap().partial(d);
        prop_assert!(close(&j, &p.partial(d).jet_at(&x0, 3).unwrap(), 1e-12));
    }

    #[test]
    fn partials_commute(j in random_jet(3, 4), a in 0usize..3, b in 0usize..3) {
        prop_assert!(close(&j.partial(a).partial(b), &j.partial(b).partial(a), 0.0));
    }

    #[test]
    fn reciprocal_is_an_involution(mut j in random_jet(3, 4), c in 0.1..2.0f64, neg in any::<bool>()) {
        let c = if neg { -c } else { c };
        j = j.add_const(c - j.value());
        let rr = j.reciprocal().reciprocal();
        prop_assert!(close(&rr, &j, 1e-9));
        prop_assert!(close(&(&j * &j.reciprocal()), &Jet::constant(3, 4, 1.0), 1e-9));
    }

    #[test]
    fn exp_and_sqrt_are_consistent(j in random_jet(2, 4)) {
        let e = j.exp();
        prop_assert!(close(&(&e * &(-&j).exp()), &Jet::constant(2, 4, 1.0), 1e-10));
        let s = e.sqrt();
        prop_assert!(close(&(&s * &s), &e, 1e-10));
    }
}
