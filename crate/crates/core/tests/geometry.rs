use bggcheck_core::geometry::{covariant_derivative, IndexPos, MetricSpec, PointGeometry, Signature, TensorJet};
use bggcheck_core::jet::Jet;
use bggcheck_core::Polynomial;
use nalgebra::DMatrix;

fn sig(p: usize, q: usize) -> Signature {
    Signature::for_metric(p, q).unwrap()
}

/// Christoffel symbols `Γ^c_ab` by central differences of the metric.
fn fd_christoffel(m: &MetricSpec, x: &[f64]) -> Vec<DMatrix<f64>> {
    let n = m.n();
    let h = 1e-5;
    let dg: Vec<DMatrix<f64>> = (0..n)
        .map(|a| {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[a] += h;
            xm[a] -= h;
            (m.eval(&xp) - m.eval(&xm)) / (2.0 * h)
        })
        .collect();
    let ginv = m.eval(x).try_inverse().unwrap();
    (0..n)
        .map(|c| {
            DMatrix::from_fn(n, n, |a, b| {
                (0..n).map(|d| 0.5 * ginv[(c, d)] * (dg[a][(b, d)] + dg[b][(a, d)] - dg[d][(a, b)])).sum()
            })
        })
        .collect()
}

/// `R^c_{dab} = ∂_a Γ^c_bd - ∂_b Γ^c_ad + Γ^c_ae Γ^e_bd - Γ^c_be Γ^e_ad` with
/// the derivatives of the Christoffel symbols again by central differences.
fn fd_riemann(m: &MetricSpec, x: &[f64], a: usize, b: usize, c: usize, d: usize) -> f64 {
    let n = m.n();
    let h = 1e-3;
    let shifted = |dir: usize, s: f64| {
        let mut y = x.to_vec();
        y[dir] += s;
        fd_christoffel(m, &y)
    };
    let (ap, am) = (shifted(a, h), shifted(a, -h));
    let (bp, bm) = (shifted(b, h), shifted(b, -h));
    let g = fd_christoffel(m, x);
    let mut r = (ap[c][(b, d)] - am[c][(b, d)]) / (2.0 * h) - (bp[c][(a, d)] - bm[c][(a, d)]) / (2.0 * h);
    for e in 0..n {
        r += g[c][(a, e)] * g[e][(b, d)] - g[c][(b, e)] * g[e][(a, d)];
    }
    r
}

#[test]
fn flat_metric_has_identity_frame_and_no_curvature() {
    let m = MetricSpec::flat(sig(2, 3));
    let geo = PointGeometry::new(&m, &[0.1, -0.2, 0.0, 0.3, 0.05], 4).unwrap();
    let c = &geo.curvature;
    let max = |t: &[Vec<Jet>]| t.iter().flatten().fold(0.0_f64, |s, j| s.max(j.max_abs()));
    assert_eq!(max(&c.schouten), 0.0);
    assert_eq!(c.j.max_abs(), 0.0);
    for a in 0..5 {
        assert_eq!(max(&c.christoffel[a]), 0.0);
        assert_eq!(max(&c.cotton[a]), 0.0);
        for b in 0..5 {
            assert_eq!(max(&c.riemann[a][b]), 0.0);
            assert_eq!(max(&c.weyl[a][b]), 0.0);
        }
    }
    for i in 0..5 {
        for a in 0..5 {
            assert_eq!(geo.frame.e[i][a].value(), if i == a { 1.0 } else { 0.0 });
        }
        assert_eq!(max(&geo.frame.omega[i]), 0.0);
    }
}

#[test]
fn sphere_is_einstein_and_matches_finite_differences() {
    let m = MetricSpec::sphere(4).unwrap();
    for x in m.sample_points(3, 11) {
        let geo = PointGeometry::new(&m, &x, 4).unwrap();
        let c = &geo.curvature;
        for a in 0..4 {
            for b in 0..4 {
                let g = geo.g[a][b].value();
                assert!((c.ricci[a][b].value() - 3.0 * g).abs() < 1e-12);
                assert!((c.schouten[a][b].value() - 0.5 * g).abs() < 1e-12);
                for cc in 0..4 {
                    for d in 0..4 {
                        assert!(c.weyl[a][b][cc][d].value().abs() < 1e-12);
                    }
                }
            }
        }
        assert!((c.j.value() - 2.0).abs() < 1e-12);
        for (a, b, cc, d) in [(0, 1, 0, 1), (0, 1, 1, 0), (1, 2, 1, 2), (0, 3, 3, 0), (2, 3, 2, 3), (0, 1, 2, 3)] {
            let fd = fd_riemann(&m, &x, a, b, cc, d);
            assert!((c.riemann[a][b][cc][d].value() - fd).abs() < 1e-5, "R_{a}{b}^{cc}_{d}: {fd}");
        }
    }
}

/// `P̂ = P - DDf + Df Df - ½|Df|² g` for `ĝ = e^{2f} g`.
fn schouten_oracle(eta: &[f64], df: &[f64], ddf: &DMatrix<f64>) -> DMatrix<f64> {
    let n = eta.len();
    let norm: f64 = (0..n).map(|a| eta[a] * df[a] * df[a]).sum();
    DMatrix::from_fn(n, n, |a, b| -ddf[(a, b)] + df[a] * df[b] - if a == b { 0.5 * norm * eta[a] } else { 0.0 })
}

#[test]
fn exponential_rescaling_of_euclidean_space() {
    let m = MetricSpec::conformally_flat(sig(5, 0), Polynomial::var(5, 0));
    let geo = PointGeometry::new(&m, &[0.0; 5], 4).unwrap();
    for a in 0..5 {
        for b in 0..5 {
            let want = match (a, b) {
                (0, 0) => 0.5,
                _ if a == b => -0.5,
                _ => 0.0,
            };
            assert!((geo.curvature.schouten[a][b].value() - want).abs() < 1e-14);
        }
    }
}

#[test]
fn schouten_transformation_law_in_split_signature() {
    // f = 0.3 x1 - 0.2 x2 x3 on flat (2,3)
    let s = sig(2, 3);
    let mut f = Polynomial::var(5, 0).scale(0.3);
    f.add_term(vec![0, 1, 1, 0, 0], -0.2);
    let m = MetricSpec::conformally_flat(s, f.clone());
    let eta: Vec<f64> = (0..5).map(|i| s.eta(i)).collect();
    for x in m.sample_points(4, 3) {
        let geo = PointGeometry::new(&m, &x, 4).unwrap();
        let df: Vec<f64> = (0..5).map(|a| f.partial(a).eval(&x)).collect();
        let ddf = DMatrix::from_fn(5, 5, |a, b| f.partial(a).partial(b).eval(&x));
        let want = schouten_oracle(&eta, &df, &ddf);
        for a in 0..5 {
            for b in 0..5 {
                assert!((geo.curvature.schouten[a][b].value() - want[(a, b)]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn rescale_by_zero_is_identity() {
    let m = MetricSpec::random_quartic(sig(3, 3), 5, 0.2);
    assert_eq!(m.conformal_rescale(&Polynomial::zero()), m);
}

#[test]
fn weyl_tensor_is_conformally_invariant() {
    let m = MetricSpec::random_quartic(sig(2, 3), 77, 0.2);
    let mut f = Polynomial::var(5, 2).scale(0.4);
    f.add_term(vec![1, 0, 0, 1, 0], 0.3);
    f.add_term(vec![0, 0, 0, 0, 2], -0.25);
    let mh = m.conformal_rescale(&f);
    for x in m.sample_points(3, 9) {
        let g = PointGeometry::new(&m, &x, 4).unwrap();
        let gh = PointGeometry::new(&mh, &x, 4).unwrap();
        let mut worst: f64 = 0.0;
        let mut size: f64 = 0.0;
        for a in 0..5 {
            for b in 0..5 {
                for c in 0..5 {
                    for d in 0..5 {
                        let w = g.curvature.weyl[a][b][c][d].value();
                        worst = worst.max((gh.curvature.weyl[a][b][c][d].value() - w).abs());
                        size = size.max(w.abs());
                    }
                }
            }
        }
        assert!(size > 1e-2);
        assert!(worst < 1e-11, "{worst}");
    }
}

#[test]
fn covariant_derivative_examples() {
    let flat = MetricSpec::flat(sig(2, 3));
    let x0 = [0.2, -0.1, 0.3, 0.0, 0.1];
    let geo = PointGeometry::new(&flat, &x0, 4).unwrap();
    // f = x1 dx2
    let mut comps = vec![Jet::zero(5, 4); 5];
    comps[1] = Polynomial::var(5, 0).jet_at(&x0, 4).unwrap();
    let t = TensorJet::new(5, vec![IndexPos::Lower], comps).unwrap();
    let d = covariant_derivative(&geo, &t).unwrap();
    for a in 0..5 {
        for b in 0..5 {
            assert_eq!(d.get(&[a, b]).value(), if (a, b) == (0, 1) { 1.0 } else { 0.0 });
        }
    }

    // D g = 0 on a curved metric.
    let m = MetricSpec::random_quartic(sig(3, 3), 4, 0.2);
    let x = m.sample_points(1, 2).remove(0);
    let geo = PointGeometry::new(&m, &x, 4).unwrap();
    let g = TensorJet::new(6, vec![IndexPos::Lower; 2], geo.g.iter().flatten().cloned().collect()).unwrap();
    let dg = covariant_derivative(&geo, &g).unwrap();
    assert!(dg.comps.iter().all(|j| j.max_abs() < 1e-12));
}

#[test]
fn covariant_derivative_of_a_coordinate_differential_on_the_sphere() {
    // D_a (dx1)_b = -Γ^1_ab, against finite-difference Christoffel symbols.
    let m = MetricSpec::sphere(4).unwrap();
    for x in m.sample_points(5, 21) {
        let geo = PointGeometry::new(&m, &x, 4).unwrap();
        let mut comps = vec![Jet::zero(4, 4); 4];
        comps[0] = Jet::constant(4, 4, 1.0);
        let d = covariant_derivative(&geo, &TensorJet::new(4, vec![IndexPos::Lower], comps).unwrap()).unwrap();
        let fd = fd_christoffel(&m, &x);
        for a in 0..4 {
            for b in 0..4 {
                let err = (d.get(&[a, b]).value() + fd[0][(a, b)]).abs();
                assert!(err < 1e-8, "{err}");
            }
        }
    }
}

#[test]
fn frame_is_orthonormal_on_a_curved_metric() {
    let s = sig(3, 4);
    let m = MetricSpec::random_quartic(s, 12, 0.2);
    let x = m.sample_points(1, 1).remove(0);
    let geo = PointGeometry::new(&m, &x, 4).unwrap();
    let e = &geo.frame.e;
    for i in 0..7 {
        for j in 0..7 {
            let mut v = 0.0;
            for a in 0..7 {
                for b in 0..7 {
                    v += e[i][a].value() * e[j][b].value() * geo.g[a][b].value();
                }
            }
            let want = if i == j { s.eta(i) } else { 0.0 };
            assert!((v - want).abs() < 1e-12);
        }
    }
    for a in 0..7 {
        for j in 0..7 {
            for k in 0..7 {
                let w = &geo.frame.omega[a];
                assert!((w[j][k].value() + w[k][j].value()).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn wrong_signature_and_low_order_are_rejected() {
    let m = MetricSpec::flat(sig(2, 3));
    let mut wrong = m.clone();
    wrong.signature = sig(3, 2);
    assert!(PointGeometry::new(&wrong, &[0.0; 5], 4).is_err());
    assert!(PointGeometry::new(&m, &[0.0; 5], 2).is_err());
    assert!(Signature::for_metric(1, 1).is_err());
}
