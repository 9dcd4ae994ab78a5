//! Canonical solution families of the flat model, built from parallel
//! tractors, and their transports to conformally related metrics.

use crate::clifford::SpinStructure;
use crate::error::Result;
use crate::field::{BggKind, PolyField};
use crate::geometry::Signature;
use crate::poly::{Polynomial, ScalarExpr};
use crate::skew::subsets;

/// Slots `(ρ, μ_a, σ)` of the parallel standard tractor that equals the
/// basis vector `label` at the origin (`0 = ρ`, `a + 1 = μ_a`, `n + 1 = σ`).
pub fn parallel_standard(sig: Signature, label: usize) -> (Polynomial, Vec<Polynomial>, Polynomial) {
    let n = sig.n();
    let zero = Polynomial::zero;
    if label == 0 {
        let mut sq = Polynomial::zero();
        for a in 0..n {
            let mut e = vec![0; n];
            e[a] = 2;
            sq.add_term(e, -0.5 * sig.eta(a));
        }
        let mu = (0..n).map(|a| Polynomial::var(n, a).scale(-sig.eta(a))).collect();
        (Polynomial::constant(n, 1.0), mu, sq)
    } else if label == n + 1 {
        (zero(), vec![zero(); n], Polynomial::constant(n, 1.0))
    } else {
        let b = label - 1;
        let mu = (0..n).map(|a| if a == b { Polynomial::constant(n, 1.0) } else { zero() }).collect();
        (zero(), mu, Polynomial::var(n, b))
    }
}

fn det(m: &[Vec<Polynomial>]) -> Polynomial {
    match m.len() {
        0 => Polynomial::monomial(Vec::new(), 1.0),
        1 => m[0][0].clone(),
        len => {
            let mut acc = Polynomial::zero();
            for j in 0..len {
                if m[0][j].is_zero() {
                    continue;
                }
                let minor: Vec<Vec<Polynomial>> = m[1..]
                    .iter()
                    .map(|row| row.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, p)| p.clone()).collect())
                    .collect();
                let t = &m[0][j] * &det(&minor);
                acc = if j % 2 == 0 { &acc + &t } else { &acc - &t };
            }
            acc
        }
    }
}

/// Bottom slots of `t_{s_0} ∧ .. ∧ t_{s_k}` over all sorted label sets: a
/// basis of the `k`-form solutions (almost Einstein scales for `k = 0`),
/// of dimension `C(n+2, k+1)`.
pub fn flat_forms(sig: Signature, k: usize) -> Vec<PolyField> {
    let n = sig.n();
    let kind = if k == 0 { BggKind::AlmostEinsteinScale } else { BggKind::ConformalKillingForm { k } };
    let tractors: Vec<_> = (0..n + 2).map(|l| parallel_standard(sig, l)).collect();
    let outer = subsets(n + 2, k + 1);
    let inner = subsets(n, k);
    (0..outer.len())
        .map(|s| {
            let rows = outer.labels(s);
            let comps = (0..inner.len())
                .map(|i| {
                    let cols = inner.labels(i);
                    let m: Vec<Vec<Polynomial>> = rows
                        .iter()
                        .map(|&r| {
                            let (_, mu, sigma) = &tractors[r];
                            let mut row = vec![sigma.clone()];
                            row.extend(cols.iter().map(|&a| mu[a].clone()));
                            row
                        })
                        .collect();
                    det(&m)
                })
                .collect();
            PolyField::from_polys(kind, comps)
        })
        .collect()
}

/// `χ_0` and `x^a γ_a χ_1` over basis spinors: `2 dim Δ` twistor spinors.
pub fn flat_twistors(sig: Signature) -> Result<Vec<PolyField>> {
    let st = SpinStructure::shared(sig)?;
    let n = sig.n();
    let d = st.dim;
    let mut out = Vec::with_capacity(2 * d);
    for i in 0..d {
        let comps = (0..d).map(|j| Polynomial::constant(n, if i == j { 1.0 } else { 0.0 })).collect();
        out.push(PolyField::from_polys(BggKind::TwistorSpinor, comps));
    }
    for i in 0..d {
        let comps = (0..d)
            .map(|j| {
                let mut p = Polynomial::zero();
                for a in 0..n {
                    let c = st.gammas[a][(j, i)];
                    if c != 0.0 {
                        p = &p + &Polynomial::var(n, a).scale(c);
                    }
                }
                p
            })
            .collect();
        out.push(PolyField::from_polys(BggKind::TwistorSpinor, comps));
    }
    Ok(out)
}

/// `(1 + |x|²)^w` for the round sphere in stereographic coordinates.
fn sphere_denominator(n: usize, w: u32) -> Polynomial {
    let mut base = Polynomial::constant(n, 1.0);
    for a in 0..n {
        let mut e = vec![0; n];
        e[a] = 2;
        base.add_term(e, 1.0);
    }
    let mut acc = Polynomial::constant(n, 1.0);
    for _ in 0..w {
        acc = &acc * &base;
    }
    acc
}

/// A flat form solution transported to the round sphere metric
/// `4(1+|x|²)^{-2} δ`, whose conformal factor is `2/(1+|x|²)`.
pub fn to_sphere(field: &PolyField) -> PolyField {
    let n = match field.components.iter().find_map(|c| match c {
        ScalarExpr::Poly(p) => p.dim(),
        ScalarExpr::Ratio { num, .. } => num.dim(),
    }) {
        Some(n) => n,
        None => return field.clone(),
    };
    let w = field.kind.weight() as u32;
    let den = sphere_denominator(n, w);
    let f = 2f64.powi(w as i32);
    let components = field
        .components
        .iter()
        .map(|c| match c {
            ScalarExpr::Poly(p) => ScalarExpr::Ratio { num: p.scale(f), den: den.clone() },
            ScalarExpr::Ratio { num, den: d } => ScalarExpr::Ratio { num: num.scale(f), den: d * &den },
        })
        .collect();
    PolyField { components, ..field.clone() }
}
