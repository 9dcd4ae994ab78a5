//! Seeded random data for structural checks: polynomials, candidate fields,
//! jets and tractor sections.

use rand::Rng;

use crate::field::{BggKind, PolyField};
use crate::jet::{layout, Jet};
use crate::point::Point;
use crate::poly::Polynomial;
use crate::skew::{subsets, Skew};
use crate::tractor::{SpinTractor, TractorSection};

/// Up to `terms` monomials of degree at most `degree`, coefficients in
/// `[-1, 1]`.
pub fn polynomial(rng: &mut impl Rng, n: usize, degree: u32, terms: usize) -> Polynomial {
    let mut p = Polynomial::zero();
    for _ in 0..terms {
        let deg = rng.gen_range(0..=degree);
        let mut e = vec![0u32; n];
        for _ in 0..deg {
            e[rng.gen_range(0..n)] += 1;
        }
        p.add_term(e, rng.gen_range(-1.0..1.0));
    }
    if p.is_zero() {
        p = Polynomial::constant(n, 1.0);
    }
    p
}

/// A cubic candidate field of the given kind, generally not a solution.
pub fn field(rng: &mut impl Rng, kind: BggKind, n: usize, spin_dim: usize) -> PolyField {
    let count = kind.component_count(n, spin_dim);
    let comps = (0..count).map(|_| polynomial(rng, n, 3, 4)).collect();
    PolyField::from_polys(kind, comps)
}

pub fn jet(rng: &mut impl Rng, n: usize, order: usize) -> Jet {
    let len = layout(n, order).len();
    let coeffs = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Jet::from_coeffs(n, order, coeffs).expect("coefficient count matches the layout")
}

pub fn skew(rng: &mut impl Rng, dim: usize, rank: usize, vars: usize, order: usize) -> Skew {
    let comps = (0..subsets(dim, rank).len()).map(|_| jet(rng, vars, order)).collect();
    Skew::from_comps(dim, rank, vars, order, comps)
}

/// A section of `Λ^rank T` at the point, with jets of the point's order.
pub fn form_tractor(rng: &mut impl Rng, pt: &Point, rank: usize) -> TractorSection {
    TractorSection::Form(skew(rng, pt.labels(), rank, pt.n(), pt.order()))
}

pub fn spin_tractor(rng: &mut impl Rng, pt: &Point, dim: usize) -> TractorSection {
    let (n, order) = (pt.n(), pt.order());
    TractorSection::Spin(SpinTractor {
        tau: (0..dim).map(|_| jet(rng, n, order)).collect(),
        chi: (0..dim).map(|_| jet(rng, n, order)).collect(),
    })
}

/// Constant 1-form with entries in `[-1, 1]`.
pub fn covector(rng: &mut impl Rng, pt: &Point) -> Vec<Jet> {
    (0..pt.n()).map(|_| Jet::constant(pt.n(), pt.order(), rng.gen_range(-1.0..1.0))).collect()
}
