//! Truncated multivariate Taylor expansions.
//!
//! A [`Jet`] of order `m` in `n` variables stores the Taylor coefficients
//! `c_α` with `|α| <= m` of a function around a base point, so that
//! `f(x0 + h) = Σ c_α h^α + O(|h|^{m+1})`. Storage is dense and graded:
//! all multi-indices of degree 0 come first, then degree 1, and so on.
//! Because of that ordering the layout for order `m - 1` is a prefix of the
//! layout for order `m`, which makes truncation free.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Default truncation order used by the verification pipeline.
pub const DEFAULT_ORDER: usize = 4;

/// Exponent vector of a monomial.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    pub fn unit(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        MultiIndex(e)
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `α!` as a float.
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&e| factorial(e as usize)).product()
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}

pub(crate) fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

pub(crate) fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: usize = 1;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

/// Index tables shared by all jets with the same `(dim, order)`.
pub struct JetLayout {
    dim: usize,
    order: usize,
    exps: Vec<MultiIndex>,
    lookup: HashMap<MultiIndex, usize>,
    // For each left index i, the (j, k) pairs with exps[i] + exps[j] = exps[k].
    mul_start: Vec<usize>,
    mul_pairs: Vec<(u32, u32)>,
    // For each direction d, (src, factor) so that ∂_d c[k] = factor * c[src],
    // k running over the order-1 prefix.
    partial: Vec<Vec<(u32, f64)>>,
}

impl fmt::Debug for JetLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JetLayout")
            .field("dim", &self.dim)
            .field("order", &self.order)
            .field("len", &self.exps.len())
            .finish()
    }
}

fn monomials_of_degree(n: usize, d: usize) -> Vec<Vec<u32>> {
    if n == 0 {
        return if d == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in (0..=d).rev() {
        for mut rest in monomials_of_degree(n - 1, d - first) {
            let mut e = Vec::with_capacity(n);
            e.push(first as u32);
            e.append(&mut rest);
            out.push(e);
        }
    }
    out
}

impl JetLayout {
    fn build(dim: usize, order: usize) -> Self {
        let mut exps = Vec::new();
        for d in 0..=order {
            exps.extend(monomials_of_degree(dim, d).into_iter().map(MultiIndex));
        }
        let lookup: HashMap<MultiIndex, usize> =
            exps.iter().cloned().enumerate().map(|(i, e)| (e, i)).collect();

        let mut mul_start = Vec::with_capacity(exps.len() + 1);
        let mut mul_pairs = Vec::new();
        for a in &exps {
            mul_start.push(mul_pairs.len());
            let da = a.degree();
            for (j, b) in exps.iter().enumerate() {
                if da + b.degree() > order {
                    break;
                }
                let s = MultiIndex(a.0.iter().zip(&b.0).map(|(x, y)| x + y).collect());
                mul_pairs.push((j as u32, lookup[&s] as u32));
            }
        }
        mul_start.push(mul_pairs.len());

        let lower = if order == 0 { 0 } else { binomial(dim + order - 1, order - 1) };
        let partial = (0..dim)
            .map(|d| {
                exps[..lower]
                    .iter()
                    .map(|a| {
                        let mut up = a.clone();
                        up.0[d] += 1;
                        (lookup[&up] as u32, (a.0[d] + 1) as f64)
                    })
                    .collect()
            })
            .collect();

        JetLayout { dim, order, exps, lookup, mul_start, mul_pairs, partial }
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn exponents(&self) -> &[MultiIndex] {
        &self.exps
    }

    pub fn index_of(&self, alpha: &MultiIndex) -> Option<usize> {
        self.lookup.get(alpha).copied()
    }

    /// Number of coefficients of total degree `<= m`.
    pub fn prefix_len(&self, m: usize) -> usize {
        binomial(self.dim + m, m)
    }
}

/// Shared, lazily built layout for `(dim, order)`.
pub fn layout(dim: usize, order: usize) -> Arc<JetLayout> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<JetLayout>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(l) = cache.lock().expect("layout cache poisoned").get(&(dim, order)) {
        return l.clone();
    }
    let built = Arc::new(JetLayout::build(dim, order));
    cache
        .lock()
        .expect("layout cache poisoned")
        .entry((dim, order))
        .or_insert(built)
        .clone()
}

/// Truncated Taylor expansion at a point.
#[derive(Clone)]
pub struct Jet {
    layout: Arc<JetLayout>,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Jet(n={}, m={}, {:?})", self.dim(), self.order(), self.coeffs)
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.dim() == other.dim() && self.order() == other.order() && self.coeffs == other.coeffs
    }
}

impl Jet {
    pub fn zero(dim: usize, order: usize) -> Self {
        let layout = layout(dim, order);
        let coeffs = vec![0.0; layout.len()];
        Jet { layout, coeffs }
    }

    pub fn constant(dim: usize, order: usize, c: f64) -> Self {
        let mut j = Self::zero(dim, order);
        j.coeffs[0] = c;
        j
    }

    /// The coordinate function `x_i` expanded at a point whose `i`-th
    /// coordinate is `at`.
    pub fn variable(dim: usize, order: usize, i: usize, at: f64) -> Self {
        let mut j = Self::constant(dim, order, at);
        if order >= 1 {
            j.coeffs[1 + i] = 1.0;
        }
        j
    }

    pub fn from_coeffs(dim: usize, order: usize, coeffs: Vec<f64>) -> Result<Self> {
        let layout = layout(dim, order);
        if coeffs.len() != layout.len() {
            return Err(Error::Shape(format!(
                "jet of dim {dim} order {order} needs {} coefficients, got {}",
                layout.len(),
                coeffs.len()
            )));
        }
        Ok(Jet { layout, coeffs })
    }

    fn with_layout(layout: Arc<JetLayout>, coeffs: Vec<f64>) -> Self {
        debug_assert_eq!(layout.len(), coeffs.len());
        Jet { layout, coeffs }
    }

    pub fn dim(&self) -> usize {
        self.layout.dim
    }

    pub fn order(&self) -> usize {
        self.layout.order
    }

    pub fn layout(&self) -> &Arc<JetLayout> {
        &self.layout
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Value at the base point.
    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> f64 {
        self.layout.index_of(alpha).map_or(0.0, |i| self.coeffs[i])
    }

    /// Partial derivative `∂^α f(x0)`.
    pub fn derivative(&self, alpha: &MultiIndex) -> f64 {
        self.coeff(alpha) * alpha.factorial()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.order() {
            return self.clone();
        }
        let layout = layout(self.dim(), order);
        let coeffs = self.coeffs[..layout.len()].to_vec();
        Jet::with_layout(layout, coeffs)
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet::with_layout(self.layout.clone(), self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn add_const(&self, c: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += c;
        out
    }

    /// `self += s * other`, truncating `self` if `other` has lower order.
    pub fn axpy(&mut self, s: f64, other: &Jet) {
        if other.order() < self.order() {
            *self = self.truncate(other.order());
        }
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += s * b;
        }
    }

    fn binary_lin(&self, other: &Jet, s: f64) -> Jet {
        debug_assert_eq!(self.dim(), other.dim(), "jet dimension mismatch");
        let lay = if self.order() <= other.order() { &self.layout } else { &other.layout };
        let len = lay.len();
        let mut coeffs = self.coeffs[..len].to_vec();
        for (a, b) in coeffs.iter_mut().zip(&other.coeffs[..len]) {
            *a += s * b;
        }
        Jet::with_layout(lay.clone(), coeffs)
    }

    fn product(&self, other: &Jet) -> Jet {
        debug_assert_eq!(self.dim(), other.dim(), "jet dimension mismatch");
        let lay = if self.order() <= other.order() { &self.layout } else { &other.layout };
        let mut out = vec![0.0; lay.len()];
        for (i, &a) in self.coeffs[..lay.len()].iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for &(j, k) in &lay.mul_pairs[lay.mul_start[i]..lay.mul_start[i + 1]] {
                out[k as usize] += a * other.coeffs[j as usize];
            }
        }
        Jet::with_layout(lay.clone(), out)
    }

    fn check_compatible(&self, other: &Jet) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        if self.order() != other.order() {
            return Err(Error::OrderMismatch { expected: self.order(), found: other.order() });
        }
        Ok(())
    }

    /// Addition requiring identical dimension and order.
    pub fn checked_add(&self, other: &Jet) -> Result<Jet> {
        self.check_compatible(other)?;
        Ok(self.binary_lin(other, 1.0))
    }

    pub fn checked_sub(&self, other: &Jet) -> Result<Jet> {
        self.check_compatible(other)?;
        Ok(self.binary_lin(other, -1.0))
    }

    pub fn checked_mul(&self, other: &Jet) -> Result<Jet> {
        self.check_compatible(other)?;
        Ok(self.product(other))
    }

    /// `∂f/∂x_d`, one order lower.
    pub fn try_partial(&self, d: usize) -> Result<Jet> {
        if d >= self.dim() {
            return Err(Error::Direction { direction: d, dim: self.dim() });
        }
        if self.order() == 0 {
            return Err(Error::OrderExhausted);
        }
        let table = &self.layout.partial[d];
        let coeffs = table.iter().map(|&(src, f)| f * self.coeffs[src as usize]).collect();
        Ok(Jet::with_layout(layout(self.dim(), self.order() - 1), coeffs))
    }

    /// Panicking form of [`Jet::try_partial`] for internal pipelines that
    /// have already checked their order budget.
    pub fn partial(&self, d: usize) -> Jet {
        self.try_partial(d).expect("jet order exhausted or bad direction")
    }

    /// Multiplicative inverse via the geometric series in the non-constant part.
    pub fn try_reciprocal(&self) -> Result<Jet> {
        let a0 = self.value();
        if a0 == 0.0 || !a0.is_finite() {
            return Err(Error::VanishingConstant);
        }
        // 1/(a0 (1 + u)) with u = (a - a0)/a0
        let mut u = self.scale(1.0 / a0);
        u.coeffs[0] = 0.0;
        let neg_u = -&u;
        Ok(series(&neg_u, &vec![1.0; self.order() + 1]).scale(1.0 / a0))
    }

    pub fn reciprocal(&self) -> Jet {
        self.try_reciprocal().expect("reciprocal of a jet with zero constant term")
    }

    pub fn exp(&self) -> Jet {
        let e0 = self.value().exp();
        let mut u = self.clone();
        u.coeffs[0] = 0.0;
        let c: Vec<f64> = (0..=self.order()).map(|k| 1.0 / factorial(k)).collect();
        series(&u, &c).scale(e0)
    }

    /// `a^r` for a jet with positive constant term.
    pub fn try_powf(&self, r: f64) -> Result<Jet> {
        let a0 = self.value();
        if !(a0 > 0.0) {
            return Err(Error::VanishingConstant);
        }
        let mut u = self.scale(1.0 / a0);
        u.coeffs[0] = 0.0;
        let mut c = Vec::with_capacity(self.order() + 1);
        let mut b = 1.0;
        for k in 0..=self.order() {
            c.push(b);
            b *= (r - k as f64) / (k as f64 + 1.0);
        }
        Ok(series(&u, &c).scale(a0.powf(r)))
    }

    pub fn sqrt(&self) -> Jet {
        self.try_powf(0.5).expect("square root of a jet with non-positive constant term")
    }
}

/// `Σ c_k u^k` for `u` with zero constant term (so `u^{m+1}` vanishes).
fn series(u: &Jet, c: &[f64]) -> Jet {
    // Horner: c0 + u (c1 + u (c2 + ...))
    let mut acc = Jet::constant(u.dim(), u.order(), c[c.len() - 1]);
    for &ck in c[..c.len() - 1].iter().rev() {
        acc = (u * &acc).add_const(ck);
    }
    acc
}

macro_rules! forward_binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl $tr<&Jet> for &Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet {
                let f: fn(&Jet, &Jet) -> Jet = $body;
                f(self, rhs)
            }
        }
        impl $tr<Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet {
                (&self).$m(rhs)
            }
        }
        impl $tr<Jet> for &Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                self.$m(&rhs)
            }
        }
    };
}

forward_binop!(Add, add, |a, b| a.binary_lin(b, 1.0));
forward_binop!(Sub, sub, |a, b| a.binary_lin(b, -1.0));
forward_binop!(Mul, mul, |a, b| a.product(b));

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, s: f64) -> Jet {
        self.scale(s)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, s: f64) -> Jet {
        self.scale(s)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, rhs: &Jet) {
        self.axpy(1.0, rhs);
    }
}

impl SubAssign<&Jet> for Jet {
    fn sub_assign(&mut self, rhs: &Jet) {
        self.axpy(-1.0, rhs);
    }
}

/// Minimum order over a collection of jets, or `None` when empty.
pub fn min_order<'a>(jets: impl IntoIterator<Item = &'a Jet>) -> Option<usize> {
    jets.into_iter().map(Jet::order).min()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_sizes_are_binomial() {
        for n in 1..6 {
            for m in 0..5 {
                assert_eq!(layout(n, m).len(), binomial(n + m, m));
            }
        }
    }

    #[test]
    fn lower_order_layout_is_a_prefix() {
        let hi = layout(3, 4);
        let lo = layout(3, 2);
        assert_eq!(&hi.exponents()[..lo.len()], lo.exponents());
    }

    #[test]
    fn reciprocal_of_one_plus_x() {
        let j = Jet::variable(1, 2, 0, 0.0).add_const(1.0);
        assert_eq!(j.reciprocal().coeffs(), &[1.0, -1.0, 1.0]);
    }

    #[test]
    fn exp_and_sqrt_series() {
        let x = Jet::variable(1, 4, 0, 0.0);
        let e = x.exp();
        for (k, c) in e.coeffs().iter().enumerate() {
            assert!((c - 1.0 / factorial(k)).abs() < 1e-15);
        }
        let s = (&x * &x).add_const(4.0).sqrt();
        let back = &s * &s;
        assert!((back.value() - 4.0).abs() < 1e-14);
        assert!((back.coeff(&MultiIndex(vec![2])) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn partial_of_order_zero_errors() {
        let c = Jet::constant(2, 0, 1.0);
        assert!(matches!(c.try_partial(0), Err(Error::OrderExhausted)));
        assert!(matches!(Jet::constant(2, 2, 1.0).try_partial(5), Err(Error::Direction { .. })));
    }

    #[test]
    fn mismatched_orders_rejected_by_checked_ops() {
        let a = Jet::constant(2, 2, 1.0);
        let b = Jet::constant(2, 3, 1.0);
        assert!(a.checked_mul(&b).is_err());
        assert!(a.checked_add(&Jet::constant(3, 2, 1.0)).is_err());
        assert_eq!((&a * &b).order(), 2);
    }
}
