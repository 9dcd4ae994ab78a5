//! Sparse multivariate polynomials and rational expressions.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::{binomial, Jet};

/// Sparse polynomial `Σ c_α x^α`. Serialized as a list of `[coef, [α...]]`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<(f64, Vec<u32>)>", into = "Vec<(f64, Vec<u32>)>")]
pub struct Polynomial {
    terms: BTreeMap<Vec<u32>, f64>,
}

impl From<Vec<(f64, Vec<u32>)>> for Polynomial {
    fn from(v: Vec<(f64, Vec<u32>)>) -> Self {
        let mut p = Polynomial::default();
        for (c, e) in v {
            p.add_term(e, c);
        }
        p
    }
}

impl From<Polynomial> for Vec<(f64, Vec<u32>)> {
    fn from(p: Polynomial) -> Self {
        p.terms.into_iter().map(|(e, c)| (c, e)).collect()
    }
}

impl Polynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(n: usize, c: f64) -> Self {
        let mut p = Self::zero();
        p.add_term(vec![0; n], c);
        p
    }

    /// The coordinate function `x_i` in `n` variables.
    pub fn var(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        let mut p = Self::zero();
        p.add_term(e, 1.0);
        p
    }

    pub fn monomial(exps: Vec<u32>, c: f64) -> Self {
        let mut p = Self::zero();
        p.add_term(exps, c);
        p
    }

    pub fn add_term(&mut self, exps: Vec<u32>, c: f64) {
        if c == 0.0 {
            return;
        }
        let v = self.terms.get(&exps).copied().unwrap_or(0.0) + c;
        if v == 0.0 {
            self.terms.remove(&exps);
        } else {
            self.terms.insert(exps, v);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, f64)> {
        self.terms.iter().map(|(e, c)| (e, *c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(|e| e.iter().map(|&k| k as usize).sum()).max().unwrap_or(0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Number of variables, if any term fixes it.
    pub fn dim(&self) -> Option<usize> {
        self.terms.keys().next().map(Vec::len)
    }

    pub fn check_dim(&self, n: usize) -> Result<()> {
        for e in self.terms.keys() {
            if e.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: e.len() });
            }
        }
        Ok(())
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        let mut p = Polynomial::zero();
        for (e, c) in &self.terms {
            p.add_term(e.clone(), c * s);
        }
        p
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * e.iter().zip(x).map(|(&k, &xi)| xi.powi(k as i32)).product::<f64>())
            .sum()
    }

    pub fn partial(&self, d: usize) -> Polynomial {
        let mut p = Polynomial::zero();
        for (e, c) in &self.terms {
            if e[d] > 0 {
                let mut f = e.clone();
                f[d] -= 1;
                p.add_term(f, c * e[d] as f64);
            }
        }
        p
    }

    /// Taylor jet at `x0`, exact up to `order`.
    pub fn jet_at(&self, x0: &[f64], order: usize) -> Result<Jet> {
        let n = x0.len();
        self.check_dim(n)?;
        if x0.iter().any(|v| !v.is_finite()) || self.terms.values().any(|c| !c.is_finite()) {
            return Err(Error::Shape("non-finite polynomial coefficient or point".into()));
        }
        let lay = crate::jet::layout(n, order);
        let mut coeffs = vec![0.0; lay.len()];
        for (slot, alpha) in lay.exponents().iter().enumerate() {
            let mut acc = 0.0;
            for (beta, c) in &self.terms {
                let mut t = *c;
                for i in 0..n {
                    let (a, b) = (alpha.0[i], beta[i]);
                    if a > b {
                        t = 0.0;
                        break;
                    }
                    t *= binomial(b as usize, a as usize) as f64 * x0[i].powi((b - a) as i32);
                }
                acc += t;
            }
            coeffs[slot] = acc;
        }
        Jet::from_coeffs(n, order, coeffs)
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let mut p = self.clone();
        for (e, c) in &rhs.terms {
            p.add_term(e.clone(), *c);
        }
        p
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &rhs.scale(-1.0)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut p = Polynomial::zero();
        for (a, ca) in &self.terms {
            for (b, cb) in &rhs.terms {
                let e = a.iter().zip(b).map(|(x, y)| x + y).collect();
                p.add_term(e, ca * cb);
            }
        }
        p
    }
}

macro_rules! owned_poly_op {
    ($tr:ident, $m:ident) => {
        impl $tr for Polynomial {
            type Output = Polynomial;
            fn $m(self, rhs: Polynomial) -> Polynomial {
                (&self).$m(&rhs)
            }
        }
    };
}
owned_poly_op!(Add, add);
owned_poly_op!(Sub, sub);
owned_poly_op!(Mul, mul);

/// A polynomial or a quotient of polynomials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarExpr {
    Poly(Polynomial),
    Ratio { num: Polynomial, den: Polynomial },
}

impl Default for ScalarExpr {
    fn default() -> Self {
        ScalarExpr::Poly(Polynomial::zero())
    }
}

impl From<Polynomial> for ScalarExpr {
    fn from(p: Polynomial) -> Self {
        ScalarExpr::Poly(p)
    }
}

impl ScalarExpr {
    pub fn jet_at(&self, x0: &[f64], order: usize) -> Result<Jet> {
        match self {
            ScalarExpr::Poly(p) => p.jet_at(x0, order),
            ScalarExpr::Ratio { num, den } => {
                let d = den.jet_at(x0, order)?;
                Ok(num.jet_at(x0, order)? * d.try_reciprocal()?)
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            ScalarExpr::Poly(p) => p.eval(x),
            ScalarExpr::Ratio { num, den } => num.eval(x) / den.eval(x),
        }
    }

    pub fn check_dim(&self, n: usize) -> Result<()> {
        match self {
            ScalarExpr::Poly(p) => p.check_dim(n),
            ScalarExpr::Ratio { num, den } => {
                num.check_dim(n)?;
                den.check_dim(n)
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            ScalarExpr::Poly(p) => p.is_zero(),
            ScalarExpr::Ratio { num, .. } => num.is_zero(),
        }
    }

    pub fn scale(&self, s: f64) -> ScalarExpr {
        match self {
            ScalarExpr::Poly(p) => ScalarExpr::Poly(p.scale(s)),
            ScalarExpr::Ratio { num, den } => ScalarExpr::Ratio { num: num.scale(s), den: den.clone() },
        }
    }

    fn parts(&self) -> (Polynomial, Option<&Polynomial>) {
        match self {
            ScalarExpr::Poly(p) => (p.clone(), None),
            ScalarExpr::Ratio { num, den } => (num.clone(), Some(den)),
        }
    }

    pub fn add(&self, other: &ScalarExpr) -> ScalarExpr {
        match (self.parts(), other.parts()) {
            ((a, None), (b, None)) => ScalarExpr::Poly(&a + &b),
            ((a, Some(d)), (b, Some(e))) if d == e => ScalarExpr::Ratio { num: &a + &b, den: d.clone() },
            ((a, d), (b, e)) => {
                let one = Polynomial::monomial(Vec::new(), 1.0);
                let d = d.cloned().unwrap_or_else(|| one.clone());
                let e = e.cloned().unwrap_or(one);
                ScalarExpr::Ratio { num: &(&a * &e) + &(&b * &d), den: &d * &e }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::MultiIndex;

    #[test]
    fn x1_squared_at_one_zero() {
        let p = Polynomial::monomial(vec![2, 0], 1.0);
        let j = p.jet_at(&[1.0, 0.0], 2).unwrap();
        assert_eq!(j.value(), 1.0);
        assert_eq!(j.coeff(&MultiIndex(vec![1, 0])), 2.0);
        assert_eq!(j.coeff(&MultiIndex(vec![2, 0])), 1.0);
        assert_eq!(j.coeff(&MultiIndex(vec![0, 1])), 0.0);
        assert_eq!(j.coeff(&MultiIndex(vec![1, 1])), 0.0);
        assert_eq!(j.coeff(&MultiIndex(vec![0, 2])), 0.0);
    }

    #[test]
    fn mixed_term_truncated_at_order_one() {
        let p = Polynomial::monomial(vec![1, 1], 1.0);
        let j = p.jet_at(&[0.0, 0.0], 1).unwrap();
        assert!(j.coeffs().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let p = Polynomial::monomial(vec![1, 1], 1.0);
        assert!(p.jet_at(&[0.0, 0.0, 0.0], 2).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let p = &Polynomial::monomial(vec![1, 0], 2.5) + &Polynomial::constant(2, -1.0);
        let s = serde_json::to_string(&p).unwrap();
        let q: Polynomial = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
        let r = ScalarExpr::Ratio { num: p.clone(), den: Polynomial::constant(2, 3.0) };
        let back: ScalarExpr = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(r, back);
    }
}
