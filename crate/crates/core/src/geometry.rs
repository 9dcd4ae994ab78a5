//! Metrics, curvature and orthonormal frames evaluated as jets at a point.
//!
//! Conventions:
//! * `Signature { p, q }` has `p` directions with `g(e,e) = +1` followed by
//!   `q` with `g(e,e) = -1`; frames are built in that order.
//! * `riemann[a][b][c][d]` is `R_ab{}^c{}_d`, the curvature of the
//!   Levi-Civita connection in the form `R_ab{}^c{}_d V^d = (D_a D_b - D_b D_a) V^c`.
//!   With this choice `Ric_bd = R_ab{}^a{}_d` is positive on round spheres.
//! * `P = (Ric - Sc/(2(n-1)) g)/(n-2)`, `J = g^{pq} P_pq`,
//!   `C_ab{}^c{}_d = R_ab{}^c{}_d - 2δ_[a{}^c P_b]d + 2 g_d[a P_b]{}^c`,
//!   `A_abc = D_b P_ca - D_c P_ba`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::poly::{Polynomial, ScalarExpr};

pub type JetVec = Vec<Jet>;
pub type JetMat = Vec<Vec<Jet>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct Signature {
    pub p: usize,
    pub q: usize,
}

impl From<[usize; 2]> for Signature {
    fn from(a: [usize; 2]) -> Self {
        Signature { p: a[0], q: a[1] }
    }
}

impl From<Signature> for [usize; 2] {
    fn from(s: Signature) -> Self {
        [s.p, s.q]
    }
}

impl std::fmt::Display for Signature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.p, self.q)
    }
}

impl Signature {
    /// Any nonempty signature. Clifford-only uses allow `n < 3`.
    pub fn new(p: usize, q: usize) -> Result<Self> {
        if p + q == 0 {
            return Err(Error::UnsupportedSignature { p, q });
        }
        Ok(Signature { p, q })
    }

    /// Signature of a metric handled by the curvature code, `n >= 3`.
    pub fn for_metric(p: usize, q: usize) -> Result<Self> {
        if p + q < 3 {
            return Err(Error::UnsupportedSignature { p, q });
        }
        Ok(Signature { p, q })
    }

    pub fn n(&self) -> usize {
        self.p + self.q
    }

    /// Diagonal entry of the model metric in direction `i`.
    pub fn eta(&self, i: usize) -> f64 {
        if i < self.p {
            1.0
        } else {
            -1.0
        }
    }

    /// `(-1)^p`.
    pub fn parity(&self) -> f64 {
        if self.p % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

fn zero_mat(n: usize, vars: usize, order: usize) -> JetMat {
    vec![vec![Jet::zero(vars, order); n]; n]
}

pub(crate) fn mat_mul(a: &JetMat, b: &JetMat) -> JetMat {
    let n = a.len();
    let m = b[0].len();
    let k = b.len();
    let order = a[0][0].order().min(b[0][0].order());
    let vars = a[0][0].dim();
    let mut out = vec![vec![Jet::zero(vars, order); m]; n];
    for i in 0..n {
        for j in 0..m {
            for l in 0..k {
                out[i][j] += &(&a[i][l] * &b[l][j]);
            }
        }
    }
    out
}

fn values(m: &JetMat) -> DMatrix<f64> {
    let n = m.len();
    DMatrix::from_fn(n, n, |i, j| m[i][j].value())
}

/// Inverse of a jet-valued matrix by Newton iteration `X <- X(2 - AX)`.
pub fn invert(a: &JetMat) -> Result<JetMat> {
    let n = a.len();
    let vars = a[0][0].dim();
    let order = a.iter().flatten().map(Jet::order).min().unwrap_or(0);
    let v0 = values(a)
        .try_inverse()
        .ok_or_else(|| Error::DegenerateMetric("matrix is singular at the base point".into()))?;
    let mut x: JetMat =
        (0..n).map(|i| (0..n).map(|j| Jet::constant(vars, order, v0[(i, j)])).collect()).collect();
    let mut correct = 1;
    while correct <= order {
        let ax = mat_mul(a, &x);
        let mut r = ax;
        for (i, row) in r.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = e.scale(-1.0).add_const(if i == j { 2.0 } else { 0.0 });
            }
        }
        x = mat_mul(&x, &r);
        correct *= 2;
    }
    Ok(x)
}

/// A metric `e^{2f} g0` with `g0` given by polynomial or rational entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSpec {
    pub name: String,
    pub signature: Signature,
    pub components: Vec<Vec<ScalarExpr>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conformal_factor: Option<Polynomial>,
    pub patch: Vec<[f64; 2]>,
}

fn default_patch(n: usize) -> Vec<[f64; 2]> {
    vec![[-0.5, 0.5]; n]
}

impl MetricSpec {
    pub fn flat(sig: Signature) -> Self {
        let n = sig.n();
        let components = (0..n)
            .map(|a| {
                (0..n)
                    .map(|b| {
                        if a == b {
                            Polynomial::constant(n, sig.eta(a)).into()
                        } else {
                            ScalarExpr::default()
                        }
                    })
                    .collect()
            })
            .collect();
        MetricSpec { name: format!("flat{}{}", sig.p, sig.q), signature: sig, components, conformal_factor: None, patch: default_patch(n) }
    }

    /// Round sphere through stereographic coordinates, `4(1+|x|²)^{-2} δ`.
    pub fn sphere(n: usize) -> Result<Self> {
        let sig = Signature::for_metric(n, 0)?;
        let mut r2 = Polynomial::constant(n, 1.0);
        for i in 0..n {
            let xi = Polynomial::var(n, i);
            r2 = &r2 + &(&xi * &xi);
        }
        let den = &r2 * &r2;
        let components = (0..n)
            .map(|a| {
                (0..n)
                    .map(|b| {
                        if a == b {
                            ScalarExpr::Ratio { num: Polynomial::constant(n, 4.0), den: den.clone() }
                        } else {
                            ScalarExpr::default()
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(MetricSpec { name: format!("sphere{n}"), signature: sig, components, conformal_factor: None, patch: default_patch(n) })
    }

    /// `e^{2f}` times the flat metric of the given signature.
    pub fn conformally_flat(sig: Signature, f: Polynomial) -> Self {
        let mut m = MetricSpec::flat(sig).conformal_rescale(&f);
        m.name = format!("cflat{}{}", sig.p, sig.q);
        m
    }

    /// Flat metric plus a small random symmetric polynomial perturbation of
    /// degree at most four.
    pub fn random_quartic(sig: Signature, seed: u64, amplitude: f64) -> Self {
        let n = sig.n();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut components = MetricSpec::flat(sig).components;
        for a in 0..n {
            for b in a..n {
                let mut p = Polynomial::zero();
                for _ in 0..5 {
                    let deg = rng.gen_range(1..=4);
                    let mut e = vec![0u32; n];
                    for _ in 0..deg {
                        e[rng.gen_range(0..n)] += 1;
                    }
                    p.add_term(e, amplitude * rng.gen_range(-1.0..1.0));
                }
                let entry = match &components[a][b] {
                    ScalarExpr::Poly(base) => base + &p,
                    _ => unreachable!("flat entries are polynomial"),
                };
                components[a][b] = entry.clone().into();
                components[b][a] = entry.into();
            }
        }
        MetricSpec { name: format!("quartic{}{}-{seed}", sig.p, sig.q), signature: sig, components, conformal_factor: None, patch: default_patch(n) }
    }

    pub fn n(&self) -> usize {
        self.signature.n()
    }

    /// `e^{2f} g` with the factor accumulated symbolically.
    pub fn conformal_rescale(&self, f: &Polynomial) -> MetricSpec {
        let mut out = self.clone();
        out.conformal_factor = match &self.conformal_factor {
            Some(h) => Some(h + f),
            None if f.is_zero() => None,
            None => Some(f.clone()),
        };
        out
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        Signature::for_metric(self.signature.p, self.signature.q)?;
        if self.components.len() != n || self.components.iter().any(|r| r.len() != n) {
            return Err(Error::Shape(format!("metric must be {n}x{n}")));
        }
        if self.patch.len() != n || self.patch.iter().any(|[lo, hi]| !(lo < hi)) {
            return Err(Error::Shape("patch must give n increasing intervals".into()));
        }
        for a in 0..n {
            for b in 0..n {
                self.components[a][b].check_dim(n)?;
                if self.components[a][b] != self.components[b][a] {
                    return Err(Error::Shape(format!("metric entries ({a},{b}) and ({b},{a}) differ")));
                }
            }
        }
        if let Some(f) = &self.conformal_factor {
            f.check_dim(n)?;
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.n();
        let s = self.conformal_factor.as_ref().map_or(1.0, |f| (2.0 * f.eval(x)).exp());
        DMatrix::from_fn(n, n, |a, b| s * self.components[a][b].eval(x))
    }

    /// Confirms nondegeneracy and the declared signature at `x`.
    pub fn check_signature_at(&self, x: &[f64]) -> Result<()> {
        let m = self.eval(x);
        let eig = m.symmetric_eigen();
        let scale = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let pos = eig.eigenvalues.iter().filter(|v| **v > 1e-12 * scale).count();
        let neg = eig.eigenvalues.iter().filter(|v| **v < -1e-12 * scale).count();
        if pos != self.signature.p || neg != self.signature.q {
            return Err(Error::DegenerateMetric(format!(
                "at {x:?} found {pos} positive and {neg} negative eigenvalues, expected {}",
                self.signature
            )));
        }
        Ok(())
    }

    pub fn jets(&self, x0: &[f64], order: usize) -> Result<JetMat> {
        let n = self.n();
        if x0.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: x0.len() });
        }
        let factor = match &self.conformal_factor {
            Some(f) => Some(f.jet_at(x0, order)?.scale(2.0).exp()),
            None => None,
        };
        let mut g = zero_mat(n, n, order);
        for a in 0..n {
            for b in a..n {
                let mut e = self.components[a][b].jet_at(x0, order)?;
                if let Some(s) = &factor {
                    e = &e * s;
                }
                g[b][a] = e.clone();
                g[a][b] = e;
            }
        }
        Ok(g)
    }

    pub fn sample_points(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        sample_points(&self.patch, count, seed)
    }
}

const PRIMES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let mut f = 1.0 / base as f64;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % b) as f64;
        i /= b;
        f /= base as f64;
    }
    r
}

/// Halton points with a seeded Cranley-Patterson shift, mapped into the
/// patch and kept away from its boundary.
pub fn sample_points(patch: &[[f64; 2]], count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = patch.iter().map(|_| rng.gen_range(0.0..1.0)).collect();
    (0..count)
        .map(|i| {
            patch
                .iter()
                .enumerate()
                .map(|(d, [lo, hi])| {
                    let u = (radical_inverse(i as u64 + 1, PRIMES[d % PRIMES.len()]) + shift[d]).fract();
                    lo + (hi - lo) * (0.05 + 0.9 * u)
                })
                .collect()
        })
        .collect()
}

/// Jet-valued curvature quantities at one point.
#[derive(Clone, Debug)]
pub struct CurvatureStack {
    /// `christoffel[c][a][b] = Γ^c_ab`
    pub christoffel: Vec<JetMat>,
    /// `riemann[a][b][c][d] = R_ab{}^c{}_d`
    pub riemann: Vec<Vec<JetMat>>,
    pub ricci: JetMat,
    pub scalar: Jet,
    pub schouten: JetMat,
    pub j: Jet,
    /// `weyl[a][b][c][d] = C_ab{}^c{}_d`
    pub weyl: Vec<Vec<JetMat>>,
    /// `cotton[a][b][c] = A_abc`
    pub cotton: Vec<JetMat>,
}

impl CurvatureStack {
    pub fn compute(g: &JetMat, ginv: &JetMat) -> Result<Self> {
        let n = g.len();
        let vars = g[0][0].dim();
        let order = g[0][0].order();
        if order < 3 {
            return Err(Error::OrderTooLow { have: order, need: 3 });
        }
        // ∂_a g_bc
        let dg: Vec<JetMat> = (0..n)
            .map(|a| (0..n).map(|b| (0..n).map(|c| g[b][c].partial(a)).collect()).collect())
            .collect();
        let mut christoffel = vec![zero_mat(n, vars, order - 1); n];
        for c in 0..n {
            for a in 0..n {
                for b in a..n {
                    let mut s = Jet::zero(vars, order - 1);
                    for d in 0..n {
                        let t = &(&dg[a][b][d] + &dg[b][a][d]) - &dg[d][a][b];
                        s += &(&ginv[c][d] * &t);
                    }
                    let s = s.scale(0.5);
                    christoffel[c][b][a] = s.clone();
                    christoffel[c][a][b] = s;
                }
            }
        }
        let gam = &christoffel;
        // standard R^c_{dab} = ∂_a Γ^c_bd - ∂_b Γ^c_ad + Γ^c_ae Γ^e_bd - Γ^c_be Γ^e_ad
        let mut riemann = vec![vec![zero_mat(n, vars, order - 2); n]; n];
        for a in 0..n {
            for b in (a + 1)..n {
                for c in 0..n {
                    for d in 0..n {
                        let mut r = &gam[c][b][d].partial(a) - &gam[c][a][d].partial(b);
                        for e in 0..n {
                            r += &(&gam[c][a][e] * &gam[e][b][d]);
                            r -= &(&gam[c][b][e] * &gam[e][a][d]);
                        }
                        riemann[b][a][c][d] = -&r;
                        riemann[a][b][c][d] = r;
                    }
                }
            }
        }
        let o2 = order - 2;
        let mut ricci = zero_mat(n, vars, o2);
        for b in 0..n {
            for d in 0..n {
                let mut s = Jet::zero(vars, o2);
                for a in 0..n {
                    s += &riemann[a][b][a][d];
                }
                ricci[b][d] = s;
            }
        }
        let mut scalar = Jet::zero(vars, o2);
        for a in 0..n {
            for b in 0..n {
                scalar += &(&ginv[a][b] * &ricci[a][b]);
            }
        }
        let nf = n as f64;
        let jj = scalar.scale(1.0 / (2.0 * (nf - 1.0)));
        let mut schouten = zero_mat(n, vars, o2);
        for a in 0..n {
            for b in 0..n {
                schouten[a][b] = (&ricci[a][b] - &(&jj * &g[a][b])).scale(1.0 / (nf - 2.0));
            }
        }
        let mut j = Jet::zero(vars, o2);
        for a in 0..n {
            for b in 0..n {
                j += &(&ginv[a][b] * &schouten[a][b]);
            }
        }
        // P_a^c = g^{ce} P_ae
        let p_up = mat_mul(&schouten, ginv);
        let mut weyl = riemann.clone();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let w = &mut weyl[a][b][c][d];
                        if a == c {
                            *w -= &schouten[b][d];
                        }
                        if b == c {
                            *w += &schouten[a][d];
                        }
                        *w += &(&g[d][a] * &p_up[b][c]);
                        *w -= &(&g[d][b] * &p_up[a][c]);
                    }
                }
            }
        }
        // D_b P_ca
        let dp: Vec<JetMat> = (0..n)
            .map(|b| {
                (0..n)
                    .map(|c| {
                        (0..n)
                            .map(|a| {
                                let mut s = schouten[c][a].partial(b);
                                for e in 0..n {
                                    s -= &(&gam[e][b][c] * &schouten[e][a]);
                                    s -= &(&gam[e][b][a] * &schouten[c][e]);
                                }
                                s
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let mut cotton = vec![zero_mat(n, vars, order - 3); n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    cotton[a][b][c] = &dp[b][c][a] - &dp[c][b][a];
                }
            }
        }
        Ok(CurvatureStack { christoffel, riemann, ricci, scalar, schouten, j, weyl, cotton })
    }

    /// `C_abcd = g_ce C_ab{}^e{}_d`.
    pub fn weyl_lowered(&self, g: &JetMat) -> Vec<Vec<JetMat>> {
        let n = g.len();
        let mut out = self.weyl.clone();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let mut s = Jet::zero(g[0][0].dim(), self.weyl[0][0][0][0].order());
                        for e in 0..n {
                            s += &(&g[c][e] * &self.weyl[a][b][e][d]);
                        }
                        out[a][b][c][d] = s;
                    }
                }
            }
        }
        out
    }
}

/// Orthonormal frame, coframe and connection coefficients.
#[derive(Clone, Debug)]
pub struct Frame {
    /// `e[i][a]`: coordinate components of the i-th frame vector.
    pub e: JetMat,
    /// `theta[i][a]`: the dual coframe, `θ^i(∂_a)`.
    pub theta: JetMat,
    /// `omega[a][j][k] = g(D_{∂_a} e_j, e_k)`.
    pub omega: Vec<JetMat>,
    pub eta: Vec<f64>,
}

impl Frame {
    /// Gram-Schmidt on the coordinate frame, in signature order.
    pub fn build(g: &JetMat, christoffel: &[JetMat], sig: Signature) -> Result<Frame> {
        let n = g.len();
        let vars = g[0][0].dim();
        let order = g[0][0].order();
        let eta: Vec<f64> = (0..n).map(|i| sig.eta(i)).collect();
        let inner = |u: &JetVec, v: &JetVec| -> Jet {
            let mut s = Jet::zero(vars, order);
            for a in 0..n {
                for b in 0..n {
                    s += &(&(&g[a][b] * &u[a]) * &v[b]);
                }
            }
            s
        };
        let mut e: JetMat = Vec::with_capacity(n);
        for i in 0..n {
            let mut v: JetVec = (0..n).map(|a| Jet::constant(vars, order, if a == i { 1.0 } else { 0.0 })).collect();
            for (j, ej) in e.iter().enumerate() {
                let c = inner(&v, ej).scale(eta[j]);
                for a in 0..n {
                    v[a] -= &(&c * &ej[a]);
                }
            }
            let nrm = inner(&v, &v);
            let signed = nrm.scale(eta[i]);
            if signed.value() <= 1e-12 * (1.0 + g[i][i].value().abs()) {
                return Err(Error::FrameBreakdown { minor: i + 1, norm: nrm.value(), sign: eta[i] });
            }
            let s = signed.try_powf(-0.5)?;
            e.push(v.iter().map(|c| c * &s).collect());
        }
        let theta: JetMat = (0..n)
            .map(|i| {
                (0..n)
                    .map(|a| {
                        let mut s = Jet::zero(vars, order);
                        for b in 0..n {
                            s += &(&g[a][b] * &e[i][b]);
                        }
                        s.scale(eta[i])
                    })
                    .collect()
            })
            .collect();
        // D_{∂a} e_j = (∂_a e_j^c + Γ^c_ab e_j^b) ∂_c ; omega = θ-lowering against e_k
        let mut omega = Vec::with_capacity(n);
        for a in 0..n {
            let mut om = zero_mat(n, vars, order - 1);
            let de: JetMat = (0..n)
                .map(|j| {
                    (0..n)
                        .map(|c| {
                            let mut s = e[j][c].partial(a);
                            for b in 0..n {
                                s += &(&christoffel[c][a][b] * &e[j][b]);
                            }
                            s
                        })
                        .collect()
                })
                .collect();
            for j in 0..n {
                for k in 0..n {
                    // g(X, e_k) = η_k θ^k(X)
                    let mut s = Jet::zero(vars, order - 1);
                    for c in 0..n {
                        s += &(&theta[k][c] * &de[j][c]);
                    }
                    om[j][k] = s.scale(eta[k]);
                }
            }
            omega.push(om);
        }
        Ok(Frame { e, theta, omega, eta })
    }

    /// `ω_ijk = g(D_{e_i} e_j, e_k)`.
    pub fn omega_frame(&self, i: usize, j: usize, k: usize) -> Jet {
        let n = self.e.len();
        let mut s = Jet::zero(self.e[0][0].dim(), self.omega[0][0][0].order());
        for a in 0..n {
            s += &(&self.e[i][a] * &self.omega[a][j][k]);
        }
        s
    }
}

/// Everything evaluated at one base point for one metric.
#[derive(Clone, Debug)]
pub struct PointGeometry {
    pub signature: Signature,
    pub x0: Vec<f64>,
    pub order: usize,
    pub g: JetMat,
    pub ginv: JetMat,
    pub curvature: CurvatureStack,
    pub frame: Frame,
}

impl PointGeometry {
    pub fn new(metric: &MetricSpec, x0: &[f64], order: usize) -> Result<Self> {
        metric.check_signature_at(x0)?;
        let g = metric.jets(x0, order)?;
        let ginv = invert(&g)?;
        let curvature = CurvatureStack::compute(&g, &ginv)?;
        let frame = Frame::build(&g, &curvature.christoffel, metric.signature)?;
        Ok(PointGeometry { signature: metric.signature, x0: x0.to_vec(), order, g, ginv, curvature, frame })
    }

    pub fn n(&self) -> usize {
        self.g.len()
    }

    pub fn zero(&self, order: usize) -> Jet {
        Jet::zero(self.n(), order)
    }

    pub fn christoffel(&self, c: usize, a: usize, b: usize) -> &Jet {
        &self.curvature.christoffel[c][a][b]
    }

    pub fn schouten(&self) -> &JetMat {
        &self.curvature.schouten
    }

    pub fn require_order(&self, have: usize, need: usize) -> Result<()> {
        if have < need {
            Err(Error::OrderTooLow { have, need })
        } else {
            Ok(())
        }
    }
}

/// Position of a tensor index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexPos {
    Upper,
    Lower,
}

/// Dense jet-valued tensor with coordinate indices, row-major.
#[derive(Clone, Debug)]
pub struct TensorJet {
    pub n: usize,
    pub valence: Vec<IndexPos>,
    pub comps: Vec<Jet>,
}

impl TensorJet {
    pub fn new(n: usize, valence: Vec<IndexPos>, comps: Vec<Jet>) -> Result<Self> {
        if comps.len() != n.pow(valence.len() as u32) {
            return Err(Error::Shape(format!(
                "tensor of rank {} in dimension {n} needs {} components",
                valence.len(),
                n.pow(valence.len() as u32)
            )));
        }
        Ok(TensorJet { n, valence, comps })
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    pub fn get(&self, idx: &[usize]) -> &Jet {
        &self.comps[self.flat_index(idx)]
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let r = self.valence.len();
        let mut idx = vec![0; r];
        for k in (0..r).rev() {
            idx[k] = flat % self.n;
            flat /= self.n;
        }
        idx
    }

    pub fn max_abs_value(&self) -> f64 {
        self.comps.iter().fold(0.0, |m, j| m.max(j.value().abs()))
    }
}

/// `D_c T`, the new lower index placed first.
pub fn covariant_derivative(geo: &PointGeometry, t: &TensorJet) -> Result<TensorJet> {
    let n = geo.n();
    if t.n != n {
        return Err(Error::DimensionMismatch { expected: n, found: t.n });
    }
    let order = t.comps.iter().map(Jet::order).min().unwrap_or(geo.order);
    geo.require_order(order, 1)?;
    let mut valence = vec![IndexPos::Lower];
    valence.extend(&t.valence);
    let mut comps = Vec::with_capacity(n * t.comps.len());
    for c in 0..n {
        for (flat, comp) in t.comps.iter().enumerate() {
            let idx = t.multi_index(flat);
            let mut s = comp.partial(c);
            for (slot, pos) in t.valence.iter().enumerate() {
                let mut j = idx.clone();
                for e in 0..n {
                    j[slot] = e;
                    let other = t.get(&j);
                    match pos {
                        IndexPos::Upper => s += &(geo.christoffel(idx[slot], c, e) * other),
                        IndexPos::Lower => s -= &(geo.christoffel(e, c, idx[slot]) * other),
                    }
                }
            }
            comps.push(s);
        }
    }
    TensorJet::new(n, valence, comps)
}
