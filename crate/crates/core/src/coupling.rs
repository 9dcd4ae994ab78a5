//! Coupling maps between solutions, their coupling conditions, and the
//! decomposition of conformal Killing fields by a generic twistor spinor.

use std::f64::consts::SQRT_2;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bgg::{self, input_scale, relative, split_l0, theta0_aes, theta0_ckf, EvalOptions, Theta0Output};
use crate::clifford::{add_spinor, scale_spinor, sub_spinor, Spinor};
use crate::error::{Error, Result};
use crate::field::{BggKind, FieldJet, PolyField};
use crate::forms::{self, alt_first, cov_d, divergence, exterior_d, insert, insert_vector, raise_all, FormOneForm};
use crate::geometry::{MetricSpec, Signature};
use crate::jet::{factorial, Jet};
use crate::point::Point;
use crate::skew::{subsets, Skew};
use crate::tractor::{
    self, form_clifford, pi0, skew_gamma, spinor_to_form, tractor_pairing_b, SpinTractor,
    TractorBottom, TractorSection,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CouplingKind {
    /// `k`-form and `k'`-form to a `(k+k'+1)`-form.
    Wedge { k: usize, k2: usize },
    /// `k`-form and `k'`-form, `k' > k`, to a `(k'-k-1)`-form.
    Contract { k: usize, k2: usize },
    /// Two twistor spinors to a `k`-form.
    SpinorPair { k: usize },
    /// A `k`-form and a twistor spinor to a twistor spinor.
    FormSpinor { k: usize },
}

impl CouplingKind {
    pub fn input_kinds(&self) -> (BggKind, BggKind) {
        let form = |k: usize| if k == 0 { BggKind::AlmostEinsteinScale } else { BggKind::ConformalKillingForm { k } };
        match *self {
            CouplingKind::Wedge { k, k2 } | CouplingKind::Contract { k, k2 } => (form(k), form(k2)),
            CouplingKind::SpinorPair { .. } => (BggKind::TwistorSpinor, BggKind::TwistorSpinor),
            CouplingKind::FormSpinor { k } => (form(k), BggKind::TwistorSpinor),
        }
    }

    pub fn output_kind(&self, n: usize) -> Result<BggKind> {
        let form = |k: usize| -> Result<BggKind> {
            if k == 0 {
                Ok(BggKind::AlmostEinsteinScale)
            } else if k < n {
                Ok(BggKind::ConformalKillingForm { k })
            } else {
                Err(Error::InvalidKind(format!("coupled {k}-form in dimension {n}")))
            }
        };
        match *self {
            CouplingKind::Wedge { k, k2 } => form(k + k2 + 1),
            CouplingKind::Contract { k, k2 } => {
                if k2 <= k {
                    Err(Error::InvalidKind(format!("contraction needs k' > k, got k = {k}, k' = {k2}")))
                } else {
                    form(k2 - k - 1)
                }
            }
            CouplingKind::SpinorPair { k } => form(k),
            CouplingKind::FormSpinor { .. } => Ok(BggKind::TwistorSpinor),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let (a, b) = self.input_kinds();
        a.validate(n)?;
        b.validate(n)?;
        self.output_kind(n).map(|_| ())
    }
}

fn alt_norm(r: usize, s: usize) -> f64 {
    // Alt(α ⊗ β) = r! s! / (r+s)! · (α ∧ β) for sorted-component wedges.
    factorial(r) * factorial(s) / factorial(r + s)
}

/// `(k+1) σ_[A D σ'_B] + (-1)^{(k+1)(k'+1)} (k'+1) σ'_[B D σ_A]`.
pub fn couple_wedge(pt: &Point, s: &Skew, t: &Skew) -> Result<Skew> {
    let (k, k2) = (s.rank(), t.rank());
    if k + k2 + 1 >= pt.n() {
        return Err(Error::InvalidKind(format!("wedge coupling of a {k}-form and a {k2}-form in dimension {}", pt.n())));
    }
    let geo = &pt.geo;
    let ms = alt_first(&cov_d(geo, s));
    let mt = alt_first(&cov_d(geo, t));
    let sign = if ((k + 1) * (k2 + 1)) % 2 == 0 { 1.0 } else { -1.0 };
    let a = s.wedge(&mt).scale((k + 1) as f64 * alt_norm(k, k2 + 1));
    let b = t.wedge(&ms).scale(sign * (k2 + 1) as f64 * alt_norm(k2, k + 1));
    Ok(a.add(&b))
}

/// `(k+1) σ^{P} D^q σ'_{qPA} - (n-k'+1) σ'_{p_0 P A} D^{p_0} σ^{P}` with
/// full index sums.
pub fn couple_contract(pt: &Point, s: &Skew, t: &Skew) -> Result<Skew> {
    let (k, k2) = (s.rank(), t.rank());
    if k2 <= k {
        return Err(Error::InvalidKind(format!("contraction needs k' > k, got k = {k}, k' = {k2}")));
    }
    let geo = &pt.geo;
    let n = pt.n();
    let fk = factorial(k);
    let su = raise_all(geo, s);
    let tr = forms::trace_first(geo, &cov_d(geo, t));
    let term1 = forms::contract_sorted(&su, &tr).scale((k + 1) as f64 * fk);
    let ds = cov_d(geo, s);
    let mut term2 = Skew::zero(n, k2 - k - 1, n, term1.order());
    for p0 in 0..n {
        let mut up = Skew::zero(n, k, n, ds[0].order());
        for r in 0..n {
            let g = &geo.ginv[p0][r];
            if g.max_abs() != 0.0 {
                up = up.add(&raise_all(geo, &ds[r]).mul_jet(g));
            }
        }
        term2 = term2.add(&forms::contract_sorted(&up, &insert(t, p0)));
    }
    let term2 = term2.scale((n - k2 + 1) as f64 * fk);
    Ok(term1.sub(&term2))
}

/// `b(χ, γ_[a_1 ... γ_a_k] χ')` as a coordinate `k`-form.
pub fn couple_spinor_pair(pt: &Point, chi: &[Jet], chi2: &[Jet], k: usize) -> Result<Skew> {
    let n = pt.n();
    if k > n {
        return Err(Error::InvalidKind(format!("{k}-form from spinors in dimension {n}")));
    }
    let sp = pt.spin()?;
    let st = &sp.structure;
    let sub = subsets(n, k);
    let comps = (0..sub.len())
        .map(|i| {
            let m = st.skew_product(&sub.labels(i));
            let v = crate::clifford::apply_const(&m, chi2);
            st.pair(chi, &v)
        })
        .collect();
    let order = chi.iter().chain(chi2).map(Jet::order).min().unwrap_or(0);
    let frame_form = Skew::from_comps(n, k, n, order, comps);
    Ok(crate::clifford::from_frame(&pt.geo, &frame_form))
}

/// `(-1)^{k+1} (2(k+1)/n) σ·∇̸χ + (dσ)·χ + ((k+1)/(n-k+1)) (δ̃σ)·χ`, with
/// `δ̃σ_B = g^{pq} D_p σ_{qB}`.
pub fn couple_form_spinor(pt: &Point, s: &Skew, chi: &[Jet]) -> Result<Spinor> {
    let n = pt.n();
    let k = s.rank();
    if k >= n {
        return Err(Error::InvalidKind(format!("{k}-form in dimension {n}")));
    }
    let sp = pt.spin()?;
    let geo = &pt.geo;
    let (nf, kf) = (n as f64, k as f64);
    let dirac = sp.dirac(chi)?;
    let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
    let mut out: Spinor = sp.form_mult(geo, s, &dirac)?.iter().map(|j| j.scale(sign * 2.0 * (kf + 1.0) / nf)).collect();
    out = add_spinor(&out, &sp.form_mult(geo, &exterior_d(geo, s), chi)?);
    if k >= 1 {
        let dv = sp.form_mult(geo, &divergence(geo, s), chi)?;
        let c = (kf + 1.0) / (nf - kf + 1.0);
        out = add_spinor(&out, &dv.iter().map(|j| j.scale(c)).collect::<Vec<_>>());
    }
    Ok(out)
}

fn weyl_tensors(pt: &Point) -> (Vec<Vec<Vec<Vec<Jet>>>>, Vec<Vec<Vec<Vec<Jet>>>>) {
    // (C_{abc}{}^p, C_{ab}{}^{pq})
    let n = pt.n();
    let cl = pt.geo.curvature.weyl_lowered(&pt.geo.g);
    let gi = &pt.geo.ginv;
    let ord = pt.order().saturating_sub(2);
    let raise_last = |t: &dyn Fn(usize, usize, usize, usize) -> Jet| -> Vec<Vec<Vec<Vec<Jet>>>> {
        (0..n)
            .map(|a| {
                (0..n)
                    .map(|b| {
                        (0..n)
                            .map(|c| {
                                (0..n)
                                    .map(|p| {
                                        let mut s = Jet::zero(n, ord);
                                        for d in 0..n {
                                            s += &(&t(a, b, c, d) * &gi[d][p]);
                                        }
                                        s
                                    })
                                    .collect()
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect()
    };
    let up1 = raise_last(&|a, b, c, d| cl[a][b][c][d].clone());
    // C_{ab}{}^{p}{}_{q} then raise q
    let mixed = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| {
                    (0..n)
                        .map(|p| {
                            (0..n)
                                .map(|q| {
                                    let mut s = Jet::zero(n, ord);
                                    for e in 0..n {
                                        s += &(&gi[p][e] * &cl[a][b][e][q]);
                                    }
                                    s
                                })
                                .collect::<Vec<_>>()
                        })
                        .collect::<Vec<_>>()
                })
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>();
    let up2 = raise_last(&|a, b, p, q| mixed[a][b][p][q].clone());
    (up1, up2)
}

/// `Σ_{p,q} C_{ab}{}^{pq} σ_{pq..}` for every `(a, b)`.
fn weyl_pair_contract(pt: &Point, up2: &[Vec<Vec<Vec<Jet>>>], s: &Skew) -> Vec<Vec<Skew>> {
    let n = pt.n();
    let ins: Vec<Vec<Skew>> = (0..n).map(|p| (0..n).map(|q| insert(&insert(s, p), q)).collect()).collect();
    (0..n)
        .map(|a| {
            (0..n)
                .map(|b| {
                    let mut acc = Skew::zero(n, s.rank() - 2, n, s.order().min(pt.order().saturating_sub(2)));
                    for p in 0..n {
                        for q in 0..n {
                            let c = &up2[a][b][p][q];
                            if c.max_abs() != 0.0 {
                                acc = acc.add(&ins[p][q].mul_jet(c));
                            }
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

/// `C_{[a_1 a_2 |c|}{}^p σ_{p a_3 .. a_r]}` as an `r`-form for each `c`.
fn weyl_insert_alt(pt: &Point, up1: &[Vec<Vec<Vec<Jet>>>], s: &Skew) -> FormOneForm {
    let n = pt.n();
    let r = s.rank() + 1;
    (0..n)
        .map(|c| {
            let v: Vec<Vec<Skew>> =
                (0..n).map(|a| (0..n).map(|b| insert_vector(&up1[a][b][c], s)).collect()).collect();
            alt_pair(n, r, s.order(), |i, j, rest| v[i][j].get(rest))
        })
        .collect()
}

fn alt_pair(n: usize, r: usize, order: usize, x: impl Fn(usize, usize, &[usize]) -> Jet) -> Skew {
    let sub = subsets(n, r);
    let w = 2.0 / (r * (r - 1)) as f64;
    let comps = (0..sub.len())
        .map(|s| {
            let l = sub.labels(s);
            let mut acc = Jet::zero(n, order);
            for i in 0..r {
                for j in (i + 1)..r {
                    let rest: Vec<usize> =
                        l.iter().enumerate().filter(|(t, _)| *t != i && *t != j).map(|(_, &v)| v).collect();
                    acc.axpy(if (i + j - 1) % 2 == 0 { w } else { -w }, &x(l[i], l[j], &rest));
                }
            }
            acc
        })
        .collect();
    Skew::from_comps(n, r, n, order, comps)
}

/// Highest-weight part of
/// `(-1)^{k+1} C_{[a_1a_2|c}{}^p σ_{p|..} σ'_{..]} + σ_{[..} C_{..|c}{}^p σ'_{p|..]}`.
pub fn cond_wedge(pt: &Point, s: &Skew, t: &Skew) -> Result<FormOneForm> {
    let (k, k2) = (s.rank(), t.rank());
    let n = pt.n();
    let r = k + k2 + 1;
    if r >= n {
        return Err(Error::InvalidKind(format!("wedge coupling into {r}-forms in dimension {n}")));
    }
    let (up1, _) = weyl_tensors(pt);
    let order = s.order().min(t.order()).min(pt.order().saturating_sub(2));
    let mut out: FormOneForm = vec![Skew::zero(n, r, n, order); n];
    if k >= 1 {
        let a1 = weyl_insert_alt(pt, &up1, s);
        let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
        for c in 0..n {
            out[c] = out[c].add(&a1[c].wedge(t).scale(sign * alt_norm(k + 1, k2)));
        }
    }
    if k2 >= 1 {
        let a2 = weyl_insert_alt(pt, &up1, t);
        for c in 0..n {
            out[c] = out[c].add(&s.wedge(&a2[c]).scale(alt_norm(k, k2 + 1)));
        }
    }
    Ok(forms::proj_hw(&pt.geo, &out))
}

/// Highest-weight part of
/// `(n-k') C^{p_0p_1}{}_{qc} σ^{qP} σ'_{p_0p_1PA} - (k'-1) σ^{p_1P} C_{cp_1}{}^{q_1q_2} σ'_{q_1q_2PA}`,
/// with the `k = 0` reduction `-(k'-1) σ C_{c[a_1}{}^{q_1q_2} σ'_{q_1q_2 a_2..]}`.
pub fn cond_contract(pt: &Point, s: &Skew, t: &Skew) -> Result<FormOneForm> {
    let (k, k2) = (s.rank(), t.rank());
    let n = pt.n();
    if k2 <= k {
        return Err(Error::InvalidKind(format!("contraction needs k' > k, got k = {k}, k' = {k2}")));
    }
    let r = k2 - k - 1;
    let order = s.order().min(t.order()).min(pt.order().saturating_sub(2));
    let mut out: FormOneForm = vec![Skew::zero(n, r, n, order); n];
    if k2 >= 2 {
        let (_, up2) = weyl_tensors(pt);
        let w = weyl_pair_contract(pt, &up2, t);
        let c2 = (k2 - 1) as f64;
        if k == 0 {
            let sv = &s.comps()[0];
            for c in 0..n {
                out[c] = alt_first(&w[c]).mul_jet(sv).scale(-c2);
            }
        } else {
            let su = raise_all(&pt.geo, s);
            let fk = factorial(k - 1);
            // C^{p_0 p_1}{}_{qc} = g^{p_0 a} g^{p_1 b} C_{abqc}
            let cl = pt.geo.curvature.weyl_lowered(&pt.geo.g);
            let gi = &pt.geo.ginv;
            let ins: Vec<Vec<Skew>> = (0..n).map(|p| (0..n).map(|q| insert(&insert(t, p), q)).collect()).collect();
            for c in 0..n {
                let mut acc = Skew::zero(n, r, n, order);
                for q in 0..n {
                    let mut v = Skew::zero(n, k2 - 2, n, order);
                    for p0 in 0..n {
                        for p1 in 0..n {
                            let mut coef = Jet::zero(n, order);
                            for a in 0..n {
                                for b in 0..n {
                                    if gi[p0][a].max_abs() != 0.0 && gi[p1][b].max_abs() != 0.0 {
                                        coef += &(&(&gi[p0][a] * &gi[p1][b]) * &cl[a][b][q][c]);
                                    }
                                }
                            }
                            if coef.max_abs() != 0.0 {
                                v = v.add(&ins[p0][p1].mul_jet(&coef));
                            }
                        }
                    }
                    acc = acc.add(&forms::contract_sorted(&insert(&su, q), &v).scale((n - k2) as f64 * fk));
                    acc = acc.sub(&forms::contract_sorted(&insert(&su, q), &w[c][q]).scale(c2 * fk));
                }
                out[c] = acc;
            }
        }
    }
    Ok(forms::proj_hw(&pt.geo, &out))
}

/// `γ`-trace-free part of `C_{ca_1}{}^{pq} σ_{pqa_2..a_{k-1}} γ^{a_1..a_{k-1}} χ`, `k >= 2`.
pub fn cond_form_spinor(pt: &Point, s: &Skew, chi: &[Jet]) -> Result<Vec<Spinor>> {
    let k = s.rank();
    if k < 2 {
        return Err(Error::UnconditionalCase(k));
    }
    let n = pt.n();
    let sp = pt.spin()?;
    let (_, up2) = weyl_tensors(pt);
    let w = weyl_pair_contract(pt, &up2, s);
    let fk = factorial(k - 1);
    let phi = (0..n)
        .map(|c| {
            let form = alt_first(&w[c]).scale(fk);
            sp.form_mult(&pt.geo, &form, chi)
        })
        .collect::<Result<Vec<_>>>()?;
    bgg::proj_hw_spinor(pt, &phi)
}

/// Spinorial Lie derivative of a weight-1/2 spinor along a vector field
/// given by its lowered 1-form `ξ`:
/// `D_ξχ - ¼ D_[aξ_b] γ^a γ^b χ - (1/2n)(D_pξ^p) χ`.
pub fn lie_derivative(pt: &Point, xi: &Skew, chi: &[Jet]) -> Result<Spinor> {
    let n = pt.n();
    let sp = pt.spin()?;
    let geo = &pt.geo;
    let up: Vec<Jet> = (0..n)
        .map(|a| {
            let mut s = Jet::zero(n, xi.order());
            for b in 0..n {
                s += &(&geo.ginv[a][b] * &xi.comps()[b]);
            }
            s
        })
        .collect();
    let d = sp.covariant_derivative(chi)?;
    let mut out = crate::clifford::zero_spinor(sp.dim(), n, xi.order().min(chi[0].order()));
    for (a, da) in d.iter().enumerate() {
        out = add_spinor(&out, &scale_spinor(da, &up[a]));
    }
    let m = alt_first(&cov_d(geo, xi));
    let rot = sp.form_mult(geo, &m, chi)?;
    out = sub_spinor(&out, &rot.iter().map(|j| j.scale(0.5)).collect::<Vec<_>>());
    let div = divergence(geo, xi).comps()[0].clone();
    out = sub_spinor(&out, &scale_spinor(chi, &div.scale(0.5 / n as f64)));
    Ok(out)
}

/// `(b(χ, ∇̸χ), B(L₀χ, L₀χ))`.
pub fn genericity(pt: &Point, chi: &[Jet]) -> Result<(f64, f64)> {
    let sp = pt.spin()?;
    let d = sp.dirac(chi)?;
    let small = sp.structure.pair(chi, &d).value();
    let x = TractorSection::Spin(bgg::split_spinor(pt, chi)?);
    let big = tractor_pairing_b(pt, &x, &x)?.value();
    Ok((small, big))
}

fn constant_tractor(pt: &Point, x: &SpinTractor) -> SpinTractor {
    let c = |v: &Vec<Jet>| v.iter().map(|j| Jet::constant(pt.n(), 0, j.value())).collect();
    SpinTractor { tau: c(&x.tau), chi: c(&x.chi) }
}

fn flatten(x: &SpinTractor) -> Vec<f64> {
    x.tau.iter().chain(&x.chi).map(Jet::value).collect()
}

/// The projector on `Λ^{k+1}` tractors at a point. `raw = B(X,X)^{-1} G^{-1} M`
/// with `M_IJ = B(Γ_I X, Γ_J X)` and `G` the Gram matrix of `h`; `matrix` is
/// `raw` divided by `|eigen_scale|`, the mean nonzero eigenvalue.
#[derive(Clone, Debug)]
pub struct Projector {
    pub raw: DMatrix<f64>,
    pub matrix: DMatrix<f64>,
    pub eigen_scale: f64,
    /// `Φ ↦ Φ · X` as a matrix on the spin tractor values.
    pub action: DMatrix<f64>,
    pub bxx: f64,
}

impl Projector {
    /// `±1` with `P² = ±P`, and the residual `|P² ∓ P|`.
    pub fn idempotency(&self) -> (f64, f64) {
        let sign = self.eigen_scale.signum();
        let p2 = &self.matrix * &self.matrix;
        (sign, (&p2 - &self.matrix * sign).amax())
    }

    pub fn rank(&self, tol: f64) -> usize {
        rank(&self.matrix, tol)
    }

    pub fn action_nullity(&self, tol: f64) -> usize {
        self.action.ncols() - rank(&self.action, tol)
    }
}

fn rank(m: &DMatrix<f64>, tol: f64) -> usize {
    m.clone().svd(false, false).singular_values.iter().filter(|&&s| s > tol).count()
}

pub fn projector(pt: &Point, x: &SpinTractor, k: usize) -> Result<Projector> {
    let x = constant_tractor(pt, x);
    let xs = TractorSection::Spin(x.clone());
    let bxx = tractor_pairing_b(pt, &xs, &xs)?.value();
    if bxx.abs() < 1e-12 {
        return Err(Error::NonGeneric(bxx));
    }
    let l = pt.labels();
    let sub = subsets(l, k + 1);
    let gx: Vec<SpinTractor> = (0..sub.len()).map(|i| skew_gamma(pt, &sub.labels(i), &x)).collect::<Result<_>>()?;
    let dim = sub.len();
    let mut m = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            m[(i, j)] = tractor_pairing_b(pt, &TractorSection::Spin(gx[i].clone()), &TractorSection::Spin(gx[j].clone()))?
                .value();
        }
    }
    let mut g = DMatrix::zeros(dim, dim);
    for j in 0..dim {
        let mut e = Skew::zero(l, k + 1, pt.n(), 0);
        e.comps_mut()[j] = Jet::constant(pt.n(), 0, 1.0);
        let low = tractor::lower(pt, &e);
        for i in 0..dim {
            g[(i, j)] = low.comps()[i].value();
        }
    }
    let ginv = g.try_inverse().ok_or_else(|| Error::Shape("degenerate tractor Gram matrix".into()))?;
    let raw = ginv * m / bxx;
    let r = rank(&raw, 1e-9);
    let eigen_scale = if r == 0 { 1.0 } else { raw.trace() / r as f64 };
    let matrix = &raw / eigen_scale.abs();
    let rows = flatten(&gx[0]).len();
    let mut action = DMatrix::zeros(rows, dim);
    for (j, y) in gx.iter().enumerate() {
        for (i, v) in flatten(y).into_iter().enumerate() {
            action[(i, j)] = v;
        }
    }
    Ok(Projector { raw, matrix, eigen_scale, action, bxx })
}

/// `proj(ξ)_a = b(γ_a χ, L_ξ χ)` as a 1-form.
pub fn perp_projection(pt: &Point, chi: &[Jet], xi: &Skew) -> Result<Skew> {
    let sp = pt.spin()?;
    let l = lie_derivative(pt, xi, chi)?;
    let n = pt.n();
    let comps: Vec<Jet> = (0..n).map(|a| sp.structure.pair(&sp.gamma_lower[a].apply(chi), &l)).collect();
    let order = comps.iter().map(Jet::order).min().unwrap_or(0);
    Ok(Skew::from_comps(n, 1, n, order, comps))
}

#[derive(Clone, Debug)]
pub struct Decomposition {
    /// Part annihilating `χ`, lowered.
    pub sym: Skew,
    /// Part in the image of the projector, lowered.
    pub perp: Skew,
    /// `proj ∘ proj = λ proj`, when `proj ξ ≠ 0`.
    pub lambda: Option<f64>,
    /// `L_{sym} χ` at the point.
    pub sym_residual: f64,
}

/// Splits a conformal Killing field by a generic twistor spinor at a point.
pub fn decompose_ckf(pt: &Point, chi: &[Jet], xi: &Skew) -> Result<Decomposition> {
    let (small, _) = genericity(pt, chi)?;
    if small.abs() < 1e-12 {
        return Err(Error::NonGeneric(small));
    }
    let v = perp_projection(pt, chi, xi)?;
    let scale = xi.max_abs_value().max(1e-300);
    let vmax = v.max_abs_value();
    let (perp, lambda) = if vmax < 1e-13 * scale {
        (v.scale(0.0), None)
    } else {
        let w = perp_projection(pt, chi, &v)?;
        let (mut num, mut den) = (0.0, 0.0);
        for (a, b) in w.comps().iter().zip(v.comps()) {
            num += a.value() * b.value();
            den += b.value() * b.value();
        }
        let lambda = num / den;
        (v.scale(1.0 / lambda), Some(lambda))
    };
    let sym = xi.truncate(perp.order()).sub(&perp);
    let l = lie_derivative(pt, &sym, chi)?;
    let sym_residual = l.iter().fold(0.0_f64, |m, j| m.max(j.value().abs()));
    Ok(Decomposition { sym, perp, lambda, sym_residual })
}

fn require_23(pt: &Point) -> Result<()> {
    let s = pt.geo.signature;
    if s != (Signature { p: 2, q: 3 }) {
        return Err(Error::UnsupportedSignature { p: s.p, q: s.q });
    }
    Ok(())
}

/// `ξ_a = b(γ_a χ, -(2/5) σ ∇̸χ + (Dσ)·χ)` in signature (2,3).
pub fn ckf_from_aes_23(pt: &Point, chi: &[Jet], sigma: &Skew) -> Result<Skew> {
    require_23(pt)?;
    let sp = pt.spin()?;
    let s = &sigma.comps()[0];
    let dirac = sp.dirac(chi)?;
    let ds: Vec<Jet> = cov_d(&pt.geo, sigma).iter().map(|d| d.comps()[0].clone()).collect();
    let inner = add_spinor(&scale_spinor(&dirac, &s.scale(-0.4)), &sp.vector_mult(&ds, chi));
    let comps: Vec<Jet> = (0..5).map(|a| sp.structure.pair(&sp.gamma_lower[a].apply(chi), &inner)).collect();
    let order = comps.iter().map(Jet::order).min().unwrap_or(0);
    Ok(Skew::from_comps(5, 1, 5, order, comps))
}

/// `σ = b(χ, D_ξ χ - ¼ D_[aξ_b] γ^a γ^b χ)` in signature (2,3).
pub fn aes_from_ckf_23(pt: &Point, chi: &[Jet], xi: &Skew) -> Result<Skew> {
    require_23(pt)?;
    let sp = pt.spin()?;
    let l = lie_derivative(pt, xi, chi)?;
    let v = sp.structure.pair(chi, &l);
    Ok(Skew::from_comps(5, 0, 5, v.order(), vec![v]))
}

/// Bottom slot of the tractor-level product that a coupling map projects.
pub fn tractor_product_bottom(pt: &Point, kind: CouplingKind, a: &FieldJet, b: &FieldJet) -> Result<TractorBottom> {
    let sa = split_l0(pt, a)?;
    let sb = split_l0(pt, b)?;
    let prod = match kind {
        CouplingKind::Wedge { .. } => tractor::wedge(&sa, &sb)?,
        CouplingKind::Contract { .. } => tractor::contract(pt, &sa, &sb)?,
        CouplingKind::SpinorPair { k } => spinor_to_form(pt, &sa, &sb, k + 1)?,
        CouplingKind::FormSpinor { .. } => form_clifford(pt, &sa, &sb)?,
    };
    pi0(&prod)
}

/// Constant `c` with `coupled = c · Π₀(tractor product)`.
pub fn tractor_constant(kind: CouplingKind, sig: Signature) -> f64 {
    let n = sig.n();
    match kind {
        CouplingKind::Wedge { k, k2 } => factorial(k + 1) * factorial(k2 + 1) / factorial(k + k2 + 1),
        CouplingKind::Contract { k, k2 } => {
            let s = if k % 2 == 0 { 1.0 } else { -1.0 };
            s * (n - k2 + 1) as f64
        }
        CouplingKind::SpinorPair { k } => {
            let e = sig.p + 1 + sig.p * k + k * (k.saturating_sub(1)) / 2;
            let s = if e % 2 == 0 { 1.0 } else { -1.0 };
            s / SQRT_2
        }
        CouplingKind::FormSpinor { k } => (k + 1) as f64,
    }
}

/// Output of a coupling map at a point.
pub fn couple(pt: &Point, kind: CouplingKind, a: &FieldJet, b: &FieldJet) -> Result<FieldJet> {
    Ok(match kind {
        CouplingKind::Wedge { .. } => FieldJet::Form(couple_wedge(pt, a.as_form()?, b.as_form()?)?),
        CouplingKind::Contract { .. } => FieldJet::Form(couple_contract(pt, a.as_form()?, b.as_form()?)?),
        CouplingKind::SpinorPair { k } => FieldJet::Form(couple_spinor_pair(pt, a.as_spinor()?, b.as_spinor()?, k)?),
        CouplingKind::FormSpinor { .. } => FieldJet::Spinor(couple_form_spinor(pt, a.as_form()?, b.as_spinor()?)?),
    })
}

/// Coupling-condition residual at a point; `None` where the condition is
/// vacuous.
pub fn condition(pt: &Point, kind: CouplingKind, a: &FieldJet, b: &FieldJet) -> Result<Option<f64>> {
    Ok(match kind {
        CouplingKind::Wedge { .. } => Some(forms::max_abs_value(&cond_wedge(pt, a.as_form()?, b.as_form()?)?)),
        CouplingKind::Contract { .. } => Some(forms::max_abs_value(&cond_contract(pt, a.as_form()?, b.as_form()?)?)),
        CouplingKind::SpinorPair { .. } => None,
        CouplingKind::FormSpinor { k } if k < 2 => None,
        CouplingKind::FormSpinor { .. } => {
            let c = cond_form_spinor(pt, a.as_form()?, b.as_spinor()?)?;
            Some(c.iter().flatten().fold(0.0, |m, j| m.max(j.value().abs())))
        }
    })
}

fn output_theta0(pt: &Point, out: &FieldJet) -> Result<f64> {
    Ok(match out {
        FieldJet::Form(s) if s.rank() == 0 => Theta0Output::Symmetric(theta0_aes(pt, s)?).max_abs_value(),
        FieldJet::Form(s) => forms::max_abs_value(&theta0_ckf(pt, s)?),
        FieldJet::Spinor(c) => Theta0Output::Spinor(bgg::theta0_twistor(pt, c)?).max_abs_value(),
    })
}

fn bottom_diff(out: &FieldJet, bottom: &TractorBottom, c: f64) -> Result<f64> {
    match (out, bottom) {
        (FieldJet::Form(o), TractorBottom::Form(b)) => Ok(o.sub(&b.scale(c)).max_abs_value()),
        (FieldJet::Spinor(o), TractorBottom::Spinor(b)) => {
            Ok(o.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x.value() - c * y.value()).abs())))
        }
        _ => Err(Error::Bundle("coupling output and tractor product differ in type".into())),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingVerdict {
    /// Condition and `Θ₀(output)` agree.
    Consistent,
    /// They disagree.
    Inconsistent,
    /// An input failed its own `Θ₀` test.
    PreconditionFailed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingReport {
    pub kind: CouplingKind,
    pub output_kind: BggKind,
    pub points: Vec<Vec<f64>>,
    /// `None` for couplings without a condition.
    pub condition_residual: Option<f64>,
    pub output_residual: f64,
    pub tractor_residual: f64,
    pub inputs_pass: bool,
    pub condition_pass: bool,
    pub output_pass: bool,
    pub tractor_pass: bool,
    pub verdict: CouplingVerdict,
    pub tolerance: f64,
}

impl CouplingReport {
    pub fn pass(&self) -> bool {
        self.verdict == CouplingVerdict::Consistent && self.output_pass && self.tractor_pass
    }
}

/// Evaluates a coupling on sample points: condition, `Θ₀` of the output,
/// and agreement with the tractor-level product.
pub fn coupling_report(
    metric: &MetricSpec,
    kind: CouplingKind,
    a: &PolyField,
    b: &PolyField,
    points: &[Vec<f64>],
    opts: EvalOptions,
) -> Result<CouplingReport> {
    coupling_report_at(&bgg::points_at(metric, points, opts.order)?, kind, a, b, opts)
}

/// [`coupling_report`] on prebuilt points.
pub fn coupling_report_at(
    points: &[Point],
    kind: CouplingKind,
    a: &PolyField,
    b: &PolyField,
    opts: EvalOptions,
) -> Result<CouplingReport> {
    let first = points.first().ok_or_else(|| Error::Shape("no sample points".into()))?;
    let n = first.n();
    let signature = first.geo.signature;
    kind.validate(n)?;
    let (ka, kb) = kind.input_kinds();
    if a.kind != ka || b.kind != kb {
        return Err(Error::InvalidKind(format!(
            "coupling expects {} and {}, got {} and {}",
            ka.label(),
            kb.label(),
            a.kind.label(),
            b.kind.label()
        )));
    }
    let c = tractor_constant(kind, signature);
    let rows = points
        .par_iter()
        .map(|pt| {
            let x = &pt.geo.x0;
            let ja = a.jet_at(x, opts.order)?;
            let jb = b.jet_at(x, opts.order)?;
            let scale = (input_scale(&ja) * input_scale(&jb)).max(1e-12);
            let ina = relative(bgg::theta0(pt, a.kind, &ja)?.max_abs_value(), input_scale(&ja));
            let inb = relative(bgg::theta0(pt, b.kind, &jb)?.max_abs_value(), input_scale(&jb));
            let out = couple(pt, kind, &ja, &jb)?;
            let cond = condition(pt, kind, &ja, &jb)?.map(|v| v / scale);
            let th = output_theta0(pt, &out)? / scale;
            let tr = bottom_diff(&out, &tractor_product_bottom(pt, kind, &ja, &jb)?, c)? / scale;
            Ok((ina.max(inb), cond, th, tr))
        })
        .collect::<Result<Vec<_>>>()?;
    let tol = opts.tolerance;
    let inputs = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let condition_residual =
        if rows.iter().any(|r| r.1.is_some()) { Some(rows.iter().filter_map(|r| r.1).fold(0.0, f64::max)) } else { None };
    let output_residual = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    let tractor_residual = rows.iter().map(|r| r.3).fold(0.0, f64::max);
    let inputs_pass = inputs < tol;
    let condition_pass = condition_residual.map_or(true, |c| c < tol);
    let output_pass = output_residual < tol;
    let verdict = if !inputs_pass {
        CouplingVerdict::PreconditionFailed
    } else if condition_pass == output_pass {
        CouplingVerdict::Consistent
    } else {
        CouplingVerdict::Inconsistent
    };
    Ok(CouplingReport {
        kind,
        output_kind: kind.output_kind(n)?,
        points: points.iter().map(|p| p.geo.x0.clone()).collect(),
        condition_residual,
        output_residual,
        tractor_residual,
        inputs_pass,
        condition_pass,
        output_pass,
        tractor_pass: tractor_residual < tol,
        verdict,
        tolerance: tol,
    })
}
