//! Standard, form and spin tractors in the splitting of the working scale.
//!
//! Form tractors `Λ^r T` are [`Skew`] tensors over the `n + 2` labels
//! `ρ, μ_1, .., μ_n, σ`; the standard tractor is the case `r = 1`, with
//! components `(ρ, μ_a, σ)` and metric `h = ρσ' + σρ' + g^{ab} μ_a μ'_b`.
//! Spin tractors are pairs `(τ, χ)`.

use std::f64::consts::SQRT_2;

use crate::clifford::{add_spinor, scale_spinor, spinor_max_abs, Spinor};
use crate::error::{Error, Result};
use crate::jet::{factorial, Jet};
use crate::point::{mu, Point, RHO};
use crate::skew::{merge_sign, subsets, Skew, SparseEntry};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BundleTag {
    Standard,
    /// `Λ^r T` with the rank `r` stored.
    Form(usize),
    Spin,
}

#[derive(Clone, Debug)]
pub struct SpinTractor {
    pub tau: Spinor,
    pub chi: Spinor,
}

impl SpinTractor {
    pub fn add(&self, o: &SpinTractor) -> SpinTractor {
        SpinTractor { tau: add_spinor(&self.tau, &o.tau), chi: add_spinor(&self.chi, &o.chi) }
    }

    pub fn scale(&self, s: f64) -> SpinTractor {
        SpinTractor {
            tau: self.tau.iter().map(|j| j.scale(s)).collect(),
            chi: self.chi.iter().map(|j| j.scale(s)).collect(),
        }
    }

    pub fn mul_jet(&self, f: &Jet) -> SpinTractor {
        SpinTractor { tau: scale_spinor(&self.tau, f), chi: scale_spinor(&self.chi, f) }
    }

    pub fn max_abs(&self) -> f64 {
        spinor_max_abs(&self.tau).max(spinor_max_abs(&self.chi))
    }

    pub fn max_abs_value(&self) -> f64 {
        self.tau.iter().chain(&self.chi).fold(0.0, |m, j| m.max(j.value().abs()))
    }

    pub fn partial(&self, d: usize) -> SpinTractor {
        SpinTractor {
            tau: self.tau.iter().map(|j| j.partial(d)).collect(),
            chi: self.chi.iter().map(|j| j.partial(d)).collect(),
        }
    }

    pub fn order(&self) -> usize {
        self.tau.iter().chain(&self.chi).map(Jet::order).min().unwrap_or(0)
    }

    fn zero(dim: usize, vars: usize, order: usize) -> SpinTractor {
        SpinTractor { tau: vec![Jet::zero(vars, order); dim], chi: vec![Jet::zero(vars, order); dim] }
    }
}

#[derive(Clone, Debug)]
pub enum TractorSection {
    Form(Skew),
    Spin(SpinTractor),
}

impl TractorSection {
    pub fn tag(&self) -> BundleTag {
        match self {
            TractorSection::Form(s) if s.rank() == 1 => BundleTag::Standard,
            TractorSection::Form(s) => BundleTag::Form(s.rank()),
            TractorSection::Spin(_) => BundleTag::Spin,
        }
    }

    pub fn standard(rho: &Jet, mu_: &[Jet], sigma: &Jet) -> TractorSection {
        let n = mu_.len();
        let order = mu_.iter().chain([rho, sigma]).map(Jet::order).min().unwrap_or(0);
        let mut s = Skew::zero(n + 2, 1, rho.dim(), order);
        s.add_at(&[RHO], 1.0, rho);
        for (a, m) in mu_.iter().enumerate() {
            s.add_at(&[mu(a)], 1.0, m);
        }
        s.add_at(&[n + 1], 1.0, sigma);
        TractorSection::Form(s)
    }

    pub fn as_form(&self) -> Result<&Skew> {
        match self {
            TractorSection::Form(s) => Ok(s),
            TractorSection::Spin(_) => Err(Error::Bundle("expected a form tractor".into())),
        }
    }

    pub fn as_spin(&self) -> Result<&SpinTractor> {
        match self {
            TractorSection::Spin(s) => Ok(s),
            TractorSection::Form(_) => Err(Error::Bundle("expected a spin tractor".into())),
        }
    }

    /// `(ρ, μ, σ)` of a standard tractor.
    pub fn standard_slots(&self) -> Result<(Jet, Vec<Jet>, Jet)> {
        let s = self.as_form()?;
        if s.rank() != 1 {
            return Err(Error::Bundle("expected a standard tractor".into()));
        }
        let n = s.dim() - 2;
        Ok((s.get(&[RHO]), (0..n).map(|a| s.get(&[mu(a)])).collect(), s.get(&[n + 1])))
    }

    pub fn max_abs(&self) -> f64 {
        match self {
            TractorSection::Form(s) => s.max_abs(),
            TractorSection::Spin(s) => s.max_abs(),
        }
    }

    pub fn max_abs_value(&self) -> f64 {
        match self {
            TractorSection::Form(s) => s.max_abs_value(),
            TractorSection::Spin(s) => s.max_abs_value(),
        }
    }

    pub fn order(&self) -> usize {
        match self {
            TractorSection::Form(s) => s.order(),
            TractorSection::Spin(s) => s.order(),
        }
    }

    pub fn scale(&self, c: f64) -> TractorSection {
        match self {
            TractorSection::Form(s) => TractorSection::Form(s.scale(c)),
            TractorSection::Spin(s) => TractorSection::Spin(s.scale(c)),
        }
    }

    pub fn mul_jet(&self, f: &Jet) -> TractorSection {
        match self {
            TractorSection::Form(s) => TractorSection::Form(s.mul_jet(f)),
            TractorSection::Spin(s) => TractorSection::Spin(s.mul_jet(f)),
        }
    }

    pub fn add(&self, other: &TractorSection) -> Result<TractorSection> {
        match (self, other) {
            (TractorSection::Form(a), TractorSection::Form(b)) if a.rank() == b.rank() => {
                Ok(TractorSection::Form(a.add(b)))
            }
            (TractorSection::Spin(a), TractorSection::Spin(b)) => Ok(TractorSection::Spin(a.add(b))),
            _ => Err(Error::Bundle("cannot add sections of different bundles".into())),
        }
    }

    pub fn sub(&self, other: &TractorSection) -> Result<TractorSection> {
        self.add(&other.scale(-1.0))
    }

    pub fn partial(&self, d: usize) -> TractorSection {
        match self {
            TractorSection::Form(s) => TractorSection::Form(s.partial(d)),
            TractorSection::Spin(s) => TractorSection::Spin(s.partial(d)),
        }
    }
}

/// The slots of a form tractor in `Λ^{k+1} T` under the splitting:
/// `top_A = Φ^{ρA}`, `middle_{A'} = Φ^{A'}`, `middle_low_B = Φ^{σρB}`,
/// `bottom_A = Φ^{σA}` (labels in the listed order).
#[derive(Clone, Debug)]
pub struct FormSlots {
    pub k: usize,
    pub top: Skew,
    pub middle: Skew,
    pub middle_low: Option<Skew>,
    pub bottom: Skew,
}

fn shifted(labels: &[usize]) -> Vec<usize> {
    labels.iter().map(|&a| mu(a)).collect()
}

pub fn form_slots(phi: &Skew) -> FormSlots {
    let n = phi.dim() - 2;
    let k = phi.rank() - 1;
    let sig = n + 1;
    let (vars, order) = (phi.vars(), phi.order());
    let fill = |rank: usize, prefix: &[usize]| {
        let sub = subsets(n, rank);
        let comps = (0..sub.len())
            .map(|i| {
                let mut l = prefix.to_vec();
                l.extend(shifted(&sub.labels(i)));
                phi.get(&l)
            })
            .collect();
        Skew::from_comps(n, rank, vars, order, comps)
    };
    FormSlots {
        k,
        top: fill(k, &[RHO]),
        middle: fill(k + 1, &[]),
        middle_low: if k >= 1 { Some(fill(k - 1, &[sig, RHO])) } else { None },
        bottom: fill(k, &[sig]),
    }
}

pub fn from_form_slots(slots: &FormSlots, n: usize) -> Skew {
    let k = slots.k;
    let sig = n + 1;
    let mut phi = Skew::zero(n + 2, k + 1, slots.bottom.vars(), slots.bottom.order());
    let mut put = |s: &Skew, prefix: &[usize]| {
        let sub = s.subsets();
        for i in 0..sub.len() {
            let mut l = prefix.to_vec();
            l.extend(shifted(&sub.labels(i)));
            phi.add_at(&l, 1.0, &s.comps()[i]);
        }
    };
    put(&slots.top, &[RHO]);
    put(&slots.middle, &[]);
    if let Some(m) = &slots.middle_low {
        put(m, &[sig, RHO]);
    }
    put(&slots.bottom, &[sig]);
    phi
}

/// Projection to the bottom slot.
pub fn pi0(s: &TractorSection) -> Result<TractorBottom> {
    match s {
        TractorSection::Form(phi) => Ok(TractorBottom::Form(form_slots(phi).bottom)),
        TractorSection::Spin(x) => Ok(TractorBottom::Spinor(x.chi.clone())),
    }
}

#[derive(Clone, Debug)]
pub enum TractorBottom {
    Form(Skew),
    Spinor(Spinor),
}

/// `h(s, t)` for standard tractors.
pub fn tractor_metric_h(pt: &Point, s: &TractorSection, t: &TractorSection) -> Result<Jet> {
    let (r1, m1, s1) = s.standard_slots()?;
    let (r2, m2, s2) = t.standard_slots()?;
    let mut h = &(&r1 * &s2) + &(&s1 * &r2);
    for a in 0..pt.n() {
        for b in 0..pt.n() {
            h += &(&pt.geo.ginv[a][b] * &(&m1[a] * &m2[b]));
        }
    }
    Ok(h)
}

fn h_entries(pt: &Point, inverse: bool) -> Vec<Vec<Option<Jet>>> {
    let n = pt.n();
    let l = n + 2;
    let mut m = vec![vec![None; l]; l];
    m[RHO][n + 1] = Some(pt.one());
    m[n + 1][RHO] = Some(pt.one());
    for a in 0..n {
        for b in 0..n {
            let e = if inverse { &pt.geo.g[a][b] } else { &pt.geo.ginv[a][b] };
            if e.max_abs() != 0.0 {
                m[mu(a)][mu(b)] = Some(e.clone());
            }
        }
    }
    m
}

/// Index lowering with `h` on `Λ^r T`.
pub fn lower(pt: &Point, phi: &Skew) -> Skew {
    phi.lambda_map(&h_entries(pt, false))
}

/// Index raising with `h^{-1}` on `Λ^r T`.
pub fn raise(pt: &Point, phi: &Skew) -> Skew {
    phi.lambda_map(&h_entries(pt, true))
}

/// Tractor Clifford action of the basis tractor with label `l`.
fn gamma_label(pt: &Point, l: usize, x: &SpinTractor) -> Result<SpinTractor> {
    let n = pt.n();
    if l == RHO {
        return Ok(SpinTractor { tau: x.chi.iter().map(|j| j.scale(SQRT_2)).collect(), chi: zero_like(&x.chi) });
    }
    if l == n + 1 {
        return Ok(SpinTractor { tau: zero_like(&x.tau), chi: x.tau.iter().map(|j| j.scale(-SQRT_2)).collect() });
    }
    let sp = pt.spin()?;
    let g = &sp.gamma_upper[l - 1];
    Ok(SpinTractor { tau: g.apply(&x.tau).iter().map(|j| -j).collect(), chi: g.apply(&x.chi) })
}

fn zero_like(v: &[Jet]) -> Spinor {
    v.iter().map(|j| Jet::zero(j.dim(), j.order())).collect()
}

/// `t · X` for a standard tractor `t = (ρ, μ, σ)`:
/// `(-μ·τ + √2 ρ χ, μ·χ - √2 σ τ)`.
pub fn tractor_clifford(pt: &Point, t: &TractorSection, x: &TractorSection) -> Result<TractorSection> {
    let (rho, mu_, sigma) = t.standard_slots()?;
    let x = x.as_spin()?;
    let sp = pt.spin()?;
    let mt = sp.vector_mult(&mu_, &x.tau);
    let mc = sp.vector_mult(&mu_, &x.chi);
    let tau = mt.iter().zip(&x.chi).map(|(a, c)| &(c * &rho).scale(SQRT_2) - a).collect();
    let chi = mc.iter().zip(&x.tau).map(|(a, t)| a - &(t * &sigma).scale(SQRT_2)).collect();
    Ok(TractorSection::Spin(SpinTractor { tau, chi }))
}

/// `Γ_[l0 ... lr] X`, the antisymmetrized product of label actions.
pub fn skew_gamma(pt: &Point, labels: &[usize], x: &SpinTractor) -> Result<SpinTractor> {
    let perms = crate::clifford::permutations(labels.len());
    let count = perms.len() as f64;
    let mut acc: Option<SpinTractor> = None;
    for (perm, sign) in perms {
        let mut y = x.clone();
        for &i in perm.iter().rev() {
            y = gamma_label(pt, labels[i], &y)?;
        }
        let y = y.scale(sign / count);
        acc = Some(match acc {
            None => y,
            Some(a) => a.add(&y),
        });
    }
    Ok(acc.expect("nonempty permutation set"))
}

/// `Φ · X = Σ_{S sorted} Φ^S Γ_[S] X` for a form tractor `Φ`.
pub fn form_clifford(pt: &Point, phi: &TractorSection, x: &TractorSection) -> Result<TractorSection> {
    let phi = phi.as_form()?;
    let x = x.as_spin()?;
    let sub = phi.subsets();
    let order = phi.order().min(x.order());
    let mut acc = SpinTractor::zero(x.tau.len(), pt.n(), order);
    for i in 0..sub.len() {
        let c = &phi.comps()[i];
        if c.max_abs() == 0.0 {
            continue;
        }
        let y = skew_gamma(pt, &sub.labels(i), x)?;
        acc = acc.add(&y.mul_jet(c));
    }
    Ok(TractorSection::Spin(acc))
}

/// `B((τ,χ),(τ',χ')) = b(χ,τ') + (-1)^{p+1} b(τ,χ')`.
pub fn tractor_pairing_b(pt: &Point, x: &TractorSection, y: &TractorSection) -> Result<Jet> {
    let (x, y) = (x.as_spin()?, y.as_spin()?);
    let sp = pt.spin()?;
    let b = &sp.structure;
    let s = -pt.geo.signature.parity();
    Ok(&b.pair(&x.chi, &y.tau) + &b.pair(&x.tau, &y.chi).scale(s))
}

/// Action of a 1-form `υ` (coordinate components) of the nilpotent part.
pub fn g1_action(pt: &Point, upsilon: &[Jet], s: &TractorSection) -> Result<TractorSection> {
    let n = pt.n();
    match s {
        TractorSection::Form(phi) => {
            let mut entries: Vec<SparseEntry> = Vec::new();
            for b in 0..n {
                let mut up = pt.zero(upsilon[0].order().min(pt.order()));
                for c in 0..n {
                    up += &(&pt.geo.ginv[b][c] * &upsilon[c]);
                }
                if up.max_abs() != 0.0 {
                    entries.push((RHO, mu(b), -up));
                }
                if upsilon[b].max_abs() != 0.0 {
                    entries.push((mu(b), n + 1, upsilon[b].clone()));
                }
            }
            Ok(TractorSection::Form(phi.derive(&entries)))
        }
        TractorSection::Spin(x) => {
            let sp = pt.spin()?;
            let tau = sp.vector_mult(upsilon, &x.chi).iter().map(|j| j.scale(1.0 / SQRT_2)).collect();
            Ok(TractorSection::Spin(SpinTractor { tau, chi: zero_like(&x.chi) }))
        }
    }
}

/// `∇_a s` in coordinate direction `a`.
pub fn connection(pt: &Point, a: usize, s: &TractorSection) -> Result<TractorSection> {
    if s.order() == 0 {
        return Err(Error::OrderExhausted);
    }
    match s {
        TractorSection::Form(phi) => {
            let d = phi.partial(a);
            let m = phi.derive(pt.standard_connection(a));
            Ok(TractorSection::Form(d.add(&m)))
        }
        TractorSection::Spin(x) => {
            let sp = pt.spin()?;
            let dt = sp.covariant_derivative(&x.tau)?.swap_remove(a);
            let dc = sp.covariant_derivative(&x.chi)?.swap_remove(a);
            let prow: Vec<Jet> = pt.geo.curvature.schouten[a].clone();
            let pg = sp.vector_mult(&prow, &x.chi);
            let gt = sp.gamma_lower[a].apply(&x.tau);
            let tau = dt.iter().zip(&pg).map(|(d, p)| d + &p.scale(1.0 / SQRT_2)).collect();
            let chi = dc.iter().zip(&gt).map(|(d, g)| d + &g.scale(1.0 / SQRT_2)).collect();
            Ok(TractorSection::Spin(SpinTractor { tau, chi }))
        }
    }
}

/// Tractor-valued differential form of degree `degree`, components stored
/// per sorted coordinate index set.
#[derive(Clone, Debug)]
pub struct TractorValuedForm {
    pub n: usize,
    pub degree: usize,
    pub comps: Vec<TractorSection>,
}

impl TractorValuedForm {
    pub fn get(&self, labels: &[usize]) -> Option<(f64, &TractorSection)> {
        let (mask, sign) = crate::skew::sort_sign(labels)?;
        let i = subsets(self.n, self.degree).index_of(mask)?;
        Some((sign, &self.comps[i]))
    }

    pub fn max_abs_value(&self) -> f64 {
        self.comps.iter().fold(0.0, |m, c| m.max(c.max_abs_value()))
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().fold(0.0, |m, c| m.max(c.max_abs()))
    }
}

/// `∇s` as a tractor-valued 1-form.
pub fn connection_form(pt: &Point, s: &TractorSection) -> Result<TractorValuedForm> {
    let comps = (0..pt.n()).map(|a| connection(pt, a, s)).collect::<Result<Vec<_>>>()?;
    Ok(TractorValuedForm { n: pt.n(), degree: 1, comps })
}

/// Kostant codifferential `(∂*φ)(ξ..) = Σ_p dx^p • φ(∂_p, ξ..)`.
pub fn kostant_codiff(pt: &Point, phi: &TractorValuedForm) -> Result<TractorValuedForm> {
    if phi.degree == 0 {
        return Err(Error::InvalidKind("codifferential of a degree 0 form".into()));
    }
    let n = phi.n;
    let out_sub = subsets(n, phi.degree - 1);
    let mut comps = Vec::with_capacity(out_sub.len());
    for i in 0..out_sub.len() {
        let rest = out_sub.labels(i);
        let mut acc: Option<TractorSection> = None;
        for p in 0..n {
            let mut labels = vec![p];
            labels.extend(&rest);
            let Some((sign, comp)) = phi.get(&labels) else { continue };
            let mut ups = vec![pt.zero(pt.order()); n];
            ups[p] = pt.one();
            let term = g1_action(pt, &ups, comp)?.scale(sign);
            acc = Some(match acc {
                None => term,
                Some(a) => a.add(&term)?,
            });
        }
        comps.push(acc.ok_or_else(|| Error::InvalidKind("empty codifferential".into()))?);
    }
    Ok(TractorValuedForm { n, degree: phi.degree - 1, comps })
}

/// `K(∂_i, ∂_j) • s = ∇_i ∇_j s - ∇_j ∇_i s`.
pub fn tractor_curvature(pt: &Point, s: &TractorSection, i: usize, j: usize) -> Result<TractorSection> {
    let a = connection(pt, i, &connection(pt, j, s)?)?;
    let b = connection(pt, j, &connection(pt, i, s)?)?;
    a.sub(&b)
}

/// The curvature action on `s` as a tractor-valued 2-form.
pub fn curvature_form(pt: &Point, s: &TractorSection) -> Result<TractorValuedForm> {
    let n = pt.n();
    let sub = subsets(n, 2);
    let first: Vec<TractorSection> = (0..n).map(|a| connection(pt, a, s)).collect::<Result<_>>()?;
    let comps = (0..sub.len())
        .map(|idx| {
            let l = sub.labels(idx);
            let (i, j) = (l[0], l[1]);
            connection(pt, i, &first[j])?.sub(&connection(pt, j, &first[i])?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TractorValuedForm { n, degree: 2, comps })
}

/// `C^∧(s, s') = s ∧ s'`.
pub fn wedge(s: &TractorSection, t: &TractorSection) -> Result<TractorSection> {
    Ok(TractorSection::Form(s.as_form()?.wedge(t.as_form()?)))
}

/// Full contraction `(s ⌟ s')^J = Σ_{I ordered} s_I s'^{IJ}`.
pub fn contract(pt: &Point, s: &TractorSection, t: &TractorSection) -> Result<TractorSection> {
    let (s, t) = (s.as_form()?, t.as_form()?);
    if t.rank() < s.rank() {
        return Err(Error::Bundle("contraction needs rank(s) <= rank(s')".into()));
    }
    let low = lower(pt, s);
    let r = s.rank();
    let l = s.dim();
    let out_rank = t.rank() - r;
    let order = low.order().min(t.order());
    let mut out = Skew::zero(l, out_rank, pt.n(), order);
    let (si, so) = (subsets(l, r), subsets(l, out_rank));
    let fact = factorial(r);
    for (ii, &im) in si.masks().iter().enumerate() {
        let c = &low.comps()[ii];
        if c.max_abs() == 0.0 {
            continue;
        }
        for (jj, &jm) in so.masks().iter().enumerate() {
            if im & jm != 0 {
                continue;
            }
            let v = t.by_mask(im | jm);
            out.comps_mut()[jj].axpy(fact * merge_sign(im, jm), &(c * v));
        }
    }
    Ok(TractorSection::Form(out))
}

/// `C^k(X, X')`: the `(k+1)`-form tractor `Ψ` with
/// `h(Φ, Ψ) = B(Φ·X, X')`-type pairing, i.e. `Ψ_S = B(Γ_[S] X, X')` raised.
pub fn spinor_to_form(pt: &Point, x: &TractorSection, y: &TractorSection, rank: usize) -> Result<TractorSection> {
    let xs = x.as_spin()?;
    let l = pt.labels();
    let sub = subsets(l, rank);
    let mut comps = Vec::with_capacity(sub.len());
    for i in 0..sub.len() {
        let gx = skew_gamma(pt, &sub.labels(i), xs)?;
        comps.push(tractor_pairing_b(pt, &TractorSection::Spin(gx), y)?);
    }
    let order = comps.iter().map(Jet::order).min().unwrap_or(pt.order());
    let low = Skew::from_comps(l, rank, pt.n(), order, comps);
    Ok(TractorSection::Form(raise(pt, &low)))
}
