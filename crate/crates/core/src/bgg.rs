//! First BGG operators, splitting operators and the normality test for
//! almost Einstein scales, conformal Killing forms and twistor spinors.

use std::f64::consts::SQRT_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use crate::field::BggKind;
use crate::clifford::{add_spinor, spinor_max_abs, Spinor};
use crate::error::{Error, Result};
use crate::field::{FieldJet, PolyField};
use crate::forms::{self, alt_first, cov_d, cov_d_valued, insert, insert_vector, trace_first, FormOneForm};
use crate::geometry::{JetMat, MetricSpec};
use crate::jet::Jet;
use crate::point::Point;
use crate::skew::{subsets, Skew};
use crate::tractor::{
    connection_form, curvature_form, from_form_slots, kostant_codiff, FormSlots, SpinTractor, TractorSection,
};

/// Output of a first BGG operator.
#[derive(Clone, Debug)]
pub enum Theta0Output {
    /// Trace-free symmetric `n × n`.
    Symmetric(JetMat),
    Form(FormOneForm),
    Spinor(Vec<Spinor>),
}

impl Theta0Output {
    pub fn max_abs_value(&self) -> f64 {
        match self {
            Theta0Output::Symmetric(m) => m.iter().flatten().fold(0.0, |a, j| a.max(j.value().abs())),
            Theta0Output::Form(t) => forms::max_abs_value(t),
            Theta0Output::Spinor(s) => s.iter().flatten().fold(0.0, |a, j| a.max(j.value().abs())),
        }
    }
}

fn require_order(pt: &Point, have: usize, need: usize) -> Result<()> {
    pt.geo.require_order(have, need)
}

/// `tf(DDσ + Pσ)`.
pub fn theta0_aes(pt: &Point, sigma: &Skew) -> Result<JetMat> {
    if sigma.rank() != 0 {
        return Err(Error::InvalidKind("almost Einstein scales are functions".into()));
    }
    require_order(pt, sigma.order(), 2)?;
    let n = pt.n();
    let geo = &pt.geo;
    let dd = cov_d_valued(geo, &cov_d(geo, sigma));
    let s = &sigma.comps()[0];
    let mut m: JetMat =
        (0..n).map(|a| (0..n).map(|b| &dd[a][b].comps()[0] + &(&geo.curvature.schouten[a][b] * s)).collect()).collect();
    let mut tr = pt.zero(m[0][0].order());
    for a in 0..n {
        for b in 0..n {
            tr += &(&geo.ginv[a][b] * &m[a][b]);
        }
    }
    let tr = tr.scale(1.0 / n as f64);
    for (a, row) in m.iter_mut().enumerate() {
        for (b, e) in row.iter_mut().enumerate() {
            *e -= &(&geo.g[a][b] * &tr);
        }
    }
    Ok(m)
}

/// `D_c σ_A - D_[c σ_A] - (k/(n-k+1)) g_c[a_1 δ̃σ_{a_2..a_k]}`.
pub fn theta0_ckf(pt: &Point, sigma: &Skew) -> Result<FormOneForm> {
    let k = sigma.rank();
    if k == 0 || k >= pt.n() {
        return Err(Error::InvalidKind(format!("conformal Killing {k}-form in dimension {}", pt.n())));
    }
    require_order(pt, sigma.order(), 1)?;
    Ok(forms::proj_hw(&pt.geo, &cov_d(&pt.geo, sigma)))
}

/// `D_c χ + (1/n) γ_c ∇̸χ`.
pub fn theta0_twistor(pt: &Point, chi: &[Jet]) -> Result<Vec<Spinor>> {
    let sp = pt.spin()?;
    let d = sp.covariant_derivative(chi)?;
    proj_hw_spinor(pt, &d)
}

/// `φ_c ↦ φ_c + (1/n) γ_c γ^p φ_p`.
pub fn proj_hw_spinor(pt: &Point, phi: &[Spinor]) -> Result<Vec<Spinor>> {
    let sp = pt.spin()?;
    let tr = sp.contract_upper(phi);
    let w = 1.0 / pt.n() as f64;
    Ok(phi
        .iter()
        .enumerate()
        .map(|(c, p)| {
            let g: Spinor = sp.gamma_lower[c].apply(&tr).iter().map(|j| j.scale(w)).collect();
            add_spinor(p, &g)
        })
        .collect())
}

pub fn theta0(pt: &Point, kind: BggKind, jet: &FieldJet) -> Result<Theta0Output> {
    Ok(match kind {
        BggKind::AlmostEinsteinScale => Theta0Output::Symmetric(theta0_aes(pt, jet.as_form()?)?),
        BggKind::ConformalKillingForm { .. } => Theta0Output::Form(theta0_ckf(pt, jet.as_form()?)?),
        BggKind::TwistorSpinor => Theta0Output::Spinor(theta0_twistor(pt, jet.as_spinor()?)?),
    })
}

/// Splitting operator of `Λ^{k+1} T` applied to a `k`-form; `k = 0` is the
/// standard tractor of a density.
pub fn split_form(pt: &Point, sigma: &Skew) -> Result<Skew> {
    let geo = &pt.geo;
    let n = pt.n();
    let k = sigma.rank();
    if k >= n {
        return Err(Error::InvalidKind(format!("{k}-form in dimension {n}")));
    }
    require_order(pt, sigma.order(), 2)?;
    let (nf, kf) = (n as f64, k as f64);
    let d1 = cov_d(geo, sigma);
    let dd = cov_d_valued(geo, &d1);
    let mut lap = Skew::zero(n, k, n, dd[0][0].order());
    for p in 0..n {
        for r in 0..n {
            let g = &geo.ginv[p][r];
            if g.max_abs() != 0.0 {
                lap = lap.add(&dd[p][r].mul_jet(g));
            }
        }
    }
    let mut top = lap.scale(-1.0 / (nf * (kf + 1.0)));
    top = top.sub(&sigma.mul_jet(&geo.curvature.j).scale(1.0 / nf));
    if k >= 1 {
        let y: Vec<Skew> =
            (0..n).map(|a| sum_skews((0..n).map(|r| insert_vector(&geo.ginv[r], &dd[r][a])))).collect();
        let z: Vec<Skew> =
            (0..n).map(|a| sum_skews((0..n).map(|r| insert_vector(&geo.ginv[r], &dd[a][r])))).collect();
        let w: Vec<Skew> = (0..n).map(|a| insert_vector(&pt.schouten_up[a], sigma)).collect();
        top = top
            .add(&alt_first(&y).scale(kf / (nf * (kf + 1.0))))
            .add(&alt_first(&z).scale(kf / (nf * (nf - kf + 1.0))))
            .add(&alt_first(&w).scale(2.0 * kf / nf));
    }
    let middle = alt_first(&d1);
    let middle_low = if k >= 1 { Some(trace_first(geo, &d1).scale(-1.0 / (nf - kf + 1.0))) } else { None };
    let slots = FormSlots { k, top, middle, middle_low, bottom: sigma.clone() };
    Ok(from_form_slots(&slots, n))
}

fn sum_skews(mut it: impl Iterator<Item = Skew>) -> Skew {
    let first = it.next().expect("nonempty sum");
    it.fold(first, |acc, s| acc.add(&s))
}

/// `((√2/n) ∇̸χ, χ)`.
pub fn split_spinor(pt: &Point, chi: &[Jet]) -> Result<SpinTractor> {
    let sp = pt.spin()?;
    let w = SQRT_2 / pt.n() as f64;
    let tau = sp.dirac(chi)?.iter().map(|j| j.scale(w)).collect();
    Ok(SpinTractor { tau, chi: chi.to_vec() })
}

pub fn split_l0(pt: &Point, jet: &FieldJet) -> Result<TractorSection> {
    Ok(match jet {
        FieldJet::Form(s) => TractorSection::Form(split_form(pt, s)?),
        FieldJet::Spinor(c) => TractorSection::Spin(split_spinor(pt, c)?),
    })
}

fn weyl_up_last(pt: &Point) -> Vec<Vec<JetMat>> {
    // C_{abc}{}^p
    let n = pt.n();
    let cl = pt.geo.curvature.weyl_lowered(&pt.geo.g);
    (0..n)
        .map(|a| {
            (0..n)
                .map(|b| {
                    (0..n)
                        .map(|c| {
                            (0..n)
                                .map(|p| {
                                    let mut s = pt.zero(pt.order().saturating_sub(2));
                                    for d in 0..n {
                                        s += &(&cl[a][b][c][d] * &pt.geo.ginv[d][p]);
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
}

fn weyl_up_pair(pt: &Point, up_last: &[Vec<JetMat>]) -> Vec<Vec<JetMat>> {
    // C_{ab}{}^{pq}
    let n = pt.n();
    (0..n)
        .map(|a| {
            (0..n)
                .map(|b| {
                    (0..n)
                        .map(|p| {
                            (0..n)
                                .map(|q| {
                                    let mut s = pt.zero(pt.order().saturating_sub(2));
                                    for e in 0..n {
                                        s += &(&up_last[a][b][e][q] * &pt.geo.ginv[e][p]);
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
}

/// Alternation of `X(i, j; rest)`, skew in `(i, j)` and in `rest`, over a
/// sorted index set of size `r`.
fn alt_pair_rest(n: usize, r: usize, vars: usize, order: usize, x: impl Fn(usize, usize, &[usize]) -> Jet) -> Skew {
    let sub = subsets(n, r);
    let w = 2.0 / (r * (r - 1)) as f64;
    let comps = (0..sub.len())
        .map(|s| {
            let l = sub.labels(s);
            let mut acc = Jet::zero(vars, order);
            for i in 0..r {
                for j in (i + 1)..r {
                    let rest: Vec<usize> = l.iter().enumerate().filter(|(t, _)| *t != i && *t != j).map(|(_, &v)| v).collect();
                    let sign = if (i + j - 1) % 2 == 0 { w } else { -w };
                    acc.axpy(sign, &x(l[i], l[j], &rest));
                }
            }
            acc
        })
        .collect();
    Skew::from_comps(n, r, vars, order, comps)
}

/// Lowest-homogeneity part `(L(σ), R(σ))` of the prolongation connection on
/// `Λ^{k+1} T`, indexed by the 1-form index `c`.
pub fn psi_lowest(pt: &Point, sigma: &Skew) -> Result<(FormOneForm, FormOneForm)> {
    let n = pt.n();
    let k = sigma.rank();
    if k == 0 || k >= n {
        return Err(Error::InvalidKind(format!("prolongation term of a {k}-form")));
    }
    let (nf, kf) = (n as f64, k as f64);
    let up1 = weyl_up_last(pt);
    let up2 = weyl_up_pair(pt, &up1);
    let order = sigma.order().min(pt.order().saturating_sub(2));
    let vars = n;
    // i_q i_p σ = σ_{pq..}
    let ipq: Vec<Vec<Option<Skew>>> = (0..n)
        .map(|p| {
            (0..n)
                .map(|q| if k >= 2 { Some(insert(&insert(sigma, p), q)) } else { None })
                .collect()
        })
        .collect();
    let contract2 = |a: usize, b: usize| -> Skew {
        // C_{ab}{}^{pq} σ_{pq..}
        let mut acc = Skew::zero(n, k - 2, vars, order);
        for p in 0..n {
            for q in 0..n {
                let c = &up2[a][b][p][q];
                if c.max_abs() != 0.0 {
                    acc = acc.add(&ipq[p][q].as_ref().expect("k >= 2").mul_jet(c));
                }
            }
        }
        acc
    };
    let pair_terms: Option<Vec<Vec<Skew>>> =
        if k >= 2 { Some((0..n).map(|a| (0..n).map(|b| contract2(a, b)).collect()).collect()) } else { None };
    let l: FormOneForm = (0..n)
        .map(|c| {
            let v: Vec<Vec<Skew>> =
                (0..n).map(|a| (0..n).map(|b| insert_vector(&up1[a][b][c], sigma)).collect()).collect();
            let mut out = alt_pair_rest(n, k + 1, vars, order, |i, j, rest| v[i][j].get(rest)).scale((kf + 1.0) / 2.0);
            if let Some(pt_) = &pair_terms {
                let wform = if k >= 2 {
                    alt_pair_rest(n, k, vars, order, |i, j, rest| pt_[i][j].get(rest))
                } else {
                    unreachable!()
                };
                let xs: Vec<Skew> = (0..n).map(|a| wform.mul_jet(&pt.geo.g[c][a])).collect();
                out = out.add(&alt_first(&xs).scale((kf - 1.0) * (kf + 1.0) / (2.0 * nf)));
            }
            out
        })
        .collect();
    let r: FormOneForm = (0..n)
        .map(|c| {
            let mut out = Skew::zero(n, k - 1, vars, order);
            if let Some(pt_) = &pair_terms {
                let u: Vec<Skew> = (0..n).map(|a| pt_[c][a].clone()).collect();
                out = out.add(&alt_first(&u).scale((kf - 1.0) * (nf - 2.0) / (2.0 * (nf - kf) * nf)));
            }
            if k >= 3 {
                let ic = insert(sigma, c);
                let w: Vec<Vec<Skew>> = (0..n)
                    .map(|a| {
                        (0..n)
                            .map(|b| {
                                let mut acc = Skew::zero(n, k - 3, vars, order);
                                for p in 0..n {
                                    let ip = insert(&ic, p);
                                    for q in 0..n {
                                        let cc = &up2[a][b][p][q];
                                        if cc.max_abs() != 0.0 {
                                            acc = acc.add(&insert(&ip, q).mul_jet(cc));
                                        }
                                    }
                                }
                                acc
                            })
                            .collect()
                    })
                    .collect();
                let t = alt_pair_rest(n, k - 1, vars, order, |i, j, rest| w[i][j].get(rest));
                out = out.sub(&t.scale((kf - 1.0) * (kf - 2.0) / (2.0 * (nf - kf) * nf)));
            }
            out
        })
        .collect();
    Ok((l, r))
}

/// `∂*(∇ L₀σ)`, which vanishes for every input.
pub fn l0_defect(pt: &Point, jet: &FieldJet) -> Result<f64> {
    let s = split_l0(pt, jet)?;
    let d = kostant_codiff(pt, &connection_form(pt, &s)?)?;
    Ok(d.max_abs_value())
}

/// `∇ L₀σ` at the point.
pub fn parallel_residual(pt: &Point, jet: &FieldJet) -> Result<f64> {
    let s = split_l0(pt, jet)?;
    Ok(connection_form(pt, &s)?.max_abs_value())
}

/// `∂*(K • L₀σ)` at the point.
pub fn normality_defect(pt: &Point, jet: &FieldJet) -> Result<f64> {
    let s = split_l0(pt, jet)?;
    let k = curvature_form(pt, &s)?;
    Ok(kostant_codiff(pt, &k)?.max_abs_value())
}

/// Largest absolute jet coefficient of the input, the reference scale for
/// relative residuals.
pub fn input_scale(jet: &FieldJet) -> f64 {
    match jet {
        FieldJet::Form(s) => s.max_abs(),
        FieldJet::Spinor(c) => spinor_max_abs(c),
    }
}

pub fn relative(abs: f64, scale: f64) -> f64 {
    abs / scale.max(1e-12)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Equation {
    Theta0,
    Normality,
    Parallel,
    SplittingDefect,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub equation: Equation,
    pub kind: BggKind,
    pub points: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub max_relative: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ResidualReport {
    pub fn verdict(&self) -> &'static str {
        match (self.equation, self.pass) {
            (Equation::Normality, true) => "normal",
            (Equation::Normality, false) => "non-normal",
            (_, true) => "pass",
            (_, false) => "fail",
        }
    }
}

/// Options shared by the batch evaluators.
#[derive(Clone, Copy, Debug)]
pub struct EvalOptions {
    pub order: usize,
    pub tolerance: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { order: crate::jet::DEFAULT_ORDER, tolerance: 1e-8 }
    }
}

/// Absolute residual of one equation for a field jet at a point.
pub fn equation_residual(pt: &Point, kind: BggKind, jet: &FieldJet, equation: Equation) -> Result<f64> {
    match equation {
        Equation::Theta0 => Ok(theta0(pt, kind, jet)?.max_abs_value()),
        Equation::Normality => normality_defect(pt, jet),
        Equation::Parallel => parallel_residual(pt, jet),
        Equation::SplittingDefect => l0_defect(pt, jet),
    }
}

/// Builds the evaluation points, in parallel.
pub fn points_at(metric: &MetricSpec, xs: &[Vec<f64>], order: usize) -> Result<Vec<Point>> {
    xs.par_iter().map(|x| Point::with_optional_spin(metric, x, order)).collect()
}

/// Residual report on prebuilt points.
pub fn residual_report(points: &[Point], field: &PolyField, equation: Equation, opts: EvalOptions) -> Result<ResidualReport> {
    let rows: Vec<(f64, f64)> = points
        .par_iter()
        .map(|pt| {
            let jet = field.jet_at(&pt.geo.x0, opts.order)?;
            Ok((equation_residual(pt, field.kind, &jet, equation)?, input_scale(&jet)))
        })
        .collect::<Result<Vec<_>>>()?;
    let residuals: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let max_relative = rows.iter().map(|&(a, s)| relative(a, s)).fold(0.0, f64::max);
    let mut rep = ResidualReport {
        equation,
        kind: field.kind,
        points: points.iter().map(|p| p.geo.x0.clone()).collect(),
        residuals,
        max_relative,
        tolerance: opts.tolerance,
        pass: max_relative < opts.tolerance,
        note: None,
    };
    if equation == Equation::Normality {
        let pre = residual_report(points, field, Equation::Theta0, opts)?;
        if !pre.pass {
            rep.pass = false;
            rep.note = Some("not a solution".into());
        }
    }
    Ok(rep)
}

fn batch(
    metric: &MetricSpec,
    field: &PolyField,
    points: &[Vec<f64>],
    opts: EvalOptions,
    equation: Equation,
) -> Result<ResidualReport> {
    residual_report(&points_at(metric, points, opts.order)?, field, equation, opts)
}

/// `Θ₀` residual of a candidate on a set of points.
pub fn solution_residual(
    metric: &MetricSpec,
    field: &PolyField,
    points: &[Vec<f64>],
    opts: EvalOptions,
) -> Result<ResidualReport> {
    batch(metric, field, points, opts, Equation::Theta0)
}

/// Normality of a certified solution, `∂*(K • L₀σ) = 0`. Fails with a note
/// when the `Θ₀` pre-test fails.
pub fn normality_check(
    metric: &MetricSpec,
    field: &PolyField,
    points: &[Vec<f64>],
    opts: EvalOptions,
) -> Result<ResidualReport> {
    batch(metric, field, points, opts, Equation::Normality)
}

/// `∇ L₀σ` residual on a set of points.
pub fn parallel_check(
    metric: &MetricSpec,
    field: &PolyField,
    points: &[Vec<f64>],
    opts: EvalOptions,
) -> Result<ResidualReport> {
    batch(metric, field, points, opts, Equation::Parallel)
}

/// `∂*(∇ L₀σ)` residual on a set of points.
pub fn splitting_check(
    metric: &MetricSpec,
    field: &PolyField,
    points: &[Vec<f64>],
    opts: EvalOptions,
) -> Result<ResidualReport> {
    batch(metric, field, points, opts, Equation::SplittingDefect)
}
