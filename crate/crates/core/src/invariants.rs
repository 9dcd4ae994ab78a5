//! Structural invariant suite on random data: Clifford and pairing
//! identities, the nilpotent action, `∂*² = 0`, metricity, Leibniz rules,
//! the curvature/Weyl relation and the splitting-operator property.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bgg::{self, EvalOptions};
use crate::clifford::SpinStructure;
use crate::error::{Error, Result};
use crate::field::BggKind;
use crate::geometry::MetricSpec;
use crate::jet::Jet;
use crate::point::{mu, Point};
use crate::random;
use crate::skew::subsets;
use crate::tractor::{self, TractorSection, TractorValuedForm};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantResult {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl InvariantResult {
    fn new(name: &str, residual: f64, tolerance: f64) -> Self {
        InvariantResult { name: name.into(), residual, tolerance, pass: residual < tolerance, detail: None }
    }

    fn with_detail(mut self, d: impl Into<String>) -> Self {
        self.detail = Some(d.into());
        self
    }

    fn error(name: &str, e: &Error) -> Self {
        InvariantResult { name: name.into(), residual: f64::INFINITY, tolerance: 0.0, pass: false, detail: Some(e.to_string()) }
    }
}

/// Settings for [`suite`].
#[derive(Clone, Copy, Debug)]
pub struct SuiteOptions {
    pub seed: u64,
    pub trials: usize,
    pub order: usize,
    /// Random fields per kind for the splitting check.
    pub fields: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { seed: 0, trials: 10, order: 4, fields: 4 }
    }
}

fn max_diff(a: &TractorSection, b: &TractorSection) -> Result<f64> {
    Ok(a.sub(b)?.max_abs())
}

fn rng_for(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Runs `f` on `trials` sample points in parallel and keeps the worst residual.
fn over_points(
    metric: &MetricSpec,
    opts: SuiteOptions,
    salt: u64,
    f: impl Fn(&Point, &mut ChaCha8Rng) -> Result<f64> + Sync,
) -> Result<f64> {
    let pts = metric.sample_points(opts.trials, opts.seed ^ salt);
    let r = pts
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let pt = Point::with_optional_spin(metric, x, opts.order)?;
            let mut rng = rng_for(opts.seed, salt.wrapping_add(i as u64 * 7919));
            f(&pt, &mut rng)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(r.into_iter().fold(0.0, f64::max))
}

fn spin_dim(pt: &Point) -> Result<usize> {
    Ok(pt.spin()?.dim())
}

/// `t₁·(t₂·X) + t₂·(t₁·X) + 2h(t₁,t₂)X`.
pub fn clifford_relation(pt: &Point, rng: &mut ChaCha8Rng) -> Result<f64> {
    let d = spin_dim(pt)?;
    let t1 = random::form_tractor(rng, pt, 1);
    let t2 = random::form_tractor(rng, pt, 1);
    let x = random::spin_tractor(rng, pt, d);
    let a = tractor::tractor_clifford(pt, &t1, &tractor::tractor_clifford(pt, &t2, &x)?)?;
    let b = tractor::tractor_clifford(pt, &t2, &tractor::tractor_clifford(pt, &t1, &x)?)?;
    let h = tractor::tractor_metric_h(pt, &t1, &t2)?;
    Ok(a.add(&b)?.add(&x.mul_jet(&h.scale(2.0)))?.max_abs())
}

/// `B(t·X, Y) + (-1)^p B(X, t·Y)`.
pub fn pairing_invariance(pt: &Point, rng: &mut ChaCha8Rng) -> Result<f64> {
    let d = spin_dim(pt)?;
    let t = random::form_tractor(rng, pt, 1);
    let x = random::spin_tractor(rng, pt, d);
    let y = random::spin_tractor(rng, pt, d);
    let l = tractor::tractor_pairing_b(pt, &tractor::tractor_clifford(pt, &t, &x)?, &y)?;
    let r = tractor::tractor_pairing_b(pt, &x, &tractor::tractor_clifford(pt, &t, &y)?)?;
    Ok((&l + &r.scale(pt.geo.signature.parity())).max_abs())
}

/// `h(υ•s, t) + h(s, υ•t)` on standard tractors.
pub fn g1_skew(pt: &Point, rng: &mut ChaCha8Rng) -> Result<f64> {
    let u = random::covector(rng, pt);
    let s = random::form_tractor(rng, pt, 1);
    let t = random::form_tractor(rng, pt, 1);
    let a = tractor::tractor_metric_h(pt, &tractor::g1_action(pt, &u, &s)?, &t)?;
    let b = tractor::tractor_metric_h(pt, &s, &tractor::g1_action(pt, &u, &t)?)?;
    Ok((&a + &b).max_abs())
}

fn random_section(pt: &Point, rng: &mut ChaCha8Rng, bundle: usize) -> Result<TractorSection> {
    Ok(match bundle {
        0 => random::form_tractor(rng, pt, 1),
        1 => random::form_tractor(rng, pt, 2),
        _ => random::spin_tractor(rng, pt, spin_dim(pt)?),
    })
}

fn bundles(pt: &Point) -> usize {
    if pt.spin.is_some() {
        3
    } else {
        2
    }
}

/// `υ•υ'• - υ'•υ•` and `υ•υ•υ•` on standard, 2-form and spin tractors.
pub fn g1_abelian_nilpotent(pt: &Point, rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for bundle in 0..bundles(pt) {
        let s = random_section(pt, rng, bundle)?;
        let u = random::covector(rng, pt);
        let v = random::covector(rng, pt);
        let act = |w: &[Jet], s: &TractorSection| tractor::g1_action(pt, w, s);
        let uv = act(&u, &act(&v, &s)?)?;
        let vu = act(&v, &act(&u, &s)?)?;
        worst = worst.max(max_diff(&uv, &vu)?);
        worst = worst.max(act(&u, &act(&u, &act(&u, &s)?)?)?.max_abs());
    }
    Ok(worst)
}

fn random_two_form(pt: &Point, rng: &mut ChaCha8Rng, bundle: usize) -> Result<TractorValuedForm> {
    let n = pt.n();
    let comps = (0..subsets(n, 2).len()).map(|_| random_section(pt, rng, bundle)).collect::<Result<_>>()?;
    Ok(TractorValuedForm { n, degree: 2, comps })
}

/// `∂*∂*φ` for random tractor-valued 2-forms.
pub fn codiff_squared(pt: &Point, rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for bundle in 0..bundles(pt) {
        let phi = random_two_form(pt, rng, bundle)?;
        let once = tractor::kostant_codiff(pt, &phi)?;
        worst = worst.max(tractor::kostant_codiff(pt, &once)?.max_abs());
    }
    Ok(worst)
}

/// `∂_a h(s,t) - h(∇_a s, t) - h(s, ∇_a t)`, and the same for `B` on spin
/// tractors.
pub fn metricity(pt: &Point, rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst: f64 = 0.0;
    let s = random::form_tractor(rng, pt, 1);
    let t = random::form_tractor(rng, pt, 1);
    let h = tractor::tractor_metric_h(pt, &s, &t)?;
    for a in 0..pt.n() {
        let ds = tractor::connection(pt, a, &s)?;
        let dt = tractor::connection(pt, a, &t)?;
        let rhs = &tractor::tractor_metric_h(pt, &ds, &t)? + &tractor::tractor_metric_h(pt, &s, &dt)?;
        worst = worst.max((&h.partial(a) - &rhs).max_abs());
    }
    if let Ok(d) = spin_dim(pt) {
        let x = random::spin_tractor(rng, pt, d);
        let y = random::spin_tractor(rng, pt, d);
        let b = tractor::tractor_pairing_b(pt, &x, &y)?;
        for a in 0..pt.n() {
            let dx = tractor::connection(pt, a, &x)?;
            let dy = tractor::connection(pt, a, &y)?;
            let rhs = &tractor::tractor_pairing_b(pt, &dx, &y)? + &tractor::tractor_pairing_b(pt, &x, &dy)?;
            worst = worst.max((&b.partial(a) - &rhs).max_abs());
        }
    }
    Ok(worst)
}

/// `∇(s ∧ t) - ∇s ∧ t - s ∧ ∇t` for a standard and a 2-form tractor.
pub fn leibniz_wedge(pt: &Point, rng: &mut ChaCha8Rng) -> Result<f64> {
    let s = random::form_tractor(rng, pt, 1);
    let t = random::form_tractor(rng, pt, 2);
    let st = tractor::wedge(&s, &t)?;
    let mut worst: f64 = 0.0;
    for a in 0..pt.n() {
        let lhs = tractor::connection(pt, a, &st)?;
        let r1 = tractor::wedge(&tractor::connection(pt, a, &s)?, &t)?;
        let r2 = tractor::wedge(&s, &tractor::connection(pt, a, &t)?)?;
        worst = worst.max(max_diff(&lhs, &r1.add(&r2)?)?);
    }
    Ok(worst)
}

/// `K(s ∧ t) - Ks ∧ t - s ∧ Kt` on standard tractors.
pub fn curvature_naturality(pt: &Point, rng: &mut ChaCha8Rng) -> Result<f64> {
    let s = random::form_tractor(rng, pt, 1);
    let t = random::form_tractor(rng, pt, 1);
    let st = tractor::wedge(&s, &t)?;
    let mut worst: f64 = 0.0;
    for i in 0..pt.n() {
        for j in (i + 1)..pt.n() {
            let lhs = tractor::tractor_curvature(pt, &st, i, j)?;
            let r1 = tractor::wedge(&tractor::tractor_curvature(pt, &s, i, j)?, &t)?;
            let r2 = tractor::wedge(&s, &tractor::tractor_curvature(pt, &t, i, j)?)?;
            worst = worst.max(max_diff(&lhs, &r1.add(&r2)?)?);
        }
    }
    Ok(worst)
}

/// Middle block of `K(∂_i, ∂_j)` on standard tractors against the Weyl
/// tensor: `(K_ij • (0, μ, 0))_c = -C_ij{}^d{}_c μ_d`.
pub fn curvature_weyl(pt: &Point) -> Result<f64> {
    let n = pt.n();
    let order = pt.order();
    let z = Jet::zero(n, order);
    let weyl = &pt.geo.curvature.weyl;
    let mut worst: f64 = 0.0;
    for d in 0..n {
        let mus: Vec<Jet> = (0..n).map(|a| if a == d { Jet::constant(n, order, 1.0) } else { z.clone() }).collect();
        let s = TractorSection::standard(&z, &mus, &z);
        for i in 0..n {
            for j in (i + 1)..n {
                let k = tractor::tractor_curvature(pt, &s, i, j)?;
                let k = k.as_form()?;
                for c in 0..n {
                    worst = worst.max((k.get(&[mu(c)]).value() + weyl[i][j][d][c].value()).abs());
                }
            }
        }
    }
    Ok(worst)
}

pub fn weyl_max(pt: &Point) -> f64 {
    pt.geo.curvature.weyl.iter().flatten().flatten().flatten().fold(0.0, |m, j| m.max(j.value().abs()))
}

/// Largest value of the tractor curvature on random standard tractors.
pub fn curvature_max(pt: &Point, rng: &mut ChaCha8Rng) -> Result<f64> {
    let s = random::form_tractor(rng, pt, 1);
    let form = tractor::curvature_form(pt, &s)?;
    Ok(form.max_abs_value())
}

/// `b^T = ±b`, with the sign found; the residual is the smaller of the
/// symmetric and skew parts.
pub fn pairing_symmetry(spin: &SpinStructure) -> InvariantResult {
    let b = &spin.b;
    let sym = (b - b.transpose()).amax();
    let skew = (b + b.transpose()).amax();
    let (res, which) = if sym <= skew { (sym, "symmetric") } else { (skew, "skew") };
    InvariantResult::new("pairing_symmetry", res, 1e-12).with_detail(format!("b is {which}"))
}

/// Random non-solution fields of every kind pass `∂*(∇ L₀σ) = 0`.
pub fn splitting_defect(metric: &MetricSpec, opts: SuiteOptions, tolerance: f64) -> Result<f64> {
    let n = metric.n();
    let spin = SpinStructure::shared(metric.signature).ok().map(|s| s.dim);
    let mut kinds = vec![BggKind::AlmostEinsteinScale, BggKind::ConformalKillingForm { k: 1 }];
    if n > 3 {
        kinds.push(BggKind::ConformalKillingForm { k: 2 });
    }
    if spin.is_some() {
        kinds.push(BggKind::TwistorSpinor);
    }
    let mut rng = rng_for(opts.seed, 0x5eed);
    let eval = EvalOptions { order: opts.order, tolerance };
    let points = metric.sample_points(opts.trials.min(5), opts.seed ^ 0x5eed);
    let mut worst: f64 = 0.0;
    for kind in kinds {
        for _ in 0..opts.fields {
            let f = random::field(&mut rng, kind, n, spin.unwrap_or(0));
            worst = worst.max(bgg::splitting_check(metric, &f, &points, eval)?.max_relative);
        }
    }
    Ok(worst)
}

fn record(name: &str, tol: f64, r: Result<f64>) -> InvariantResult {
    match r {
        Ok(v) => InvariantResult::new(name, v, tol),
        Err(e) => InvariantResult::error(name, &e),
    }
}

/// Every structural check that applies to the metric. Spin checks are
/// skipped without a spin structure.
pub fn suite(metric: &MetricSpec, opts: SuiteOptions) -> Vec<InvariantResult> {
    let spin = SpinStructure::shared(metric.signature).ok();
    let mut out = Vec::new();
    type Check = fn(&Point, &mut ChaCha8Rng) -> Result<f64>;
    let mut checks: Vec<(&str, f64, Check)> = Vec::new();
    if spin.is_some() {
        checks.push(("clifford_relation", 1e-10, clifford_relation));
        checks.push(("pairing_invariance", 1e-10, pairing_invariance));
    }
    checks.extend([
        ("g1_skew", 1e-10, g1_skew as Check),
        ("g1_abelian_nilpotent", 1e-10, g1_abelian_nilpotent),
        ("codiff_squared", 1e-12, codiff_squared),
        ("metricity", 1e-9, metricity),
        ("leibniz_wedge", 1e-9, leibniz_wedge),
        ("curvature_naturality", 1e-9, curvature_naturality),
    ]);
    for (i, (name, tol, f)) in checks.into_iter().enumerate() {
        out.push(record(name, tol, over_points(metric, opts, i as u64 + 1, f)));
    }
    out.push(record("curvature_weyl", 1e-7, over_points(metric, opts, 101, |pt, _| curvature_weyl(pt))));
    if let Some(s) = &spin {
        out.push(pairing_symmetry(s));
    }
    out.push(record("splitting_defect", 1e-8, splitting_defect(metric, opts, 1e-8)));
    out
}
