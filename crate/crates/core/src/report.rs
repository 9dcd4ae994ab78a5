//! Scenario runs and their reports.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bgg::{self, Equation, EvalOptions, ResidualReport};
use crate::coupling::{self, CouplingReport};
use crate::error::{Error, Result};
use crate::field::BggKind;
use crate::geometry::Signature;
use crate::invariants::{self, InvariantResult, SuiteOptions};
use crate::point::Point;
use crate::scenario::{self, Check, NamedField, Scenario};
use crate::skew::Skew;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldReport {
    pub name: String,
    pub kind: BggKind,
    pub checks: Vec<ResidualReport>,
    /// `Θ₀` and splitting checks pass, and normality agrees with
    /// parallelism when both are requested.
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl FieldReport {
    pub fn check(&self, equation: Equation) -> Option<&ResidualReport> {
        self.checks.iter().find(|c| c.equation == equation)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedCouplingReport {
    pub name: String,
    pub inputs: [String; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<CouplingReport>,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Curvature recorded at the sample points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureSummary {
    pub weyl_max: f64,
    pub tractor_curvature_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub scenario: String,
    pub signature: Signature,
    pub seed: u64,
    pub tolerance: f64,
    pub order: usize,
    pub points: Vec<Vec<f64>>,
    pub curvature: Option<CurvatureSummary>,
    pub fields: Vec<FieldReport>,
    pub couplings: Vec<NamedCouplingReport>,
    pub invariants: Vec<InvariantResult>,
    pub errors: Vec<String>,
    pub pass: bool,
}

fn equation_of(c: Check) -> Equation {
    match c {
        Check::Theta0 => Equation::Theta0,
        Check::Normality => Equation::Normality,
        Check::Parallel => Equation::Parallel,
        Check::Splitting => Equation::SplittingDefect,
    }
}

fn field_pass(checks: &[ResidualReport]) -> bool {
    let get = |e: Equation| checks.iter().find(|c| c.equation == e);
    let hard = checks
        .iter()
        .filter(|c| matches!(c.equation, Equation::Theta0 | Equation::SplittingDefect))
        .all(|c| c.pass);
    let agree = match (get(Equation::Normality), get(Equation::Parallel)) {
        (Some(a), Some(b)) => a.pass == b.pass,
        (None, Some(b)) => b.pass,
        _ => true,
    };
    hard && agree
}

fn run_field(points: &[Point], f: &NamedField, opts: EvalOptions) -> FieldReport {
    let checks: Result<Vec<ResidualReport>> =
        f.checks.iter().map(|&c| bgg::residual_report(points, &f.field, equation_of(c), opts)).collect();
    match checks {
        Ok(checks) => FieldReport { name: f.name.clone(), kind: f.field.kind, pass: field_pass(&checks), checks, error: None },
        Err(e) => FieldReport { name: f.name.clone(), kind: f.field.kind, checks: Vec::new(), pass: false, error: Some(e.to_string()) },
    }
}

fn curvature_summary(points: &[Point], seed: u64) -> Result<CurvatureSummary> {
    let rows = points
        .par_iter()
        .enumerate()
        .map(|(i, pt)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            Ok((invariants::weyl_max(pt), invariants::curvature_max(pt, &mut rng)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CurvatureSummary {
        weyl_max: rows.iter().map(|r| r.0).fold(0.0, f64::max),
        tractor_curvature_max: rows.iter().map(|r| r.1).fold(0.0, f64::max),
    })
}

/// Runs one named coupling of a scenario on prebuilt points.
pub fn run_coupling(s: &Scenario, points: &[Point], name: &str) -> Result<NamedCouplingReport> {
    let c = s.coupling(name).ok_or_else(|| Error::scenario("/couplings", format!("no coupling named {name:?}")))?;
    let get = |n: &str| s.field(n).map(|f| &f.field).ok_or_else(|| Error::scenario("/fields", format!("no field named {n:?}")));
    let opts = EvalOptions { order: s.order, tolerance: s.tolerance };
    let out = get(&c.inputs[0]).and_then(|a| coupling::coupling_report_at(points, c.kind, a, get(&c.inputs[1])?, opts));
    Ok(match out {
        Ok(r) => NamedCouplingReport { name: c.name.clone(), inputs: c.inputs.clone(), pass: r.pass(), report: Some(r), error: None },
        Err(e) => NamedCouplingReport { name: c.name.clone(), inputs: c.inputs.clone(), report: None, pass: false, error: Some(e.to_string()) },
    })
}

/// Evaluation points of a scenario.
pub fn scenario_points(s: &Scenario) -> Result<Vec<Point>> {
    let metric = s.metric()?;
    bgg::points_at(&metric, &s.sample_points()?, s.order)
}

/// Full evaluation of a scenario. Individual failures are recorded and the
/// run continues; the result depends only on the scenario.
pub fn run(s: &Scenario) -> Result<Report> {
    s.validate()?;
    let metric = s.metric()?;
    let xs = s.sample_points()?;
    let mut errors = Vec::new();
    let points = match bgg::points_at(&metric, &xs, s.order) {
        Ok(p) => p,
        Err(e) => {
            errors.push(format!("sample points: {e}"));
            Vec::new()
        }
    };
    let opts = EvalOptions { order: s.order, tolerance: s.tolerance };
    let curvature = if points.is_empty() {
        None
    } else {
        match curvature_summary(&points, s.seed) {
            Ok(c) => Some(c),
            Err(e) => {
                errors.push(format!("curvature: {e}"));
                None
            }
        }
    };
    let fields: Vec<FieldReport> =
        if points.is_empty() { Vec::new() } else { s.fields.par_iter().map(|f| run_field(&points, f, opts)).collect() };
    let couplings: Vec<NamedCouplingReport> = if points.is_empty() {
        Vec::new()
    } else {
        s.couplings.iter().map(|c| run_coupling(s, &points, &c.name)).collect::<Result<_>>()?
    };
    let invariants = if s.invariant_trials == 0 {
        Vec::new()
    } else {
        invariants::suite(&metric, SuiteOptions { seed: s.seed, trials: s.invariant_trials, order: s.order, fields: 2 })
    };
    let pass = errors.is_empty()
        && fields.iter().all(|f| f.pass)
        && couplings.iter().all(|c| c.pass)
        && invariants.iter().all(|i| i.pass);
    Ok(Report {
        schema_version: REPORT_SCHEMA_VERSION,
        scenario: s.name.clone(),
        signature: s.signature,
        seed: s.seed,
        tolerance: s.tolerance,
        order: s.order,
        points: xs,
        curvature,
        fields,
        couplings,
        invariants,
        errors,
        pass,
    })
}

fn mark(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn failing_fields(&self) -> Vec<&str> {
        self.fields.iter().filter(|f| !f.pass).map(|f| f.name.as_str()).collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scenario {} signature {} seed {} tolerance {:e}", self.scenario, self.signature, self.seed, self.tolerance);
        if let Some(c) = &self.curvature {
            let _ = writeln!(out, "curvature: weyl max {:.3e}, tractor curvature max {:.3e}", c.weyl_max, c.tractor_curvature_max);
        }
        for f in &self.fields {
            let mut line = format!("{} field {:<20} {:<8}", mark(f.pass), f.name, f.kind.label());
            for c in &f.checks {
                let _ = write!(line, " {:?}={:.2e}({})", c.equation, c.max_relative, c.verdict());
            }
            if let Some(e) = &f.error {
                let _ = write!(line, " error: {e}");
            }
            let _ = writeln!(out, "{}", line.trim_end());
        }
        for c in &self.couplings {
            match &c.report {
                Some(r) => {
                    let cond = r.condition_residual.map_or("none".to_string(), |v| format!("{v:.2e}"));
                    let _ = writeln!(
                        out,
                        "{} coupling {:<14} {:?} condition={} output={:.2e} tractor={:.2e} verdict={:?}",
                        mark(c.pass),
                        c.name,
                        r.kind,
                        cond,
                        r.output_residual,
                        r.tractor_residual,
                        r.verdict
                    );
                }
                None => {
                    let _ = writeln!(out, "FAIL coupling {:<14} error: {}", c.name, c.error.as_deref().unwrap_or("unknown"));
                }
            }
        }
        for i in &self.invariants {
            let detail = i.detail.as_deref().map(|d| format!(" ({d})")).unwrap_or_default();
            let _ = writeln!(out, "{} invariant {:<22} {:.2e} < {:.0e}{}", mark(i.pass), i.name, i.residual, i.tolerance, detail);
        }
        for e in &self.errors {
            let _ = writeln!(out, "FAIL error {e}");
        }
        let _ = writeln!(out, "{}", if self.pass { "all verdicts pass" } else { "verification failed" });
        out
    }
}

/// Projector data at one point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectorSummary {
    pub k: usize,
    pub dimension: usize,
    pub rank: usize,
    pub kernel: usize,
    pub eigen_scale: f64,
    pub sign: f64,
    pub idempotency_residual: f64,
    pub pass: bool,
}

/// Decomposition of a conformal Killing field (or, in signature (2,3), of
/// the field built from an almost Einstein scale) by a generic twistor
/// spinor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecomposeReport {
    pub spinor: String,
    pub field: String,
    pub points: Vec<Vec<f64>>,
    /// `b(χ, ∇̸χ)` per point.
    pub genericity: Vec<f64>,
    /// `B(X, X)` per point, `X = L₀χ`.
    pub tractor_norm: Vec<f64>,
    pub perp_max: Vec<f64>,
    pub sym_max: Vec<f64>,
    /// `proj ∘ proj = λ proj`, when the perpendicular part is nonzero.
    pub lambda: Vec<Option<f64>>,
    /// Relative `L_{sym} χ`.
    pub sym_residual: f64,
    pub projector: ProjectorSummary,
    /// For an almost Einstein scale: pointwise `σ'/σ` after `σ ↦ ξ ↦ σ'`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub round_trip: Option<RoundTrip>,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundTrip {
    pub ratios: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
    /// Relative `Θ₀` of the intermediate conformal Killing field.
    pub ckf_residual: f64,
    /// Relative perpendicular part of the intermediate field's
    /// complement: the field built from `σ` is all perpendicular.
    pub sym_part: f64,
}

/// Projector summary for a spin tractor at a point.
pub fn projector_summary(pt: &Point, x: &crate::tractor::SpinTractor, k: usize) -> Result<ProjectorSummary> {
    let p = coupling::projector(pt, x, k)?;
    let (sign, res) = p.idempotency();
    let tol = 1e-9;
    Ok(ProjectorSummary {
        k,
        dimension: p.matrix.nrows(),
        rank: p.rank(tol),
        kernel: p.action_nullity(tol),
        eigen_scale: p.eigen_scale,
        sign,
        idempotency_residual: res,
        pass: res < 1e-10 && p.rank(tol) + p.action_nullity(tol) == p.matrix.nrows(),
    })
}

fn one_form(j: &crate::field::FieldJet) -> Result<&Skew> {
    j.as_form()
}

/// Splits `field` by the twistor spinor `spinor` at every sample point.
pub fn decompose(s: &Scenario, spinor: &str, field: &str) -> Result<DecomposeReport> {
    let chi_f = &s.field(spinor).ok_or_else(|| Error::scenario("/fields", format!("no field named {spinor:?}")))?.field;
    let xi_f = &s.field(field).ok_or_else(|| Error::scenario("/fields", format!("no field named {field:?}")))?.field;
    if chi_f.kind != BggKind::TwistorSpinor {
        return Err(Error::InvalidKind(format!("{spinor:?} is not a twistor spinor")));
    }
    let from_aes = match xi_f.kind {
        BggKind::ConformalKillingForm { k: 1 } => false,
        BggKind::AlmostEinsteinScale if s.signature == (Signature { p: 2, q: 3 }) => true,
        other => {
            return Err(Error::InvalidKind(format!(
                "decompose needs a conformal Killing field (or an almost Einstein scale in signature (2,3)), got {}",
                other.label()
            )))
        }
    };
    let points = scenario_points(s)?;
    let order = s.order;
    let tol = s.tolerance;
    struct Row {
        small: f64,
        big: f64,
        perp: f64,
        sym: f64,
        lambda: Option<f64>,
        sym_rel: f64,
        ratio: Option<f64>,
        ckf: f64,
    }
    let rows = points
        .par_iter()
        .map(|pt| {
            let x = &pt.geo.x0;
            let cj = chi_f.jet_at(x, order)?;
            let chi = cj.as_spinor()?;
            let (small, big) = coupling::genericity(pt, chi)?;
            let fj = xi_f.jet_at(x, order)?;
            let (xi, ratio, ckf) = if from_aes {
                let sigma = one_form(&fj)?;
                let xi = coupling::ckf_from_aes_23(pt, chi, sigma)?;
                let back = coupling::aes_from_ckf_23(pt, chi, &xi)?;
                let ratio = back.comps()[0].value() / sigma.comps()[0].value();
                let th = bgg::theta0_ckf(pt, &xi)?;
                let ckf = bgg::relative(crate::forms::max_abs_value(&th), xi.max_abs());
                (xi, Some(ratio), ckf)
            } else {
                (one_form(&fj)?.clone(), None, 0.0)
            };
            let d = coupling::decompose_ckf(pt, chi, &xi)?;
            let scale = xi.max_abs_value().max(1e-300);
            Ok(Row {
                small,
                big,
                perp: d.perp.max_abs_value(),
                sym: d.sym.max_abs_value(),
                lambda: d.lambda,
                sym_rel: d.sym_residual / (scale * crate::clifford::spinor_max_abs(chi)).max(1e-300),
                ratio,
                ckf,
            })
        })
        .collect::<Result<Vec<Row>>>()?;
    let first = points.first().ok_or_else(|| Error::Shape("no sample points".into()))?;
    let cj = chi_f.jet_at(&first.geo.x0, order)?;
    let xt = bgg::split_spinor(first, cj.as_spinor()?)?;
    let projector = projector_summary(first, &xt, 1)?;
    let sym_residual = rows.iter().map(|r| r.sym_rel).fold(0.0, f64::max);
    let round_trip = if from_aes {
        let ratios: Vec<f64> = rows.iter().map(|r| r.ratio.unwrap_or(f64::NAN)).collect();
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let variance = ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / ratios.len() as f64;
        let sym_part = rows.iter().map(|r| r.sym / r.perp.max(r.sym).max(1e-300)).fold(0.0, f64::max);
        Some(RoundTrip { ratios, mean, variance, ckf_residual: rows.iter().map(|r| r.ckf).fold(0.0, f64::max), sym_part })
    } else {
        None
    };
    let generic = rows.iter().all(|r| r.small.abs() > 1e-12);
    let rt_pass = round_trip.as_ref().map_or(true, |r| r.variance < 1e-8 && r.ckf_residual < tol && r.sym_part < 1e-8);
    let pass = generic && sym_residual < tol && projector.pass && rt_pass;
    Ok(DecomposeReport {
        spinor: spinor.into(),
        field: field.into(),
        points: points.iter().map(|p| p.geo.x0.clone()).collect(),
        genericity: rows.iter().map(|r| r.small).collect(),
        tractor_norm: rows.iter().map(|r| r.big).collect(),
        perp_max: rows.iter().map(|r| r.perp).collect(),
        sym_max: rows.iter().map(|r| r.sym).collect(),
        lambda: rows.iter().map(|r| r.lambda).collect(),
        sym_residual,
        projector,
        round_trip,
        tolerance: tol,
        pass,
    })
}

impl DecomposeReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "decompose {} by {} at {} points", self.field, self.spinor, self.points.len());
        let gmin = self.genericity.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
        let _ = writeln!(out, "{} genericity: min |b(chi, D chi)| = {:.3e}", mark(gmin > 1e-12), gmin);
        let p = &self.projector;
        let _ = writeln!(
            out,
            "{} projector k={}: P^2 = {:+} P residual {:.2e}, rank {} + kernel {} = {} (eigen scale {:.6})",
            mark(p.pass),
            p.k,
            p.sign,
            p.idempotency_residual,
            p.rank,
            p.kernel,
            p.dimension,
            p.eigen_scale
        );
        let perp = self.perp_max.iter().fold(0.0_f64, |m, v| m.max(*v));
        let sym = self.sym_max.iter().fold(0.0_f64, |m, v| m.max(*v));
        let _ = writeln!(out, "perpendicular part max {perp:.3e}, symmetric part max {sym:.3e}");
        if let Some(l) = self.lambda.iter().flatten().next() {
            let _ = writeln!(out, "proj o proj = {l:.6} proj");
        }
        let _ = writeln!(out, "{} symmetric part annihilates chi: {:.2e} < {:.0e}", mark(self.sym_residual < self.tolerance), self.sym_residual, self.tolerance);
        if let Some(r) = &self.round_trip {
            let _ = writeln!(
                out,
                "{} round trip sigma -> xi -> sigma': ratio {:.9} variance {:.2e}, xi theta0 {:.2e}, symmetric part {:.2e}",
                mark(r.variance < 1e-8 && r.ckf_residual < self.tolerance && r.sym_part < 1e-8),
                r.mean,
                r.variance,
                r.ckf_residual,
                r.sym_part
            );
        }
        let _ = writeln!(out, "{}", if self.pass { "all verdicts pass" } else { "verification failed" });
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Result of the structural self-test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelftestReport {
    pub sections: Vec<(String, Vec<InvariantResult>)>,
    pub pass: bool,
}

impl SelftestReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (name, rows) in &self.sections {
            let _ = writeln!(out, "[{name}]");
            for i in rows {
                let detail = i.detail.as_deref().map(|d| format!(" ({d})")).unwrap_or_default();
                let _ = writeln!(out, "{} {:<24} {:.2e} < {:.0e}{}", mark(i.pass), i.name, i.residual, i.tolerance, detail);
            }
        }
        let _ = writeln!(out, "{}", if self.pass { "all verdicts pass" } else { "verification failed" });
        out
    }
}

fn flat23_algebra(seed: u64) -> Result<Vec<InvariantResult>> {
    let sig = Signature { p: 2, q: 3 };
    let metric = crate::geometry::MetricSpec::flat(sig);
    let x = metric.sample_points(1, seed).remove(0);
    let pt = Point::with_optional_spin(&metric, &x, DEFAULT_SELFTEST_ORDER)?;
    let chi_f = scenario::generic_twistor(sig)?;
    let cj = chi_f.jet_at(&x, DEFAULT_SELFTEST_ORDER)?;
    let xt = bgg::split_spinor(&pt, cj.as_spinor()?)?;
    let mut out = Vec::new();
    let p = projector_summary(&pt, &xt, 1)?;
    let mut r = InvariantResult {
        name: "projector_idempotent".into(),
        residual: p.idempotency_residual,
        tolerance: 1e-10,
        pass: p.idempotency_residual < 1e-10,
        detail: Some(format!("sign {:+}, eigen scale {:.6}", p.sign, p.eigen_scale)),
    };
    out.push(r.clone());
    let split = (p.rank + p.kernel) as f64 - p.dimension as f64;
    r = InvariantResult {
        name: "projector_rank_count".into(),
        residual: split.abs(),
        tolerance: 0.5,
        pass: split == 0.0 && p.rank == 7,
        detail: Some(format!("rank {} + kernel {} = {}", p.rank, p.kernel, p.dimension)),
    };
    out.push(r);
    let scaled = coupling::projector(&pt, &xt.scale(2.5), 1)?;
    let base = coupling::projector(&pt, &xt, 1)?;
    let d = (&scaled.matrix - &base.matrix).amax();
    out.push(InvariantResult { name: "projector_scale_invariance".into(), residual: d, tolerance: 1e-10, pass: d < 1e-10, detail: None });
    Ok(out)
}

const DEFAULT_SELFTEST_ORDER: usize = 4;

/// Structural invariants on the random quartic metric of every supported
/// signature, plus the projector algebra in signature (2,3).
pub fn selftest(seed: u64, trials: usize) -> SelftestReport {
    let mut sections = Vec::new();
    for sig in scenario::flat_signatures() {
        let metric = crate::geometry::MetricSpec::random_quartic(sig, scenario::quartic_seed(sig), 0.2);
        let rows = invariants::suite(&metric, SuiteOptions { seed, trials, order: DEFAULT_SELFTEST_ORDER, fields: 2 });
        sections.push((format!("quartic{}{}", sig.p, sig.q), rows));
    }
    let alg = flat23_algebra(seed).unwrap_or_else(|e| {
        vec![InvariantResult { name: "projector".into(), residual: f64::INFINITY, tolerance: 0.0, pass: false, detail: Some(e.to_string()) }]
    });
    sections.push(("flat23 projector".into(), alg));
    let pass = sections.iter().all(|(_, r)| r.iter().all(|i| i.pass));
    SelftestReport { sections, pass }
}
