//! Scenario files: a metric, candidate fields, couplings and evaluation
//! settings, stored as versioned JSON.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::clifford::{SpinStructure, SUPPORTED};
use crate::coupling::CouplingKind;
use crate::error::{Error, Result};
use crate::families::{flat_forms, flat_twistors, to_sphere};
use crate::field::{BggKind, PolyField};
use crate::geometry::{MetricSpec, Signature};
use crate::poly::Polynomial;

pub const SCHEMA_VERSION: u32 = 1;

pub const DEFAULT_ORDER: usize = 4;
pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_SAMPLES: usize = 17;
pub const DEFAULT_INVARIANT_TRIALS: usize = 3;

/// A named metric family. `quartic` is the flat metric plus a seeded random
/// polynomial perturbation of degree at most four.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "builtin", rename_all = "snake_case")]
pub enum BuiltinMetric {
    Flat,
    Sphere,
    Quartic {
        seed: u64,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
    },
}

fn default_amplitude() -> f64 {
    0.2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MetricSource {
    Builtin(BuiltinMetric),
    Explicit(MetricSpec),
}

/// What to evaluate for a field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    /// `Θ₀σ = 0`.
    Theta0,
    /// `∂*(K • L₀σ) = 0`.
    Normality,
    /// `∇ L₀σ = 0`.
    Parallel,
    /// `∂*(∇ L₀σ) = 0`, which holds for every input.
    Splitting,
}

fn default_checks() -> Vec<Check> {
    vec![Check::Theta0, Check::Normality, Check::Parallel]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedField {
    pub name: String,
    #[serde(flatten)]
    pub field: PolyField,
    #[serde(default = "default_checks")]
    pub checks: Vec<Check>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedCoupling {
    pub name: String,
    pub kind: CouplingKind,
    pub inputs: [String; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleGrid {
    #[serde(default = "default_samples")]
    pub count: usize,
    /// Overrides the metric's coordinate patch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patch: Option<Vec<[f64; 2]>>,
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

impl Default for SampleGrid {
    fn default() -> Self {
        SampleGrid { count: DEFAULT_SAMPLES, patch: None }
    }
}

fn default_version() -> u32 {
    SCHEMA_VERSION
}
fn default_order() -> usize {
    DEFAULT_ORDER
}
fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}
fn default_trials() -> usize {
    DEFAULT_INVARIANT_TRIALS
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default = "default_version")]
    pub schema_version: u32,
    pub name: String,
    pub signature: Signature,
    pub metric: MetricSource,
    /// `f` in `e^{2f} g`, applied on top of the metric.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conformal_factor: Option<Polynomial>,
    #[serde(default)]
    pub fields: Vec<NamedField>,
    #[serde(default)]
    pub couplings: Vec<NamedCoupling>,
    #[serde(default)]
    pub samples: SampleGrid,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default)]
    pub seed: u64,
    /// Sample points for the structural invariant suite; 0 disables it.
    #[serde(default = "default_trials")]
    pub invariant_trials: usize,
}

fn pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

impl Scenario {
    /// A scenario with default settings and no fields.
    pub fn new(name: impl Into<String>, signature: Signature, metric: MetricSource) -> Self {
        Scenario {
            schema_version: SCHEMA_VERSION,
            name: name.into(),
            signature,
            metric,
            conformal_factor: None,
            fields: Vec::new(),
            couplings: Vec::new(),
            samples: SampleGrid::default(),
            tolerance: DEFAULT_TOLERANCE,
            order: DEFAULT_ORDER,
            seed: 0,
            invariant_trials: DEFAULT_INVARIANT_TRIALS,
        }
    }

    pub fn from_json(text: &str) -> Result<Scenario> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let s: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
            let p = pointer(e.path());
            Error::scenario(p, e.into_inner().to_string())
        })?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Scenario> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.signature.n()
    }

    pub fn spin_dim(&self) -> Option<usize> {
        SpinStructure::shared(self.signature).ok().map(|s| s.dim)
    }

    /// The metric after builtin resolution, conformal factor and patch.
    pub fn metric(&self) -> Result<MetricSpec> {
        let sig = self.signature;
        let mut m = match &self.metric {
            MetricSource::Builtin(BuiltinMetric::Flat) => MetricSpec::flat(sig),
            MetricSource::Builtin(BuiltinMetric::Sphere) => {
                if sig.q != 0 {
                    return Err(Error::scenario("/metric", "the sphere is Riemannian, signature must be (n,0)"));
                }
                MetricSpec::sphere(sig.n())?
            }
            MetricSource::Builtin(BuiltinMetric::Quartic { seed, amplitude }) => {
                MetricSpec::random_quartic(sig, *seed, *amplitude)
            }
            MetricSource::Explicit(m) => {
                if m.signature != sig {
                    return Err(Error::scenario("/metric/signature", format!("metric has signature {}, scenario {}", m.signature, sig)));
                }
                m.clone()
            }
        };
        if let Some(f) = &self.conformal_factor {
            m = m.conformal_rescale(f);
        }
        if let Some(p) = &self.samples.patch {
            m.patch = p.clone();
        }
        Ok(m)
    }

    pub fn sample_points(&self) -> Result<Vec<Vec<f64>>> {
        Ok(self.metric()?.sample_points(self.samples.count, self.seed))
    }

    pub fn field(&self, name: &str) -> Option<&NamedField> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn coupling(&self, name: &str) -> Option<&NamedCoupling> {
        self.couplings.iter().find(|c| c.name == name)
    }

    /// Semantic checks beyond the JSON shape; errors carry JSON pointers.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::scenario(
                "/schema_version",
                format!("unsupported schema version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        let sig = self.signature;
        Signature::for_metric(sig.p, sig.q).map_err(|e| Error::scenario("/signature", e.to_string()))?;
        if sig.n() > 12 {
            return Err(Error::scenario("/signature", "at most 12 dimensions are supported"));
        }
        let n = sig.n();
        let metric = self.metric()?;
        metric.validate().map_err(|e| Error::scenario("/metric", e.to_string()))?;
        if let Some(f) = &self.conformal_factor {
            f.check_dim(n).map_err(|e| Error::scenario("/conformal_factor", e.to_string()))?;
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::scenario("/tolerance", "tolerance must be positive and finite"));
        }
        if !(DEFAULT_ORDER..=8).contains(&self.order) {
            return Err(Error::scenario("/order", format!("jet order must be in {DEFAULT_ORDER}..=8")));
        }
        if self.samples.count == 0 {
            return Err(Error::scenario("/samples/count", "need at least one sample point"));
        }
        let spin = self.spin_dim();
        let mut kinds: HashMap<&str, BggKind> = HashMap::new();
        for (i, f) in self.fields.iter().enumerate() {
            if f.name.is_empty() {
                return Err(Error::scenario(format!("/fields/{i}/name"), "empty field name"));
            }
            if kinds.insert(&f.name, f.field.kind).is_some() {
                return Err(Error::scenario(format!("/fields/{i}/name"), format!("duplicate field name {:?}", f.name)));
            }
            f.field.validate(n, spin).map_err(|e| Error::scenario(format!("/fields/{i}"), e.to_string()))?;
        }
        let mut names = std::collections::HashSet::new();
        for (i, c) in self.couplings.iter().enumerate() {
            if !names.insert(&c.name) {
                return Err(Error::scenario(format!("/couplings/{i}/name"), format!("duplicate coupling name {:?}", c.name)));
            }
            c.kind.validate(n).map_err(|e| Error::scenario(format!("/couplings/{i}/kind"), e.to_string()))?;
            let (ka, kb) = c.kind.input_kinds();
            for (j, (input, want)) in c.inputs.iter().zip([ka, kb]).enumerate() {
                let at = format!("/couplings/{i}/inputs/{j}");
                match kinds.get(input.as_str()) {
                    None => return Err(Error::scenario(at, format!("unknown field {input:?}"))),
                    Some(k) if *k != want => {
                        return Err(Error::scenario(
                            at,
                            format!("field {input:?} is {}, the coupling needs {}", k.label(), want.label()),
                        ))
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }
}

fn named(prefix: &str, fields: Vec<PolyField>) -> Vec<NamedField> {
    fields
        .into_iter()
        .enumerate()
        .map(|(i, field)| NamedField { name: format!("{prefix}_{i}"), field, checks: default_checks() })
        .collect()
}

/// `Σ c_i f_i` with fixed, irregular coefficients.
fn generic(fields: &[PolyField]) -> PolyField {
    let c = |i: usize| ((i * 7 + 3) % 11) as f64 / 5.0 - 1.1;
    let mut acc = fields[0].scale(c(0));
    for (i, f) in fields.iter().enumerate().skip(1) {
        acc = acc.add(&f.scale(c(i))).expect("same kind");
    }
    acc
}

/// `e_0 + x^a γ_a e_{d-1}`, the generic flat twistor spinor used by the
/// builtins.
pub fn generic_twistor(sig: Signature) -> Result<PolyField> {
    let tw = flat_twistors(sig)?;
    let d = tw.len() / 2;
    tw[0].add(&tw[2 * d - 1])
}

fn form_kind(k: usize) -> BggKind {
    if k == 0 {
        BggKind::AlmostEinsteinScale
    } else {
        BggKind::ConformalKillingForm { k }
    }
}

/// Canonical families of the flat model (or their transports by
/// `transport`) with a generic member of each and the applicable couplings.
fn with_families(mut s: Scenario, transport: impl Fn(PolyField) -> PolyField) -> Result<Scenario> {
    let sig = s.signature;
    let n = sig.n();
    let map = |v: Vec<PolyField>| v.into_iter().map(&transport).collect::<Vec<_>>();
    let aes = map(flat_forms(sig, 0));
    let ckf1 = map(flat_forms(sig, 1));
    let mut generics = vec![
        NamedField { name: "aes_generic".into(), field: generic(&aes), checks: default_checks() },
        NamedField { name: "ckf1_generic".into(), field: generic(&ckf1), checks: default_checks() },
    ];
    if n >= 4 {
        let ckf2 = map(flat_forms(sig, 2));
        generics.push(NamedField { name: "ckf2_generic".into(), field: generic(&ckf2), checks: default_checks() });
    }
    s.fields.extend(named("aes", aes));
    s.fields.extend(named("ckf1", ckf1));
    let spin = SpinStructure::shared(sig).is_ok();
    if spin {
        let tw = map(flat_twistors(sig)?);
        generics.push(NamedField { name: "twistor_generic".into(), field: generic(&tw), checks: default_checks() });
        generics.push(NamedField {
            name: "chi_generic".into(),
            field: transport(generic_twistor(sig)?),
            checks: default_checks(),
        });
        s.fields.extend(named("twistor", tw));
    }
    s.fields.extend(generics);
    let mut add = |name: &str, kind: CouplingKind, a: &str, b: &str| {
        s.couplings.push(NamedCoupling { name: name.into(), kind, inputs: [a.into(), b.into()] });
    };
    let gen = |k: usize| if k == 0 { "aes_generic" } else if k == 1 { "ckf1_generic" } else { "ckf2_generic" };
    add("wedge_0_1", CouplingKind::Wedge { k: 0, k2: 1 }, gen(0), gen(1));
    add("contract_0_1", CouplingKind::Contract { k: 0, k2: 1 }, gen(0), gen(1));
    if n >= 4 {
        add("wedge_1_1", CouplingKind::Wedge { k: 1, k2: 1 }, gen(1), gen(1));
        add("contract_1_2", CouplingKind::Contract { k: 1, k2: 2 }, gen(1), gen(2));
    }
    if spin {
        for k in 0..=1 {
            add(&format!("spinor_pair_{k}"), CouplingKind::SpinorPair { k }, "chi_generic", "twistor_generic");
            add(&format!("form_spinor_{k}"), CouplingKind::FormSpinor { k }, gen(k), "chi_generic");
        }
        if n >= 4 {
            add("form_spinor_2", CouplingKind::FormSpinor { k: 2 }, gen(2), "chi_generic");
        }
    }
    Ok(s)
}

/// Signatures with a builtin flat scenario.
pub fn flat_signatures() -> Vec<Signature> {
    SUPPORTED.iter().filter(|(p, q)| p + q >= 3).map(|&(p, q)| Signature { p, q }).collect()
}

/// Names accepted by [`builtin`].
pub fn builtin_names() -> Vec<String> {
    let mut out = Vec::new();
    for s in flat_signatures() {
        out.push(format!("flat{}{}", s.p, s.q));
    }
    out.push("cflat-exp".into());
    out.push("sphere".into());
    for s in flat_signatures() {
        out.push(format!("quartic{}{}", s.p, s.q));
    }
    out.push("corrupted".into());
    out
}

/// Seed of the random quartic builtin for a signature.
pub fn quartic_seed(sig: Signature) -> u64 {
    1000 + 10 * sig.p as u64 + sig.q as u64
}

fn parse_sig(digits: &str) -> Option<Signature> {
    let b = digits.as_bytes();
    if b.len() != 2 || !b.iter().all(u8::is_ascii_digit) {
        return None;
    }
    let sig = Signature { p: (b[0] - b'0') as usize, q: (b[1] - b'0') as usize };
    flat_signatures().contains(&sig).then_some(sig)
}

/// A builtin scenario by name; see [`builtin_names`].
pub fn builtin(name: &str) -> Result<Scenario> {
    let unknown = || Error::scenario("/name", format!("unknown builtin {name:?}; known: {}", builtin_names().join(", ")));
    if let Some(sig) = name.strip_prefix("flat").and_then(parse_sig) {
        let s = Scenario::new(name, sig, MetricSource::Builtin(BuiltinMetric::Flat));
        return with_families(s, |f| f);
    }
    if let Some(sig) = name.strip_prefix("quartic").and_then(parse_sig) {
        let mut s = Scenario::new(
            name,
            sig,
            MetricSource::Builtin(BuiltinMetric::Quartic { seed: quartic_seed(sig), amplitude: default_amplitude() }),
        );
        let spin = s.spin_dim();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(quartic_seed(sig));
        let mut kinds = vec![form_kind(0), form_kind(1)];
        if spin.is_some() {
            kinds.push(BggKind::TwistorSpinor);
        }
        for kind in kinds {
            let field = crate::random::field(&mut rng, kind, sig.n(), spin.unwrap_or(0));
            s.fields.push(NamedField { name: format!("random_{}", kind.label()), field, checks: vec![Check::Splitting] });
        }
        s.invariant_trials = 4;
        return Ok(s);
    }
    match name {
        "cflat-exp" => {
            let sig = Signature { p: 2, q: 3 };
            let f = Polynomial::var(sig.n(), 0);
            let mut s = Scenario::new(name, sig, MetricSource::Builtin(BuiltinMetric::Flat));
            s.conformal_factor = Some(f.clone());
            with_families(s, |x| x.rescaled(&f))
        }
        "sphere" => {
            let sig = Signature { p: 4, q: 0 };
            let mut s = Scenario::new(name, sig, MetricSource::Builtin(BuiltinMetric::Sphere));
            for k in 0..=2 {
                s.fields.extend(named(&format!("{}_sphere", form_kind(k).label()), flat_forms(sig, k).into_iter().map(|f| to_sphere(&f)).collect()));
            }
            s.couplings.push(NamedCoupling {
                name: "wedge_0_1".into(),
                kind: CouplingKind::Wedge { k: 0, k2: 1 },
                inputs: ["aes_sphere_1".into(), "ckf1_sphere_2".into()],
            });
            s.couplings.push(NamedCoupling {
                name: "contract_0_1".into(),
                kind: CouplingKind::Contract { k: 0, k2: 1 },
                inputs: ["aes_sphere_0".into(), "ckf1_sphere_5".into()],
            });
            Ok(s)
        }
        "corrupted" => {
            let sig = Signature { p: 2, q: 3 };
            let n = sig.n();
            let mut s = Scenario::new(name, sig, MetricSource::Builtin(BuiltinMetric::Flat));
            let x1 = Polynomial::var(n, 0);
            s.fields.push(NamedField { name: "aes_1".into(), field: PolyField::scalar(Polynomial::constant(n, 1.0)), checks: default_checks() });
            s.fields.push(NamedField { name: "corrupted_sigma".into(), field: PolyField::scalar(&x1 * &x1), checks: default_checks() });
            Ok(s)
        }
        _ => Err(unknown()),
    }
}
