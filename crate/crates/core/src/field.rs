//! Candidate solutions: polynomial fields with an optional conformal
//! weight factor.

use serde::{Deserialize, Serialize};

use crate::clifford::Spinor;
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::poly::{Polynomial, ScalarExpr};
use crate::skew::{subsets, Skew};

/// Which first BGG operator a field is a candidate solution of.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BggKind {
    /// Almost Einstein scale, a density of weight 1.
    AlmostEinsteinScale,
    /// Conformal Killing `k`-form, weight `k + 1`, `k >= 1`.
    ConformalKillingForm { k: usize },
    /// Twistor spinor, weight 1/2.
    TwistorSpinor,
}

impl BggKind {
    pub fn form_degree(&self) -> Option<usize> {
        match self {
            BggKind::AlmostEinsteinScale => Some(0),
            BggKind::ConformalKillingForm { k } => Some(*k),
            BggKind::TwistorSpinor => None,
        }
    }

    pub fn weight(&self) -> f64 {
        match self {
            BggKind::AlmostEinsteinScale => 1.0,
            BggKind::ConformalKillingForm { k } => *k as f64 + 1.0,
            BggKind::TwistorSpinor => 0.5,
        }
    }

    pub fn label(&self) -> String {
        match self {
            BggKind::AlmostEinsteinScale => "aes".into(),
            BggKind::ConformalKillingForm { k } => format!("ckf{k}"),
            BggKind::TwistorSpinor => "twistor".into(),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            BggKind::ConformalKillingForm { k } if *k == 0 || *k >= n => {
                Err(Error::InvalidKind(format!("conformal Killing {k}-forms need 1 <= k < {n}")))
            }
            _ => Ok(()),
        }
    }

    /// Number of components in dimension `n` with spinor dimension `spin`.
    pub fn component_count(&self, n: usize, spin: usize) -> usize {
        match self.form_degree() {
            Some(k) => subsets(n, k).len(),
            None => spin,
        }
    }
}

/// A field whose components are polynomials or rational functions, times
/// `e^{w f}` for the weight `w`. Form components are listed in
/// lexicographic order of their sorted index sets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyField {
    pub kind: BggKind,
    pub components: Vec<ScalarExpr>,
    /// `f` such that the field carries the factor `e^{w f}`, `w` its weight.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exp_factor: Option<Polynomial>,
}

/// Jet of a field at a point.
#[derive(Clone, Debug)]
pub enum FieldJet {
    Form(Skew),
    Spinor(Spinor),
}

impl FieldJet {
    pub fn as_form(&self) -> Result<&Skew> {
        match self {
            FieldJet::Form(s) => Ok(s),
            FieldJet::Spinor(_) => Err(Error::InvalidKind("expected a form field".into())),
        }
    }

    pub fn as_spinor(&self) -> Result<&Spinor> {
        match self {
            FieldJet::Spinor(s) => Ok(s),
            FieldJet::Form(_) => Err(Error::InvalidKind("expected a spinor field".into())),
        }
    }

    pub fn max_abs(&self) -> f64 {
        match self {
            FieldJet::Form(s) => s.max_abs(),
            FieldJet::Spinor(s) => crate::clifford::spinor_max_abs(s),
        }
    }
}

impl PolyField {
    pub fn new(kind: BggKind, components: Vec<ScalarExpr>) -> Self {
        PolyField { kind, components, exp_factor: None }
    }

    pub fn from_polys(kind: BggKind, components: Vec<Polynomial>) -> Self {
        Self::new(kind, components.into_iter().map(ScalarExpr::Poly).collect())
    }

    pub fn scalar(p: Polynomial) -> Self {
        Self::from_polys(BggKind::AlmostEinsteinScale, vec![p])
    }

    /// Transport to the metric `e^{2f} g`.
    pub fn rescaled(&self, f: &Polynomial) -> PolyField {
        let exp_factor = Some(match &self.exp_factor {
            Some(e) => e + f,
            None => f.clone(),
        });
        PolyField { exp_factor, ..self.clone() }
    }

    pub fn validate(&self, n: usize, spin: Option<usize>) -> Result<()> {
        self.kind.validate(n)?;
        let want = match self.kind.form_degree() {
            Some(k) => subsets(n, k).len(),
            None => spin.ok_or_else(|| Error::InvalidKind("twistor field without a spin structure".into()))?,
        };
        if self.components.len() != want {
            return Err(Error::Shape(format!(
                "{} field needs {want} components, found {}",
                self.kind.label(),
                self.components.len()
            )));
        }
        for c in &self.components {
            c.check_dim(n)?;
        }
        if let Some(f) = &self.exp_factor {
            f.check_dim(n)?;
        }
        Ok(())
    }

    pub fn jet_at(&self, x0: &[f64], order: usize) -> Result<FieldJet> {
        let n = x0.len();
        let factor = match &self.exp_factor {
            Some(f) => Some(f.scale(self.kind.weight()).jet_at(x0, order)?.exp()),
            None => None,
        };
        let comps = self
            .components
            .iter()
            .map(|p| {
                let j = p.jet_at(x0, order)?;
                Ok(match &factor {
                    Some(e) => &j * e,
                    None => j,
                })
            })
            .collect::<Result<Vec<Jet>>>()?;
        Ok(match self.kind.form_degree() {
            Some(k) => {
                if comps.len() != subsets(n, k).len() {
                    return Err(Error::Shape("form component count".into()));
                }
                FieldJet::Form(Skew::from_comps(n, k, n, order, comps))
            }
            None => FieldJet::Spinor(comps),
        })
    }

    pub fn add(&self, other: &PolyField) -> Result<PolyField> {
        if self.kind != other.kind || self.exp_factor != other.exp_factor {
            return Err(Error::InvalidKind("cannot add fields of different kinds".into()));
        }
        let components = self.components.iter().zip(&other.components).map(|(a, b)| a.add(b)).collect();
        Ok(PolyField { components, ..self.clone() })
    }

    pub fn scale(&self, s: f64) -> PolyField {
        PolyField { components: self.components.iter().map(|p| p.scale(s)).collect(), ..self.clone() }
    }
}
