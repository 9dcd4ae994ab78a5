use std::sync::Arc;

use crate::clifford::{SpinPoint, SpinStructure};
use crate::error::{Error, Result};
use crate::geometry::{mat_mul, JetMat, MetricSpec, PointGeometry};
use crate::jet::Jet;
use crate::skew::SparseEntry;

/// Label of the `ρ` slot in the tractor label space `ρ, μ_1..μ_n, σ`.
pub const RHO: usize = 0;

pub fn mu(a: usize) -> usize {
    a + 1
}

/// Geometry, optional spin data and tractor connection coefficients at a
/// base point.
#[derive(Clone, Debug)]
pub struct Point {
    pub geo: PointGeometry,
    pub spin: Option<SpinPoint>,
    /// `P_a{}^b = g^{bc} P_ac`
    pub schouten_up: JetMat,
    conn: Vec<Vec<SparseEntry>>,
}

impl Point {
    pub fn new(metric: &MetricSpec, x0: &[f64], order: usize, spin: Option<Arc<SpinStructure>>) -> Result<Self> {
        let geo = PointGeometry::new(metric, x0, order)?;
        Self::from_geometry(geo, spin)
    }

    /// Attaches the spin structure of the metric's signature when one is
    /// available, silently skipping it otherwise.
    pub fn with_optional_spin(metric: &MetricSpec, x0: &[f64], order: usize) -> Result<Self> {
        let spin = SpinStructure::shared(metric.signature).ok();
        Self::new(metric, x0, order, spin)
    }

    pub fn from_geometry(geo: PointGeometry, spin: Option<Arc<SpinStructure>>) -> Result<Self> {
        let spin = match spin {
            Some(s) => Some(SpinPoint::new(&geo, s)?),
            None => None,
        };
        let schouten_up = mat_mul(&geo.curvature.schouten, &geo.ginv);
        let n = geo.n();
        let sig = n + 1;
        let conn = (0..n)
            .map(|a| {
                let mut e: Vec<SparseEntry> = Vec::new();
                let one = Jet::constant(n, geo.order, 1.0);
                e.push((sig, mu(a), -&one));
                for b in 0..n {
                    for c in 0..n {
                        let gam = geo.christoffel(c, a, b);
                        if gam.max_abs() != 0.0 {
                            e.push((mu(b), mu(c), -gam));
                        }
                    }
                    e.push((mu(b), RHO, geo.g[a][b].clone()));
                    let p = &geo.curvature.schouten[a][b];
                    if p.max_abs() != 0.0 {
                        e.push((mu(b), sig, p.clone()));
                    }
                    let pu = &schouten_up[a][b];
                    if pu.max_abs() != 0.0 {
                        e.push((RHO, mu(b), -pu));
                    }
                }
                e
            })
            .collect();
        Ok(Point { geo, spin, schouten_up, conn })
    }

    pub fn n(&self) -> usize {
        self.geo.n()
    }

    pub fn order(&self) -> usize {
        self.geo.order
    }

    /// Label of the `σ` slot.
    pub fn sigma_label(&self) -> usize {
        self.n() + 1
    }

    pub fn labels(&self) -> usize {
        self.n() + 2
    }

    pub fn spin(&self) -> Result<&SpinPoint> {
        self.spin.as_ref().ok_or(Error::UnsupportedSignature { p: self.geo.signature.p, q: self.geo.signature.q })
    }

    /// Connection coefficients of the standard tractor connection in
    /// direction `a`, as a sparse endomorphism of the label space.
    pub fn standard_connection(&self, a: usize) -> &[SparseEntry] {
        &self.conn[a]
    }

    pub fn zero(&self, order: usize) -> Jet {
        Jet::zero(self.n(), order)
    }

    pub fn one(&self) -> Jet {
        Jet::constant(self.n(), self.order(), 1.0)
    }
}
