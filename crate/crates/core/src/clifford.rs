//! Real Clifford modules, the invariant spinor pairing and spinor calculus.
//!
//! Gamma matrices satisfy `γ_i γ_j + γ_j γ_i = -2 η_ij` with
//! `η = diag(+1 (p times), -1 (q times))`, so the first `p` generators
//! square to `-1`. The pairing `b` satisfies `b(γ_i u, v) = (-1)^p b(u, γ_i v)`.

use std::sync::{Arc, Mutex, OnceLock};
use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{PointGeometry, Signature};
use crate::jet::Jet;
use crate::skew::{subsets, Skew};

pub type Spinor = Vec<Jet>;

/// Signatures with a built-in real gamma table.
pub const SUPPORTED: [(usize, usize); 6] = [(1, 1), (2, 2), (2, 3), (3, 3), (3, 4), (4, 4)];

#[derive(Clone, Debug)]
pub struct SpinStructure {
    pub signature: Signature,
    pub dim: usize,
    pub gammas: Vec<DMatrix<f64>>,
    pub b: DMatrix<f64>,
    pub b_symmetric: bool,
}

fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// Integer gamma matrices for `r` generators squaring to `+1` and `s`
/// squaring to `-1`, `r - s ∈ {0, 1}`. Returns (plus, minus).
fn gamma_table(r: usize, s: usize) -> Option<(Vec<DMatrix<f64>>, Vec<DMatrix<f64>>)> {
    let sx = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    let sz = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    let jm = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
    let (mut gp, mut gm) = match r.checked_sub(s)? {
        1 => (vec![DMatrix::from_element(1, 1, 1.0)], Vec::new()),
        0 => (Vec::new(), Vec::new()),
        _ => return None,
    };
    let mut dim = 1;
    for _ in 0..s {
        gp = gp.iter().map(|g| kron(g, &sz)).collect();
        gm = gm.iter().map(|g| kron(g, &sz)).collect();
        gp.push(kron(&DMatrix::identity(dim, dim), &sx));
        gm.push(kron(&DMatrix::identity(dim, dim), &jm));
        dim *= 2;
    }
    Some((gp, gm))
}

/// Null space of `a` by exact-pivot row reduction; basis vectors have a
/// unit entry at their free variable.
fn null_space(a: &DMatrix<f64>) -> Vec<Vec<f64>> {
    let (rows, cols) = a.shape();
    let mut m = a.clone();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let (best, val) = (r..rows).map(|i| (i, m[(i, c)].abs())).fold((r, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if val < 1e-10 {
            continue;
        }
        m.swap_rows(r, best);
        let p = m[(r, c)];
        for j in 0..cols {
            m[(r, j)] /= p;
        }
        for i in 0..rows {
            if i != r && m[(i, c)] != 0.0 {
                let f = m[(i, c)];
                for j in 0..cols {
                    m[(i, j)] -= f * m[(r, j)];
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![0.0; cols];
            v[f] = 1.0;
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[(row, f)];
            }
            v
        })
        .collect()
}

impl SpinStructure {
    pub fn new(sig: Signature) -> Result<Self> {
        let (p, q) = (sig.p, sig.q);
        let (gp, gm) = gamma_table(q, p).ok_or(Error::UnsupportedSignature { p, q })?;
        // first the p generators with γ² = -1, then the q with γ² = +1
        let gammas: Vec<DMatrix<f64>> = gm.into_iter().chain(gp).collect();
        let dim = gammas[0].nrows();
        let n = sig.n();
        for i in 0..n {
            for j in 0..n {
                let ac = &gammas[i] * &gammas[j] + &gammas[j] * &gammas[i];
                let want = if i == j { -2.0 * sig.eta(i) } else { 0.0 };
                if ac != DMatrix::identity(dim, dim) * want {
                    return Err(Error::Shape(format!("gamma table for {sig} violates the Clifford relation at ({i},{j})")));
                }
            }
        }
        let eps = sig.parity();
        let nn = dim * dim;
        let mut sys = DMatrix::zeros(n * nn, nn);
        for (gi, g) in gammas.iter().enumerate() {
            for a in 0..dim {
                for c in 0..dim {
                    let row = gi * nn + a * dim + c;
                    for k in 0..dim {
                        sys[(row, k * dim + c)] += g[(k, a)];
                        sys[(row, a * dim + k)] -= eps * g[(k, c)];
                    }
                }
            }
        }
        let basis = null_space(&sys);
        let b = basis
            .iter()
            .map(|v| DMatrix::from_row_slice(dim, dim, v))
            .find(|m| m.determinant().abs() > 1e-9)
            .ok_or(Error::NoInvariantPairing)?;
        let first = b.iter().copied().find(|v| v.abs() > 1e-12).ok_or(Error::NoInvariantPairing)?;
        let b = b / first;
        let b_symmetric = (&b - b.transpose()).amax() < 1e-12;
        if !b_symmetric && (&b + b.transpose()).amax() > 1e-12 {
            return Err(Error::NoInvariantPairing);
        }
        Ok(SpinStructure { signature: sig, dim, gammas, b, b_symmetric })
    }

    /// Cached structure per signature.
    pub fn shared(sig: Signature) -> Result<Arc<Self>> {
        static CACHE: OnceLock<Mutex<HashMap<Signature, Arc<SpinStructure>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(s) = cache.lock().expect("spin cache poisoned").get(&sig) {
            return Ok(s.clone());
        }
        let s = Arc::new(SpinStructure::new(sig)?);
        cache.lock().expect("spin cache poisoned").insert(sig, s.clone());
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.signature.n()
    }

    /// `γ^i = η_i γ_i`.
    pub fn gamma_upper(&self, i: usize) -> DMatrix<f64> {
        &self.gammas[i] * self.signature.eta(i)
    }

    /// `γ_{i1} ... γ_{ik}`.
    pub fn product(&self, labels: &[usize]) -> DMatrix<f64> {
        labels.iter().fold(DMatrix::identity(self.dim, self.dim), |acc, &i| acc * &self.gammas[i])
    }

    /// Antisymmetrized product `γ_[i1 ... γ_ik]` (average over permutations).
    pub fn skew_product(&self, labels: &[usize]) -> DMatrix<f64> {
        let k = labels.len();
        let mut acc = DMatrix::zeros(self.dim, self.dim);
        let mut count = 0.0;
        for perm in permutations(k) {
            let ordered: Vec<usize> = perm.0.iter().map(|&i| labels[i]).collect();
            acc += self.product(&ordered) * perm.1;
            count += 1.0;
        }
        acc / count
    }

    pub fn pair_values(&self, u: &[f64], v: &[f64]) -> f64 {
        let mut s = 0.0;
        for a in 0..self.dim {
            for c in 0..self.dim {
                s += u[a] * self.b[(a, c)] * v[c];
            }
        }
        s
    }

    pub fn pair(&self, u: &[Jet], v: &[Jet]) -> Jet {
        let order = u.iter().chain(v).map(Jet::order).min().unwrap_or(0);
        let vars = u[0].dim();
        let mut s = Jet::zero(vars, order);
        for a in 0..self.dim {
            for c in 0..self.dim {
                let w = self.b[(a, c)];
                if w != 0.0 {
                    s.axpy(w, &(&u[a] * &v[c]));
                }
            }
        }
        s
    }

    /// Clifford action of a k-form given by orthonormal-frame components
    /// `σ_I = σ(e_I)`: `Σ_{I sorted} σ_I γ^{i1} ... γ^{ik} χ`.
    pub fn clifford_mult(&self, form: &Skew, chi: &[Jet]) -> Result<Spinor> {
        if form.dim() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), found: form.dim() });
        }
        if chi.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: chi.len() });
        }
        let sub = form.subsets();
        let order = form.order().min(chi.iter().map(Jet::order).min().unwrap_or(0));
        let mut out = vec![Jet::zero(chi[0].dim(), order); self.dim];
        for i in 0..sub.len() {
            let c = &form.comps()[i];
            if c.max_abs() == 0.0 {
                continue;
            }
            let labels = sub.labels(i);
            let sign: f64 = labels.iter().map(|&l| self.signature.eta(l)).product();
            let img = apply_const(&(self.product(&labels) * sign), chi);
            for (o, x) in out.iter_mut().zip(&img) {
                o.axpy(1.0, &(c * x));
            }
        }
        Ok(out)
    }
}

/// All permutations of `0..k` with their signs.
pub(crate) fn permutations(k: usize) -> Vec<(Vec<usize>, f64)> {
    if k == 0 {
        return vec![(vec![], 1.0)];
    }
    let mut out = Vec::new();
    for (p, s) in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            let moved = (p.len() - pos) as i32;
            out.push((q, if moved % 2 == 0 { s } else { -s }));
        }
    }
    out
}

/// Constant matrix acting on a jet-valued spinor.
pub fn apply_const(m: &DMatrix<f64>, v: &[Jet]) -> Spinor {
    let order = v.iter().map(Jet::order).min().unwrap_or(0);
    (0..m.nrows())
        .map(|a| {
            let mut s = Jet::zero(v[0].dim(), order);
            for c in 0..m.ncols() {
                let w = m[(a, c)];
                if w != 0.0 {
                    s.axpy(w, &v[c]);
                }
            }
            s
        })
        .collect()
}

/// Jet-valued matrix with structural zeros.
#[derive(Clone, Debug)]
pub struct JetMatrix {
    pub rows: Vec<Vec<Option<Jet>>>,
}

impl JetMatrix {
    fn from_terms(dim: usize, terms: &[(Jet, DMatrix<f64>)]) -> Self {
        let mut rows = vec![vec![None; dim]; dim];
        for (coef, m) in terms {
            if coef.max_abs() == 0.0 {
                continue;
            }
            for a in 0..dim {
                for c in 0..dim {
                    let w = m[(a, c)];
                    if w == 0.0 {
                        continue;
                    }
                    let entry: &mut Option<Jet> = &mut rows[a][c];
                    match entry {
                        Some(e) => e.axpy(w, coef),
                        None => *entry = Some(coef.scale(w)),
                    }
                }
            }
        }
        JetMatrix { rows }
    }

    pub fn apply(&self, v: &[Jet]) -> Spinor {
        let order = v.iter().map(Jet::order).min().unwrap_or(0);
        let vars = v[0].dim();
        self.rows
            .iter()
            .map(|row| {
                let mut s = Jet::zero(vars, order);
                for (e, x) in row.iter().zip(v) {
                    if let Some(e) = e {
                        s += &(e * x);
                    }
                }
                s
            })
            .collect()
    }
}

/// Coordinate gamma matrices and spin connection at a point.
#[derive(Clone, Debug)]
pub struct SpinPoint {
    pub structure: Arc<SpinStructure>,
    /// `γ_a = θ^i_a γ_i`
    pub gamma_lower: Vec<JetMatrix>,
    /// `γ^a = g^{ab} γ_b`
    pub gamma_upper: Vec<JetMatrix>,
    /// `D_a χ = ∂_a χ + connection[a] χ`
    pub connection: Vec<JetMatrix>,
}

impl SpinPoint {
    pub fn new(geo: &PointGeometry, structure: Arc<SpinStructure>) -> Result<Self> {
        if structure.signature != geo.signature {
            return Err(Error::UnsupportedSignature { p: geo.signature.p, q: geo.signature.q });
        }
        let n = geo.n();
        let dim = structure.dim;
        let fr = &geo.frame;
        let gamma_lower = (0..n)
            .map(|a| {
                let terms: Vec<(Jet, DMatrix<f64>)> =
                    (0..n).map(|i| (fr.theta[i][a].clone(), structure.gammas[i].clone())).collect();
                JetMatrix::from_terms(dim, &terms)
            })
            .collect();
        let gamma_upper = (0..n)
            .map(|a| {
                let terms: Vec<(Jet, DMatrix<f64>)> =
                    (0..n).map(|i| (fr.e[i][a].clone(), structure.gamma_upper(i))).collect();
                JetMatrix::from_terms(dim, &terms)
            })
            .collect();
        let connection = (0..n)
            .map(|a| {
                let mut terms = Vec::new();
                for j in 0..n {
                    for k in (j + 1)..n {
                        let m = structure.gamma_upper(j) * structure.gamma_upper(k) * 0.5;
                        terms.push((fr.omega[a][j][k].clone(), m));
                    }
                }
                JetMatrix::from_terms(dim, &terms)
            })
            .collect();
        Ok(SpinPoint { structure, gamma_lower, gamma_upper, connection })
    }

    pub fn dim(&self) -> usize {
        self.structure.dim
    }

    /// `D_a χ` for each coordinate direction `a`.
    pub fn covariant_derivative(&self, chi: &[Jet]) -> Result<Vec<Spinor>> {
        let order = chi.iter().map(Jet::order).min().unwrap_or(0);
        if order == 0 {
            return Err(Error::OrderExhausted);
        }
        Ok(self
            .connection
            .iter()
            .enumerate()
            .map(|(a, conn)| {
                let mut d: Spinor = chi.iter().map(|c| c.partial(a)).collect();
                for (x, y) in d.iter_mut().zip(conn.apply(chi)) {
                    *x += &y;
                }
                d
            })
            .collect())
    }

    /// `∇̸χ = γ^a D_a χ`.
    pub fn dirac(&self, chi: &[Jet]) -> Result<Spinor> {
        let d = self.covariant_derivative(chi)?;
        Ok(self.contract_upper(&d))
    }

    /// `γ^a φ_a` for a spinor-valued 1-form.
    pub fn contract_upper(&self, phi: &[Spinor]) -> Spinor {
        let mut out: Option<Spinor> = None;
        for (a, p) in phi.iter().enumerate() {
            let t = self.gamma_upper[a].apply(p);
            out = Some(match out {
                None => t,
                Some(o) => add_spinor(&o, &t),
            });
        }
        out.expect("at least one direction")
    }

    /// `υ·χ = υ_a γ^a χ` for a coordinate 1-form `υ`.
    pub fn vector_mult(&self, upsilon: &[Jet], chi: &[Jet]) -> Spinor {
        let mut out: Option<Spinor> = None;
        for (a, u) in upsilon.iter().enumerate() {
            if u.max_abs() == 0.0 {
                continue;
            }
            let t = scale_spinor(&self.gamma_upper[a].apply(chi), u);
            out = Some(match out {
                None => t,
                Some(o) => add_spinor(&o, &t),
            });
        }
        out.unwrap_or_else(|| zero_spinor(self.dim(), chi[0].dim(), chi[0].order().min(upsilon[0].order())))
    }

    /// `Σ_{A sorted} σ_A γ^{[A]} χ` for a coordinate k-form, computed through
    /// frame components where the antisymmetrization is free.
    pub fn form_mult(&self, geo: &PointGeometry, form: &Skew, chi: &[Jet]) -> Result<Spinor> {
        let frame_form = to_frame(geo, form);
        self.structure.clifford_mult(&frame_form, chi)
    }
}

/// Frame components `σ(e_I) = Σ_A det(e[I, A]) σ_A` of a coordinate k-form.
pub fn to_frame(geo: &PointGeometry, form: &Skew) -> Skew {
    let m: Vec<Vec<Option<Jet>>> =
        geo.frame.e.iter().map(|row| row.iter().map(|j| Some(j.clone())).collect()).collect();
    form.lambda_map(&m)
}

/// Coordinate components `σ_A = Σ_I det(θ[I, A]) σ(e_I)` of a frame k-form.
pub fn from_frame(geo: &PointGeometry, form: &Skew) -> Skew {
    let n = geo.n();
    let m: Vec<Vec<Option<Jet>>> =
        (0..n).map(|a| (0..n).map(|i| Some(geo.frame.theta[i][a].clone())).collect()).collect();
    form.lambda_map(&m)
}

pub fn zero_spinor(dim: usize, vars: usize, order: usize) -> Spinor {
    vec![Jet::zero(vars, order); dim]
}

pub fn add_spinor(a: &[Jet], b: &[Jet]) -> Spinor {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub_spinor(a: &[Jet], b: &[Jet]) -> Spinor {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale_spinor(a: &[Jet], f: &Jet) -> Spinor {
    a.iter().map(|x| x * f).collect()
}

pub fn spinor_max_abs(a: &[Jet]) -> f64 {
    a.iter().fold(0.0, |m, j| m.max(j.max_abs()))
}

pub fn spinor_max_value(a: &[Jet]) -> f64 {
    a.iter().fold(0.0, |m, j| m.max(j.value().abs()))
}

/// Number of sorted k-subsets, exposed for form-valued spinor pairings.
pub fn form_len(n: usize, k: usize) -> usize {
    subsets(n, k).len()
}
