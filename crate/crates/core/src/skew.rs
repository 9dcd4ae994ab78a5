//! Totally skew tensors stored by sorted label sets.
//!
//! A [`Skew`] of rank `r` over `dim` labels keeps one jet per `r`-subset of
//! `{0, .., dim-1}`, the component with labels in increasing order. The same
//! container serves coordinate k-forms (labels are coordinate indices) and
//! form tractors (labels are tractor slots).

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::jet::Jet;

/// Enumeration of `rank`-subsets of `dim` labels as bit masks, in
/// lexicographic order of their sorted label lists.
#[derive(Debug)]
pub struct Subsets {
    pub dim: usize,
    pub rank: usize,
    masks: Vec<u32>,
    index: Vec<u32>,
}

impl Subsets {
    fn build(dim: usize, rank: usize) -> Self {
        assert!(dim <= 16, "too many labels for mask storage");
        let mut masks = Vec::new();
        fn rec(start: usize, dim: usize, left: usize, acc: u32, out: &mut Vec<u32>) {
            if left == 0 {
                out.push(acc);
                return;
            }
            for i in start..dim {
                if dim - i < left {
                    break;
                }
                rec(i + 1, dim, left - 1, acc | (1 << i), out);
            }
        }
        rec(0, dim, rank, 0, &mut masks);
        let mut index = vec![u32::MAX; 1 << dim];
        for (i, &m) in masks.iter().enumerate() {
            index[m as usize] = i as u32;
        }
        Subsets { dim, rank, masks, index }
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn masks(&self) -> &[u32] {
        &self.masks
    }

    pub fn index_of(&self, mask: u32) -> Option<usize> {
        match self.index.get(mask as usize) {
            Some(&i) if i != u32::MAX => Some(i as usize),
            _ => None,
        }
    }

    pub fn labels(&self, i: usize) -> Vec<usize> {
        mask_labels(self.masks[i])
    }
}

pub fn subsets(dim: usize, rank: usize) -> Arc<Subsets> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Subsets>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("subset cache poisoned");
    guard.entry((dim, rank)).or_insert_with(|| Arc::new(Subsets::build(dim, rank))).clone()
}

pub fn mask_labels(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask & (1 << i) != 0).collect()
}

/// Mask and sign of an ordered label tuple, `None` on a repeated label.
pub fn sort_sign(labels: &[usize]) -> Option<(u32, f64)> {
    let mut mask = 0u32;
    let mut inversions = 0u32;
    for &l in labels {
        let bit = 1u32 << l;
        if mask & bit != 0 {
            return None;
        }
        inversions += (mask & !((bit << 1) - 1)).count_ones();
        mask |= bit;
    }
    Some((mask, if inversions % 2 == 0 { 1.0 } else { -1.0 }))
}

/// Sign of concatenating the sorted lists of two disjoint masks.
pub fn merge_sign(a: u32, b: u32) -> f64 {
    let mut inv = 0;
    for t in mask_labels(b) {
        inv += (a & !((2u32 << t) - 1)).count_ones();
    }
    if inv % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn between_mask(i: usize, j: usize) -> u32 {
    let (lo, hi) = if i < j { (i, j) } else { (j, i) };
    if hi - lo <= 1 {
        0
    } else {
        ((1u32 << hi) - 1) & !((2u32 << lo) - 1)
    }
}

/// Entry `(row, col, value)` of a sparse jet-valued endomorphism of the
/// label space.
pub type SparseEntry = (usize, usize, Jet);

#[derive(Clone, Debug)]
pub struct Skew {
    dim: usize,
    rank: usize,
    vars: usize,
    order_hint: usize,
    comps: Vec<Jet>,
}

impl Skew {
    pub fn zero(dim: usize, rank: usize, vars: usize, order: usize) -> Self {
        let len = subsets(dim, rank).len();
        Skew { dim, rank, vars, order_hint: order, comps: vec![Jet::zero(vars, order); len] }
    }

    /// Builds from components in subset order; `vars`/`order` describe the
    /// jets and matter only when there are no components.
    pub fn from_comps(dim: usize, rank: usize, vars: usize, order: usize, comps: Vec<Jet>) -> Self {
        assert_eq!(comps.len(), subsets(dim, rank).len(), "component count");
        Skew { dim, rank, vars, order_hint: order, comps }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn comps(&self) -> &[Jet] {
        &self.comps
    }

    pub fn comps_mut(&mut self) -> &mut [Jet] {
        &mut self.comps
    }

    pub fn subsets(&self) -> Arc<Subsets> {
        subsets(self.dim, self.rank)
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn order(&self) -> usize {
        self.comps.iter().map(Jet::order).min().unwrap_or(self.order_hint)
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().fold(0.0, |m, j| m.max(j.max_abs()))
    }

    pub fn max_abs_value(&self) -> f64 {
        self.comps.iter().fold(0.0, |m, j| m.max(j.value().abs()))
    }

    /// Component at an arbitrary ordered label tuple.
    pub fn get(&self, labels: &[usize]) -> Jet {
        debug_assert_eq!(labels.len(), self.rank);
        match sort_sign(labels) {
            Some((mask, s)) => {
                let i = subsets(self.dim, self.rank).index_of(mask).expect("label out of range");
                if s > 0.0 {
                    self.comps[i].clone()
                } else {
                    -&self.comps[i]
                }
            }
            None => Jet::zero(self.vars(), self.order()),
        }
    }

    /// Adds `s * v` to the component at an ordered label tuple.
    pub fn add_at(&mut self, labels: &[usize], s: f64, v: &Jet) {
        if let Some((mask, sign)) = sort_sign(labels) {
            let i = subsets(self.dim, self.rank).index_of(mask).expect("label out of range");
            self.comps[i].axpy(sign * s, v);
        }
    }

    pub fn by_mask(&self, mask: u32) -> &Jet {
        &self.comps[subsets(self.dim, self.rank).index_of(mask).expect("mask rank")]
    }

    pub fn map(&self, f: impl Fn(&Jet) -> Jet) -> Skew {
        let comps: Vec<Jet> = self.comps.iter().map(f).collect();
        let order_hint = comps.iter().map(Jet::order).min().unwrap_or(self.order_hint);
        Skew { dim: self.dim, rank: self.rank, vars: self.vars, order_hint, comps }
    }

    pub fn scale(&self, s: f64) -> Skew {
        self.map(|j| j.scale(s))
    }

    pub fn partial(&self, d: usize) -> Skew {
        let mut out = self.map(|j| j.partial(d));
        if out.comps.is_empty() {
            out.order_hint = out.order_hint.saturating_sub(1);
        }
        out
    }

    pub fn truncate(&self, order: usize) -> Skew {
        let mut out = self.map(|j| j.truncate(order));
        out.order_hint = out.order_hint.min(order);
        out
    }

    pub fn mul_jet(&self, f: &Jet) -> Skew {
        self.map(|j| j * f)
    }

    pub fn axpy(&mut self, s: f64, other: &Skew) {
        assert_eq!((self.dim, self.rank), (other.dim, other.rank), "skew shape");
        for (a, b) in self.comps.iter_mut().zip(&other.comps) {
            a.axpy(s, b);
        }
    }

    pub fn add(&self, other: &Skew) -> Skew {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &Skew) -> Skew {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Derivation action of the endomorphism `M` (entries `M[row][col]`):
    /// `(MΦ)^{s_0..s_r} = Σ_i Σ_J M[s_i][J] Φ^{s_0..J..s_r}`.
    pub fn derive(&self, entries: &[SparseEntry]) -> Skew {
        let order = entries.iter().map(|e| e.2.order()).fold(self.order(), usize::min);
        let sub = self.subsets();
        let mut out = Skew::zero(self.dim, self.rank, self.vars(), order);
        for (si, &src) in sub.masks().iter().enumerate() {
            let phi = &self.comps[si];
            if phi.max_abs() == 0.0 {
                continue;
            }
            for (row, col, m) in entries {
                let (row, col) = (*row, *col);
                if src & (1 << col) == 0 {
                    continue;
                }
                let rest = src & !(1 << col);
                if rest & (1 << row) != 0 {
                    continue;
                }
                let target = rest | (1 << row);
                let sign = if (rest & between_mask(row, col)).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                let ti = sub.index_of(target).expect("target rank");
                out.comps[ti].axpy(sign, &(m * phi));
            }
        }
        out
    }

    pub fn wedge(&self, other: &Skew) -> Skew {
        assert_eq!(self.dim, other.dim, "wedge label spaces");
        let rank = self.rank + other.rank;
        let order = self.order().min(other.order());
        let mut out = Skew::zero(self.dim, rank, self.vars(), order);
        if rank > self.dim {
            return out;
        }
        let (sa, sb, so) = (self.subsets(), other.subsets(), subsets(self.dim, rank));
        for (i, &a) in sa.masks().iter().enumerate() {
            if self.comps[i].max_abs() == 0.0 {
                continue;
            }
            for (j, &b) in sb.masks().iter().enumerate() {
                if a & b != 0 {
                    continue;
                }
                let t = so.index_of(a | b).expect("wedge rank");
                out.comps[t].axpy(merge_sign(a, b), &(&self.comps[i] * &other.comps[j]));
            }
        }
        out
    }

    /// Image under the induced map `Λ^r M`: `out_S = Σ_T det(M[S,T]) in_T`.
    /// `None` entries of `m` are structural zeros.
    pub fn lambda_map(&self, m: &[Vec<Option<Jet>>]) -> Skew {
        let sub = self.subsets();
        let order = m.iter().flatten().flatten().map(Jet::order).fold(self.order(), usize::min);
        let mut out = Skew::zero(self.dim, self.rank, self.vars(), order);
        for (si, &s) in sub.masks().iter().enumerate() {
            let rows = mask_labels(s);
            for (ti, &t) in sub.masks().iter().enumerate() {
                if self.comps[ti].max_abs() == 0.0 {
                    continue;
                }
                let cols = mask_labels(t);
                if let Some(d) = minor_det(m, &rows, &cols, self.vars(), order) {
                    out.comps[si].axpy(1.0, &(&d * &self.comps[ti]));
                }
            }
        }
        out
    }
}

/// Determinant of `m[rows][cols]` by Laplace expansion along the first
/// row; `None` if it vanishes structurally.
pub fn minor_det(
    m: &[Vec<Option<Jet>>],
    rows: &[usize],
    cols: &[usize],
    vars: usize,
    order: usize,
) -> Option<Jet> {
    if rows.is_empty() {
        return Some(Jet::constant(vars, order, 1.0));
    }
    let r = rows[0];
    let mut acc: Option<Jet> = None;
    for (k, &c) in cols.iter().enumerate() {
        let Some(entry) = &m[r][c] else { continue };
        let rest_cols: Vec<usize> = cols.iter().enumerate().filter(|(i, _)| *i != k).map(|(_, &c)| c).collect();
        let Some(sub) = minor_det(m, &rows[1..], &rest_cols, vars, order) else { continue };
        let term = entry * &sub;
        let s = if k % 2 == 0 { 1.0 } else { -1.0 };
        match &mut acc {
            Some(a) => a.axpy(s, &term),
            None => acc = Some(term.scale(s)),
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: f64) -> Jet {
        Jet::constant(1, 0, v)
    }

    #[test]
    fn subset_counts() {
        assert_eq!(subsets(7, 2).len(), 21);
        assert_eq!(subsets(5, 0).len(), 1);
        assert_eq!(subsets(4, 5).len(), 0);
    }

    #[test]
    fn sort_sign_counts_inversions() {
        assert_eq!(sort_sign(&[0, 1, 2]), Some((0b111, 1.0)));
        assert_eq!(sort_sign(&[1, 0, 2]), Some((0b111, -1.0)));
        assert_eq!(sort_sign(&[2, 0, 1]), Some((0b111, 1.0)));
        assert_eq!(sort_sign(&[1, 1]), None);
        assert_eq!(merge_sign(0b010, 0b001), -1.0);
        assert_eq!(merge_sign(0b001, 0b110), 1.0);
    }

    #[test]
    fn wedge_of_basis_vectors() {
        let mut e0 = Skew::zero(3, 1, 1, 0);
        let mut e1 = Skew::zero(3, 1, 1, 0);
        e0.add_at(&[0], 1.0, &c(1.0));
        e1.add_at(&[1], 1.0, &c(1.0));
        let w = e1.wedge(&e0);
        assert_eq!(w.get(&[0, 1]).value(), -1.0);
        assert_eq!(w.get(&[1, 0]).value(), 1.0);
    }

    #[test]
    fn derivation_matches_dense_action_on_two_forms() {
        // M = E_{20} (maps label 0 to label 2): e0∧e1 -> e2∧e1 = -e1∧e2
        let mut phi = Skew::zero(3, 2, 1, 0);
        phi.add_at(&[0, 1], 1.0, &c(1.0));
        let out = phi.derive(&[(2, 0, c(1.0))]);
        assert_eq!(out.get(&[1, 2]).value(), -1.0);
        assert_eq!(out.get(&[0, 1]).value(), 0.0);
    }

    #[test]
    fn lambda_map_is_determinant_on_top_degree() {
        let m: Vec<Vec<Option<Jet>>> = vec![
            vec![Some(c(2.0)), Some(c(1.0))],
            vec![Some(c(1.0)), Some(c(3.0))],
        ];
        let mut top = Skew::zero(2, 2, 1, 0);
        top.add_at(&[0, 1], 1.0, &c(1.0));
        assert_eq!(top.lambda_map(&m).get(&[0, 1]).value(), 5.0);
    }
}
