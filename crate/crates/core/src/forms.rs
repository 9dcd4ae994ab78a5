//! Coordinate differential forms at a point: covariant derivatives,
//! alternation, traces and interior products on [`Skew`] tensors over the
//! `n` coordinate labels (all indices down unless stated).

use crate::geometry::PointGeometry;
use crate::jet::Jet;
use crate::skew::{subsets, Skew, SparseEntry};

/// A form-valued 1-form `T_c{}_A`, indexed by `c`.
pub type FormOneForm = Vec<Skew>;

fn lower_entries(geo: &PointGeometry, c: usize) -> Vec<SparseEntry> {
    let n = geo.n();
    let mut e = Vec::new();
    for a in 0..n {
        for f in 0..n {
            let gam = geo.christoffel(f, c, a);
            if gam.max_abs() != 0.0 {
                e.push((a, f, -gam));
            }
        }
    }
    e
}

/// `D_c σ_A` for each `c`.
pub fn cov_d(geo: &PointGeometry, sigma: &Skew) -> FormOneForm {
    (0..geo.n()).map(|c| sigma.partial(c).add(&sigma.derive(&lower_entries(geo, c)))).collect()
}

/// `D_p T_q{}_A`, returned as `[p][q]`.
pub fn cov_d_valued(geo: &PointGeometry, t: &[Skew]) -> Vec<FormOneForm> {
    let n = geo.n();
    let d: Vec<FormOneForm> = t.iter().map(|tq| cov_d(geo, tq)).collect();
    (0..n)
        .map(|p| {
            (0..n)
                .map(|q| {
                    let mut s = d[q][p].clone();
                    for e in 0..n {
                        let gam = geo.christoffel(e, p, q);
                        if gam.max_abs() != 0.0 {
                            s = s.sub(&t[e].mul_jet(gam));
                        }
                    }
                    s
                })
                .collect()
        })
        .collect()
}

/// `(i_p σ)_B = σ_{pB}`.
pub fn insert(sigma: &Skew, p: usize) -> Skew {
    let r = sigma.rank();
    assert!(r >= 1, "interior product of a function");
    let sub = subsets(sigma.dim(), r - 1);
    let comps = (0..sub.len())
        .map(|i| {
            let mut l = vec![p];
            l.extend(sub.labels(i));
            sigma.get(&l)
        })
        .collect();
    Skew::from_comps(sigma.dim(), r - 1, sigma.vars(), sigma.order(), comps)
}

/// `Σ_p v^p σ_{pB}`.
pub fn insert_vector(v: &[Jet], sigma: &Skew) -> Skew {
    let mut out = Skew::zero(sigma.dim(), sigma.rank() - 1, sigma.vars(), sigma.order());
    for (p, vp) in v.iter().enumerate() {
        if vp.max_abs() != 0.0 {
            out = out.add(&insert(sigma, p).mul_jet(vp));
        }
    }
    out
}

/// `X_{[a_0; a_1 .. a_r]}`: alternation of a form-valued 1-form.
pub fn alt_first(xs: &[Skew]) -> Skew {
    let n = xs.len();
    let r = xs[0].rank();
    let order = xs.iter().map(Skew::order).min().unwrap_or(0);
    let mut out = Skew::zero(n, r + 1, xs[0].vars(), order);
    let sub = subsets(n, r + 1);
    let w = 1.0 / (r + 1) as f64;
    for i in 0..sub.len() {
        let labels = sub.labels(i);
        let mut acc = Jet::zero(xs[0].vars(), order);
        for (pos, &a) in labels.iter().enumerate() {
            let mut rest = labels.clone();
            rest.remove(pos);
            let s = if pos % 2 == 0 { w } else { -w };
            acc.axpy(s, &xs[a].get(&rest));
        }
        out.comps_mut()[i] = acc;
    }
    out
}

/// `dσ = (k+1) D_[a_0 σ_A]`.
pub fn exterior_d(geo: &PointGeometry, sigma: &Skew) -> Skew {
    alt_first(&cov_d(geo, sigma)).scale((sigma.rank() + 1) as f64)
}

/// `g^{pq} T_p{}_{qB}`.
pub fn trace_first(geo: &PointGeometry, t: &[Skew]) -> Skew {
    let n = geo.n();
    let mut out = Skew::zero(n, t[0].rank() - 1, t[0].vars(), t[0].order());
    for p in 0..n {
        out = out.add(&insert_vector(&geo.ginv[p], &t[p]));
    }
    out
}

/// `δ̃σ_B = g^{pq} D_p σ_{qB}`, so that `δσ = -δ̃σ`.
pub fn divergence(geo: &PointGeometry, sigma: &Skew) -> Skew {
    trace_first(geo, &cov_d(geo, sigma))
}

/// `[c] ↦ g_{c[a_1} τ_{a_2 .. a_k]}`.
pub fn metric_wedge(geo: &PointGeometry, tau: &Skew) -> FormOneForm {
    let n = geo.n();
    (0..n)
        .map(|c| {
            let xs: Vec<Skew> = (0..n).map(|a| tau.mul_jet(&geo.g[c][a])).collect();
            alt_first(&xs)
        })
        .collect()
}

/// Component `c` of a `(k+1)`-form viewed as a form-valued 1-form.
pub fn split_first(m: &Skew) -> FormOneForm {
    (0..m.dim()).map(|c| insert(m, c)).collect()
}

/// Projection of `T_c{}_A` to the part with trivial alternation and
/// trivial trace.
pub fn proj_hw(geo: &PointGeometry, t: &[Skew]) -> FormOneForm {
    let n = geo.n();
    let k = t[0].rank();
    let alt = if k < n { Some(split_first(&alt_first(t))) } else { None };
    let tr = if k >= 1 {
        let c = k as f64 / (n - k + 1) as f64;
        Some(metric_wedge(geo, &trace_first(geo, t)).into_iter().map(|s| s.scale(c)).collect::<Vec<_>>())
    } else {
        None
    };
    (0..n)
        .map(|c| {
            let mut s = t[c].clone();
            if let Some(a) = &alt {
                s = s.sub(&a[c]);
            }
            if let Some(tr) = &tr {
                s = s.sub(&tr[c]);
            }
            s
        })
        .collect()
}

fn metric_entries(m: &[Vec<Jet>]) -> Vec<Vec<Option<Jet>>> {
    m.iter().map(|row| row.iter().map(|j| if j.max_abs() == 0.0 { None } else { Some(j.clone()) }).collect()).collect()
}

/// `σ^A`, all indices raised with `g^{-1}`.
pub fn raise_all(geo: &PointGeometry, sigma: &Skew) -> Skew {
    sigma.lambda_map(&metric_entries(&geo.ginv))
}

/// `σ_A`, all indices lowered with `g`.
pub fn lower_all(geo: &PointGeometry, sigma: &Skew) -> Skew {
    sigma.lambda_map(&metric_entries(&geo.g))
}

/// `Σ_{P sorted} u^P v_{PB}` for an upper-index `u` of rank `r` and a lower
/// `v` of rank `r + s`.
pub fn contract_sorted(u: &Skew, v: &Skew) -> Skew {
    let r = u.rank();
    let n = v.dim();
    let out_rank = v.rank() - r;
    let order = u.order().min(v.order());
    let mut out = Skew::zero(n, out_rank, v.vars(), order);
    let (su, so) = (subsets(n, r), subsets(n, out_rank));
    for (i, &pm) in su.masks().iter().enumerate() {
        let c = &u.comps()[i];
        if c.max_abs() == 0.0 {
            continue;
        }
        for (j, &bm) in so.masks().iter().enumerate() {
            if pm & bm != 0 {
                continue;
            }
            let s = crate::skew::merge_sign(pm, bm);
            out.comps_mut()[j].axpy(s, &(c * v.by_mask(pm | bm)));
        }
    }
    out
}

pub fn max_abs_value(t: &[Skew]) -> f64 {
    t.iter().fold(0.0, |m, s| m.max(s.max_abs_value()))
}

pub fn max_abs(t: &[Skew]) -> f64 {
    t.iter().fold(0.0, |m, s| m.max(s.max_abs()))
}
