use rayon::prelude::*;

use super::space::{BasisFunction, Degree, FeSpace};
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::quadrature::{pair_points, split_interval, GaussRule};
use crate::sparse::{CsrMatrix, MatrixBuilder, SymmetricBuilder};

/// Right-hand side `f`.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    /// `Σ c_k x^k`, coefficients in ascending order.
    Polynomial(Vec<f64>),
    Constant(f64),
}

impl Source {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Source::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck),
            Source::Constant(c) => *c,
        }
    }

    /// Whether `f >= 0` on `[lo, hi]`, judged on a fine sample.
    pub fn is_nonnegative_on(&self, lo: f64, hi: f64) -> bool {
        (0..=1000).all(|k| self.eval(lo + (hi - lo) * k as f64 / 1000.0) >= 0.0)
    }
}

/// Standard P1 stiffness matrix on the free dofs.
pub fn assemble_local_stiffness(space: &FeSpace) -> Result<CsrMatrix> {
    if space.degree() != Degree::P1 {
        return Err(Error::Unsupported(
            "the local space must be continuous piecewise linear".into(),
        ));
    }
    let mut b = SymmetricBuilder::new();
    for (e, el) in space.elements().iter().enumerate() {
        let k = 1.0 / (el.b - el.a);
        let dofs = space.element_dofs(e);
        for (r, &di) in dofs.iter().enumerate() {
            for (c, &dj) in dofs.iter().enumerate().skip(r) {
                if let (Some(i), Some(j)) = (space.free_index(di), space.free_index(dj)) {
                    b.add(i, j, if r == c { k } else { -k });
                }
            }
        }
    }
    Ok(b.build(space.num_free()))
}

/// `∫ w φ_i φ_j` on the free dofs.
///
/// Each element is split at `breakpoints` (where `w` is not smooth) and
/// integrated with `rule` on every piece.
pub fn assemble_weighted_mass(
    space: &FeSpace,
    weight: &(dyn Fn(f64) -> f64 + Sync),
    breakpoints: &[f64],
    lumped: bool,
    rule: &GaussRule,
) -> Result<CsrMatrix> {
    let mut b = SymmetricBuilder::new();
    for (e, el) in space.elements().iter().enumerate() {
        for (p, q) in split_interval(el.a, el.b, breakpoints) {
            for (x, w) in rule.mapped(p, q) {
                let wx = weight(x);
                if wx < 0.0 || !wx.is_finite() {
                    return Err(Error::Assembly(format!(
                        "mass weight is {wx} at x = {x}; it must be nonnegative"
                    )));
                }
                let shape = space.shape(e, x);
                for (di, vi) in shape.iter() {
                    for (dj, vj) in shape.iter() {
                        if di > dj {
                            continue;
                        }
                        if let (Some(i), Some(j)) = (space.free_index(di), space.free_index(dj)) {
                            b.add(i, j, w * wx * vi * vj);
                        }
                    }
                }
            }
        }
    }
    let m = b.build(space.num_free());
    Ok(if lumped { m.lumped() } else { m })
}

/// `∫_{T_m} ∫_{T_n} J(x - y) (φ_i(x) - φ_i(y)) (φ_j(x) - φ_j(y)) dy dx`.
pub fn assemble_pair_integral(
    kernel: &KernelSpec,
    t_m: (f64, f64),
    t_n: (f64, f64),
    phi_i: &BasisFunction,
    phi_j: &BasisFunction,
    rule: &GaussRule,
) -> f64 {
    pair_points(kernel, t_m, t_n, rule)
        .iter()
        .map(|p| {
            p.w * (phi_i.eval(p.x) - phi_i.eval(p.y)) * (phi_j.eval(p.x) - phi_j.eval(p.y))
        })
        .sum()
}

/// Element-pair contribution to the nonlocal form: dofs touched and the
/// dense local matrix over them (row-major).
fn pair_block(
    space: &FeSpace,
    kernel: &KernelSpec,
    m: usize,
    n: usize,
    rule: &GaussRule,
) -> Option<(Vec<usize>, Vec<f64>)> {
    let (em, en) = (space.elements()[m], space.elements()[n]);
    let points = pair_points(kernel, (em.a, em.b), (en.a, en.b), rule);
    if points.is_empty() {
        return None;
    }
    let mut dofs: Vec<usize> = space.element_dofs(m).to_vec();
    for &d in space.element_dofs(n) {
        if !dofs.contains(&d) {
            dofs.push(d);
        }
    }
    let nd = dofs.len();
    let mut local = vec![0.0; nd * nd];
    let mut diff = vec![0.0; nd];
    for p in points {
        diff.iter_mut().for_each(|d| *d = 0.0);
        for (d, v) in space.shape(m, p.x).iter() {
            let k = dofs.iter().position(|&q| q == d).unwrap();
            diff[k] += v;
        }
        for (d, v) in space.shape(n, p.y).iter() {
            let k = dofs.iter().position(|&q| q == d).unwrap();
            diff[k] -= v;
        }
        for r in 0..nd {
            for c in 0..nd {
                local[r * nd + c] += p.w * diff[r] * diff[c];
            }
        }
    }
    Some((dofs, local))
}

/// `K_ij = ∬ J(x - y) (φ_i(y) - φ_i(x)) (φ_j(y) - φ_j(x))` over the
/// nonlocal region, on the free dofs.
///
/// Element rows are processed in parallel; contributions are merged in
/// element order so the result does not depend on the thread count.
pub fn assemble_nonlocal_form(
    space: &FeSpace,
    kernel: &KernelSpec,
    rule: &GaussRule,
) -> CsrMatrix {
    let radius = kernel.support_radius();
    let elems = space.elements();
    let rows: Vec<Vec<(usize, usize, f64)>> = (0..elems.len())
        .into_par_iter()
        .map(|m| {
            let mut out = Vec::new();
            for n in m..elems.len() {
                if elems[n].a - elems[m].b >= radius {
                    break;
                }
                let Some((dofs, local)) = pair_block(space, kernel, m, n, rule) else {
                    continue;
                };
                // I_{m,n} = I_{n,m}, so off-diagonal pairs count twice
                let factor = if m == n { 1.0 } else { 2.0 };
                let nd = dofs.len();
                for r in 0..nd {
                    for c in r..nd {
                        if let (Some(i), Some(j)) =
                            (space.free_index(dofs[r]), space.free_index(dofs[c]))
                        {
                            out.push((i, j, factor * local[r * nd + c]));
                        }
                    }
                }
            }
            out
        })
        .collect();
    let mut b = SymmetricBuilder::new();
    for row in rows {
        for (i, j, v) in row {
            b.add(i, j, v);
        }
    }
    b.build(space.num_free())
}

/// `C_ij = ∫_{nonlocal} ∫_{local} J(x - y) φ_i(y) ψ_j(x) dy dx`, local free
/// dofs by nonlocal free dofs.
pub fn assemble_coupling(
    space_l: &FeSpace,
    space_n: &FeSpace,
    kernel: &KernelSpec,
    rule: &GaussRule,
) -> CsrMatrix {
    let radius = kernel.support_radius();
    let locals = space_l.elements();
    let rows: Vec<Vec<(usize, usize, f64)>> = space_n
        .elements()
        .par_iter()
        .enumerate()
        .map(|(m, em)| {
            let mut out = Vec::new();
            let start = locals.partition_point(|el| el.b <= em.a - radius);
            for (n, el) in locals.iter().enumerate().skip(start) {
                if el.a - em.b >= radius {
                    break;
                }
                let dofs_l = space_l.element_dofs(n);
                let dofs_n = space_n.element_dofs(m);
                let points = pair_points(kernel, (em.a, em.b), (el.a, el.b), rule);
                if points.is_empty() {
                    continue;
                }
                let mut local = vec![0.0; dofs_l.len() * dofs_n.len()];
                for p in points {
                    for (r, (_, vl)) in space_l.shape(n, p.y).iter().enumerate() {
                        for (c, (_, vn)) in space_n.shape(m, p.x).iter().enumerate() {
                            local[r * dofs_n.len() + c] += p.w * vl * vn;
                        }
                    }
                }
                for (r, &dl) in dofs_l.iter().enumerate() {
                    for (c, &dn) in dofs_n.iter().enumerate() {
                        if let (Some(i), Some(j)) = (space_l.free_index(dl), space_n.free_index(dn))
                        {
                            out.push((i, j, local[r * dofs_n.len() + c]));
                        }
                    }
                }
            }
            out
        })
        .collect();
    let mut b = MatrixBuilder::new();
    for row in rows {
        for (i, j, v) in row {
            b.add(i, j, v);
        }
    }
    b.build(space_l.num_free(), space_n.num_free())
}

/// `∫ f φ_i` on the free dofs.
pub fn assemble_load(space: &FeSpace, f: &(dyn Fn(f64) -> f64 + Sync), rule: &GaussRule) -> Vec<f64> {
    let mut b = vec![0.0; space.num_free()];
    for (e, el) in space.elements().iter().enumerate() {
        for (x, w) in rule.mapped(el.a, el.b) {
            let fx = f(x);
            for (d, v) in space.shape(e, x).iter() {
                if let Some(i) = space.free_index(d) {
                    b[i] += w * fx * v;
                }
            }
        }
    }
    b
}
