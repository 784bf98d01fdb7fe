//! Left-invariant vector fields applied by central finite differences.
//!
//! On H¹ the fields read `X = ∂x − (y/2)∂t`, `Y = ∂y + (x/2)∂t`, `T = ∂t`
//! in the chart; on ℝⁿ they are the coordinate derivatives. Values outside
//! the box are taken as zero. On lattice-compatible H¹ grids `X` and `Y`
//! are differenced along right translations instead of chart axes.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::group::ModelKind;

/// Multi-index `α` for the ordered monomial `X₁^{α₁} X₂^{α₂} …`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Homogeneity degree `d(α) = Σ wᵢ αᵢ` for stratification weights `w`.
    pub fn degree(&self, weights: &[u32]) -> u32 {
        self.0.iter().zip(weights).map(|(a, w)| a * w).sum()
    }

    /// All multi-indices in `dim` variables with `lo ≤ |α| ≤ hi`, ordered by
    /// total order then lexicographically (descending in the first slot).
    pub fn all(dim: usize, lo: u32, hi: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        for total in lo..=hi {
            let mut cur = vec![0u32; dim];
            fn rec(d: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
                if d + 1 == cur.len() {
                    cur[d] = left;
                    out.push(MultiIndex(cur.clone()));
                    return;
                }
                for a in (0..=left).rev() {
                    cur[d] = a;
                    rec(d + 1, left - a, cur, out);
                }
            }
            if dim > 0 {
                rec(0, total, &mut cur, &mut out);
            }
        }
        out
    }
}

fn stencil(order: usize) -> Result<&'static [(i64, f64)]> {
    match order {
        2 => Ok(&[(-1, -0.5), (1, 0.5)]),
        4 => Ok(&[(-2, 1.0 / 12.0), (-1, -8.0 / 12.0), (1, 8.0 / 12.0), (2, -1.0 / 12.0)]),
        _ => Err(Error::InvalidArgument(format!("finite-difference order must be 2 or 4, got {order}"))),
    }
}

/// Central difference along chart axis `d`.
pub fn partial(f: &GridFunction, d: usize, order: usize) -> Result<GridFunction> {
    let grid = &f.grid;
    let st = stencil(order)?;
    if d >= grid.dim() {
        return Err(Error::InvalidArgument(format!("axis {d} out of range")));
    }
    let axis = grid.axes[d];
    if axis.n < 2 * order + 1 {
        return Err(Error::GridTooCoarse(format!(
            "axis {d} has {} nodes; an order-{order} stencil needs at least {}",
            axis.n,
            2 * order + 1
        )));
    }
    let h = axis.h();
    let n = axis.n as i64;
    let values = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let mut idx = grid.multi(k);
            let j = idx[d] as i64;
            let mut acc = Complex64::new(0.0, 0.0);
            for &(off, c) in st {
                let mut jj = j + off;
                if axis.periodic {
                    jj = jj.rem_euclid(n);
                } else if jj < 0 || jj >= n {
                    continue;
                }
                idx[d] = jj as usize;
                acc += f.values[grid.flat(&idx[..grid.dim()])] * c;
            }
            acc / h
        })
        .collect();
    GridFunction::from_values(grid.clone(), values)
}

/// Applies basis field `i` (H¹: 0 = X, 1 = Y, 2 = T; ℝⁿ: ∂ᵢ).
pub fn vector_field_apply(i: usize, f: &GridFunction, order: usize) -> Result<GridFunction> {
    let grid = f.grid.clone();
    match grid.model.kind {
        ModelKind::Euclidean(n) if i < n => partial(f, i, order),
        ModelKind::Heisenberg if i < 3 => {
            if i == 2 {
                return partial(f, 2, order);
            }
            if grid.heisenberg_lattice_step().is_some() {
                return lattice_difference(i, f, order);
            }
            let di = partial(f, i, order)?;
            let dt = partial(f, 2, order)?;
            let values = (0..grid.len())
                .map(|k| {
                    let c = grid.chart_coords(k);
                    // X: −y/2, Y: +x/2
                    let coef = if i == 0 { -0.5 * c[1] } else { 0.5 * c[0] };
                    di.values[k] + dt.values[k] * coef
                })
                .collect();
            GridFunction::from_values(grid, values)
        }
        _ => Err(Error::UnsupportedModel { op: "vector_field_apply", model: grid.model.id() }),
    }
}

/// Central difference along the right translations `exp(±s h X)` (or `Y`)
/// on a lattice-compatible H¹ grid, where every translate is a node.
fn lattice_difference(i: usize, f: &GridFunction, order: usize) -> Result<GridFunction> {
    let grid = f.grid.clone();
    let st = stencil(order)?;
    let h = grid.heisenberg_lattice_step().expect("lattice grid");
    if grid.axes[i].n < 2 * order + 1 {
        return Err(Error::GridTooCoarse(format!(
            "axis {i} has {} nodes; an order-{order} stencil needs at least {}",
            grid.axes[i].n,
            2 * order + 1
        )));
    }
    let half: Vec<i64> = grid.axes.iter().map(|a| (a.n / 2) as i64).collect();
    let values = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let m = grid.multi(k);
            let c: Vec<i64> = (0..3).map(|d| m[d] as i64 - half[d]).collect();
            let mut acc = Complex64::new(0.0, 0.0);
            for &(s, w) in st {
                let n = if i == 0 { [c[0] + s, c[1], c[2] - s * c[1]] } else { [c[0], c[1] + s, c[2] + s * c[0]] };
                if (0..3).any(|d| n[d].abs() > half[d]) {
                    continue;
                }
                let idx = [(n[0] + half[0]) as usize, (n[1] + half[1]) as usize, (n[2] + half[2]) as usize];
                acc += f.values[grid.flat(&idx)] * w;
            }
            acc / h
        })
        .collect();
    GridFunction::from_values(grid, values)
}

/// `X^α f = X₁^{α₁} X₂^{α₂} … f` (rightmost factor applied first).
pub fn apply_multi_index(alpha: &MultiIndex, f: &GridFunction, order: usize) -> Result<GridFunction> {
    let mut g = f.clone();
    for (i, &a) in alpha.0.iter().enumerate().rev() {
        for _ in 0..a {
            g = vector_field_apply(i, &g, order)?;
        }
    }
    Ok(g)
}
