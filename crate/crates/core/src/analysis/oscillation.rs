//! Local oscillation `osc_{B_r}(f)(x) = sup_{y ∈ B_r} |f(x) − f(x y⁻¹)|`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::group::{GroupModel, GroupPoint, ModelKind};

/// Radii of the interpolated shells, as fractions of `r`.
const SHELL_FRACTIONS: [f64; 4] = [0.25, 0.5, 0.75, 1.0 - 1e-6];
const SHELL_POINTS: usize = 48;

/// Deterministic sample of `B_r`: every grid offset strictly inside plus
/// off-grid shells. The sample always contains the identity.
pub fn ball_sample(grid: &Grid, r: f64) -> Result<Vec<GroupPoint>> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
    }
    if r < 1e-3 * grid.min_spacing() {
        return Err(Error::UnderResolved(format!(
            "radius {r} is far below the grid spacing {}",
            grid.min_spacing()
        )));
    }
    let model = grid.model;
    let e = model.identity();
    let ec = model.to_chart(&e);
    let bounds = model.ball_chart_bounds(&e, r);
    let mut ranges = Vec::new();
    for (d, a) in grid.axes.iter().enumerate() {
        let h = a.h();
        let lo = ((bounds[d].0 - ec[d]) / h).ceil() as i64;
        let hi = ((bounds[d].1 - ec[d]) / h).floor() as i64;
        ranges.push((lo, hi));
    }
    let mut out = Vec::new();
    let dim = grid.dim();
    let mut idx = vec![0i64; dim];
    fn rec(
        d: usize,
        idx: &mut Vec<i64>,
        ranges: &[(i64, i64)],
        grid: &Grid,
        ec: &[f64; 3],
        r: f64,
        out: &mut Vec<GroupPoint>,
    ) {
        if d == ranges.len() {
            let mut c = *ec;
            for (k, &j) in idx.iter().enumerate() {
                c[k] += j as f64 * grid.axes[k].h();
            }
            let p = grid.model.from_chart(&c);
            if grid.model.gauge(&p) < r {
                out.push(p);
            }
            return;
        }
        for j in ranges[d].0..=ranges[d].1 {
            idx[d] = j;
            rec(d + 1, idx, ranges, grid, ec, r, out);
        }
    }
    rec(0, &mut idx, &ranges, grid, &ec, r, &mut out);
    for &f in &SHELL_FRACTIONS {
        out.extend(scaled_shell(&model, r * f, SHELL_POINTS));
    }
    Ok(out)
}

/// Points with gauge `rho` (dilated unit shell; chart-scaled box boundary
/// on the affine group).
pub fn scaled_shell(model: &GroupModel, rho: f64, count: usize) -> Vec<GroupPoint> {
    model
        .unit_shell(count)
        .into_iter()
        .map(|u| match model.kind {
            ModelKind::Affine => {
                let c = model.to_chart(&u);
                model.from_chart(&[rho * c[0], rho * c[1], 0.0])
            }
            _ => model.dilate(rho, &u).expect("positive radius"),
        })
        .collect()
}

/// Oscillation of an arbitrary evaluator at every node of `grid`.
pub fn oscillation_with<F>(grid: &std::sync::Arc<Grid>, r: f64, eval: F) -> Result<GridFunction>
where
    F: Fn(&GroupPoint) -> Complex64 + Sync,
{
    let sample = ball_sample(grid, r)?;
    let model = grid.model;
    let inv: Vec<GroupPoint> = sample.iter().map(|y| model.inv(y)).collect();
    let values = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let x = grid.point(k);
            let fx = eval(&x);
            let s = inv
                .iter()
                .map(|yi| (fx - eval(&model.mul(&x, yi))).norm())
                .fold(0.0, f64::max);
            Complex64::new(s, 0.0)
        })
        .collect();
    GridFunction::from_values(grid.clone(), values)
}

/// Oscillation of a grid function, with `f(xy⁻¹)` interpolated.
pub fn oscillation(f: &GridFunction, r: f64) -> Result<GridFunction> {
    oscillation_with(&f.grid, r, |p| f.interpolate(p))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct OscConvReport {
    /// `max_x (osc(f∗g)(x) − (|f| ∗ osc g)(x))`, clipped below at 0.
    pub max_violation: f64,
    pub max_lhs: f64,
    pub max_rhs: f64,
}

/// Checks `osc_{B_r}(f∗g) ≤ |f| ∗ osc_{B_r}(g)` at every node. The left
/// side evaluates `f∗g` directly at `xy⁻¹` (as `convolve_at` does) rather
/// than interpolating it.
/// On the right `osc g` is the oscillation of the zero extension of `g`:
/// node values where `y⁻¹x` is a node of the box, direct evaluation
/// elsewhere (just outside a Dirichlet box it need not vanish).
pub fn osc_conv_check(f: &GridFunction, g: &GridFunction, r: f64) -> Result<OscConvReport> {
    let grid = &f.grid;
    let model = grid.model;
    let og = oscillation(g, r)?;
    let inv: Vec<GroupPoint> = ball_sample(grid, r)?.iter().map(|y| model.inv(y)).collect();
    let osc_g = |z: &GroupPoint| -> f64 {
        match grid.node_index(z) {
            Some(k) => og.values[k].re,
            None => {
                let gz = g.interpolate(z);
                inv.iter().map(|yi| (gz - g.interpolate(&model.mul(z, yi))).norm()).fold(0.0, f64::max)
            }
        }
    };
    // (y⁻¹, f(y)·w_y) over the support of f
    let support: Vec<(GroupPoint, Complex64)> = f
        .values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm() > 0.0)
        .map(|(i, v)| (model.inv(&grid.point(i)), v * grid.weight(i)))
        .collect();
    // same sum as `convolve_at`, restricted to the support
    let lhs = oscillation_with(grid, r, |p| support.iter().map(|(yi, a)| a * g.interpolate(&model.mul(yi, p))).sum())?;
    let rhs: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let x = grid.point(k);
            support.iter().map(|(yi, a)| a.norm() * osc_g(&model.mul(yi, &x))).sum()
        })
        .collect();
    let mut rep = OscConvReport { max_violation: 0.0, max_lhs: 0.0, max_rhs: 0.0 };
    for (l, rr) in lhs.values.iter().zip(&rhs) {
        rep.max_violation = rep.max_violation.max(l.re - rr);
        rep.max_lhs = rep.max_lhs.max(l.re);
        rep.max_rhs = rep.max_rhs.max(*rr);
    }
    Ok(rep)
}
