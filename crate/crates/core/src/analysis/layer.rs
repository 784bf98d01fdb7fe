//! Consistency checks of the discrete H¹ calculus: Bernstein's inequality
//! on a spectral subspace, the bracket `[X, Y] = T`, and the homogeneous
//! scaling of Haar measure.

use std::sync::Arc;

use serde::Serialize;

use super::derivatives::vector_field_apply;
use super::spectrum::{random_coefficients, GridLaplacian, SpectralProjector};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::group::{GroupPoint, ModelKind};

#[derive(Clone, Debug, Serialize)]
pub struct SpectralLayerReport {
    pub omega: f64,
    pub dim: usize,
    /// `max ‖ℒ eᵢ‖ / (ω ‖eᵢ‖)` with the assembled grid operator.
    pub bernstein_basis: f64,
    /// Same ratio over random elements of the span.
    pub bernstein_random: f64,
    /// `sup |XYf − YXf − Tf|` for a Gaussian bump.
    pub commutator_error: f64,
    pub homogeneous_dimension: usize,
    /// Relative error of `∫ f∘δ_{1/t} = t^Q ∫ f`.
    pub haar_scaling_error: f64,
    pub t: f64,
}

impl SpectralLayerReport {
    pub fn bernstein_holds(&self) -> bool {
        self.bernstein_basis <= 1.0 + 1e-8 && self.bernstein_random <= 1.0 + 1e-8
    }
}

fn gauge_bump(p: &GroupPoint) -> f64 {
    let c = p.coords;
    (-(c[0] * c[0] + c[1] * c[1]) - c[2] * c[2]).exp()
}

/// `‖ℒf‖ / (ω‖f‖)` for each basis vector (first) and for `samples` random
/// elements (second), both maximized.
pub fn bernstein_ratios(proj: &SpectralProjector, samples: usize, seed: u64) -> Result<(f64, f64)> {
    let lap = GridLaplacian::new(proj.grid.clone())?;
    let ratio = |f: &GridFunction| lap.apply_grid(f).l2() / (proj.omega * f.l2());
    let basis = (0..proj.dim()).map(|i| ratio(&proj.basis_function(i))).fold(0.0, f64::max);
    let mut random = 0.0f64;
    for k in 0..samples as u64 {
        let f = proj.synthesize(&random_coefficients(proj.dim(), seed.wrapping_add(k))?);
        random = random.max(ratio(&f));
    }
    Ok((basis, random))
}

/// `sup |XYf − YXf − Tf|` on `grid` for the bump `exp(−|z|² − t²)`.
pub fn commutator_defect(grid: Arc<Grid>) -> Result<f64> {
    if grid.model.kind != ModelKind::Heisenberg {
        return Err(Error::UnsupportedModel { op: "commutator_defect", model: grid.model.id() });
    }
    let f = GridFunction::from_real_fn(grid, gauge_bump);
    let xy = vector_field_apply(0, &vector_field_apply(1, &f, 4)?, 4)?;
    let yx = vector_field_apply(1, &vector_field_apply(0, &f, 4)?, 4)?;
    let t = vector_field_apply(2, &f, 4)?;
    Ok(xy.sub(&yx)?.sub(&t)?.norms().sup)
}

/// Quadrature check of `|δ_t(A)| = t^Q |A|` in its integrated form
/// `∫ f(δ_{1/t} x) dx = t^Q ∫ f(x) dx`.
pub fn haar_dilation_defect(grid: Arc<Grid>, t: f64) -> Result<f64> {
    let model = grid.model;
    let q = model
        .homogeneous_dimension()
        .ok_or_else(|| Error::UnsupportedModel { op: "haar_dilation_defect", model: model.id() })?;
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("dilation must be positive, got {t}")));
    }
    let w = grid.weights();
    let integral = |g: &dyn Fn(&GroupPoint) -> f64| -> f64 {
        (0..grid.len()).map(|k| g(&grid.point(k)) * w[k]).sum()
    };
    let base = integral(&gauge_bump);
    let scaled = integral(&|p: &GroupPoint| gauge_bump(&model.dilate(1.0 / t, p).expect("positive dilation")));
    let expect = t.powi(q as i32) * base;
    Ok((scaled - expect).abs() / expect)
}

/// All three checks. `calculus_grid` should resolve the bump and contain
/// its `t`-dilate.
pub fn spectral_layer_check(proj: &SpectralProjector, calculus_grid: Arc<Grid>, t: f64, seed: u64) -> Result<SpectralLayerReport> {
    let (bernstein_basis, bernstein_random) = bernstein_ratios(proj, 20, seed)?;
    Ok(SpectralLayerReport {
        omega: proj.omega,
        dim: proj.dim(),
        bernstein_basis,
        bernstein_random,
        commutator_error: commutator_defect(calculus_grid.clone())?,
        homogeneous_dimension: calculus_grid.model.homogeneous_dimension().unwrap_or(0),
        haar_scaling_error: haar_dilation_defect(calculus_grid, t)?,
        t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::sublaplacian_spectrum;
    use crate::grid::Axis;
    use crate::group::GroupModel;

    fn cube(half: f64, n: usize) -> Arc<Grid> {
        Arc::new(Grid::new(GroupModel::heisenberg(), vec![Axis::closed(-half, half, n).unwrap(); 3]).unwrap())
    }

    #[test]
    fn bernstein_on_small_span() {
        let grid = Arc::new(Grid::heisenberg_lattice(0.6, 6, 6).unwrap());
        let proj = sublaplacian_spectrum(grid, 3.0).unwrap();
        let (b, r) = bernstein_ratios(&proj, 5, 1).unwrap();
        assert!(b <= 1.0 + 1e-8 && r <= b + 1e-12, "{b} {r}");
        // the top eigenvalue is close to ω, so the bound is nearly sharp
        assert!(b > 0.5);
    }

    #[test]
    fn bracket_and_haar_scaling() {
        let grid = cube(5.0, 61);
        assert!(commutator_defect(grid.clone()).unwrap() < 1e-2);
        assert!(haar_dilation_defect(grid, 1.25).unwrap() < 1e-2);
        let line = Arc::new(Grid::new(GroupModel::real_line(), vec![Axis::closed(0.0, 1.0, 11).unwrap()]).unwrap());
        assert!(commutator_defect(line).is_err());
    }
}
