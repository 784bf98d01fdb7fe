//! Kernel of a spectral subspace `χ_{[0,ω]}(ℒ)` of the sub-Laplacian.

use std::sync::Arc;

use num_complex::Complex64;

use super::{KernelKind, ReproducingKernel, Space};
use crate::analysis::SpectralProjector;
use crate::error::Result;
use crate::grid::{Grid, GridFunction};
use crate::group::GroupPoint;

impl Space for SpectralProjector {
    fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    fn dim(&self) -> usize {
        self.vectors.len()
    }

    fn eval_basis(&self, p: &GroupPoint) -> Vec<Complex64> {
        SpectralProjector::eval_basis(self, p).into_iter().map(|v| Complex64::new(v, 0.0)).collect()
    }

    fn basis_values(&self, i: usize) -> Vec<Complex64> {
        self.vectors[i].iter().map(|&v| Complex64::new(v, 0.0)).collect()
    }

    fn synthesize(&self, c: &[Complex64]) -> GridFunction {
        SpectralProjector::synthesize(self, c)
    }

    fn analyze(&self, f: &GridFunction) -> Vec<Complex64> {
        self.coefficients(f)
    }

    /// Real coefficients give real functions.
    fn symmetrize(&self, c: &mut [Complex64]) {
        c.iter_mut().for_each(|z| z.im = 0.0);
    }
}

pub fn spectral_kernel(proj: Arc<SpectralProjector>) -> Result<ReproducingKernel> {
    let omega = proj.omega;
    ReproducingKernel::new(KernelKind::Spectral { omega }, proj)
}

/// Relative defect of left invariance, `‖p_x(x·) − p_e(·)‖ / ‖p_e‖` over
/// the offsets `ys`. On the whole group the kernel depends only on `x⁻¹y`;
/// the Dirichlet box breaks this near the boundary.
pub fn left_invariance_defect(k: &ReproducingKernel, x: &GroupPoint, ys: &[GroupPoint]) -> f64 {
    let model = k.space.grid().model;
    let e = model.identity();
    let (mut num, mut den) = (0.0, 0.0);
    for y in ys {
        let a = k.value(x, &model.mul(x, y));
        let b = k.value(&e, y);
        num += (a - b).norm_sqr();
        den += b.norm_sqr();
    }
    (num / den).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::sublaplacian_spectrum;

    fn projector() -> Arc<SpectralProjector> {
        let grid = Arc::new(Grid::heisenberg_lattice(0.6, 8, 8).unwrap());
        Arc::new(sublaplacian_spectrum(grid, 2.0).unwrap())
    }

    #[test]
    fn kernel_reproduces_at_nodes() {
        let proj = projector();
        let k = spectral_kernel(proj.clone()).unwrap();
        let f = k.space.random_element(2).unwrap();
        for node in (0..proj.grid.len()).step_by(97) {
            let x = proj.grid.point(node);
            let px = k.vector_at(&x);
            let v = f.inner(&px).unwrap();
            assert!((v - f.values[node]).norm() < 1e-10);
            // p_x(x) = ‖p_x‖²
            let diag = k.value(&x, &x).re;
            assert!((diag - px.l2().powi(2)).abs() < 1e-10 * diag.max(1.0));
        }
        let (idem, adj) = k.projection_defects(3).unwrap();
        assert!(idem < 1e-10 && adj < 1e-10);
    }

    #[test]
    fn kernel_is_hermitian_and_nearly_invariant_inside() {
        let proj = projector();
        let k = spectral_kernel(proj.clone()).unwrap();
        let model = proj.grid.model;
        let a = GroupPoint::new(&[0.6, -0.6, 0.18]);
        let b = GroupPoint::new(&[-1.2, 0.6, 0.36]);
        assert!((k.value(&a, &b) - k.value(&b, &a).conj()).norm() < 1e-12);
        let ys: Vec<GroupPoint> = (0..8)
            .map(|i| model.from_chart(&[0.6 * (i % 3) as f64 - 0.6, 0.6 * (i / 3) as f64 - 0.6, 0.0]))
            .collect();
        let near = left_invariance_defect(&k, &GroupPoint::new(&[0.6, 0.0, 0.0]), &ys);
        let far = left_invariance_defect(&k, &GroupPoint::new(&[3.0, 0.0, 0.0]), &ys);
        assert!(near.is_finite() && far.is_finite());
        assert!(near < far, "near {near} far {far}");
    }
}
