//! Paley-Wiener spaces on the circle `ℝ/Lℤ`: trigonometric polynomials
//! with frequencies `|k|/L < Ω`. The reproducing kernel is the Dirichlet
//! kernel, the periodic counterpart of `2Ω sinc(2Ωx)`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use super::{KernelKind, ReproducingKernel, Space};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::group::{GroupPoint, ModelKind};

#[derive(Clone, Debug)]
pub struct TrigSpace {
    grid: Arc<Grid>,
    pub band: f64,
    /// Highest retained frequency index; basis order is `k = −K, …, K`.
    pub k_max: usize,
    period: f64,
    basis: Vec<Vec<Complex64>>,
}

impl TrigSpace {
    pub fn new(grid: Arc<Grid>, band: f64) -> Result<Self> {
        if grid.model.kind != ModelKind::Euclidean(1) || !grid.axes[0].periodic {
            return Err(Error::InvalidArgument("trigonometric spaces need a periodic grid on the line".into()));
        }
        if !(band > 0.0) || !band.is_finite() {
            return Err(Error::InvalidArgument(format!("band must be positive, got {band}")));
        }
        let axis = grid.axes[0];
        let period = axis.length();
        // open band: k/L < Ω
        let k_max = ((band * period).ceil() as usize).saturating_sub(1);
        if 2 * k_max + 1 > axis.n {
            return Err(Error::GridTooCoarse(format!(
                "band {band} on a period of {period} needs more than {} nodes",
                axis.n
            )));
        }
        let mut space = Self { grid: grid.clone(), band, k_max, period, basis: Vec::new() };
        space.basis = (0..space.dim())
            .map(|i| (0..grid.len()).map(|j| space.mode(i, grid.chart_coords(j)[0])).collect())
            .collect();
        Ok(space)
    }

    pub fn frequency(&self, i: usize) -> i64 {
        i as i64 - self.k_max as i64
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    #[inline]
    fn mode(&self, i: usize, x: f64) -> Complex64 {
        let k = self.frequency(i) as f64;
        Complex64::from_polar(1.0 / self.period.sqrt(), 2.0 * PI * k * x / self.period)
    }
}

impl Space for TrigSpace {
    fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    fn dim(&self) -> usize {
        2 * self.k_max + 1
    }

    fn eval_basis(&self, p: &GroupPoint) -> Vec<Complex64> {
        (0..self.dim()).map(|i| self.mode(i, p.coords[0])).collect()
    }

    fn basis_values(&self, i: usize) -> Vec<Complex64> {
        self.basis[i].clone()
    }

    /// `c₋ₖ = conj(cₖ)`, so synthesized functions are real.
    fn symmetrize(&self, c: &mut [Complex64]) {
        let k = self.k_max;
        c[k].im = 0.0;
        for j in 1..=k {
            c[k - j] = c[k + j].conj();
        }
    }
}

/// Dirichlet-kernel reproducing kernel of the band-`Ω` space on a periodic grid.
pub fn sinc_kernel(grid: Arc<Grid>, band: f64) -> Result<ReproducingKernel> {
    ReproducingKernel::new(KernelKind::Sinc { band }, Arc::new(TrigSpace::new(grid, band)?))
}

/// `2Ω sinc(2Ωx)` on the full line.
pub fn sinc_continuum(band: f64, x: f64) -> f64 {
    let u = 2.0 * band * x;
    if u.abs() < 1e-12 {
        2.0 * band
    } else {
        2.0 * band * (PI * u).sin() / (PI * u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::convolve;
    use crate::grid::{Axis, GridFunction};
    use crate::group::GroupModel;

    fn circle(half: f64, n: usize) -> Arc<Grid> {
        Arc::new(Grid::new(GroupModel::real_line(), vec![Axis::periodic(-half, half, n).unwrap()]).unwrap())
    }

    #[test]
    fn kernel_at_origin() {
        let grid = circle(32.0, 2048);
        let k = sinc_kernel(grid, 0.5).unwrap();
        let e = GroupPoint::new(&[0.0]);
        let p0 = k.value(&e, &e).re;
        assert!((p0 - 1.0).abs() <= 1.0 / 64.0 + 1e-12);
        assert_eq!(sinc_continuum(0.5, 0.0), 1.0);
        assert_eq!(sinc_continuum(0.75, 0.0), 1.5);
        // continuum formula vanishes at the integers for band 1/2
        assert!(sinc_continuum(0.5, 3.0).abs() < 1e-15);
    }

    #[test]
    fn convolution_with_kernel_reproduces_and_is_idempotent() {
        let grid = circle(32.0, 2048);
        let k = sinc_kernel(grid.clone(), 0.5).unwrap();
        let p = k.vector_at(&GroupPoint::new(&[0.0]));
        let pstar = p.involution();
        for seed in 0..3 {
            let f = k.space.random_element(seed).unwrap();
            let g = convolve(&f, &pstar).unwrap();
            assert!(g.sub(&f).unwrap().l2() / f.l2() < 1e-6);
            assert!(f.values.iter().all(|v| v.im.abs() < 1e-12));
        }
        let pp = convolve(&p, &pstar).unwrap();
        assert!(pp.sub(&p).unwrap().l2() / p.l2() < 1e-6);
        let (idem, adj) = k.projection_defects(1).unwrap();
        assert!(idem < 1e-8 && adj < 1e-8);
    }

    #[test]
    fn discrete_and_continuous_reproduction_agree() {
        // critical density: f(x) = Σ_n f(n) p(x − n)
        let grid = circle(16.0, 1024);
        let k = sinc_kernel(grid.clone(), 0.5).unwrap();
        let f = k.space.random_element(5).unwrap();
        let p = k.vector_at(&GroupPoint::new(&[0.0]));
        let by_conv = convolve(&f, &p.involution()).unwrap();
        let by_series = GridFunction::from_fn(grid.clone(), |x| {
            (-16..16)
                .map(|n| {
                    let gn = GroupPoint::new(&[n as f64]);
                    f.interpolate(&gn) * k.value(&gn, x)
                })
                .sum()
        });
        assert!(by_series.sub(&by_conv).unwrap().l2() / f.l2() < 1e-6);
    }

    #[test]
    fn rejects_unresolvable_band() {
        assert!(matches!(TrigSpace::new(circle(8.0, 16), 2.0), Err(Error::GridTooCoarse(_))));
        assert!(TrigSpace::new(circle(8.0, 64), -1.0).is_err());
    }
}
