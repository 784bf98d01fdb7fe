//! Reproducing-kernel spaces: Paley-Wiener spaces on the line (sinc /
//! Dirichlet kernels), spectral subspaces of the sub-Laplacian, and the
//! wavelet-transform spaces of the affine group.

pub mod sinc;
pub mod spectral;
pub mod wavelet;

use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::group::GroupPoint;

pub use sinc::{sinc_continuum, sinc_kernel, TrigSpace};
pub use spectral::spectral_kernel;

/// A finite-dimensional space of grid functions with an orthonormal basis
/// (in the weighted grid inner product) that can be evaluated anywhere.
pub trait Space: Send + Sync {
    fn grid(&self) -> &Arc<Grid>;
    fn dim(&self) -> usize;
    /// `(e₁(p), …, e_d(p))`.
    fn eval_basis(&self, p: &GroupPoint) -> Vec<Complex64>;
    /// Values of `eᵢ` at every grid node.
    fn basis_values(&self, i: usize) -> Vec<Complex64>;

    fn synthesize(&self, c: &[Complex64]) -> GridFunction {
        let grid = self.grid().clone();
        let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
        for (i, ci) in c.iter().enumerate() {
            if *ci == Complex64::new(0.0, 0.0) {
                continue;
            }
            let e = self.basis_values(i);
            values.par_iter_mut().zip(&e).for_each(|(v, ei)| *v += ci * ei);
        }
        GridFunction { grid, values }
    }

    /// `⟨f, eᵢ⟩` for every basis vector.
    fn analyze(&self, f: &GridFunction) -> Vec<Complex64> {
        let w = self.grid().weights();
        (0..self.dim())
            .into_par_iter()
            .map(|i| {
                let e = self.basis_values(i);
                f.values.iter().zip(&e).zip(&w).map(|((fv, ev), wv)| fv * ev.conj() * *wv).sum()
            })
            .collect()
    }

    fn project(&self, f: &GridFunction) -> GridFunction {
        self.synthesize(&self.analyze(f))
    }

    /// Unit-norm coefficient vector; real-valued functions when the space
    /// is closed under conjugation in the supplied pairing.
    fn random_coefficients(&self, seed: u64) -> Result<Vec<Complex64>> {
        if self.dim() == 0 {
            return Err(Error::EmptySpace("space has dimension 0".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c: Vec<Complex64> = (0..self.dim())
            .map(|_| Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
            .collect();
        self.symmetrize(&mut c);
        let n = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        c.iter_mut().for_each(|z| *z /= n);
        Ok(c)
    }

    /// Hook for spaces whose real elements satisfy a coefficient symmetry.
    fn symmetrize(&self, _c: &mut [Complex64]) {}

    fn random_element(&self, seed: u64) -> Result<GridFunction> {
        Ok(self.synthesize(&self.random_coefficients(seed)?))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum KernelKind {
    Sinc { band: f64 },
    Spectral { omega: f64 },
    Wavelet,
}

/// Reproducing kernel of a [`Space`]: `p_x = Σᵢ conj(eᵢ(x)) eᵢ`, so that
/// `⟨f, p_x⟩ = f(x)` for every `f` in the space.
#[derive(Clone)]
pub struct ReproducingKernel {
    pub kind: KernelKind,
    pub space: Arc<dyn Space>,
}

impl ReproducingKernel {
    pub fn new(kind: KernelKind, space: Arc<dyn Space>) -> Result<Self> {
        if space.dim() == 0 {
            return Err(Error::EmptySpace("kernel of an empty space".into()));
        }
        Ok(Self { kind, space })
    }

    /// Coefficients of `p_x` in the orthonormal basis.
    pub fn vector_coefficients(&self, x: &GroupPoint) -> Vec<Complex64> {
        self.space.eval_basis(x).into_iter().map(|v| v.conj()).collect()
    }

    pub fn vector_at(&self, x: &GroupPoint) -> GridFunction {
        self.space.synthesize(&self.vector_coefficients(x))
    }

    /// `p_x(y) = Σᵢ eᵢ(y) conj(eᵢ(x))`.
    pub fn value(&self, x: &GroupPoint, y: &GroupPoint) -> Complex64 {
        let ex = self.space.eval_basis(x);
        let ey = self.space.eval_basis(y);
        ex.iter().zip(&ey).map(|(a, b)| b * a.conj()).sum()
    }

    pub fn project(&self, f: &GridFunction) -> GridFunction {
        self.space.project(f)
    }

    /// `max |P²f − Pf|` and `|⟨Pf, g⟩ − ⟨f, Pg⟩|` over a few random probes.
    pub fn projection_defects(&self, seed: u64) -> Result<(f64, f64)> {
        let grid = self.space.grid().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut probe = || {
            let v: Vec<Complex64> = (0..grid.len())
                .map(|_| Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
                .collect();
            GridFunction { grid: grid.clone(), values: v }
        };
        let (f, g) = (probe(), probe());
        let pf = self.project(&f);
        let idem = self.project(&pf).max_abs_diff(&pf);
        let pg = self.project(&g);
        let adj = (pf.inner(&g)? - f.inner(&pg)?).norm() / (f.l2() * g.l2());
        Ok((idem, adj))
    }
}
