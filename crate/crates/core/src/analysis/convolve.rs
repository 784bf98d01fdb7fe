//! Group convolution `(f∗g)(x) = ∫ f(y) g(y⁻¹x) dy` on a quadrature grid.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::group::{GroupPoint, ModelKind};

fn same_grid(f: &GridFunction, g: &GridFunction) -> Result<()> {
    if *f.grid != *g.grid {
        return Err(Error::InvalidArgument("convolution factors live on different grids".into()));
    }
    Ok(())
}

/// `(f∗g)(p)` at an arbitrary point, summing over the nonzero nodes of `f`
/// and interpolating `g` at `y⁻¹p`.
pub fn convolve_at(f: &GridFunction, g: &GridFunction, p: &GroupPoint) -> Complex64 {
    let grid = &f.grid;
    let model = grid.model;
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, fv) in f.values.iter().enumerate() {
        if *fv == Complex64::new(0.0, 0.0) {
            continue;
        }
        let y = grid.point(i);
        acc += fv * g.interpolate(&model.mul(&model.inv(&y), p)) * grid.weight(i);
    }
    acc
}

/// Direct quadrature of the convolution at every node (group law plus
/// multilinear interpolation; zero outside a closed box).
pub fn convolve_direct(f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    same_grid(f, g)?;
    let grid = f.grid.clone();
    let values = (0..grid.len())
        .into_par_iter()
        .map(|k| convolve_at(f, g, &grid.point(k)))
        .collect();
    GridFunction::from_values(grid, values)
}

/// Fast path on the line: samples `g` at the node differences `m·h` and
/// forms a linear (closed axis) or circular (periodic axis) convolution by
/// FFT. Agrees with `convolve_direct` up to rounding.
pub fn convolve_fft(f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    same_grid(f, g)?;
    let grid = f.grid.clone();
    if grid.model.kind != ModelKind::Euclidean(1) {
        return Err(Error::UnsupportedModel { op: "convolve_fft", model: grid.model.id() });
    }
    let axis = grid.axes[0];
    let n = axis.n;
    let h = axis.h();
    let fw: Vec<Complex64> = (0..n).map(|j| f.values[j] * grid.weight(j)).collect();
    let mut planner = FftPlanner::<f64>::new();
    if axis.periodic {
        let mut a = fw;
        let mut b: Vec<Complex64> =
            (0..n).map(|m| g.interpolate(&GroupPoint::new(&[m as f64 * h]))).collect();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        fwd.process(&mut a);
        fwd.process(&mut b);
        let mut c: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        inv.process(&mut c);
        let scale = 1.0 / n as f64;
        return GridFunction::from_values(grid, c.into_iter().map(|v| v * scale).collect());
    }
    // G[m + n − 1] = g((m)h) for m ∈ [−(n−1), n−1]
    let len = (3 * n - 2).next_power_of_two();
    let mut a = vec![Complex64::new(0.0, 0.0); len];
    a[..n].copy_from_slice(&fw);
    let mut b = vec![Complex64::new(0.0, 0.0); len];
    for m in 0..(2 * n - 1) {
        let off = m as f64 - (n - 1) as f64;
        b[m] = g.interpolate(&GroupPoint::new(&[off * h]));
    }
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    fwd.process(&mut a);
    fwd.process(&mut b);
    let mut c: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
    inv.process(&mut c);
    let scale = 1.0 / len as f64;
    // result[k] = Σ_j a[j] G[k − j] with G indexed from −(n−1)
    let values = (0..n).map(|k| c[k + n - 1] * scale).collect();
    GridFunction::from_values(grid, values)
}

/// FFT on the line, direct quadrature elsewhere.
pub fn convolve(f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    if f.grid.model.kind == ModelKind::Euclidean(1) {
        convolve_fft(f, g)
    } else {
        convolve_direct(f, g)
    }
}
