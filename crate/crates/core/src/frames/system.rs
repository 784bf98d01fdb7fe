//! Frame systems `{p_γ}` of reproducing vectors, handled in the coordinates
//! of the space's orthonormal basis: the sampling operator is the matrix
//! `R[γ][i] = eᵢ(γ)` and the frame operator is `S = R*R`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::group::GroupPoint;
use crate::kernels::Space;
use crate::pointsets::PointSet;

/// Largest dimension handled by a dense Hermitian eigensolve.
pub const DENSE_LIMIT: usize = 2000;
/// Lower bounds below this fraction of the upper bound count as zero.
pub const FRAME_FLOOR: f64 = 1e-10;

type CVec = DVector<Complex64>;

#[derive(Clone, Debug, Serialize)]
pub struct FrameBounds {
    pub lower: f64,
    pub upper: f64,
    pub tightness: f64,
    pub method: String,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Cg,
    Richardson,
    Tight,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cg" => Ok(Method::Cg),
            "richardson" => Ok(Method::Richardson),
            "tight" => Ok(Method::Tight),
            other => Err(Error::Parse(format!("unknown reconstruction method `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ReconstructionResult {
    #[serde(skip)]
    pub function: GridFunction,
    #[serde(skip)]
    pub coefficients: Vec<Complex64>,
    /// Relative residual `‖R*y − S c‖ / ‖R*y‖` of the returned iterate.
    pub residual: f64,
    pub iterations: usize,
    pub method: Method,
    pub history: Vec<f64>,
}

#[derive(Clone)]
pub struct FrameSystem {
    pub space: Arc<dyn Space>,
    pub points: PointSet,
    /// `R`, one row per point.
    pub rows: DMatrix<Complex64>,
    /// `S = R*R`.
    pub frame_operator: DMatrix<Complex64>,
}

impl FrameSystem {
    pub fn new(space: Arc<dyn Space>, points: PointSet) -> Result<Self> {
        let grid = space.grid().clone();
        if points.model.kind != grid.model.kind {
            return Err(Error::ModelMismatch { expected: grid.model.id(), found: points.model.id() });
        }
        for p in &points.points {
            if !grid.contains(p) {
                return Err(Error::OutsideBox { point: p.coords[..grid.dim()].to_vec() });
            }
        }
        let d = space.dim();
        let evals: Vec<Vec<Complex64>> = points.points.par_iter().map(|p| space.eval_basis(p)).collect();
        let rows = DMatrix::from_fn(points.len(), d, |g, i| evals[g][i]);
        let frame_operator = rows.adjoint() * &rows;
        Ok(Self { space, points, rows, frame_operator })
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// `R_Γ f = (⟨f, p_γ⟩)_γ` for `f` projected onto the space.
    pub fn sample(&self, f: &GridFunction) -> Vec<Complex64> {
        self.sample_coefficients(&self.space.analyze(f))
    }

    pub fn sample_coefficients(&self, c: &[Complex64]) -> Vec<Complex64> {
        (&self.rows * CVec::from_column_slice(c)).as_slice().to_vec()
    }

    /// `Sf = Σ_γ f(γ) p_γ`.
    pub fn frame_apply(&self, f: &GridFunction) -> GridFunction {
        let c = self.space.analyze(f);
        let sc = &self.frame_operator * CVec::from_column_slice(&c);
        self.space.synthesize(sc.as_slice())
    }

    /// `R* y = Σ_γ y_γ p_γ` in coefficients.
    pub fn adjoint_samples(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        if y.len() != self.points.len() {
            return Err(Error::InvalidArgument(format!("{} samples for {} points", y.len(), self.points.len())));
        }
        Ok((self.rows.adjoint() * CVec::from_column_slice(y)).as_slice().to_vec())
    }

    pub fn estimate_bounds(&self) -> Result<FrameBounds> {
        let d = self.dim();
        if d == 0 {
            return Err(Error::EmptySpace("frame bounds of an empty space".into()));
        }
        if d <= DENSE_LIMIT {
            let eig = SymmetricEigen::new(self.frame_operator.clone());
            let vals = eig.eigenvalues;
            let upper = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max).max(0.0);
            let lower = vals.iter().cloned().fold(f64::INFINITY, f64::min).max(0.0);
            return Ok(bounds(lower, upper, "dense-hermitian", 0, 0.0));
        }
        let apply = |v: &CVec| &self.frame_operator * v;
        let (upper, it1, res1) = power(&apply, d, 1e-6, 5000, 1)?;
        let shifted = |v: &CVec| v * Complex64::new(upper, 0.0) - &self.frame_operator * v;
        let (gap, it2, res2) = power(&shifted, d, 1e-6, 5000, 2)?;
        Ok(bounds((upper - gap).max(0.0), upper, "power-shift", it1 + it2, res1.max(res2)))
    }

    /// Solves `S c = R* y` and synthesizes the result.
    pub fn reconstruct(
        &self,
        samples: &[Complex64],
        method: Method,
        bounds: Option<&FrameBounds>,
        tol: f64,
        max_iter: usize,
    ) -> Result<ReconstructionResult> {
        let b = CVec::from_column_slice(&self.adjoint_samples(samples)?);
        let b_norm = b.norm();
        let (c, iterations, history) = if b_norm == 0.0 {
            (CVec::zeros(self.dim()), 0, vec![0.0])
        } else {
            match method {
                Method::Cg => {
                    self.require_frame(bounds)?;
                    cg_smoothed(&self.frame_operator, &b, tol, max_iter)?
                }
                Method::Richardson => {
                    let fb = self.require_frame(bounds)?;
                    richardson(&self.frame_operator, &b, 2.0 / (fb.lower + fb.upper), tol, max_iter)?
                }
                Method::Tight => {
                    let fb = self.require_frame(bounds)?;
                    if fb.tightness - 1.0 >= 1e-6 {
                        return Err(Error::Precondition(format!(
                            "tight reconstruction needs B/A − 1 < 1e-6, got {:e}",
                            fb.tightness - 1.0
                        )));
                    }
                    let c = &b / Complex64::new(fb.lower, 0.0);
                    let r = (&b - &self.frame_operator * &c).norm() / b_norm;
                    (c, 1, vec![1.0, r])
                }
            }
        };
        let residual = if b_norm == 0.0 { 0.0 } else { (&b - &self.frame_operator * &c).norm() / b_norm };
        let coefficients = c.as_slice().to_vec();
        Ok(ReconstructionResult {
            function: self.space.synthesize(&coefficients),
            coefficients,
            residual,
            iterations,
            method,
            history,
        })
    }

    fn require_frame(&self, bounds: Option<&FrameBounds>) -> Result<FrameBounds> {
        let fb = match bounds {
            Some(b) => b.clone(),
            None => self.estimate_bounds()?,
        };
        if fb.lower <= FRAME_FLOOR * fb.upper {
            return Err(Error::NotAFrame { lower: fb.lower });
        }
        Ok(fb)
    }

    /// Dual vector `ẽ_γ = S⁻¹ p_γ`.
    pub fn dual_frame(&self, index: usize) -> Result<GridFunction> {
        let fb = self.estimate_bounds()?;
        if fb.lower <= FRAME_FLOOR * fb.upper {
            return Err(Error::NotAFrame { lower: fb.lower });
        }
        let p: CVec = self.rows.row(index).adjoint();
        let d = self
            .frame_operator
            .clone()
            .cholesky()
            .ok_or(Error::NotAFrame { lower: fb.lower })?
            .solve(&p);
        Ok(self.space.synthesize(d.as_slice()))
    }

    /// Reproducing vector `p_γ`.
    pub fn frame_vector(&self, index: usize) -> GridFunction {
        let c: Vec<Complex64> = self.rows.row(index).iter().map(|v| v.conj()).collect();
        self.space.synthesize(&c)
    }

    /// Extreme ratios `Σ|f(γ)|² / ‖f‖²` over random space elements.
    pub fn sample_ratios(&self, count: usize, seed: u64) -> Result<(f64, f64)> {
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for k in 0..count {
            let c = self.space.random_coefficients(seed.wrapping_add(k as u64))?;
            let y = self.sample_coefficients(&c);
            let r = y.iter().map(|v| v.norm_sqr()).sum::<f64>();
            lo = lo.min(r);
            hi = hi.max(r);
        }
        Ok((lo, hi))
    }

    pub fn point(&self, index: usize) -> &GroupPoint {
        &self.points.points[index]
    }
}

pub(crate) fn bounds(lower: f64, upper: f64, method: &str, iterations: usize, residual: f64) -> FrameBounds {
    let tightness = if lower > FRAME_FLOOR * upper { upper / lower } else { f64::INFINITY };
    FrameBounds { lower, upper, tightness, method: method.into(), iterations, residual }
}

/// Frame bounds of `{rows}` on a space spanned by non-orthogonal vectors:
/// the extreme eigenvalues of `M*M v = λ G v`, where `M[γ][i] = ⟨φᵢ, g_γ⟩`
/// and `G[i][j] = ⟨φⱼ, φᵢ⟩`.
pub fn generalized_bounds(rows: &[Vec<Complex64>], gram: &DMatrix<Complex64>) -> Result<FrameBounds> {
    let d = gram.nrows();
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::InvalidArgument("frame rows and Gram matrix disagree in size".into()));
    }
    let m = DMatrix::from_fn(rows.len(), d, |g, i| rows[g][i]);
    generalized_bounds_from(&(m.adjoint() * m), gram)
}

/// [`generalized_bounds`] from a precomputed `M*M`.
pub fn generalized_bounds_from(s: &DMatrix<Complex64>, gram: &DMatrix<Complex64>) -> Result<FrameBounds> {
    let d = gram.nrows();
    if d == 0 || gram.ncols() != d || s.shape() != (d, d) {
        return Err(Error::EmptySpace("Gram matrix must be square, nonempty and match M*M".into()));
    }
    let chol = gram
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Precondition("Gram matrix is not positive definite".into()))?;
    let l = chol.l();
    let li_s = l
        .solve_lower_triangular(s)
        .ok_or_else(|| Error::Precondition("singular Cholesky factor".into()))?;
    let t = l
        .solve_lower_triangular(&li_s.adjoint())
        .ok_or_else(|| Error::Precondition("singular Cholesky factor".into()))?;
    let t = (&t + t.adjoint()) * Complex64::new(0.5, 0.0);
    let vals = SymmetricEigen::new(t).eigenvalues;
    let upper = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max).max(0.0);
    let lower = vals.iter().cloned().fold(f64::INFINITY, f64::min).max(0.0);
    Ok(bounds(lower, upper, "generalized-cholesky", 0, 0.0))
}

fn random_unit(d: usize, seed: u64) -> CVec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = CVec::from_fn(d, |_, _| Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)));
    let n = v.norm();
    v / Complex64::new(n, 0.0)
}

/// Largest eigenvalue of a positive semidefinite Hermitian operator.
fn power(apply: &dyn Fn(&CVec) -> CVec, d: usize, tol: f64, max_iter: usize, seed: u64) -> Result<(f64, usize, f64)> {
    let mut v = random_unit(d, seed);
    let mut lambda = 0.0;
    let mut change = f64::INFINITY;
    for it in 1..=max_iter {
        let w = apply(&v);
        let next = v.dotc(&w).re;
        let n = w.norm();
        if n == 0.0 {
            return Ok((0.0, it, 0.0));
        }
        v = w / Complex64::new(n, 0.0);
        change = (next - lambda).abs() / next.abs().max(1e-300);
        lambda = next;
        if change < tol {
            return Ok((lambda, it, change));
        }
    }
    Err(Error::Stagnation { iterations: max_iter, residual: change })
}

/// Conjugate gradients with minimal-residual smoothing, so the residual
/// history of the returned iterates is nonincreasing.
fn cg_smoothed(s: &DMatrix<Complex64>, b: &CVec, tol: f64, max_iter: usize) -> Result<(CVec, usize, Vec<f64>)> {
    let b_norm = b.norm();
    let mut x = CVec::zeros(b.len());
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr = r.norm_squared();
    let (mut xs, mut rs) = (x.clone(), r.clone());
    let mut history = vec![1.0];
    for it in 1..=max_iter {
        let sp = s * &p;
        let denom = p.dotc(&sp).re;
        if denom <= 0.0 {
            break;
        }
        let alpha = Complex64::new(rr / denom, 0.0);
        x += &p * alpha;
        r -= &sp * alpha;
        let dr = &r - &rs;
        let dd = dr.norm_squared();
        if dd > 0.0 {
            let eta = -(dr.dotc(&rs)) / dd;
            xs += (&x - &xs) * eta;
            rs += dr * eta;
        }
        let rel = rs.norm() / b_norm;
        history.push(rel);
        if rel < tol {
            return Ok((xs, it, history));
        }
        let rr_next = r.norm_squared();
        p = &r + &p * Complex64::new(rr_next / rr, 0.0);
        rr = rr_next;
    }
    let last = *history.last().unwrap();
    if last < tol.sqrt() {
        // converged as far as rounding allows
        return Ok((xs, history.len() - 1, history));
    }
    Err(Error::Stagnation { iterations: max_iter, residual: last })
}

/// The frame algorithm `c ← c + λ (b − S c)`.
fn richardson(s: &DMatrix<Complex64>, b: &CVec, lambda: f64, tol: f64, max_iter: usize) -> Result<(CVec, usize, Vec<f64>)> {
    let b_norm = b.norm();
    let mut c = CVec::zeros(b.len());
    let mut history = vec![1.0];
    let l = Complex64::new(lambda, 0.0);
    for it in 1..=max_iter {
        let r = b - s * &c;
        c += r * l;
        let rel = (b - s * &c).norm() / b_norm;
        history.push(rel);
        if rel < tol {
            return Ok((c, it, history));
        }
    }
    Err(Error::Stagnation { iterations: max_iter, residual: *history.last().unwrap() })
}

/// Measured per-step contraction of a residual history (geometric mean
/// over the steps before the floor).
pub fn contraction(history: &[f64]) -> f64 {
    let steps: Vec<f64> = history
        .windows(2)
        .filter(|w| w[1] > 1e-13 && w[0] > 0.0)
        .map(|w| w[1] / w[0])
        .collect();
    if steps.is_empty() {
        return 0.0;
    }
    (steps.iter().map(|q| q.ln()).sum::<f64>() / steps.len() as f64).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Axis, Grid};
    use crate::group::GroupModel;
    use crate::kernels::TrigSpace;

    fn circle_space() -> Arc<TrigSpace> {
        let grid = Arc::new(Grid::new(GroupModel::real_line(), vec![Axis::periodic(-16.0, 16.0, 2048).unwrap()]).unwrap());
        Arc::new(TrigSpace::new(grid, 0.5).unwrap())
    }

    fn system(step: f64) -> FrameSystem {
        let set = PointSet::arithmetic(-16.0, 15.9, step, 0.0).unwrap();
        FrameSystem::new(circle_space(), set).unwrap()
    }

    #[test]
    fn generalized_bounds_are_basis_independent() {
        // rows = orthonormal frame of ℂ² written in the basis φ₁ = e₁, φ₂ = 2e₂
        let c = |x: f64| Complex64::new(x, 0.0);
        let gram = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(4.0)]);
        let rows = vec![vec![c(1.0), c(0.0)], vec![c(0.0), c(2.0)]];
        let b = generalized_bounds(&rows, &gram).unwrap();
        assert!((b.lower - 1.0).abs() < 1e-12 && (b.upper - 1.0).abs() < 1e-12);
        // a second copy of the first vector doubles the upper bound only
        let mut rows3 = rows.clone();
        rows3.push(vec![c(1.0), c(0.0)]);
        let b = generalized_bounds(&rows3, &gram).unwrap();
        assert!((b.lower - 1.0).abs() < 1e-12 && (b.upper - 2.0).abs() < 1e-12);
        let singular = DMatrix::from_element(2, 2, c(1.0));
        assert!(generalized_bounds(&rows, &singular).is_err());
    }

    #[test]
    fn integer_samples_are_a_tight_frame() {
        let fs = system(1.0);
        let b = fs.estimate_bounds().unwrap();
        assert!((b.lower - 1.0).abs() < 1e-10 && (b.upper - 1.0).abs() < 1e-10, "{b:?}");
        // Parseval: Σ|f(k)|² = ‖f‖²
        let f = fs.space.random_element(4).unwrap();
        let y = fs.sample(&f);
        let e: f64 = y.iter().map(|v| v.norm_sqr()).sum();
        assert!((e - f.l2().powi(2)).abs() < 1e-10);
        // sampled values and frame coefficients coincide
        for (k, v) in y.iter().enumerate() {
            assert!((v - f.interpolate(fs.point(k))).norm() < 1e-10);
        }
        // Sf = f
        let sf = fs.frame_apply(&f);
        assert!(sf.sub(&f).unwrap().l2() / f.l2() < 1e-10);
    }

    #[test]
    fn kernel_samples_are_nearly_cardinal() {
        let fs = system(1.0);
        let zero = fs.points.points.iter().position(|p| p.coords[0] == 0.0).unwrap();
        let y = fs.sample(&fs.frame_vector(zero));
        for (k, v) in y.iter().enumerate() {
            let target = if k == zero { 1.0 } else { 0.0 };
            // the open band drops the two edge frequencies: deviation 1/L
            assert!((v.re - target).abs() <= 1.0 / 32.0 + 1e-10);
        }
    }

    #[test]
    fn oversampling_doubles_and_undersampling_degenerates() {
        let b = system(0.5).estimate_bounds().unwrap();
        assert!((b.lower - 2.0).abs() < 1e-10 && (b.upper - 2.0).abs() < 1e-10);
        let f = circle_space().random_element(1).unwrap();
        let sf = system(0.5).frame_apply(&f);
        assert!(sf.sub(&f.scale(Complex64::new(2.0, 0.0))).unwrap().l2() / f.l2() < 1e-10);
        let under = system(2.0);
        let b = under.estimate_bounds().unwrap();
        assert!(b.lower < 1e-10 && b.tightness.is_infinite());
        let y = under.sample(&f);
        assert!(matches!(under.reconstruct(&y, Method::Cg, None, 1e-10, 100), Err(Error::NotAFrame { .. })));
    }

    #[test]
    fn reconstruction_methods_recover_bandlimited_functions() {
        let fs = system(1.0);
        let bnd = fs.estimate_bounds().unwrap();
        let f = fs.space.random_element(9).unwrap();
        let y = fs.sample(&f);
        for m in [Method::Cg, Method::Richardson, Method::Tight] {
            let rec = fs.reconstruct(&y, m, Some(&bnd), 1e-12, 200).unwrap();
            assert!(rec.function.sub(&f).unwrap().l2() / f.l2() < 1e-8, "{m:?}");
            assert!(rec.history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        }
        let tight = fs.reconstruct(&y, Method::Tight, Some(&bnd), 1e-12, 1).unwrap();
        assert_eq!(tight.iterations, 1);
    }

    #[test]
    fn irregular_set_reconstruction_and_noise_bound() {
        let pts: Vec<GroupPoint> = (0..40).map(|k| GroupPoint::new(&[-16.0 + 0.8 * k as f64 + 0.2 * ((k * 7) % 5) as f64 / 5.0])).collect();
        let set = PointSet::new(GroupModel::real_line(), pts, vec![(-16.0, 16.0)]).unwrap();
        let fs = FrameSystem::new(circle_space(), set).unwrap();
        let bnd = fs.estimate_bounds().unwrap();
        assert!(bnd.lower > 0.1 && bnd.tightness > 1.0);
        let f = fs.space.random_element(2).unwrap();
        let y = fs.sample(&f);
        let rec = fs.reconstruct(&y, Method::Cg, Some(&bnd), 1e-12, 500).unwrap();
        assert!(rec.function.sub(&f).unwrap().l2() / f.l2() < 1e-8);
        assert!(rec.history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        // sampling the reconstruction returns the data
        let back = fs.sample_coefficients(&rec.coefficients);
        assert!(back.iter().zip(&y).all(|(a, b)| (a - b).norm() < 1e-8));
        // least-squares perturbation: error ≤ ‖noise‖/√A
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noise: Vec<Complex64> = (0..y.len()).map(|_| { let z: f64 = StandardNormal.sample(&mut rng); Complex64::new(1e-3 * z, 0.0) }).collect();
        let noisy: Vec<Complex64> = y.iter().zip(&noise).map(|(a, b)| a + b).collect();
        let rn = fs.reconstruct(&noisy, Method::Cg, Some(&bnd), 1e-12, 500).unwrap();
        let nn = noise.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        assert!(rn.function.sub(&f).unwrap().l2() <= nn / bnd.lower.sqrt() + 1e-8);
        // Richardson contraction within 5% of (B − A)/(B + A)
        let rr = fs.reconstruct(&y, Method::Richardson, Some(&bnd), 1e-12, 2000).unwrap();
        let predicted = (bnd.upper - bnd.lower) / (bnd.upper + bnd.lower);
        assert!(contraction(&rr.history) <= predicted * 1.05);
    }

    #[test]
    fn duals_of_a_tight_frame_and_lattice_covariance() {
        let fs = system(1.0);
        let d = fs.dual_frame(3).unwrap();
        assert!(d.sub(&fs.frame_vector(3)).unwrap().l2() < 1e-10);
        // Γ = ℤ ∪ (ℤ + ¼) is invariant under the shift by 1
        let mut pts = Vec::new();
        for k in -16..16 {
            pts.push(GroupPoint::new(&[k as f64]));
            pts.push(GroupPoint::new(&[k as f64 + 0.25]));
        }
        let set = PointSet::new(GroupModel::real_line(), pts, vec![(-16.0, 16.0)]).unwrap();
        let fs = FrameSystem::new(circle_space(), set).unwrap();
        let (d0, d1) = (fs.dual_frame(10).unwrap(), fs.dual_frame(12).unwrap());
        let shifted = d0.left_translate(&GroupPoint::new(&[1.0]));
        assert!(shifted.sub(&d1).unwrap().l2() / d0.l2() < 1e-4);
    }

    #[test]
    fn bounds_grow_under_point_addition_and_operator_is_self_adjoint() {
        let a = system(1.0);
        let mut pts = a.points.points.clone();
        pts.push(GroupPoint::new(&[0.3]));
        pts.push(GroupPoint::new(&[-7.7]));
        let b = FrameSystem::new(a.space.clone(), PointSet::new(GroupModel::real_line(), pts, vec![(-16.0, 16.0)]).unwrap()).unwrap();
        let (ba, bb) = (a.estimate_bounds().unwrap(), b.estimate_bounds().unwrap());
        assert!(bb.lower >= ba.lower - 1e-10 && bb.upper >= ba.upper - 1e-10);
        let f = a.space.random_element(5).unwrap();
        let g = a.space.random_element(6).unwrap();
        let lhs = b.frame_apply(&f).inner(&g).unwrap();
        let rhs = f.inner(&b.frame_apply(&g)).unwrap();
        assert!((lhs - rhs).norm() < 1e-8);
        assert!(b.frame_apply(&f).inner(&f).unwrap().re >= 0.0);
        let empty = FrameSystem::new(a.space.clone(), PointSet::new(GroupModel::real_line(), vec![], vec![(-16.0, 16.0)]).unwrap()).unwrap();
        assert!(empty.frame_apply(&f).l2() == 0.0);
    }

    #[test]
    fn power_iteration_matches_dense_solve() {
        let fs = system(0.8);
        let d = fs.dim();
        let (up, _, _) = power(&|v: &CVec| &fs.frame_operator * v, d, 1e-12, 100_000, 7).unwrap();
        let dense = fs.estimate_bounds().unwrap();
        assert!((up - dense.upper).abs() < 1e-6 * dense.upper);
    }
}
