//! Dirichlet sub-Laplacian on a grid and its low spectral subspaces.
//!
//! The operator is `ℒ_h f(g) = h⁻² Σ_a (f(g) − f(g·a))` over the right
//! translations `a ∈ {exp(±hX), exp(±hY)}` (H¹) or the coordinate steps
//! (ℝⁿ), with `f = 0` off the interior nodes. On a lattice-compatible H¹
//! grid every translate of a node is again a node, so the matrix is exactly
//! symmetric and consistent with `−(X² + Y²)` to second order. On H¹ a
//! vertical term of relative weight [`VERTICAL_WEIGHT`] is added.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{hex_digest, Grid, GridFunction};
use crate::group::{GroupPoint, ModelKind};
use crate::linalg::{self, EigenOptions, SymOp};

const NONE: u32 = u32::MAX;

/// Weight of the vertical difference on H¹, relative to `h⁻²`. As an
/// operator this adds `−(h²/8) T²`, which vanishes as `h → 0`.
pub const VERTICAL_WEIGHT: f64 = 0.5;

/// Discrete Dirichlet sub-Laplacian restricted to the interior nodes.
pub struct GridLaplacian {
    pub grid: Arc<Grid>,
    /// Flat grid index of every unknown.
    pub interior: Vec<usize>,
    coef: Vec<f64>,
    /// Per unknown, one neighbor slot per translation (`NONE` when it leaves the interior).
    neighbors: Vec<u32>,
    diag: f64,
}

impl GridLaplacian {
    pub fn new(grid: Arc<Grid>) -> Result<Self> {
        if grid.is_periodic() {
            return Err(Error::InvalidArgument("the sub-Laplacian needs a closed (Dirichlet) box".into()));
        }
        let dim = grid.dim();
        let shape = grid.shape();
        let is_interior = |idx: &[usize; 3]| (0..dim).all(|d| idx[d] >= 1 && idx[d] + 1 < shape[d]);
        let mut pos = vec![NONE; grid.len()];
        let mut interior = Vec::new();
        for k in 0..grid.len() {
            if is_interior(&grid.multi(k)) {
                pos[k] = interior.len() as u32;
                interior.push(k);
            }
        }
        // translations as index maps on centered indices
        type Step = Box<dyn Fn(&[i64; 3]) -> [i64; 3] + Sync>;
        let (coef, steps): (Vec<f64>, Vec<Step>) = match grid.model.kind {
            ModelKind::Euclidean(n) => {
                let mut c = Vec::new();
                let mut s: Vec<Step> = Vec::new();
                for d in 0..n {
                    let h = grid.axes[d].h();
                    for sign in [-1i64, 1] {
                        c.push(1.0 / (h * h));
                        s.push(Box::new(move |i: &[i64; 3]| {
                            let mut j = *i;
                            j[d] += sign;
                            j
                        }));
                    }
                }
                (c, s)
            }
            ModelKind::Heisenberg => {
                let h = grid.heisenberg_lattice_step().ok_or_else(|| {
                    Error::InvalidArgument("H¹ sub-Laplacian needs a centered lattice grid with h_t = h²/2".into())
                })?;
                // the X/Y translations alone preserve the parity of k + ij, so a
                // weak vertical term couples the two sublattices
                let mut c = vec![1.0 / (h * h); 4];
                c.extend([VERTICAL_WEIGHT / (h * h); 2]);
                let s: Vec<Step> = vec![
                    Box::new(|i: &[i64; 3]| [i[0] + 1, i[1], i[2] - i[1]]),
                    Box::new(|i: &[i64; 3]| [i[0] - 1, i[1], i[2] + i[1]]),
                    Box::new(|i: &[i64; 3]| [i[0], i[1] + 1, i[2] + i[0]]),
                    Box::new(|i: &[i64; 3]| [i[0], i[1] - 1, i[2] - i[0]]),
                    Box::new(|i: &[i64; 3]| [i[0], i[1], i[2] + 1]),
                    Box::new(|i: &[i64; 3]| [i[0], i[1], i[2] - 1]),
                ];
                (c, s)
            }
            ModelKind::Affine => {
                return Err(Error::UnsupportedModel { op: "sublaplacian", model: grid.model.id() })
            }
        };
        let half: Vec<i64> = shape.iter().map(|&n| (n as i64 - 1) / 2).collect();
        let centered_model = grid.model.kind == ModelKind::Heisenberg;
        let ns = steps.len();
        let mut neighbors = vec![NONE; interior.len() * ns];
        for (u, &k) in interior.iter().enumerate() {
            let m = grid.multi(k);
            let mut ci = [0i64; 3];
            for d in 0..dim {
                ci[d] = m[d] as i64 - if centered_model { half[d] } else { 0 };
            }
            for (s, step) in steps.iter().enumerate() {
                let cj = step(&ci);
                let mut idx = [0usize; 3];
                let mut inside = true;
                for d in 0..dim {
                    let j = cj[d] + if centered_model { half[d] } else { 0 };
                    if j < 0 || j >= shape[d] as i64 {
                        inside = false;
                        break;
                    }
                    idx[d] = j as usize;
                }
                if inside {
                    let p = pos[grid.flat(&idx[..dim])];
                    neighbors[u * ns + s] = p;
                }
            }
        }
        let diag = coef.iter().sum();
        Ok(Self { grid, interior, coef, neighbors, diag })
    }

    pub fn interior_weight(&self) -> f64 {
        self.interior.first().map(|&k| self.grid.weight(k)).unwrap_or(1.0)
    }

    /// Applies the operator to a full-grid function (boundary values ignored).
    pub fn apply_grid(&self, f: &GridFunction) -> GridFunction {
        let n = self.interior.len();
        let mut out = GridFunction::zeros(self.grid.clone());
        for part in [0, 1] {
            let x: Vec<f64> = self
                .interior
                .iter()
                .map(|&k| if part == 0 { f.values[k].re } else { f.values[k].im })
                .collect();
            let mut y = vec![0.0; n];
            self.apply(&x, &mut y);
            for (u, &k) in self.interior.iter().enumerate() {
                if part == 0 {
                    out.values[k].re = y[u];
                } else {
                    out.values[k].im = y[u];
                }
            }
        }
        out
    }
}

impl SymOp for GridLaplacian {
    fn n(&self) -> usize {
        self.interior.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let ns = self.coef.len();
        y.par_iter_mut().enumerate().for_each(|(u, yu)| {
            let mut acc = self.diag * x[u];
            for s in 0..ns {
                let p = self.neighbors[u * ns + s];
                if p != NONE {
                    acc -= self.coef[s] * x[p as usize];
                }
            }
            *yu = acc;
        });
    }

    fn upper_bound(&self) -> f64 {
        2.0 * self.diag
    }
}

/// Retained eigenpairs `λᵢ ≤ ω` of the discrete sub-Laplacian; the
/// eigenvectors are orthonormal in the weighted grid inner product.
#[derive(Clone, Debug)]
pub struct SpectralProjector {
    pub grid: Arc<Grid>,
    pub omega: f64,
    pub bc: String,
    pub eigenvalues: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    /// Largest eigenvalue of the discrete operator (resolution cap reference).
    pub lambda_max: f64,
}

pub const DIRICHLET: &str = "dirichlet";

/// Computes all eigenpairs with `λ ≤ ω`. Rejects `ω > λ_max/4`.
pub fn sublaplacian_spectrum(grid: Arc<Grid>, omega: f64) -> Result<SpectralProjector> {
    if !(omega >= 0.0) || !omega.is_finite() {
        return Err(Error::InvalidArgument(format!("bandwidth must be nonnegative, got {omega}")));
    }
    let op = GridLaplacian::new(grid.clone())?;
    let n = op.n();
    let (lambda_max, _, _) = linalg::power_iteration(
        |x| {
            let mut y = vec![0.0; n];
            op.apply(x, &mut y);
            y
        },
        n,
        1e-8,
        5000,
        1,
    );
    if omega > lambda_max / 4.0 {
        return Err(Error::UnderResolved(format!(
            "bandwidth {omega} exceeds the grid-resolvable cap λ_max/4 = {}",
            lambda_max / 4.0
        )));
    }
    let (vals, vecs) = linalg::lowest_eigenpairs(&op, omega, &EigenOptions::default())?;
    let scale = 1.0 / op.interior_weight().sqrt();
    let vectors = (0..vals.len())
        .map(|c| {
            let mut full = vec![0.0; grid.len()];
            for (u, &k) in op.interior.iter().enumerate() {
                full[k] = vecs[(u, c)] * scale;
            }
            full
        })
        .collect();
    Ok(SpectralProjector {
        grid,
        omega,
        bc: DIRICHLET.to_string(),
        eigenvalues: vals.into_iter().map(|v: f64| v.max(0.0)).collect(),
        vectors,
        lambda_max,
    })
}

impl SpectralProjector {
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn basis_function(&self, i: usize) -> GridFunction {
        GridFunction::from_real(self.grid.clone(), &self.vectors[i]).expect("grid-sized vector")
    }

    /// `⟨f, eᵢ⟩` in the weighted inner product.
    pub fn coefficients(&self, f: &GridFunction) -> Vec<Complex64> {
        let w = self.grid.weights();
        self.vectors
            .par_iter()
            .map(|e| {
                e.iter()
                    .zip(&f.values)
                    .zip(&w)
                    .map(|((ei, fi), wi)| fi * (ei * wi))
                    .sum()
            })
            .collect()
    }

    pub fn synthesize(&self, c: &[Complex64]) -> GridFunction {
        let n = self.grid.len();
        let values = (0..n)
            .into_par_iter()
            .map(|k| {
                self.vectors
                    .iter()
                    .zip(c)
                    .map(|(e, ci)| ci * e[k])
                    .sum()
            })
            .collect();
        GridFunction { grid: self.grid.clone(), values }
    }

    pub fn project(&self, f: &GridFunction) -> GridFunction {
        self.synthesize(&self.coefficients(f))
    }

    /// `ℒ` restricted to the span, in coefficient form.
    pub fn apply_laplacian(&self, c: &[Complex64]) -> GridFunction {
        let lc: Vec<Complex64> = c.iter().zip(&self.eigenvalues).map(|(ci, l)| ci * *l).collect();
        self.synthesize(&lc)
    }

    /// Basis values at an arbitrary point (multilinear interpolation).
    pub fn eval_basis(&self, p: &GroupPoint) -> Vec<f64> {
        let c = self.grid.model.to_chart(p);
        match self.grid.stencil(&c) {
            Some(st) => self
                .vectors
                .iter()
                .map(|e| st.iter().map(|&(k, w)| e[k] * w).sum())
                .collect(),
            None => vec![0.0; self.dim()],
        }
    }

    /// `max |⟨eᵢ, eⱼ⟩ − δᵢⱼ|`.
    pub fn orthonormality_error(&self) -> f64 {
        let w = self.grid.weights();
        let d = self.dim();
        let mut err = 0.0f64;
        for i in 0..d {
            for j in 0..=i {
                let ip: f64 = self.vectors[i].iter().zip(&self.vectors[j]).zip(&w).map(|((a, b), w)| a * b * w).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                err = err.max((ip - target).abs());
            }
        }
        err
    }

    /// Euclidean-orthonormal basis matrix (rows = grid nodes) for subspace angles.
    pub fn basis_matrix(&self) -> DMatrix<f64> {
        let w = self.grid.weights();
        DMatrix::from_fn(self.grid.len(), self.dim(), |k, c| self.vectors[c][k] * w[k].sqrt())
    }

    /// Restriction to eigenvalues `≤ omega`.
    pub fn truncate(&self, omega: f64) -> SpectralProjector {
        let keep = self.eigenvalues.iter().filter(|&&l| l <= omega).count();
        SpectralProjector {
            grid: self.grid.clone(),
            omega,
            bc: self.bc.clone(),
            eigenvalues: self.eigenvalues[..keep].to_vec(),
            vectors: self.vectors[..keep].to_vec(),
            lambda_max: self.lambda_max,
        }
    }

    pub fn cache_key(grid: &Grid, omega: f64, bc: &str) -> String {
        let mut h = Sha256::new();
        h.update(grid.content_hash().as_bytes());
        h.update(omega.to_bits().to_le_bytes());
        h.update(bc.as_bytes());
        hex_digest(h)
    }

    fn cache_path(dir: &Path, grid: &Grid, omega: f64) -> PathBuf {
        dir.join(format!("{}.eig", Self::cache_key(grid, omega, DIRICHLET)))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let header = serde_json::to_vec(&CacheHeader {
            omega: self.omega,
            bc: self.bc.clone(),
            grid_hash: self.grid.content_hash(),
            count: self.dim(),
            nodes: self.grid.len(),
            lambda_max: self.lambda_max,
        })?;
        let mut buf = Vec::with_capacity(8 * (self.dim() * (self.grid.len() + 1)) + header.len() + 8);
        buf.extend_from_slice(CACHE_MAGIC);
        buf.extend_from_slice(&(header.len() as u32).to_le_bytes());
        buf.extend_from_slice(&header);
        for l in &self.eigenvalues {
            buf.extend_from_slice(&l.to_le_bytes());
        }
        for v in &self.vectors {
            for x in v {
                buf.extend_from_slice(&x.to_le_bytes());
            }
        }
        // unique per thread, so concurrent writers of one key never interleave
        let tmp = path.with_extension(format!("tmp-{}-{:?}", std::process::id(), std::thread::current().id()));
        fs::File::create(&tmp)?.write_all(&buf)?;
        fs::rename(tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path, grid: Arc<Grid>) -> Result<Self> {
        let mut buf = Vec::new();
        fs::File::open(path)?.read_to_end(&mut buf)?;
        if buf.len() < 8 || &buf[..4] != CACHE_MAGIC {
            return Err(Error::Parse("not a spectral cache file".into()));
        }
        let hl = u32::from_le_bytes(buf[4..8].try_into().expect("4 bytes")) as usize;
        let header: CacheHeader = serde_json::from_slice(&buf[8..8 + hl])?;
        if header.grid_hash != grid.content_hash() || header.nodes != grid.len() {
            return Err(Error::Parse("spectral cache belongs to a different grid".into()));
        }
        let mut off = 8 + hl;
        let need = off + 8 * header.count * (grid.len() + 1);
        if buf.len() != need {
            return Err(Error::Parse("truncated spectral cache".into()));
        }
        let read = |off: &mut usize| {
            let v = f64::from_le_bytes(buf[*off..*off + 8].try_into().expect("8 bytes"));
            *off += 8;
            v
        };
        let eigenvalues = (0..header.count).map(|_| read(&mut off)).collect();
        let vectors = (0..header.count)
            .map(|_| (0..grid.len()).map(|_| read(&mut off)).collect())
            .collect();
        Ok(Self {
            grid,
            omega: header.omega,
            bc: header.bc,
            eigenvalues,
            vectors,
            lambda_max: header.lambda_max,
        })
    }
}

const CACHE_MAGIC: &[u8; 4] = b"GSEP";

#[derive(Serialize, Deserialize)]
struct CacheHeader {
    omega: f64,
    bc: String,
    grid_hash: String,
    count: usize,
    nodes: usize,
    lambda_max: f64,
}

/// `sublaplacian_spectrum` with an on-disk cache keyed by grid, `ω` and
/// boundary condition. Returns the projector and whether it was a cache hit.
pub fn sublaplacian_spectrum_cached(
    grid: Arc<Grid>,
    omega: f64,
    dir: Option<&Path>,
) -> Result<(SpectralProjector, bool)> {
    if let Some(dir) = dir {
        let path = SpectralProjector::cache_path(dir, &grid, omega);
        if path.exists() {
            if let Ok(p) = SpectralProjector::load(&path, grid.clone()) {
                return Ok((p, true));
            }
        }
        let p = sublaplacian_spectrum(grid.clone(), omega)?;
        fs::create_dir_all(dir)?;
        p.save(&path)?;
        return Ok((p, false));
    }
    Ok((sublaplacian_spectrum(grid, omega)?, false))
}

/// Unit-norm random element of the span, deterministic per seed.
pub fn random_bandlimited(proj: &SpectralProjector, seed: u64) -> Result<GridFunction> {
    let c = random_coefficients(proj.dim(), seed)?;
    Ok(proj.synthesize(&c))
}

/// Unit-norm Gaussian coefficient vector of length `dim`.
pub fn random_coefficients(dim: usize, seed: u64) -> Result<Vec<Complex64>> {
    if dim == 0 {
        return Err(Error::EmptySpace("no retained eigenvectors".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    let n = linalg::norm(&raw);
    Ok(raw.into_iter().map(|x| Complex64::new(x / n, 0.0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Axis;
    use crate::group::GroupModel;
    use crate::linalg::max_principal_angle;

    fn interval(l: f64, n: usize) -> Arc<Grid> {
        Arc::new(Grid::new(GroupModel::real_line(), vec![Axis::closed(0.0, l, n).unwrap()]).unwrap())
    }

    #[test]
    fn dirichlet_interval_matches_closed_form() {
        let l = 10.0;
        let proj = sublaplacian_spectrum(interval(l, 2001), 1.0).unwrap();
        let exact: Vec<f64> = (1..)
            .map(|k| (k as f64 * std::f64::consts::PI / l).powi(2))
            .take_while(|&v| v <= 1.0)
            .collect();
        assert_eq!(proj.dim(), exact.len());
        for (a, b) in proj.eigenvalues.iter().zip(&exact) {
            assert!((a - b).abs() / b < 0.01);
        }
        assert!(proj.orthonormality_error() < 1e-8);
    }

    #[test]
    fn dimension_grows_with_bandwidth() {
        let grid = interval(20.0, 801);
        let mut last = 0;
        for omega in [0.1, 0.5, 1.0, 2.0] {
            let d = sublaplacian_spectrum(grid.clone(), omega).unwrap().dim();
            assert!(d >= last);
            last = d;
        }
    }

    #[test]
    fn discrete_bernstein_holds_on_span() {
        let grid = Arc::new(Grid::heisenberg_lattice(0.6, 8, 8).unwrap());
        let proj = sublaplacian_spectrum(grid.clone(), 1.5).unwrap();
        assert!(proj.dim() > 0);
        let op = GridLaplacian::new(grid).unwrap();
        for seed in 0..5 {
            let f = random_bandlimited(&proj, seed).unwrap();
            let lf = op.apply_grid(&f);
            assert!(lf.l2() <= proj.omega * f.l2() * (1.0 + 1e-9));
            let lf2 = proj.apply_laplacian(&proj.coefficients(&f));
            assert!(lf.sub(&lf2).unwrap().l2() < 1e-8);
        }
    }

    #[test]
    fn under_resolved_bandwidth_rejected() {
        let grid = interval(1.0, 11);
        assert!(matches!(sublaplacian_spectrum(grid, 1e4), Err(Error::UnderResolved(_))));
    }

    #[test]
    fn random_elements_are_normalized_and_fixed_by_projection() {
        let proj = sublaplacian_spectrum(interval(30.0, 601), 1.0).unwrap();
        let f = random_bandlimited(&proj, 3).unwrap();
        assert!((f.l2() - 1.0).abs() < 1e-10);
        assert!(proj.project(&f).sub(&f).unwrap().l2() < 1e-10);
        let g = random_bandlimited(&proj, 4).unwrap();
        assert!(f.inner(&g).unwrap().norm() < 1.0 - 1e-6);
        let empty = proj.truncate(1e-9);
        assert!(matches!(random_bandlimited(&empty, 0), Err(Error::EmptySpace(_))));
    }

    #[test]
    fn dilation_covariance_on_the_line() {
        // same node count on a box dilated by t: E_ω there ↔ E_{t²ω} here
        let t = 2.0;
        let base = sublaplacian_spectrum(interval(20.0, 401), 1.0).unwrap();
        let dil = sublaplacian_spectrum(interval(20.0 * t, 401), 1.0 / (t * t)).unwrap();
        let a = base.basis_matrix();
        let b = dil.basis_matrix() * t.sqrt();
        assert!(max_principal_angle(&a, &b) < 1e-2);
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let grid = interval(10.0, 201);
        let (p, hit) = sublaplacian_spectrum_cached(grid.clone(), 2.0, Some(dir.path())).unwrap();
        assert!(!hit);
        let (q, hit) = sublaplacian_spectrum_cached(grid.clone(), 2.0, Some(dir.path())).unwrap();
        assert!(hit);
        assert_eq!(p.eigenvalues, q.eigenvalues);
        assert_eq!(p.vectors, q.vectors);
        let other = interval(10.0, 203);
        let (_, hit) = sublaplacian_spectrum_cached(other, 2.0, Some(dir.path())).unwrap();
        assert!(!hit);
    }
}
