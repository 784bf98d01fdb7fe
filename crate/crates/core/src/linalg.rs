//! Iterative and dense symmetric linear algebra used by the frame and
//! spectral layers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Real symmetric operator acting on vectors of length `n`.
pub trait SymOp: Sync {
    fn n(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
    /// Any upper bound on the spectrum (e.g. Gershgorin).
    fn upper_bound(&self) -> f64;
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Clone, Debug)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Relative residual `∥b − Ax∥/∥b∥` after each iteration (first entry: initial guess).
    pub residuals: Vec<f64>,
}

/// Conjugate gradients for a symmetric positive semidefinite operator.
/// Converges to the minimum-norm solution when `b` lies in the range.
pub fn conjugate_gradient<F>(apply: F, b: &[f64], tol: f64, max_iter: usize) -> CgOutcome
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let bn = norm(b);
    let mut x = vec![0.0; n];
    if bn == 0.0 {
        return CgOutcome { x, iterations: 0, residuals: vec![0.0] };
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let mut residuals = vec![1.0];
    let mut it = 0;
    while it < max_iter && rr.sqrt() / bn > tol {
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        it += 1;
        residuals.push(rr.sqrt() / bn);
    }
    CgOutcome { x, iterations: it, residuals }
}

/// Largest eigenvalue of a PSD operator by power iteration.
/// Returns `(λ, iterations, relative change at exit)`.
pub fn power_iteration<F>(apply: F, n: usize, tol: f64, max_iter: usize, seed: u64) -> (f64, usize, f64)
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    if n == 0 {
        return (0.0, 0, 0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut lambda = 0.0;
    let mut change = f64::INFINITY;
    for it in 1..=max_iter {
        let w = apply(&v);
        let new = dot(&v, &w);
        let nw = norm(&w);
        if nw == 0.0 {
            return (0.0, it, 0.0);
        }
        v = w.into_iter().map(|x| x / nw).collect();
        change = (new - lambda).abs() / new.abs().max(1e-300);
        lambda = new;
        if change < tol {
            return (lambda, it, change);
        }
    }
    (lambda, max_iter, change)
}

/// Ascending eigen-decomposition of a dense symmetric matrix.
pub fn dense_sym_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

/// Orthonormalizes the columns in place (thin QR); returns the numerical rank.
pub fn orthonormalize(x: &mut DMatrix<f64>) -> usize {
    let (n, k) = x.shape();
    let mut rank = 0;
    for c in 0..k {
        // two passes of modified Gram–Schmidt
        for _ in 0..2 {
            for p in 0..rank {
                let d = x.column(p).dot(&x.column(c));
                let col = x.column(p).clone_owned();
                x.column_mut(c).axpy(-d, &col, 1.0);
            }
        }
        let nn = x.column(c).norm();
        if nn > 1e-12 * (n as f64).sqrt() {
            x.column_mut(c).scale_mut(1.0 / nn);
            if rank != c {
                x.swap_columns(rank, c);
            }
            rank += 1;
        }
    }
    rank
}

/// Largest principal angle between the column spans of two orthonormal
/// bases; `π/2` when the dimensions differ.
pub fn max_principal_angle(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    if a.ncols() != b.ncols() {
        return std::f64::consts::FRAC_PI_2;
    }
    if a.ncols() == 0 {
        return 0.0;
    }
    let m = a.transpose() * b;
    let sv = m.singular_values();
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min).clamp(0.0, 1.0);
    smin.acos()
}

fn apply_block<O: SymOp>(op: &O, x: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, k) = x.shape();
    let cols: Vec<Vec<f64>> = (0..k)
        .into_par_iter()
        .map(|c| {
            let mut y = vec![0.0; n];
            op.apply(x.column(c).as_slice(), &mut y);
            y
        })
        .collect();
    DMatrix::from_fn(n, k, |r, c| cols[c][r])
}

#[derive(Clone, Debug)]
pub struct EigenOptions {
    pub initial_block: usize,
    pub guard: usize,
    pub degree: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { initial_block: 24, guard: 6, degree: 24, tol: 1e-9, max_iter: 400, seed: 0 }
    }
}

/// All eigenpairs with eigenvalue ≤ `cutoff` of a symmetric PSD operator,
/// by Chebyshev-filtered subspace iteration with Rayleigh–Ritz extraction.
/// The block grows until at least `guard` converged Ritz values exceed the
/// cutoff, so nothing below it is missed.
pub fn lowest_eigenpairs<O: SymOp>(
    op: &O,
    cutoff: f64,
    opts: &EigenOptions,
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = op.n();
    if n == 0 {
        return Ok((vec![], DMatrix::zeros(0, 0)));
    }
    let upper = op.upper_bound();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut k = opts.initial_block.min(n);
    let mut x = DMatrix::from_fn(n, k, |_, _| StandardNormal.sample(&mut rng));
    orthonormalize(&mut x);
    let mut last_res = f64::INFINITY;
    for _ in 0..opts.max_iter {
        // Rayleigh–Ritz
        let ax = apply_block(op, &x);
        let h = x.transpose() * &ax;
        let h = (&h + h.transpose()) * 0.5;
        let (theta, v) = dense_sym_eigen(h);
        x = &x * &v;
        let ax = ax * &v;
        let res: Vec<f64> = (0..k)
            .map(|c| (ax.column(c) - x.column(c) * theta[c]).norm())
            .collect();
        let thresh = opts.tol * upper.max(1.0);
        let wanted = theta.iter().filter(|&&t| t <= cutoff).count();
        let wanted_ok = res[..wanted].iter().all(|&r| r <= thresh);
        let above = (wanted..k).filter(|&c| res[c] <= thresh * 1e3).count();
        last_res = res[..wanted.max(1).min(k)].iter().cloned().fold(0.0, f64::max);
        if wanted_ok && (above >= opts.guard || k == n) {
            let vals = theta[..wanted].to_vec();
            let vecs = x.columns(0, wanted).clone_owned();
            return Ok((vals, vecs));
        }
        if k - wanted < opts.guard + 2 && k < n {
            // grow the block with fresh random directions
            let extra = (opts.guard + 2 + k / 2).min(n - k);
            let mut bigger = DMatrix::from_fn(n, k + extra, |r, c| {
                if c < k { x[(r, c)] } else { StandardNormal.sample(&mut rng) }
            });
            orthonormalize(&mut bigger);
            x = bigger;
            k = x.ncols();
            continue;
        }
        // Chebyshev filter damping [a, upper]
        let a = theta[k - 1].max(cutoff * 1.01).min(upper * 0.99);
        let e = (upper - a) / 2.0;
        let c = (upper + a) / 2.0;
        let mut y0 = x.clone();
        let mut y1 = (apply_block(op, &x) - &x * c) / e;
        for _ in 2..=opts.degree {
            let y2 = (apply_block(op, &y1) - &y1 * c) * (2.0 / e) - &y0;
            y0 = y1;
            y1 = y2;
            let s = y1.norm();
            if s > 1e100 {
                y0 /= s;
                y1 /= s;
            }
        }
        x = y1;
        let r = orthonormalize(&mut x);
        if r < k {
            x = x.columns(0, r).clone_owned();
            k = r;
        }
    }
    Err(Error::Stagnation { iterations: opts.max_iter, residual: last_res })
}

pub fn to_dvector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}
