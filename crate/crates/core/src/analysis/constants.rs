//! Empirical estimates of the oscillation constants on E₁: Bernstein norms
//! `∥X^α∥_{E₁→L²}`, the local Sobolev constant `C_{B_b,B_{2b}}`, the
//! mean-value dilation factor `b`, `|B₁|`, and the assembled `C_G`.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::derivatives::{apply_multi_index, vector_field_apply, MultiIndex};
use super::oscillation::oscillation;
use super::spectrum::{random_coefficients, SpectralProjector};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::group::{GroupModel, GroupPoint, ModelKind};
use crate::linalg::dense_sym_eigen;

/// Candidate dilation factors for the mean-value inequality.
pub const B_CANDIDATES: [f64; 13] = [1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5, 2.75, 3.0, 3.25, 3.5, 3.75, 4.0];

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BernsteinNorm {
    pub alpha: Vec<u32>,
    pub degree: u32,
    pub norm: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstantEstimates {
    pub model: String,
    pub homogeneous_dimension: u32,
    /// `binom(2n, n)^{1/2}` with `n = dim G`.
    pub binomial_factor: f64,
    pub b: f64,
    /// Mean-value constant; 1 unless no candidate `b` reached the inequality.
    pub mean_value_c: f64,
    /// Lower-bound estimate of `C_{B_b, B_{2b}}`.
    pub c_ku: f64,
    pub c_ku_samples: usize,
    pub bernstein: Vec<BernsteinNorm>,
    pub unit_ball_measure: f64,
    pub c_g: f64,
}

impl ConstantEstimates {
    pub fn bernstein_sum(&self) -> f64 {
        self.bernstein.iter().map(|n| n.norm).sum()
    }

    /// `C · binom(2n,n)^{1/2} 2^{Q/2} b^{Q/2} C_{B_b,B_{2b}} |B₁|^{1/2} Σ ∥X^α∥`.
    pub fn assemble(&self) -> f64 {
        let q = self.homogeneous_dimension as f64;
        self.mean_value_c
            * self.binomial_factor
            * 2f64.powf(q / 2.0)
            * self.b.powf(q / 2.0)
            * self.c_ku
            * self.unit_ball_measure.sqrt()
            * self.bernstein_sum()
    }
}

fn binomial(n: u64, k: u64) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * (n - k + i) as f64 / i as f64)
}

/// `|B₁|` for the homogeneous norm. On H¹ the t-extent over `(x, y)` is
/// `√(1 − ρ⁴)/2` with `ρ² = x² + y²`, integrated by the midpoint rule on
/// an `n × n` cell grid of `[−1, 1]²` (exact value `π²/8`).
pub fn unit_ball_measure(model: &GroupModel, n: usize) -> Result<f64> {
    match model.kind {
        ModelKind::Euclidean(1) => Ok(2.0),
        ModelKind::Euclidean(2) => Ok(std::f64::consts::PI),
        ModelKind::Euclidean(3) => Ok(4.0 * std::f64::consts::PI / 3.0),
        ModelKind::Heisenberg => {
            let h = 2.0 / n as f64;
            let mut acc = 0.0;
            for i in 0..n {
                let x = -1.0 + (i as f64 + 0.5) * h;
                for j in 0..n {
                    let y = -1.0 + (j as f64 + 0.5) * h;
                    let r2 = x * x + y * y;
                    if r2 < 1.0 {
                        acc += (1.0 - r2 * r2).sqrt() / 2.0;
                    }
                }
            }
            Ok(acc * h * h)
        }
        _ => Err(Error::UnsupportedModel { op: "unit_ball_measure", model: model.id() }),
    }
}

/// `∥X^α∥` on the span of `proj`: square root of the top eigenvalue of the
/// Gram matrix of `X^α eᵢ`.
pub fn bernstein_norm(proj: &SpectralProjector, alpha: &MultiIndex, order: usize) -> Result<f64> {
    let images: Vec<GridFunction> = (0..proj.dim())
        .map(|i| apply_multi_index(alpha, &proj.basis_function(i), order))
        .collect::<Result<_>>()?;
    let d = images.len();
    let mut gram = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..=i {
            let v = images[i].inner(&images[j])?.re;
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    let (vals, _) = dense_sym_eigen(gram);
    Ok(vals.last().copied().unwrap_or(0.0).max(0.0).sqrt())
}

/// Test family for the local Sobolev constant: retained eigenvectors,
/// random elements of the span, the constant, and Gaussian bumps.
fn sobolev_family(proj: &SpectralProjector, b: f64, seed: u64) -> Result<Vec<GridFunction>> {
    let grid = proj.grid.clone();
    let model = grid.model;
    let mut fam: Vec<GridFunction> = (0..proj.dim()).map(|i| proj.basis_function(i)).collect();
    for s in 0..proj.dim().max(4) as u64 {
        fam.push(proj.synthesize(&random_coefficients(proj.dim(), seed ^ (s + 1))?));
    }
    fam.push(GridFunction::from_real_fn(grid.clone(), |_| 1.0));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for &sigma in &[0.75, 1.0, 1.5, 2.0, 3.0, 5.0] {
        for _ in 0..3 {
            let c = model.from_chart(&[
                rng.random_range(-0.5..0.5) * b,
                rng.random_range(-0.5..0.5) * b,
                rng.random_range(-0.1..0.1) * b * b,
            ]);
            let ci = model.inv(&c);
            fam.push(GridFunction::from_real_fn(grid.clone(), move |p| {
                let z = model.mul(&ci, p);
                let g = model.gauge(&z) / sigma;
                (-(g * g * g * g)).exp()
            }));
        }
    }
    Ok(fam)
}

/// Lower-bound estimate of `C_{B_k, B_u}` in
/// `∥f∥_{∞,B_k} ≤ binom(2n,n)^{1/2} C (Σ_{|α|≤n} ∥X^α f∥²_{2,B_u})^{1/2}`.
pub fn local_sobolev_constant(
    family: &[GridFunction],
    k: f64,
    u: f64,
    order: usize,
) -> Result<f64> {
    let grid = family.first().ok_or_else(|| Error::EmptySpace("empty test family".into()))?.grid.clone();
    let model = grid.model;
    let n = grid.dim() as u32;
    let alphas = MultiIndex::all(grid.dim(), 0, n);
    let binom = binomial(2 * n as u64, n as u64).sqrt();
    let in_k: Vec<bool> = (0..grid.len()).map(|i| model.gauge(&grid.point(i)) < k).collect();
    let in_u: Vec<bool> = (0..grid.len()).map(|i| model.gauge(&grid.point(i)) < u).collect();
    let mut best = 0.0f64;
    for f in family {
        let sup = f.norms_masked(|i| in_k[i]).sup;
        let mut energy = 0.0;
        for a in &alphas {
            let xf = apply_multi_index(a, f, order)?;
            energy += xf.norms_masked(|i| in_u[i]).l2.powi(2);
        }
        if energy > 0.0 {
            best = best.max(sup / (binom * energy.sqrt()));
        }
    }
    Ok(best)
}

/// Mean-value dilation factor. For each candidate `b` the smallest `C(b)`
/// with `|f(xy) − f(x)| ≤ C |y| sup_{|z| ≤ b|y|, j} |X_j f(xz)|` across the
/// family at node pairs `(x, y)` is measured. Returns the smallest `b` with
/// `C(b) ≤ 1`, or else the `(b, C(b))` minimizing `C(b)·b^{Q/2}`.
pub fn mean_value_factor(
    family: &[GridFunction],
    xs: &[usize],
    y_radius: f64,
    order: usize,
) -> Result<(f64, f64)> {
    let grid = family.first().ok_or_else(|| Error::EmptySpace("empty test family".into()))?.grid.clone();
    let model = grid.model;
    let b_max = *B_CANDIDATES.last().expect("nonempty");
    let layer = model
        .first_layer_dim()
        .ok_or_else(|| Error::UnsupportedModel { op: "mean_value_factor", model: model.id() })?;
    let q = model.homogeneous_dimension().expect("stratified") as f64;
    let e = model.identity();
    if grid.node_index(&e).is_none() {
        return Err(Error::Precondition("identity must be a grid node".into()));
    }
    // node offsets sorted by gauge
    let mut offsets: Vec<(f64, GroupPoint)> = grid
        .nodes_in_ball(&e, b_max * y_radius * (1.0 + 1e-12))
        .into_iter()
        .map(|k| {
            let p = grid.point(k);
            (model.gauge(&p), p)
        })
        .collect();
    offsets.sort_by(|a, b| a.0.total_cmp(&b.0));
    let ys: Vec<&(f64, GroupPoint)> = offsets.iter().filter(|(g, _)| *g > 0.0 && *g <= y_radius).collect();
    let mut need = [0.0f64; B_CANDIDATES.len()];
    for f in family {
        let grads: Vec<GridFunction> =
            (0..layer).map(|j| vector_field_apply(j, f, order)).collect::<Result<_>>()?;
        let g: Vec<f64> = (0..grid.len())
            .map(|k| grads.iter().map(|d| d.values[k].norm()).fold(0.0, f64::max))
            .collect();
        for &xk in xs {
            let x = grid.point(xk);
            let fx = f.values[xk];
            for (gy, y) in &ys {
                let Some(xy) = grid.node_index(&model.mul(&x, y)) else { continue };
                let q_pair = (f.values[xy] - fx).norm() / gy;
                if q_pair < 1e-12 {
                    continue;
                }
                let mut run = 0.0f64;
                let mut it = offsets.iter().peekable();
                for (bi, &b) in B_CANDIDATES.iter().enumerate() {
                    while let Some((gz, z)) = it.peek() {
                        if *gz > b * gy {
                            break;
                        }
                        if let Some(k) = grid.node_index(&model.mul(&x, z)) {
                            run = run.max(g[k]);
                        }
                        it.next();
                    }
                    need[bi] = need[bi].max(if run > 0.0 { q_pair / run } else { f64::INFINITY });
                }
            }
        }
    }
    if let Some(bi) = need.iter().position(|&c| c <= 1.0) {
        return Ok((B_CANDIDATES[bi], 1.0));
    }
    let (bi, _) = need
        .iter()
        .enumerate()
        .map(|(i, &c)| (i, c * B_CANDIDATES[i].powf(q / 2.0)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty");
    if !need[bi].is_finite() {
        return Err(Error::Precondition("mean-value inequality has no finite constant on this family".into()));
    }
    Ok((B_CANDIDATES[bi], need[bi]))
}

/// Full constant estimate on an H¹ (or ℝⁿ) grid carrying an E₁ projector.
pub fn estimate_constants(proj: &SpectralProjector, seed: u64) -> Result<ConstantEstimates> {
    let grid = proj.grid.clone();
    let model = grid.model;
    let q = model
        .homogeneous_dimension()
        .map(|q| q as u32)
        .ok_or_else(|| Error::UnsupportedModel { op: "estimate_constants", model: model.id() })?;
    if proj.dim() == 0 {
        return Err(Error::EmptySpace("E₁ projector has no retained eigenvectors".into()));
    }
    let n = grid.dim() as u32;
    let order = 2;
    if grid.axes.iter().any(|a| a.n < 2 * order + 1) {
        return Err(Error::GridTooCoarse(format!(
            "|α| = {} derivatives need at least {} nodes per axis",
            n + 1,
            2 * order + 1
        )));
    }
    let weights = model.stratification_weights().expect("stratified model");
    let bernstein = MultiIndex::all(grid.dim(), 1, n + 1)
        .into_iter()
        .map(|a| {
            let norm = bernstein_norm(proj, &a, order)?;
            Ok(BernsteinNorm { degree: a.degree(&weights), alpha: a.0, norm })
        })
        .collect::<Result<Vec<_>>>()?;

    let family = sobolev_family(proj, 1.0, seed)?;
    let xs = inner_nodes(&grid, 0.5, 40, seed);
    let (b, mean_value_c) = mean_value_factor(&family, &xs, 1.0, order)?;
    let c_ku = local_sobolev_constant(&family, b, 2.0 * b, order)?;
    let mut est = ConstantEstimates {
        model: model.id(),
        homogeneous_dimension: q,
        binomial_factor: binomial(2 * n as u64, n as u64).sqrt(),
        b,
        mean_value_c,
        c_ku,
        c_ku_samples: family.len(),
        bernstein,
        unit_ball_measure: unit_ball_measure(&model, 2000)?,
        c_g: 0.0,
    };
    est.c_g = est.assemble();
    Ok(est)
}

/// Deterministic pick of `count` nodes in the central `frac` of every axis.
pub fn inner_nodes(grid: &Arc<Grid>, frac: f64, count: usize, seed: u64) -> Vec<usize> {
    let inner: Vec<usize> = (0..grid.len())
        .filter(|&k| {
            let c = grid.chart_coords(k);
            grid.axes.iter().enumerate().all(|(d, a)| {
                let mid = 0.5 * (a.lo + a.hi);
                (c[d] - mid).abs() <= 0.5 * frac * (a.hi - a.lo)
            })
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count.min(inner.len())).map(|_| inner[rng.random_range(0..inner.len())]).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalingRow {
    pub r: f64,
    /// `∥osc_{B_r} f∥₂ / ∥f∥₂` per test function.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalingReport {
    pub c_g: f64,
    pub rows: Vec<ScalingRow>,
    /// `(max − min)/min` of `max_ratio / r` across radii.
    pub variation: f64,
    /// Least-squares fit `mean ratio ≈ slope · r` through the origin.
    pub slope: f64,
    pub r_squared: f64,
    pub all_below_bound: bool,
}

/// Measures `∥osc_{B_r} f∥₂/∥f∥₂` for `m` random `f` in the span at each radius.
pub fn oscillation_scaling_check(
    proj: &SpectralProjector,
    radii: &[f64],
    m: usize,
    c_g: f64,
    seed: u64,
) -> Result<ScalingReport> {
    if radii.iter().any(|&r| !(r > 0.0 && r <= 1.0)) {
        return Err(Error::InvalidArgument("radii must lie in (0, 1]".into()));
    }
    let fs: Vec<GridFunction> = (0..m as u64)
        .map(|s| proj.synthesize(&random_coefficients(proj.dim(), seed.wrapping_add(s)).expect("nonempty")))
        .collect();
    if proj.dim() == 0 {
        return Err(Error::EmptySpace("E₁ projector has no retained eigenvectors".into()));
    }
    let mut rows = Vec::new();
    for &r in radii {
        let ratios = fs
            .iter()
            .map(|f| Ok(oscillation(f, r)?.l2() / f.l2()))
            .collect::<Result<Vec<f64>>>()?;
        let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
        rows.push(ScalingRow { r, ratios, max_ratio, bound: r * c_g });
    }
    let per_r: Vec<f64> = rows.iter().map(|row| row.max_ratio / row.r).collect();
    let lo = per_r.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = per_r.iter().copied().fold(0.0, f64::max);
    // through-origin fit of the per-radius mean ratio
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|row| (row.r, row.ratios.iter().sum::<f64>() / row.ratios.len().max(1) as f64))
        .collect();
    let slope = pts.iter().map(|p| p.0 * p.1).sum::<f64>() / pts.iter().map(|p| p.0 * p.0).sum::<f64>();
    let mean = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - mean).powi(2)).sum();
    let ss_res: f64 = pts.iter().map(|p| (p.1 - slope * p.0).powi(2)).sum();
    Ok(ScalingReport {
        c_g,
        all_below_bound: rows.iter().all(|row| row.max_ratio <= row.bound),
        rows,
        variation: (hi - lo) / lo,
        slope,
        r_squared: if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 },
    })
}

/// `∥f∘δ_t∥₂ / ∥f∥₂` for a grid function (for the `t^{−Q/2}` law).
pub fn dilation_norm_ratio(f: &GridFunction, t: f64) -> Result<f64> {
    let g = f.compose_dilation(t)?;
    Ok(g.l2() / f.l2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::spectrum::{random_bandlimited, sublaplacian_spectrum};
    use crate::grid::Axis;

    fn interval(l: f64, n: usize) -> Arc<Grid> {
        Arc::new(Grid::new(GroupModel::real_line(), vec![Axis::closed(0.0, l, n).unwrap()]).unwrap())
    }

    #[test]
    fn heisenberg_unit_ball_converges() {
        let m = GroupModel::heisenberg();
        let a = unit_ball_measure(&m, 400).unwrap();
        let b = unit_ball_measure(&m, 800).unwrap();
        let exact = std::f64::consts::PI.powi(2) / 8.0;
        assert!((a - b).abs() / b < 5e-4);
        assert!((b - exact).abs() / exact < 5e-4);
    }

    #[test]
    fn line_derivative_is_bounded_on_e1() {
        let proj = sublaplacian_spectrum(interval(40.0, 801), 1.0).unwrap();
        let d = bernstein_norm(&proj, &MultiIndex(vec![1]), 2).unwrap();
        assert!(d <= 1.0 + 1e-6 && d > 0.8, "{d}");
    }

    #[test]
    fn assembled_constant_matches_parts() {
        let grid = Arc::new(Grid::heisenberg_lattice(0.8, 10, 10).unwrap());
        let proj = sublaplacian_spectrum(grid, 1.0).unwrap();
        assert!(proj.dim() > 0);
        let est = estimate_constants(&proj, 0).unwrap();
        assert_eq!(est.assemble().to_bits(), est.c_g.to_bits());
        assert!(est.c_g > 0.0 && est.c_ku > 0.0 && est.b >= 1.0);
        assert_eq!(est.bernstein.len(), 34);
        assert!((est.binomial_factor - 20f64.sqrt()).abs() < 1e-12);
        // Bernstein chain on the span, |α| ≤ 2
        for seed in 0..4 {
            let f = random_bandlimited(&proj, 100 + seed).unwrap();
            for bn in est.bernstein.iter().filter(|b| b.alpha.iter().sum::<u32>() <= 2) {
                let xf = apply_multi_index(&MultiIndex(bn.alpha.clone()), &f, 2).unwrap();
                assert!(xf.l2() <= bn.norm * f.l2() * (1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn line_oscillation_scales_linearly() {
        let proj = sublaplacian_spectrum(interval(40.0, 1601), 1.0).unwrap();
        let rep = oscillation_scaling_check(&proj, &[0.1, 0.2, 0.4], 4, 10.0, 1).unwrap();
        assert!(rep.variation < 0.1, "{}", rep.variation);
        assert!(rep.r_squared > 0.95);
        assert!(rep.rows[0].max_ratio < rep.rows[2].max_ratio);
        assert!(oscillation_scaling_check(&proj, &[1.5], 1, 1.0, 0).is_err());
    }
}
