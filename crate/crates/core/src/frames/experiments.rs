//! End-to-end sampling experiments: Shannon-type systems and the Beurling
//! regime on the circle, random certified configurations for the
//! sampling-equivalence theorem, the wavelet frame pipeline on the affine
//! group, and sampling of spectral subspaces on H¹.

use std::sync::Arc;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::quasi::{quasi_bound_check, quasi_bound_check_with, theorem35_verdict, QuasiBoundReport, Theorem35Verdict};
use super::system::{generalized_bounds_from, FrameBounds, FrameSystem, Method};
use crate::error::{Error, Result};
use crate::linalg::{max_principal_angle, orthonormalize};
use crate::grid::{Axis, Grid, GridFunction};
use crate::group::{GroupModel, GroupPoint};
use crate::kernels::wavelet::{central_points, HypothesisScan, Mollifier, MollifiedSystem, WaveletSystem};
use crate::kernels::{Space, TrigSpace};
use crate::analysis::constants::unit_ball_measure;
use crate::analysis::{oscillation, sublaplacian_spectrum, SpectralProjector};
use crate::pointsets::{
    build_partition, nearest_distances, right_translate, verify_separated, Complement, PartitionCheck, PointSet,
    Semidirect,
};

pub fn circle_grid(half: f64, n: usize) -> Result<Arc<Grid>> {
    Ok(Arc::new(Grid::new(GroupModel::real_line(), vec![Axis::periodic(-half, half, n)?])?))
}

/// Arithmetic set `{k·step}` on the circle `[−half, half)`.
pub fn circle_lattice(half: f64, step: f64) -> Result<PointSet> {
    let k = (half / step).floor() as i64;
    let mut points: Vec<GroupPoint> = (-k..=k).map(|j| GroupPoint::new(&[j as f64 * step])).collect();
    // drop the wrapped duplicate of −half
    points.retain(|p| p.coords[0] < half - 1e-9 * step);
    PointSet::new(GroupModel::real_line(), points, vec![(-half, half)])
}

#[derive(Clone, Debug, Serialize)]
pub struct ShannonReport {
    pub step: f64,
    pub band: f64,
    pub points: usize,
    pub dim: usize,
    pub bounds: FrameBounds,
    /// Largest relative L² reconstruction error (absent when not a frame).
    pub max_rel_error: Option<f64>,
    pub functions: usize,
    pub seconds: f64,
}

/// Samples on `step·ℤ` of the band-`Ω` space on `[−half, half)`;
/// reconstructs `functions` random elements by conjugate gradients.
pub fn shannon_experiment(step: f64, band: f64, half: f64, n: usize, functions: usize, seed: u64) -> Result<ShannonReport> {
    let t0 = Instant::now();
    let grid = circle_grid(half, n)?;
    let space: Arc<dyn Space> = Arc::new(TrigSpace::new(grid, band)?);
    let set = circle_lattice(half, step)?;
    let fs = FrameSystem::new(space.clone(), set)?;
    let bounds = fs.estimate_bounds()?;
    let mut max_rel_error = None;
    if bounds.tightness.is_finite() {
        let mut worst = 0.0f64;
        for k in 0..functions {
            let f = space.random_element(seed.wrapping_add(k as u64))?;
            let rec = fs.reconstruct(&fs.sample(&f), Method::Cg, Some(&bounds), 1e-13, 1000)?;
            worst = worst.max(rec.function.sub(&f)?.l2() / f.l2());
        }
        max_rel_error = Some(worst);
    }
    Ok(ShannonReport {
        step,
        band,
        points: fs.points.len(),
        dim: fs.dim(),
        bounds,
        max_rel_error,
        functions,
        seconds: t0.elapsed().as_secs_f64(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BeurlingRow {
    pub r_sqrt_omega: f64,
    pub r: f64,
    pub step: f64,
    pub points: usize,
    pub lower: f64,
    pub upper: f64,
    pub tightness: f64,
}

/// Density sweep on the line: `E_ω` of `−d²/dx²` is the band `Ω = √ω/2π`;
/// the sets are arithmetic with step `2r`, hence exactly `B_r`-dense.
pub fn beurling_scan(omega: f64, values: &[f64], half: f64, n: usize) -> Result<Vec<BeurlingRow>> {
    if !(omega > 0.0) {
        return Err(Error::InvalidArgument(format!("ω must be positive, got {omega}")));
    }
    let band = omega.sqrt() / (2.0 * std::f64::consts::PI);
    let mut rows = Vec::new();
    for &v in values {
        let r = v / omega.sqrt();
        let step = 2.0 * r;
        // the period is a whole number of steps, so the wrap gap is a step too
        let cells = (2.0 * half / step).round().max(1.0);
        let half_r = 0.5 * cells * step;
        let space: Arc<dyn Space> = Arc::new(TrigSpace::new(circle_grid(half_r, n)?, band)?);
        let set = circle_lattice(half_r, step)?;
        let fs = FrameSystem::new(space, set)?;
        let b = fs.estimate_bounds()?;
        rows.push(BeurlingRow {
            r_sqrt_omega: v,
            r,
            step,
            points: fs.points.len(),
            lower: b.lower,
            upper: b.upper,
            tightness: b.tightness,
        });
    }
    Ok(rows)
}

/// A perturbed unit-density set on the circle: one node-aligned point per
/// unit cell, jittered by at most `jitter`, with a random global offset.
/// Returns the set and its separation and covering radii (half the
/// smallest and largest gap).
pub fn jittered_circle_set(grid: &Grid, jitter: f64, rng: &mut ChaCha8Rng) -> Result<(PointSet, f64, f64)> {
    let axis = grid.axes[0];
    let (half, dx) = (0.5 * axis.length(), axis.h());
    let count = axis.length().round() as i64;
    let offset = (rng.random_range(0.0..1.0) / dx).round() * dx;
    let mut xs: Vec<f64> = (0..count)
        .map(|k| {
            let j = if jitter > 0.0 { rng.random_range(-jitter..jitter) } else { 0.0 };
            let x = -half + offset + k as f64 + j;
            let x = ((x + half).rem_euclid(axis.length())) - half;
            (x / dx).round() * dx
        })
        .collect();
    xs.sort_by(|a, b| a.total_cmp(b));
    xs.dedup();
    let mut gaps: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.push(xs[0] + axis.length() - xs[xs.len() - 1]);
    let min_gap = gaps.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_gap = gaps.iter().cloned().fold(0.0, f64::max);
    let points = xs.iter().map(|&x| GroupPoint::new(&[x])).collect();
    let set = PointSet::new(GroupModel::real_line(), points, vec![(-half, half)])?;
    // ball radii in the open-ball convention of the certificates
    Ok((set, 0.5 * min_gap, 0.5 * max_gap + dx))
}

/// Sampling-equivalence verdicts for `count` random perturbed unit-density
/// sets in the band-`Ω` space on the circle `[−half, half)`.
pub fn theorem35_random_configs(
    band: f64,
    half: f64,
    n: usize,
    count: usize,
    test_functions: usize,
    seed: u64,
) -> Result<Vec<Theorem35Verdict>> {
    let grid = circle_grid(half, n)?;
    let space: Arc<dyn Space> = Arc::new(TrigSpace::new(grid.clone(), band)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for k in 0..count {
        let jitter = rng.random_range(0.0..0.3);
        let (set, w, u) = jittered_circle_set(&grid, jitter, &mut rng)?;
        out.push(theorem35_verdict(space.clone(), set, w, u, test_functions, seed + 1000 * k as u64, 1e-3)?);
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct PartitionRow {
    pub points: usize,
    pub w_radius: f64,
    pub u_radius: f64,
    pub check: PartitionCheck,
    pub quasi: QuasiBoundReport,
}

impl PartitionRow {
    pub fn passed(&self, tol: f64) -> bool {
        self.check.passed() && self.quasi.max_excess <= tol
    }
}

/// Partition and quasi-interpolation checks for random perturbed
/// unit-density sets on the circle.
pub fn partition_configs_line(
    band: f64,
    half: f64,
    n: usize,
    count: usize,
    functions: usize,
    seed: u64,
) -> Result<Vec<PartitionRow>> {
    let grid = circle_grid(half, n)?;
    let space: Arc<dyn Space> = Arc::new(TrigSpace::new(grid.clone(), band)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for k in 0..count {
        let jitter = rng.random_range(0.0..0.3);
        let (set, w, u) = jittered_circle_set(&grid, jitter, &mut rng)?;
        let part = build_partition(&set, w, u, &grid)?;
        let check = part.check(&set, &grid);
        let quasi = quasi_bound_check(&space, &set, &part, functions, seed + 1000 * k as u64)?;
        out.push(PartitionRow { points: set.len(), w_radius: w, u_radius: u, check, quasi });
    }
    Ok(out)
}

/// Integer-type lattice `{(i, j, k/2)}` of H¹ dilated by `scale`, restricted
/// to the chart box `bounds` enlarged by `margin` (in gauge units).
pub fn heisenberg_integer_lattice(scale: f64, bounds: &[(f64, f64)], margin: f64) -> Result<PointSet> {
    if !(scale > 0.0) || bounds.len() != 3 {
        return Err(Error::InvalidArgument(format!("need a positive scale and a 3-d box, got {scale}")));
    }
    let model = GroupModel::heisenberg();
    let (mx, mt) = (margin, margin * margin);
    let cell = |lo: f64, hi: f64, step: f64| ((lo / step).floor() as i64, (hi / step).ceil() as i64);
    let (i0, i1) = cell(bounds[0].0 - mx, bounds[0].1 + mx, scale);
    let (j0, j1) = cell(bounds[1].0 - mx, bounds[1].1 + mx, scale);
    let (k0, k1) = cell(bounds[2].0 - mt, bounds[2].1 + mt, 0.5 * scale * scale);
    let inside = |v: f64, (lo, hi): (f64, f64), m: f64| {
        let tol = 1e-9 * (hi - lo).abs().max(1.0);
        v >= lo - m - tol && v <= hi + m + tol
    };
    let mut points = Vec::new();
    for i in i0..=i1 {
        for j in j0..=j1 {
            for k in k0..=k1 {
                let p = [i as f64 * scale, j as f64 * scale, 0.5 * k as f64 * scale * scale];
                if inside(p[0], bounds[0], mx) && inside(p[1], bounds[1], mx) && inside(p[2], bounds[2], mt) {
                    points.push(GroupPoint::new(&p));
                }
            }
        }
    }
    let region = bounds.to_vec();
    PointSet::new(model, points, region)
}

fn grid_box(grid: &Grid) -> Vec<(f64, f64)> {
    grid.axes.iter().map(|a| (a.node(0), a.node(a.n - 1))).collect()
}

/// Largest distance from a node to the set, i.e. the smallest certified
/// covering radius on the grid (before padding).
pub fn covering_radius(set: &PointSet, grid: &Grid) -> f64 {
    nearest_distances(set, grid).into_iter().fold(0.0, f64::max)
}

/// Largest `W` whose balls are certified disjoint on the grid: half the
/// minimal pairwise gauge distance when that passes, the quasi-triangle
/// bound otherwise.
pub fn separation_radius(set: &PointSet, grid: &Grid) -> Result<f64> {
    let model = set.model;
    let d = (0..set.len())
        .into_par_iter()
        .map(|i| {
            (i + 1..set.len())
                .map(|j| model.gauge(&model.left_quotient(&set.points[i], &set.points[j])))
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min);
    let w = 0.5 * d * (1.0 - 1e-9);
    if verify_separated(set, w, grid)?.passed {
        Ok(w)
    } else {
        Ok(w / model.triangle_constant)
    }
}

/// Partition and quasi-interpolation checks on H¹ for right translates
/// `δ_{nh}(Γ₀)·c` of the integer lattice by random nodes `c`, in the
/// spectral subspace `E_ω` of the lattice grid `(h, m, mt)`. All
/// configurations share one `U` (the largest certified covering radius),
/// so the oscillation norms are computed once.
pub fn partition_configs_heisenberg(
    grid: Arc<Grid>,
    omega: f64,
    spacing: usize,
    count: usize,
    functions: usize,
    seed: u64,
) -> Result<Vec<PartitionRow>> {
    let h = grid
        .heisenberg_lattice_step()
        .ok_or_else(|| Error::InvalidArgument("need a lattice-compatible H¹ grid".into()))?;
    if spacing == 0 {
        return Err(Error::InvalidArgument("lattice spacing must be at least one node".into()));
    }
    let space: Arc<dyn Space> = Arc::new(sublaplacian_spectrum(grid.clone(), omega)?);
    let scale = spacing as f64 * h;
    let base = heisenberg_integer_lattice(scale, &grid_box(&grid), 2.0 * scale)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spacing as i64;
    let mut sets = Vec::with_capacity(count);
    for _ in 0..count {
        let c = GroupPoint::new(&[
            rng.random_range(0..n) as f64 * h,
            rng.random_range(0..n) as f64 * h,
            rng.random_range(0..n * n) as f64 * 0.5 * h * h,
        ]);
        let shifted = right_translate(&base, &c)?;
        let cover = covering_radius(&shifted, &grid);
        sets.push((shifted, cover));
    }
    let u = sets.iter().map(|s| s.1).fold(0.0, f64::max) * (1.0 + 1e-6);
    let tests = (0..functions)
        .map(|k| {
            let f = space.random_element(seed.wrapping_add(k as u64))?;
            let osc = oscillation(&f, u)?.l2();
            Ok((f, osc))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(count);
    for (set, _) in &sets {
        let w = separation_radius(set, &grid)?.min(u);
        let part = build_partition(set, w, u, &grid)?;
        let check = part.check(set, &grid);
        let quasi = quasi_bound_check_with(set, &part, &tests)?;
        out.push(PartitionRow { points: set.len(), w_radius: w, u_radius: u, check, quasi });
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct WaveletLevel {
    /// `ln a` step.
    pub alpha: f64,
    /// Translation step at unit scale.
    pub beta: f64,
    pub points: usize,
    pub bounds: FrameBounds,
}

#[derive(Clone, Debug, Serialize)]
pub struct WaveletPipelineReport {
    pub mollifier: (f64, f64),
    pub window: LatticeWindow,
    pub c_factor: f64,
    pub probe_ratios: Vec<f64>,
    pub scan: HypothesisScan,
    pub levels: Vec<WaveletLevel>,
    pub lower_positive: bool,
    pub tightness_decreasing: bool,
    /// Largest relative gap between `V_η φ` computed directly and through
    /// `⟨V_ψ φ, L_x h⟩`.
    pub convolution_defect: f64,
    pub seconds: f64,
}

/// Hyperbolic quasi-lattice `{(e^{ℓα}, e^{ℓα} k β)}`, keeping the points
/// whose cells `γ·{(e^s, n) : s ∈ [0, α), n ∈ [0, β)}` lie in the window
/// `ln a ∈ [u_min, u_max]`, `|b| ≤ min(b0 + b1·a, b_max)`.
pub fn hyperbolic_lattice(alpha: f64, beta: f64, window: &LatticeWindow, b_max: f64) -> Result<PointSet> {
    let model = GroupModel::affine();
    let LatticeWindow { u_min, u_max, b0, b1 } = *window;
    if !(alpha > 0.0 && beta > 0.0) || u_min >= u_max {
        return Err(Error::InvalidArgument(format!("bad lattice steps ({alpha}, {beta}) or window {window:?}")));
    }
    let tol = 1e-9;
    let (l0, l1) = ((u_min / alpha - tol).ceil() as i64, (u_max / alpha + tol).floor() as i64);
    let build = Semidirect::Affine;
    let mut points = Vec::new();
    // ℓ = l1 would put part of its cell past u_max
    for l in l0..l1 {
        let s = l as f64 * alpha;
        let a = s.exp();
        // the b-window grows with a, so the cell's smallest scale binds
        let w = (b0 + b1 * a).min(b_max) * (1.0 + tol);
        let (k0, k1) = ((-w / (a * beta)).ceil() as i64, (w / (a * beta)).floor() as i64 - 1);
        for k in k0..=k1 {
            points.push(build.join(&model, &build.act(s, &[k as f64 * beta]), s));
        }
    }
    PointSet::new(model, points, vec![(u_min, u_max), (-b_max, b_max)])
}

/// Part of the affine group kept in the quasi-lattice: `ln a ∈ [u_min,
/// u_max]`, `|b| ≤ b0 + b1·a`. The small-scale side needs to reach far:
/// near-cancelling combinations of the test atoms keep energy there.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LatticeWindow {
    pub u_min: f64,
    pub u_max: f64,
    pub b0: f64,
    pub b1: f64,
}

impl Default for LatticeWindow {
    fn default() -> Self {
        Self { u_min: -4.5, u_max: 3.5, b0: 10.0, b1: 14.0 }
    }
}

/// Scans for a radius `ρ*` meeting the mollifier hypothesis, then builds
/// hyperbolic quasi-lattices at `ρ*`, `ρ*/2` and `ρ*/4` and estimates their
/// frame bounds on the span of a 3×3 block of central atoms.
pub fn wavelet_frame_pipeline(
    sys: Arc<WaveletSystem>,
    h: Mollifier,
    radii: &[f64],
    step: f64,
    window: LatticeWindow,
) -> Result<WaveletPipelineReport> {
    let t0 = Instant::now();
    let msys = MollifiedSystem::new(sys.clone(), h)?;
    let scan = msys.hypothesis_scan(radii, step)?;
    let rho = scan.passing_radius.ok_or_else(|| {
        Error::Precondition(format!(
            "no scanned radius meets the hypothesis; smallest product {:.3}",
            scan.rows.iter().map(|r| r.product).fold(f64::INFINITY, f64::min)
        ))
    })?;
    let probes: Vec<GridFunction> = central_points(3, 3).iter().map(|x| sys.atom(x)).collect();
    let d = probes.len();
    let mut gram = DMatrix::<Complex64>::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            gram[(i, j)] = probes[j].inner(&probes[i])?;
        }
    }
    // stay clear of the periodic wrap of the line
    let b_max = 0.45 * sys.line.axes[0].length();
    let mut levels = Vec::new();
    for refine in 0..3 {
        let s = rho / f64::powi(2.0, refine);
        let set = hyperbolic_lattice(s, s, &window, b_max)?;
        let bounds = generalized_bounds_from(&msys.frame_gram(&probes, &set.points), &gram)?;
        levels.push(WaveletLevel { alpha: s, beta: s, points: set.len(), bounds });
    }
    let lower_positive = levels.iter().all(|l| l.bounds.lower > 0.0);
    let tightness_decreasing = levels.windows(2).all(|w| w[1].bounds.tightness < w[0].bounds.tightness);
    let phi = &probes[d / 2];
    let vpsi = sys.transform(phi)?;
    let xs = central_points(3, 3);
    let direct = sys.transform_at(phi, &|s| msys.eta(s), &xs);
    let scale = direct.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let convolution_defect = xs
        .iter()
        .zip(&direct)
        .map(|(x, v)| (msys.convolution_route(&vpsi, x) - v).norm() / scale)
        .fold(0.0, f64::max);
    Ok(WaveletPipelineReport {
        mollifier: (h.radius_u, h.radius_b),
        window,
        c_factor: msys.c_factor,
        probe_ratios: msys.probe_ratios.clone(),
        scan,
        levels,
        lower_positive,
        tightness_decreasing,
        convolution_defect,
        seconds: t0.elapsed().as_secs_f64(),
    })
}

/// Complement `{n·exp(sX) : n ∈ [0,1)×[0,½), s ∈ [0,1)}` of the integer
/// lattice of H¹ in the semidirect build-up `N ⋊ ℝ`.
pub fn heisenberg_complement() -> Complement {
    Complement::Semidirect { build: Semidirect::Heisenberg, normal_box: vec![(0.0, 1.0), (0.0, 0.5)], step: 1.0 }
}

/// Integer lattice dilated by `n·h`, kept on the nodes of the lattice grid.
pub fn node_lattice(grid: &Grid, spacing: usize) -> Result<PointSet> {
    let h = grid
        .heisenberg_lattice_step()
        .ok_or_else(|| Error::InvalidArgument("need a lattice-compatible H¹ grid".into()))?;
    let set = heisenberg_integer_lattice(spacing as f64 * h, &grid_box(grid), 0.0)?;
    // snap to the exact node coordinates
    let points = set.points.iter().filter_map(|p| grid.node_index(p)).map(|k| grid.point(k)).collect();
    PointSet::new(set.model, points, set.region)
}

#[derive(Clone, Debug, Serialize)]
pub struct GuaranteedBranch {
    /// Density radius with `r√ω Ĉ_G = 0.9`.
    pub r: f64,
    pub s: f64,
    /// Dilation of the integer lattice.
    pub scale: f64,
    /// Lattice points inside the grid box.
    pub points: f64,
    pub a_pred: f64,
    pub b_pred: f64,
    /// Same prefactor with `|B_r|` in place of `|B_r|²`.
    pub a_pred_linear: f64,
    /// `min ‖f‖²_∞ / ‖f‖²₂` over the test functions.
    pub sup_ratio: f64,
    /// Rigorous ceiling `N_Γ · sup_ratio` on the lower frame bound.
    pub a_ceiling: f64,
    /// Density estimate `1/|δ_λ C|` of the lower bound.
    pub a_density: f64,
    /// `a_ceiling ≥ 0.9 a_pred`; false refutes the envelope.
    pub attainable: bool,
    pub attainable_linear: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExploratoryRow {
    pub spacing: usize,
    /// Dilation `λ = n h`; the cells `δ_λ(C)` lie in `B_{λ s₀}`.
    pub scale: f64,
    pub rs: f64,
    pub points: usize,
    pub bounds: FrameBounds,
    /// `A ω^{-Q/2}`.
    pub normalized_lower: f64,
    /// `(1 + 2 rs √ω / Ĉ_G)²` as printed.
    pub tightness_literal: f64,
    /// `(1 + 2 rs √ω Ĉ_G)²`, consistent with the oscillation lemma.
    pub tightness_consistent: f64,
    pub holds_literal: bool,
    pub holds_consistent: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct HeisenbergReport {
    pub omega: f64,
    pub dim: usize,
    pub c_g: f64,
    pub complement_radii: (f64, f64),
    pub guaranteed: GuaranteedBranch,
    pub exploratory: Vec<ExploratoryRow>,
    /// Tightness decreases as the lattice refines.
    pub monotone: bool,
}

/// Sampling of `E_ω` on H¹ by dilated integer lattices.
///
/// The guaranteed branch dilates the lattice until its cells lie in `B_r`
/// with `r√ω Ĉ_G = 0.9`. Such lattices have far more points than can be
/// summed, so the branch reports a rigorous ceiling on the lower bound
/// (`Σ|f(γ)|² ≤ N_Γ ‖f‖²_∞`) next to the predicted floor. The exploratory
/// branch samples on node lattices of spacing `n h` and measures the frame
/// bounds directly.
pub fn heisenberg_sampling_experiment(
    proj: Arc<SpectralProjector>,
    c_g: f64,
    spacings: &[usize],
    test_functions: usize,
    seed: u64,
) -> Result<HeisenbergReport> {
    let grid = proj.grid.clone();
    let model = grid.model;
    let omega = proj.omega;
    if !(c_g > 0.0) || !(omega > 0.0) {
        return Err(Error::InvalidArgument(format!("need Ĉ_G > 0 and ω > 0, got {c_g} and {omega}")));
    }
    let q = model
        .homogeneous_dimension()
        .ok_or_else(|| Error::UnsupportedModel { op: "heisenberg_sampling_experiment", model: model.id() })?
        as i32;
    let ball1 = unit_ball_measure(&model, 2000)?;
    let ball = |r: f64| r.powi(q) * ball1;
    let (rin, rout) = heisenberg_complement().radii(&model, 21);
    let sw = omega.sqrt();

    let r = 0.9 / (sw * c_g);
    let scale = r / rout;
    let s = scale / (2.0 * model.triangle_constant);
    let count = |a: &Axis, step: f64| ((a.hi / step + 1e-9).floor() - (a.lo / step - 1e-9).ceil() + 1.0).max(0.0);
    let points = count(&grid.axes[0], scale) * count(&grid.axes[1], scale) * count(&grid.axes[2], 0.5 * scale * scale);
    let wq = omega.powf(-0.5 * q as f64);
    let eps = r * sw * c_g;
    let a_pred = wq / ball(r).powi(2) * (1.0 - eps).powi(2);
    let b_pred = wq / ball(s).powi(2) * (1.0 + eps).powi(2);
    let a_pred_linear = wq / ball(r) * (1.0 - eps).powi(2);
    let space: Arc<dyn Space> = proj.clone();
    let mut tests: Vec<GridFunction> = (0..proj.dim()).map(|i| proj.basis_function(i)).collect();
    for k in 0..test_functions {
        tests.push(space.random_element(seed.wrapping_add(k as u64))?);
    }
    let sup_ratio = tests
        .iter()
        .map(|f| f.values.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max) / f.l2().powi(2))
        .fold(f64::INFINITY, f64::min);
    let a_ceiling = points * sup_ratio;
    let guaranteed = GuaranteedBranch {
        r,
        s,
        scale,
        points,
        a_pred,
        b_pred,
        a_pred_linear,
        sup_ratio,
        a_ceiling,
        a_density: 1.0 / (0.5 * scale.powi(q)),
        attainable: a_ceiling >= 0.9 * a_pred,
        attainable_linear: a_ceiling >= 0.9 * a_pred_linear,
    };

    let mut exploratory = Vec::new();
    for &n in spacings {
        let set = node_lattice(&grid, n)?;
        let scale = n as f64 * grid.heisenberg_lattice_step().expect("checked by node_lattice");
        let fs = FrameSystem::new(space.clone(), set)?;
        let bounds = fs.estimate_bounds()?;
        let rs = scale * rout;
        let tightness_literal = (1.0 + 2.0 * rs * sw / c_g).powi(2);
        let tightness_consistent = (1.0 + 2.0 * rs * sw * c_g).powi(2);
        exploratory.push(ExploratoryRow {
            spacing: n,
            scale,
            rs,
            points: fs.points.len(),
            normalized_lower: bounds.lower * wq,
            holds_literal: bounds.tightness <= tightness_literal,
            holds_consistent: bounds.tightness <= tightness_consistent,
            tightness_literal,
            tightness_consistent,
            bounds,
        });
    }
    let mut by_scale: Vec<&ExploratoryRow> = exploratory.iter().collect();
    by_scale.sort_by(|a, b| a.scale.total_cmp(&b.scale));
    let monotone = by_scale.windows(2).all(|w| w[0].bounds.tightness <= w[1].bounds.tightness);
    Ok(HeisenbergReport {
        omega,
        dim: proj.dim(),
        c_g,
        complement_radii: (rin, rout),
        guaranteed,
        exploratory,
        monotone,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CovarianceReport {
    pub omega: f64,
    pub t: f64,
    /// Largest principal angle between `E_ω` on grid `h` and `E_{ω/t²}` on
    /// grid `t h`, matched node by node.
    pub max_angle: f64,
    pub spacing: usize,
    /// `A ω^{-Q/2}` and `B ω^{-Q/2}` on the two grids.
    pub normalized: [(f64, f64); 2],
    /// Largest relative difference of the normalized bounds.
    pub variation: f64,
}

impl CovarianceReport {
    pub fn passed(&self, angle_tol: f64, ratio_tol: f64) -> bool {
        self.max_angle <= angle_tol && self.variation <= ratio_tol
    }
}

/// Dilation covariance `U_t E_ω = E_{t⁻²ω}` on lattice grids: `coarse`
/// carries `E_ω`, `fine` carries `E_{t⁻²ω}` on the grid dilated by `t`.
/// The node lattices of equal spacing correspond under `δ_t`, so the
/// normalized frame bounds should agree.
pub fn dilation_covariance(coarse: Arc<SpectralProjector>, fine: Arc<SpectralProjector>, spacing: usize) -> Result<CovarianceReport> {
    let (g1, g2) = (&coarse.grid, &fine.grid);
    let (h1, h2) = match (g1.heisenberg_lattice_step(), g2.heisenberg_lattice_step()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::InvalidArgument("need lattice-compatible H¹ grids".into())),
    };
    if g1.shape() != g2.shape() {
        return Err(Error::InvalidArgument("grids must have the same node counts".into()));
    }
    let t = h2 / h1;
    let q = g1.model.homogeneous_dimension().expect("H¹") as f64;
    let omega = coarse.omega;
    let expected = omega / (t * t);
    if (fine.omega - expected).abs() > 1e-9 * expected {
        return Err(Error::InvalidArgument(format!("fine bandwidth should be {expected}, got {}", fine.omega)));
    }
    let mut a = coarse.basis_matrix();
    let mut b = fine.basis_matrix();
    orthonormalize(&mut a);
    orthonormalize(&mut b);
    let max_angle = max_principal_angle(&a, &b);
    let mut normalized = [(0.0, 0.0); 2];
    for (k, p) in [coarse, fine].into_iter().enumerate() {
        let set = node_lattice(&p.grid, spacing)?;
        let wq = p.omega.powf(-0.5 * q);
        let fs = FrameSystem::new(p, set)?;
        let bounds = fs.estimate_bounds()?;
        normalized[k] = (bounds.lower * wq, bounds.upper * wq);
    }
    let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs()).max(1e-300);
    let variation = rel(normalized[0].0, normalized[1].0).max(rel(normalized[0].1, normalized[1].1));
    Ok(CovarianceReport { omega, t, max_angle, spacing, normalized, variation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointsets::{tiling_check, verify_dense};

    #[test]
    fn circle_lattice_has_no_wrapped_duplicate() {
        let set = circle_lattice(8.0, 1.0).unwrap();
        assert_eq!(set.len(), 16);
        let set = circle_lattice(8.0, 3.0).unwrap();
        let xs: Vec<f64> = set.points.iter().map(|p| p.coords[0]).collect();
        assert_eq!(xs, vec![-6.0, -3.0, 0.0, 3.0, 6.0]);
    }

    #[test]
    fn shannon_integer_and_oversampled() {
        let r = shannon_experiment(1.0, 0.5, 16.0, 512, 3, 1).unwrap();
        assert!((r.bounds.lower - 1.0).abs() < 1e-10 && (r.bounds.upper - 1.0).abs() < 1e-10);
        assert!(r.max_rel_error.unwrap() < 1e-10);
        let r = shannon_experiment(0.5, 0.5, 16.0, 512, 1, 1).unwrap();
        assert!((r.bounds.lower - 2.0).abs() < 1e-10 && (r.bounds.upper - 2.0).abs() < 1e-10);
        let r = shannon_experiment(2.0, 0.5, 16.0, 512, 1, 1).unwrap();
        assert!(r.bounds.lower < 1e-10 && r.max_rel_error.is_none());
    }

    #[test]
    fn beurling_trend() {
        let rows = beurling_scan(1.0, &[1.4, 3.5], 32.0, 1024).unwrap();
        assert!(rows[0].lower > 1e-2, "{:?}", rows[0]);
        assert!(rows[1].lower < 1e-3, "{:?}", rows[1]);
        // period is a whole number of steps
        for row in &rows {
            assert_eq!(row.points as f64 * row.step, (64.0 / row.step).round() * row.step);
        }
    }

    #[test]
    fn jittered_sets_are_certified() {
        let grid = circle_grid(16.0, 1024).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for jitter in [0.0, 0.1, 0.29] {
            let (set, w, u) = jittered_circle_set(&grid, jitter, &mut rng).unwrap();
            assert!(verify_separated(&set, w, &grid).unwrap().passed);
            assert!(verify_dense(&set, u, &grid).unwrap().passed);
            assert!(w <= 0.5 && u >= 0.5);
        }
    }

    #[test]
    fn line_partitions_pass() {
        let rows = partition_configs_line(0.1, 16.0, 512, 3, 4, 9).unwrap();
        for row in rows {
            assert!(row.passed(1e-6), "{row:?}");
        }
    }

    #[test]
    fn heisenberg_lattice_points_are_lattice_elements() {
        let set = heisenberg_integer_lattice(0.5, &[(-1.0, 1.0), (-1.0, 1.0), (-0.5, 0.5)], 0.0).unwrap();
        let m = set.model;
        let is_elem = |g: &GroupPoint| {
            let c = [g.coords[0] / 0.5, g.coords[1] / 0.5, g.coords[2] / 0.125];
            c.iter().all(|v| (v - v.round()).abs() < 1e-9)
        };
        assert_eq!(set.len(), 5 * 5 * 9);
        for a in set.points.iter().step_by(7) {
            for b in set.points.iter().step_by(11) {
                assert!(is_elem(&m.mul(a, b)) && is_elem(&m.inv(a)));
            }
        }
    }

    #[test]
    fn hyperbolic_lattice_tiles_its_window() {
        let window = LatticeWindow { u_min: -1.0, u_max: 1.0, b0: 2.0, b1: 1.0 };
        let set = hyperbolic_lattice(0.25, 0.25, &window, 10.0).unwrap();
        let comp = Complement::Semidirect { build: Semidirect::Affine, normal_box: vec![(0.0, 0.25)], step: 0.25 };
        let grid = Grid::new(
            GroupModel::affine(),
            vec![Axis::closed(-1.0, 1.0, 41).unwrap(), Axis::closed(-2.0, 2.0, 81).unwrap()],
        )
        .unwrap();
        let report = tiling_check(&set, &comp, &grid, &[(-0.9, 0.9), (-1.0, 1.0)]);
        assert!(report.passed(), "{report:?}");
        for p in &set.points {
            let (a, b) = (p.coords[0], p.coords[1]);
            assert!(a.ln() >= -1.0 - 1e-9 && a.ln() < 1.0 - 1e-9);
            assert!(b.abs() <= 2.0 + a + 1e-9);
        }
    }

    #[test]
    fn separation_radius_of_arithmetic_set() {
        let grid = circle_grid(8.0, 512).unwrap();
        let set = circle_lattice(8.0, 2.0).unwrap();
        assert!((separation_radius(&set, &grid).unwrap() - 1.0).abs() < 1e-6);
        assert!((covering_radius(&set, &grid) - 1.0).abs() < 1e-9);
    }

    fn small_projector(h: f64, omega: f64) -> Arc<SpectralProjector> {
        Arc::new(sublaplacian_spectrum(Arc::new(Grid::heisenberg_lattice(h, 6, 6).unwrap()), omega).unwrap())
    }

    #[test]
    fn node_lattice_covariance_and_tightness() {
        let p1 = small_projector(0.8, 2.0);
        assert!(p1.dim() >= 2);
        assert_eq!(node_lattice(&p1.grid, 1).unwrap().len(), p1.grid.len());
        let p2 = small_projector(0.4, 8.0);
        let c = dilation_covariance(p1.clone(), p2, 2).unwrap();
        assert!(c.passed(1e-6, 1e-9), "{c:?}");
        let r = heisenberg_sampling_experiment(p1, 40.0, &[1, 2], 2, 1).unwrap();
        assert!(r.monotone);
        assert!((r.exploratory[0].bounds.tightness - 1.0).abs() < 1e-9);
        // the guaranteed lattice is denser than the grid
        assert!(r.guaranteed.scale < 0.8 && r.guaranteed.a_ceiling > 0.0);
    }
}
