//! Continuous wavelet transform on the affine group `{(a, b) : a > 0}`
//! acting on `L²(ℝ)` by `π(a,b)φ(s) = a^{-1/2} φ((s − b)/a)`, and the
//! mollified analyzing vector `η = V_ψ* h`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use super::{KernelKind, ReproducingKernel, Space};
use crate::analysis::oscillation_with;
use crate::error::{Error, Result};
use crate::grid::{Axis, Grid, GridFunction};
use crate::group::{GroupModel, GroupPoint, ModelKind};

/// Fraction of `‖φ‖²` the affine box must capture.
pub const ENERGY_LEAK_LIMIT: f64 = 0.05;

#[derive(Clone, Debug, Serialize)]
pub enum MotherWavelet {
    /// `(1 − s²) e^{−s²/2}`.
    MexicanHat,
    /// Samples `(s, ψ(s))` with increasing `s`, linear in between and zero outside.
    Table { xs: Vec<f64>, ys: Vec<f64> },
}

impl MotherWavelet {
    pub fn table(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() < 3 || xs.len() != ys.len() || xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("wavelet table needs ≥ 3 increasing abscissae".into()));
        }
        Ok(MotherWavelet::Table { xs, ys })
    }

    /// Reads `s,psi` rows (an optional header line is skipped).
    pub fn read_csv<R: std::io::BufRead>(r: R) -> Result<Self> {
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split(',').map(|t| t.trim().parse::<f64>());
            match (it.next(), it.next()) {
                (Some(Ok(x)), Some(Ok(y))) => {
                    xs.push(x);
                    ys.push(y);
                }
                _ if i == 0 => continue,
                _ => return Err(Error::Parse(format!("wavelet table line {}: `{line}`", i + 1))),
            }
        }
        Self::table(xs, ys)
    }

    pub fn eval(&self, s: f64) -> f64 {
        match self {
            MotherWavelet::MexicanHat => (1.0 - s * s) * (-0.5 * s * s).exp(),
            MotherWavelet::Table { xs, ys } => {
                if s < xs[0] || s > xs[xs.len() - 1] {
                    return 0.0;
                }
                let j = xs.partition_point(|&x| x <= s).clamp(1, xs.len() - 1);
                let t = (s - xs[j - 1]) / (xs[j] - xs[j - 1]);
                ys[j - 1] * (1.0 - t) + ys[j] * t
            }
        }
    }
}

/// Calderón integrals `C± = ∫₀^∞ |ψ̂(±ξ)|² / ξ dξ` and `∫ψ`, by FFT on a
/// periodic line grid (`ψ̂(ξ) = ∫ ψ(s) e^{−2πisξ} ds`).
pub fn calderon(psi: &dyn Fn(f64) -> f64, line: &Grid) -> (f64, f64, f64) {
    let axis = line.axes[0];
    let (n, dx, len) = (axis.n, axis.h(), axis.length());
    let mut buf: Vec<Complex64> = (0..n).map(|j| Complex64::new(psi(axis.node(j)), 0.0)).collect();
    let mean = buf.iter().map(|v| v.re).sum::<f64>() * dx;
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let (mut cp, mut cm) = (0.0, 0.0);
    for k in 1..n / 2 {
        let xi = k as f64 / len;
        cp += buf[k].norm_sqr() * dx * dx / xi / len;
        cm += buf[n - k].norm_sqr() * dx * dx / xi / len;
    }
    (cp, cm, mean)
}

fn check_line(line: &Grid) -> Result<()> {
    if line.model.kind != ModelKind::Euclidean(1) || !line.axes[0].periodic {
        return Err(Error::InvalidArgument("wavelet signals live on a periodic line grid".into()));
    }
    Ok(())
}

fn check_affine(line: &Grid, affine: &Grid) -> Result<()> {
    if affine.model.kind != ModelKind::Affine {
        return Err(Error::ModelMismatch { expected: "affine".into(), found: affine.model.id() });
    }
    let (la, ba) = (line.axes[0], affine.axes[1]);
    let ratio = ba.h() / la.h();
    let offset = (ba.lo - la.lo) / la.h();
    if (ratio - ratio.round()).abs() > 1e-9 || ratio.round() < 1.0 || (offset - offset.round()).abs() > 1e-9 {
        return Err(Error::InvalidArgument("affine b-axis must sit on line nodes".into()));
    }
    if ba.lo < la.lo || ba.hi >= la.hi {
        return Err(Error::InvalidArgument("affine b-axis exceeds the line period".into()));
    }
    Ok(())
}

/// Correlations `b ↦ ⟨φ, π(a, b) g⟩` for one scale, on the line grid
/// refined `up` times. `phi_hat` is the spectrum of `φ` on the coarse grid;
/// the refined samples are its trigonometric interpolant.
fn correlate(line: &Grid, phi_hat: &[Complex64], g: &(dyn Fn(f64) -> Complex64 + Sync), a: f64, up: usize) -> Vec<Complex64> {
    let axis = line.axes[0];
    let (n, len) = (axis.n, axis.length());
    let nf = n * up;
    let dx = len / nf as f64;
    let amp = a.powf(-0.5);
    let mut ga: Vec<Complex64> = (0..nf)
        .map(|d| {
            let mut s = d as f64 * dx;
            if s >= 0.5 * len {
                s -= len;
            }
            g(s / a) * amp
        })
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(nf).process(&mut ga);
    let mut prod = vec![Complex64::new(0.0, 0.0); nf];
    for (k, p) in phi_hat.iter().enumerate() {
        // zero-padding; the Nyquist bin of an even grid is split in two
        if up > 1 && n % 2 == 0 && k == n / 2 {
            prod[k] += 0.5 * p * ga[k].conj();
            prod[nf - k] += 0.5 * p * ga[nf - k].conj();
            continue;
        }
        let kf = if k <= n / 2 { k } else { nf - (n - k) };
        prod[kf] = p * ga[kf].conj();
    }
    planner.plan_fft_inverse(nf).process(&mut prod);
    let scale = up as f64 * dx / nf as f64;
    prod.iter_mut().for_each(|v| *v *= scale);
    // prod[m] pairs φ with g centred at fine node m measured from lo
    prod
}

/// Line refinement used for off-node evaluation; resolves atoms down to
/// a few coarse grid spacings.
const UPSAMPLE: usize = 8;

fn forward(phi: &GridFunction) -> Vec<Complex64> {
    let mut buf = phi.values.clone();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

/// 4-point Lagrange interpolation of periodic samples at fractional index `t`.
fn periodic_cubic(v: &[Complex64], t: f64) -> Complex64 {
    let n = v.len() as i64;
    let j = t.floor();
    let f = t - j;
    let j = j as i64;
    let at = |k: i64| v[k.rem_euclid(n) as usize];
    let w = [
        -f * (f - 1.0) * (f - 2.0) / 6.0,
        (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0,
        -(f + 1.0) * f * (f - 2.0) / 2.0,
        (f + 1.0) * f * (f - 1.0) / 6.0,
    ];
    at(j - 1) * w[0] + at(j) * w[1] + at(j + 1) * w[2] + at(j + 2) * w[3]
}

/// Mother wavelet normalized to unit Calderón constant, with the line and
/// affine grids it is discretized on.
#[derive(Clone, Debug)]
pub struct WaveletSystem {
    pub line: Arc<Grid>,
    pub affine: Arc<Grid>,
    pub mother: MotherWavelet,
    /// `C₊` and `C₋` of the raw mother wavelet.
    pub admissibility: (f64, f64),
    /// `∫ψ` of the raw mother wavelet.
    pub mean: f64,
    scale: f64,
}

impl WaveletSystem {
    pub fn new(line: Arc<Grid>, affine: Arc<Grid>, mother: MotherWavelet) -> Result<Self> {
        check_line(&line)?;
        check_affine(&line, &affine)?;
        let m = mother.clone();
        let (cp, cm, mean) = calderon(&move |s| m.eval(s), &line);
        let l1: f64 = (0..line.len()).map(|j| mother.eval(line.axes[0].node(j)).abs()).sum::<f64>() * line.axes[0].h();
        if mean.abs() > 1e-6 * l1.max(1e-300) {
            return Err(Error::Precondition(format!("wavelet has nonzero mean {mean:e}")));
        }
        if !(cp > 0.0 && cm > 0.0) || !cp.is_finite() || !cm.is_finite() {
            return Err(Error::Precondition(format!("admissibility constants ({cp}, {cm}) not finite and positive")));
        }
        if (cp - cm).abs() > 1e-6 * cp {
            return Err(Error::Precondition(format!("C₊ = {cp} and C₋ = {cm} differ; the transform is not isometric")));
        }
        Ok(Self { line, affine, mother, admissibility: (cp, cm), mean, scale: 1.0 / cp.sqrt() })
    }

    /// Mexican hat on the periodic line `[−64, 64)` with `dx = 1/32`, and
    /// the affine box `ln a ∈ [−2.5, 2.5]`, `b ∈ [−16, 16]`.
    pub fn mexican_hat_default() -> Result<Self> {
        let line = Arc::new(Grid::new(GroupModel::real_line(), vec![Axis::periodic(-64.0, 64.0, 4096)?])?);
        let affine = Arc::new(Grid::new(
            GroupModel::affine(),
            vec![Axis::closed(-2.5, 2.5, 51)?, Axis::closed(-16.0, 16.0, 1025)?],
        )?);
        Self::new(line, affine, MotherWavelet::MexicanHat)
    }

    /// Normalized `ψ`.
    pub fn psi(&self, s: f64) -> f64 {
        self.scale * self.mother.eval(s)
    }

    /// `π(x)ψ` on the line grid.
    pub fn atom(&self, x: &GroupPoint) -> GridFunction {
        let (a, b) = (x.coords[0], x.coords[1]);
        GridFunction::from_real_fn(self.line.clone(), |p| a.powf(-0.5) * self.psi((p.coords[0] - b) / a))
    }

    /// `V_g φ(x) = ⟨φ, π(x) g⟩` at every affine node.
    pub fn transform_with(&self, phi: &GridFunction, g: &(dyn Fn(f64) -> Complex64 + Sync)) -> GridFunction {
        let phi_hat = forward(phi);
        let (ua, ba) = (self.affine.axes[0], self.affine.axes[1]);
        let la = self.line.axes[0];
        let stride = (ba.h() / la.h()).round() as usize;
        let first = ((ba.lo - la.lo) / la.h()).round() as usize;
        let rows: Vec<Vec<Complex64>> = (0..ua.n)
            .into_par_iter()
            .map(|i| {
                let corr = correlate(&self.line, &phi_hat, g, ua.node(i).exp(), 1);
                (0..ba.n).map(|j| corr[first + j * stride]).collect()
            })
            .collect();
        let mut values = vec![Complex64::new(0.0, 0.0); self.affine.len()];
        for (k, v) in values.iter_mut().enumerate() {
            let idx = self.affine.multi(k);
            *v = rows[idx[0]][idx[1]];
        }
        GridFunction { grid: self.affine.clone(), values }
    }

    /// `V_ψ φ`, rejecting signals whose transform leaks out of the box.
    pub fn transform(&self, phi: &GridFunction) -> Result<GridFunction> {
        let v = self.transform_with(phi, &|s| Complex64::new(self.psi(s), 0.0));
        let (e_in, e_phi) = (v.l2().powi(2), phi.l2().powi(2));
        if e_in < (1.0 - ENERGY_LEAK_LIMIT) * e_phi {
            return Err(Error::UnderResolved(format!(
                "affine box captures {:.1}% of the signal energy",
                100.0 * e_in / e_phi
            )));
        }
        Ok(v)
    }

    /// `⟨φ, π(x) g⟩` at arbitrary points; one FFT per distinct scale on the
    /// refined line and cubic interpolation in `b`.
    pub fn transform_at(
        &self,
        phi: &GridFunction,
        g: &(dyn Fn(f64) -> Complex64 + Sync),
        points: &[GroupPoint],
    ) -> Vec<Complex64> {
        let phi_hat = forward(phi);
        let la = self.line.axes[0];
        let mut scales: Vec<f64> = points.iter().map(|p| p.coords[0]).collect();
        scales.sort_by(|a, b| a.total_cmp(b));
        scales.dedup();
        let rows: Vec<Vec<Complex64>> =
            scales.par_iter().map(|&a| correlate(&self.line, &phi_hat, g, a, UPSAMPLE)).collect();
        points
            .par_iter()
            .map(|p| {
                let i = scales.binary_search_by(|a| a.total_cmp(&p.coords[0])).expect("scale present");
                periodic_cubic(&rows[i], (p.coords[1] - la.lo) * UPSAMPLE as f64 / la.h())
            })
            .collect()
    }

    /// `V_ψ* F = ∫ F(y) π(y)ψ dμ(y)` as an explicit atom sum over the nodes
    /// where `|F|` exceeds `rel_cut · max|F|`.
    pub fn adjoint(&self, f: &GridFunction, rel_cut: f64) -> AtomSum {
        let max = f.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let atoms = (0..self.affine.len())
            .filter(|&k| f.values[k].norm() > rel_cut * max)
            .map(|k| {
                let y = self.affine.point(k);
                (y.coords[0], y.coords[1], f.values[k] * self.affine.weight(k))
            })
            .collect();
        AtomSum { atoms, scale: self.scale, mother: self.mother.clone() }
    }

    /// Splits `φ` into its positive- and negative-frequency parts.
    pub fn hardy_split(&self, phi: &GridFunction) -> (GridFunction, GridFunction) {
        let n = phi.len();
        let spec = forward(phi);
        let mut planner = FftPlanner::new();
        let inv = planner.plan_fft_inverse(n);
        let part = |sign: i32| {
            let mut s: Vec<Complex64> = spec
                .iter()
                .enumerate()
                .map(|(k, v)| {
                    let kk = if k <= n / 2 { k as i64 } else { k as i64 - n as i64 };
                    let keep = match kk.signum() as i32 {
                        0 => 0.5,
                        sg if sg == sign => 1.0,
                        _ => 0.0,
                    };
                    v * (keep / n as f64)
                })
                .collect();
            inv.process(&mut s);
            GridFunction { grid: phi.grid.clone(), values: s }
        };
        (part(1), part(-1))
    }
}

/// `Σ c_k π(a_k, b_k)ψ`, evaluable anywhere on the line.
#[derive(Clone, Debug)]
pub struct AtomSum {
    pub atoms: Vec<(f64, f64, Complex64)>,
    scale: f64,
    mother: MotherWavelet,
}

impl AtomSum {
    pub fn eval(&self, t: f64) -> Complex64 {
        self.atoms
            .iter()
            .map(|&(a, b, c)| c * (a.powf(-0.5) * self.scale * self.mother.eval((t - b) / a)))
            .sum()
    }

    pub fn on_grid(&self, line: &Arc<Grid>) -> GridFunction {
        GridFunction::from_fn(line.clone(), |p| self.eval(p.coords[0]))
    }

    /// Tabulated copy on a fine mesh covering the atoms' effective support,
    /// linearly interpolated; zero outside.
    pub fn tabulate(&self, step: f64) -> Tabulated {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &(a, b, _) in &self.atoms {
            lo = lo.min(b - 12.0 * a);
            hi = hi.max(b + 12.0 * a);
        }
        let n = ((hi - lo) / step).ceil() as usize + 1;
        let values = (0..n).into_par_iter().map(|j| self.eval(lo + j as f64 * step)).collect();
        Tabulated { lo, step, values }
    }
}

#[derive(Clone, Debug)]
pub struct Tabulated {
    pub lo: f64,
    pub step: f64,
    pub values: Vec<Complex64>,
}

impl Tabulated {
    pub fn eval(&self, t: f64) -> Complex64 {
        let x = (t - self.lo) / self.step;
        if x < 0.0 || x >= (self.values.len() - 1) as f64 {
            return Complex64::new(0.0, 0.0);
        }
        let j = x.floor() as usize;
        let f = x - j as f64;
        self.values[j] * (1.0 - f) + self.values[j + 1] * f
    }
}

/// `cos²` taper bump on the affine chart: `h(a, b) = cos²(πu/2ρ_u) cos²(πb/2ρ_b)`
/// for `|u| < ρ_u`, `|b| < ρ_b`, with `u = ln a`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Mollifier {
    pub radius_u: f64,
    pub radius_b: f64,
}

impl Default for Mollifier {
    fn default() -> Self {
        Self { radius_u: 1.0, radius_b: 1.0 }
    }
}

impl Mollifier {
    pub fn eval(&self, g: &GroupPoint) -> f64 {
        let (u, b) = (g.coords[0].ln(), g.coords[1]);
        if u.abs() >= self.radius_u || b.abs() >= self.radius_b {
            return 0.0;
        }
        let cu = (0.5 * PI * u / self.radius_u).cos();
        let cb = (0.5 * PI * b / self.radius_b).cos();
        cu * cu * cb * cb
    }

    /// `h*(x) = conj(h(x⁻¹))`.
    pub fn star(&self, g: &GroupPoint) -> f64 {
        self.eval(&GroupModel::affine().inv(g))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanRow {
    pub radius: f64,
    pub osc_l1: f64,
    /// `c_{η,ψ} ‖osc_U h*‖₁`.
    pub product: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct HypothesisScan {
    pub rows: Vec<ScanRow>,
    /// Largest scanned radius whose product is below 1.
    pub passing_radius: Option<f64>,
}

/// Wavelet system with the mollified vector `η = V_ψ* h` and its Schur
/// factor `c_{η,ψ} = max ‖φ‖ / ‖V_η φ‖` over probes from both Hardy
/// components.
#[derive(Clone, Debug)]
pub struct MollifiedSystem {
    pub base: Arc<WaveletSystem>,
    pub h: Mollifier,
    pub eta: AtomSum,
    pub eta_table: Tabulated,
    pub c_factor: f64,
    /// `‖V_η φ‖ / ‖φ‖` for each probe.
    pub probe_ratios: Vec<f64>,
}

/// Probe and test atoms sit at `ln a ∈ [−½, ½]`, `b ∈ [−1, 1]`.
pub fn central_points(n_u: usize, n_b: usize) -> Vec<GroupPoint> {
    let lin = |n: usize, half: f64, i: usize| if n == 1 { 0.0 } else { -half + 2.0 * half * i as f64 / (n - 1) as f64 };
    let mut out = Vec::new();
    for i in 0..n_u {
        for j in 0..n_b {
            out.push(GroupPoint::new(&[lin(n_u, 0.5, i).exp(), lin(n_b, 1.0, j)]));
        }
    }
    out
}

impl MollifiedSystem {
    pub fn new(base: Arc<WaveletSystem>, h: Mollifier) -> Result<Self> {
        if !(h.radius_u > 0.0 && h.radius_b > 0.0) {
            return Err(Error::InvalidArgument("mollifier radii must be positive".into()));
        }
        let hg = GridFunction::from_real_fn(base.affine.clone(), |p| h.eval(p));
        let eta = base.adjoint(&hg, 0.0);
        if eta.atoms.is_empty() {
            return Err(Error::GridTooCoarse("mollifier support contains no affine node".into()));
        }
        let eta_table = eta.tabulate(base.line.axes[0].h() / 32.0);
        let mut probe_ratios = Vec::new();
        for x in central_points(3, 1) {
            let (p, m) = base.hardy_split(&base.atom(&x));
            for phi in [p, m] {
                let v = base.transform_with(&phi, &|s| eta_table.eval(s));
                probe_ratios.push(v.l2() / phi.l2());
            }
        }
        let best = probe_ratios.iter().cloned().fold(0.0, f64::max);
        if best < 1e-10 {
            return Err(Error::EmptySpace("mollifier projects to zero".into()));
        }
        let c_factor = probe_ratios.iter().map(|r| 1.0 / r).fold(0.0, f64::max);
        Ok(Self { base, h, eta, eta_table, c_factor, probe_ratios })
    }

    pub fn eta(&self, s: f64) -> Complex64 {
        self.eta_table.eval(s)
    }

    /// Affine grid covering `supp h* · B_r` for `r ≤ r_max`.
    pub fn oscillation_grid(&self, r_max: f64, step: f64) -> Result<Arc<Grid>> {
        let (ru, rb) = (self.h.radius_u, self.h.radius_b);
        let hu = ru + r_max + 2.0 * step;
        let hb = ru.exp() * (rb + r_max) * r_max.exp() + 2.0 * step;
        let nu = (2.0 * hu / step).ceil() as usize + 1;
        let nb = (2.0 * hb / step).ceil() as usize + 1;
        Ok(Arc::new(Grid::new(
            GroupModel::affine(),
            vec![Axis::closed(-hu, hu, nu)?, Axis::closed(-hb, hb, nb)?],
        )?))
    }

    /// `‖osc_{B_r} h*‖₁` in left Haar measure.
    pub fn osc_l1(&self, grid: &Arc<Grid>, r: f64) -> Result<f64> {
        let osc = oscillation_with(grid, r, |p| Complex64::new(self.h.star(p), 0.0))?;
        Ok(osc.values.iter().enumerate().map(|(k, v)| v.re * grid.weight(k)).sum())
    }

    /// Scans the radii in decreasing order for `c_{η,ψ} ‖osc_U h*‖₁ < 1`.
    pub fn hypothesis_scan(&self, radii: &[f64], step: f64) -> Result<HypothesisScan> {
        let mut radii = radii.to_vec();
        radii.sort_by(|a, b| b.total_cmp(a));
        let r_max = *radii.first().ok_or_else(|| Error::InvalidArgument("no radii to scan".into()))?;
        let grid = self.oscillation_grid(r_max, step)?;
        let mut rows = Vec::new();
        for &r in &radii {
            let l1 = self.osc_l1(&grid, r)?;
            rows.push(ScanRow { radius: r, osc_l1: l1, product: self.c_factor * l1 });
        }
        let passing_radius = rows.iter().find(|row| row.product < 1.0).map(|row| row.radius);
        Ok(HypothesisScan { rows, passing_radius })
    }

    /// `M[γ][i] = ⟨φᵢ, π(γ)η⟩`, one row per point.
    pub fn frame_matrix(&self, probes: &[GridFunction], points: &[GroupPoint]) -> Vec<Vec<Complex64>> {
        let cols: Vec<Vec<Complex64>> =
            probes.iter().map(|phi| self.base.transform_at(phi, &|s| self.eta(s), points)).collect();
        (0..points.len()).map(|g| cols.iter().map(|c| c[g]).collect()).collect()
    }

    /// `M*M` for `M = frame_matrix(probes, points)`, accumulated one scale
    /// at a time so `M` is never stored.
    pub fn frame_gram(&self, probes: &[GridFunction], points: &[GroupPoint]) -> DMatrix<Complex64> {
        let d = probes.len();
        let hats: Vec<Vec<Complex64>> = probes.iter().map(forward).collect();
        let mut sorted: Vec<(f64, f64)> = points.iter().map(|p| (p.coords[0], p.coords[1])).collect();
        sorted.sort_by(|x, y| x.0.total_cmp(&y.0));
        let groups: Vec<&[(f64, f64)]> = sorted.chunk_by(|x, y| x.0 == y.0).collect();
        let la = self.base.line.axes[0];
        groups
            .par_iter()
            .map(|group| {
                let a = group[0].0;
                let rows: Vec<Vec<Complex64>> = hats
                    .iter()
                    .map(|h| correlate(&self.base.line, h, &|s| self.eta(s), a, UPSAMPLE))
                    .collect();
                let mut s = DMatrix::<Complex64>::zeros(d, d);
                let mut v = vec![Complex64::new(0.0, 0.0); d];
                for &(_, b) in group.iter() {
                    let t = (b - la.lo) * UPSAMPLE as f64 / la.h();
                    for (vi, r) in v.iter_mut().zip(&rows) {
                        *vi = periodic_cubic(r, t);
                    }
                    for i in 0..d {
                        for j in 0..d {
                            s[(i, j)] += v[i].conj() * v[j];
                        }
                    }
                }
                s
            })
            .reduce(|| DMatrix::zeros(d, d), |x, y| x + y)
    }

    /// `V_η φ(x)` via `⟨V_ψ φ, L_x h⟩` quadrature on the affine grid.
    pub fn convolution_route(&self, vpsi: &GridFunction, x: &GroupPoint) -> Complex64 {
        let grid = &self.base.affine;
        let model = grid.model;
        let (a, b) = (x.coords[0], x.coords[1]);
        let u = a.ln();
        let bounds = [
            (u - self.h.radius_u, u + self.h.radius_u),
            (b - a * self.h.radius_b, b + a * self.h.radius_b),
        ];
        let xi = model.inv(x);
        grid.nodes_in_chart_box(&bounds)
            .into_iter()
            .map(|k| {
                let y = grid.point(k);
                vpsi.values[k] * (self.h.eval(&model.mul(&xi, &y)) * grid.weight(k))
            })
            .sum()
    }
}

/// Finite-dimensional piece `V_ψ(span{π(x_j)ψ})` of the wavelet space,
/// with an orthonormal basis in `L²(affine Haar)`.
#[derive(Clone, Debug)]
pub struct WaveletSpace {
    grid: Arc<Grid>,
    basis: Vec<GridFunction>,
}

impl WaveletSpace {
    pub fn new(sys: &WaveletSystem, centers: &[GroupPoint]) -> Result<Self> {
        let mut basis: Vec<GridFunction> = Vec::new();
        for x in centers {
            let mut v = sys.transform(&sys.atom(x))?;
            for _ in 0..2 {
                for e in &basis {
                    let c = v.inner(e)?;
                    v = v.sub(&e.scale(c))?;
                }
            }
            let n = v.l2();
            if n > 1e-8 {
                basis.push(v.scale(Complex64::new(1.0 / n, 0.0)));
            }
        }
        Ok(Self { grid: sys.affine.clone(), basis })
    }
}

impl Space for WaveletSpace {
    fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    fn dim(&self) -> usize {
        self.basis.len()
    }

    fn eval_basis(&self, p: &GroupPoint) -> Vec<Complex64> {
        self.basis.iter().map(|e| e.interpolate(p)).collect()
    }

    fn basis_values(&self, i: usize) -> Vec<Complex64> {
        self.basis[i].values.clone()
    }
}

pub fn wavelet_kernel(sys: &WaveletSystem, centers: &[GroupPoint]) -> Result<ReproducingKernel> {
    ReproducingKernel::new(KernelKind::Wavelet, Arc::new(WaveletSpace::new(sys, centers)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::OnceLock;

    fn system() -> Arc<WaveletSystem> {
        static SYS: OnceLock<Arc<WaveletSystem>> = OnceLock::new();
        SYS.get_or_init(|| Arc::new(WaveletSystem::mexican_hat_default().unwrap())).clone()
    }

    fn mollified() -> &'static MollifiedSystem {
        static M: OnceLock<MollifiedSystem> = OnceLock::new();
        M.get_or_init(|| MollifiedSystem::new(system(), Mollifier::default()).unwrap())
    }

    #[test]
    fn mexican_hat_calderon_constant_is_pi() {
        let sys = system();
        assert!((sys.admissibility.0 - PI).abs() < 1e-6, "{:?}", sys.admissibility);
        assert!((sys.admissibility.1 - PI).abs() < 1e-6);
        assert!(sys.mean.abs() < 1e-10);
    }

    #[test]
    fn shifted_wavelet_is_rejected() {
        let line = system().line.clone();
        let affine = system().affine.clone();
        let bad = MotherWavelet::table(vec![-1.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]).unwrap();
        assert!(matches!(WaveletSystem::new(line, affine, bad), Err(Error::Precondition(_))));
    }

    #[test]
    fn transform_of_psi_at_identity_is_its_norm() {
        let sys = system();
        let psi = sys.atom(&GroupPoint::new(&[1.0, 0.0]));
        let v = sys.transform(&psi).unwrap();
        let e = sys.affine.node_index(&GroupPoint::new(&[1.0, 0.0])).unwrap();
        assert!((v.values[e].re - psi.l2().powi(2)).abs() < 1e-12);
    }

    #[test]
    fn transform_is_isometric_on_concentrated_signals() {
        use rand::{Rng, SeedableRng};
        let sys = system();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..3 {
            // odd Gaussian bumps: zero mean, scales well inside the box
            let bumps: Vec<(f64, f64, f64)> = (0..4)
                .map(|_| (rng.random_range(0.6..1.6), rng.random_range(-2.0..2.0), rng.random_range(-1.0..1.0)))
                .collect();
            let phi = GridFunction::from_real_fn(sys.line.clone(), |p| {
                let s = p.coords[0];
                bumps.iter().map(|&(w, c, amp)| amp * (s - c) / w * (-((s - c) / w).powi(2)).exp()).sum()
            });
            let ratio = sys.transform(&phi).unwrap().l2() / phi.l2();
            assert!((ratio - 1.0).abs() < 0.01, "ratio {ratio}");
        }
    }

    #[test]
    fn energy_leak_is_reported() {
        let sys = system();
        // a scale far below the box
        let phi = sys.atom(&GroupPoint::new(&[(-5.0f64).exp(), 0.0]));
        assert!(matches!(sys.transform(&phi), Err(Error::UnderResolved(_))));
    }

    #[test]
    fn transform_intertwines_translations() {
        let sys = system();
        let model = GroupModel::affine();
        let x0 = GroupPoint::new(&[1.2, 0.3]);
        let z = GroupPoint::new(&[0.2f64.exp(), 0.75]);
        let v = sys.transform(&sys.atom(&x0)).unwrap();
        let vz = sys.transform(&sys.atom(&model.mul(&z, &x0))).unwrap();
        let zi = model.inv(&z);
        let mut err = 0.0f64;
        for k in sys.affine.nodes_in_chart_box(&[(-1.5, 1.5), (-6.0, 6.0)]) {
            let x = sys.affine.point(k);
            err = err.max((vz.values[k] - v.interpolate(&model.mul(&zi, &x))).norm());
        }
        let peak = v.values.iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert!(err < 2e-2 * peak, "err {err} peak {peak}");
    }

    #[test]
    fn transform_at_matches_grid_values() {
        let sys = system();
        let phi = sys.atom(&GroupPoint::new(&[0.9, -0.4]));
        let g = |s: f64| Complex64::new(sys.psi(s), 0.0);
        let pts = vec![GroupPoint::new(&[1.0, 0.37]), GroupPoint::new(&[0.3, -1.01]), GroupPoint::new(&[2.5, 3.3])];
        let at = sys.transform_at(&phi, &g, &pts);
        for (p, v) in pts.iter().zip(&at) {
            // oracle: direct quadrature on the line
            let (a, b) = (p.coords[0], p.coords[1]);
            let dx = sys.line.axes[0].h();
            let direct: f64 = (0..sys.line.len())
                .map(|j| {
                    let s = sys.line.axes[0].node(j);
                    phi.values[j].re * a.powf(-0.5) * sys.psi((s - b) / a) * dx
                })
                .sum();
            assert!((v.re - direct).abs() < 1e-6, "{} vs {direct}", v.re);
        }
    }

    #[test]
    fn adjoint_of_reproducing_vector_returns_psi() {
        let sys = system();
        let psi = sys.atom(&GroupPoint::new(&[1.0, 0.0]));
        let v = sys.transform(&psi).unwrap();
        let back = sys.adjoint(&v, 1e-6).on_grid(&sys.line);
        assert!(back.sub(&psi).unwrap().l2() / psi.l2() < 2e-2);
    }

    #[test]
    fn mollified_vector_routes_agree() {
        let m = mollified();
        let sys = &m.base;
        let phi = sys.atom(&GroupPoint::new(&[1.1, 0.2]));
        let vpsi = sys.transform(&phi).unwrap();
        let pts = [GroupPoint::new(&[1.0, 0.0]), GroupPoint::new(&[0.7, 0.4]), GroupPoint::new(&[1.6, -0.5])];
        let direct = sys.transform_at(&phi, &|s| m.eta(s), &pts);
        for (x, d) in pts.iter().zip(&direct) {
            let c = m.convolution_route(&vpsi, x);
            assert!((c - d).norm() < 1e-2 * d.norm().max(1e-3), "{c} vs {d}");
        }
    }

    #[test]
    fn schur_factor_is_symmetric_across_hardy_components() {
        let m = mollified();
        assert!(m.c_factor.is_finite() && m.c_factor > 0.0);
        for pair in m.probe_ratios.chunks(2) {
            assert!((pair[0] - pair[1]).abs() < 1e-3 * pair[0], "{pair:?}");
        }
    }

    #[test]
    fn oscillation_of_mollifier_shrinks_with_radius() {
        let m = mollified();
        let scan = m.hypothesis_scan(&[0.2, 0.1, 0.05], 0.02).unwrap();
        let l1: Vec<f64> = scan.rows.iter().map(|r| r.osc_l1).collect();
        assert!(l1[0] > l1[1] && l1[1] > l1[2] && l1[2] > 0.0, "{l1:?}");
    }

    #[test]
    fn wavelet_kernel_projection() {
        let sys = system();
        let k = wavelet_kernel(&sys, &central_points(2, 2)).unwrap();
        assert_eq!(k.space.dim(), 4);
        let (idem, adj) = k.projection_defects(0).unwrap();
        assert!(idem < 1e-8 && adj < 1e-8);
    }
}
