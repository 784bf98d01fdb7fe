//! Quadrature grids over a chart box and complex grid functions.

use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::group::{GroupModel, GroupPoint, ModelKind};

/// One chart axis. Closed axes carry nodes at both ends and trapezoid
/// weights; periodic axes wrap around and use `n` uniform nodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub periodic: bool,
}

impl Axis {
    pub fn closed(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 || !(hi > lo) {
            return Err(Error::InvalidArgument(format!(
                "closed axis needs n ≥ 2 and lo < hi, got [{lo}, {hi}] n={n}"
            )));
        }
        Ok(Self { lo, hi, n, periodic: false })
    }

    pub fn periodic(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 1 || !(hi > lo) {
            return Err(Error::InvalidArgument(format!(
                "periodic axis needs n ≥ 1 and lo < hi, got [{lo}, {hi}] n={n}"
            )));
        }
        Ok(Self { lo, hi, n, periodic: true })
    }

    /// Symmetric closed axis with nodes `j·h`, `j = -m..=m`.
    pub fn centered(h: f64, m: usize) -> Result<Self> {
        Self::closed(-(m as f64) * h, m as f64 * h, 2 * m + 1)
    }

    #[inline]
    pub fn h(&self) -> f64 {
        if self.periodic {
            (self.hi - self.lo) / self.n as f64
        } else {
            (self.hi - self.lo) / (self.n - 1) as f64
        }
    }

    #[inline]
    pub fn node(&self, j: usize) -> f64 {
        self.lo + j as f64 * self.h()
    }

    #[inline]
    pub fn weight(&self, j: usize) -> f64 {
        let h = self.h();
        if !self.periodic && (j == 0 || j + 1 == self.n) {
            0.5 * h
        } else {
            h
        }
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    /// Lower node index and fractional offset for linear interpolation;
    /// `None` outside a closed axis.
    #[inline]
    fn locate(&self, x: f64) -> Option<(usize, usize, f64)> {
        let h = self.h();
        if self.periodic {
            let len = self.length();
            let u = (x - self.lo).rem_euclid(len) / h;
            let j = (u.floor() as usize).min(self.n - 1);
            let frac = u - j as f64;
            Some((j, (j + 1) % self.n, frac))
        } else {
            let tol = 1e-12 * h;
            if x < self.lo - tol || x > self.hi + tol {
                return None;
            }
            let u = ((x - self.lo) / h).clamp(0.0, (self.n - 1) as f64);
            let j = (u.floor() as usize).min(self.n - 2);
            Some((j, j + 1, u - j as f64))
        }
    }

    /// Index of the node nearest to `x`, if inside.
    pub fn nearest(&self, x: f64) -> Option<usize> {
        self.locate(x)
            .map(|(j0, j1, f)| if f < 0.5 { j0 } else { j1 })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub model: GroupModel,
    pub axes: Vec<Axis>,
}

impl Grid {
    pub fn new(model: GroupModel, axes: Vec<Axis>) -> Result<Self> {
        if axes.len() != model.dim() {
            return Err(Error::InvalidArgument(format!(
                "{} model needs {} axes, got {}",
                model,
                model.dim(),
                axes.len()
            )));
        }
        Ok(Self { model, axes })
    }

    /// Lattice-compatible H¹ grid: nodes `(i h, j h, k h²/2)` with
    /// `|i|, |j| ≤ m` and `|k| ≤ mt`. Right translation by `exp(±hX)` and
    /// `exp(±hY)` maps nodes to nodes.
    pub fn heisenberg_lattice(h: f64, m: usize, mt: usize) -> Result<Self> {
        let model = GroupModel::heisenberg();
        Self::new(
            model,
            vec![Axis::centered(h, m)?, Axis::centered(h, m)?, Axis::centered(0.5 * h * h, mt)?],
        )
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.n).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.n).collect()
    }

    pub fn spacings(&self) -> Vec<f64> {
        self.axes.iter().map(|a| a.h()).collect()
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacings().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Largest gauge of a single axis step from the identity.
    pub fn homogeneous_spacing(&self) -> f64 {
        let e = self.model.to_chart(&self.model.identity());
        (0..self.dim())
            .map(|d| {
                let mut c = e;
                c[d] += self.axes[d].h();
                self.model.gauge(&self.model.from_chart(&c))
            })
            .fold(0.0, f64::max)
    }

    pub fn is_periodic(&self) -> bool {
        self.axes.iter().any(|a| a.periodic)
    }

    #[inline]
    pub fn flat(&self, idx: &[usize]) -> usize {
        let mut f = 0;
        for (a, &i) in self.axes.iter().zip(idx) {
            f = f * a.n + i;
        }
        f
    }

    #[inline]
    pub fn multi(&self, mut flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        for d in (0..self.dim()).rev() {
            let n = self.axes[d].n;
            idx[d] = flat % n;
            flat /= n;
        }
        idx
    }

    #[inline]
    pub fn chart_coords(&self, flat: usize) -> [f64; 3] {
        let idx = self.multi(flat);
        let mut c = [0.0; 3];
        for d in 0..self.dim() {
            c[d] = self.axes[d].node(idx[d]);
        }
        c
    }

    #[inline]
    pub fn point(&self, flat: usize) -> GroupPoint {
        self.model.from_chart(&self.chart_coords(flat))
    }

    pub fn points(&self) -> Vec<GroupPoint> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Quadrature weight of node `flat` (cell volume times Haar density).
    #[inline]
    pub fn weight(&self, flat: usize) -> f64 {
        let idx = self.multi(flat);
        let mut w = 1.0;
        for d in 0..self.dim() {
            w *= self.axes[d].weight(idx[d]);
        }
        w * self.model.chart_haar_density(&self.chart_coords(flat))
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.weight(i)).collect()
    }

    /// Haar measure of the whole box as given by the quadrature rule.
    pub fn total_measure(&self) -> f64 {
        self.weights().iter().sum()
    }

    pub fn contains_chart(&self, c: &[f64; 3]) -> bool {
        self.axes.iter().enumerate().all(|(d, a)| {
            let tol = 1e-12 * a.h();
            a.periodic || (c[d] >= a.lo - tol && c[d] <= a.hi + tol)
        })
    }

    pub fn contains(&self, g: &GroupPoint) -> bool {
        self.contains_chart(&self.model.to_chart(g))
    }

    /// Node index for a point lying on a node (within 1e-6 of the spacing).
    pub fn node_index(&self, g: &GroupPoint) -> Option<usize> {
        let c = self.model.to_chart(g);
        let mut idx = [0usize; 3];
        for (d, a) in self.axes.iter().enumerate() {
            let j = a.nearest(c[d])?;
            let mut off = c[d] - a.node(j);
            if a.periodic {
                off -= a.length() * (off / a.length()).round();
            }
            if off.abs() > 1e-6 * a.h() {
                return None;
            }
            idx[d] = j;
        }
        Some(self.flat(&idx[..self.dim()]))
    }

    /// Step `h` when this is a lattice-compatible H¹ grid (centered closed
    /// axes, equal horizontal steps, vertical step `h²/2`).
    pub fn heisenberg_lattice_step(&self) -> Option<f64> {
        if self.model.kind != ModelKind::Heisenberg {
            return None;
        }
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs());
        let centered = |a: &Axis| !a.periodic && a.n % 2 == 1 && close(a.lo, -a.hi);
        let (ax, ay, at) = (&self.axes[0], &self.axes[1], &self.axes[2]);
        let h = ax.h();
        (centered(ax) && centered(ay) && centered(at) && close(h, ay.h()) && close(at.h(), 0.5 * h * h))
            .then_some(h)
    }

    /// Interpolation weights `(flat index, weight)` at chart point `c`:
    /// multilinear in the chart, except on lattice-compatible H¹ grids where
    /// the cell is spanned by right translates `ν·exp(ahX + bhY + c h²/2 T)`
    /// of the nearest node `ν` (every corner is a node).
    pub fn stencil(&self, c: &[f64; 3]) -> Option<Vec<(usize, f64)>> {
        if let Some(h) = self.heisenberg_lattice_step() {
            return self.lattice_stencil(h, c);
        }
        let dim = self.dim();
        let mut loc = [(0usize, 0usize, 0.0f64); 3];
        for d in 0..dim {
            loc[d] = self.axes[d].locate(c[d])?;
        }
        let mut out = Vec::with_capacity(1 << dim);
        for corner in 0..(1usize << dim) {
            let mut w = 1.0;
            let mut idx = [0usize; 3];
            for d in 0..dim {
                let (j0, j1, f) = loc[d];
                if corner >> d & 1 == 1 {
                    idx[d] = j1;
                    w *= f;
                } else {
                    idx[d] = j0;
                    w *= 1.0 - f;
                }
            }
            if w != 0.0 {
                out.push((self.flat(&idx[..dim]), w));
            }
        }
        Some(out)
    }

    fn lattice_stencil(&self, h: f64, c: &[f64; 3]) -> Option<Vec<(usize, f64)>> {
        if !self.contains_chart(c) {
            return None;
        }
        let ht = 0.5 * h * h;
        let half = [(self.axes[0].n / 2) as i64, (self.axes[1].n / 2) as i64, (self.axes[2].n / 2) as i64];
        let ci = ((c[0] / h).round() as i64).clamp(-half[0], half[0]);
        let cj = ((c[1] / h).round() as i64).clamp(-half[1], half[1]);
        let ck = ((c[2] / ht).round() as i64).clamp(-half[2], half[2]);
        let (nx, ny) = (ci as f64 * h, cj as f64 * h);
        // ν⁻¹p in lattice units
        let u = (c[0] - nx) / h;
        let v = (c[1] - ny) / h;
        let w = (c[2] - ck as f64 * ht - 0.5 * (nx * c[1] - ny * c[0])) / ht;
        let (a0, b0, k0) = (u.floor(), v.floor(), w.floor());
        let f = [u - a0, v - b0, w - k0];
        let (a0, b0, k0) = (a0 as i64, b0 as i64, k0 as i64);
        let mut out = Vec::with_capacity(8);
        for corner in 0..8usize {
            let s = [(corner & 1) as i64, (corner >> 1 & 1) as i64, (corner >> 2 & 1) as i64];
            let wgt: f64 = (0..3).map(|d| if s[d] == 1 { f[d] } else { 1.0 - f[d] }).product();
            if wgt == 0.0 {
                continue;
            }
            let (a, b, k) = (a0 + s[0], b0 + s[1], k0 + s[2]);
            let idx = [ci + a, cj + b, ck + k + ci * b - cj * a];
            if (0..3).any(|d| idx[d].abs() > half[d]) {
                continue;
            }
            out.push((self.flat(&[(idx[0] + half[0]) as usize, (idx[1] + half[1]) as usize, (idx[2] + half[2]) as usize]), wgt));
        }
        Some(out)
    }

    /// `g⁻¹x`, with periodic axes wrapped to the nearest representative.
    #[inline]
    pub fn relative(&self, g: &GroupPoint, x: &GroupPoint) -> GroupPoint {
        let mut q = self.model.left_quotient(g, x);
        for (d, a) in self.axes.iter().enumerate() {
            if a.periodic {
                let l = a.length();
                q.coords[d] -= l * (q.coords[d] / l).round();
            }
        }
        q
    }

    /// Nodes whose chart coordinates fall in the given box (periodic axes wrap).
    pub fn nodes_in_chart_box(&self, bounds: &[(f64, f64)]) -> Vec<usize> {
        let dim = self.dim();
        let mut ranges: Vec<Vec<usize>> = Vec::with_capacity(dim);
        for (d, a) in self.axes.iter().enumerate() {
            let (blo, bhi) = bounds[d];
            let h = a.h();
            let j0 = ((blo - a.lo) / h - 1e-9).ceil() as i64;
            let j1 = ((bhi - a.lo) / h + 1e-9).floor() as i64;
            let mut r = Vec::new();
            if a.periodic {
                let n = a.n as i64;
                let span = (j1 - j0 + 1).min(n);
                for j in j0..j0 + span {
                    r.push(j.rem_euclid(n) as usize);
                }
            } else {
                for j in j0.max(0)..=j1.min(a.n as i64 - 1) {
                    r.push(j as usize);
                }
            }
            ranges.push(r);
        }
        let mut out = Vec::new();
        let mut idx = [0usize; 3];
        fn rec(g: &Grid, ranges: &[Vec<usize>], d: usize, idx: &mut [usize; 3], out: &mut Vec<usize>) {
            if d == ranges.len() {
                out.push(g.flat(&idx[..ranges.len()]));
                return;
            }
            for &j in &ranges[d] {
                idx[d] = j;
                rec(g, ranges, d + 1, idx, out);
            }
        }
        rec(self, &ranges, 0, &mut idx, &mut out);
        out
    }

    /// Nodes `x` with `gauge(center⁻¹x) < radius`.
    pub fn nodes_in_ball(&self, center: &GroupPoint, radius: f64) -> Vec<usize> {
        let bounds = self.model.ball_chart_bounds(center, radius);
        self.nodes_in_chart_box(&bounds)
            .into_iter()
            .filter(|&i| self.model.gauge(&self.relative(center, &self.point(i))) < radius)
            .collect()
    }

    /// Content hash identifying the discretization (model, axes).
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.model.id().as_bytes());
        for a in &self.axes {
            h.update(a.lo.to_le_bytes());
            h.update(a.hi.to_le_bytes());
            h.update((a.n as u64).to_le_bytes());
            h.update([a.periodic as u8]);
        }
        hex_digest(h)
    }
}

pub(crate) fn hex_digest(h: Sha256) -> String {
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Norms {
    pub l1: f64,
    pub l2: f64,
    pub sup: f64,
}

#[derive(Clone, Debug)]
pub struct GridFunction {
    pub grid: Arc<Grid>,
    pub values: Vec<Complex64>,
}

impl GridFunction {
    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.len();
        Self { grid, values: vec![Complex64::new(0.0, 0.0); n] }
    }

    pub fn from_values(grid: Arc<Grid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "value array has length {}, grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidArgument("non-finite grid value".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn from_real(grid: Arc<Grid>, values: &[f64]) -> Result<Self> {
        Self::from_values(grid, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// Samples `f` at every node (in the model coordinates of `GroupPoint`).
    pub fn from_fn<F>(grid: Arc<Grid>, f: F) -> Self
    where
        F: Fn(&GroupPoint) -> Complex64 + Sync,
    {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|i| f(&grid.point(i)))
            .collect();
        Self { grid, values }
    }

    pub fn from_real_fn<F>(grid: Arc<Grid>, f: F) -> Self
    where
        F: Fn(&GroupPoint) -> f64 + Sync,
    {
        Self::from_fn(grid, |g| Complex64::new(f(g), 0.0))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn check_same_grid(&self, other: &GridFunction) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(Error::InvalidArgument("grid functions live on different grids".into()))
        }
    }

    pub fn inner(&self, other: &GridFunction) -> Result<Complex64> {
        self.check_same_grid(other)?;
        let mut s = Complex64::new(0.0, 0.0);
        for (i, (a, b)) in self.values.iter().zip(&other.values).enumerate() {
            s += a * b.conj() * self.grid.weight(i);
        }
        Ok(s)
    }

    pub fn norms(&self) -> Norms {
        self.norms_masked(|_| true)
    }

    /// Local norms `∥·∥_{p,U}` restricted to nodes where `mask` holds.
    pub fn norms_masked<M: Fn(usize) -> bool>(&self, mask: M) -> Norms {
        let (mut l1, mut l2, mut sup) = (0.0, 0.0, 0.0f64);
        for (i, v) in self.values.iter().enumerate() {
            if !mask(i) {
                continue;
            }
            let w = self.grid.weight(i);
            let a = v.norm();
            l1 += w * a;
            l2 += w * a * a;
            sup = sup.max(a);
        }
        Norms { l1, l2: l2.sqrt(), sup }
    }

    pub fn l2(&self) -> f64 {
        self.norms().l2
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|v| v * c).collect() }
    }

    pub fn add(&self, other: &GridFunction) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(Self {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &GridFunction) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn abs(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| Complex64::new(v.norm(), 0.0)).collect(),
        }
    }

    pub fn conj(&self) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|v| v.conj()).collect() }
    }

    /// `f*(x) = conj(f(x⁻¹))`, evaluated by interpolation.
    pub fn involution(&self) -> Self {
        let model = self.grid.model;
        let values = (0..self.len())
            .into_par_iter()
            .map(|i| self.interpolate(&model.inv(&self.grid.point(i))).conj())
            .collect();
        Self { grid: self.grid.clone(), values }
    }

    /// Multilinear interpolation; zero outside a closed box.
    #[inline]
    pub fn interpolate(&self, g: &GroupPoint) -> Complex64 {
        self.interpolate_chart(&self.grid.model.to_chart(g))
    }

    #[inline]
    pub fn interpolate_chart(&self, c: &[f64; 3]) -> Complex64 {
        match self.grid.stencil(c) {
            Some(st) => st.iter().map(|&(i, w)| self.values[i] * w).sum(),
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// Like `interpolate` but reports points outside the box.
    pub fn try_interpolate(&self, g: &GroupPoint) -> Result<Complex64> {
        let c = self.grid.model.to_chart(g);
        match self.grid.stencil(&c) {
            Some(st) => Ok(st.iter().map(|&(i, w)| self.values[i] * w).sum()),
            None => Err(Error::OutsideBox { point: g.coords[..self.grid.dim()].to_vec() }),
        }
    }

    /// `f ∘ δ_t` on the same grid (interpolated).
    pub fn compose_dilation(&self, t: f64) -> Result<Self> {
        let model = self.grid.model;
        model.dilate(t, &model.identity())?;
        Ok(GridFunction::from_fn(self.grid.clone(), |g| {
            self.interpolate(&model.dilate(t, g).expect("checked"))
        }))
    }

    /// Left translate `L_z f(x) = f(z⁻¹x)`.
    pub fn left_translate(&self, z: &GroupPoint) -> Self {
        let model = self.grid.model;
        let zi = model.inv(z);
        GridFunction::from_fn(self.grid.clone(), |g| self.interpolate(&model.mul(&zi, g)))
    }

    pub fn max_abs_diff(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Flat binary layout: magic, header length (u32 LE), JSON header,
    /// then `(re, im)` pairs as little-endian f64.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let header = serde_json::to_vec(&BinaryHeader {
            model: self.grid.model.id(),
            axes: self.grid.axes.clone(),
        })?;
        w.write_all(MAGIC)?;
        w.write_all(&(header.len() as u32).to_le_bytes())?;
        w.write_all(&header)?;
        for v in &self.values {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Parse("not a grid function file".into()));
        }
        let mut len = [0u8; 4];
        r.read_exact(&mut len)?;
        let mut header = vec![0u8; u32::from_le_bytes(len) as usize];
        r.read_exact(&mut header)?;
        let header: BinaryHeader = serde_json::from_slice(&header)?;
        let grid = Arc::new(Grid::new(GroupModel::from_id(&header.model)?, header.axes)?);
        let mut values = Vec::with_capacity(grid.len());
        let mut buf = [0u8; 16];
        for _ in 0..grid.len() {
            r.read_exact(&mut buf)?;
            let re = f64::from_le_bytes(buf[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(buf[8..].try_into().expect("8 bytes"));
            values.push(Complex64::new(re, im));
        }
        Self::from_values(grid, values)
    }

    /// CSV export: chart coordinates, weight, real and imaginary part.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let names = ["c0", "c1", "c2"];
        let cols: Vec<&str> = names[..self.grid.dim()].to_vec();
        writeln!(w, "{},weight,re,im", cols.join(","))?;
        for (i, v) in self.values.iter().enumerate() {
            let c = self.grid.chart_coords(i);
            for x in &c[..self.grid.dim()] {
                write!(w, "{x},")?;
            }
            writeln!(w, "{},{},{}", self.grid.weight(i), v.re, v.im)?;
        }
        Ok(())
    }
}

const MAGIC: &[u8; 4] = b"GSGF";

#[derive(Serialize, Deserialize)]
struct BinaryHeader {
    model: String,
    axes: Vec<Axis>,
}
