//! Separated and dense sampling sets, the recursive partition built from a
//! separated dense set, and quasi-lattices assembled from semidirect
//! products.

use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::group::{GroupModel, GroupPoint, ModelKind};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointSet {
    pub model: GroupModel,
    pub points: Vec<GroupPoint>,
    /// Chart box the set is meant to cover.
    pub region: Vec<(f64, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum CertificateKind {
    Separated(f64),
    Dense(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Witness {
    Pair(GroupPoint, GroupPoint),
    Point { point: GroupPoint, distance: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub passed: bool,
    pub witness: Option<Witness>,
    /// Pairs (separation) or nodes (density) that needed the exact grid check.
    pub checked: usize,
}

impl PointSet {
    pub fn new(model: GroupModel, points: Vec<GroupPoint>, region: Vec<(f64, f64)>) -> Result<Self> {
        for p in &points {
            model.validate(p)?;
        }
        Ok(Self { model, points, region })
    }

    /// Arithmetic progression `{offset + k·step}` inside `[lo, hi]` on the line.
    pub fn arithmetic(lo: f64, hi: f64, step: f64, offset: f64) -> Result<Self> {
        if !(step > 0.0) {
            return Err(Error::InvalidArgument(format!("step must be positive, got {step}")));
        }
        let k0 = ((lo - offset) / step - 1e-9).ceil() as i64;
        let k1 = ((hi - offset) / step + 1e-9).floor() as i64;
        let points = (k0..=k1).map(|k| GroupPoint::new(&[offset + k as f64 * step])).collect();
        Self::new(GroupModel::real_line(), points, vec![(lo, hi)])
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Enumeration used by the partition recursion: by gauge, then
    /// lexicographically by coordinates.
    pub fn enumeration_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        let key = |i: usize| {
            let p = &self.points[i];
            (self.model.gauge(p), p.coords)
        };
        order.sort_by(|&a, &b| {
            let (ga, ca) = key(a);
            let (gb, cb) = key(b);
            ga.total_cmp(&gb)
                .then(ca[0].total_cmp(&cb[0]))
                .then(ca[1].total_cmp(&cb[1]))
                .then(ca[2].total_cmp(&cb[2]))
        });
        order
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# model={}", self.model.id())?;
        let region: Vec<String> = self.region.iter().map(|(a, b)| format!("{a}:{b}")).collect();
        writeln!(w, "# region={}", region.join(","))?;
        let dim = self.model.dim();
        for p in &self.points {
            let row: Vec<String> = p.coords[..dim].iter().map(|c| format!("{c}")).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Reads the CSV layout produced by `write_csv`. A missing region line
    /// yields the bounding box of the points in chart coordinates.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut model = None;
        let mut region = None;
        let mut rows = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                let meta = meta.trim();
                if let Some(id) = meta.strip_prefix("model=") {
                    model = Some(GroupModel::from_id(id)?);
                } else if let Some(reg) = meta.strip_prefix("region=") {
                    let mut b = Vec::new();
                    for part in reg.split(',') {
                        let (lo, hi) = part
                            .split_once(':')
                            .ok_or_else(|| Error::Parse(format!("bad region entry `{part}`")))?;
                        b.push((parse_f64(lo, lineno)?, parse_f64(hi, lineno)?));
                    }
                    region = Some(b);
                }
                continue;
            }
            let row: Vec<f64> = line
                .split(',')
                .map(|s| parse_f64(s, lineno))
                .collect::<Result<_>>()?;
            rows.push(row);
        }
        let model = match model {
            Some(m) => m,
            None => match rows.first().map(|r| r.len()) {
                Some(1) | None => GroupModel::real_line(),
                Some(n) => GroupModel::euclidean(n)?,
            },
        };
        let dim = model.dim();
        let mut points = Vec::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::Parse(format!(
                    "point {i} has {} coordinates, {} model needs {dim}",
                    row.len(),
                    model
                )));
            }
            points.push(GroupPoint::new(row));
        }
        let region = match region {
            Some(r) => r,
            None => bounding_box(&model, &points),
        };
        Self::new(model, points, region)
    }
}

fn parse_f64(s: &str, lineno: usize) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("line {}: `{}` is not a number", lineno + 1, s.trim())))
}

fn bounding_box(model: &GroupModel, points: &[GroupPoint]) -> Vec<(f64, f64)> {
    let dim = model.dim();
    let mut b = vec![(f64::INFINITY, f64::NEG_INFINITY); dim];
    for p in points {
        let c = model.to_chart(p);
        for d in 0..dim {
            b[d].0 = b[d].0.min(c[d]);
            b[d].1 = b[d].1.max(c[d]);
        }
    }
    if points.is_empty() {
        b = vec![(0.0, 0.0); dim];
    }
    b
}

fn check_model(grid: &Grid, set: &PointSet) -> Result<()> {
    if grid.model.kind != set.model.kind {
        return Err(Error::ModelMismatch { expected: grid.model.id(), found: set.model.id() });
    }
    Ok(())
}

/// Greedy maximal `r`-separated subset of the grid nodes (in node order).
/// The result is `B_{r/(2C_△)}`-separated and `B_r`-dense on the grid.
pub fn greedy_separated_dense(grid: &Grid, r: f64) -> Result<PointSet> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
    }
    let h = grid.homogeneous_spacing();
    if h >= r / 8.0 {
        return Err(Error::GridTooCoarse(format!(
            "candidate grid spacing {h} (homogeneous units) must be below r/8 = {}",
            r / 8.0
        )));
    }
    let mut accepted: Vec<GroupPoint> = Vec::new();
    for i in 0..grid.len() {
        let x = grid.point(i);
        let ok = accepted
            .iter()
            .all(|g| grid.model.gauge(&grid.relative(g, &x)) >= r);
        if ok {
            accepted.push(x);
        }
    }
    let region = grid.axes.iter().map(|a| (a.lo, a.hi)).collect();
    PointSet::new(grid.model, accepted, region)
}

/// Separation: the discretized balls `γB_s` are pairwise disjoint on the grid.
/// Pairs with `|γ′⁻¹γ| ≥ 2C_△s` are skipped (disjointness is then implied).
pub fn verify_separated(set: &PointSet, s: f64, grid: &Grid) -> Result<Certificate> {
    check_model(grid, set)?;
    if !(s > 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {s}")));
    }
    let model = &set.model;
    let far = 2.0 * model.triangle_constant * s;
    let n = set.len();
    let close: Vec<(usize, usize)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            (i + 1..n)
                .filter(move |&j| {
                    model.gauge(&grid.relative(&set.points[j], &set.points[i])) < far
                })
                .map(move |j| (i, j))
        })
        .collect();
    let checked = close.len();
    let witness = close.par_iter().find_first(|&&(i, j)| {
        let a = &set.points[i];
        let b = &set.points[j];
        grid.nodes_in_ball(a, s)
            .into_iter()
            .any(|k| model.gauge(&grid.relative(b, &grid.point(k))) < s)
    });
    Ok(Certificate {
        kind: CertificateKind::Separated(s),
        passed: witness.is_none(),
        witness: witness.map(|&(i, j)| Witness::Pair(set.points[i], set.points[j])),
        checked,
    })
}

/// Density: every node of the grid lies in some `γB_r`. The witness is the
/// node farthest from the set.
pub fn verify_dense(set: &PointSet, r: f64, grid: &Grid) -> Result<Certificate> {
    check_model(grid, set)?;
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
    }
    let dist = nearest_distances(set, grid);
    let worst = dist
        .iter()
        .enumerate()
        .filter(|(_, &d)| d >= r)
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)));
    Ok(Certificate {
        kind: CertificateKind::Dense(r),
        passed: worst.is_none(),
        witness: worst.map(|(i, &d)| Witness::Point { point: grid.point(i), distance: d }),
        checked: grid.len(),
    })
}

/// `min_γ |γ⁻¹x|` for every grid node `x`.
pub fn nearest_distances(set: &PointSet, grid: &Grid) -> Vec<f64> {
    (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x = grid.point(i);
            set.points
                .iter()
                .map(|g| set.model.gauge(&grid.relative(g, &x)))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Pointwise dilation of the set; the region scales with the stratification weights.
pub fn dilate_set(set: &PointSet, r: f64) -> Result<PointSet> {
    let weights = set.model.stratification_weights().ok_or(Error::UnsupportedModel {
        op: "dilate_set",
        model: set.model.id(),
    })?;
    let points = set
        .points
        .iter()
        .map(|p| set.model.dilate(r, p))
        .collect::<Result<Vec<_>>>()?;
    let region = set
        .region
        .iter()
        .zip(&weights)
        .map(|(&(lo, hi), &w)| (lo * r.powi(w as i32), hi * r.powi(w as i32)))
        .collect();
    PointSet::new(set.model, points, region)
}

/// Cell structure of the recursive partition: node `i` belongs to the cell
/// of `set.points[owner[i]]`.
#[derive(Clone, Debug, Serialize)]
pub struct Partition {
    pub owner: Vec<usize>,
    pub order: Vec<usize>,
    pub w_radius: f64,
    pub u_radius: f64,
    pub cell_nodes: Vec<usize>,
    pub cell_measure: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PartitionCheck {
    pub unassigned: usize,
    /// Nodes of some `γB_W` not assigned to `γ`.
    pub w_violations: usize,
    /// Nodes assigned to `γ` lying outside `γB_U`.
    pub u_violations: usize,
}

impl PartitionCheck {
    pub fn passed(&self) -> bool {
        self.unassigned == 0 && self.w_violations == 0 && self.u_violations == 0
    }
}

const UNASSIGNED: usize = usize::MAX;

/// Runs the cell recursion `V_k = W ∪ γ_k⁻¹((A ∩ γ_k U) \ ∪_{i<k} γ_i V_i)`
/// on the grid, where `A` is the complement of `∪ γW`.
pub fn build_partition(set: &PointSet, w_radius: f64, u_radius: f64, grid: &Grid) -> Result<Partition> {
    if !(w_radius > 0.0) || w_radius > u_radius {
        return Err(Error::InvalidArgument(format!(
            "need 0 < W radius ≤ U radius, got {w_radius} and {u_radius}"
        )));
    }
    let sep = verify_separated(set, w_radius, grid)?;
    if !sep.passed {
        return Err(Error::Precondition(format!(
            "set is not B_{w_radius}-separated: {:?}",
            sep.witness
        )));
    }
    let dense = verify_dense(set, u_radius, grid)?;
    if !dense.passed {
        return Err(Error::Precondition(format!(
            "set is not B_{u_radius}-dense: {:?}",
            dense.witness
        )));
    }
    let n = grid.len();
    let mut owner = vec![UNASSIGNED; n];
    let balls_w: Vec<Vec<usize>> = set
        .points
        .par_iter()
        .map(|g| grid.nodes_in_ball(g, w_radius))
        .collect();
    let mut in_w = vec![false; n];
    for ball in &balls_w {
        for &i in ball {
            in_w[i] = true;
        }
    }
    let order = set.enumeration_order();
    for &k in &order {
        for &i in &balls_w[k] {
            owner[i] = k;
        }
        for i in grid.nodes_in_ball(&set.points[k], u_radius) {
            if !in_w[i] && owner[i] == UNASSIGNED {
                owner[i] = k;
            }
        }
    }
    let mut cell_nodes = vec![0usize; set.len()];
    let mut cell_measure = vec![0.0; set.len()];
    for (i, &o) in owner.iter().enumerate() {
        if o != UNASSIGNED {
            cell_nodes[o] += 1;
            cell_measure[o] += grid.weight(i);
        }
    }
    Ok(Partition { owner, order, w_radius, u_radius, cell_nodes, cell_measure })
}

impl Partition {
    pub fn check(&self, set: &PointSet, grid: &Grid) -> PartitionCheck {
        let unassigned = self.owner.iter().filter(|&&o| o == UNASSIGNED).count();
        let w_violations = set
            .points
            .par_iter()
            .enumerate()
            .map(|(k, g)| {
                grid.nodes_in_ball(g, self.w_radius)
                    .into_iter()
                    .filter(|&i| self.owner[i] != k)
                    .count()
            })
            .sum();
        let u_violations = (0..grid.len())
            .into_par_iter()
            .filter(|&i| {
                let o = self.owner[i];
                o != UNASSIGNED
                    && set.model.gauge(&grid.relative(&set.points[o], &grid.point(i))) >= self.u_radius
            })
            .count();
        PartitionCheck { unassigned, w_violations, u_violations }
    }
}

/// Semidirect decompositions `G = N ⋊ ℝ` with `g = n · k_s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Semidirect {
    /// ℝᵐ × ℝ with trivial action; the last coordinate is `s`.
    Euclidean,
    /// `N = {(1, b)}`, `k_s = (e^s, 0)`, action `b ↦ e^s b`.
    Affine,
    /// `N = {(0, y, t)}`, `k_s = (s, 0, 0)`, action `(y, t) ↦ (y, t + s y)`.
    Heisenberg,
}

impl Semidirect {
    fn check(&self, model: &GroupModel) -> Result<()> {
        let ok = matches!(
            (self, model.kind),
            (Semidirect::Euclidean, ModelKind::Euclidean(n)) if n >= 1
        ) || matches!((self, model.kind), (Semidirect::Affine, ModelKind::Affine))
            || matches!((self, model.kind), (Semidirect::Heisenberg, ModelKind::Heisenberg));
        if ok {
            Ok(())
        } else {
            Err(Error::ModelMismatch { expected: format!("{self:?} build-up"), found: model.id() })
        }
    }

    /// `(n, s)` with `g = n · k_s`.
    pub fn split(&self, model: &GroupModel, g: &GroupPoint) -> (Vec<f64>, f64) {
        let c = &g.coords;
        match self {
            Semidirect::Euclidean => {
                let m = model.dim() - 1;
                (c[..m].to_vec(), c[m])
            }
            Semidirect::Affine => (vec![c[1]], c[0].ln()),
            Semidirect::Heisenberg => (vec![c[1], c[2] + 0.5 * c[0] * c[1]], c[0]),
        }
    }

    pub fn join(&self, model: &GroupModel, n: &[f64], s: f64) -> GroupPoint {
        match self {
            Semidirect::Euclidean => {
                let mut c = n.to_vec();
                c.push(s);
                GroupPoint::new(&c[..model.dim()])
            }
            Semidirect::Affine => GroupPoint::new(&[s.exp(), n[0]]),
            Semidirect::Heisenberg => GroupPoint::new(&[s, n[0], n[1] - 0.5 * s * n[0]]),
        }
    }

    /// The automorphism `α_s` of `N` (conjugation by `k_s`).
    pub fn act(&self, s: f64, n: &[f64]) -> Vec<f64> {
        match self {
            Semidirect::Euclidean => n.to_vec(),
            Semidirect::Affine => vec![s.exp() * n[0]],
            Semidirect::Heisenberg => vec![n[0], n[1] + s * n[0]],
        }
    }
}

/// A relatively compact complement of a quasi-lattice.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Complement {
    /// `{n · k_s : n ∈ normal_box, s ∈ [0, step)}` (half-open boxes).
    Semidirect { build: Semidirect, normal_box: Vec<(f64, f64)>, step: f64 },
    /// Half-open box in chart coordinates.
    ChartBox(Vec<(f64, f64)>),
}

#[inline]
fn in_half_open(v: f64, lo: f64, hi: f64) -> bool {
    // snap values within a relative tolerance of a face to the lower face
    let tol = 1e-9 * (hi - lo).abs().max(1.0);
    v >= lo - tol && v < hi - tol
}

impl Complement {
    pub fn contains(&self, model: &GroupModel, g: &GroupPoint) -> bool {
        match self {
            Complement::Semidirect { build, normal_box, step } => {
                let (n, s) = build.split(model, g);
                in_half_open(s, 0.0, *step)
                    && n.iter().zip(normal_box).all(|(&v, &(lo, hi))| in_half_open(v, lo, hi))
            }
            Complement::ChartBox(b) => {
                let c = model.to_chart(g);
                b.iter().enumerate().all(|(d, &(lo, hi))| in_half_open(c[d], lo, hi))
            }
        }
    }

    fn parameter_box(&self) -> Vec<(f64, f64)> {
        match self {
            Complement::Semidirect { normal_box, step, .. } => {
                let mut b = normal_box.clone();
                b.push((0.0, *step));
                b
            }
            Complement::ChartBox(b) => b.clone(),
        }
    }

    fn from_parameters(&self, model: &GroupModel, p: &[f64]) -> GroupPoint {
        match self {
            Complement::Semidirect { build, .. } => {
                let m = p.len() - 1;
                build.join(model, &p[..m], p[m])
            }
            Complement::ChartBox(_) => {
                let mut c = [0.0; 3];
                c[..p.len()].copy_from_slice(p);
                model.from_chart(&c)
            }
        }
    }

    /// Chart-parameter center of the complement as a group element.
    pub fn center(&self, model: &GroupModel) -> GroupPoint {
        let p: Vec<f64> = self.parameter_box().iter().map(|(a, b)| 0.5 * (a + b)).collect();
        self.from_parameters(model, &p)
    }

    /// Estimated in-radius around `center()` and circum-radius around the
    /// identity, by sampling the parameter box on a `per_axis` lattice.
    pub fn radii(&self, model: &GroupModel, per_axis: usize) -> (f64, f64) {
        let b = self.parameter_box();
        let dim = b.len();
        let per = per_axis.max(3);
        let c0 = self.center(model);
        let c0i = model.inv(&c0);
        let mut inner = f64::INFINITY;
        let mut outer = 0.0f64;
        let total = per.pow(dim as u32);
        for flat in 0..total {
            let mut f = flat;
            let mut p = vec![0.0; dim];
            let mut on_face = false;
            for d in 0..dim {
                let j = f % per;
                f /= per;
                if j == 0 || j == per - 1 {
                    on_face = true;
                }
                p[d] = b[d].0 + (b[d].1 - b[d].0) * j as f64 / (per - 1) as f64;
            }
            let g = self.from_parameters(model, &p);
            outer = outer.max(model.gauge(&g));
            if on_face {
                inner = inner.min(model.gauge(&model.mul(&c0i, &g)));
            }
        }
        (inner, outer)
    }
}

/// Lattice points `{Σ k_d step_d e_d}` of `N` with `k_d` in the given ranges.
pub fn lattice_points(steps: &[f64], ranges: &[(i64, i64)]) -> Vec<Vec<f64>> {
    let mut out = vec![vec![]];
    for (&h, &(lo, hi)) in steps.iter().zip(ranges) {
        let mut next = Vec::new();
        for p in &out {
            for k in lo..=hi {
                let mut q = p.clone();
                q.push(k as f64 * h);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

/// `Γ = {k_{ℓα} · γ₀ : γ₀ ∈ Γ₀, ℓ ∈ l_range}` with complement
/// `{n · k_s : n ∈ C₀, s ∈ [0, α)}`.
pub fn quasilattice_semidirect(
    model: &GroupModel,
    build: Semidirect,
    gamma0: &[Vec<f64>],
    c0: &[(f64, f64)],
    step: f64,
    l_range: (i64, i64),
) -> Result<(PointSet, Complement)> {
    build.check(model)?;
    if !(step > 0.0) {
        return Err(Error::InvalidArgument(format!("ℓ step must be positive, got {step}")));
    }
    for g0 in gamma0.iter().take(16) {
        for s in [-step, step] {
            let back = build.act(-s, &build.act(s, g0));
            if back.iter().zip(g0).any(|(a, b)| (a - b).abs() > 1e-9 * (1.0 + b.abs())) {
                return Err(Error::InvalidArgument("action sample is not invertible".into()));
            }
        }
    }
    let mut points = Vec::with_capacity(gamma0.len() * (l_range.1 - l_range.0 + 1).max(0) as usize);
    for l in l_range.0..=l_range.1 {
        let s = l as f64 * step;
        for g0 in gamma0 {
            points.push(build.join(model, &build.act(s, g0), s));
        }
    }
    let set = PointSet::new(*model, points.clone(), bounding_box(model, &points))?;
    Ok((set, Complement::Semidirect { build, normal_box: c0.to_vec(), step }))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TilingReport {
    pub nodes: usize,
    pub uncovered: usize,
    pub overlapped: usize,
}

impl TilingReport {
    pub fn passed(&self) -> bool {
        self.nodes > 0 && self.uncovered == 0 && self.overlapped == 0
    }
}

/// Counts, for every grid node inside `inner` (chart box), the `γ` with
/// `γ⁻¹x ∈ C`; a tiling has exactly one.
pub fn tiling_check(set: &PointSet, complement: &Complement, grid: &Grid, inner: &[(f64, f64)]) -> TilingReport {
    let model = set.model;
    let nodes: Vec<usize> = grid.nodes_in_chart_box(inner);
    let counts: Vec<usize> = nodes
        .par_iter()
        .map(|&i| {
            let x = grid.point(i);
            set.points
                .iter()
                .filter(|g| complement.contains(&model, &model.left_quotient(g, &x)))
                .count()
        })
        .collect();
    TilingReport {
        nodes: nodes.len(),
        uncovered: counts.iter().filter(|&&c| c == 0).count(),
        overlapped: counts.iter().filter(|&&c| c > 1).count(),
    }
}

/// Right translate `Γ·c`.
pub fn right_translate(set: &PointSet, c: &GroupPoint) -> Result<PointSet> {
    let points = set.points.iter().map(|g| set.model.mul(g, c)).collect();
    PointSet::new(set.model, points, set.region.clone())
}

/// Quasi-lattice certificate: `Γ·c₀` is separated with the complement's
/// in-radius and `Γ` is dense with its circum-radius (padded by `pad`).
pub fn certify_quasilattice(
    set: &PointSet,
    complement: &Complement,
    grid: &Grid,
    pad: f64,
) -> Result<(Certificate, Certificate)> {
    let (rin, rout) = complement.radii(&set.model, 21);
    let shifted = right_translate(set, &complement.center(&set.model))?;
    let sep = verify_separated(&shifted, rin * 0.98, grid)?;
    let dense = verify_dense(set, rout * (1.0 + pad), grid)?;
    Ok((sep, dense))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Axis;
    use proptest::prelude::*;

    fn line_grid(lo: f64, hi: f64, h: f64) -> Grid {
        let n = ((hi - lo) / h).round() as usize + 1;
        Grid::new(GroupModel::real_line(), vec![Axis::closed(lo, hi, n).unwrap()]).unwrap()
    }

    #[test]
    fn greedy_on_interval_has_unit_gaps() {
        let grid = line_grid(0.0, 10.0, 0.01);
        let set = greedy_separated_dense(&grid, 1.0).unwrap();
        let xs: Vec<f64> = set.points.iter().map(|p| p.coords[0]).collect();
        for w in xs.windows(2) {
            let gap = w[1] - w[0];
            assert!(gap >= 0.5 && gap <= 1.0 + 0.01 + 1e-12, "gap {gap}");
        }
        assert!(verify_separated(&set, 0.5, &grid).unwrap().passed);
        assert!(verify_dense(&set, 1.0, &grid).unwrap().passed);
    }

    #[test]
    fn greedy_rejects_coarse_grid() {
        let grid = line_grid(0.0, 10.0, 0.2);
        assert!(matches!(greedy_separated_dense(&grid, 1.0), Err(Error::GridTooCoarse(_))));
    }

    #[test]
    fn integers_are_dense_and_separated() {
        let grid = line_grid(0.0, 10.0, 0.01);
        let z = PointSet::arithmetic(0.0, 10.0, 1.0, 0.0).unwrap();
        assert_eq!(z.len(), 11);
        assert!(verify_dense(&z, 0.6, &grid).unwrap().passed);
        assert!(verify_dense(&z, 0.5 + 0.01, &grid).unwrap().passed);
        assert!(verify_separated(&z, 0.5, &grid).unwrap().passed);
    }

    #[test]
    fn overlapping_pair_is_reported() {
        let grid = line_grid(-2.0, 2.0, 0.01);
        let set = PointSet::new(
            GroupModel::real_line(),
            vec![GroupPoint::new(&[0.0]), GroupPoint::new(&[0.1])],
            vec![(-2.0, 2.0)],
        )
        .unwrap();
        let cert = verify_separated(&set, 0.5, &grid).unwrap();
        assert!(!cert.passed);
        assert_eq!(
            cert.witness,
            Some(Witness::Pair(GroupPoint::new(&[0.0]), GroupPoint::new(&[0.1])))
        );
    }

    #[test]
    fn even_integers_fail_density_at_odd_points() {
        let grid = line_grid(0.0, 10.0, 0.01);
        let set = PointSet::arithmetic(0.0, 10.0, 2.0, 0.0).unwrap();
        let cert = verify_dense(&set, 0.6, &grid).unwrap();
        assert!(!cert.passed);
        match cert.witness {
            Some(Witness::Point { point, distance }) => {
                assert!((point.coords[0] - 1.0).abs() < 1e-9);
                assert!((distance - 1.0).abs() < 1e-9);
            }
            w => panic!("unexpected witness {w:?}"),
        }
    }

    fn heisenberg_integer_set(model: &GroupModel, k: i64) -> PointSet {
        let mut pts = Vec::new();
        for p in -k..=k {
            for q in -k..=k {
                for r in -2 * k..=2 * k {
                    pts.push(GroupPoint::new(&[p as f64, q as f64, r as f64 / 2.0]));
                }
            }
        }
        PointSet::new(*model, pts, vec![(-1.0, 1.0); 3]).unwrap()
    }

    #[test]
    fn heisenberg_integer_lattice_is_separated() {
        let model = GroupModel::heisenberg();
        let grid = Grid::heisenberg_lattice(0.05, 30, 400).unwrap();
        let set = heisenberg_integer_set(&model, 1);
        let cert = verify_separated(&set, 0.2, &grid).unwrap();
        assert!(cert.passed, "{cert:?}");
        let bad = PointSet::new(
            model,
            vec![GroupPoint::new(&[0.0, 0.0, 0.0]), GroupPoint::new(&[0.0, 0.0, 0.005])],
            vec![],
        )
        .unwrap();
        assert!(!verify_separated(&bad, 0.2, &grid).unwrap().passed);
    }

    #[test]
    fn dilated_dense_set_stays_dense_at_scaled_radius() {
        let model = GroupModel::heisenberg();
        let grid = Grid::heisenberg_lattice(0.1, 10, 100).unwrap();
        let coarse = Grid::heisenberg_lattice(0.2, 10, 100).unwrap();
        let set = greedy_separated_dense(&Grid::heisenberg_lattice(0.1, 20, 400).unwrap(), 1.2)
            .unwrap();
        assert!(verify_dense(&set, 1.2, &coarse).unwrap().passed);
        let half = dilate_set(&set, 0.5).unwrap();
        assert!(verify_dense(&half, 0.6, &grid).unwrap().passed);
        assert!(dilate_set(&set, 1.0).unwrap().points == set.points);
        let z = PointSet::arithmetic(0.0, 4.0, 1.0, 0.0).unwrap();
        let hz = dilate_set(&z, 0.5).unwrap();
        assert_eq!(hz.points, PointSet::arithmetic(0.0, 2.0, 0.5, 0.0).unwrap().points);
        let aff = PointSet::new(GroupModel::affine(), vec![GroupPoint::new(&[1.0, 0.0])], vec![]).unwrap();
        assert!(dilate_set(&aff, 2.0).is_err());
        let _ = model;
    }

    #[test]
    fn partition_of_integers_has_unit_cells() {
        let grid = line_grid(0.0, 10.0, 0.001);
        let z = PointSet::arithmetic(0.0, 10.0, 1.0, 0.0).unwrap();
        let part = build_partition(&z, 0.25, 0.5 + 0.001, &grid).unwrap();
        assert!(part.check(&z, &grid).passed());
        for k in 1..10 {
            assert!((part.cell_measure[k] - 1.0).abs() < 2e-3, "{}", part.cell_measure[k]);
        }
        let total: f64 = part.cell_measure.iter().sum();
        assert!((total - grid.total_measure()).abs() < 1e-12);
        assert_eq!(part.cell_nodes.iter().sum::<usize>(), grid.len());
    }

    #[test]
    fn degenerate_partition_gives_balls() {
        let grid = line_grid(0.0, 10.0, 0.01);
        let z = PointSet::arithmetic(0.0, 10.0, 1.0, 0.0).unwrap();
        let r = 0.5 + 0.005;
        let err = build_partition(&z, r, r, &grid);
        // balls of radius > 1/2 overlap, so separation fails
        assert!(matches!(err, Err(Error::Precondition(_))));
        let part = build_partition(&z, 0.5, 0.5 + 0.01, &grid).unwrap();
        assert!(part.check(&z, &grid).passed());
        for k in 1..10 {
            let ball = grid.nodes_in_ball(&z.points[k], 0.5).len();
            assert!(part.cell_nodes[k].abs_diff(ball) <= 1);
        }
    }

    #[test]
    fn euclidean_build_up_gives_square_lattice() {
        let model = GroupModel::euclidean(2).unwrap();
        let g0 = lattice_points(&[1.0], &[(-4, 4)]);
        let (set, c) =
            quasilattice_semidirect(&model, Semidirect::Euclidean, &g0, &[(0.0, 1.0)], 1.0, (-4, 4)).unwrap();
        assert_eq!(set.len(), 81);
        assert!(set.points.contains(&GroupPoint::new(&[2.0, -3.0])));
        let grid = Grid::new(model, vec![Axis::closed(-3.0, 3.0, 61).unwrap(); 2]).unwrap();
        assert!(tiling_check(&set, &c, &grid, &[(-3.0, 3.0), (-3.0, 3.0)]).passed());
    }

    #[test]
    fn hyperbolic_lattice_tiles_affine_group() {
        let model = GroupModel::affine();
        let g0 = lattice_points(&[1.0], &[(-40, 40)]);
        let (set, c) =
            quasilattice_semidirect(&model, Semidirect::Affine, &g0, &[(0.0, 1.0)], 1.0, (-2, 2)).unwrap();
        // Γ = {(e^ℓ, e^ℓ m)}
        assert!(set.points.iter().any(|p| (p.coords[0] - 1f64.exp()).abs() < 1e-12
            && (p.coords[1] - 3.0 * 1f64.exp()).abs() < 1e-12));
        let grid = Grid::new(
            model,
            vec![Axis::closed(-1.5, 1.5, 31).unwrap(), Axis::closed(-4.0, 4.0, 81).unwrap()],
        )
        .unwrap();
        let rep = tiling_check(&set, &c, &grid, &[(-1.5, 1.5), (-4.0, 4.0)]);
        assert!(rep.passed(), "{rep:?}");
        let (sep, dense) = certify_quasilattice(&set, &c, &grid, 0.02).unwrap();
        assert!(dense.passed, "{dense:?}");
        assert!(sep.passed, "{sep:?}");
    }

    #[test]
    fn heisenberg_build_up_gives_integer_subgroup() {
        let model = GroupModel::heisenberg();
        let g0 = lattice_points(&[1.0, 0.5], &[(-3, 3), (-16, 16)]);
        let (set, c) = quasilattice_semidirect(
            &model,
            Semidirect::Heisenberg,
            &g0,
            &[(0.0, 1.0), (0.0, 0.5)],
            1.0,
            (-3, 3),
        )
        .unwrap();
        for p in &set.points {
            assert!((p.coords[0] - p.coords[0].round()).abs() < 1e-12);
            assert!((p.coords[1] - p.coords[1].round()).abs() < 1e-12);
            let t2 = 2.0 * p.coords[2];
            assert!((t2 - t2.round()).abs() < 1e-12);
        }
        let grid = Grid::heisenberg_lattice(0.25, 6, 64).unwrap();
        let inner = [(-1.5, 1.5), (-1.5, 1.5), (-2.0, 2.0)];
        let rep = tiling_check(&set, &c, &grid, &inner);
        assert!(rep.passed(), "{rep:?}");
        let chart_box = Complement::ChartBox(vec![(0.0, 1.0), (0.0, 1.0), (0.0, 0.5)]);
        let rep = tiling_check(&set, &chart_box, &grid, &inner);
        assert!(rep.passed(), "{rep:?}");
    }

    #[test]
    fn point_csv_round_trip() {
        let set = PointSet::arithmetic(0.0, 3.0, 0.5, 0.0).unwrap();
        let mut buf = Vec::new();
        set.write_csv(&mut buf).unwrap();
        let back = PointSet::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, set);
        assert!(PointSet::read_csv(&b"# model=heis1\n1,2\n"[..]).is_err());
        assert!(PointSet::read_csv(&b"1,x\n"[..]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn greedy_output_is_certified(lo in -5.0f64..5.0, len in 2.0f64..12.0, r in 0.3f64..2.0) {
            let grid = line_grid(lo, lo + len, r / 10.0);
            let set = greedy_separated_dense(&grid, r).unwrap();
            prop_assert!(verify_dense(&set, r, &grid).unwrap().passed);
            prop_assert!(verify_separated(&set, r / 2.0, &grid).unwrap().passed);
        }

        #[test]
        fn greedy_output_is_certified_in_plane(len in 2.0f64..4.0, r in 0.5f64..1.2) {
            let model = GroupModel::euclidean(2).unwrap();
            let n = (len / (r / 10.0)).ceil() as usize + 1;
            let grid = Grid::new(model, vec![Axis::closed(0.0, len, n).unwrap(); 2]).unwrap();
            let set = greedy_separated_dense(&grid, r).unwrap();
            prop_assert!(verify_dense(&set, r, &grid).unwrap().passed);
            prop_assert!(verify_separated(&set, r / 2.0, &grid).unwrap().passed);
            let part = build_partition(&set, r / 2.0, r, &grid).unwrap();
            prop_assert!(part.check(&set, &grid).passed());
        }
    }
}
