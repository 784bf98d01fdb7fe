//! The quasi-interpolation operator `Q(c) = Σ_γ c_γ χ_{γV_γ}` and the
//! sampling-equivalence verdict built on it.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use super::system::{FrameBounds, FrameSystem};
use crate::analysis::oscillation;
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::group::GroupPoint;
use crate::kernels::Space;
use crate::pointsets::{verify_dense, verify_separated, Partition, PointSet};

/// Piecewise-constant extension: node `k` receives `c_{owner(k)}`.
pub fn quasi_interpolate(samples: &[Complex64], partition: &Partition, grid: &Arc<Grid>) -> Result<GridFunction> {
    if partition.owner.len() != grid.len() {
        return Err(Error::InvalidArgument("partition was built on a different grid".into()));
    }
    if samples.len() != partition.cell_nodes.len() {
        return Err(Error::InvalidArgument(format!(
            "{} samples for a partition with {} cells",
            samples.len(),
            partition.cell_nodes.len()
        )));
    }
    let values = partition
        .owner
        .iter()
        .map(|&o| samples.get(o).copied().unwrap_or(Complex64::new(0.0, 0.0)))
        .collect();
    GridFunction::from_values(grid.clone(), values)
}

/// Quadrature measure of the discretized ball `B_r` about the identity.
pub fn ball_measure(grid: &Grid, r: f64) -> f64 {
    let e = grid.model.identity();
    grid.nodes_in_ball(&e, r).into_iter().map(|k| grid.weight(k)).sum()
}

/// `max ‖osc_{B_u} f‖₂ / ‖f‖₂` over random space elements and normalized
/// reproducing vectors at the given points.
pub fn oscillation_epsilon(
    space: &Arc<dyn Space>,
    u: f64,
    count: usize,
    anchors: &[GroupPoint],
    seed: u64,
) -> Result<f64> {
    let mut eps = 0.0f64;
    for k in 0..count {
        let f = space.random_element(seed.wrapping_add(k as u64))?;
        eps = eps.max(oscillation(&f, u)?.l2() / f.l2());
    }
    for x in anchors {
        let c: Vec<Complex64> = space.eval_basis(x).into_iter().map(|v| v.conj()).collect();
        let p = space.synthesize(&c);
        if p.l2() > 0.0 {
            eps = eps.max(oscillation(&p, u)?.l2() / p.l2());
        }
    }
    Ok(eps)
}

#[derive(Clone, Debug, Serialize)]
pub struct Theorem35Verdict {
    pub epsilon: f64,
    pub w_radius: f64,
    pub u_radius: f64,
    pub w_measure: f64,
    pub u_measure: f64,
    pub hypothesis_met: bool,
    pub bounds: FrameBounds,
    /// `(1−ε)²/|U|²` and `(1+ε)²/|W|²`.
    pub a_pred: f64,
    pub b_pred: f64,
    /// `(1−ε)²/|U|` and `(1+ε)²/|W|`.
    pub a_pred_linear: f64,
    pub b_pred_linear: f64,
    pub holds: bool,
    pub holds_linear: bool,
    pub tolerance: f64,
}

/// Predicted bounds for given `ε`, `|W|`, `|U|` as `(A, B)`.
pub fn sampling_envelope(eps: f64, w_measure: f64, u_measure: f64) -> (f64, f64) {
    ((1.0 - eps).powi(2) / (u_measure * u_measure), (1.0 + eps).powi(2) / (w_measure * w_measure))
}

/// Checks the sampling-equivalence envelope for a certified separated,
/// dense set. With `ε ≥ 1` the verdict records that the hypothesis is not
/// met and asserts nothing.
pub fn theorem35_verdict(
    space: Arc<dyn Space>,
    set: PointSet,
    w_radius: f64,
    u_radius: f64,
    test_count: usize,
    seed: u64,
    tolerance: f64,
) -> Result<Theorem35Verdict> {
    let grid = space.grid().clone();
    let sep = verify_separated(&set, w_radius, &grid)?;
    let dense = verify_dense(&set, u_radius, &grid)?;
    if !sep.passed || !dense.passed {
        return Err(Error::Precondition(format!(
            "set is not certified (separated: {}, dense: {})",
            sep.passed, dense.passed
        )));
    }
    let anchors: Vec<_> = set.points.iter().step_by((set.len() / 5).max(1)).cloned().collect();
    let epsilon = oscillation_epsilon(&space, u_radius, test_count, &anchors, seed)?;
    let (w_measure, u_measure) = (ball_measure(&grid, w_radius), ball_measure(&grid, u_radius));
    let bounds = FrameSystem::new(space, set)?.estimate_bounds()?;
    let hypothesis_met = epsilon < 1.0;
    let (a_pred, b_pred) = sampling_envelope(epsilon, w_measure, u_measure);
    let a_pred_linear = (1.0 - epsilon).powi(2) / u_measure;
    let b_pred_linear = (1.0 + epsilon).powi(2) / w_measure;
    let holds = hypothesis_met && bounds.lower >= a_pred - tolerance && bounds.upper <= b_pred + tolerance;
    let holds_linear =
        hypothesis_met && bounds.lower >= a_pred_linear - tolerance && bounds.upper <= b_pred_linear + tolerance;
    Ok(Theorem35Verdict {
        epsilon,
        w_radius,
        u_radius,
        w_measure,
        u_measure,
        hypothesis_met,
        bounds,
        a_pred,
        b_pred,
        a_pred_linear,
        b_pred_linear,
        holds,
        holds_linear,
        tolerance,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct QuasiBoundReport {
    /// `max (‖f − QR_Γ f‖₂ − ‖osc_U f‖₂)` over the test functions.
    pub max_excess: f64,
    pub functions: usize,
}

/// `‖f − Q R_Γ f‖₂ ≤ ‖osc_{B_U} f‖₂` on random space elements.
pub fn quasi_bound_check(
    space: &Arc<dyn Space>,
    set: &PointSet,
    partition: &Partition,
    count: usize,
    seed: u64,
) -> Result<QuasiBoundReport> {
    let functions = (0..count)
        .map(|k| {
            let f = space.random_element(seed.wrapping_add(k as u64))?;
            let osc = oscillation(&f, partition.u_radius)?.l2();
            Ok((f, osc))
        })
        .collect::<Result<Vec<_>>>()?;
    quasi_bound_check_with(set, partition, &functions)
}

/// Same check with `(f, ‖osc_U f‖₂)` pairs computed once and shared
/// across partitions with the same `U`.
pub fn quasi_bound_check_with(
    set: &PointSet,
    partition: &Partition,
    functions: &[(GridFunction, f64)],
) -> Result<QuasiBoundReport> {
    let mut max_excess = f64::NEG_INFINITY;
    for (f, osc) in functions {
        let samples: Vec<Complex64> = set.points.iter().map(|p| f.interpolate(p)).collect();
        let q = quasi_interpolate(&samples, partition, &f.grid)?;
        max_excess = max_excess.max(f.sub(&q)?.l2() - osc);
    }
    Ok(QuasiBoundReport { max_excess, functions: functions.len() })
}
