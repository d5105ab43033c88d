//! Iteration drivers: alternating projections (MAP), cyclic projections,
//! Cimmino averaging and Douglas–Rachford, all recording a full trace.
//!
//! Finite termination is read off the trace. A step counts as zero when
//! `‖x^k − x^{k−1}‖ ≤ min(fix_tol, 64ε) · max(‖x^k‖, ‖x^{k−1}‖)`, i.e. the
//! iterate stopped moving at machine precision; `stall_window` such steps in
//! a row give `FiniteTermination(k̄)` with `k̄` the last index before the run
//! of zero steps. Steps below `fix_tol` (relative) that are not machine-zero
//! indicate asymptotic convergence and give `ConvergedToTol` once
//! `stall_window` of them have accumulated in a row.

use log::debug;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    block_average, tile, ConvexSet, DiagonalSubspace, GeometryError, ProductSet,
};
use crate::{robust_norm, Vector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("need at least {0} sets")]
    TooFewSets(usize),
    #[error("trace is empty")]
    EmptyTrace,
    #[error("no cycle detected ({0:?})")]
    NoCycle(Status),
    #[error("cycle check failed at index {0}")]
    CycleCheck(usize),
    #[error("invalid stop criteria: {0}")]
    InvalidStop(&'static str),
}

fn default_max_iter() -> usize {
    1000
}
fn default_fix_tol() -> f64 {
    1e-12
}
fn default_divergence_norm() -> f64 {
    1e8
}
fn default_stall_window() -> usize {
    5
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StopCriteria {
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_fix_tol")]
    pub fix_tol: f64,
    #[serde(default = "default_divergence_norm")]
    pub divergence_norm: f64,
    #[serde(default = "default_stall_window")]
    pub stall_window: usize,
}

impl Default for StopCriteria {
    fn default() -> Self {
        Self {
            max_iter: default_max_iter(),
            fix_tol: default_fix_tol(),
            divergence_norm: default_divergence_norm(),
            stall_window: default_stall_window(),
        }
    }
}

impl StopCriteria {
    pub fn with_max_iter(max_iter: usize) -> Self {
        Self { max_iter, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if self.max_iter < 1 {
            return Err(SolverError::InvalidStop("max_iter must be at least 1"));
        }
        if !(self.fix_tol > 0.0) {
            return Err(SolverError::InvalidStop("fix_tol must be positive"));
        }
        if self.stall_window < 1 {
            return Err(SolverError::InvalidStop("stall_window must be at least 1"));
        }
        Ok(())
    }

    fn machine_tol(&self) -> f64 {
        self.fix_tol.min(64.0 * f64::EPSILON)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Status {
    FiniteTermination { k_bar: usize },
    ConvergedToTol,
    Diverged,
    MaxIterReached,
}

impl Status {
    pub fn is_finite(&self) -> bool {
        matches!(self, Status::FiniteTermination { .. })
    }

    pub fn converged(&self) -> bool {
        matches!(self, Status::FiniteTermination { .. } | Status::ConvergedToTol)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: usize,
    #[serde(with = "crate::vecser")]
    pub iterate: Vector,
    pub dist_to_x: f64,
    pub dist_to_y: f64,
    pub step_norm: f64,
    #[serde(with = "crate::vecser")]
    pub displacement_estimate: Vector,
    /// Shadow sequence (DR: `P_X z`; Cimmino: `P_{X1}P_{X2}P_{X1} z`).
    #[serde(default, with = "crate::vecser::option", skip_serializing_if = "Option::is_none")]
    pub shadow: Option<Vector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shadow_step: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub records: Vec<TraceRecord>,
}

impl IterationTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn iterates(&self) -> impl Iterator<Item = &Vector> {
        self.records.iter().map(|r| &r.iterate)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub status: Status,
    pub final_iterate: Vector,
    pub trace: IterationTrace,
    pub best_pair: Option<(Vector, Vector)>,
    /// Status of the shadow sequence, when the method has one and it settled.
    pub shadow_status: Option<Status>,
}

impl RunResult {
    pub fn iterations(&self) -> usize {
        self.trace.len().saturating_sub(1)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cycle {
    pub points: Vec<Vector>,
}

/// Streak bookkeeping for the zero-step rules.
#[derive(Default)]
struct Streaks {
    machine: usize,
    tol: usize,
}

impl Streaks {
    /// Feeds step `k ≥ 1`; returns a status once one is decided.
    fn feed(&mut self, k: usize, step: f64, scale: f64, stop: &StopCriteria) -> Option<Status> {
        if step <= stop.machine_tol() * scale {
            self.machine += 1;
            self.tol = 0;
        } else if step <= stop.fix_tol * scale {
            self.machine = 0;
            self.tol += 1;
        } else {
            self.machine = 0;
            self.tol = 0;
        }
        if self.machine >= stop.stall_window {
            Some(Status::FiniteTermination { k_bar: k - stop.stall_window })
        } else if self.tol >= stop.stall_window {
            Some(Status::ConvergedToTol)
        } else {
            None
        }
    }
}

/// Returns the first `k̄` after which the trace shows `stall_window`
/// consecutive machine-zero steps.
pub fn detect_finite_termination(trace: &IterationTrace, stop: &StopCriteria) -> Option<usize> {
    let mut streak = 0usize;
    for w in trace.records.windows(2) {
        let scale = robust_norm(&w[0].iterate).max(robust_norm(&w[1].iterate));
        if w[1].step_norm <= stop.machine_tol() * scale {
            streak += 1;
            if streak >= stop.stall_window {
                return Some(w[1].k - stop.stall_window);
            }
        } else {
            streak = 0;
        }
    }
    None
}

/// The last recorded displacement estimate.
pub fn displacement_estimate(trace: &IterationTrace) -> Result<Vector, SolverError> {
    trace
        .last()
        .map(|r| r.displacement_estimate.clone())
        .ok_or(SolverError::EmptyTrace)
}

struct Eval {
    dist_x: f64,
    dist_y: f64,
    displacement: Vector,
    shadow: Option<Vector>,
    next: Vector,
}

/// Detects `z^{k+1} − z^k` settling at a constant nonzero vector.
#[derive(Default)]
struct Drift {
    prev: Option<Vector>,
    streak: usize,
}

impl Drift {
    fn feed(&mut self, delta: &Vector, z: &Vector, stop: &StopCriteria) -> bool {
        let dn = delta.norm();
        let moving = dn > 1e-6 * z.norm().max(1.0);
        let constant = self.prev.as_ref().is_some_and(|p| {
            (delta - p).norm() <= 1e-9 * dn + 64.0 * f64::EPSILON * z.norm()
        });
        self.streak = if moving && constant { self.streak + 1 } else { 0 };
        self.prev = Some(delta.clone());
        self.streak >= stop.stall_window
    }
}

fn drive(
    x0: &Vector,
    stop: &StopCriteria,
    track_drift: bool,
    mut eval: impl FnMut(&Vector) -> Result<Eval, GeometryError>,
) -> Result<(RunResult, Option<Eval>), SolverError> {
    stop.validate()?;
    let mut records = Vec::new();
    let mut x = x0.clone();
    let mut prev: Option<Vector> = None;
    let mut prev_shadow: Option<Vector> = None;
    let mut main = Streaks::default();
    let mut shadow = Streaks::default();
    let mut drift = Drift::default();
    let mut status: Option<Status> = None;
    let mut shadow_status: Option<Status> = None;
    let mut last_eval = None;

    for k in 0..=stop.max_iter {
        let e = eval(&x)?;
        let step = prev.as_ref().map_or(0.0, |p| robust_norm(&(&x - p)));
        let shadow_step = match (&e.shadow, &prev_shadow) {
            (Some(s), Some(ps)) => Some(robust_norm(&(s - ps))),
            (Some(_), None) => Some(0.0),
            _ => None,
        };
        records.push(TraceRecord {
            k,
            iterate: x.clone(),
            dist_to_x: e.dist_x,
            dist_to_y: e.dist_y,
            step_norm: step,
            displacement_estimate: e.displacement.clone(),
            shadow: e.shadow.clone(),
            shadow_step,
        });

        if x.norm() >= stop.divergence_norm {
            status = Some(Status::Diverged);
        }
        if k >= 1 {
            let p = prev.as_ref().unwrap();
            if status.is_none() {
                let scale = robust_norm(&x).max(robust_norm(p));
                status = main.feed(k, step, scale, stop);
                if status.is_none() && track_drift && drift.feed(&(&x - p), &x, stop) {
                    debug!("increments constant from k = {k}: governing sequence diverges");
                    status = Some(Status::Diverged);
                }
            }
            if shadow_status.is_none() {
                if let (Some(s), Some(ps)) = (&e.shadow, &prev_shadow) {
                    let scale = robust_norm(s).max(robust_norm(ps));
                    shadow_status = shadow.feed(k, shadow_step.unwrap(), scale, stop);
                }
            }
        }
        let settled = match status {
            Some(Status::Diverged) => true,
            Some(_) if track_drift => shadow_status.is_some() || e.shadow.is_none(),
            Some(_) => true,
            None => false,
        };
        let done = settled || k == stop.max_iter;
        if done {
            last_eval = Some(e);
            break;
        }
        prev_shadow = e.shadow.clone();
        prev = Some(std::mem::replace(&mut x, e.next));
    }
    let status = status.unwrap_or(Status::MaxIterReached);
    Ok((
        RunResult {
            status,
            final_iterate: x,
            trace: IterationTrace { records },
            best_pair: None,
            shadow_status,
        },
        last_eval,
    ))
}

fn check_dims(sets: &[&ConvexSet], x0: &Vector) -> Result<(), SolverError> {
    for s in sets {
        if s.dim() != x0.len() {
            return Err(SolverError::DimensionMismatch { expected: s.dim(), got: x0.len() });
        }
    }
    Ok(())
}

/// Alternating projections `x^{k+1} = P_X P_Y(x^k)`.
pub fn map_run(
    x_set: &ConvexSet,
    y_set: &ConvexSet,
    x0: &Vector,
    stop: &StopCriteria,
) -> Result<RunResult, SolverError> {
    check_dims(&[x_set, y_set], x0)?;
    let (mut res, _) = drive(x0, stop, false, |x| {
        let py = y_set.project(x)?;
        let px = x_set.project(x)?;
        let next = x_set.project(&py)?;
        Ok(Eval {
            dist_x: (x - px).norm(),
            dist_y: (x - &py).norm(),
            displacement: x - &py,
            shadow: None,
            next,
        })
    })?;
    if res.status.converged() {
        let xb = res.final_iterate.clone();
        let yb = y_set.project(&xb)?;
        res.best_pair = Some((xb, yb));
    }
    Ok(res)
}

/// Cyclic projections `x^{k+1} = P_{X1} P_{X2} ⋯ P_{Xm}(x^k)`; `P_{Xm}` acts first.
pub fn cyclic_run(
    sets: &[ConvexSet],
    x0: &Vector,
    stop: &StopCriteria,
) -> Result<(RunResult, Cycle), SolverError> {
    let mut res = cyclic_iterate(sets, x0, stop)?;
    if !res.status.converged() {
        return Err(SolverError::NoCycle(res.status));
    }
    let cycle = extract_cycle(sets, &res.final_iterate, stop)?;
    res.best_pair = Some((cycle.points[0].clone(), cycle.points[1].clone()));
    Ok((res, cycle))
}

/// The cyclic iteration alone, without cycle extraction.
pub fn cyclic_iterate(sets: &[ConvexSet], x0: &Vector, stop: &StopCriteria) -> Result<RunResult, SolverError> {
    if sets.len() < 2 {
        return Err(SolverError::TooFewSets(2));
    }
    check_dims(&sets.iter().collect::<Vec<_>>(), x0)?;
    let sweep = |x: &Vector| -> Result<Vec<Vector>, GeometryError> {
        // chain[i] = P_{X_i} ⋯ P_{Xm}(x)
        let mut chain = vec![Vector::zeros(0); sets.len()];
        let mut cur = x.clone();
        for i in (0..sets.len()).rev() {
            cur = sets[i].project(&cur)?;
            chain[i] = cur.clone();
        }
        Ok(chain)
    };
    let (res, _) = drive(x0, stop, false, |x| {
        let chain = sweep(x)?;
        let last = chain[sets.len() - 1].clone();
        Ok(Eval {
            dist_x: sets[0].distance(x)?,
            dist_y: sets[1].distance(x)?,
            displacement: x - &last,
            shadow: None,
            next: chain[0].clone(),
        })
    })?;
    Ok(res)
}

/// Chains projections back from a fixed point of the cyclic operator and
/// checks `points[i] = P_{X_i}(points[i+1 mod m])`.
pub fn extract_cycle(sets: &[ConvexSet], fixed: &Vector, stop: &StopCriteria) -> Result<Cycle, SolverError> {
    let m = sets.len();
    let mut points = vec![Vector::zeros(0); m];
    let mut cur = fixed.clone();
    for i in (1..m).rev() {
        cur = sets[i].project(&cur)?;
        points[i] = cur.clone();
    }
    points[0] = sets[0].project(&cur)?;
    for i in 0..m {
        let next = &points[(i + 1) % m];
        let img = sets[i].project(next)?;
        let tol = stop.fix_tol.max(1e-10) * (1.0 + img.norm());
        if (&img - &points[i]).norm() > tol {
            return Err(SolverError::CycleCheck(i));
        }
    }
    Ok(Cycle { points })
}

/// Cimmino `C(z) = (1/m) Σ P_{Xi}(z)`.
pub fn cimmino_run(sets: &[ConvexSet], x0: &Vector, stop: &StopCriteria) -> Result<RunResult, SolverError> {
    if sets.len() < 2 {
        return Err(SolverError::TooFewSets(2));
    }
    check_dims(&sets.iter().collect::<Vec<_>>(), x0)?;
    let (mut res, last) = drive(x0, stop, false, |z| {
        let parts = sets.iter().map(|s| s.project(z)).collect::<Result<Vec<_>, _>>()?;
        let p1 = &parts[0];
        let shadow = sets[0].project(&sets[1].project(p1)?)?;
        Ok(Eval {
            dist_x: (z - &parts[0]).norm(),
            dist_y: (z - &parts[1]).norm(),
            displacement: &parts[0] - &parts[1],
            shadow: Some(shadow),
            next: block_average(&parts),
        })
    })?;
    if let Some(e) = last {
        res.best_pair = e.shadow.map(|s| {
            let y = sets[1].project(&s).unwrap_or_else(|_| s.clone());
            (s, y)
        });
    }
    Ok(res)
}

/// Douglas–Rachford `z^{k+1} = ½(z^k + R_Y R_X z^k)` with shadow `P_X z^k`.
pub fn dr_run(
    x_set: &ConvexSet,
    y_set: &ConvexSet,
    z0: &Vector,
    stop: &StopCriteria,
) -> Result<RunResult, SolverError> {
    check_dims(&[x_set, y_set], z0)?;
    let (mut res, last) = drive(z0, stop, true, |z| {
        let s = x_set.project(z)?;
        let rx = &s * 2.0 - z;
        let ry = y_set.reflect(&rx)?;
        let ps = y_set.project(&s)?;
        Ok(Eval {
            dist_x: (z - &s).norm(),
            dist_y: y_set.distance(z)?,
            displacement: &s - &ps,
            shadow: Some(s),
            next: (z + ry) * 0.5,
        })
    })?;
    if let Some(e) = last {
        if let Some(s) = e.shadow {
            let y = y_set.project(&s)?;
            res.best_pair = Some((s, y));
        }
    }
    Ok(res)
}

/// Product-space pair `(X1 × ⋯ × Xm, D)`; MAP with the diagonal applied last
/// reproduces Cimmino.
pub fn pierra_lift(sets: &[ConvexSet]) -> Result<(ProductSet, DiagonalSubspace), SolverError> {
    if sets.len() < 2 {
        return Err(SolverError::TooFewSets(2));
    }
    let product = ProductSet::new(sets.to_vec())?;
    let diag = DiagonalSubspace::new(sets.len(), product.block())?;
    Ok((product, diag))
}

/// Lifts a point of ℝⁿ to the diagonal of ℝ^{mn}.
pub fn diagonal_point(z: &Vector, copies: usize) -> Vector {
    tile(z, copies)
}
