//! Projection onto finite intersections of smooth convex constraints.
//!
//! Members are written as `g_i(x) ≤ 0` (hyperplanes as `g_i(x) = 0`). Active
//! subsets are enumerated by size; for each subset the KKT system
//! `x − p + Σ μ_i ∇g_i(x) = 0, g_i(x) = 0` is solved by damped Newton. For a
//! convex problem any KKT point with `μ ≥ 0` is the projection, so the first
//! valid candidate is returned. Candidates close to the tolerance boundary are
//! cross-checked against Dykstra's algorithm.

use log::debug;

use crate::{Matrix, Vector};

use super::{ConvexSet, GeometryError};

/// Newton residual tolerance, relative to `1 + ‖p‖`.
pub const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX: usize = 100;
const MULT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-10;

/// `{x : g_i(x) ≤ 0}` for halfspaces, hyperplanes, balls and quadratic
/// epigraphs, with a validated Slater point.
#[derive(Clone, Debug, PartialEq)]
pub struct IntersectionSet {
    members: Vec<ConvexSet>,
    slater: Vector,
}

impl IntersectionSet {
    pub fn new(members: Vec<ConvexSet>, slater: Vector) -> Result<Self, GeometryError> {
        if members.is_empty() {
            return Err(GeometryError::InvalidSet("intersection needs members".into()));
        }
        let n = slater.len();
        for m in &members {
            match m {
                ConvexSet::Halfspace(_)
                | ConvexSet::Hyperplane(_)
                | ConvexSet::Ball(_)
                | ConvexSet::QuadEpigraph(_) => {}
                _ => {
                    return Err(GeometryError::InvalidSet(
                        "intersection members must be halfspace, hyperplane, ball or quad_epigraph"
                            .into(),
                    ))
                }
            }
            if m.dim() != n {
                return Err(GeometryError::DimensionMismatch { expected: n, got: m.dim() });
            }
        }
        let set = Self { members, slater };
        for m in &set.members {
            let ok = match m {
                ConvexSet::Hyperplane(h) => h.violation(&set.slater) <= FEAS_TOL * (1.0 + set.slater.norm()),
                _ => g(m, &set.slater) < 0.0,
            };
            if !ok {
                return Err(GeometryError::InvalidSet(
                    "slater point is not strictly feasible".into(),
                ));
            }
        }
        Ok(set)
    }

    pub fn members(&self) -> &[ConvexSet] {
        &self.members
    }

    pub fn slater(&self) -> &Vector {
        &self.slater
    }

    pub fn dim(&self) -> usize {
        self.slater.len()
    }

    pub fn violation(&self, p: &Vector) -> f64 {
        self.members.iter().map(|m| m.violation(p)).fold(0.0, f64::max)
    }

    pub fn translated(&self, v: &Vector) -> Self {
        Self {
            members: self.members.iter().map(|m| m.translated(v)).collect(),
            slater: &self.slater + v,
        }
    }
}

fn is_eq(m: &ConvexSet) -> bool {
    matches!(m, ConvexSet::Hyperplane(_))
}

pub(super) fn g(m: &ConvexSet, x: &Vector) -> f64 {
    match m {
        ConvexSet::Halfspace(h) => h.normal().dot(x) - h.offset(),
        ConvexSet::Hyperplane(h) => h.normal().dot(x) - h.offset(),
        ConvexSet::Ball(b) => 0.5 * ((x - b.center()).norm_squared() - b.radius() * b.radius()),
        ConvexSet::QuadEpigraph(e) => e.g(x),
        _ => unreachable!("validated at construction"),
    }
}

pub(super) fn grad(m: &ConvexSet, x: &Vector) -> Vector {
    match m {
        ConvexSet::Halfspace(h) => h.normal().clone(),
        ConvexSet::Hyperplane(h) => h.normal().clone(),
        ConvexSet::Ball(b) => x - b.center(),
        ConvexSet::QuadEpigraph(e) => e.gradient(x),
        _ => unreachable!("validated at construction"),
    }
}

fn add_hessian(m: &ConvexSet, mu: f64, h: &mut Matrix) {
    match m {
        ConvexSet::Ball(_) => {
            for i in 0..h.nrows() {
                h[(i, i)] += mu;
            }
        }
        ConvexSet::QuadEpigraph(e) => *h += e.hessian() * mu,
        _ => {}
    }
}

fn normalized_violation(m: &ConvexSet, x: &Vector) -> f64 {
    let v = g(m, x);
    if is_eq(m) {
        return v.abs() / grad(m, x).norm();
    }
    if v <= 0.0 {
        return 0.0;
    }
    v / grad(m, x).norm().max(1e-12)
}

struct Candidate {
    x: Vector,
    min_mult: f64,
    max_viol: f64,
}

fn residual(members: &[&ConvexSet], p: &Vector, x: &Vector, mu: &[f64]) -> Vector {
    let n = x.len();
    let mut r = Vector::zeros(n + members.len());
    let mut stat = x - p;
    for (m, &l) in members.iter().zip(mu) {
        stat += grad(m, x) * l;
    }
    r.rows_mut(0, n).copy_from(&stat);
    for (i, m) in members.iter().enumerate() {
        r[n + i] = g(m, x);
    }
    r
}

fn newton(members: &[&ConvexSet], p: &Vector, x0: &Vector) -> Option<(Vector, Vec<f64>)> {
    let n = p.len();
    let s = members.len();
    let tol = NEWTON_TOL * (1.0 + p.norm());
    let mut x = x0.clone();
    // least-squares multiplier guess from stationarity
    let mut mu = if s == 0 {
        Vec::new()
    } else {
        let mut gm = Matrix::zeros(n, s);
        for (j, m) in members.iter().enumerate() {
            gm.set_column(j, &grad(m, &x));
        }
        let svd = gm.svd(true, true);
        match svd.solve(&(p - &x), 1e-12) {
            Ok(v) => v.iter().copied().collect(),
            Err(_) => vec![0.0; s],
        }
    };
    let mut polish = 0;
    for _ in 0..NEWTON_MAX {
        let f = residual(members, p, &x, &mu);
        let fnorm = f.norm();
        if !fnorm.is_finite() {
            return None;
        }
        if fnorm <= tol {
            polish += 1;
            if polish > 2 || fnorm == 0.0 {
                return Some((x, mu));
            }
        }
        let mut j = Matrix::zeros(n + s, n + s);
        let mut h = Matrix::identity(n, n);
        for (m, &l) in members.iter().zip(&mu) {
            add_hessian(m, l, &mut h);
        }
        j.view_mut((0, 0), (n, n)).copy_from(&h);
        for (c, m) in members.iter().enumerate() {
            let gr = grad(m, &x);
            j.view_mut((0, n + c), (n, 1)).copy_from(&gr);
            j.view_mut((n + c, 0), (1, n)).copy_from(&gr.transpose());
        }
        let step = j.lu().solve(&(-&f))?;
        let mut alpha = 1.0;
        let mut accepted = false;
        while alpha > 1e-10 {
            let xt = &x + step.rows(0, n) * alpha;
            let mt: Vec<f64> = mu.iter().enumerate().map(|(i, l)| l + alpha * step[n + i]).collect();
            let ft = residual(members, p, &xt, &mt).norm();
            if ft < (1.0 - 1e-4 * alpha) * fnorm || (fnorm <= tol && ft <= fnorm) {
                x = xt;
                mu = mt;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            return if fnorm <= tol { Some((x, mu)) } else { None };
        }
    }
    let f = residual(members, p, &x, &mu);
    (f.norm() <= tol).then_some((x, mu))
}

fn subsets_by_size(m: usize, eqs: &[usize]) -> Vec<Vec<usize>> {
    let ineqs: Vec<usize> = (0..m).filter(|i| !eqs.contains(i)).collect();
    let mut out: Vec<Vec<usize>> = Vec::new();
    for mask in 0u32..(1u32 << ineqs.len()) {
        let mut s: Vec<usize> = eqs.to_vec();
        for (b, &i) in ineqs.iter().enumerate() {
            if mask & (1 << b) != 0 {
                s.push(i);
            }
        }
        s.sort_unstable();
        out.push(s);
    }
    out.sort_by_key(|s| s.len());
    out
}

fn evaluate(set: &IntersectionSet, p: &Vector, subset: &[usize]) -> Option<Candidate> {
    let members: Vec<&ConvexSet> = subset.iter().map(|&i| &set.members[i]).collect();
    let mut starts = vec![p.clone()];
    for m in &members {
        if let Ok(x) = m.project(p) {
            starts.push(x);
        }
    }
    starts.push(set.slater.clone());
    let mut best: Option<Candidate> = None;
    for x0 in starts {
        let Some((x, mu)) = newton(&members, p, &x0) else {
            continue;
        };
        let min_mult = members
            .iter()
            .zip(&mu)
            .filter(|(m, _)| !is_eq(m))
            .map(|(_, &l)| l / (1.0 + (p - &x).norm()))
            .fold(f64::INFINITY, f64::min);
        let max_viol = set
            .members
            .iter()
            .map(|m| normalized_violation(m, &x))
            .fold(0.0, f64::max)
            / (1.0 + x.norm());
        let cand = Candidate { x, min_mult, max_viol };
        if cand.min_mult >= -MULT_TOL && cand.max_viol <= FEAS_TOL {
            return Some(cand);
        }
        let score = |c: &Candidate| (-c.min_mult).max(0.0) + c.max_viol;
        if best.as_ref().is_none_or(|b| score(&cand) < score(b)) {
            best = Some(cand);
        }
    }
    best
}

pub(super) fn project(set: &IntersectionSet, p: &Vector) -> Result<Vector, GeometryError> {
    if set.violation(p) == 0.0 && set.members.iter().all(|m| !is_eq(m) || g(m, p) == 0.0) {
        return Ok(p.clone());
    }
    let eqs: Vec<usize> = (0..set.members.len()).filter(|&i| is_eq(&set.members[i])).collect();
    for subset in subsets_by_size(set.members.len(), &eqs) {
        let Some(c) = evaluate(set, p, &subset) else {
            continue;
        };
        if c.min_mult >= -MULT_TOL && c.max_viol <= FEAS_TOL {
            let marginal = c.min_mult < 0.0 || c.max_viol > 0.1 * FEAS_TOL;
            if marginal {
                let dyk = dykstra(&set.members, p)?;
                let gap = (&dyk - &c.x).norm();
                if gap > 1e-6 * (1.0 + p.norm()) {
                    return Err(GeometryError::NoKktCandidate(format!(
                        "marginal KKT candidate disagrees with Dykstra by {gap:e}"
                    )));
                }
            }
            return Ok(c.x);
        }
    }
    debug!("intersection projection: no KKT candidate for {p:?}");
    Err(GeometryError::NoKktCandidate(
        "no active subset produced a feasible point with nonnegative multipliers".into(),
    ))
}

/// Dykstra's algorithm for the projection onto `∩ sets`; used as a cross-check
/// and for intersections without a closed-form solver.
pub fn dykstra(sets: &[ConvexSet], p: &Vector) -> Result<Vector, GeometryError> {
    dykstra_limited(sets, p, 10_000)
}

/// [`dykstra`] with an explicit cap on the number of sweeps.
pub fn dykstra_limited(sets: &[ConvexSet], p: &Vector, max_sweeps: usize) -> Result<Vector, GeometryError> {
    let mut x = p.clone();
    let mut incr = vec![Vector::zeros(p.len()); sets.len()];
    for _ in 0..max_sweeps {
        let prev = x.clone();
        // The iterate can sit still for a sweep while the increments are
        // still moving, so both have to settle.
        let mut moved = 0.0;
        for (i, member) in sets.iter().enumerate() {
            let y = &x + &incr[i];
            let px = member.project(&y)?;
            let next = y - &px;
            moved += (&next - &incr[i]).norm();
            incr[i] = next;
            x = px;
        }
        let tol = 1e-15 * (1.0 + x.norm());
        if (&x - &prev).norm() <= tol && moved <= tol {
            break;
        }
    }
    Ok(x)
}
