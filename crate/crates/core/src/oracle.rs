//! Brute-force reference solvers used to check the exact machinery: grid
//! search with box refinement, projection onto polyhedra by enumerating
//! every active set, and LP by vertex enumeration.
//!
//! Nothing here shares code with the active-set QP or the KKT enumeration of
//! [`crate::geometry`] beyond set membership tests.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::apps::lp::LinearProgram;
use crate::geometry::{ConvexSet, Polyhedron};
use crate::{Matrix, Vector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("dimension {got} exceeds the oracle limit {limit}")]
    TooLarge { limit: usize, got: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no feasible grid point in the box")]
    NoFeasiblePoint,
    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),
    #[error("LP is infeasible")]
    Infeasible,
    #[error("LP is unbounded")]
    Unbounded,
    #[error("feasible region has no vertex")]
    NoVertex,
    #[error("grid refinement did not settle within its pass budget")]
    Unsettled,
}

/// Search box, points per axis and number of refinements.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    #[serde(rename = "box")]
    pub bounds: Vec<(f64, f64)>,
    pub resolution: usize,
    pub refinement_levels: usize,
}

impl GridSpec {
    /// The cube `[-half, half]^n`.
    pub fn cube(n: usize, half: f64, resolution: usize, refinement_levels: usize) -> Self {
        Self { bounds: vec![(-half, half); n], resolution, refinement_levels }
    }

    fn validate(&self, n: usize) -> Result<(), OracleError> {
        if self.bounds.len() != n {
            return Err(OracleError::DimensionMismatch { expected: n, got: self.bounds.len() });
        }
        if self.resolution < 3 {
            return Err(OracleError::InvalidGrid("resolution must be at least 3"));
        }
        if self.bounds.iter().any(|(lo, hi)| !(hi > lo) || !lo.is_finite() || !hi.is_finite()) {
            return Err(OracleError::InvalidGrid("each interval needs lo < hi"));
        }
        Ok(())
    }

    /// Points per axis, rounded up to an odd count so the centre is a node.
    fn nodes(&self) -> usize {
        self.resolution | 1
    }

    /// Largest box width after all refinements; the documented error bound.
    pub fn error_bound(&self) -> f64 {
        let w = self.bounds.iter().map(|(lo, hi)| hi - lo).fold(0.0, f64::max);
        w / 4f64.powi(self.refinement_levels as i32)
    }
}

/// Axis-aligned box as centre and half-widths.
#[derive(Clone)]
struct Cell {
    center: Vec<f64>,
    half: Vec<f64>,
}

impl Cell {
    fn from_bounds(b: &[(f64, f64)]) -> Self {
        Cell {
            center: b.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect(),
            half: b.iter().map(|(lo, hi)| 0.5 * (hi - lo)).collect(),
        }
    }

    fn spacing(&self, nodes: usize) -> Vec<f64> {
        self.half.iter().map(|h| 2.0 * h / (nodes - 1) as f64).collect()
    }

    fn point(&self, idx: &[usize], nodes: usize) -> Vector {
        let s = self.spacing(nodes);
        let mid = (nodes / 2) as f64;
        Vector::from_iterator(
            idx.len(),
            idx.iter().enumerate().map(|(i, &j)| self.center[i] + (j as f64 - mid) * s[i]),
        )
    }

    fn center_vec(&self) -> Vector {
        Vector::from_column_slice(&self.center)
    }

    /// Membership slack: half the cell diagonal.
    fn slack(&self, nodes: usize) -> f64 {
        0.5 * self.spacing(nodes).iter().map(|s| s * s).sum::<f64>().sqrt()
    }

    /// Within one node of the box boundary. The box-restricted optimum of a
    /// convex problem that is cut off by the box lies on the boundary, but
    /// its grid image may sit one node inside.
    fn on_edge(&self, idx: &[usize], nodes: usize) -> bool {
        idx.iter().any(|&j| j <= 1 || j >= nodes - 2)
    }

    /// Undoes one shrink after a level came up empty.
    fn expand(&mut self) {
        for h in &mut self.half {
            *h *= 4.0;
        }
    }

    fn scale(&mut self, factor: f64) {
        for h in &mut self.half {
            *h *= factor;
        }
    }

    /// Recentres on `p`; shrinks by 4 unless the incumbent sat on the edge.
    fn refine(&mut self, p: &Vector, shrink: bool) {
        self.center = p.iter().copied().collect();
        if shrink {
            for h in &mut self.half {
                *h /= 4.0;
            }
        }
    }
}

/// Odometer over `nodes^dim` multi-indices.
fn for_each_index(dim: usize, nodes: usize, mut f: impl FnMut(&[usize])) {
    let mut idx = vec![0usize; dim];
    loop {
        f(&idx);
        let mut i = 0;
        loop {
            if i == dim {
                return;
            }
            idx[i] += 1;
            if idx[i] < nodes {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

/// Lexicographic tie-break so results do not depend on scan order.
fn better(val: f64, p: &Vector, best: &Option<(f64, Vector)>) -> bool {
    match best {
        None => true,
        Some((bv, bp)) => {
            val < *bv
                || (val == *bv
                    && p.iter().zip(bp.iter()).find(|(a, b)| a != b).is_some_and(|(a, b)| a < b))
        }
    }
}

/// Grid search for the point of `set` nearest to `point`, with refinement.
///
/// A node counts as feasible when its constraint violation is at most half
/// the cell diagonal, so sets without interior (hyperplanes, affine
/// subspaces) are still found. The box is recentred on the incumbent and
/// shrunk by 4 per level; an incumbent within one node of the box edge
/// recentres and doubles the box instead, so a walk along a flat valley takes
/// growing steps. Running out of passes is an error rather than a silently
/// coarse answer.
pub fn brute_force_projection(set: &ConvexSet, point: &Vector, grid: &GridSpec) -> Result<Vector, OracleError> {
    let n = point.len();
    if n > 4 {
        return Err(OracleError::TooLarge { limit: 4, got: n });
    }
    if set.dim() != n {
        return Err(OracleError::DimensionMismatch { expected: set.dim(), got: n });
    }
    grid.validate(n)?;
    let nodes = grid.nodes();
    let mut cell = Cell::from_bounds(&grid.bounds);
    // Resolution in halvings of the initial box; a level is two of them.
    let mut halvings: usize = 0;
    let mut passes = 0;
    let mut best: Option<(f64, Vector)> = None;
    loop {
        if passes == max_passes(grid) {
            return Err(OracleError::Unsettled);
        }
        passes += 1;
        let slack = cell.slack(nodes);
        // Nodes that already meet the next level's slack are preferred: the
        // refined grid is centred on the incumbent, so it stays feasible.
        let mut strict: Vec<(f64, Vec<usize>)> = Vec::new();
        let mut loose: Vec<(f64, f64, Vec<usize>)> = Vec::new();
        for_each_index(n, nodes, |idx| {
            let p = cell.point(idx, nodes);
            let viol = set.violation(&p);
            if viol <= slack {
                let d = (&p - point).norm();
                if viol <= slack / 4.0 {
                    strict.push((d, idx.to_vec()));
                }
                loose.push((d, viol, idx.to_vec()));
            }
        });
        if loose.is_empty() {
            if best.is_none() {
                return Err(OracleError::NoFeasiblePoint);
            }
            cell.expand();
            halvings = halvings.saturating_sub(2);
            continue;
        }
        if strict.is_empty() {
            if halvings >= 2 * grid.refinement_levels {
                let (_, _, idx) = loose.iter().min_by(|a, b| a.0.total_cmp(&b.0)).expect("loose is non-empty");
                let p = cell.point(idx, nodes);
                best = Some(((&p - point).norm_squared(), p));
                break;
            }
            // Only barely feasible nodes: the refined grid around any of them
            // may be empty, so step towards the least violated one first.
            let mut pick: Option<(f64, Vector)> = None;
            for (_, viol, idx) in &loose {
                let p = cell.point(idx, nodes);
                if better(*viol, &p, &pick) {
                    pick = Some((*viol, p));
                }
            }
            let p = pick.expect("loose is non-empty").1;
            let moved = p != cell.center_vec();
            cell.refine(&p, !moved);
            if !moved {
                halvings += 2;
            }
            continue;
        }
        let nearest = |pool: &mut dyn Iterator<Item = &(f64, Vec<usize>)>| {
            let mut pick: Option<(f64, Vector)> = None;
            let mut at = vec![0; n];
            for (d, idx) in pool {
                let p = cell.point(idx, nodes);
                if better(*d, &p, &pick) {
                    pick = Some((*d, p));
                    at.copy_from_slice(idx);
                }
            }
            pick.map(|(_, p)| (p, at))
        };
        let (mut p, idx) = nearest(&mut strict.iter()).expect("strict is non-empty");
        let mut edge = cell.on_edge(&idx, nodes);
        if edge && halvings >= 8 {
            // Distances are only known up to the slack. Past the coarse levels
            // an interior node that close to the minimum is as good an answer,
            // and walking towards an edge tie would never settle on a flat
            // valley.
            let dmin = (&p - point).norm();
            let mut inner = strict.iter().filter(|c| c.0 <= dmin + slack && !cell.on_edge(&c.1, nodes));
            if let Some((q, _)) = nearest(&mut inner) {
                p = q;
                edge = false;
            }
        }
        let v = (&p - point).norm_squared();
        best = Some((v, p.clone()));
        if halvings >= 2 * grid.refinement_levels && !edge {
            break;
        }
        cell.refine(&p, !edge);
        if !edge {
            halvings += 2;
        } else if halvings > 0 {
            cell.scale(2.0);
            halvings -= 1;
        }
    }
    Ok(best.expect("at least one level ran").1)
}

/// Pass budget: every level may recentre several times before it shrinks.
fn max_passes(grid: &GridSpec) -> usize {
    32 * (grid.refinement_levels + 1)
}

/// Grid search for a pair `(x, y) ∈ X × Y` minimising `‖x − y‖`.
pub fn grid_best_pair(
    x_set: &ConvexSet,
    y_set: &ConvexSet,
    grid: &GridSpec,
) -> Result<(Vector, Vector, f64), OracleError> {
    let n = x_set.dim();
    if n > 3 {
        return Err(OracleError::TooLarge { limit: 3, got: n });
    }
    if y_set.dim() != n {
        return Err(OracleError::DimensionMismatch { expected: n, got: y_set.dim() });
    }
    grid.validate(n)?;
    let nodes = grid.nodes();
    let mut cx = Cell::from_bounds(&grid.bounds);
    let mut cy = cx.clone();
    let mut shrunk: usize = 0;
    let mut passes = 0;
    let mut best: Option<(Vector, Vector, f64)> = None;
    loop {
        if passes == max_passes(grid) {
            return Err(OracleError::Unsettled);
        }
        passes += 1;
        let xs = feasible_nodes(x_set, &cx, nodes);
        let ys = feasible_nodes(y_set, &cy, nodes);
        if xs.is_empty() || ys.is_empty() {
            if best.is_none() {
                return Err(OracleError::NoFeasiblePoint);
            }
            cx.expand();
            cy.expand();
            shrunk = shrunk.saturating_sub(1);
            continue;
        }
        let dists: Vec<Vec<f64>> =
            xs.iter().map(|(x, _)| ys.iter().map(|(y, _)| (x - y).norm()).collect()).collect();
        let dmin = dists.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        // Membership is only known up to the slack, so pairs within it of the
        // minimum are ties. Keeping the one nearest the current centres stops
        // the incumbent drifting along a flat valley.
        let window = dmin + cx.slack(nodes) + cy.slack(nodes);
        let mut level: Option<(f64, usize, usize)> = None;
        for (i, (x, _)) in xs.iter().enumerate() {
            let ox = (x - cx.center_vec()).norm();
            for (j, (y, _)) in ys.iter().enumerate() {
                if dists[i][j] > window {
                    continue;
                }
                let off = ox + (y - cy.center_vec()).norm();
                if level.as_ref().is_none_or(|l| off < l.0) {
                    level = Some((off, i, j));
                }
            }
        }
        let Some((_, i, j)) = level else {
            return best.ok_or(OracleError::NoFeasiblePoint);
        };
        let v = dists[i][j] * dists[i][j];
        let (x, ex) = &xs[i];
        let (y, ey) = &ys[j];
        best = Some((x.clone(), y.clone(), v.sqrt()));
        if shrunk == grid.refinement_levels {
            break;
        }
        let shrink = !ex && !ey;
        cx.refine(x, shrink);
        cy.refine(y, shrink);
        if shrink {
            shrunk += 1;
        }
    }
    Ok(best.expect("at least one level ran"))
}

/// Nodes within the next level's slack when there are any, else within
/// this level's slack; each flagged with whether it sits near the edge.
fn feasible_nodes(set: &ConvexSet, cell: &Cell, nodes: usize) -> Vec<(Vector, bool)> {
    let slack = cell.slack(nodes);
    let mut strict = Vec::new();
    let mut loose = Vec::new();
    for_each_index(cell.center.len(), nodes, |idx| {
        let p = cell.point(idx, nodes);
        let viol = set.violation(&p);
        if viol <= slack / 4.0 {
            strict.push((p.clone(), cell.on_edge(idx, nodes)));
        }
        if viol <= slack {
            loose.push((p, cell.on_edge(idx, nodes)));
        }
    });
    if strict.is_empty() { loose } else { strict }
}

/// Solves `M x = r` for square `M`, `None` when `M` is numerically singular.
fn solve_square(m: &Matrix, r: &Vector) -> Option<Vector> {
    let lu = m.clone().full_piv_lu();
    if !lu.is_invertible() {
        return None;
    }
    let x = lu.solve(r)?;
    let scale = m.amax().max(1.0) * (1.0 + x.amax());
    ((m * &x - r).amax() <= 1e-9 * scale).then_some(x)
}

/// All `k`-subsets of `0..m` in lexicographic order.
fn subsets(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            if m - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, m, k, cur, out);
            cur.pop();
        }
    }
    rec(0, m, k, &mut cur, &mut out);
    out
}

/// Exact projection onto a polyhedron by trying every subset of rows as the
/// active set; the nearest feasible candidate wins. Limited to 16 rows.
pub fn active_set_projection(poly: &Polyhedron, point: &Vector) -> Result<Vector, OracleError> {
    let rows = poly.rows();
    let m = rows.len();
    if m > 16 {
        return Err(OracleError::TooLarge { limit: 16, got: m });
    }
    if poly.dim() != point.len() {
        return Err(OracleError::DimensionMismatch { expected: poly.dim(), got: point.len() });
    }
    let feasible = |x: &Vector| {
        rows.iter().all(|h| h.normal().dot(x) - h.offset() <= 1e-9 * (1.0 + h.normal().norm() * x.norm()))
    };
    let mut best: Option<(f64, Vector)> = None;
    for mask in 0u32..(1 << m) {
        let active: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 1).collect();
        let x = if active.is_empty() {
            point.clone()
        } else {
            // x = p − Aᵀλ with A Aᵀ λ = A p − b, least squares when rank deficient
            let a = Matrix::from_fn(active.len(), point.len(), |i, j| rows[active[i]].normal()[j]);
            let rhs = Vector::from_iterator(
                active.len(),
                active.iter().map(|&i| rows[i].normal().dot(point) - rows[i].offset()),
            );
            let gram = &a * a.transpose();
            let Ok(lam) = gram.clone().svd(true, true).solve(&rhs, 1e-12) else {
                continue;
            };
            if (&gram * &lam - &rhs).amax() > 1e-9 * (1.0 + rhs.amax()) {
                continue;
            }
            point - a.transpose() * lam
        };
        if feasible(&x) {
            let v = (&x - point).norm_squared();
            if better(v, &x, &best) {
                best = Some((v, x));
            }
        }
    }
    best.map(|b| b.1).ok_or(OracleError::Infeasible)
}

/// LP by vertex enumeration: every `n`-subset of the constraints
/// (including sign constraints) is solved as a square system, feasible
/// solutions are compared, and a scan over rays of `n − 1` active
/// constraints detects unboundedness.
pub fn lp_vertex_solve(lp: &LinearProgram) -> Result<(Vector, f64), OracleError> {
    let n = lp.dim();
    let (g, h) = lp.constraint_matrix();
    let m = g.nrows();
    if n > 8 || m > 20 {
        return Err(OracleError::TooLarge { limit: if n > 8 { 8 } else { 20 }, got: n.max(m) });
    }
    let feasible = |x: &Vector| (0..m).all(|i| g.row(i).dot(&x.transpose()) - h[i] <= 1e-9 * (1.0 + h[i].abs()));
    let mut best: Option<(f64, Vector)> = None;
    for s in subsets(m, n) {
        let gs = Matrix::from_fn(n, n, |i, j| g[(s[i], j)]);
        let hs = Vector::from_iterator(n, s.iter().map(|&i| h[i]));
        if let Some(x) = solve_square(&gs, &hs) {
            if feasible(&x) {
                let v = lp.c.dot(&x);
                if better(v, &x, &best) {
                    best = Some((v, x));
                }
            }
        }
    }
    let Some((val, x)) = best else {
        return Err(if rank(&g) < n { OracleError::NoVertex } else { OracleError::Infeasible });
    };
    // extreme rays of {r : G r ≤ 0} have n − 1 active rows
    let ray_sets = if n == 1 { vec![vec![]] } else { subsets(m, n - 1) };
    for s in ray_sets {
        let gs = Matrix::from_fn(s.len(), n, |i, j| g[(s[i], j)]);
        let Some(r) = null_direction(&gs, n) else {
            continue;
        };
        for r in [r.clone(), -r] {
            let recedes = (0..m).all(|i| g.row(i).dot(&r.transpose()) <= 1e-12);
            if recedes && lp.c.dot(&r) < -1e-12 * lp.c.norm() {
                return Err(OracleError::Unbounded);
            }
        }
    }
    Ok((x, val))
}

fn rank(m: &Matrix) -> usize {
    if m.nrows() == 0 {
        return 0;
    }
    m.clone().svd(false, false).rank(1e-10 * m.amax().max(1.0))
}

/// Unit vector spanning the null space of `g` when it is one-dimensional.
fn null_direction(g: &Matrix, n: usize) -> Option<Vector> {
    if g.nrows() == 0 {
        return (n == 1).then(|| Vector::from_element(1, 1.0));
    }
    // pad to square so the SVD exposes the full right singular basis
    let mut sq = Matrix::zeros(n, n);
    sq.view_mut((0, 0), (g.nrows(), n)).copy_from(g);
    let svd = sq.svd(false, true);
    let vt = svd.v_t?;
    let tol = 1e-10 * g.amax().max(1.0);
    let zero: Vec<usize> = (0..n).filter(|&i| svd.singular_values[i] <= tol).collect();
    if zero.len() != 1 {
        return None;
    }
    Some(vt.row(zero[0]).transpose())
}
