//! Exact projection onto polyhedra given in H-representation.
//!
//! Solves `min ½‖x − p‖²` subject to `⟨a_j, x⟩ = b_j` and `⟨a_i, x⟩ ≤ b_i`
//! with a dual active-set method (Goldfarb–Idnani specialised to the identity
//! Hessian). The unconstrained minimiser `p` is dual feasible, so no phase-one
//! point is needed and an empty feasible set is detected when no step length
//! exists. The final iterate is recomputed from the active set alone, which
//! makes vertex solutions independent of `p`, and the KKT conditions are
//! verified before returning.

use nalgebra::DMatrix;

use super::GeometryError;
use crate::Vector;

/// Multiplier tolerance applied at exit.
pub const KKT_TOL: f64 = 1e-10;

/// Linear constraint data of a polyhedral set.
#[derive(Clone, Debug, Default)]
pub struct LinearSystem {
    pub eq: Vec<(Vector, f64)>,
    pub ineq: Vec<(Vector, f64)>,
}

impl LinearSystem {
    pub fn dim(&self) -> Option<usize> {
        self.eq
            .first()
            .or_else(|| self.ineq.first())
            .map(|(a, _)| a.len())
    }

    pub fn len(&self) -> usize {
        self.eq.len() + self.ineq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn extend(&mut self, other: LinearSystem) {
        self.eq.extend(other.eq);
        self.ineq.extend(other.ineq);
    }

    /// Largest normalised violation over all rows.
    pub fn violation(&self, x: &Vector) -> f64 {
        let eq = self
            .eq
            .iter()
            .map(|(a, b)| (a.dot(x) - b).abs() / a.norm());
        let ineq = self
            .ineq
            .iter()
            .map(|(a, b)| ((a.dot(x) - b) / a.norm()).max(0.0));
        eq.chain(ineq).fold(0.0, f64::max)
    }
}

/// Projection together with its active set.
#[derive(Clone, Debug)]
pub struct QpSolution {
    pub x: Vector,
    /// Indices of active rows; equalities come first (`0..eq.len()`), then
    /// inequalities offset by `eq.len()`.
    pub active: Vec<usize>,
    /// Multipliers in the orientation the rows were stored in.
    pub multipliers: Vec<f64>,
}

struct Active {
    row: usize,
    normal: Vector,
    rhs: f64,
    lambda: f64,
    is_eq: bool,
    /// -1 when an equality row entered with flipped orientation.
    sign: f64,
}

fn feas_tol(a: &Vector, b: f64, x: &Vector) -> f64 {
    1e-13 * (1.0 + x.norm() + b.abs() / a.norm())
}

/// Orthonormal basis of the active normals via thin QR.
fn active_matrix(active: &[Active], n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, active.len());
    for (j, act) in active.iter().enumerate() {
        m.set_column(j, &act.normal);
    }
    m
}

/// Decomposes `a = z + N r` with `z ⊥ span(N)`.
fn split(active: &[Active], a: &Vector) -> (Vector, Vec<f64>) {
    if active.is_empty() {
        return (a.clone(), Vec::new());
    }
    let n = a.len();
    let nm = active_matrix(active, n);
    let qr = nm.clone().qr();
    let q = qr.q();
    let r = qr.r();
    let qta = q.transpose() * a;
    let coeffs = r
        .solve_upper_triangular(&qta)
        .unwrap_or_else(|| Vector::zeros(active.len()));
    let z = a - &q * &qta;
    (z, coeffs.iter().copied().collect())
}

/// Projects `p` onto `{x : eq rows hold, ineq rows hold}`.
pub fn project(sys: &LinearSystem, p: &Vector) -> Result<QpSolution, GeometryError> {
    let n = p.len();
    if let Some(d) = sys.dim() {
        if d != n {
            return Err(GeometryError::DimensionMismatch { expected: d, got: n });
        }
    }
    let m = sys.len();
    let cap = 4usize.checked_pow(m as u32).unwrap_or(usize::MAX).clamp(64, 200_000);
    let mut pivots = 0usize;
    let mut x = p.clone();
    let mut active: Vec<Active> = Vec::new();

    let n_eq = sys.eq.len();
    let mut pending_eq: Vec<usize> = (0..n_eq).collect();

    loop {
        // Equalities first, in order; afterwards the most violated inequality.
        let next = if let Some(j) = pending_eq.first().copied() {
            pending_eq.remove(0);
            let (a, b) = &sys.eq[j];
            let v = a.dot(&x) - b;
            let sign = if v < 0.0 { -1.0 } else { 1.0 };
            Some((j, a * sign, b * sign, true, sign))
        } else {
            let mut best: Option<(usize, f64)> = None;
            for (i, (a, b)) in sys.ineq.iter().enumerate() {
                let row = n_eq + i;
                if active.iter().any(|act| act.row == row) {
                    continue;
                }
                let v = a.dot(&x) - b;
                if v > feas_tol(a, *b, &x) {
                    let scaled = v / a.norm();
                    if best.is_none_or(|(_, s)| scaled > s) {
                        best = Some((i, scaled));
                    }
                }
            }
            best.map(|(i, _)| {
                let (a, b) = &sys.ineq[i];
                (n_eq + i, a.clone(), *b, false, 1.0)
            })
        };
        let Some((row, a, b, is_eq, sign)) = next else {
            break;
        };

        let mut lambda_new = 0.0;
        loop {
            pivots += 1;
            if pivots > cap {
                return Err(GeometryError::DegenerateKkt(format!(
                    "active-set pivot guard exceeded ({cap} pivots)"
                )));
            }
            let (z, r) = split(&active, &a);
            let z2 = z.norm_squared();
            let viol = a.dot(&x) - b;
            let dependent = z2 <= 1e-24 * a.norm_squared().max(1.0);

            if is_eq && dependent && viol.abs() <= feas_tol(&a, b, &x) * 10.0 {
                // redundant equality row
                break;
            }
            if !is_eq && viol <= 0.0 && lambda_new == 0.0 {
                break;
            }

            let mut t1 = f64::INFINITY;
            let mut block = None;
            for (j, act) in active.iter().enumerate() {
                if !act.is_eq && r[j] > 1e-14 {
                    let t = act.lambda / r[j];
                    if t < t1 {
                        t1 = t;
                        block = Some(j);
                    }
                }
            }
            let t2 = if dependent { f64::INFINITY } else { (viol / z2).max(0.0) };
            if !t1.is_finite() && !t2.is_finite() {
                return Err(GeometryError::EmptySet);
            }
            let t = t1.min(t2);
            if t > 0.0 && !dependent {
                x -= &z * t;
            }
            for (j, act) in active.iter_mut().enumerate() {
                act.lambda -= t * r[j];
            }
            lambda_new += t;
            if t2 <= t1 {
                active.push(Active {
                    row,
                    normal: a.clone(),
                    rhs: b,
                    lambda: lambda_new,
                    is_eq,
                    sign,
                });
                break;
            }
            let k = block.expect("finite partial step has a blocking row");
            active.remove(k);
        }
    }

    // Recompute the iterate from the active set alone.
    let polished = polish(&active, p);
    let candidates = [polished, Some((x.clone(), active.iter().map(|a| a.lambda).collect()))];
    for cand in candidates.into_iter().flatten() {
        let (xc, lambdas) = cand;
        if verify(sys, &active, &xc, &lambdas, p) {
            return Ok(QpSolution {
                x: xc,
                active: active.iter().map(|a| a.row).collect(),
                multipliers: active
                    .iter()
                    .zip(&lambdas)
                    .map(|(a, l)| l * a.sign)
                    .collect(),
            });
        }
    }
    Err(GeometryError::DegenerateKkt(
        "KKT verification failed at active-set exit".into(),
    ))
}

fn polish(active: &[Active], p: &Vector) -> Option<(Vector, Vec<f64>)> {
    let n = p.len();
    if active.is_empty() {
        return Some((p.clone(), Vec::new()));
    }
    let nm = active_matrix(active, n);
    let rhs = Vector::from_iterator(active.len(), active.iter().map(|a| a.rhs));
    let x = if active.len() == n {
        nm.transpose().lu().solve(&rhs)?
    } else {
        let qr = nm.clone().qr();
        let q = qr.q();
        let r = qr.r();
        let c = r.transpose().solve_lower_triangular(&rhs)?;
        p - &q * (q.transpose() * p - c)
    };
    // multipliers from p - x = N λ
    let qr = nm.qr();
    let lam = qr.r().solve_upper_triangular(&(qr.q().transpose() * (p - &x)))?;
    Some((x, lam.iter().copied().collect()))
}

fn verify(sys: &LinearSystem, active: &[Active], x: &Vector, lambdas: &[f64], p: &Vector) -> bool {
    if !x.iter().all(|v| v.is_finite()) {
        return false;
    }
    let scale = 1.0 + x.norm() + p.norm();
    if sys.violation(x) > 1e-10 * scale {
        return false;
    }
    let lscale = 1.0 + (p - x).norm();
    active
        .iter()
        .zip(lambdas)
        .all(|(a, l)| a.is_eq || *l >= -KKT_TOL * lscale)
}
