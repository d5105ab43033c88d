//! `min ⟨c, x⟩` over `Ω = {x : Ax ≤ b, x_j ≥ 0 for signed j}` by alternating
//! projections between `Ω` and a hyperplane `{⟨c, x⟩ = L − ε}` placed below a
//! dual lower bound `L`.
//!
//! For `y ≥ 0` with `(Aᵀy + c)_j ≥ 0` on signed variables and `= 0` on free
//! ones, weak duality gives `⟨c, x⟩ ≥ −⟨b, y⟩ = L` on `Ω`. The hyperplane
//! then misses `Ω`, the points of `Ω` nearest to it are exactly the LP
//! minimisers, and MAP between a polyhedron and a hyperplane stops after
//! finitely many steps.

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{qp, ConvexSet, Halfspace, Hyperplane, Polyhedron};
use crate::solvers::{map_run, RunResult, StopCriteria};
use crate::{Matrix, Vector};

use super::AppError;

/// Dual feasibility tolerance.
const DUAL_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    pub c: Vector,
    pub a: Matrix,
    pub b: Vector,
    /// `true` for variables constrained to be nonnegative.
    pub sign: Vec<bool>,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vector,
    pub value: f64,
    /// Angle between `d = x̄ − P_H x̄` and `c`, in radians.
    pub angle: f64,
    pub run: RunResult,
}

impl LinearProgram {
    /// Checks shapes, `c ≠ 0` and that the feasible region is nonempty.
    pub fn new(c: Vector, a: Matrix, b: Vector, sign: Vec<bool>) -> Result<Self, AppError> {
        let n = c.len();
        if n == 0 || a.ncols() != n || a.nrows() != b.len() || sign.len() != n {
            return Err(AppError::Invalid("LP shapes do not agree".into()));
        }
        if c.norm() == 0.0 {
            return Err(AppError::Invalid("cost vector is zero".into()));
        }
        let lp = Self { c, a, b, sign };
        lp.feasible_set()?;
        Ok(lp)
    }

    /// All variables nonnegative.
    pub fn nonnegative(c: Vector, a: Matrix, b: Vector) -> Result<Self, AppError> {
        let n = c.len();
        Self::new(c, a, b, vec![true; n])
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    /// `(G, h)` with `Ω = {Gx ≤ h}`: the rows of `A` followed by `−x_j ≤ 0`.
    pub fn constraint_matrix(&self) -> (Matrix, Vector) {
        let n = self.dim();
        let signed: Vec<usize> = (0..n).filter(|&j| self.sign[j]).collect();
        let m = self.a.nrows();
        let mut g = Matrix::zeros(m + signed.len(), n);
        let mut h = Vector::zeros(m + signed.len());
        g.view_mut((0, 0), (m, n)).copy_from(&self.a);
        h.rows_mut(0, m).copy_from(&self.b);
        for (k, &j) in signed.iter().enumerate() {
            g[(m + k, j)] = -1.0;
        }
        (g, h)
    }

    /// `Ω` as a polyhedron; fails when it is empty.
    pub fn feasible_set(&self) -> Result<Polyhedron, AppError> {
        let (g, h) = self.constraint_matrix();
        let rows = (0..g.nrows())
            .filter(|&i| g.row(i).iter().any(|v| *v != 0.0) || h[i] < 0.0)
            .map(|i| Halfspace::new(g.row(i).transpose(), h[i]))
            .collect::<Result<Vec<_>, _>>()?;
        if rows.is_empty() {
            return Err(AppError::Invalid("LP has no constraints".into()));
        }
        Ok(Polyhedron::new(rows)?)
    }

    /// Reduced costs `Aᵀy + c`.
    fn reduced(&self, y: &Vector) -> Vector {
        self.a.transpose() * y + &self.c
    }

    /// Checks `y ≥ 0` and the sign conditions on `Aᵀy + c`.
    pub fn check_dual(&self, y: &Vector) -> Result<(), AppError> {
        if y.len() != self.a.nrows() {
            return Err(AppError::DualInfeasible(format!("expected {} entries", self.a.nrows())));
        }
        let scale = 1.0 + self.c.amax() + self.a.amax() * y.amax();
        if let Some(i) = (0..y.len()).find(|&i| y[i] < -DUAL_TOL * scale) {
            return Err(AppError::DualInfeasible(format!("y[{i}] < 0")));
        }
        let r = self.reduced(y);
        for j in 0..self.dim() {
            let bad = if self.sign[j] { r[j] < -DUAL_TOL * scale } else { r[j].abs() > DUAL_TOL * scale };
            if bad {
                return Err(AppError::DualInfeasible(format!("reduced cost {j} is {:e}", r[j])));
            }
        }
        Ok(())
    }

    /// Weak-duality lower bound `−⟨b, y⟩`.
    pub fn lower_bound(&self, y: &Vector) -> f64 {
        -self.b.dot(y)
    }
}

/// Runs MAP between `Ω` and `H = {⟨c, x⟩ = L − ε}` and reads off the
/// minimiser. `H` is represented through `x̂ = (L − ε)/‖c‖² · c`.
pub fn lp_solve_via_map(
    lp: &LinearProgram,
    dual_point: &Vector,
    eps: f64,
    x0: &Vector,
    stop: &StopCriteria,
) -> Result<LpSolution, AppError> {
    if !(eps > 0.0) {
        return Err(AppError::Invalid("eps must be positive".into()));
    }
    lp.check_dual(dual_point)?;
    let level = lp.lower_bound(dual_point) - eps;
    let x_hat = &lp.c * (level / lp.c.norm_squared());
    let omega: ConvexSet = lp.feasible_set()?.into();
    let h: ConvexSet = Hyperplane::new(lp.c.clone(), lp.c.dot(&x_hat))?.into();
    let run = map_run(&omega, &h, x0, stop)?;
    if !run.status.is_finite() {
        warn!("MAP on the LP ended with {:?} instead of finite termination", run.status);
    }
    let x = run.final_iterate.clone();
    let d = &x - h.project(&x)?;
    let angle = unit_angle(&d, &lp.c);
    if !(angle <= 1e-8) {
        return Err(AppError::Misaligned(angle));
    }
    Ok(LpSolution { value: lp.c.dot(&x), x, angle, run })
}

/// Angle between two vectors via `2 atan2(‖u − v‖, ‖u + v‖)` on the unit
/// vectors; `acos` loses everything below about 1e-8.
fn unit_angle(a: &Vector, b: &Vector) -> f64 {
    let u = a / a.norm();
    let v = b / b.norm();
    2.0 * (&u - &v).norm().atan2((&u + &v).norm())
}

/// Seeded random LP with all variables nonnegative, together with a dual
/// feasible point.
///
/// A nonnegative `x_f` and slack make `Ω` nonempty; `c = s − Aᵀy` with
/// `y, s ≥ 0` makes `y` dual feasible, so the LP is bounded below.
pub fn random_lp(seed: u64, n: usize, m: usize) -> (LinearProgram, Vector) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let a = Matrix::from_fn(m, n, |_, _| rng.gen_range(-2.0..2.0));
        let xf = Vector::from_fn(n, |_, _| rng.gen_range(0.0..2.0));
        let slack = Vector::from_fn(m, |_, _| rng.gen_range(0.0..1.0));
        let b = &a * &xf + slack;
        let y = Vector::from_fn(m, |_, _| rng.gen_range(0.0..1.0));
        let s = Vector::from_fn(n, |_, _| rng.gen_range(0.0..1.0));
        let c = s - a.transpose() * &y;
        if c.norm() < 1e-3 || (0..m).any(|i| a.row(i).norm() < 1e-3) {
            continue;
        }
        if let Ok(lp) = LinearProgram::nonnegative(c, a, b) {
            return (lp, y);
        }
    }
}

/// Whether `x` satisfies the LP constraints up to `tol`.
pub fn lp_feasible(lp: &LinearProgram, x: &Vector, tol: f64) -> bool {
    let (g, h) = lp.constraint_matrix();
    let sys = qp::LinearSystem {
        eq: vec![],
        ineq: (0..g.nrows()).map(|i| (g.row(i).transpose(), h[i])).collect(),
    };
    sys.violation(x) <= tol
}
