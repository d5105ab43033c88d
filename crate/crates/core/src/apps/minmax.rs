//! `min_x g(x) = max_i f_i(x)` through the epigraph: with `β < g*`, MAP
//! between `epi g` and `H_β = {(x, β)}` converges to `(x*, g(x*))`, since the
//! points of `epi g` nearest to `H_β` are the lowest ones.

use crate::geometry::{
    ConvexSet, Halfspace, Hyperplane, IntersectionSet, Polyhedron, QuadraticEpigraph,
};
use crate::oracle::lp_vertex_solve;
use crate::solvers::{map_run, RunResult, StopCriteria};
use crate::{Matrix, Vector};

use super::lp::LinearProgram;
use super::AppError;

/// `f(x) = ½⟨x, Qx⟩ + ⟨a, x⟩ + b`; affine when `quad` is `None`.
#[derive(Clone, Debug, PartialEq)]
pub struct Piece {
    pub quad: Option<Matrix>,
    pub lin: Vector,
    pub constant: f64,
}

impl Piece {
    pub fn affine(lin: Vector, constant: f64) -> Self {
        Self { quad: None, lin, constant }
    }

    pub fn quadratic(quad: Matrix, lin: Vector, constant: f64) -> Self {
        Self { quad: Some(quad), lin, constant }
    }

    pub fn eval(&self, x: &Vector) -> f64 {
        let q = self.quad.as_ref().map_or(0.0, |q| 0.5 * x.dot(&(q * x)));
        q + self.lin.dot(x) + self.constant
    }

    /// `{(x, t) : f(x) ≤ t}`.
    fn epigraph(&self) -> Result<ConvexSet, AppError> {
        let n = self.lin.len();
        Ok(match &self.quad {
            Some(q) => QuadraticEpigraph::new(q.clone(), self.lin.clone(), self.constant)?.into(),
            None => {
                let mut a = Vector::zeros(n + 1);
                a.rows_mut(0, n).copy_from(&self.lin);
                a[n] = -1.0;
                Halfspace::new(a, -self.constant)?.into()
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinMaxProblem {
    pub pieces: Vec<Piece>,
    /// Strict lower bound on the optimal value.
    pub beta: f64,
}

#[derive(Clone, Debug)]
pub struct MinMaxSolution {
    pub x: Vector,
    pub value: f64,
    pub run: RunResult,
}

impl MinMaxProblem {
    pub fn dim(&self) -> usize {
        self.pieces.first().map_or(0, |p| p.lin.len())
    }

    pub fn g(&self, x: &Vector) -> f64 {
        self.pieces.iter().map(|p| p.eval(x)).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_affine(&self) -> bool {
        self.pieces.iter().all(|p| p.quad.is_none())
    }

    fn validate(&self) -> Result<(), AppError> {
        let n = self.dim();
        if n == 0 || self.pieces.is_empty() {
            return Err(AppError::Invalid("need at least one piece on a nonzero dimension".into()));
        }
        if self.pieces.iter().any(|p| p.lin.len() != n) {
            return Err(AppError::Invalid("pieces have different dimensions".into()));
        }
        if !self.beta.is_finite() {
            return Err(AppError::Invalid("beta must be finite".into()));
        }
        Ok(())
    }

    /// `epi g`: a polyhedron when every piece is affine, otherwise the
    /// intersection of the piece epigraphs.
    pub fn epigraph(&self) -> Result<ConvexSet, AppError> {
        self.validate()?;
        let n = self.dim();
        let members = self.pieces.iter().map(Piece::epigraph).collect::<Result<Vec<_>, _>>()?;
        if self.is_affine() {
            let rows = members
                .into_iter()
                .map(|m| match m {
                    ConvexSet::Halfspace(h) => h,
                    _ => unreachable!("affine pieces give halfspaces"),
                })
                .collect();
            return Ok(Polyhedron::new(rows)?.into());
        }
        let mut slater = Vector::zeros(n + 1);
        slater[n] = self.g(&Vector::zeros(n)) + 1.0;
        Ok(IntersectionSet::new(members, slater)?.into())
    }

    /// `H_β = {(x, t) : t = β}`.
    pub fn level_plane(&self) -> Result<ConvexSet, AppError> {
        let n = self.dim();
        let mut e = Vector::zeros(n + 1);
        e[n] = 1.0;
        Ok(Hyperplane::new(e, self.beta)?.into())
    }

    /// Optimal value of an affine instance via the LP `min t` s.t.
    /// `⟨a_i, x⟩ + b_i ≤ t`, solved by vertex enumeration.
    pub fn affine_optimum(&self) -> Result<f64, AppError> {
        let n = self.dim();
        let m = self.pieces.len();
        let mut a = Matrix::zeros(m, n + 1);
        let mut b = Vector::zeros(m);
        for (i, p) in self.pieces.iter().enumerate() {
            a.view_mut((i, 0), (1, n)).copy_from(&p.lin.transpose());
            a[(i, n)] = -1.0;
            b[i] = -p.constant;
        }
        let mut c = Vector::zeros(n + 1);
        c[n] = 1.0;
        let lp = LinearProgram::new(c, a, b, vec![false; n + 1])?;
        Ok(lp_vertex_solve(&lp)?.1)
    }
}

/// MAP from `(x0, β)`; returns the minimiser and the optimal value.
pub fn minmax_solve(p: &MinMaxProblem, x0: &Vector, stop: &StopCriteria) -> Result<MinMaxSolution, AppError> {
    let epi = p.epigraph()?;
    let n = p.dim();
    if x0.len() != n {
        return Err(AppError::Invalid(format!("start has dimension {}, expected {n}", x0.len())));
    }
    if p.is_affine() {
        let opt = p.affine_optimum()?;
        if p.beta >= opt {
            return Err(AppError::BetaNotBelowOptimum { beta: p.beta, detail: format!("g* = {opt}") });
        }
    }
    let h = p.level_plane()?;
    let mut start = Vector::zeros(n + 1);
    start.rows_mut(0, n).copy_from(x0);
    start[n] = p.beta;
    let run = map_run(&epi, &h, &start, stop)?;
    let z = run.final_iterate.clone();
    let gap = z[n] - p.beta;
    if gap <= 1e-10 * (1.0 + p.beta.abs()) {
        return Err(AppError::BetaNotBelowOptimum {
            beta: p.beta,
            detail: format!("distance estimate {gap:e}"),
        });
    }
    Ok(MinMaxSolution { x: z.rows(0, n).into_owned(), value: z[n], run })
}
