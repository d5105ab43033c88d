//! Epigraphs of convex quadratics, `{(x, t) : ½⟨x,Qx⟩ + ⟨q,x⟩ + c ≤ σ t}`.
//!
//! `σ = -1` turns the set into the hypograph-style region `f(x) ≤ −t`; the
//! projection reflects the last coordinate and reuses the epigraph solver.

use nalgebra::SymmetricEigen;

use crate::{Matrix, Vector};

use super::GeometryError;

/// Most negative eigenvalue accepted before clamping to zero.
pub const PSD_FLOOR: f64 = -1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticEpigraph {
    quad: Matrix,
    lin: Vector,
    constant: f64,
    t_sign: f64,
    eigvals: Vector,
    eigvecs: Matrix,
}

impl QuadraticEpigraph {
    pub fn new(quad: Matrix, lin: Vector, constant: f64) -> Result<Self, GeometryError> {
        Self::with_sign(quad, lin, constant, 1.0)
    }

    pub fn with_sign(
        quad: Matrix,
        lin: Vector,
        constant: f64,
        t_sign: f64,
    ) -> Result<Self, GeometryError> {
        let n = lin.len();
        if quad.nrows() != n || quad.ncols() != n {
            return Err(GeometryError::DimensionMismatch { expected: n, got: quad.nrows() });
        }
        if !quad.iter().chain(lin.iter()).all(|v| v.is_finite()) || !constant.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        if t_sign != 1.0 && t_sign != -1.0 {
            return Err(GeometryError::InvalidSet("t_sign must be +1 or -1".into()));
        }
        let scale = quad.amax().max(1.0);
        if (&quad - quad.transpose()).amax() > 1e-12 * scale {
            return Err(GeometryError::InvalidSet("Q must be symmetric".into()));
        }
        let sym = (&quad + quad.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        if eig.eigenvalues.iter().any(|&l| l < PSD_FLOOR * scale) {
            return Err(GeometryError::InvalidSet("Q must be positive semidefinite".into()));
        }
        let eigvals = eig.eigenvalues.map(|l| l.max(0.0));
        let eigvecs = eig.eigenvectors;
        let quad = &eigvecs * Matrix::from_diagonal(&eigvals) * eigvecs.transpose();
        Ok(Self { quad, lin, constant, t_sign, eigvals, eigvecs })
    }

    pub fn quad(&self) -> &Matrix {
        &self.quad
    }

    pub fn lin(&self) -> &Vector {
        &self.lin
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn t_sign(&self) -> f64 {
        self.t_sign
    }

    /// Dimension of `x`; the set lives in one more dimension.
    pub fn base_dim(&self) -> usize {
        self.lin.len()
    }

    pub fn dim(&self) -> usize {
        self.lin.len() + 1
    }

    pub fn f(&self, x: &Vector) -> f64 {
        0.5 * x.dot(&(&self.quad * x)) + self.lin.dot(x) + self.constant
    }

    /// Constraint value `f(x) − σ t`.
    pub fn g(&self, p: &Vector) -> f64 {
        let n = self.base_dim();
        let x = p.rows(0, n).into_owned();
        self.f(&x) - self.t_sign * p[n]
    }

    pub fn gradient(&self, p: &Vector) -> Vector {
        let n = self.base_dim();
        let x = p.rows(0, n).into_owned();
        let gx = &self.quad * &x + &self.lin;
        let mut out = Vector::zeros(n + 1);
        out.rows_mut(0, n).copy_from(&gx);
        out[n] = -self.t_sign;
        out
    }

    /// Hessian of the constraint, `Q` padded with a zero row and column.
    pub fn hessian(&self) -> Matrix {
        let n = self.base_dim();
        let mut h = Matrix::zeros(n + 1, n + 1);
        h.view_mut((0, 0), (n, n)).copy_from(&self.quad);
        h
    }

    pub fn violation(&self, p: &Vector) -> f64 {
        let g = self.g(p);
        if g <= 0.0 {
            return 0.0;
        }
        g / self.gradient(p).norm()
    }

    pub fn project(&self, p: &Vector) -> Vector {
        if self.g(p) <= 0.0 {
            return p.clone();
        }
        let n = self.base_dim();
        let x = p.rows(0, n).into_owned();
        let s = self.t_sign * p[n];
        let (xs, ts) = self.project_upward(&x, s);
        let mut out = Vector::zeros(n + 1);
        out.rows_mut(0, n).copy_from(&xs);
        out[n] = self.t_sign * ts;
        out
    }

    /// Projection of `(x, s)` onto the ordinary epigraph, for `f(x) > s`.
    ///
    /// The KKT point is `x(μ) = (I + μQ)^{-1}(x − μq)`, `t = s + μ` with
    /// `μ > 0` the root of the decreasing `φ(μ) = f(x(μ)) − s − μ`.
    fn project_upward(&self, x: &Vector, s: f64) -> (Vector, f64) {
        let pt = self.eigvecs.transpose() * x;
        let qt = self.eigvecs.transpose() * &self.lin;
        let lam = &self.eigvals;
        let xt = |mu: f64| -> Vector {
            Vector::from_iterator(
                pt.len(),
                (0..pt.len()).map(|i| (pt[i] - mu * qt[i]) / (1.0 + mu * lam[i])),
            )
        };
        let f_t = |y: &Vector| -> f64 {
            (0..y.len())
                .map(|i| 0.5 * lam[i] * y[i] * y[i] + qt[i] * y[i])
                .sum::<f64>()
                + self.constant
        };
        let phi = |mu: f64| f_t(&xt(mu)) - s - mu;
        let dphi = |mu: f64| {
            let y = xt(mu);
            -(0..y.len())
                .map(|i| {
                    let g = lam[i] * y[i] + qt[i];
                    g * g / (1.0 + mu * lam[i])
                })
                .sum::<f64>()
                - 1.0
        };

        let mut lo = 0.0;
        let mut hi = 1.0;
        while phi(hi) > 0.0 && hi < 1e300 {
            lo = hi;
            hi *= 2.0;
        }
        let mut mu = 0.5 * (lo + hi);
        for _ in 0..300 {
            let v = phi(mu);
            if v == 0.0 {
                break;
            }
            if v > 0.0 {
                lo = mu;
            } else {
                hi = mu;
            }
            let newton = mu - v / dphi(mu);
            let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if (next - mu).abs() <= 1e-17 * mu.abs().max(1e-300) || hi - lo <= f64::EPSILON * hi {
                mu = next;
                break;
            }
            mu = next;
        }
        let y = xt(mu);
        (&self.eigvecs * y, s + mu)
    }

    pub fn translated(&self, v: &Vector) -> Self {
        let n = self.base_dim();
        let vx = v.rows(0, n).into_owned();
        let vt = v[n];
        let lin = &self.lin - &self.quad * &vx;
        let constant = self.constant + 0.5 * vx.dot(&(&self.quad * &vx)) - self.lin.dot(&vx)
            + self.t_sign * vt;
        Self {
            quad: self.quad.clone(),
            lin,
            constant,
            t_sign: self.t_sign,
            eigvals: self.eigvals.clone(),
            eigvecs: self.eigvecs.clone(),
        }
    }
}
