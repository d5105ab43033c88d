//! Convex-set catalog with exact Euclidean projections.

mod epigraph;
mod intersection;
pub mod qp;
mod sets;

use thiserror::Error;

use crate::Vector;

pub use epigraph::{QuadraticEpigraph, PSD_FLOOR};
pub use intersection::{dykstra, dykstra_limited, IntersectionSet};
pub use qp::LinearSystem;
pub use sets::{
    block_average, join_blocks, split_blocks, tile, AffineSubspace, Ball, DiagonalSubspace,
    Halfspace, Hyperplane, Polyhedron, ProductSet,
};

/// Containment tolerance, relative to `1 + ‖x‖`.
pub const CONTAIN_TOL: f64 = 1e-10;

/// Tolerance for treating a constraint as active in normal-cone queries.
pub const ACTIVE_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("set is empty")]
    EmptySet,
    #[error("degenerate KKT system: {0}")]
    DegenerateKkt(String),
    #[error("no valid KKT candidate: {0}")]
    NoKktCandidate(String),
    #[error("{0} not supported for this set")]
    Unsupported(&'static str),
    #[error("point is interior; normal cone is {{0}}")]
    InteriorPoint,
    #[error("point does not lie in the set")]
    NotInSet,
    #[error("invalid set: {0}")]
    InvalidSet(String),
    #[error("non-finite coordinates")]
    NonFinite,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ConvexSet {
    Hyperplane(Hyperplane),
    Halfspace(Halfspace),
    Polyhedron(Polyhedron),
    Ball(Ball),
    Affine(AffineSubspace),
    QuadEpigraph(QuadraticEpigraph),
    Intersection(IntersectionSet),
    Product(ProductSet),
    Diagonal(DiagonalSubspace),
}

macro_rules! impl_from {
    ($($variant:ident($ty:ty)),*) => {
        $(impl From<$ty> for ConvexSet {
            fn from(s: $ty) -> Self {
                ConvexSet::$variant(s)
            }
        })*
    };
}

impl_from!(
    Hyperplane(Hyperplane),
    Halfspace(Halfspace),
    Polyhedron(Polyhedron),
    Ball(Ball),
    Affine(AffineSubspace),
    QuadEpigraph(QuadraticEpigraph),
    Intersection(IntersectionSet),
    Product(ProductSet),
    Diagonal(DiagonalSubspace)
);

impl ConvexSet {
    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Hyperplane(s) => s.dim(),
            ConvexSet::Halfspace(s) => s.dim(),
            ConvexSet::Polyhedron(s) => s.dim(),
            ConvexSet::Ball(s) => s.dim(),
            ConvexSet::Affine(s) => s.dim(),
            ConvexSet::QuadEpigraph(s) => s.dim(),
            ConvexSet::Intersection(s) => s.dim(),
            ConvexSet::Product(s) => s.dim(),
            ConvexSet::Diagonal(s) => s.dim(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ConvexSet::Hyperplane(_) => "hyperplane",
            ConvexSet::Halfspace(_) => "halfspace",
            ConvexSet::Polyhedron(_) => "polyhedron",
            ConvexSet::Ball(_) => "ball",
            ConvexSet::Affine(_) => "affine",
            ConvexSet::QuadEpigraph(_) => "quad_epigraph",
            ConvexSet::Intersection(_) => "intersection",
            ConvexSet::Product(_) => "product",
            ConvexSet::Diagonal(_) => "diagonal",
        }
    }

    fn check(&self, p: &Vector) -> Result<(), GeometryError> {
        if p.len() != self.dim() {
            return Err(GeometryError::DimensionMismatch { expected: self.dim(), got: p.len() });
        }
        if !p.iter().all(|v| v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        Ok(())
    }

    /// Euclidean projection `P_S(p)`.
    pub fn project(&self, p: &Vector) -> Result<Vector, GeometryError> {
        self.check(p)?;
        match self {
            ConvexSet::Hyperplane(s) => Ok(s.project(p)),
            ConvexSet::Halfspace(s) => Ok(s.project(p)),
            ConvexSet::Polyhedron(s) => project_polyhedron(s, p),
            ConvexSet::Ball(s) => Ok(s.project(p)),
            ConvexSet::Affine(s) => Ok(s.project(p)),
            ConvexSet::QuadEpigraph(s) => Ok(s.project(p)),
            ConvexSet::Intersection(s) => project_intersection(s, p),
            ConvexSet::Product(s) => {
                let parts = split_blocks(p, s.block());
                let projected = s
                    .factors()
                    .iter()
                    .zip(&parts)
                    .map(|(f, x)| f.project(x))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(join_blocks(&projected))
            }
            ConvexSet::Diagonal(s) => Ok(s.project(p)),
        }
    }

    /// `R_S(p) = 2 P_S(p) − p`.
    pub fn reflect(&self, p: &Vector) -> Result<Vector, GeometryError> {
        Ok(self.project(p)? * 2.0 - p)
    }

    pub fn distance(&self, p: &Vector) -> Result<f64, GeometryError> {
        Ok((p - self.project(p)?).norm())
    }

    /// Constraint violation measured without projecting; zero on the set.
    pub fn violation(&self, p: &Vector) -> f64 {
        match self {
            ConvexSet::Hyperplane(s) => s.violation(p),
            ConvexSet::Halfspace(s) => s.violation(p),
            ConvexSet::Polyhedron(s) => s.violation(p),
            ConvexSet::Ball(s) => s.violation(p),
            ConvexSet::Affine(s) => s.violation(p),
            ConvexSet::QuadEpigraph(s) => s.violation(p),
            ConvexSet::Intersection(s) => s.violation(p),
            ConvexSet::Product(s) => s
                .factors()
                .iter()
                .zip(split_blocks(p, s.block()))
                .map(|(f, x)| f.violation(&x))
                .fold(0.0, f64::max),
            ConvexSet::Diagonal(s) => s.violation(p),
        }
    }

    pub fn contains(&self, p: &Vector) -> bool {
        p.len() == self.dim() && self.violation(p) <= CONTAIN_TOL * (1.0 + p.norm())
    }

    /// `S + v`.
    pub fn translated(&self, v: &Vector) -> ConvexSet {
        match self {
            ConvexSet::Hyperplane(s) => {
                Hyperplane::new(s.normal().clone(), s.offset() + s.normal().dot(v))
                    .expect("translation keeps the normal")
                    .into()
            }
            ConvexSet::Halfspace(s) => translate_halfspace(s, v).into(),
            ConvexSet::Polyhedron(s) => {
                let rows = s.rows().iter().map(|r| translate_halfspace(r, v)).collect();
                Polyhedron::new(rows).expect("translation keeps feasibility").into()
            }
            ConvexSet::Ball(s) => Ball::new(s.center() + v, s.radius()).unwrap().into(),
            ConvexSet::Affine(s) => {
                AffineSubspace::new(s.base() + v, s.directions().to_vec()).unwrap().into()
            }
            ConvexSet::QuadEpigraph(s) => s.translated(v).into(),
            ConvexSet::Intersection(s) => s.translated(v).into(),
            ConvexSet::Product(s) => {
                let parts = split_blocks(v, s.block());
                let factors = s
                    .factors()
                    .iter()
                    .zip(&parts)
                    .map(|(f, w)| f.translated(w))
                    .collect();
                ProductSet::new(factors).unwrap().into()
            }
            ConvexSet::Diagonal(s) => {
                let n = s.block();
                let dirs = (0..n)
                    .map(|j| {
                        let mut e = Vector::zeros(n);
                        e[j] = 1.0;
                        tile(&e, s.copies())
                    })
                    .collect();
                AffineSubspace::new(v.clone(), dirs).unwrap().into()
            }
        }
    }

    /// Linear description when the set is polyhedral.
    pub fn linear_system(&self) -> Option<LinearSystem> {
        match self {
            ConvexSet::Hyperplane(s) => Some(LinearSystem {
                eq: vec![(s.normal().clone(), s.offset())],
                ineq: vec![],
            }),
            ConvexSet::Halfspace(s) => Some(LinearSystem {
                eq: vec![],
                ineq: vec![(s.normal().clone(), s.offset())],
            }),
            ConvexSet::Polyhedron(s) => Some(s.linear_system()),
            ConvexSet::Affine(s) => Some(s.linear_system()),
            ConvexSet::Diagonal(s) => Some(s.linear_system()),
            ConvexSet::Intersection(s) => {
                let mut sys = LinearSystem::default();
                for m in s.members() {
                    match m {
                        ConvexSet::Hyperplane(_) | ConvexSet::Halfspace(_) => {
                            sys.extend(m.linear_system()?)
                        }
                        _ => return None,
                    }
                }
                Some(sys)
            }
            ConvexSet::Product(s) => {
                let n = s.block();
                let total = s.dim();
                let embed = |i: usize, a: &Vector| {
                    let mut out = Vector::zeros(total);
                    out.rows_mut(i * n, n).copy_from(a);
                    out
                };
                let mut sys = LinearSystem::default();
                for (i, f) in s.factors().iter().enumerate() {
                    let fs = f.linear_system()?;
                    sys.eq.extend(fs.eq.iter().map(|(a, b)| (embed(i, a), *b)));
                    sys.ineq.extend(fs.ineq.iter().map(|(a, b)| (embed(i, a), *b)));
                }
                Some(sys)
            }
            ConvexSet::Ball(_) | ConvexSet::QuadEpigraph(_) => None,
        }
    }

    /// Gradients of the constraints active at `at`: (inequalities, equalities).
    fn active_gradients(&self, at: &Vector) -> Result<(Vec<Vector>, Vec<Vector>), GeometryError> {
        let tol = ACTIVE_TOL * (1.0 + at.norm());
        match self {
            ConvexSet::Hyperplane(s) => Ok((vec![], vec![s.normal().clone()])),
            ConvexSet::Halfspace(s) => {
                let v = (s.normal().dot(at) - s.offset()) / s.normal().norm();
                Ok(if v.abs() <= tol { (vec![s.normal().clone()], vec![]) } else { (vec![], vec![]) })
            }
            ConvexSet::Polyhedron(s) => Ok((
                s.rows()
                    .iter()
                    .filter(|r| ((r.normal().dot(at) - r.offset()) / r.normal().norm()).abs() <= tol)
                    .map(|r| r.normal().clone())
                    .collect(),
                vec![],
            )),
            ConvexSet::Ball(s) => {
                let v = at - s.center();
                Ok(if (v.norm() - s.radius()).abs() <= tol { (vec![v], vec![]) } else { (vec![], vec![]) })
            }
            ConvexSet::QuadEpigraph(s) => {
                let gr = s.gradient(at);
                Ok(if (s.g(at) / gr.norm()).abs() <= tol { (vec![gr], vec![]) } else { (vec![], vec![]) })
            }
            ConvexSet::Intersection(s) => {
                let mut ineq = Vec::new();
                let mut eq = Vec::new();
                for m in s.members() {
                    let (i, e) = m.active_gradients(at)?;
                    ineq.extend(i);
                    eq.extend(e);
                }
                Ok((ineq, eq))
            }
            ConvexSet::Affine(_) => Err(GeometryError::Unsupported("normal cone of affine subspace")),
            ConvexSet::Product(_) => Err(GeometryError::Unsupported("normal cone of product set")),
            ConvexSet::Diagonal(_) => Err(GeometryError::Unsupported("normal cone of diagonal")),
        }
    }

    /// `dist(dir, N_S(at))` for a point on the boundary of `S`.
    ///
    /// The normal cone is the conic hull of active constraint gradients plus
    /// the span of equality gradients; its distance equals the norm of the
    /// projection of `dir` onto the polar cone. Interior points give
    /// [`GeometryError::InteriorPoint`]; the cone is `{0}` there, so the
    /// distance of a unit direction would be 1.
    pub fn normal_cone_distance(&self, at: &Vector, dir: &Vector) -> Result<f64, GeometryError> {
        self.check(at)?;
        self.check(dir)?;
        if !self.contains(at) {
            return Err(GeometryError::NotInSet);
        }
        let (ineq, eq) = self.active_gradients(at)?;
        if ineq.is_empty() && eq.is_empty() {
            return Err(GeometryError::InteriorPoint);
        }
        let polar = LinearSystem {
            eq: eq.into_iter().map(|g| (g, 0.0)).collect(),
            ineq: ineq.into_iter().map(|g| (g, 0.0)).collect(),
        };
        Ok(qp::project(&polar, dir)?.x.norm())
    }
}

fn translate_halfspace(s: &Halfspace, v: &Vector) -> Halfspace {
    Halfspace::new(s.normal().clone(), s.offset() + s.normal().dot(v)).expect("translation keeps the normal")
}

/// Exact projection onto a polyhedron by the dual active-set QP.
pub fn project_polyhedron(poly: &Polyhedron, p: &Vector) -> Result<Vector, GeometryError> {
    if poly.violation(p) == 0.0 {
        return Ok(p.clone());
    }
    Ok(qp::project(&poly.linear_system(), p)?.x)
}

/// Projection onto an intersection of smooth constraints by KKT enumeration.
pub fn project_intersection(set: &IntersectionSet, p: &Vector) -> Result<Vector, GeometryError> {
    intersection::project(set, p)
}
