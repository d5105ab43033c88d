use crate::{Matrix, Vector};

use super::qp::{self, LinearSystem};
use super::GeometryError;

fn check_finite(v: &Vector) -> Result<(), GeometryError> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(GeometryError::NonFinite)
    }
}

fn check_dim(expected: usize, v: &Vector) -> Result<(), GeometryError> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(GeometryError::DimensionMismatch { expected, got: v.len() })
    }
}

/// `{x : ⟨normal, x⟩ = offset}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Hyperplane {
    normal: Vector,
    offset: f64,
}

impl Hyperplane {
    pub fn new(normal: Vector, offset: f64) -> Result<Self, GeometryError> {
        check_finite(&normal)?;
        if normal.norm() == 0.0 || !offset.is_finite() {
            return Err(GeometryError::InvalidSet("hyperplane normal must be nonzero".into()));
        }
        Ok(Self { normal, offset })
    }

    pub fn normal(&self) -> &Vector {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    pub fn project(&self, p: &Vector) -> Vector {
        let s = (self.normal.dot(p) - self.offset) / self.normal.norm_squared();
        if s == 0.0 {
            return p.clone();
        }
        p - &self.normal * s
    }

    pub fn violation(&self, p: &Vector) -> f64 {
        (self.normal.dot(p) - self.offset).abs() / self.normal.norm()
    }
}

/// `{x : ⟨normal, x⟩ ≤ offset}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Halfspace {
    normal: Vector,
    offset: f64,
}

impl Halfspace {
    pub fn new(normal: Vector, offset: f64) -> Result<Self, GeometryError> {
        check_finite(&normal)?;
        if normal.norm() == 0.0 || !offset.is_finite() {
            return Err(GeometryError::InvalidSet("halfspace normal must be nonzero".into()));
        }
        Ok(Self { normal, offset })
    }

    pub fn normal(&self) -> &Vector {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    pub fn project(&self, p: &Vector) -> Vector {
        let v = self.normal.dot(p) - self.offset;
        if v <= 0.0 {
            return p.clone();
        }
        p - &self.normal * (v / self.normal.norm_squared())
    }

    pub fn violation(&self, p: &Vector) -> f64 {
        ((self.normal.dot(p) - self.offset) / self.normal.norm()).max(0.0)
    }
}

/// `{x : Ax ≤ b}`, verified nonempty at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct Polyhedron {
    rows: Vec<Halfspace>,
}

impl Polyhedron {
    pub fn new(rows: Vec<Halfspace>) -> Result<Self, GeometryError> {
        let Some(first) = rows.first() else {
            return Err(GeometryError::InvalidSet("polyhedron needs at least one row".into()));
        };
        let n = first.dim();
        for r in &rows {
            check_dim(n, r.normal())?;
        }
        let poly = Self { rows };
        qp::project(&poly.linear_system(), &Vector::zeros(n))?;
        Ok(poly)
    }

    pub fn from_matrix(a: &Matrix, b: &Vector) -> Result<Self, GeometryError> {
        if a.nrows() != b.len() {
            return Err(GeometryError::DimensionMismatch { expected: a.nrows(), got: b.len() });
        }
        let rows = (0..a.nrows())
            .map(|i| Halfspace::new(a.row(i).transpose(), b[i]))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(rows)
    }

    pub fn rows(&self) -> &[Halfspace] {
        &self.rows
    }

    pub fn dim(&self) -> usize {
        self.rows[0].dim()
    }

    pub fn matrix(&self) -> (Matrix, Vector) {
        let n = self.dim();
        let m = self.rows.len();
        let mut a = Matrix::zeros(m, n);
        for (i, r) in self.rows.iter().enumerate() {
            a.set_row(i, &r.normal().transpose());
        }
        let b = Vector::from_iterator(m, self.rows.iter().map(|r| r.offset()));
        (a, b)
    }

    pub fn linear_system(&self) -> LinearSystem {
        LinearSystem {
            eq: Vec::new(),
            ineq: self.rows.iter().map(|r| (r.normal.clone(), r.offset)).collect(),
        }
    }

    pub fn violation(&self, p: &Vector) -> f64 {
        self.rows.iter().map(|r| r.violation(p)).fold(0.0, f64::max)
    }
}

/// Closed Euclidean ball.
#[derive(Clone, Debug, PartialEq)]
pub struct Ball {
    center: Vector,
    radius: f64,
}

impl Ball {
    pub fn new(center: Vector, radius: f64) -> Result<Self, GeometryError> {
        check_finite(&center)?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(GeometryError::InvalidSet("ball radius must be positive".into()));
        }
        Ok(Self { center, radius })
    }

    pub fn center(&self) -> &Vector {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn project(&self, p: &Vector) -> Vector {
        let v = p - &self.center;
        let r = v.norm();
        if r <= self.radius {
            return p.clone();
        }
        &self.center + v * (self.radius / r)
    }

    pub fn violation(&self, p: &Vector) -> f64 {
        ((p - &self.center).norm() - self.radius).max(0.0)
    }
}

/// `base + span(directions)` with orthonormal directions.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineSubspace {
    base: Vector,
    directions: Vec<Vector>,
}

/// Gram–Schmidt with reorthogonalisation; drops numerically dependent vectors.
fn orthonormalize(vs: &[Vector]) -> Vec<Vector> {
    let mut out: Vec<Vector> = Vec::new();
    for v in vs {
        let scale = v.norm();
        if scale == 0.0 {
            continue;
        }
        let mut w = v / scale;
        for _ in 0..2 {
            for u in &out {
                let c = u.dot(&w);
                w -= u * c;
            }
        }
        let nw = w.norm();
        if nw > 1e-10 {
            out.push(w / nw);
        }
    }
    out
}

impl AffineSubspace {
    pub fn new(base: Vector, directions: Vec<Vector>) -> Result<Self, GeometryError> {
        check_finite(&base)?;
        for d in &directions {
            check_dim(base.len(), d)?;
            check_finite(d)?;
        }
        let directions = orthonormalize(&directions);
        Ok(Self { base, directions })
    }

    pub fn base(&self) -> &Vector {
        &self.base
    }

    pub fn directions(&self) -> &[Vector] {
        &self.directions
    }

    pub fn dim(&self) -> usize {
        self.base.len()
    }

    pub fn project(&self, p: &Vector) -> Vector {
        let rel = p - &self.base;
        let mut out = self.base.clone();
        for u in &self.directions {
            out += u * u.dot(&rel);
        }
        out
    }

    /// Orthonormal basis of the orthogonal complement of the directions.
    pub fn complement(&self) -> Vec<Vector> {
        let n = self.dim();
        let mut all = self.directions.clone();
        let k = all.len();
        for i in 0..n {
            let mut e = Vector::zeros(n);
            e[i] = 1.0;
            all.push(e);
        }
        let basis = orthonormalize(&all);
        basis.into_iter().skip(k).collect()
    }

    pub fn linear_system(&self) -> LinearSystem {
        LinearSystem {
            eq: self
                .complement()
                .into_iter()
                .map(|c| {
                    let b = c.dot(&self.base);
                    (c, b)
                })
                .collect(),
            ineq: Vec::new(),
        }
    }

    pub fn violation(&self, p: &Vector) -> f64 {
        (p - self.project(p)).norm()
    }
}

/// Cartesian product of sets over a common block dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductSet {
    factors: Vec<super::ConvexSet>,
    block: usize,
}

impl ProductSet {
    pub fn new(factors: Vec<super::ConvexSet>) -> Result<Self, GeometryError> {
        let Some(first) = factors.first() else {
            return Err(GeometryError::InvalidSet("product needs at least one factor".into()));
        };
        let block = first.dim();
        for f in &factors {
            if f.dim() != block {
                return Err(GeometryError::DimensionMismatch { expected: block, got: f.dim() });
            }
        }
        Ok(Self { factors, block })
    }

    pub fn factors(&self) -> &[super::ConvexSet] {
        &self.factors
    }

    pub fn block(&self) -> usize {
        self.block
    }

    pub fn dim(&self) -> usize {
        self.block * self.factors.len()
    }
}

/// `{(z, …, z)} ⊂ ℝ^{m·n}`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalSubspace {
    copies: usize,
    block: usize,
}

impl DiagonalSubspace {
    pub fn new(copies: usize, block: usize) -> Result<Self, GeometryError> {
        if copies < 2 || block == 0 {
            return Err(GeometryError::InvalidSet("diagonal needs m >= 2 copies of n >= 1".into()));
        }
        Ok(Self { copies, block })
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    pub fn block(&self) -> usize {
        self.block
    }

    pub fn dim(&self) -> usize {
        self.copies * self.block
    }

    pub fn project(&self, p: &Vector) -> Vector {
        let avg = block_average(&split_blocks(p, self.block));
        tile(&avg, self.copies)
    }

    pub fn linear_system(&self) -> LinearSystem {
        let n = self.block;
        let mut eq = Vec::new();
        for i in 0..self.copies - 1 {
            for j in 0..n {
                let mut a = Vector::zeros(self.dim());
                a[i * n + j] = 1.0;
                a[(i + 1) * n + j] = -1.0;
                eq.push((a, 0.0));
            }
        }
        LinearSystem { eq, ineq: Vec::new() }
    }

    pub fn violation(&self, p: &Vector) -> f64 {
        (p - self.project(p)).norm()
    }
}

/// Uniform average `(1/m) Σ v_i`, accumulated left to right.
///
/// Shared by the diagonal projection and the Cimmino operator so the two
/// agree bit for bit.
pub fn block_average(parts: &[Vector]) -> Vector {
    let mut acc = Vector::zeros(parts[0].len());
    for v in parts {
        acc += v;
    }
    acc / parts.len() as f64
}

pub fn split_blocks(p: &Vector, block: usize) -> Vec<Vector> {
    p.as_slice()
        .chunks(block)
        .map(Vector::from_column_slice)
        .collect()
}

pub fn join_blocks(parts: &[Vector]) -> Vector {
    let coords: Vec<f64> = parts.iter().flat_map(|v| v.iter().copied()).collect();
    Vector::from_vec(coords)
}

/// `(z, …, z)` with `copies` blocks.
pub fn tile(z: &Vector, copies: usize) -> Vector {
    join_blocks(&vec![z.clone(); copies])
}
