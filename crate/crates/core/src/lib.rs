//! Projection methods for inconsistent convex feasibility problems.
//!
//! The crate is organised around a small catalog of closed convex sets with
//! exact Euclidean projections ([`geometry`]), iteration drivers for the
//! method of alternating projections and its relatives ([`solvers`]),
//! numerical certificates for best-approximation-pair error bounds
//! ([`certify`]), two applications plus a registry of worked examples
//! ([`apps`]), brute-force reference solvers ([`oracle`]) and the JSON/CSV
//! interchange formats used by the command-line front end ([`problem`]).

// `!(a > b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod apps;
pub mod certify;
pub mod geometry;
pub mod oracle;
pub mod problem;
pub mod solvers;

mod vecser;

/// Dense real vector used for points, iterates and directions.
pub type Vector = nalgebra::DVector<f64>;

/// Dense real matrix.
pub type Matrix = nalgebra::DMatrix<f64>;

/// Builds a [`Vector`] from a slice.
pub fn vector(coords: &[f64]) -> Vector {
    Vector::from_column_slice(coords)
}

/// Euclidean norm computed with scaling, so tiny vectors do not underflow.
pub fn robust_norm(v: &Vector) -> f64 {
    let m = v.amax();
    if m == 0.0 || !m.is_finite() {
        return m;
    }
    m * (v / m).norm()
}
