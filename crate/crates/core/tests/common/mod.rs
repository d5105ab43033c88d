//! Shared random instances and property checks for the integration tests.
#![allow(dead_code)]

use altproj::geometry::{
    AffineSubspace, Ball, ConvexSet, DiagonalSubspace, Halfspace, Hyperplane, IntersectionSet, Polyhedron,
    ProductSet, QuadraticEpigraph,
};
use altproj::{Matrix, Vector};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Rand = ChaCha8Rng;

pub fn rng(seed: u64) -> Rand {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut Rand, n: usize, half: f64) -> Vector {
    Vector::from_iterator(n, (0..n).map(|_| rng.gen_range(-half..half)))
}

fn nonzero(rng: &mut Rand, n: usize) -> Vector {
    loop {
        let v = uniform(rng, n, 3.0);
        if v.norm() > 0.2 {
            return v;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    Hyperplane,
    Halfspace,
    Polyhedron,
    Ball,
    Affine,
    QuadEpigraph,
    Intersection,
    Product,
    Diagonal,
}

impl Variant {
    pub const ALL: [Variant; 9] = [
        Variant::Hyperplane,
        Variant::Halfspace,
        Variant::Polyhedron,
        Variant::Ball,
        Variant::Affine,
        Variant::QuadEpigraph,
        Variant::Intersection,
        Variant::Product,
        Variant::Diagonal,
    ];
}

/// Polyhedron `{Ax ≤ b}` with `m` rows in ℝⁿ, nonempty by construction.
pub fn random_polyhedron(rng: &mut Rand, n: usize, m: usize) -> Polyhedron {
    let z = uniform(rng, n, 2.0);
    let rows = (0..m)
        .map(|_| {
            let a = nonzero(rng, n);
            let b = a.dot(&z) + rng.gen_range(0.0..2.0);
            Halfspace::new(a, b).unwrap()
        })
        .collect();
    Polyhedron::new(rows).unwrap()
}

pub fn random_epigraph(rng: &mut Rand, base: usize) -> QuadraticEpigraph {
    let b = Matrix::from_fn(base, base, |_, _| rng.gen_range(-1.0..1.0));
    let q = &b * b.transpose();
    QuadraticEpigraph::new(q, uniform(rng, base, 1.0), rng.gen_range(-1.0..1.0)).unwrap()
}

/// Intersection of halfspaces, and optionally a ball and a quadratic
/// epigraph, all strictly containing a random Slater point.
pub fn random_intersection(rng: &mut Rand, n: usize) -> IntersectionSet {
    let z = uniform(rng, n, 1.0);
    let mut members: Vec<ConvexSet> = Vec::new();
    for _ in 0..rng.gen_range(1..=3) {
        let a = nonzero(rng, n);
        let b = a.dot(&z) + rng.gen_range(0.1..1.5);
        members.push(Halfspace::new(a, b).unwrap().into());
    }
    if rng.gen_bool(0.6) {
        let c = &z + uniform(rng, n, 1.0);
        let r = (&c - &z).norm() + rng.gen_range(0.3..2.0);
        members.push(Ball::new(c, r).unwrap().into());
    }
    if n >= 2 && rng.gen_bool(0.6) {
        let epi = random_epigraph(rng, n - 1);
        let lift = epi.f(&z.rows(0, n - 1).into_owned()) - z[n - 1] + rng.gen_range(0.2..1.0);
        let mut shift = Vector::zeros(n);
        shift[n - 1] = lift;
        // Translating by (0, -lift) moves the graph down so that z is strictly above it.
        members.push(ConvexSet::from(epi).translated(&-shift));
    }
    IntersectionSet::new(members, z).unwrap()
}

pub fn random_set(rng: &mut Rand, variant: Variant) -> ConvexSet {
    match variant {
        Variant::Hyperplane => {
            let n = rng.gen_range(1..=4);
            Hyperplane::new(nonzero(rng, n), rng.gen_range(-3.0..3.0)).unwrap().into()
        }
        Variant::Halfspace => {
            let n = rng.gen_range(1..=4);
            Halfspace::new(nonzero(rng, n), rng.gen_range(-3.0..3.0)).unwrap().into()
        }
        Variant::Polyhedron => {
            let n = rng.gen_range(1..=4);
            let m = rng.gen_range(1..=6);
            random_polyhedron(rng, n, m).into()
        }
        Variant::Ball => {
            let n = rng.gen_range(1..=4);
            Ball::new(uniform(rng, n, 3.0), rng.gen_range(0.1..3.0)).unwrap().into()
        }
        Variant::Affine => {
            let n = rng.gen_range(2..=4);
            let k = rng.gen_range(1..n);
            let dirs = (0..k).map(|_| nonzero(rng, n)).collect();
            AffineSubspace::new(uniform(rng, n, 3.0), dirs).unwrap().into()
        }
        Variant::QuadEpigraph => {
            let base = rng.gen_range(1..=3);
            random_epigraph(rng, base).into()
        }
        Variant::Intersection => {
            let n = rng.gen_range(2..=3);
            random_intersection(rng, n).into()
        }
        Variant::Product => {
            let block = rng.gen_range(1..=2);
            let copies = rng.gen_range(2..=3);
            let factors = (0..copies)
                .map(|_| -> ConvexSet {
                    if rng.gen_bool(0.5) {
                        Ball::new(uniform(rng, block, 2.0), rng.gen_range(0.2..2.0)).unwrap().into()
                    } else {
                        Halfspace::new(nonzero(rng, block), rng.gen_range(-2.0..2.0)).unwrap().into()
                    }
                })
                .collect();
            ProductSet::new(factors).unwrap().into()
        }
        Variant::Diagonal => {
            DiagonalSubspace::new(rng.gen_range(2..=3), rng.gen_range(1..=2)).unwrap().into()
        }
    }
}

pub const CONTAIN: f64 = 1e-10;
pub const VI: f64 = 1e-9;
pub const IDEMPOTENT: f64 = 1e-10;
pub const FIRM: f64 = 1e-9;

/// Containment, variational inequality (against `members` points of the
/// set), idempotence, firm nonexpansiveness and the reflector identity.
pub fn projection_properties(set: &ConvexSet, seed: u64, members: usize) -> Result<(), TestCaseError> {
    let mut r = rng(seed);
    let n = set.dim();
    let x = uniform(&mut r, n, 10.0);
    let y = uniform(&mut r, n, 10.0);
    let px = set.project(&x).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let py = set.project(&y).map_err(|e| TestCaseError::fail(e.to_string()))?;

    let viol = set.violation(&px);
    prop_assert!(viol <= CONTAIN, "containment: violation {viol:e} at {px:?}");

    for _ in 0..members {
        let m = set.project(&uniform(&mut r, n, 10.0)).unwrap();
        let vi = (&m - &px).dot(&(&x - &px));
        prop_assert!(vi <= VI, "variational inequality: {vi:e}");
    }

    let ppx = set.project(&px).unwrap();
    let idem = (&ppx - &px).norm();
    prop_assert!(idem <= IDEMPOTENT, "idempotence: {idem:e}");

    let dp = &px - &py;
    let lhs = dp.norm_squared();
    let rhs = dp.dot(&(&x - &y));
    prop_assert!(lhs <= rhs + FIRM, "firm nonexpansiveness: {lhs:e} > {rhs:e}");

    let refl = set.reflect(&x).unwrap();
    prop_assert_eq!(refl, &px * 2.0 - &x, "reflector identity");
    Ok(())
}

/// Runs `check` on `cases` seeds through proptest; returns the failure text.
pub fn run_cases(
    cases: u32,
    check: impl Fn(u64) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let mut config = Config::with_cases(cases);
    config.failure_persistence = None;
    let mut runner = TestRunner::new_with_rng(config, proptest::test_runner::TestRng::deterministic_rng(
        proptest::test_runner::RngAlgorithm::ChaCha,
    ));
    runner.run(&any::<u64>(), check).map_err(|e| e.to_string())
}

/// Property suite for one variant; sets and points derive from the seed.
pub fn variant_suite(variant: Variant, cases: u32, members: usize) -> Result<(), String> {
    run_cases(cases, |seed| {
        let set = random_set(&mut rng(seed), variant);
        projection_properties(&set, seed ^ 0x9e37_79b9_7f4a_7c15, members)
    })
}
