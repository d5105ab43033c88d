mod common;

use altproj::apps::registry::{build_example, ExampleId};
use altproj::geometry::{
    dykstra, AffineSubspace, Ball, ConvexSet, DiagonalSubspace, GeometryError, Halfspace, Hyperplane, Polyhedron,
};
use altproj::oracle::{active_set_projection, brute_force_projection, GridSpec};
use altproj::{vector, Matrix, Vector};
use approx::assert_abs_diff_eq;
use common::{random_intersection, random_polyhedron, rng, run_cases, uniform, variant_suite, Variant};
use proptest::prelude::*;

fn close(a: &Vector, b: &Vector, tol: f64) {
    assert!((a - b).norm() <= tol, "{a:?} vs {b:?}");
}

fn upper_wedge() -> ConvexSet {
    // x₂ ≥ |x₁| + 2
    Polyhedron::from_matrix(&Matrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, -1.0]), &vector(&[-2.0, -2.0]))
        .unwrap()
        .into()
}

fn parabola_sets() -> (ConvexSet, ConvexSet) {
    let sets = build_example(ExampleId::BapebVsTransversality).unwrap().build_sets().unwrap();
    (sets[0].clone(), sets[1].clone())
}

fn unit_square_corner() -> ConvexSet {
    // x₁ + x₂ ≤ 1, x ≥ 0
    Polyhedron::from_matrix(
        &Matrix::from_row_slice(3, 2, &[1.0, 1.0, -1.0, 0.0, 0.0, -1.0]),
        &vector(&[1.0, 0.0, 0.0]),
    )
    .unwrap()
    .into()
}

#[test]
fn project_closed_forms() {
    let h: ConvexSet = Hyperplane::new(vector(&[0.0, 1.0]), 0.0).unwrap().into();
    assert_eq!(h.project(&vector(&[3.0, 5.0])).unwrap(), vector(&[3.0, 0.0]));

    let ball: ConvexSet = Ball::new(vector(&[0.0, 1.0]), 1.0).unwrap().into();
    for a in [0.1, 0.5, 1.0, 3.0, 20.0] {
        let p = ball.project(&vector(&[a, 0.0])).unwrap();
        assert_abs_diff_eq!((&p - vector(&[0.0, 1.0])).norm(), 1.0, epsilon = 1e-15);
        let q = h.project(&p).unwrap();
        close(&q, &vector(&[a / (a * a + 1.0).sqrt(), 0.0]), 1e-15);
    }

    for gamma in [0.0, 1.0, 5.0] {
        let line: ConvexSet = AffineSubspace::new(vector(&[0.0, 0.0, gamma]), vec![vector(&[1.0, 1.0, 0.0])])
            .unwrap()
            .into();
        for t in [-4.0, 0.5, 3.0] {
            close(&line.project(&vector(&[t, 0.0, 0.0])).unwrap(), &vector(&[t / 2.0, t / 2.0, gamma]), 1e-15);
        }
    }

    let diag: ConvexSet = DiagonalSubspace::new(3, 1).unwrap().into();
    assert_eq!(diag.project(&vector(&[1.0, 2.0, 3.0])).unwrap(), vector(&[2.0, 2.0, 2.0]));
}

#[test]
fn project_polyhedron_examples() {
    let orthant: ConvexSet =
        Polyhedron::from_matrix(&Matrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -1.0]), &vector(&[0.0, 0.0]))
            .unwrap()
            .into();
    close(&orthant.project(&vector(&[-1.0, 2.0])).unwrap(), &vector(&[0.0, 2.0]), 1e-15);

    let corner = unit_square_corner();
    let p = corner.project(&vector(&[1.0, 1.0])).unwrap();
    close(&p, &vector(&[0.5, 0.5]), 1e-14);
    let ConvexSet::Polyhedron(poly) = &corner else { unreachable!() };
    close(&p, &active_set_projection(poly, &vector(&[1.0, 1.0])).unwrap(), 1e-14);

    close(&upper_wedge().project(&vector(&[0.0, 0.0])).unwrap(), &vector(&[0.0, 2.0]), 1e-15);
}

#[test]
fn project_intersection_examples() {
    let (x, y) = parabola_sets();
    // (0,1) is the best point of X; it is fixed by the projection.
    close(&x.project(&vector(&[0.0, 1.0])).unwrap(), &vector(&[0.0, 1.0]), 1e-12);
    close(&y.project(&vector(&[0.0, 0.0])).unwrap(), &vector(&[0.0, 0.0]), 1e-15);

    let exact = x.project(&vector(&[0.0, 0.0])).unwrap();
    let grid = GridSpec::cube(2, 2.0, 21, 12);
    let reference = brute_force_projection(&x, &vector(&[0.0, 0.0]), &grid).unwrap();
    close(&exact, &reference, 1e-6);
}

#[test]
fn reflect_examples() {
    let h: ConvexSet = Hyperplane::new(vector(&[0.0, 1.0]), 0.0).unwrap().into();
    assert_eq!(h.reflect(&vector(&[1.0, 3.0])).unwrap(), vector(&[1.0, -3.0]));
    assert_eq!(h.reflect(&vector(&[7.0, 0.0])).unwrap(), vector(&[7.0, 0.0]));
    let ball: ConvexSet = Ball::new(vector(&[0.0, 0.0]), 1.0).unwrap().into();
    assert_eq!(ball.reflect(&vector(&[2.0, 0.0])).unwrap(), vector(&[0.0, 0.0]));
    assert_eq!(ball.reflect(&vector(&[0.3, -0.2])).unwrap(), vector(&[0.3, -0.2]));
}

#[test]
fn distance_examples() {
    let h: ConvexSet = Hyperplane::new(vector(&[0.0, 1.0]), 0.0).unwrap().into();
    assert_eq!(h.distance(&vector(&[5.0, -3.0])).unwrap(), 3.0);
    assert_eq!(h.distance(&vector(&[5.0, 0.0])).unwrap(), 0.0);
    assert_abs_diff_eq!(
        unit_square_corner().distance(&vector(&[1.0, 1.0])).unwrap(),
        0.5f64.sqrt(),
        epsilon = 1e-15
    );
    assert_eq!(unit_square_corner().distance(&vector(&[0.2, 0.2])).unwrap(), 0.0);
}

#[test]
fn dimension_mismatch_is_an_error() {
    let h: ConvexSet = Hyperplane::new(vector(&[0.0, 1.0]), 0.0).unwrap().into();
    assert!(matches!(h.project(&vector(&[1.0, 2.0, 3.0])), Err(GeometryError::DimensionMismatch { .. })));
    assert!(h.distance(&vector(&[1.0])).is_err());
}

#[test]
fn invalid_sets_rejected() {
    assert!(Hyperplane::new(vector(&[0.0, 0.0]), 1.0).is_err());
    assert!(Ball::new(vector(&[0.0]), 0.0).is_err());
    // x ≤ 0 and x ≥ 1
    assert!(Polyhedron::from_matrix(&Matrix::from_row_slice(2, 1, &[1.0, -1.0]), &vector(&[0.0, -1.0])).is_err());
}

#[test]
fn normal_cone_halfspace() {
    let s: ConvexSet = Halfspace::new(vector(&[0.0, 1.0]), 0.0).unwrap().into();
    let at = vector(&[0.0, 0.0]);
    assert_abs_diff_eq!(s.normal_cone_distance(&at, &vector(&[0.0, 1.0])).unwrap(), 0.0, epsilon = 1e-15);
    assert_abs_diff_eq!(s.normal_cone_distance(&at, &vector(&[1.0, 0.0])).unwrap(), 1.0, epsilon = 1e-15);
    assert!(matches!(
        s.normal_cone_distance(&vector(&[0.0, -1.0]), &vector(&[0.0, 1.0])),
        Err(GeometryError::InteriorPoint)
    ));
}

#[test]
fn normal_cone_parabola_witness() {
    let (x, y) = parabola_sets();
    for k in [2.0, 5.0, 10.0] {
        let xk = vector(&[1.0 / k, 1.0 / (k * k) + 1.0]);
        let yk = vector(&[-1.0 / k, -1.0 / (k * k)]);
        let dir = vector(&[-2.0, k]) / (k * k + 4.0).sqrt();
        // dir lies in N_Y(y^k) and −dir in N_X(x^k).
        assert!(y.normal_cone_distance(&yk, &dir).unwrap() <= 1e-12);
        assert!(x.normal_cone_distance(&xk, &-&dir).unwrap() <= 1e-12);
        assert!(x.normal_cone_distance(&xk, &dir).unwrap() > 0.5);
    }
}

#[test]
fn normal_cone_unsupported_variants() {
    let d: ConvexSet = DiagonalSubspace::new(2, 1).unwrap().into();
    assert!(matches!(
        d.normal_cone_distance(&vector(&[1.0, 1.0]), &vector(&[1.0, 0.0])),
        Err(GeometryError::Unsupported(_))
    ));
}

#[test]
fn variant_properties() {
    for v in Variant::ALL {
        variant_suite(v, 64, 20).unwrap_or_else(|e| panic!("{v:?}: {e}"));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn polyhedron_matches_enumeration(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = 1 + (seed % 4) as usize;
        let m = 1 + ((seed >> 8) % 6) as usize;
        let poly = random_polyhedron(&mut r, n, m);
        let p = uniform(&mut r, n, 10.0);
        let exact = ConvexSet::from(poly.clone()).project(&p).unwrap();
        let reference = active_set_projection(&poly, &p).unwrap();
        prop_assert!((&exact - &reference).norm() <= 1e-6, "{exact:?} vs {reference:?}");
    }
}

fn intersection_case(seed: u64) -> Result<(), TestCaseError> {
    let mut r = rng(seed);
    let n = 2 + (seed % 2) as usize;
    let set: ConvexSet = random_intersection(&mut r, n).into();
    let p = uniform(&mut r, n, 4.0);
    let exact = set.project(&p).unwrap();
    let grid = GridSpec::cube(n, 8.0, 9, 14);
    let reference = brute_force_projection(&set, &p, &grid).unwrap();
    // The grid cannot follow a nearly flat boundary valley, so it is used
    // one-sidedly: no grid-feasible point beats the exact projection.
    let (de, dg) = ((&exact - &p).norm(), (&reference - &p).norm());
    prop_assert!(de <= dg + 1e-6, "{de} vs {dg}");
    let ConvexSet::Intersection(inter) = &set else { unreachable!() };
    let dk = dykstra(inter.members(), &p).unwrap();
    prop_assert!((&exact - &dk).norm() <= 1e-6, "{exact:?} vs {dk:?}");
    Ok(())
}

#[test]
fn intersection_against_dykstra_and_grid() {
    for seed in [1019788710277640969, 6401411485101375321, 16329562081896805580] {
        intersection_case(seed).unwrap();
    }
    run_cases(60, intersection_case).unwrap();
}
