use altproj::apps::holder::ball_hyperplane_sets;
use altproj::apps::lp::LinearProgram;
use altproj::geometry::{Ball, ConvexSet, Hyperplane, Polyhedron};
use altproj::oracle::{brute_force_projection, grid_best_pair, lp_vertex_solve, GridSpec, OracleError};
use altproj::{vector, Matrix, Vector};

fn close(a: &Vector, b: &Vector, tol: f64) {
    assert!((a - b).norm() <= tol, "{a:?} vs {b:?}");
}

fn upper_wedge() -> ConvexSet {
    Polyhedron::from_matrix(&Matrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, -1.0]), &vector(&[-2.0, -2.0]))
        .unwrap()
        .into()
}

fn x_axis() -> ConvexSet {
    Hyperplane::new(vector(&[0.0, 1.0]), 0.0).unwrap().into()
}

#[test]
fn grid_projection_onto_hyperplane() {
    let grid = GridSpec { bounds: vec![(-10.0, 10.0); 2], resolution: 21, refinement_levels: 5 };
    let p = brute_force_projection(&x_axis(), &vector(&[3.0, 5.0]), &grid).unwrap();
    close(&p, &vector(&[3.0, 0.0]), 1e-4);
}

#[test]
fn grid_projection_onto_corner() {
    let corner: ConvexSet = Polyhedron::from_matrix(
        &Matrix::from_row_slice(3, 2, &[1.0, 1.0, -1.0, 0.0, 0.0, -1.0]),
        &vector(&[1.0, 0.0, 0.0]),
    )
    .unwrap()
    .into();
    let grid = GridSpec::cube(2, 2.0, 21, 10);
    let p = brute_force_projection(&corner, &vector(&[1.0, 1.0]), &grid).unwrap();
    close(&p, &vector(&[0.5, 0.5]), 1e-4);
}

#[test]
fn refinement_bound_arithmetic() {
    for levels in [1usize, 2, 3, 5] {
        let coarse = GridSpec::cube(2, 4.0, 9, levels);
        let fine = GridSpec::cube(2, 4.0, 9, 2 * levels);
        assert_eq!(fine.error_bound(), coarse.error_bound() / 4f64.powi(levels as i32));
    }
    // The bound holds on closed-form cases at both depths.
    let ball: ConvexSet = Ball::new(vector(&[0.0, 0.0]), 1.0).unwrap().into();
    let p = vector(&[3.0, 4.0]);
    let exact = vector(&[0.6, 0.8]);
    for levels in [4usize, 8] {
        let grid = GridSpec::cube(2, 4.0, 17, levels);
        let got = brute_force_projection(&ball, &p, &grid).unwrap();
        assert!((got - &exact).norm() <= grid.error_bound(), "levels {levels}");
    }
}

#[test]
fn grid_errors() {
    let far: ConvexSet = Ball::new(vector(&[50.0, 50.0]), 1.0).unwrap().into();
    assert_eq!(
        brute_force_projection(&far, &vector(&[0.0, 0.0]), &GridSpec::cube(2, 5.0, 9, 3)),
        Err(OracleError::NoFeasiblePoint)
    );
    let high: ConvexSet = Ball::new(Vector::zeros(5), 1.0).unwrap().into();
    assert!(matches!(
        brute_force_projection(&high, &Vector::zeros(5), &GridSpec::cube(5, 1.0, 3, 1)),
        Err(OracleError::TooLarge { .. })
    ));
    assert!(matches!(
        brute_force_projection(&x_axis(), &vector(&[0.0, 0.0]), &GridSpec::cube(2, 1.0, 2, 1)),
        Err(OracleError::InvalidGrid(_))
    ));
}

#[test]
fn grid_is_deterministic() {
    let grid = GridSpec::cube(2, 5.0, 9, 8);
    let a = brute_force_projection(&upper_wedge(), &vector(&[1.0, -1.0]), &grid).unwrap();
    let b = brute_force_projection(&upper_wedge(), &vector(&[1.0, -1.0]), &grid).unwrap();
    assert_eq!(a, b);
}

#[test]
fn best_pair_wedge_and_line() {
    let grid = GridSpec::cube(2, 4.0, 17, 10);
    let (x, y, d) = grid_best_pair(&upper_wedge(), &x_axis(), &grid).unwrap();
    close(&x, &vector(&[0.0, 2.0]), 1e-4);
    close(&y, &vector(&[0.0, 0.0]), 1e-4);
    assert!((d - 2.0).abs() <= 1e-4, "{d}");
}

#[test]
fn best_pair_ball_and_line() {
    let (x_set, y_set) = ball_hyperplane_sets(1.0).unwrap();
    let grid = GridSpec::cube(2, 4.0, 17, 10);
    let (x, y, d) = grid_best_pair(&x_set, &y_set, &grid).unwrap();
    close(&x, &vector(&[0.0, 0.0]), 1e-4);
    close(&y, &vector(&[0.0, -1.0]), 1e-4);
    assert!((d - 1.0).abs() <= 1e-4, "{d}");
}

#[test]
fn best_pair_identical_sets() {
    let grid = GridSpec::cube(2, 4.0, 9, 6);
    let (_, _, d) = grid_best_pair(&x_axis(), &x_axis(), &grid).unwrap();
    assert!(d <= 1e-12);
}

#[test]
fn vertex_enumeration_examples() {
    // min x₁ + x₂ s.t. x₁ + x₂ ≥ 1, x ≥ 0
    let lp = LinearProgram::nonnegative(
        vector(&[1.0, 1.0]),
        Matrix::from_row_slice(1, 2, &[-1.0, -1.0]),
        vector(&[-1.0]),
    )
    .unwrap();
    let (x, v) = lp_vertex_solve(&lp).unwrap();
    assert!((v - 1.0).abs() < 1e-14);
    assert!((x.sum() - 1.0).abs() < 1e-14);

    // min x₁ s.t. 0 ≤ x₁ ≤ 1
    let lp = LinearProgram::nonnegative(vector(&[1.0]), Matrix::from_row_slice(1, 1, &[1.0]), vector(&[1.0]))
        .unwrap();
    let (x, v) = lp_vertex_solve(&lp).unwrap();
    assert_eq!((x[0], v), (0.0, 0.0));
}

#[test]
fn vertex_enumeration_duplicate_invariance() {
    let a = Matrix::from_row_slice(2, 2, &[-1.0, -2.0, -3.0, -1.0]);
    let b = vector(&[-2.0, -3.0]);
    let c = vector(&[1.0, 1.0]);
    let lp = LinearProgram::nonnegative(c.clone(), a.clone(), b.clone()).unwrap();
    let dup = LinearProgram::nonnegative(
        c,
        Matrix::from_row_slice(4, 2, &[-1.0, -2.0, -3.0, -1.0, -1.0, -2.0, -3.0, -1.0]),
        vector(&[-2.0, -3.0, -2.0, -3.0]),
    )
    .unwrap();
    let (_, v1) = lp_vertex_solve(&lp).unwrap();
    let (_, v2) = lp_vertex_solve(&dup).unwrap();
    assert!((v1 - v2).abs() < 1e-14);
    // Vertex (0.8, 0.6): value 1.4.
    assert!((v1 - 1.4).abs() < 1e-14, "{v1}");
}

#[test]
fn vertex_enumeration_unbounded_and_infeasible() {
    // min −x₁ with x ≥ 0 and x₂ ≤ 1: x₁ free to grow.
    let unbounded = LinearProgram {
        c: vector(&[-1.0, 0.0]),
        a: Matrix::from_row_slice(1, 2, &[0.0, 1.0]),
        b: vector(&[1.0]),
        sign: vec![true, true],
    };
    assert_eq!(lp_vertex_solve(&unbounded), Err(OracleError::Unbounded));
    // x₁ ≤ −1 with x₁ ≥ 0
    let infeasible = LinearProgram {
        c: vector(&[1.0]),
        a: Matrix::from_row_slice(1, 1, &[1.0]),
        b: vector(&[-1.0]),
        sign: vec![true],
    };
    assert_eq!(lp_vertex_solve(&infeasible), Err(OracleError::Infeasible));
}
