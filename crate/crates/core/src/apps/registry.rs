//! Worked examples: the sets, start points and expected behaviour of each,
//! plus [`reproduce`], which runs the prescribed solvers and checks the
//! observations against the stored expectations.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::certify::{
    bilateral_bapeb_check, intrinsic_transversality_sample, pair_from_point, parabola_witness,
    single_step_radius, single_step_verify, transversality_expression, unilateral_bapeb_estimate,
    Verdict, PARABOLA_WITNESS_KS,
};
use crate::geometry::ConvexSet;
use crate::oracle::lp_vertex_solve;
use crate::problem::{Method, ProblemSpec, SetSpec};
use crate::solvers::{
    cimmino_run, cyclic_run, detect_finite_termination, diagonal_point, displacement_estimate,
    dr_run, map_run, pierra_lift, Status, StopCriteria,
};
use crate::{vector, Matrix, Vector};

use super::holder::{ball_hyperplane_sets, holder_rate_experiment, holder_start};
use super::lp::{lp_feasible, lp_solve_via_map, random_lp, LinearProgram};
use super::minmax::{minmax_solve, MinMaxProblem, Piece};
use super::AppError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExampleId {
    ReverseLines,
    BallHyperplane,
    BapebVsTransversality,
    ProductTransport,
    LpDemo,
    MinmaxDemo,
    ParallelLinesCycle,
}

impl ExampleId {
    pub const ALL: [ExampleId; 7] = [
        ExampleId::ReverseLines,
        ExampleId::BallHyperplane,
        ExampleId::BapebVsTransversality,
        ExampleId::ProductTransport,
        ExampleId::LpDemo,
        ExampleId::MinmaxDemo,
        ExampleId::ParallelLinesCycle,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExampleId::ReverseLines => "reverse-lines",
            ExampleId::BallHyperplane => "ball-hyperplane",
            ExampleId::BapebVsTransversality => "bapeb-vs-transversality",
            ExampleId::ProductTransport => "product-transport",
            ExampleId::LpDemo => "lp-demo",
            ExampleId::MinmaxDemo => "minmax-demo",
            ExampleId::ParallelLinesCycle => "parallel-lines-cycle",
        }
    }
}

impl fmt::Display for ExampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExampleId {
    type Err = AppError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ExampleId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| AppError::Invalid(format!("unknown example id {s:?}")))
    }
}

fn hyperplane(normal: &[f64], offset: f64) -> SetSpec {
    SetSpec::Hyperplane { normal: normal.to_vec(), offset }
}

fn polyhedron(a: &[[f64; 2]], b: &[f64]) -> SetSpec {
    SetSpec::Polyhedron { a: a.iter().map(|r| r.to_vec()).collect(), b: b.to_vec() }
}

/// `X = {x₂ ≥ |x₁| + 2}`.
fn upper_wedge() -> SetSpec {
    polyhedron(&[[1.0, -1.0], [-1.0, -1.0]], &[-2.0, -2.0])
}

/// `Y = {x₂ ≤ −|x₁|}`.
fn lower_wedge() -> SetSpec {
    polyhedron(&[[1.0, 1.0], [-1.0, 1.0]], &[0.0, 0.0])
}

fn reverse_lines(gamma: f64) -> [SetSpec; 2] {
    [
        SetSpec::Affine { base: vec![0.0, 0.0, 0.0], directions: vec![vec![1.0, 0.0, 0.0]] },
        SetSpec::Affine { base: vec![0.0, 0.0, gamma], directions: vec![vec![1.0, 1.0, 0.0]] },
    ]
}

/// `X = {x₁² − x₂ + 1 ≤ 0, −x₁ − x₂ + 1 ≤ 0}`, `Y = {y₁ + y₂ ≤ 0, y₁² + y₂ ≤ 0}`.
fn parabola_pair() -> [SetSpec; 2] {
    let q = vec![vec![2.0]];
    [
        SetSpec::Intersection {
            members: vec![
                SetSpec::QuadEpigraph { quad: q.clone(), q: vec![0.0], c: 1.0, t_sign: 1.0 },
                SetSpec::Halfspace { normal: vec![-1.0, -1.0], offset: -1.0 },
            ],
            slater: vec![0.0, 2.0],
        },
        SetSpec::Intersection {
            members: vec![
                SetSpec::Halfspace { normal: vec![1.0, 1.0], offset: 0.0 },
                SetSpec::QuadEpigraph { quad: q, q: vec![0.0], c: 0.0, t_sign: -1.0 },
            ],
            slater: vec![0.0, -1.0],
        },
    ]
}

const LP_SEED: u64 = 2024;
const LP_EPS: [f64; 3] = [0.1, 1.0, 10.0];

fn lp_demo() -> (LinearProgram, Vector) {
    random_lp(LP_SEED, 3, 4)
}

fn lp_json(lp: &LinearProgram, y: &Vector) -> Value {
    json!({
        "c": lp.c.as_slice(),
        "A": lp.a.row_iter().map(|r| r.iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>(),
        "b": lp.b.as_slice(),
        "sign": lp.sign,
        "dual": y.as_slice(),
    })
}

fn abs_value() -> MinMaxProblem {
    MinMaxProblem {
        pieces: vec![Piece::affine(vector(&[1.0]), 0.0), Piece::affine(vector(&[-1.0]), 0.0)],
        beta: -1.0,
    }
}

fn meta(pairs: Vec<(&str, Value)>) -> BTreeMap<String, Value> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// The problem file of an example; expectations live in `metadata`.
pub fn build_example(id: ExampleId) -> Result<ProblemSpec, AppError> {
    let spec = match id {
        ExampleId::ReverseLines => ProblemSpec {
            dimension: 3,
            sets: reverse_lines(1.0).to_vec(),
            start: vec![3.0, 0.0, -2.0],
            method: Method::Map,
            stop: StopCriteria::with_max_iter(500),
            metadata: meta(vec![
                ("gamma", json!(1.0)),
                ("gammas", json!([0.0, 1.0, 5.0])),
                ("expect", json!("x^k = (a/2^k, 0, 0) for every gamma; no finite termination")),
                ("closed_form_k", json!(40)),
                ("single_step_radii", json!([0.1, 0.01])),
            ]),
        },
        ExampleId::BallHyperplane => {
            let eps = 1.0;
            ProblemSpec {
                dimension: 2,
                sets: vec![
                    SetSpec::Ball { center: vec![0.0, 1.0], radius: 1.0 },
                    hyperplane(&[0.0, 1.0], -eps),
                ],
                start: holder_start(eps).as_slice().to_vec(),
                method: Method::Map,
                stop: StopCriteria::with_max_iter(400),
                metadata: meta(vec![
                    ("eps", json!(eps)),
                    ("expect", json!("asymptotic rate 1/(1+eps); best pair ((0,0),(0,-eps))")),
                    ("eps_grid", json!([0.0, 0.1, 0.5, 1.0, 2.0])),
                    ("rate_tol", json!(1e-3)),
                    ("sublinear_tail_min", json!(0.999)),
                ]),
            }
        }
        ExampleId::BapebVsTransversality => ProblemSpec {
            dimension: 2,
            sets: parabola_pair().to_vec(),
            start: vec![2.0, 3.0],
            method: Method::Map,
            stop: StopCriteria::default(),
            metadata: meta(vec![
                ("expect", json!("bilateral BAP-EB holds, intrinsic transversality fails")),
                ("x_bar", json!([0.0, 1.0])),
                ("y_bar", json!([0.0, 0.0])),
                ("witness_bound_ks", json!([10.0, 50.0])),
            ]),
        },
        ExampleId::ProductTransport => ProblemSpec {
            dimension: 2,
            sets: vec![lower_wedge(), upper_wedge()],
            start: vec![5.0, -3.0],
            method: Method::Cimmino,
            stop: StopCriteria::with_max_iter(10_000),
            metadata: meta(vec![
                ("H", serde_json::to_value(hyperplane(&[0.0, 1.0], 0.0)).expect("serialisable")),
                ("expect", json!("Cimmino on (Y,X) terminates finitely at (0,1); on (H,X) it only converges")),
                ("midpoint", json!([0.0, 1.0])),
                ("x_star", json!([0.0, 2.0])),
                ("omega", json!(std::f64::consts::FRAC_1_SQRT_2)),
            ]),
        },
        ExampleId::LpDemo => {
            let (lp, y) = lp_demo();
            let omega = lp.feasible_set()?;
            let level = lp.lower_bound(&y) - 1.0;
            ProblemSpec {
                dimension: 3,
                sets: vec![
                    SetSpec::from_set(&omega.into()).expect("polyhedron has a descriptor"),
                    SetSpec::Hyperplane { normal: lp.c.as_slice().to_vec(), offset: level },
                ],
                start: vec![5.0, 5.0, 5.0],
                method: Method::Map,
                stop: StopCriteria::default(),
                metadata: meta(vec![
                    ("lp", lp_json(&lp, &y)),
                    ("eps", json!(1.0)),
                    ("eps_grid", json!(LP_EPS)),
                    ("expect", json!("finite termination at an LP minimiser")),
                ]),
            }
        }
        ExampleId::MinmaxDemo => {
            let p = abs_value();
            let epi = p.epigraph()?;
            ProblemSpec {
                dimension: 2,
                sets: vec![
                    SetSpec::from_set(&epi).expect("polyhedron has a descriptor"),
                    SetSpec::from_set(&p.level_plane()?).expect("hyperplane has a descriptor"),
                ],
                start: vec![3.0, p.beta],
                method: Method::Map,
                stop: StopCriteria::default(),
                metadata: meta(vec![
                    ("g", json!("max(x, -x)")),
                    ("beta", json!(p.beta)),
                    ("expect", json!("finite termination at (0, 0)")),
                    ("minimizer", json!([0.0, 0.0])),
                ]),
            }
        }
        ExampleId::ParallelLinesCycle => ProblemSpec {
            dimension: 2,
            sets: vec![
                hyperplane(&[0.0, 1.0], 0.0),
                hyperplane(&[0.0, 1.0], 1.0),
                hyperplane(&[0.0, 1.0], 2.0),
            ],
            start: vec![1.0, 5.0],
            method: Method::Cyclic,
            stop: StopCriteria::default(),
            metadata: meta(vec![("expect", json!("cyclic projections capture a cycle finitely"))]),
        },
    };
    Ok(spec)
}

/// One observed-versus-expected comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub expected: String,
    pub observed: String,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub example: ExampleId,
    pub checks: Vec<Check>,
    pub pass: bool,
}

#[derive(Default)]
struct Checks(Vec<Check>);

impl Checks {
    fn add(&mut self, name: &str, expected: impl Into<String>, observed: impl Into<String>, pass: bool) {
        self.0.push(Check { name: name.into(), expected: expected.into(), observed: observed.into(), pass });
    }

    fn finish(self, example: ExampleId) -> Manifest {
        let pass = self.0.iter().all(|c| c.pass);
        Manifest { example, checks: self.0, pass }
    }
}

fn meta_f64(spec: &ProblemSpec, key: &str) -> Result<f64, AppError> {
    spec.metadata
        .get(key)
        .and_then(Value::as_f64)
        .ok_or_else(|| AppError::Invalid(format!("metadata {key:?} missing")))
}

fn meta_vec(spec: &ProblemSpec, key: &str) -> Result<Vec<f64>, AppError> {
    spec.metadata
        .get(key)
        .and_then(Value::as_array)
        .and_then(|a| a.iter().map(Value::as_f64).collect::<Option<Vec<_>>>())
        .ok_or_else(|| AppError::Invalid(format!("metadata {key:?} missing")))
}

fn dist(a: &Vector, b: &[f64]) -> f64 {
    (a - Vector::from_column_slice(b)).norm()
}

/// Runs an example and compares against its metadata.
pub fn reproduce(id: ExampleId) -> Result<Manifest, AppError> {
    let spec = build_example(id)?;
    let mut c = Checks::default();
    match id {
        ExampleId::ReverseLines => reproduce_reverse_lines(&spec, &mut c)?,
        ExampleId::BallHyperplane => reproduce_ball(&spec, &mut c)?,
        ExampleId::BapebVsTransversality => reproduce_parabolas(&spec, &mut c)?,
        ExampleId::ProductTransport => reproduce_transport(&spec, &mut c)?,
        ExampleId::LpDemo => reproduce_lp(&spec, &mut c)?,
        ExampleId::MinmaxDemo => reproduce_minmax(&spec, &mut c)?,
        ExampleId::ParallelLinesCycle => reproduce_cycle(&spec, &mut c)?,
    }
    Ok(c.finish(id))
}

fn reproduce_reverse_lines(spec: &ProblemSpec, c: &mut Checks) -> Result<(), AppError> {
    let a = spec.start[0];
    let kmax = meta_f64(spec, "closed_form_k")? as usize;
    let mut runs = Vec::new();
    for gamma in meta_vec(spec, "gammas")? {
        let sets = reverse_lines(gamma).map(|s| s.build()).into_iter().collect::<Result<Vec<_>, _>>()?;
        let run = map_run(&sets[0], &sets[1], &spec.start_vector(), &spec.stop)?;
        let err = run.trace.records[1..=kmax]
            .iter()
            .map(|r| dist(&r.iterate, &[a / 2f64.powi(r.k as i32), 0.0, 0.0]))
            .fold(0.0, f64::max);
        c.add(
            &format!("closed form, gamma = {gamma}"),
            format!("max over 1<=k<={kmax} of |x^k - (a/2^k,0,0)| <= 1e-12"),
            format!("{err:e}"),
            err <= 1e-12,
        );
        runs.push((sets, run));
    }
    let spread = runs[1..]
        .iter()
        .flat_map(|(_, r)| r.trace.iterates().zip(runs[0].1.trace.iterates()).map(|(p, q)| (p - q).norm()))
        .fold(0.0, f64::max);
    c.add("iterates independent of gamma", "<= 1e-14", format!("{spread:e}"), spread <= 1e-14);

    let (sets, run) = &runs[1];
    let ft = detect_finite_termination(&run.trace, &spec.stop);
    c.add(
        "no finite termination",
        format!("none within {} iterations", spec.stop.max_iter),
        format!("{ft:?}, {:?}", run.status),
        ft.is_none(),
    );
    let est = pair_from_point(&sets[0], &sets[1], &run.final_iterate)?;
    let bi = bilateral_bapeb_check(&sets[0], &sets[1], &run.trace, &est)?;
    c.add("bilateral BAP-EB", "fails_evidence", format!("{:?}", bi.verdict), bi.verdict == Verdict::FailsEvidence);
    let uni = unilateral_bapeb_estimate(&sets[0], &sets[1], &est, 1.0, 200, 0)?;
    c.add(
        "unilateral BAP-EB",
        "fails_evidence",
        format!("{:?}, omega {:e}", uni.verdict, uni.omega),
        uni.verdict == Verdict::FailsEvidence,
    );
    for r in meta_vec(spec, "single_step_radii")? {
        let ok = single_step_verify(&sets[0], &sets[1], &est, r, 100, 0)?;
        c.add(&format!("single-step property, r = {r}"), "false", ok.to_string(), !ok);
    }
    Ok(())
}

fn reproduce_ball(spec: &ProblemSpec, c: &mut Checks) -> Result<(), AppError> {
    let eps = meta_f64(spec, "eps")?;
    let sets = spec.build_sets()?;
    let run = map_run(&sets[0], &sets[1], &spec.start_vector(), &spec.stop)?;
    let d = displacement_estimate(&run.trace)?;
    let derr = dist(&d, &[0.0, eps]);
    c.add("displacement", format!("(0, {eps}) within 1e-8"), format!("{:?}", d.as_slice()), derr <= 1e-8);
    let est = pair_from_point(&sets[0], &sets[1], &run.final_iterate)?;
    let perr = dist(&est.x_bar, &[0.0, 0.0]).max(dist(&est.y_bar, &[0.0, -eps]));
    c.add("best pair", format!("((0,0),(0,{}))", -eps), format!("error {perr:e}"), perr <= 1e-8);
    let tol = meta_f64(spec, "rate_tol")?;
    let floor = meta_f64(spec, "sublinear_tail_min")?;
    for row in holder_rate_experiment(&meta_vec(spec, "eps_grid")?, &StopCriteria::with_max_iter(1000))? {
        if row.eps == 0.0 {
            c.add("rate, eps = 0", format!("last ratios > {floor}"), format!("min {}", row.tail_min), row.tail_min > floor);
        } else {
            let want = 1.0 / (1.0 + row.eps);
            c.add(
                &format!("rate, eps = {}", row.eps),
                format!("{want} +- {tol}"),
                row.rate.to_string(),
                (row.rate - want).abs() <= tol,
            );
        }
    }
    Ok(())
}

fn reproduce_parabolas(spec: &ProblemSpec, c: &mut Checks) -> Result<(), AppError> {
    let sets = spec.build_sets()?;
    let (x, y) = (&sets[0], &sets[1]);
    let run = map_run(x, y, &spec.start_vector(), &spec.stop)?;
    c.add("finite termination", "finite_termination", format!("{:?}", run.status), run.status.is_finite());
    let est = pair_from_point(x, y, &run.final_iterate)?;
    let perr = dist(&est.x_bar, &meta_vec(spec, "x_bar")?).max(dist(&est.y_bar, &meta_vec(spec, "y_bar")?));
    c.add("best pair", "((0,1),(0,0)) within 1e-8", format!("error {perr:e}"), perr <= 1e-8);
    let bi = bilateral_bapeb_check(x, y, &run.trace, &est)?;
    c.add("bilateral BAP-EB", "holds", format!("{:?}", bi.verdict), bi.verdict == Verdict::Holds);
    let witness = parabola_witness(&PARABOLA_WITNESS_KS);
    let tr = intrinsic_transversality_sample(x, y, &est, 0.5, 100, 0, Some(&witness))?;
    c.add(
        "intrinsic transversality",
        "fails_evidence",
        format!("{:?}, kappa {:e}", tr.verdict, tr.kappa),
        tr.verdict == Verdict::FailsEvidence,
    );
    for k in meta_vec(spec, "witness_bound_ks")? {
        let (xw, yw) = parabola_witness(&[k]).remove(0);
        let e = transversality_expression(x, y, &xw, &yw)?;
        c.add(&format!("witness expression, k = {k}"), format!("<= 2 * 3/{k}"), e.to_string(), e <= 6.0 / k);
    }
    for k in [2.0, 5.0, 10.0] {
        let (xw, yw) = parabola_witness(&[k]).remove(0);
        let u = vector(&[-2.0, k]) / (k * k + 4.0).sqrt();
        let a = x.normal_cone_distance(&xw, &(-&u))?;
        let b = y.normal_cone_distance(&yw, &u)?;
        c.add(
            &format!("common normal, k = {k}"),
            "u in -N_X(x^k) and N_Y(y^k)",
            format!("{a:e}, {b:e}"),
            a <= 1e-10 && b <= 1e-10,
        );
    }
    Ok(())
}

fn reproduce_transport(spec: &ProblemSpec, c: &mut Checks) -> Result<(), AppError> {
    let sets = spec.build_sets()?;
    let (y, x) = (sets[0].clone(), sets[1].clone());
    let h: ConvexSet = serde_json::from_value::<SetSpec>(spec.metadata["H"].clone())
        .map_err(|e| AppError::Invalid(e.to_string()))?
        .build()?;
    let mid = meta_vec(spec, "midpoint")?;
    let x_star = meta_vec(spec, "x_star")?;
    let z0 = spec.start_vector();

    let yx = cimmino_run(&[y.clone(), x.clone()], &z0, &spec.stop)?;
    c.add(
        "Cimmino (Y,X)",
        "finite termination at (0,1) within 1e-10",
        format!("{:?} at {:?}", yx.status, yx.final_iterate.as_slice()),
        yx.status.is_finite() && dist(&yx.final_iterate, &mid) <= 1e-10,
    );
    let hx = cimmino_run(&[h.clone(), x.clone()], &z0, &spec.stop)?;
    c.add(
        "Cimmino (H,X)",
        "converged_to_tol at (0,1) within 1e-8",
        format!("{:?} at {:?}", hx.status, hx.final_iterate.as_slice()),
        hx.status == Status::ConvergedToTol && dist(&hx.final_iterate, &mid) <= 1e-8,
    );
    for (label, pair, cim) in [("(Y,X)", [y.clone(), x.clone()], &yx), ("(H,X)", [h.clone(), x.clone()], &hx)] {
        let (prod, diag) = pierra_lift(&pair)?;
        let (pset, dset): (ConvexSet, ConvexSet) = (prod.into(), diag.into());
        let lifted = map_run(&dset, &pset, &diagonal_point(&z0, 2), &spec.stop)?;
        let gap = lifted
            .trace
            .iterates()
            .zip(cim.trace.iterates())
            .map(|(w, z)| (w.rows(0, 2) - z).amax())
            .fold(0.0, f64::max);
        let same = lifted.status.is_finite() == cim.status.is_finite() && lifted.trace.len() == cim.trace.len();
        c.add(
            &format!("product-space MAP {label}"),
            "same status as Cimmino, iterates within 1e-14",
            format!("{:?}, gap {gap:e}", lifted.status),
            same && gap <= 1e-14,
        );
    }
    for (label, a, b, want) in [("(X,H)", &x, &h, x_star.clone()), ("(H,X)", &h, &x, vec![0.0, 0.0])] {
        let run = map_run(a, b, &z0, &spec.stop)?;
        c.add(
            &format!("MAP {label}"),
            format!("finite termination at {want:?}"),
            format!("{:?} at {:?}", run.status, run.final_iterate.as_slice()),
            run.status.is_finite() && dist(&run.final_iterate, &want) <= 1e-10,
        );
    }
    let dr = dr_run(&x, &y, &z0, &spec.stop)?;
    let shadow = dr.best_pair.as_ref().map(|p| p.0.clone()).unwrap_or_else(|| Vector::zeros(2));
    c.add(
        "Douglas-Rachford (X,Y) shadow",
        "(0,2) within 1e-8",
        format!("{:?} / shadow {:?} at {:?}", dr.status, dr.shadow_status, shadow.as_slice()),
        dist(&shadow, &x_star) <= 1e-8 && dr.shadow_status.is_some_and(|s| s.converged()),
    );
    let (_, cycle) = cyclic_run(&[y.clone(), x.clone()], &z0, &spec.stop)?;
    let cerr = dist(&cycle.points[0], &[0.0, 0.0]).max(dist(&cycle.points[1], &x_star));
    c.add("cycle (Y,X)", "((0,0),(0,2))", format!("error {cerr:e}"), cerr <= 1e-10);

    let run = map_run(&x, &h, &z0, &spec.stop)?;
    let est = pair_from_point(&x, &h, &run.final_iterate)?;
    let uni = unilateral_bapeb_estimate(&x, &h, &est, 1.0, 500, 0)?;
    let want = meta_f64(spec, "omega")?;
    c.add(
        "unilateral BAP-EB (X,H)",
        format!("holds, omega {want:.4} +- 0.01"),
        format!("{:?}, omega {}", uni.verdict, uni.omega),
        uni.verdict == Verdict::Holds && (uni.omega - want).abs() <= 0.01,
    );
    let r = single_step_radius(&uni, &est)?;
    let ok = single_step_verify(&x, &h, &est, r, 1000, 0)?;
    c.add("single-step property (X,H)", "true", format!("{ok} (r = {r})"), ok);
    let run = map_run(&h, &x, &z0, &spec.stop)?;
    let est = pair_from_point(&h, &x, &run.final_iterate)?;
    let tr = intrinsic_transversality_sample(&h, &x, &est, 1.0, 200, 0, None)?;
    c.add(
        "intrinsic transversality (H,X)",
        "holds",
        format!("{:?}, kappa {}", tr.verdict, tr.kappa),
        tr.verdict == Verdict::Holds,
    );
    Ok(())
}

fn reproduce_lp(spec: &ProblemSpec, c: &mut Checks) -> Result<(), AppError> {
    let (lp, y) = lp_demo();
    let (_, best) = lp_vertex_solve(&lp)?;
    let mut iters = Vec::new();
    for eps in meta_vec(spec, "eps_grid")? {
        let sol = lp_solve_via_map(&lp, &y, eps, &spec.start_vector(), &spec.stop)?;
        c.add(
            &format!("LP, eps = {eps}"),
            format!("finite termination, value {best} within 1e-8, angle <= 1e-8"),
            format!("{:?}, value {}, angle {:e}", sol.run.status, sol.value, sol.angle),
            sol.run.status.is_finite()
                && (sol.value - best).abs() <= 1e-8
                && sol.angle <= 1e-8
                && lp_feasible(&lp, &sol.x, 1e-9),
        );
        iters.push(sol.run.iterations());
    }
    let mono = iters.windows(2).all(|w| w[1] <= w[0]);
    c.add("iterations vs eps", "nonincreasing", format!("{iters:?}"), mono);
    Ok(())
}

fn reproduce_minmax(spec: &ProblemSpec, c: &mut Checks) -> Result<(), AppError> {
    let sol = minmax_solve(&abs_value(), &vector(&spec.start[..1]), &spec.stop)?;
    let want = meta_vec(spec, "minimizer")?;
    c.add(
        "g = |x|",
        format!("finite termination at {want:?}"),
        format!("{:?} at ({}, {})", sol.run.status, sol.x[0], sol.value),
        sol.run.status.is_finite() && (sol.x[0] - want[0]).abs() <= 1e-10 && (sol.value - want[1]).abs() <= 1e-10,
    );
    let kinked = MinMaxProblem {
        pieces: vec![
            Piece::affine(vector(&[1.0]), 0.0),
            Piece::affine(vector(&[-1.0]), 0.0),
            Piece::affine(vector(&[1.0]), -0.5),
        ],
        beta: -1.0,
    };
    let sol = minmax_solve(&kinked, &vector(&[2.0]), &spec.stop)?;
    c.add(
        "g = max(x, -x, x - 0.5)",
        "finite termination at (0, 0)",
        format!("{:?} at ({}, {})", sol.run.status, sol.x[0], sol.value),
        sol.run.status.is_finite() && sol.x[0].abs() <= 1e-10 && sol.value.abs() <= 1e-10,
    );
    let two = Matrix::from_element(1, 1, 2.0);
    let quad = MinMaxProblem {
        pieces: vec![
            Piece::quadratic(two.clone(), vector(&[0.0]), 0.0),
            Piece::quadratic(two, vector(&[-2.0]), 1.0),
        ],
        beta: -1.0,
    };
    let sol = minmax_solve(&quad, &vector(&[2.0]), &StopCriteria::with_max_iter(5000))?;
    c.add(
        "g = max(x^2, (x-1)^2)",
        "(0.5, 0.25) within 1e-8",
        format!("{:?} at ({}, {})", sol.run.status, sol.x[0], sol.value),
        (sol.x[0] - 0.5).abs() <= 1e-8 && (sol.value - 0.25).abs() <= 1e-8,
    );
    Ok(())
}

fn reproduce_cycle(spec: &ProblemSpec, c: &mut Checks) -> Result<(), AppError> {
    let sets = spec.build_sets()?;
    let (run, cycle) = cyclic_run(&sets, &spec.start_vector(), &spec.stop)?;
    c.add(
        "cycle",
        "finite termination with a verified cycle",
        format!("{:?}, {:?}", run.status, cycle.points.iter().map(|p| p.as_slice().to_vec()).collect::<Vec<_>>()),
        run.status.is_finite(),
    );
    Ok(())
}

/// Two-set MAP instance taken from the registry.
pub struct MapInstance {
    pub label: String,
    pub x: ConvexSet,
    pub y: ConvexSet,
    pub start: Vector,
    pub stop: StopCriteria,
}

/// Every inconsistent two-set MAP instance in the registry, both orders
/// where the example uses both.
pub fn map_instances() -> Result<Vec<MapInstance>, AppError> {
    let mut out = Vec::new();
    let mut push = |label: String, x: &SetSpec, y: &SetSpec, start: Vector, stop: StopCriteria| -> Result<(), AppError> {
        out.push(MapInstance { label, x: x.build()?, y: y.build()?, start, stop });
        Ok(())
    };
    let rl = build_example(ExampleId::ReverseLines)?;
    for gamma in meta_vec(&rl, "gammas")?.into_iter().filter(|g| *g != 0.0) {
        let [a, b] = reverse_lines(gamma);
        push(format!("reverse-lines gamma={gamma}"), &a, &b, rl.start_vector(), rl.stop)?;
    }
    let bh = build_example(ExampleId::BallHyperplane)?;
    for eps in meta_vec(&bh, "eps_grid")?.into_iter().filter(|e| *e > 0.0) {
        let (x, y) = ball_hyperplane_sets(eps)?;
        out.push(MapInstance {
            label: format!("ball-hyperplane eps={eps}"),
            x,
            y,
            start: holder_start(eps),
            stop: bh.stop,
        });
    }
    let pv = build_example(ExampleId::BapebVsTransversality)?;
    out.push(MapInstance {
        label: "bapeb-vs-transversality".into(),
        x: pv.sets[0].build()?,
        y: pv.sets[1].build()?,
        start: pv.start_vector(),
        stop: pv.stop,
    });
    let pt = build_example(ExampleId::ProductTransport)?;
    let h: SetSpec = serde_json::from_value(pt.metadata["H"].clone()).map_err(|e| AppError::Invalid(e.to_string()))?;
    let (yw, xw) = (&pt.sets[0], &pt.sets[1]);
    for (label, a, b) in [("(X,H)", xw, &h), ("(H,X)", &h, xw), ("(X,Y)", xw, yw), ("(Y,X)", yw, xw)] {
        out.push(MapInstance {
            label: format!("product-transport {label}"),
            x: a.build()?,
            y: b.build()?,
            start: pt.start_vector(),
            stop: StopCriteria::default(),
        });
    }
    for id in [ExampleId::LpDemo, ExampleId::MinmaxDemo] {
        let s = build_example(id)?;
        out.push(MapInstance {
            label: id.name().into(),
            x: s.sets[0].build()?,
            y: s.sets[1].build()?,
            start: s.start_vector(),
            stop: s.stop,
        });
    }
    let pl = build_example(ExampleId::ParallelLinesCycle)?;
    out.push(MapInstance {
        label: "parallel-lines-cycle (first two lines)".into(),
        x: pl.sets[0].build()?,
        y: pl.sets[1].build()?,
        start: pl.start_vector(),
        stop: pl.stop,
    });
    Ok(out)
}
