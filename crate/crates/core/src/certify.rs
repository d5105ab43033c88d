//! Certificates for best approximation pairs: the pair itself, the optimal
//! supporting hyperplanes, unilateral and bilateral BAP error bounds, the
//! single-step radius, local linear regularity and intrinsic transversality.
//!
//! Distances to `bap_Y(X)` use the most precise model available
//! ([`BapModel`]): a singleton when the exposed face `X ∩ ℍ_Y(X)` (or the
//! `Y`-side face) is a point, the polyhedron `X ∩ (Y + d)` when both sets are
//! polyhedral, and otherwise the superset `X ∩ ℍ_Y(X)`, in which case a
//! `Holds` verdict is downgraded to `Inconclusive`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    dykstra_limited, qp, AffineSubspace, ConvexSet, GeometryError, Hyperplane, LinearSystem,
};
use crate::solvers::{map_run, IterationTrace, SolverError, Status, StopCriteria};
use crate::Vector;

/// Ratios below this are treated as numerically zero.
pub const OMEGA_FLOOR: f64 = 1e-6;

/// Witness expressions below this count as evidence against transversality.
pub const TRANSVERSALITY_FLOOR: f64 = 1e-4;

/// `‖d‖` at or below this is treated as a consistent instance.
pub const CONSISTENT_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertifyError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("distance between the sets is not attained (run ended with {0:?})")]
    NotAttained(Status),
    #[error("instance is consistent (d = 0)")]
    Consistent,
    #[error("invalid report: {0}")]
    InvalidReport(&'static str),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    FailsEvidence,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestPairEstimate {
    #[serde(with = "crate::vecser")]
    pub x_bar: Vector,
    #[serde(with = "crate::vecser")]
    pub y_bar: Vector,
    #[serde(with = "crate::vecser")]
    pub d: Vector,
    /// `‖P_X P_Y(x̄) − x̄‖`.
    pub residual: f64,
    pub consistent: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SupportingHyperplane {
    pub plane: Hyperplane,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBoundReport {
    /// `+∞` (serialised as `null`) when no sample was available.
    pub omega: f64,
    pub delta: f64,
    pub r: f64,
    pub samples: usize,
    #[serde(with = "crate::vecser")]
    pub min_ratio_witness: Vector,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransversalityReport {
    pub kappa: f64,
    pub samples: usize,
    pub verdict: Verdict,
}

/// Runs MAP and reads off `(x̄, P_Y x̄)`.
pub fn estimate_best_pair(
    x_set: &ConvexSet,
    y_set: &ConvexSet,
    x0: &Vector,
    stop: &StopCriteria,
) -> Result<BestPairEstimate, CertifyError> {
    let run = map_run(x_set, y_set, x0, stop)?;
    if run.status == Status::Diverged {
        return Err(CertifyError::NotAttained(run.status));
    }
    pair_from_point(x_set, y_set, &run.final_iterate)
}

/// Best-pair estimate anchored at a given `x̄`.
pub fn pair_from_point(
    x_set: &ConvexSet,
    y_set: &ConvexSet,
    x_bar: &Vector,
) -> Result<BestPairEstimate, CertifyError> {
    let y_bar = y_set.project(x_bar)?;
    let next = x_set.project(&y_bar)?;
    let d = x_bar - &y_bar;
    Ok(BestPairEstimate {
        residual: (&next - x_bar).norm(),
        consistent: d.norm() <= CONSISTENT_TOL,
        x_bar: x_bar.clone(),
        y_bar,
        d,
    })
}

/// `ℍ_Y(X) = {z : ⟨z − x̄, d⟩ = 0}`, normalised.
pub fn optimal_supporting_hyperplane(
    est: &BestPairEstimate,
) -> Result<SupportingHyperplane, CertifyError> {
    plane_through(&est.x_bar, &est.d).map(|plane| SupportingHyperplane { plane })
}

fn plane_through(at: &Vector, d: &Vector) -> Result<Hyperplane, CertifyError> {
    let n = d.norm();
    if n <= CONSISTENT_TOL {
        return Err(CertifyError::Consistent);
    }
    let u = d / n;
    let offset = u.dot(at);
    Ok(Hyperplane::new(u, offset)?)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BapKind {
    Singleton,
    Polyhedral,
    Surrogate,
}

/// Representation of `bap_Y(X)` and `bap_X(Y) = bap_Y(X) − d`.
#[derive(Clone, Debug)]
pub struct BapModel {
    pub kind: BapKind,
    pub est: BestPairEstimate,
    /// `ℍ_Y(X)`, through `x̄`.
    pub plane_x: Hyperplane,
    /// `ℍ_X(Y)`, through `ȳ`.
    pub plane_y: Hyperplane,
    x_sys: Option<LinearSystem>,
    y_sys: Option<LinearSystem>,
    x_set: ConvexSet,
    y_set: ConvexSet,
}

const PROBE_STEP: f64 = 1e-3;

/// Dykstra sweeps for surrogate distances; these only feed non-`Holds` verdicts.
const SURROGATE_SWEEPS: usize = 500;

/// Axis probes are placed at `radius/2 · 4^{-j}` for `j = 0..=PROBE_SCALES`.
const PROBE_SCALES: i32 = 12;

fn probe_directions(d: &Vector) -> Vec<Vector> {
    let n = d.len();
    let perp = AffineSubspace::new(Vector::zeros(n), vec![d.clone()])
        .map(|a| a.complement())
        .unwrap_or_default();
    let mut dirs = Vec::new();
    for (i, u) in perp.iter().enumerate() {
        dirs.push(u.clone());
        dirs.push(-u);
        for v in &perp[i + 1..] {
            for s in [1.0, -1.0] {
                let w = (u + v * s) / 2f64.sqrt();
                dirs.push(w.clone());
                dirs.push(-w);
            }
        }
    }
    dirs
}

/// Whether `set ∩ plane` reduces to `at`.
fn face_is_singleton(set: &ConvexSet, plane: &Hyperplane, at: &Vector) -> bool {
    let dirs = probe_directions(plane.normal());
    let t = PROBE_STEP * (1.0 + at.norm());
    if let Some(mut sys) = set.linear_system() {
        sys.eq.push((plane.normal().clone(), plane.offset()));
        let exact = dirs.iter().map(|v| qp::project(&sys, &(at + v * t))).collect::<Result<Vec<_>, _>>();
        if let Ok(sols) = exact {
            return sols.iter().all(|s| (&s.x - at).norm() <= 1e-3 * t);
        }
    }
    // Smooth or mixed sets: a probe that projects back onto the plane at a
    // different point reveals a nontrivial face.
    for v in &dirs {
        let Ok(p) = set.project(&(at + v * t)) else {
            return false;
        };
        let on_plane = plane.violation(&p) <= 1e-9 * t;
        if on_plane && (&p - at).norm() > 1e-3 * t {
            return false;
        }
    }
    true
}

impl BapModel {
    pub fn new(
        x_set: &ConvexSet,
        y_set: &ConvexSet,
        est: &BestPairEstimate,
    ) -> Result<Self, CertifyError> {
        let plane_x = plane_through(&est.x_bar, &est.d)?;
        let plane_y = plane_through(&est.y_bar, &est.d)?;
        let mut model = Self {
            kind: BapKind::Surrogate,
            est: est.clone(),
            plane_x: plane_x.clone(),
            plane_y: plane_y.clone(),
            x_sys: None,
            y_sys: None,
            x_set: x_set.clone(),
            y_set: y_set.clone(),
        };
        if face_is_singleton(x_set, &plane_x, &est.x_bar)
            || face_is_singleton(y_set, &plane_y, &est.y_bar)
        {
            model.kind = BapKind::Singleton;
            return Ok(model);
        }
        if let (Some(xs), Some(ys)) = (x_set.linear_system(), y_set.linear_system()) {
            let shift = |sys: &LinearSystem, v: &Vector| LinearSystem {
                eq: sys.eq.iter().map(|(a, b)| (a.clone(), b + a.dot(v))).collect(),
                ineq: sys.ineq.iter().map(|(a, b)| (a.clone(), b + a.dot(v))).collect(),
            };
            // bap_Y(X) = X ∩ (Y + d), bap_X(Y) = Y ∩ (X − d)
            let mut bx = xs.clone();
            bx.extend(shift(&ys, &est.d));
            let mut by = ys;
            by.extend(shift(&xs, &(-&est.d)));
            if qp::project(&bx, &est.x_bar).is_ok() && qp::project(&by, &est.y_bar).is_ok() {
                model.kind = BapKind::Polyhedral;
                model.x_sys = Some(bx);
                model.y_sys = Some(by);
            }
        }
        Ok(model)
    }

    pub fn is_exact(&self) -> bool {
        self.kind != BapKind::Surrogate
    }

    /// `dist(z, bap_Y(X))`.
    pub fn dist_bap_x(&self, z: &Vector) -> Result<f64, CertifyError> {
        self.dist(z, &self.est.x_bar, self.x_sys.as_ref(), &self.x_set, &self.plane_x)
    }

    /// `dist(z, bap_X(Y))`.
    pub fn dist_bap_y(&self, z: &Vector) -> Result<f64, CertifyError> {
        self.dist(z, &self.est.y_bar, self.y_sys.as_ref(), &self.y_set, &self.plane_y)
    }

    fn dist(
        &self,
        z: &Vector,
        anchor: &Vector,
        sys: Option<&LinearSystem>,
        set: &ConvexSet,
        plane: &Hyperplane,
    ) -> Result<f64, CertifyError> {
        match self.kind {
            BapKind::Singleton => Ok((z - anchor).norm()),
            BapKind::Polyhedral => {
                let sys = sys.expect("polyhedral model has systems");
                Ok((z - qp::project(sys, z)?.x).norm())
            }
            BapKind::Surrogate => {
                let sets = [set.clone(), plane.clone().into()];
                Ok((z - dykstra_limited(&sets, z, SURROGATE_SWEEPS)?).norm())
            }
        }
    }

    /// Whether `z` lies in `bap_Y(X)` up to `tol`.
    fn in_bap_x(&self, z: &Vector) -> Result<bool, CertifyError> {
        Ok(self.dist_bap_x(z)? <= bap_tol(z))
    }
}

fn bap_tol(z: &Vector) -> f64 {
    1e-10 * (1.0 + z.norm())
}

/// Uniform sample from `B_r(center)`.
pub fn sample_ball(rng: &mut impl Rng, center: &Vector, radius: f64) -> Vector {
    let n = center.len();
    let dir = Vector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
    let norm = dir.norm();
    if norm == 0.0 {
        return center.clone();
    }
    let r = radius * rng.gen::<f64>().powf(1.0 / n as f64);
    center + dir * (r / norm)
}

/// `x̄ ± s e_i` for every coordinate.
fn axis_probes(center: &Vector, s: f64) -> Vec<Vector> {
    let n = center.len();
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        for sign in [1.0, -1.0] {
            let mut p = center.clone();
            p[i] += sign * s;
            out.push(p);
        }
    }
    out
}

/// Unilateral BAP-EB: `ω dist(x, bap_Y(X)) ≤ dist(x, ℍ_Y(X))` on `B_δ(x̄) ∩ X`.
///
/// Samples are projections onto `X` of uniform points of the ball, at radii
/// `δ, δ/2, δ/4, δ/8`, plus projections of axis probes `x̄ ± s e_i` at
/// geometrically shrinking `s`. Per-level minima that keep decreasing and end
/// below [`OMEGA_FLOOR`] are reported as failure evidence.
pub fn unilateral_bapeb_estimate(
    x_set: &ConvexSet,
    y_set: &ConvexSet,
    est: &BestPairEstimate,
    delta: f64,
    n_samples: usize,
    rng_seed: u64,
) -> Result<ErrorBoundReport, CertifyError> {
    if !(delta > 0.0) {
        return Err(CertifyError::InvalidReport("delta must be positive"));
    }
    let model = BapModel::new(x_set, y_set, est)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut omega = f64::INFINITY;
    let mut witness = est.x_bar.clone();
    let mut count = 0usize;
    let mut level_min = Vec::new();
    for level in 0..4 {
        let radius = delta / f64::from(1u32 << level);
        let mut lmin = f64::INFINITY;
        let mut points: Vec<Vector> = (0..n_samples).map(|_| sample_ball(&mut rng, &est.x_bar, radius)).collect();
        for j in 0..=PROBE_SCALES {
            points.extend(axis_probes(&est.x_bar, radius / 2.0 / 4f64.powi(j)));
        }
        for z in points {
            let x = x_set.project(&z)?;
            if (&x - &est.x_bar).norm() > radius {
                continue;
            }
            let db = model.dist_bap_x(&x)?;
            if db <= bap_tol(&x) {
                continue;
            }
            count += 1;
            let ratio = model.plane_x.violation(&x) / db;
            if ratio < lmin {
                lmin = ratio;
            }
            if ratio < omega {
                omega = ratio;
                witness = x;
            }
        }
        level_min.push(lmin);
    }
    let verdict = if count == 0 {
        Verdict::Holds
    } else if omega >= OMEGA_FLOOR {
        if model.is_exact() {
            Verdict::Holds
        } else {
            Verdict::Inconclusive
        }
    } else {
        let finite: Vec<f64> = level_min.iter().copied().filter(|v| v.is_finite()).collect();
        let monotone = finite.windows(2).all(|w| w[1] <= w[0]);
        if monotone && finite.last().is_some_and(|&v| v < OMEGA_FLOOR) {
            Verdict::FailsEvidence
        } else {
            Verdict::Inconclusive
        }
    };
    let r = if verdict == Verdict::Holds && omega.is_finite() {
        (omega * est.d.norm()).min(delta / 2.0)
    } else {
        0.0
    };
    Ok(ErrorBoundReport { omega, delta, r, samples: count, min_ratio_witness: witness, verdict })
}

/// Bilateral BAP-EB along a MAP trace: at every step at least one of
/// `ω dist(P_Y x^k, bap_X(Y)) ≤ dist(P_Y x^k, ℍ_X(Y))` and
/// `ω dist(x^{k+1}, bap_Y(X)) ≤ dist(x^{k+1}, ℍ_Y(X))` must hold.
///
/// `omega` is the smallest per-step maximum of the two ratios; a point already
/// in the bap set has ratio `+∞`. The verdict is `Holds` when `omega` stays
/// above [`OMEGA_FLOOR`] and the trace reaches the bap set,
/// `FailsEvidence` when `omega` drops below the floor, and `Inconclusive`
/// when the ratios stay bounded but the trace never reaches the bap set.
pub fn bilateral_bapeb_check(
    x_set: &ConvexSet,
    y_set: &ConvexSet,
    trace: &IterationTrace,
    est: &BestPairEstimate,
) -> Result<ErrorBoundReport, CertifyError> {
    let model = BapModel::new(x_set, y_set, est)?;
    let mut omega = f64::INFINITY;
    let mut witness = est.x_bar.clone();
    let mut samples = 0usize;
    let mut reached = false;
    let recs = &trace.records;
    for (i, rec) in recs.iter().enumerate() {
        let y = y_set.project(&rec.iterate)?;
        let next = match recs.get(i + 1) {
            Some(n) => n.iterate.clone(),
            None => x_set.project(&y)?,
        };
        let dy = model.dist_bap_y(&y)?;
        let ratio_y = if dy <= bap_tol(&y) { f64::INFINITY } else { model.plane_y.violation(&y) / dy };
        let dx = model.dist_bap_x(&next)?;
        let ratio_x = if dx <= bap_tol(&next) {
            f64::INFINITY
        } else {
            model.plane_x.violation(&next) / dx
        };
        if model.in_bap_x(&next)? {
            reached = true;
        }
        let m = ratio_y.max(ratio_x);
        samples += 1;
        if m < omega {
            omega = m;
            witness = rec.iterate.clone();
        }
        if reached {
            break;
        }
    }
    let verdict = if omega < OMEGA_FLOOR {
        Verdict::FailsEvidence
    } else if !reached {
        Verdict::Inconclusive
    } else if model.is_exact() {
        Verdict::Holds
    } else {
        Verdict::Inconclusive
    };
    Ok(ErrorBoundReport { omega, delta: 0.0, r: 0.0, samples, min_ratio_witness: witness, verdict })
}

/// `r = min{ω ‖d‖, δ/2}`.
pub fn single_step_radius(report: &ErrorBoundReport, est: &BestPairEstimate) -> Result<f64, CertifyError> {
    if report.verdict != Verdict::Holds || !report.omega.is_finite() || report.omega <= 0.0 {
        return Err(CertifyError::InvalidReport("needs a Holds report with finite omega"));
    }
    Ok((report.omega * est.d.norm()).min(report.delta / 2.0))
}

/// Checks `P_X P_Y(z) ∈ bap_Y(X)` (within `1e-8`) for sampled `z ∈ B_r(x̄)`,
/// the centre, and the axis probes `x̄ ± (r/2) e_i`.
///
/// Uses the exact bap model when available; otherwise the superset
/// `{x ∈ X : ⟨x − x̄, d⟩ ≤ 1e-9}`.
pub fn single_step_verify(
    x_set: &ConvexSet,
    y_set: &ConvexSet,
    est: &BestPairEstimate,
    r: f64,
    n_samples: usize,
    rng_seed: u64,
) -> Result<bool, CertifyError> {
    let model = BapModel::new(x_set, y_set, est)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut points = vec![est.x_bar.clone()];
    points.extend(axis_probes(&est.x_bar, r / 2.0));
    points.extend((0..n_samples).map(|_| sample_ball(&mut rng, &est.x_bar, r)));
    for z in points {
        let w = x_set.project(&y_set.project(&z)?)?;
        let ok = if model.is_exact() {
            model.dist_bap_x(&w)? <= 1e-8
        } else {
            x_set.contains(&w) && (&w - &est.x_bar).dot(&est.d) <= 1e-9
        };
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Empirical `κ = max dist(z, bap_Y(X)) / max{dist(z, X), dist(z, Y + d)}`
/// over uniform `z ∈ B_ρ(x̄)`.
pub fn linear_regularity_estimate(
    x_set: &ConvexSet,
    y_set: &ConvexSet,
    est: &BestPairEstimate,
    rho: f64,
    n_samples: usize,
    rng_seed: u64,
) -> Result<f64, CertifyError> {
    let model = BapModel::new(x_set, y_set, est)?;
    let shifted = y_set.translated(&est.d);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut kappa: f64 = 0.0;
    for _ in 0..n_samples {
        let z = sample_ball(&mut rng, &est.x_bar, rho);
        let num = model.dist_bap_x(&z)?;
        let den = x_set.distance(&z)?.max(shifted.distance(&z)?);
        if num <= bap_tol(&z) || den == 0.0 {
            continue;
        }
        kappa = kappa.max(num / den);
    }
    Ok(kappa)
}

/// The bapeb-vs-transversality witness pairs `x^k = (1/k, 1/k² + 1)`,
/// `y^k = (−1/k, −1/k²)`.
pub fn parabola_witness(ks: &[f64]) -> Vec<(Vector, Vector)> {
    ks.iter()
        .map(|&k| {
            (
                Vector::from_vec(vec![1.0 / k, 1.0 / (k * k) + 1.0]),
                Vector::from_vec(vec![-1.0 / k, -1.0 / (k * k)]),
            )
        })
        .collect()
}

/// Default `k` values for [`parabola_witness`].
pub const PARABOLA_WITNESS_KS: [f64; 9] = [2.0, 5.0, 10.0, 50.0, 100.0, 1e3, 1e4, 1e5, 1e6];

/// `max{dist(u, N_Y(y)), dist(−u, N_X(x))}` with `u = (x − y)/‖x − y‖`;
/// interior points contribute 1.
pub fn transversality_expression(
    x_set: &ConvexSet,
    y_set: &ConvexSet,
    x: &Vector,
    y: &Vector,
) -> Result<f64, CertifyError> {
    let gap = x - y;
    let n = gap.norm();
    if n == 0.0 {
        return Err(CertifyError::Consistent);
    }
    let u = gap / n;
    let cone = |set: &ConvexSet, at: &Vector, dir: &Vector| -> Result<f64, CertifyError> {
        match set.normal_cone_distance(at, dir) {
            Ok(v) => Ok(v),
            Err(GeometryError::InteriorPoint) => Ok(1.0),
            Err(e) => Err(e.into()),
        }
    };
    let a = cone(y_set, y, &u)?;
    let b = cone(x_set, x, &(-&u))?;
    Ok(a.max(b).clamp(0.0, 1.0))
}

/// Samples the intrinsic-transversality expression over pairs
/// `x ∈ X ∩ B_δ(x̄)`, `y ∈ (Y ∖ bap_X(Y)) ∩ B_δ(ȳ)` at radii `δ, …, δ/8`,
/// then evaluates the optional deterministic witness pairs.
///
/// Axis probes `x̄ ± s e_i`, `ȳ ± s e_i` projected onto the sets give a
/// deterministic pair family for each scale `s = δ/2 · 4^{-j}`. A witness
/// value below [`TRANSVERSALITY_FLOOR`], or probe minima that decrease with
/// `s` and end below it, give `FailsEvidence`.
/// Sampled minima that shrink under refinement give `Inconclusive`.
pub fn intrinsic_transversality_sample(
    x_set: &ConvexSet,
    y_set: &ConvexSet,
    est: &BestPairEstimate,
    delta: f64,
    n_samples: usize,
    rng_seed: u64,
    witness: Option<&[(Vector, Vector)]>,
) -> Result<TransversalityReport, CertifyError> {
    let model = BapModel::new(x_set, y_set, est)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut kappa: f64 = 1.0;
    let mut samples = 0usize;
    let mut level_min = Vec::new();
    for level in 0..4 {
        let radius = delta / f64::from(1u32 << level);
        let mut lmin = f64::INFINITY;
        for _ in 0..n_samples {
            let x = x_set.project(&sample_ball(&mut rng, &est.x_bar, radius))?;
            let y = y_set.project(&sample_ball(&mut rng, &est.y_bar, radius))?;
            if (&x - &est.x_bar).norm() > radius || (&y - &est.y_bar).norm() > radius {
                continue;
            }
            if model.dist_bap_y(&y)? <= bap_tol(&y) {
                continue;
            }
            lmin = lmin.min(transversality_expression(x_set, y_set, &x, &y)?);
            samples += 1;
        }
        kappa = kappa.min(lmin);
        level_min.push(lmin);
    }
    // deterministic pairs from axis probes at shrinking scales
    let mut probe_min = Vec::new();
    for j in 0..=PROBE_SCALES {
        let step = delta / 2.0 / 4f64.powi(j);
        let mut xs = vec![est.x_bar.clone()];
        for z in axis_probes(&est.x_bar, step) {
            xs.push(x_set.project(&z)?);
        }
        let mut ys = Vec::new();
        for z in axis_probes(&est.y_bar, step) {
            let y = y_set.project(&z)?;
            if model.dist_bap_y(&y)? > bap_tol(&y) {
                ys.push(y);
            }
        }
        let mut pmin = f64::INFINITY;
        for x in &xs {
            for y in &ys {
                pmin = pmin.min(transversality_expression(x_set, y_set, x, y)?);
                samples += 1;
            }
        }
        if pmin.is_finite() {
            probe_min.push(pmin);
        }
    }
    let probes_fail = probe_min.len() >= 2
        && probe_min.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9))
        && probe_min[probe_min.len() - 1] < TRANSVERSALITY_FLOOR;
    kappa = probe_min.iter().copied().fold(kappa, f64::min);
    // minima that halve under refinement point to a decaying expression
    let finite: Vec<f64> = level_min.iter().copied().filter(|v| v.is_finite()).collect();
    let decaying = finite.len() >= 2
        && finite.windows(2).all(|w| w[1] <= w[0])
        && finite[finite.len() - 1] < 0.5 * finite[0];
    let mut witness_min = f64::INFINITY;
    for (x, y) in witness.unwrap_or(&[]) {
        let v = transversality_expression(x_set, y_set, x, y)?;
        witness_min = witness_min.min(v);
        kappa = kappa.min(v);
        samples += 1;
    }
    let verdict = if witness_min < TRANSVERSALITY_FLOOR || probes_fail {
        Verdict::FailsEvidence
    } else if kappa >= TRANSVERSALITY_FLOOR && !decaying && model.is_exact() {
        Verdict::Holds
    } else {
        Verdict::Inconclusive
    };
    Ok(TransversalityReport { kappa, samples, verdict })
}
