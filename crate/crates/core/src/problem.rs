//! JSON problem files and CSV traces.
//!
//! A problem file looks like
//!
//! ```json
//! {
//!   "dimension": 2,
//!   "sets": [
//!     {"type": "polyhedron", "A": [[1, -1], [-1, -1]], "b": [-2, -2]},
//!     {"type": "hyperplane", "normal": [0, 1], "offset": 0}
//!   ],
//!   "start": [13, -7],
//!   "method": "map",
//!   "stop": {"max_iter": 200}
//! }
//! ```

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    AffineSubspace, Ball, ConvexSet, GeometryError, Halfspace, Hyperplane, IntersectionSet,
    Polyhedron, QuadraticEpigraph,
};
use crate::solvers::{
    cimmino_run, cyclic_iterate, dr_run, extract_cycle, map_run, Cycle, IterationTrace, RunResult,
    SolverError, StopCriteria,
};
use crate::{Matrix, Vector};

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("invalid JSON")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("invalid problem: {0}")]
    Invalid(String),
}

fn one() -> f64 {
    1.0
}

fn is_one(v: &f64) -> bool {
    *v == 1.0
}

/// Set descriptor as it appears in a problem file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetSpec {
    Hyperplane {
        normal: Vec<f64>,
        offset: f64,
    },
    Halfspace {
        normal: Vec<f64>,
        offset: f64,
    },
    Polyhedron {
        #[serde(rename = "A")]
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Affine {
        base: Vec<f64>,
        directions: Vec<Vec<f64>>,
    },
    QuadEpigraph {
        #[serde(rename = "Q")]
        quad: Vec<Vec<f64>>,
        q: Vec<f64>,
        c: f64,
        /// `-1` describes `{f(x) ≤ −t}`.
        #[serde(default = "one", skip_serializing_if = "is_one")]
        t_sign: f64,
    },
    Intersection {
        members: Vec<SetSpec>,
        slater: Vec<f64>,
    },
}

fn rows_to_matrix(rows: &[Vec<f64>], ncols: usize) -> Result<Matrix, ProblemError> {
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(ProblemError::Invalid(format!("matrix rows must have length {ncols}")));
    }
    Ok(Matrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn vec_of(v: &Vector) -> Vec<f64> {
    v.as_slice().to_vec()
}

impl SetSpec {
    pub fn build(&self) -> Result<ConvexSet, ProblemError> {
        let v = Vector::from_column_slice;
        Ok(match self {
            SetSpec::Hyperplane { normal, offset } => Hyperplane::new(v(normal), *offset)?.into(),
            SetSpec::Halfspace { normal, offset } => Halfspace::new(v(normal), *offset)?.into(),
            SetSpec::Polyhedron { a, b } => {
                let n = a.first().map_or(0, Vec::len);
                if a.len() != b.len() {
                    return Err(ProblemError::Invalid("A and b have different row counts".into()));
                }
                Polyhedron::from_matrix(&rows_to_matrix(a, n)?, &v(b))?.into()
            }
            SetSpec::Ball { center, radius } => Ball::new(v(center), *radius)?.into(),
            SetSpec::Affine { base, directions } => {
                AffineSubspace::new(v(base), directions.iter().map(|d| v(d)).collect())?.into()
            }
            SetSpec::QuadEpigraph { quad, q, c, t_sign } => {
                let m = rows_to_matrix(quad, q.len())?;
                QuadraticEpigraph::with_sign(m, v(q), *c, *t_sign)?.into()
            }
            SetSpec::Intersection { members, slater } => {
                let members = members.iter().map(SetSpec::build).collect::<Result<Vec<_>, _>>()?;
                IntersectionSet::new(members, v(slater))?.into()
            }
        })
    }

    /// Descriptor of a set; product and diagonal sets have none.
    pub fn from_set(set: &ConvexSet) -> Option<SetSpec> {
        Some(match set {
            ConvexSet::Hyperplane(h) => {
                SetSpec::Hyperplane { normal: vec_of(h.normal()), offset: h.offset() }
            }
            ConvexSet::Halfspace(h) => {
                SetSpec::Halfspace { normal: vec_of(h.normal()), offset: h.offset() }
            }
            ConvexSet::Polyhedron(p) => SetSpec::Polyhedron {
                a: p.rows().iter().map(|r| vec_of(r.normal())).collect(),
                b: p.rows().iter().map(Halfspace::offset).collect(),
            },
            ConvexSet::Ball(b) => SetSpec::Ball { center: vec_of(b.center()), radius: b.radius() },
            ConvexSet::Affine(a) => SetSpec::Affine {
                base: vec_of(a.base()),
                directions: a.directions().iter().map(vec_of).collect(),
            },
            ConvexSet::QuadEpigraph(e) => SetSpec::QuadEpigraph {
                quad: e.quad().row_iter().map(|r| r.iter().copied().collect()).collect(),
                q: vec_of(e.lin()),
                c: e.constant(),
                t_sign: e.t_sign(),
            },
            ConvexSet::Intersection(s) => SetSpec::Intersection {
                members: s.members().iter().map(SetSpec::from_set).collect::<Option<Vec<_>>>()?,
                slater: vec_of(s.slater()),
            },
            ConvexSet::Product(_) | ConvexSet::Diagonal(_) => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Map,
    Cyclic,
    Cimmino,
    Dr,
}

impl std::str::FromStr for Method {
    type Err = ProblemError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "map" => Ok(Method::Map),
            "cyclic" => Ok(Method::Cyclic),
            "cimmino" => Ok(Method::Cimmino),
            "dr" => Ok(Method::Dr),
            _ => Err(ProblemError::Invalid(format!("unknown method {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub dimension: usize,
    pub sets: Vec<SetSpec>,
    pub start: Vec<f64>,
    #[serde(default)]
    pub method: Method,
    #[serde(default)]
    pub stop: StopCriteria,
    /// Free-form labels; the example registry stores expectations here.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

/// Outcome of [`ProblemSpec::solve`].
#[derive(Clone, Debug)]
pub struct Solved {
    pub result: RunResult,
    /// Only for the cyclic method, and only when the run settled.
    pub cycle: Option<Cycle>,
}

impl ProblemSpec {
    pub fn from_json(text: &str) -> Result<Self, ProblemError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String, ProblemError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn start_vector(&self) -> Vector {
        Vector::from_column_slice(&self.start)
    }

    /// Builds the sets and checks counts and dimensions.
    pub fn build_sets(&self) -> Result<Vec<ConvexSet>, ProblemError> {
        if self.sets.len() < 2 {
            return Err(ProblemError::Invalid("at least two sets are required".into()));
        }
        if self.start.len() != self.dimension {
            return Err(ProblemError::Invalid(format!(
                "start has dimension {}, expected {}",
                self.start.len(),
                self.dimension
            )));
        }
        let sets = self.sets.iter().map(SetSpec::build).collect::<Result<Vec<_>, _>>()?;
        for (i, s) in sets.iter().enumerate() {
            if s.dim() != self.dimension {
                return Err(ProblemError::Invalid(format!(
                    "set {i} has dimension {}, expected {}",
                    s.dim(),
                    self.dimension
                )));
            }
        }
        if matches!(self.method, Method::Map | Method::Dr) && sets.len() != 2 {
            return Err(ProblemError::Invalid(format!(
                "{:?} takes exactly two sets, got {}",
                self.method,
                sets.len()
            )));
        }
        self.stop.validate()?;
        Ok(sets)
    }

    /// Runs the problem's method with the given stopping rule.
    pub fn solve(&self, stop: &StopCriteria) -> Result<Solved, ProblemError> {
        let sets = self.build_sets()?;
        let x0 = self.start_vector();
        let mut cycle = None;
        let result = match self.method {
            Method::Map => map_run(&sets[0], &sets[1], &x0, stop)?,
            Method::Dr => dr_run(&sets[0], &sets[1], &x0, stop)?,
            Method::Cimmino => cimmino_run(&sets, &x0, stop)?,
            Method::Cyclic => {
                let mut res = cyclic_iterate(&sets, &x0, stop)?;
                if res.status.converged() {
                    let c = extract_cycle(&sets, &res.final_iterate, stop)?;
                    res.best_pair = Some((c.points[0].clone(), c.points[1].clone()));
                    cycle = Some(c);
                }
                res
            }
        };
        Ok(Solved { result, cycle })
    }
}

/// Writes a trace as CSV: `k,x_0..,dist_X,dist_Y,step_norm,d_0..`, reals in
/// `%.16e` form (17 significant digits).
pub fn write_trace_csv<W: Write>(mut w: W, trace: &IterationTrace) -> io::Result<()> {
    let n = trace.records.first().map_or(0, |r| r.iterate.len());
    let nd = trace.records.first().map_or(n, |r| r.displacement_estimate.len());
    let mut header = vec!["k".to_string()];
    header.extend((0..n).map(|i| format!("x_{i}")));
    header.extend(["dist_X", "dist_Y", "step_norm"].map(String::from));
    header.extend((0..nd).map(|i| format!("d_{i}")));
    writeln!(w, "{}", header.join(","))?;
    for r in &trace.records {
        let mut row = vec![r.k.to_string()];
        row.extend(r.iterate.iter().map(|v| format!("{v:.16e}")));
        row.extend([r.dist_to_x, r.dist_to_y, r.step_norm].map(|v| format!("{v:.16e}")));
        row.extend(r.displacement_estimate.iter().map(|v| format!("{v:.16e}")));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Reads a trace CSV back into its header and numeric rows.
pub fn read_trace_csv<R: BufRead>(r: R) -> Result<(Vec<String>, Vec<Vec<f64>>), ProblemError> {
    let mut lines = r.lines();
    let header = match lines.next() {
        Some(h) => h.map_err(|e| ProblemError::Invalid(e.to_string()))?,
        None => return Err(ProblemError::Invalid("empty trace file".into())),
    };
    let header: Vec<String> = header.split(',').map(String::from).collect();
    let mut rows = Vec::new();
    for line in lines {
        let line = line.map_err(|e| ProblemError::Invalid(e.to_string()))?;
        let row = line
            .split(',')
            .map(|f| f.parse::<f64>().map_err(|e| ProblemError::Invalid(format!("{f:?}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        if row.len() != header.len() {
            return Err(ProblemError::Invalid("row length differs from header".into()));
        }
        rows.push(row);
    }
    Ok((header, rows))
}
