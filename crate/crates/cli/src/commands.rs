use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use altproj::apps::holder::{holder_rate_experiment, write_holder_csv};
use altproj::apps::lp::{lp_solve_via_map, LinearProgram};
use altproj::apps::minmax::{minmax_solve, MinMaxProblem, Piece};
use altproj::apps::registry::{build_example, reproduce, ExampleId};
use altproj::certify::{
    bilateral_bapeb_check, intrinsic_transversality_sample, linear_regularity_estimate,
    optimal_supporting_hyperplane, pair_from_point, single_step_radius, single_step_verify,
    unilateral_bapeb_estimate, CertifyError, Verdict,
};
use altproj::oracle::lp_vertex_solve;
use altproj::problem::{write_trace_csv, Method, ProblemSpec};
use altproj::solvers::{displacement_estimate, map_run, RunResult, Status, StopCriteria};
use altproj::{Matrix, Vector};
use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use log::info;
use serde::Deserialize;
use serde_json::{json, Value};

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_DIVERGED: u8 = 2;
pub const EXIT_MAX_ITER: u8 = 3;
pub const EXIT_FAILS: u8 = 4;
pub const EXIT_INCONCLUSIVE: u8 = 5;
pub const EXIT_CONSISTENT: u8 = 6;

#[derive(Parser, Debug)]
#[command(name = "altproj", version, about = "Alternating projections for inconsistent convex feasibility problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the problem's method and write a trace.
    Run {
        problem: PathBuf,
        /// Override the method in the problem file (map, cyclic, cimmino, dr).
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        max_iter: Option<usize>,
        /// Override the fixed-point tolerance.
        #[arg(long)]
        tol: Option<f64>,
        /// CSV trace destination.
        #[arg(long)]
        trace_out: Option<PathBuf>,
        /// JSON summary destination (stdout when absent).
        #[arg(long)]
        summary_out: Option<PathBuf>,
    },
    /// Certify a two-set problem: best pair, error bounds, transversality.
    Certify {
        problem: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, env = "ALTPROJ_SEED", default_value_t = 0)]
        seed: u64,
        /// JSON report destination (stdout when absent).
        #[arg(long)]
        report_out: Option<PathBuf>,
    },
    /// Rerun a registry example and check it against its expectations.
    Reproduce {
        /// Example id, or `all`.
        example: String,
        #[arg(long, default_value = "reproduce-out")]
        out_dir: PathBuf,
    },
    /// Solve an LP from a JSON file by alternating projections.
    Lp {
        problem: PathBuf,
        /// Override the gap below the dual bound.
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Minimise a maximum of affine or quadratic pieces.
    Minmax { problem: PathBuf },
    /// Ball versus hyperplane rate experiment; CSV on stdout or `--out`.
    HolderSweep {
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 0.1, 0.5, 1.0, 2.0])]
        eps: Vec<f64>,
        #[arg(long, default_value_t = 1000)]
        max_iter: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub fn dispatch(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Run { problem, method, max_iter, tol, trace_out, summary_out } => {
            cmd_run(&problem, method.as_deref(), max_iter, tol, trace_out.as_deref(), summary_out.as_deref())
        }
        Command::Certify { problem, delta, samples, seed, report_out } => {
            cmd_certify(&problem, delta, samples, seed, report_out.as_deref())
        }
        Command::Reproduce { example, out_dir } => cmd_reproduce(&example, &out_dir),
        Command::Lp { problem, eps } => cmd_lp(&problem, eps),
        Command::Minmax { problem } => cmd_minmax(&problem),
        Command::HolderSweep { eps, max_iter, out } => cmd_holder(&eps, max_iter, out.as_deref()),
    }
}

fn load_problem(path: &Path) -> Result<ProblemSpec> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let spec = ProblemSpec::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
    spec.build_sets().with_context(|| format!("validating {}", path.display()))?;
    Ok(spec)
}

fn emit(value: &Value, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn status_code(s: &Status) -> u8 {
    match s {
        Status::FiniteTermination { .. } | Status::ConvergedToTol => EXIT_OK,
        Status::Diverged => EXIT_DIVERGED,
        Status::MaxIterReached => EXIT_MAX_ITER,
    }
}

fn slice(v: &Vector) -> &[f64] {
    v.as_slice()
}

fn run_summary(res: &RunResult) -> Value {
    let distance = displacement_estimate(&res.trace).map(|d| d.norm()).ok();
    let mut v = json!({
        "status": res.status,
        "final_iterate": slice(&res.final_iterate),
        "distance": distance,
        "iterations": res.iterations(),
    });
    if let Some((x, y)) = &res.best_pair {
        v["best_pair"] = json!([slice(x), slice(y)]);
    }
    if let Some(s) = &res.shadow_status {
        v["shadow_status"] = json!(s);
    }
    v
}

pub fn cmd_run(
    path: &Path,
    method: Option<&str>,
    max_iter: Option<usize>,
    tol: Option<f64>,
    trace_out: Option<&Path>,
    summary_out: Option<&Path>,
) -> Result<u8> {
    let mut spec = load_problem(path)?;
    if let Some(m) = method {
        spec.method = m.parse::<Method>()?;
    }
    let mut stop = spec.stop;
    if let Some(n) = max_iter {
        stop.max_iter = n;
    }
    if let Some(t) = tol {
        stop.fix_tol = t;
    }
    let solved = spec.solve(&stop)?;
    let res = &solved.result;
    info!("{:?} after {} iterations", res.status, res.iterations());
    if let Some(p) = trace_out {
        let f = File::create(p).with_context(|| format!("creating {}", p.display()))?;
        let mut w = BufWriter::new(f);
        write_trace_csv(&mut w, &res.trace)?;
        w.flush()?;
    }
    let mut summary = run_summary(res);
    if let Some(c) = &solved.cycle {
        summary["cycle"] = json!(c.points.iter().map(|p| slice(p).to_vec()).collect::<Vec<_>>());
    }
    emit(&summary, summary_out)?;
    Ok(status_code(&res.status))
}

fn verdict_code(v: Verdict) -> u8 {
    match v {
        Verdict::Holds => EXIT_OK,
        Verdict::FailsEvidence => EXIT_FAILS,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

/// Runs the certificate pipeline; the exit code follows the bilateral
/// BAP-EB verdict, which decides finite termination along the MAP run.
pub fn cmd_certify(path: &Path, delta: f64, samples: usize, seed: u64, out: Option<&Path>) -> Result<u8> {
    let spec = load_problem(path)?;
    let sets = spec.build_sets()?;
    if sets.len() != 2 {
        bail!("certify takes a two-set problem, got {} sets", sets.len());
    }
    let (x, y) = (&sets[0], &sets[1]);
    let run = map_run(x, y, &spec.start_vector(), &spec.stop)?;
    if run.status == Status::Diverged {
        bail!("MAP diverged: the distance between the sets is not attained");
    }
    let est = pair_from_point(x, y, &run.final_iterate)?;
    let mut report = json!({
        "run": run_summary(&run),
        "best_pair": est,
    });
    if est.consistent {
        report["consistent"] = json!(true);
        emit(&report, out)?;
        return Ok(EXIT_CONSISTENT);
    }
    let plane = optimal_supporting_hyperplane(&est)?.plane;
    report["supporting_hyperplane"] = json!({"normal": slice(plane.normal()), "offset": plane.offset()});
    let uni = unilateral_bapeb_estimate(x, y, &est, delta, samples, seed)?;
    let bi = bilateral_bapeb_check(x, y, &run.trace, &est)?;
    let kappa = linear_regularity_estimate(x, y, &est, delta / 2.0, samples, seed.wrapping_add(1))?;
    report["unilateral"] = json!(uni);
    report["bilateral"] = json!(bi);
    report["linear_regularity"] = json!({"rho": delta / 2.0, "kappa": kappa});
    report["transversality"] =
        match intrinsic_transversality_sample(x, y, &est, delta, samples / 5 + 1, seed.wrapping_add(2), None) {
            Ok(t) => json!(t),
            Err(CertifyError::Geometry(e)) => json!({"unsupported": e.to_string()}),
            Err(e) => return Err(e.into()),
        };
    report["single_step"] = match single_step_radius(&uni, &est) {
        Ok(r) => json!({"r": r, "verified": single_step_verify(x, y, &est, r, samples, seed.wrapping_add(3))?}),
        Err(_) => Value::Null,
    };
    report["verdict"] = json!(bi.verdict);
    emit(&report, out)?;
    Ok(verdict_code(bi.verdict))
}

pub fn cmd_reproduce(example: &str, out_dir: &Path) -> Result<u8> {
    let ids: Vec<ExampleId> = if example == "all" { ExampleId::ALL.to_vec() } else { vec![example.parse()?] };
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut all_pass = true;
    for id in ids {
        let spec = build_example(id)?;
        fs::write(out_dir.join(format!("{id}.problem.json")), spec.to_json()? + "\n")?;
        let manifest = reproduce(id)?;
        for c in &manifest.checks {
            println!("{id}: {} [{}] {}", c.name, if c.pass { "pass" } else { "FAIL" }, c.observed);
        }
        fs::write(
            out_dir.join(format!("{id}.manifest.json")),
            serde_json::to_string_pretty(&manifest)? + "\n",
        )?;
        all_pass &= manifest.pass;
    }
    Ok(if all_pass { EXIT_OK } else { EXIT_ERROR })
}

fn default_eps() -> f64 {
    1.0
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LpFile {
    c: Vec<f64>,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    #[serde(default)]
    sign: Option<Vec<bool>>,
    dual: Vec<f64>,
    #[serde(default = "default_eps")]
    eps: f64,
    #[serde(default)]
    start: Option<Vec<f64>>,
    #[serde(default)]
    stop: StopCriteria,
}

fn matrix(rows: &[Vec<f64>], ncols: usize) -> Result<Matrix> {
    if rows.iter().any(|r| r.len() != ncols) {
        bail!("matrix rows must have length {ncols}");
    }
    Ok(Matrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

pub fn cmd_lp(path: &Path, eps: Option<f64>) -> Result<u8> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let f: LpFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let n = f.c.len();
    let sign = f.sign.unwrap_or_else(|| vec![true; n]);
    let lp = LinearProgram::new(Vector::from_vec(f.c), matrix(&f.a, n)?, Vector::from_vec(f.b), sign)?;
    let x0 = Vector::from_vec(f.start.unwrap_or_else(|| vec![0.0; n]));
    let sol = lp_solve_via_map(&lp, &Vector::from_vec(f.dual), eps.unwrap_or(f.eps), &x0, &f.stop)?;
    let oracle = if n <= 8 { lp_vertex_solve(&lp).ok().map(|(_, v)| v) } else { None };
    emit(
        &json!({
            "x": slice(&sol.x),
            "value": sol.value,
            "angle": sol.angle,
            "status": sol.run.status,
            "iterations": sol.run.iterations(),
            "oracle_value": oracle,
        }),
        None,
    )?;
    Ok(status_code(&sol.run.status))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PieceFile {
    #[serde(rename = "Q", default)]
    quad: Option<Vec<Vec<f64>>>,
    a: Vec<f64>,
    #[serde(default)]
    b: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MinMaxFile {
    pieces: Vec<PieceFile>,
    beta: f64,
    #[serde(default)]
    start: Option<Vec<f64>>,
    #[serde(default)]
    stop: StopCriteria,
}

pub fn cmd_minmax(path: &Path) -> Result<u8> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let f: MinMaxFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let n = f.pieces.first().map_or(0, |p| p.a.len());
    let pieces = f
        .pieces
        .iter()
        .map(|p| {
            let lin = Vector::from_column_slice(&p.a);
            Ok(match &p.quad {
                Some(q) => Piece::quadratic(matrix(q, n)?, lin, p.b),
                None => Piece::affine(lin, p.b),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let problem = MinMaxProblem { pieces, beta: f.beta };
    let x0 = Vector::from_vec(f.start.unwrap_or_else(|| vec![0.0; n]));
    let sol = minmax_solve(&problem, &x0, &f.stop)?;
    emit(
        &json!({
            "x": slice(&sol.x),
            "value": sol.value,
            "status": sol.run.status,
            "iterations": sol.run.iterations(),
        }),
        None,
    )?;
    Ok(status_code(&sol.run.status))
}

pub fn cmd_holder(eps: &[f64], max_iter: usize, out: Option<&Path>) -> Result<u8> {
    let rows = holder_rate_experiment(eps, &StopCriteria::with_max_iter(max_iter))?;
    match out {
        Some(p) => {
            let f = File::create(p).with_context(|| format!("creating {}", p.display()))?;
            write_holder_csv(BufWriter::new(f), &rows)?;
        }
        None => write_holder_csv(io::stdout().lock(), &rows)?,
    }
    Ok(EXIT_OK)
}
