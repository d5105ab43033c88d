//! Ball versus parallel hyperplane: `X = B((0,1), 1)`, `Y_ε = {x₂ = −ε}`.
//!
//! One MAP step maps the first coordinate by `s ↦ s / √(s² + (1+ε)²)`, so
//! the ratio of successive first coordinates tends to `1/(1+ε)`; at `ε = 0`
//! the sets touch and the ratios tend to 1. The measured rate is only
//! recorded, the Hölder-type error bound behind it is not asserted.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::geometry::{Ball, ConvexSet, Hyperplane};
use crate::solvers::{map_run, Status, StopCriteria};
use crate::{vector, Vector};

use super::AppError;

/// Number of trailing ratios averaged into the rate.
pub const TAIL: usize = 50;

/// First coordinates below this are ignored (subnormal territory is near).
const TINY: f64 = 1e-250;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderRow {
    pub eps: f64,
    /// Geometric mean of the last [`TAIL`] ratios `|x₁^{k+1}| / |x₁^k|`.
    pub rate: f64,
    /// Smallest of those ratios.
    pub tail_min: f64,
    pub iters: usize,
    pub status: Status,
}

pub fn ball_hyperplane_sets(eps: f64) -> Result<(ConvexSet, ConvexSet), AppError> {
    let x = Ball::new(vector(&[0.0, 1.0]), 1.0)?;
    let y = Hyperplane::new(vector(&[0.0, 1.0]), -eps)?;
    Ok((x.into(), y.into()))
}

/// Start used by the experiment.
pub fn holder_start(eps: f64) -> Vector {
    vector(&[1.0, -eps])
}

/// Iteration cap for `ε`: the first coordinate shrinks like `(1+ε)^{-k}`,
/// so stop before it reaches `1e-250`.
pub fn iteration_cap(eps: f64, max_iter: usize) -> usize {
    if eps > 0.0 {
        max_iter.min((575.0 / eps.ln_1p()).ceil() as usize)
    } else {
        max_iter
    }
}

pub fn holder_rate_experiment(eps_grid: &[f64], stop: &StopCriteria) -> Result<Vec<HolderRow>, AppError> {
    let mut rows = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        if !(0.0..=10.0).contains(&eps) {
            return Err(AppError::Invalid(format!("eps = {eps} outside [0, 10]")));
        }
        let (x, y) = ball_hyperplane_sets(eps)?;
        let st = StopCriteria { max_iter: iteration_cap(eps, stop.max_iter), ..*stop };
        let run = map_run(&x, &y, &holder_start(eps), &st)?;
        let firsts: Vec<f64> = run.trace.iterates().map(|v| v[0].abs()).collect();
        let ratios: Vec<f64> = firsts
            .windows(2)
            .filter(|w| w[0] >= TINY && w[1] >= TINY)
            .map(|w| w[1] / w[0])
            .collect();
        let tail = &ratios[ratios.len().saturating_sub(TAIL)..];
        let (rate, tail_min) = if tail.is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            let mean_log = tail.iter().map(|r| r.ln()).sum::<f64>() / tail.len() as f64;
            (mean_log.exp(), tail.iter().copied().fold(f64::INFINITY, f64::min))
        };
        rows.push(HolderRow { eps, rate, tail_min, iters: run.iterations(), status: run.status });
    }
    Ok(rows)
}

fn status_label(s: &Status) -> &'static str {
    match s {
        Status::FiniteTermination { .. } => "finite_termination",
        Status::ConvergedToTol => "converged_to_tol",
        Status::Diverged => "diverged",
        Status::MaxIterReached => "max_iter_reached",
    }
}

/// CSV with columns `eps,rate,iters,status`.
pub fn write_holder_csv<W: Write>(mut w: W, rows: &[HolderRow]) -> io::Result<()> {
    writeln!(w, "eps,rate,iters,status")?;
    for r in rows {
        writeln!(w, "{:.16e},{:.16e},{},{}", r.eps, r.rate, r.iters, status_label(&r.status))?;
    }
    Ok(())
}
