use rayon::prelude::*;
use serde::Serialize;

use super::{fit_boundary_exponent, hardy_quotient, DIVERGENCE_SLOPE};
use crate::error::{Error, Result};
use crate::grid::{build_grid, default_grading, Grid, GridFunction};
use crate::kernel::{gagliardo_energy, loglog_slope};
use crate::params::{classify_regime, ProblemParams, Threshold};
use crate::solver::{continuation_with, ApproxProblem, Continuation, SolverOptions};

/// Continuation settings shared by the scans.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanOptions {
    pub eps0: f64,
    pub halvings: usize,
    /// Stop once the continuation increment falls below this.
    pub tol: f64,
    /// Mesh grading; the regime default when absent.
    pub grading: Option<f64>,
    /// Initial smoothing for `p < 2`.
    pub mu0: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            eps0: 0.5,
            halvings: 40,
            tol: 1e-4,
            grading: None,
            mu0: 1e-2,
        }
    }
}

/// Minimal solution on a graded mesh with `n` interior nodes.
pub fn solve_minimal(params: &ProblemParams, n: usize, opts: &ScanOptions) -> Result<Continuation> {
    let q = opts.grading.unwrap_or_else(|| default_grading(params));
    let grid = build_grid(params.domain.a, params.domain.b, n, q)?;
    run_continuation(params, &grid, opts)
}

fn run_continuation(params: &ProblemParams, grid: &Grid, opts: &ScanOptions) -> Result<Continuation> {
    let solver = SolverOptions {
        mu0: opts.mu0,
        ..SolverOptions::with_tol((1e-3 * opts.tol).max(1e-12))
    };
    let problem = ApproxProblem::new(*params, grid, solver)?;
    continuation_with(&problem, opts.eps0, opts.halvings, opts.tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Bounded,
    Divergent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanRow {
    pub theta: f64,
    pub n: usize,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaClass {
    pub theta: f64,
    /// Log-log slope of the energy against `n`.
    pub slope: f64,
    /// Ratios of energies on successive meshes.
    pub ratios: Vec<f64>,
    pub verdict: Verdict,
    /// Verdict predicted by the threshold: bounded iff `theta > Lambda`.
    pub expected: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanTable {
    pub rows: Vec<ScanRow>,
    pub classes: Vec<ThetaClass>,
    pub lambda_cap: Threshold,
    /// No larger `theta` is classified more divergent than a smaller one.
    pub monotone: bool,
    /// Every verdict matches the threshold prediction.
    pub consistent: bool,
}

impl ScanTable {
    pub fn class(&self, theta: f64) -> Option<&ThetaClass> {
        self.classes.iter().find(|c| c.theta == theta)
    }
}

pub fn expected_bounded(theta: f64, lambda_cap: f64) -> bool {
    theta > lambda_cap
}

fn check_scan_inputs(theta_list: &[f64], n_list: &[usize]) -> Result<()> {
    if theta_list.is_empty() || theta_list.iter().any(|&t| !(t >= 1.0)) {
        return Err(Error::Precondition("every theta must be >= 1".into()));
    }
    if n_list.len() < 3 || n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition(
            "n_list must be increasing with at least 3 entries".into(),
        ));
    }
    Ok(())
}

/// Energies of `u^theta` for a refinement sequence of solutions, classified
/// by the log-log slope against `n`.
pub fn sobolev_table(
    solutions: &[GridFunction],
    theta_list: &[f64],
    s: f64,
    p: f64,
    lambda_cap: f64,
) -> Result<ScanTable> {
    let ns: Vec<usize> = solutions.iter().map(|u| u.grid.len()).collect();
    check_scan_inputs(theta_list, &ns)?;
    let cells: Vec<(usize, usize)> = (0..theta_list.len())
        .flat_map(|t| (0..solutions.len()).map(move |k| (t, k)))
        .collect();
    let energies = cells
        .par_iter()
        .map(|&(t, k)| gagliardo_energy(&solutions[k], theta_list[t], s, p))
        .collect::<Result<Vec<f64>>>()?;
    let rows: Vec<ScanRow> = cells
        .iter()
        .zip(&energies)
        .map(|(&(t, k), &energy)| ScanRow {
            theta: theta_list[t],
            n: ns[k],
            energy,
        })
        .collect();
    let classes: Vec<ThetaClass> = theta_list
        .iter()
        .enumerate()
        .map(|(t, &theta)| {
            let e = &energies[t * ns.len()..(t + 1) * ns.len()];
            let slope = loglog_slope(&ns, e);
            let verdict = if slope > DIVERGENCE_SLOPE {
                Verdict::Divergent
            } else {
                Verdict::Bounded
            };
            let expected = if expected_bounded(theta, lambda_cap) {
                Verdict::Bounded
            } else {
                Verdict::Divergent
            };
            ThetaClass {
                theta,
                slope,
                ratios: e.windows(2).map(|w| w[1] / w[0]).collect(),
                verdict,
                expected,
            }
        })
        .collect();
    let mut order: Vec<&ThetaClass> = classes.iter().collect();
    order.sort_by(|a, b| a.theta.total_cmp(&b.theta));
    let monotone = order
        .windows(2)
        .all(|w| !(w[0].verdict == Verdict::Bounded && w[1].verdict == Verdict::Divergent));
    let consistent = classes.iter().all(|c| c.verdict == c.expected);
    Ok(ScanTable {
        rows,
        classes,
        lambda_cap: Threshold(lambda_cap),
        monotone,
        consistent,
    })
}

/// Solves for the minimal solution on each mesh of `n_list` and classifies
/// `u^theta` as bounded or divergent in the energy space.
pub fn sobolev_scan(
    params: &ProblemParams,
    theta_list: &[f64],
    n_list: &[usize],
    opts: &ScanOptions,
) -> Result<ScanTable> {
    check_scan_inputs(theta_list, n_list)?;
    params.require_existence()?;
    let solutions = n_list
        .iter()
        .map(|&n| Ok(solve_minimal(params, n, opts)?.u_min))
        .collect::<Result<Vec<_>>>()?;
    let lambda_cap = classify_regime(params).lambda_cap.0;
    sobolev_table(&solutions, theta_list, params.s, params.p, lambda_cap)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NonexistenceRow {
    pub delta: f64,
    pub alpha_star: f64,
    pub left_slope: f64,
    pub right_slope: f64,
    pub slope: f64,
    pub hardy: f64,
    /// Last continuation increment.
    pub increment: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonexistenceTable {
    pub rows: Vec<NonexistenceRow>,
    /// Fitted exponents strictly decrease along the (increasing) delta list.
    pub exponents_decreasing: bool,
    /// Hardy quotients strictly increase along the delta list.
    pub hardy_increasing: bool,
}

impl NonexistenceTable {
    pub fn row(&self, delta: f64) -> Option<&NonexistenceRow> {
        self.rows.iter().find(|r| r.delta == delta)
    }

    /// `hardy(delta_hi) / hardy(delta_lo)` when both rows exist.
    pub fn hardy_ratio(&self, delta_hi: f64, delta_lo: f64) -> Option<f64> {
        Some(self.row(delta_hi)?.hardy / self.row(delta_lo)?.hardy)
    }
}

/// For each `delta` (increasing, below `sp`) solves for the minimal solution
/// on `grid` and records the fitted boundary exponent and the Hardy quotient
/// with `theta = 1`.
pub fn nonexistence_scan(
    base: &ProblemParams,
    delta_list: &[f64],
    grid: &Grid,
    opts: &ScanOptions,
) -> Result<NonexistenceTable> {
    let sp = base.sp();
    if let Some(&delta) = delta_list.iter().find(|&&d| d >= sp) {
        return Err(Error::RegimeError { delta, sp });
    }
    if delta_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition("delta_list must be increasing".into()));
    }
    let rows = delta_list
        .iter()
        .map(|&delta| {
            let params = base.with_delta(delta)?;
            let c = run_continuation(&params, grid, opts)?;
            let alpha_star = params.alpha_star();
            let fit = fit_boundary_exponent(&c.u_min, None, alpha_star)?;
            Ok(NonexistenceRow {
                delta,
                alpha_star,
                left_slope: fit.left.slope,
                right_slope: fit.right.slope,
                slope: fit.mean_slope(),
                hardy: hardy_quotient(&c.u_min, 1.0, params.s, params.p),
                increment: c.increments.last().copied().unwrap_or(f64::NAN),
                converged: c.converged,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NonexistenceTable {
        exponents_decreasing: rows.windows(2).all(|w| w[1].slope < w[0].slope),
        hardy_increasing: rows.windows(2).all(|w| w[1].hardy > w[0].hardy),
        rows,
    })
}
