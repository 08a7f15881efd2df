//! Regularized singular problems solved by convex minimization, and the
//! continuation in `eps` toward the minimal solution.

mod newton;

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::barrier::{singular_weight, WeightSpec};
use crate::error::{Error, Result};
use crate::grid::{Exterior, Grid, GridFunction};
use crate::kernel::{assemble_operator, eval_fplap_pv, DiscreteOperator};
use crate::params::ProblemParams;

use newton::{minimize, FixedRhs, NewtonOptions, Reaction};

/// Smallest smoothing used by the `mu` continuation for `p < 2`.
pub const MU_FLOOR: f64 = 1e-8;

/// Regularized nonlinearity of the approximated problem with parameter `eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingularEnergy {
    pub params: ProblemParams,
    pub eps: f64,
    pub weight: WeightSpec,
}

impl SingularEnergy {
    pub fn new(params: ProblemParams, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::OutOfRange {
                name: "eps",
                value: eps,
                expected: "eps > 0",
            });
        }
        let weight = WeightSpec::EpsRegularized {
            delta: params.delta,
            eps,
            gamma: params.gamma,
            p: params.p,
            s: params.s,
        };
        weight.scale()?;
        Ok(Self { params, eps, weight })
    }

    fn gamma(&self) -> f64 {
        self.params.gamma
    }

    /// Capped reaction `min(t^-gamma, 1/eps)`, equal to `1/eps` for `t <= 0`.
    pub fn g(&self, t: f64) -> f64 {
        if t <= 0.0 {
            1.0 / self.eps
        } else {
            t.powf(-self.gamma()).min(1.0 / self.eps)
        }
    }

    /// Primitive of `g` with `G(1) = 0`.
    pub fn big_g(&self, t: f64) -> f64 {
        self.g_primitive(t) - self.g_primitive(1.0)
    }

    fn g_primitive(&self, t: f64) -> f64 {
        let gamma = self.gamma();
        if gamma == 0.0 {
            return t.min(self.eps) / self.eps + (t - self.eps).max(0.0);
        }
        // the cap is active below t* = eps^(1/gamma)
        let ts = self.eps.powf(1.0 / gamma);
        let pw = |x: f64| {
            if gamma == 1.0 {
                x.ln()
            } else {
                x.powf(1.0 - gamma) / (1.0 - gamma)
            }
        };
        if t <= ts {
            t / self.eps
        } else {
            ts / self.eps + pw(t) - pw(ts)
        }
    }

    /// `(max(t, 0) + eps)^-gamma`.
    pub fn h(&self, t: f64) -> f64 {
        (t.max(0.0) + self.eps).powf(-self.gamma())
    }

    /// Primitive of `h` with `H(0) = 0`, linear for `t < 0`.
    pub fn big_h(&self, t: f64) -> f64 {
        let (gamma, eps) = (self.gamma(), self.eps);
        if t < 0.0 {
            return t * eps.powf(-gamma);
        }
        if gamma == 1.0 {
            (t / eps).ln_1p()
        } else {
            let r = 1.0 - gamma;
            // ((t + eps)^r - eps^r) / r without cancellation for small t
            eps.powf(r) * (r * (t / eps).ln_1p()).exp_m1() / r
        }
    }

    pub fn h_prime(&self, t: f64) -> f64 {
        if t < 0.0 {
            0.0
        } else {
            -self.gamma() * (t + self.eps).powf(-self.gamma() - 1.0)
        }
    }
}

struct WeightedReaction<'a> {
    energy: &'a SingularEnergy,
    k: &'a [f64],
}

impl Reaction for WeightedReaction<'_> {
    fn value(&self, i: usize, t: f64) -> f64 {
        self.k[i] * self.energy.big_h(t)
    }
    fn slope(&self, i: usize, t: f64) -> f64 {
        self.k[i] * self.energy.h(t)
    }
    fn curvature(&self, i: usize, t: f64) -> f64 {
        self.k[i] * self.energy.h_prime(t)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveResult {
    #[serde(skip)]
    pub u: GridFunction,
    pub iterations: usize,
    pub residual: f64,
    /// Objective value at the solution.
    pub energy: f64,
    /// `min u` over the interior nodes.
    pub min_value: f64,
    pub eps: Option<f64>,
    /// Smoothing of the final solve, zero when none was needed.
    pub mu: f64,
    /// Set when some nodal value is below `-1e-12`.
    pub negative: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Starting smoothing for `p < 2`.
    pub mu0: f64,
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            max_iter: 200,
            mu0: 1e-2,
        }
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0) {
        return Err(Error::OutOfRange {
            name: "tol",
            value: tol,
            expected: "tol > 0",
        });
    }
    Ok(())
}

fn finish(op: &DiscreteOperator, out: newton::NewtonOutcome, eps: Option<f64>) -> Result<SolveResult> {
    let min_value = out.v.iter().copied().fold(f64::INFINITY, f64::min);
    let u = GridFunction::new(op.grid().clone(), out.v, Exterior::Zero)?;
    Ok(SolveResult {
        u,
        iterations: out.iterations,
        residual: out.residual,
        energy: out.objective,
        min_value,
        eps,
        mu: op.mu,
        negative: min_value < -1e-12,
    })
}

/// Solves `(-Delta)^s_p u = f` with zero exterior data on the operator's
/// grid; `f` holds nodal values.
pub fn solve_fixed_rhs(op: &DiscreteOperator, f: &[f64], tol: f64) -> Result<SolveResult> {
    solve_fixed_rhs_from(op, f, vec![0.0; op.len()], SolverOptions::with_tol(tol))
}

/// As [`solve_fixed_rhs`] with an explicit starting vector and options.
pub fn solve_fixed_rhs_from(
    op: &DiscreteOperator,
    f: &[f64],
    init: Vec<f64>,
    opts: SolverOptions,
) -> Result<SolveResult> {
    check_tol(opts.tol)?;
    if f.len() != op.len() {
        return Err(Error::ShapeMismatch {
            expected: op.len(),
            got: f.len(),
        });
    }
    if let Some(i) = f.iter().position(|&v| !(v >= 0.0)) {
        return Err(Error::Precondition(format!("right-hand side negative at node {i}")));
    }
    if op.p < 2.0 && op.mu == 0.0 {
        return Err(Error::SmoothingRequired { p: op.p });
    }
    let out = minimize(
        op,
        &FixedRhs(f),
        init,
        NewtonOptions {
            tol: opts.tol,
            max_iter: opts.max_iter,
        },
    )?;
    finish(op, out, None)
}

/// An assembled approximated problem, reusable across values of `eps`.
#[derive(Debug, Clone)]
pub struct ApproxProblem {
    params: ProblemParams,
    op: DiscreteOperator,
    opts: SolverOptions,
}

impl ApproxProblem {
    pub fn new(params: ProblemParams, grid: &Grid, opts: SolverOptions) -> Result<Self> {
        check_tol(opts.tol)?;
        let sp = params.sp();
        if params.delta >= sp {
            return Err(Error::RegimeError {
                delta: params.delta,
                sp,
            });
        }
        if grid.domain() != params.domain {
            return Err(Error::SpecInvalid("grid and problem domains differ"));
        }
        let mu = if params.p < 2.0 { opts.mu0 } else { 0.0 };
        let op = assemble_operator(grid, params.s, params.p, mu)?;
        Ok(Self { params, op, opts })
    }

    pub fn operator(&self) -> &DiscreteOperator {
        &self.op
    }

    pub fn params(&self) -> &ProblemParams {
        &self.params
    }

    /// Solves for one `eps`, starting from `init` (zero when absent).
    pub fn solve(&self, eps: f64, init: Option<&[f64]>) -> Result<SolveResult> {
        let energy = SingularEnergy::new(self.params, eps)?;
        let k = singular_weight(&energy.weight, self.op.grid())?.values;
        let reaction = WeightedReaction { energy: &energy, k: &k };
        let nopts = NewtonOptions {
            tol: self.opts.tol,
            max_iter: self.opts.max_iter,
        };
        let mut v = match init {
            Some(v) => v.to_vec(),
            None => vec![0.0; self.op.len()],
        };
        if self.params.p >= 2.0 {
            let out = minimize(&self.op, &reaction, v, nopts)?;
            return finish(&self.op, out, Some(eps));
        }
        // smoothing continuation mu_k = mu0 2^-k down to the floor
        let mut mu = self.op.mu;
        let mut iterations = 0;
        loop {
            let op = self.op.with_mu(mu);
            let out = minimize(&op, &reaction, v, nopts)?;
            iterations += out.iterations;
            if mu <= MU_FLOOR {
                let mut r = finish(&op, out, Some(eps))?;
                r.iterations = iterations;
                return Ok(r);
            }
            v = out.v;
            mu = (0.5 * mu).max(MU_FLOOR);
        }
    }
}

/// Solves the approximated problem with parameter `eps` from a zero start.
pub fn solve_approximated(params: &ProblemParams, grid: &Grid, eps: f64, tol: f64) -> Result<SolveResult> {
    ApproxProblem::new(*params, grid, SolverOptions::with_tol(tol))?.solve(eps, None)
}

#[derive(Debug, Clone, Serialize)]
pub struct Continuation {
    pub steps: Vec<SolveResult>,
    /// `max |u_(k+1) - u_k|` between consecutive steps.
    pub increments: Vec<f64>,
    /// `min (u_(k+1) - u_k)` between consecutive steps; negative values
    /// measure departures from monotonicity.
    pub monotonicity: Vec<f64>,
    /// Whether the last increment fell below the tolerance.
    pub converged: bool,
    #[serde(skip)]
    pub u_min: GridFunction,
}

/// Warm-started solves for `eps_k = eps0 2^-k`, `k = 0..=halvings`, stopping
/// once the increment drops below `tol`. The Newton tolerance is `tol` scaled
/// down by `1e-3`.
pub fn continuation(params: &ProblemParams, grid: &Grid, eps0: f64, halvings: usize, tol: f64) -> Result<Continuation> {
    check_tol(tol)?;
    let problem = ApproxProblem::new(*params, grid, SolverOptions::with_tol((1e-3 * tol).max(1e-12)))?;
    continuation_with(&problem, eps0, halvings, tol)
}

pub fn continuation_with(problem: &ApproxProblem, eps0: f64, halvings: usize, tol: f64) -> Result<Continuation> {
    if halvings < 2 {
        return Err(Error::Precondition(format!(
            "continuation needs at least 2 halvings, got {halvings}"
        )));
    }
    let mut steps: Vec<SolveResult> = Vec::new();
    let mut increments = Vec::new();
    let mut monotonicity = Vec::new();
    let mut converged = false;
    for k in 0..=halvings {
        let eps = eps0 * 0.5f64.powi(k as i32);
        let init = steps.last().map(|r| r.u.values.as_slice());
        let r = problem.solve(eps, init)?;
        if let Some(prev) = steps.last() {
            let diff: Vec<f64> = r.u.values.iter().zip(&prev.u.values).map(|(a, b)| a - b).collect();
            increments.push(diff.iter().fold(0.0f64, |m, d| m.max(d.abs())));
            monotonicity.push(diff.iter().copied().fold(f64::INFINITY, f64::min));
        }
        steps.push(r);
        if increments.last().is_some_and(|&inc| inc <= tol) {
            converged = true;
            break;
        }
    }
    let u_min = steps.last().expect("at least three steps").u.clone();
    Ok(Continuation {
        steps,
        increments,
        monotonicity,
        converged,
        u_min,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualProbe {
    pub x: f64,
    pub d: f64,
    pub pv: f64,
    pub rhs: f64,
    pub relative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub probes: Vec<ResidualProbe>,
    pub max_relative: f64,
    pub mean_relative: f64,
}

/// Strong-form check of `(-Delta)^s_p u = K u^-gamma` at interior nodes with
/// `d > max(4 h_local, min_d)`.
pub fn residual_check(
    u: &GridFunction,
    params: &ProblemParams,
    weight: &WeightSpec,
    min_d: f64,
) -> Result<ResidualReport> {
    let d = u.grid.distances();
    residual_check_with(u, params, min_d, |i| {
        Ok(weight.eval(d[i])? * u.values[i].powf(-params.gamma))
    })
}

/// As [`residual_check`] against a fixed nodal right-hand side `f`.
pub fn residual_check_fixed(u: &GridFunction, params: &ProblemParams, f: &[f64], min_d: f64) -> Result<ResidualReport> {
    if f.len() != u.values.len() {
        return Err(Error::ShapeMismatch {
            expected: u.values.len(),
            got: f.len(),
        });
    }
    residual_check_with(u, params, min_d, |i| Ok(f[i]))
}

fn residual_check_with<F>(u: &GridFunction, params: &ProblemParams, min_d: f64, rhs: F) -> Result<ResidualReport>
where
    F: Fn(usize) -> Result<f64> + Sync,
{
    let grid: &Arc<Grid> = &u.grid;
    let w = grid.widths();
    let d = grid.distances();
    let x = grid.nodes();
    let picks: Vec<(usize, f64)> = (0..grid.len())
        .filter_map(|i| {
            let cut = w[i].max(w[i + 1]);
            (d[i] > (4.0 * cut).max(min_d)).then_some((i, cut))
        })
        .collect();
    if picks.is_empty() {
        return Err(Error::PointTooCloseToBoundary {
            x: f64::NAN,
            cut: min_d,
        });
    }
    if let Some(&(i, _)) = picks.iter().find(|&&(i, _)| !(u.values[i] > 0.0)) {
        return Err(Error::NonPositiveValues {
            index: i,
            value: u.values[i],
        });
    }
    let probes = picks
        .par_iter()
        .map(|&(i, cut)| {
            let pv = eval_fplap_pv(u, x[i], cut, params.s, params.p)?;
            let r = rhs(i)?;
            Ok(ResidualProbe {
                x: x[i],
                d: d[i],
                pv,
                rhs: r,
                relative: (pv - r).abs() / r.abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_relative = probes.iter().map(|p| p.relative).fold(0.0, f64::max);
    let mean_relative = probes.iter().map(|p| p.relative).sum::<f64>() / probes.len() as f64;
    Ok(ResidualReport {
        probes,
        max_relative,
        mean_relative,
    })
}
