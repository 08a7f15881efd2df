use std::sync::Arc;

use serde::Serialize;

use super::{comparison_check, ComparisonReport};
use crate::barrier::{barrier_constants, BarrierSpec};
use crate::error::{Error, Result};
use crate::params::{BoundaryCase, ProblemParams};
use crate::solver::SolveResult;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BracketReport {
    pub eps: f64,
    pub eta: f64,
    pub alpha: f64,
    pub c5: f64,
    pub c6: f64,
    /// `min u / d^s` over the nodes.
    pub kappa: f64,
    /// `max u` over nodes with `d >= eta / 2`.
    pub kappa_half: f64,
    /// Scale of the subsolution.
    pub c_sub: f64,
    /// Scale of the supersolution.
    pub c_super: f64,
    pub nodes: usize,
    pub comparison: ComparisonReport,
}

/// Largest `c <= 1` with `c6 c^(p-1) (1 - c)^gamma <= (2 lambda)^-gamma`.
fn small_value_bound(c6: f64, lambda: f64, gamma: f64, p: f64) -> f64 {
    let rhs = (2.0 * lambda).powf(-gamma);
    let f = |c: f64| c6 * c.powf(p - 1.0) * (1.0 - c).powf(gamma);
    let peak = (p - 1.0) / (p - 1.0 + gamma);
    if f(peak) <= rhs {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0, peak);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if f(mid) <= rhs {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Brackets a regularized solution between the scaled barriers on `Omega_eta`.
///
/// With `alpha = alpha*` and `lambda = eps` the regularized weight is exactly
/// `(d + L)^-delta`, `L = eps^(1/alpha*)`. The subsolution
/// `c_sub ((d + L)^alpha - eps)` and supersolution `c_super (d + L)^alpha` use
/// the largest and smallest scales allowed by the measured barrier constants
/// `c5, c6` and by the values of `u` away from the boundary.
pub fn barrier_bracket(
    params: &ProblemParams,
    sol: &SolveResult,
    eta: f64,
    rho: f64,
    tol: f64,
) -> Result<BracketReport> {
    if params.boundary_case() != BoundaryCase::CaseAlphaStar {
        return Err(Error::Precondition(
            "barrier bracketing needs delta - s(1 - gamma) > 0".into(),
        ));
    }
    let eps = sol
        .eps
        .ok_or_else(|| Error::Precondition("solution is not a regularized solve".into()))?;
    let (s, p, gamma) = (params.s, params.p, params.gamma);
    let alpha = params.alpha_star();
    let spec = BarrierSpec::new(alpha, eps, rho, s, p)?;
    let grid = sol.u.grid.clone();
    let consts = barrier_constants(&spec, Arc::clone(&grid), eta)?;
    if !(consts.c5 > 0.0) {
        return Err(Error::Precondition(format!(
            "supersolution constant is not positive: {}",
            consts.c5
        )));
    }
    let u = &sol.u.values;
    let d = grid.distances();
    let kappa = u
        .iter()
        .zip(d)
        .map(|(&v, &di)| v / di.powf(s))
        .fold(f64::INFINITY, f64::min);
    let kappa_half = u
        .iter()
        .zip(d)
        .filter(|(_, &di)| di >= 0.5 * eta)
        .map(|(&v, _)| v)
        .fold(0.0, f64::max);
    let e = gamma + p - 1.0;
    let mut c_sub = (0.5 * eta).powf(s - alpha) * kappa;
    c_sub = c_sub.min(1.0);
    if consts.c6 > 0.0 {
        c_sub = c_sub
            .min((1.0 / (2f64.powf(gamma) * consts.c6)).powf(1.0 / e))
            .min(small_value_bound(consts.c6, eps, gamma, p));
    }
    let c_super = ((2.0 / eta).powf(alpha) * kappa_half).max((1.0 / consts.c5).powf(1.0 / e));

    let l = spec.collar();
    let (mut lo, mut mid, mut hi) = (Vec::new(), Vec::new(), Vec::new());
    for (&v, &di) in u.iter().zip(d) {
        if di < eta {
            let base = (di + l).powf(alpha);
            lo.push(c_sub * (base - eps));
            mid.push(v);
            hi.push(c_super * base);
        }
    }
    let comparison = comparison_check(&lo, &mid, &hi, tol)?;
    Ok(BracketReport {
        eps,
        eta,
        alpha,
        c5: consts.c5,
        c6: consts.c6,
        kappa,
        kappa_half,
        c_sub,
        c_super,
        nodes: mid.len(),
        comparison,
    })
}
