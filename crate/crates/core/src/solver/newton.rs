//! Damped Newton descent for `2 E(v) - sum_i m_i F_i(v_i)` with `E` the
//! discrete energy and each `F_i` concave.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernel::DiscreteOperator;

/// Concave nodal term `F_i(t)` with derivatives.
pub(crate) trait Reaction: Sync {
    fn value(&self, i: usize, t: f64) -> f64;
    /// `F_i'(t)`, the right-hand side at `t`.
    fn slope(&self, i: usize, t: f64) -> f64;
    /// `F_i''(t) <= 0`.
    fn curvature(&self, i: usize, t: f64) -> f64;
}

/// Linear reaction `f_i t`.
pub(crate) struct FixedRhs<'a>(pub &'a [f64]);

impl Reaction for FixedRhs<'_> {
    fn value(&self, i: usize, t: f64) -> f64 {
        self.0[i] * t
    }
    fn slope(&self, i: usize, _t: f64) -> f64 {
        self.0[i]
    }
    fn curvature(&self, _i: usize, _t: f64) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct NewtonOutcome {
    pub v: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub objective: f64,
}

pub(crate) fn objective<R: Reaction>(op: &DiscreteOperator, r: &R, v: &[f64]) -> Result<f64> {
    let e = op.energy(v)?;
    let f: f64 = v.iter().enumerate().map(|(i, &t)| op.m[i] * r.value(i, t)).sum();
    Ok(2.0 * e - f)
}

/// Gradient of the objective and the mass-weighted relative residual
/// `|grad|_{M^-1} / |M rhs|_{M^-1}` (absolute when the right-hand side vanishes).
pub(crate) fn gradient<R: Reaction>(op: &DiscreteOperator, r: &R, v: &[f64]) -> Result<(Vec<f64>, f64)> {
    let a = op.apply(v)?;
    let mut g = Vec::with_capacity(v.len());
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..v.len() {
        let rhs = r.slope(i, v[i]);
        let gi = 2.0 * a[i] - op.m[i] * rhs;
        num += gi * gi / op.m[i];
        den += op.m[i] * rhs * rhs;
        g.push(gi);
    }
    let res = if den > 0.0 { (num / den).sqrt() } else { num.sqrt() };
    Ok((g, res))
}

pub(crate) fn minimize<R: Reaction>(
    op: &DiscreteOperator,
    r: &R,
    init: Vec<f64>,
    opts: NewtonOptions,
) -> Result<NewtonOutcome> {
    let n = op.len();
    if init.len() != n {
        return Err(Error::ShapeMismatch {
            expected: n,
            got: init.len(),
        });
    }
    let mut v = init;
    let mut psi = objective(op, r, &v)?;
    // Levenberg damping relative to the confinement diagonal
    let damp_diag: Vec<f64> = (0..n).map(|i| 2.0 * op.confinement(i)).collect();
    let mut tau = 0.0f64;
    let mut residual = f64::INFINITY;
    for iter in 0..opts.max_iter {
        let (g, res) = gradient(op, r, &v)?;
        residual = res;
        if !residual.is_finite() {
            return Err(Error::NoConvergence {
                iterations: iter,
                residual,
            });
        }
        if residual <= opts.tol {
            return Ok(NewtonOutcome {
                v,
                iterations: iter,
                residual,
                objective: psi,
            });
        }
        let mut hess = op.hessian(&v)?;
        hess *= 2.0;
        for i in 0..n {
            hess[(i, i)] -= op.m[i] * r.curvature(i, v[i]);
        }
        let gvec = DVector::from_vec(g.clone());
        let mut accepted = false;
        for _ in 0..40 {
            let mut h = hess.clone();
            if tau > 0.0 {
                for i in 0..n {
                    h[(i, i)] += tau * damp_diag[i];
                }
            }
            let dir = match solve_spd(h, &gvec) {
                Some(d) => d,
                None => {
                    tau = (tau * 10.0).max(1e-10);
                    continue;
                }
            };
            let slope: f64 = -gvec.dot(&dir);
            if !(slope < 0.0) {
                tau = (tau * 10.0).max(1e-10);
                continue;
            }
            // Armijo backtracking; when the predicted decrease is below the
            // rounding level of the objective, a full step that lowers the
            // residual is taken instead.
            let mut t = 1.0;
            let mut found = None;
            if -slope <= 1e-12 * psi.abs().max(f64::MIN_POSITIVE) {
                let trial: Vec<f64> = v.iter().zip(dir.iter()).map(|(a, d)| a - d).collect();
                let (_, tres) = gradient(op, r, &trial)?;
                if tres < residual {
                    let val = objective(op, r, &trial)?;
                    found = Some((trial, val));
                }
            }
            for _ in 0..60 {
                if found.is_some() {
                    break;
                }
                let trial: Vec<f64> = v.iter().zip(dir.iter()).map(|(a, d)| a - t * d).collect();
                let val = objective(op, r, &trial)?;
                if val.is_finite() && val <= psi + 1e-4 * t * slope {
                    found = Some((trial, val));
                    break;
                }
                t *= 0.5;
            }
            match found {
                Some((trial, val)) => {
                    if trial == v {
                        // no representable progress left
                        break;
                    }
                    v = trial;
                    psi = val;
                    accepted = true;
                    tau = if t == 1.0 { tau * 0.1 } else { tau };
                    if tau < 1e-12 {
                        tau = 0.0;
                    }
                    break;
                }
                None => {
                    tau = (tau * 10.0).max(1e-10);
                }
            }
        }
        if !accepted {
            break;
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        residual,
    })
}

fn solve_spd(h: DMatrix<f64>, g: &DVector<f64>) -> Option<DVector<f64>> {
    let chol = h.cholesky()?;
    let d = chol.solve(g);
    d.iter().all(|x| x.is_finite()).then_some(d)
}
