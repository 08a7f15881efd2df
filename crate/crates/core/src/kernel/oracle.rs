use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, AdaptiveOpts};

/// Exact constant of the power barrier `x_+^alpha` on the half line:
/// half of its fractional p-Laplacian at `x = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerKernelOracle {
    pub alpha: f64,
    pub s: f64,
    pub p: f64,
    pub beta: f64,
    pub phi: f64,
    /// Estimated absolute quadrature error of `phi`.
    pub error: f64,
    pub c1: f64,
    pub c2: f64,
}

impl PowerKernelOracle {
    /// `c1 <= phi <= c2`, allowing the quadrature error on both sides.
    pub fn within_bounds(&self) -> bool {
        let slack = self.error.max(1e-14);
        self.c1 - slack <= self.phi && self.phi <= self.c2 + slack
    }
}

fn check_alpha(alpha: f64, s: f64, p: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::OutOfRange {
            name: "s",
            value: s,
            expected: "0 < s < 1",
        });
    }
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::OutOfRange {
            name: "p",
            value: p,
            expected: "1 < p < inf",
        });
    }
    if !(alpha > 0.0 && alpha < s) {
        return Err(Error::AlphaOutOfRange { alpha, s });
    }
    Ok(())
}

/// Bounding constants `(c1, c2)` for `phi`.
///
/// With `beta = sp - alpha (p - 1)`: for `beta < 1`, `c1 = (t - s) / (p t s)`
/// with `t = (s + beta) / 2` and `c2 = 1 / (sp)`; for `beta >= 1`,
/// `c1 = 1 / (sp)` and `c2 = 1 / (sp) + max(1, beta - 1) / (p (1 - s))`.
pub fn bound_constants(alpha: f64, s: f64, p: f64) -> Result<(f64, f64)> {
    check_alpha(alpha, s, p)?;
    let sp = s * p;
    let beta = sp - alpha * (p - 1.0);
    if beta < 1.0 {
        let st = 0.5 * (s + beta);
        Ok(((st - s) / (p * st * s), 1.0 / sp))
    } else {
        Ok((1.0 / sp, 1.0 / sp + (beta - 1.0).max(1.0) / (p * (1.0 - s))))
    }
}

/// Computes `phi = 1/(sp) + int_0^1 (1 - y^alpha)^(p-1) (1 - y^(beta-1)) (1 - y)^(-1-sp) dy`.
///
/// The two endpoint singularities are removed by `y = w^k` on `[0, 1/2]`
/// and `1 - y = w^m` on `[1/2, 1]` before adaptive Gauss-Kronrod.
pub fn phi_constant(alpha: f64, s: f64, p: f64, tol: f64) -> Result<PowerKernelOracle> {
    check_alpha(alpha, s, p)?;
    if !(tol > 0.0) {
        return Err(Error::OutOfRange {
            name: "tol",
            value: tol,
            expected: "tol > 0",
        });
    }
    let sp = s * p;
    let beta = sp - alpha * (p - 1.0);
    let (c1, c2) = bound_constants(alpha, s, p)?;

    let opts = AdaptiveOpts {
        abs_tol: 0.25 * tol,
        rel_tol: 0.0,
        max_segments: 20_000,
    };

    // Left half: y = w^k, the factor y^(beta-1) dy becomes w^(k beta - 1) dw.
    let k = (2.0 / beta).max(1.0).ceil();
    let left = integrate(
        |w| {
            if w <= 0.0 {
                return 0.0;
            }
            let lw = w.ln();
            let y = (k * lw).exp();
            let one_minus_ya = -(k * alpha * lw).exp_m1();
            let jac = k * ((k - 1.0) * lw).exp();
            // (1 - y^(beta-1)) * w^(k-1) computed as w^(k-1) - w^(k beta - 1)
            let bracket = jac - k * ((k * beta - 1.0) * lw).exp();
            one_minus_ya.powf(p - 1.0) * bracket * (1.0 - y).powf(-1.0 - sp)
        },
        0.0,
        0.5f64.powf(1.0 / k),
        opts,
    )?;

    // Right half: z = 1 - y = w^m, the factor z^(p-1-sp) dz becomes w^(m(p-sp)-1) dw.
    let m = (2.0 / (p - sp)).max(1.0).ceil();
    let right = integrate(
        |w| {
            if w <= 0.0 {
                return 0.0;
            }
            let lw = w.ln();
            let z = (m * lw).exp();
            let lny = (-z).ln_1p();
            let one_minus_ya = -(alpha * lny).exp_m1();
            let one_minus_yb = -((beta - 1.0) * lny).exp_m1();
            // z^(-1-sp) * m w^(m-1) = m w^(-m sp - 1)
            let jac = m * ((-m * sp - 1.0) * lw).exp();
            one_minus_ya.powf(p - 1.0) * one_minus_yb * jac
        },
        0.0,
        0.5f64.powf(1.0 / m),
        opts,
    )?;

    let phi = 1.0 / sp + left.value + right.value;
    let error = left.error + right.error;
    if error > tol {
        return Err(Error::QuadratureFail { tol, estimate: error });
    }
    Ok(PowerKernelOracle {
        alpha,
        s,
        p,
        beta,
        phi,
        error,
        c1,
        c2,
    })
}
