//! The nonlocal kernel `|x - y|^(-1 - sp)`: exact power-barrier constants,
//! principal-value evaluation, discrete operator assembly and energies.

mod energy;
mod operator;
mod oracle;
mod pv;

pub use energy::{gagliardo_energy, halfspace_constant, loglog_slope, tail_norm, EnergyValue};
pub use operator::{assemble_operator, exterior_weight, DiscreteOperator};
pub use oracle::{bound_constants, phi_constant, PowerKernelOracle};
pub use pv::{eval_fplap_pv, eval_fplap_pv_with, PvOptions};

/// `[a - b]^(p-1) = |a - b|^(p-2) (a - b)`.
#[inline]
pub fn updiff(a: f64, b: f64, p: f64) -> f64 {
    signed_pow(a - b, p - 1.0)
}

/// `|t|^(q) sign(t)`, zero at `t = 0` for every `q > 0`.
#[inline]
pub fn signed_pow(t: f64, q: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else if q == 1.0 {
        t
    } else {
        t.abs().powf(q).copysign(t)
    }
}

/// Smoothed `[t]^(p-1)`: `(t^2 + mu^2)^((p-2)/2) t`; exact for `mu = 0`.
#[inline]
pub fn smoothed_updiff(t: f64, p: f64, mu: f64) -> f64 {
    if mu == 0.0 {
        signed_pow(t, p - 1.0)
    } else if p == 2.0 {
        t
    } else {
        (t * t + mu * mu).powf(0.5 * (p - 2.0)) * t
    }
}

/// Primitive of [`smoothed_updiff`] vanishing at zero:
/// `((t^2 + mu^2)^(p/2) - mu^p) / p`.
#[inline]
pub fn smoothed_potential(t: f64, p: f64, mu: f64) -> f64 {
    if mu == 0.0 {
        t.abs().powf(p) / p
    } else if p == 2.0 {
        0.5 * t * t
    } else {
        let t2 = t * t;
        let m2 = mu * mu;
        // (m2 + t2)^(p/2) - m2^(p/2) without cancellation for |t| << mu
        let x = t2 / m2;
        m2.powf(0.5 * p) * (0.5 * p * x.ln_1p()).exp_m1() / p
    }
}

/// Derivative of [`smoothed_updiff`] in `t`.
#[inline]
pub fn smoothed_curvature(t: f64, p: f64, mu: f64) -> f64 {
    if p == 2.0 {
        1.0
    } else if mu == 0.0 {
        if t == 0.0 {
            if p > 2.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (p - 1.0) * t.abs().powf(p - 2.0)
        }
    } else {
        let q = t * t + mu * mu;
        q.powf(0.5 * (p - 4.0)) * ((p - 1.0) * t * t + mu * mu)
    }
}
