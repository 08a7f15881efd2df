use serde::Serialize;

use super::assemble_operator;
use crate::error::{Error, Result};
use crate::grid::{collar_width, Exterior, GridFunction, Side};
use crate::quadrature::{gl8, integrate, integrate_to_infinity, AdaptiveOpts};

/// An energy that is either finite on every mesh or grows under refinement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum EnergyValue {
    Finite(f64),
    Divergent { slope: f64 },
}

impl EnergyValue {
    /// Classifies a refinement sequence: divergent when the least-squares
    /// slope of `log value` against `log n` exceeds `threshold`.
    pub fn from_refinement(ns: &[usize], values: &[f64], threshold: f64) -> Self {
        let slope = loglog_slope(ns, values);
        if slope > threshold {
            EnergyValue::Divergent { slope }
        } else {
            EnergyValue::Finite(*values.last().unwrap_or(&0.0))
        }
    }
}

/// Least-squares slope of `log v` against `log n`.
pub fn loglog_slope(ns: &[usize], values: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = ns
        .iter()
        .zip(values)
        .filter(|(_, &v)| v > 0.0)
        .map(|(&n, &v)| ((n as f64).ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Discrete `[u^theta]^p_{s,p}` of the zero-extended interpolant on the mesh of `u`.
pub fn gagliardo_energy(u: &GridFunction, theta: f64, s: f64, p: f64) -> Result<f64> {
    if !(theta >= 1.0) {
        return Err(Error::OutOfRange {
            name: "theta",
            value: theta,
            expected: "theta >= 1",
        });
    }
    if u.exterior != Exterior::Zero {
        return Err(Error::ExtensionUnsupported("energy is defined for zero exterior data"));
    }
    let v: Vec<f64> = if theta == 1.0 {
        u.values.clone()
    } else {
        if u.values.iter().any(|&x| x < 0.0) {
            return Err(Error::NegativeBase { theta });
        }
        u.values.iter().map(|&x| x.powf(theta)).collect()
    };
    let op = assemble_operator(&u.grid, s, p, 0.0)?;
    op.seminorm_p(&v)
}

// int_{-inf}^x (1 + |t|)^(-1-sp) dt
fn tail_cdf(x: f64, sp: f64) -> f64 {
    if x <= 0.0 {
        (1.0 - x).powf(-sp) / sp
    } else {
        2.0 / sp - (1.0 + x).powf(-sp) / sp
    }
}

/// `int_R |u|^(p-1) (1 + |x|)^(-1-sp) dx` for the interpolant plus its extension.
pub fn tail_norm(u: &GridFunction, s: f64, p: f64) -> Result<f64> {
    let sp = s * p;
    let grid = &u.grid;
    let dom = grid.domain();
    let width = dom.width();
    let vals = u.full_values();
    let nodes = grid.all_nodes();
    let rule = gl8();
    let weight = |x: f64| (1.0 + x.abs()).powf(-1.0 - sp);
    let mut inside = 0.0;
    for (k, &h) in grid.widths().iter().enumerate() {
        let (x0, x1) = (nodes[k], nodes[k] + h);
        // split at the origin where the weight has a kink
        let mut cuts = vec![x0];
        if x0 < 0.0 && x1 > 0.0 {
            cuts.push(0.0);
        }
        cuts.push(x1);
        for seg in cuts.windows(2) {
            inside += rule.integrate(seg[0], seg[1], |x| {
                let t = (x - x0) / h;
                let v = vals[k] * (1.0 - t) + vals[k + 1] * t;
                v.abs().powf(p - 1.0) * weight(x)
            });
        }
    }
    let left_mass = tail_cdf(dom.a, sp);
    let right_mass = 2.0 / sp - tail_cdf(dom.b, sp);
    let opts = AdaptiveOpts::abs(1e-12);
    let outside = match u.exterior {
        Exterior::Zero => 0.0,
        Exterior::Constant(c) => c.abs().powf(p - 1.0) * (left_mass + right_mass),
        Exterior::PowerTail {
            alpha,
            lambda,
            offset,
            rho,
        } => {
            let collar = collar_width(lambda, alpha).min(rho);
            let mut acc = 0.0;
            for side in [Side::Left, Side::Right] {
                let pos = |tau: f64| match side {
                    Side::Left => dom.a - tau,
                    Side::Right => dom.b + tau,
                };
                let q = integrate(
                    |tau| u.exterior.value(side, tau, width).abs().powf(p - 1.0) * weight(pos(tau)),
                    0.0,
                    collar,
                    opts,
                )?;
                let beyond = match side {
                    Side::Left => tail_cdf(dom.a - collar, sp),
                    Side::Right => 2.0 / sp - tail_cdf(dom.b + collar, sp),
                };
                acc += q.value + offset.abs().powf(p - 1.0) * beyond;
            }
            acc
        }
        Exterior::HalfLine { alpha, lambda } => {
            if alpha * (p - 1.0) >= sp {
                return Err(Error::ExtensionUnsupported(
                    "half-line tail grows too fast for the weight",
                ));
            }
            let collar = collar_width(lambda, alpha);
            let left = integrate(
                |tau| u.exterior.value(Side::Left, tau, width).abs().powf(p - 1.0) * weight(dom.a - tau),
                0.0,
                collar,
                opts,
            )?;
            let right = integrate_to_infinity(
                |tau| u.exterior.value(Side::Right, tau, width).abs().powf(p - 1.0) * weight(dom.b + tau),
                0.0,
                opts,
            )?;
            left.value + right.value
        }
    };
    Ok(inside + outside)
}

/// `(1/2) int_{S^1} |e_2 . v|^(sp) |A v|^(-2-sp) dv`.
///
/// The integrand is even under `v -> -v`, so this is the integral over
/// `theta in (0, pi)`, where `sin(theta)^(sp)` has endpoint cusps; adaptive
/// quadrature handles them.
pub fn halfspace_constant(a: [[f64; 2]; 2], s: f64, p: f64) -> Result<f64> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    if det.abs() <= 1e-14 * scale * scale {
        return Err(Error::SingularMatrix(det));
    }
    let sp = s * p;
    let f = |t: f64| {
        let (c, sn) = (t.cos(), t.sin());
        let ax = a[0][0] * c + a[0][1] * sn;
        let ay = a[1][0] * c + a[1][1] * sn;
        sn.abs().powf(sp) * (ax * ax + ay * ay).powf(-0.5 * (2.0 + sp))
    };
    let opts = AdaptiveOpts {
        abs_tol: 1e-13,
        rel_tol: 1e-13,
        max_segments: 10_000,
    };
    let half = std::f64::consts::FRAC_PI_2;
    let q1 = integrate(f, 0.0, half, opts)?;
    let q2 = integrate(f, half, 2.0 * half, opts)?;
    Ok(q1.value + q2.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use std::sync::Arc;

    #[test]
    fn halfspace_examples() {
        let id = [[1.0, 0.0], [0.0, 1.0]];
        assert!((halfspace_constant(id, 0.5, 2.0).unwrap() - 2.0).abs() < 1e-11);
        let two = [[2.0, 0.0], [0.0, 2.0]];
        assert!((halfspace_constant(two, 0.5, 2.0).unwrap() - 0.25).abs() < 1e-12);
        let d = [[1.0, 0.0], [0.0, 2.0]];
        let nd = [[-1.0, 0.0], [0.0, -2.0]];
        let v = halfspace_constant(d, 0.5, 2.0).unwrap();
        assert!((v - halfspace_constant(nd, 0.5, 2.0).unwrap()).abs() < 1e-13);
        assert!(matches!(
            halfspace_constant([[1.0, 2.0], [2.0, 4.0]], 0.5, 2.0),
            Err(Error::SingularMatrix(_))
        ));
    }

    #[test]
    fn tail_norm_of_constants() {
        let g = Arc::new(build_grid(0.0, 1.0, 16, 1.0).unwrap());
        let one = GridFunction::new(g.clone(), vec![1.0; 16], Exterior::Constant(1.0)).unwrap();
        assert!((tail_norm(&one, 0.5, 2.0).unwrap() - 2.0).abs() < 1e-12);
        let zero = GridFunction::new(g, vec![0.0; 16], Exterior::Zero).unwrap();
        assert_eq!(tail_norm(&zero, 0.5, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn energy_scaling() {
        let g = Arc::new(build_grid(0.0, 1.0, 32, 1.0).unwrap());
        let u = GridFunction::from_distance(g, |d| d.powf(0.6));
        let e1 = gagliardo_energy(&u, 1.5, 0.4, 2.5).unwrap();
        let e2 = gagliardo_energy(&u.scaled(2.0), 1.5, 0.4, 2.5).unwrap();
        assert!((e2 / e1 - 2f64.powf(1.5 * 2.5)).abs() < 1e-10);
        let z = u.map(|_| 0.0);
        assert_eq!(gagliardo_energy(&z, 1.0, 0.4, 2.5).unwrap(), 0.0);
        let neg = u.map(|v| -v);
        assert_eq!(
            gagliardo_energy(&neg, 2.0, 0.4, 2.5),
            Err(Error::NegativeBase { theta: 2.0 })
        );
    }
}
