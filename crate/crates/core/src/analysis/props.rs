use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::build_grid;
use crate::kernel::assemble_operator;
use crate::kernel::DiscreteOperator;
use crate::solver::solve_fixed_rhs;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompositionReport {
    pub s: f64,
    pub p: f64,
    pub theta: f64,
    pub trials: usize,
    pub failures: usize,
    /// Largest `(lhs - rhs) / scale` over the trials.
    pub max_excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropsReport {
    pub samples: usize,
    pub inequality_failures: usize,
    /// Smallest `|x^q - y^q| / (eps^(q-1) |x - y|)` seen.
    pub inequality_min_ratio: f64,
    pub composition: Vec<CompositionReport>,
    pub passed: bool,
}

/// Checks `2 <A(Phi(u)), phi> <= sum_i m_i g_i Phi'(u_i)^(p-1) phi_i` for
/// `Phi(t) = t^theta` against `trials` random nonnegative `phi`, where
/// `A` is the discrete operator and `2 A(u) = m g`. A trial fails when the
/// excess exceeds `tol` times the right-hand side computed with `|.|`.
pub fn composition_check(
    op: &DiscreteOperator,
    u: &[f64],
    g: &[f64],
    theta: f64,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<CompositionReport> {
    if !(theta >= 1.0) {
        return Err(Error::Precondition(
            "composition needs a convex power, theta >= 1".into(),
        ));
    }
    if let Some(i) = u.iter().position(|&v| v < 0.0) {
        return Err(Error::NonPositiveValues { index: i, value: u[i] });
    }
    let p = op.p;
    let w: Vec<f64> = u.iter().map(|&v| v.powf(theta)).collect();
    let aw = op.apply(&w)?;
    let weight: Vec<f64> = u
        .iter()
        .zip(g)
        .zip(&op.m)
        .map(|((&v, &gi), &mi)| mi * gi * (theta * v.powf(theta - 1.0)).powf(p - 1.0))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut max_excess = f64::NEG_INFINITY;
    for _ in 0..trials {
        let phi: Vec<f64> = (0..u.len()).map(|_| rng.gen::<f64>()).collect();
        let lhs: f64 = 2.0 * aw.iter().zip(&phi).map(|(a, f)| a * f).sum::<f64>();
        let rhs: f64 = weight.iter().zip(&phi).map(|(a, f)| a * f).sum();
        let scale: f64 = weight
            .iter()
            .zip(&phi)
            .map(|(a, f)| a.abs() * f)
            .sum::<f64>()
            .max(f64::MIN_POSITIVE);
        let excess = (lhs - rhs) / scale;
        max_excess = max_excess.max(excess);
        if excess > tol {
            failures += 1;
        }
    }
    Ok(CompositionReport {
        s: op.s,
        p,
        theta,
        trials,
        failures,
        max_excess,
    })
}

/// Randomized checks of `|x^q - y^q| >= eps^(q-1) |x - y|` on
/// `{x >= eps, y >= 0} U {x >= 0, y >= eps}` and of the convex composition
/// inequality on solved problems with `Phi(t) = t` and `t^2`.
pub fn inequality_props(seed: u64, samples: usize) -> Result<PropsReport> {
    if samples < 1000 {
        return Err(Error::Precondition(format!(
            "need at least 1000 samples, got {samples}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut min_ratio = f64::INFINITY;
    for _ in 0..samples {
        let q = 1.0 + 4.0 * rng.gen::<f64>();
        let eps = 10f64.powf(rng.gen_range(-3.0..1.0));
        let big = eps * (1.0 + 9.0 * rng.gen::<f64>());
        let other = 10.0 * eps * rng.gen::<f64>();
        let (x, y) = if rng.gen::<bool>() { (big, other) } else { (other, big) };
        if x == y {
            continue;
        }
        let ratio = (x.powf(q) - y.powf(q)).abs() / (eps.powf(q - 1.0) * (x - y).abs());
        min_ratio = min_ratio.min(ratio);
        if ratio < 1.0 - 1e-12 {
            failures += 1;
        }
    }

    let grid = build_grid(0.0, 1.0, 64, 1.5)?;
    let mut composition = Vec::new();
    for (k, (s, p)) in [(0.5, 2.0), (0.4, 3.0)].into_iter().enumerate() {
        let op = assemble_operator(&grid, s, p, 0.0)?;
        let g: Vec<f64> = grid.distances().iter().map(|&d| 1.0 + d).collect();
        let sol = solve_fixed_rhs(&op, &g, 1e-12)?;
        for theta in [1.0, 2.0] {
            let seed = seed.wrapping_add(1 + 2 * k as u64 + theta as u64);
            composition.push(composition_check(&op, &sol.u.values, &g, theta, 100, seed, 1e-8)?);
        }
    }
    let passed = failures == 0 && composition.iter().all(|c| c.failures == 0);
    Ok(PropsReport {
        samples,
        inequality_failures: failures,
        inequality_min_ratio: min_ratio,
        composition,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example() {
        let (x, y, q, eps): (f64, f64, f64, f64) = (3.0, 1.0, 2.0, 1.0);
        assert!((x.powf(q) - y.powf(q)).abs() >= eps.powf(q - 1.0) * (x - y).abs());
    }

    #[test]
    fn too_few_samples() {
        assert!(matches!(inequality_props(1, 10), Err(Error::Precondition(_))));
    }
}
