use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::{barrier_profile, BarrierKind, BarrierSpec};
use crate::error::{Error, Result};
use crate::grid::{build_grid, Grid};
use crate::kernel::{assemble_operator, eval_fplap_pv, phi_constant};
use crate::params::ProblemParams;

/// One measured quantity against its limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    /// How `value` is compared with `limit`: `"<="`, `">="`, `">"` or `"in"`.
    pub relation: String,
    pub passed: bool,
}

impl CheckResult {
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            relation: "<=".into(),
            passed: value <= limit,
        }
    }

    pub fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            relation: ">=".into(),
            passed: value >= limit,
        }
    }

    pub fn above(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            relation: ">".into(),
            passed: value > limit,
        }
    }
}

/// Pass/fail record of one verification experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationRecord {
    pub experiment: String,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
    pub notes: Vec<String>,
}

impl VerificationRecord {
    pub fn new(experiment: &str, checks: Vec<CheckResult>, notes: Vec<String>) -> Self {
        Self {
            experiment: experiment.into(),
            passed: checks.iter().all(|c| c.passed),
            checks,
            notes,
        }
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Checks the power barrier `U_lambda` on the half line: the bounds on its
/// constant, the constancy of `PV(U_lambda)(x) (x + L)^beta` over the sample
/// points, and finiteness of its seminorm on `(0, 1)` under refinement.
pub fn verify_power_estimate(
    alpha: f64,
    s: f64,
    p: f64,
    lambda: f64,
    sample_points: &[f64],
    tol: f64,
) -> Result<VerificationRecord> {
    if !(alpha > 0.0 && alpha < s) {
        return Err(Error::AlphaOutOfRange { alpha, s });
    }
    if lambda == 0.0 && alpha <= s - 1.0 / p {
        return Err(Error::MembershipViolation {
            alpha,
            bound: s - 1.0 / p,
        });
    }
    if sample_points.is_empty() || sample_points.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::Precondition("sample points must be positive".into()));
    }
    let oracle = phi_constant(alpha, s, p, 1e-10)?;
    let spec = BarrierSpec::new(alpha, lambda, 1.0, s, p)?;
    let l = spec.collar();
    let beta = spec.beta();

    let xmax = sample_points.iter().copied().fold(0.0, f64::max);
    let xmin = sample_points.iter().copied().fold(f64::INFINITY, f64::min);
    let right = (4.0 * xmax).max(1.0);
    let q = (s / alpha).clamp(1.0, crate::grid::GRADING_CAP);
    let grid = Arc::new(build_grid(0.0, right, 2048, q)?);
    let u = barrier_profile(&spec, grid.clone(), BarrierKind::U)?;
    let ratios = sample_points
        .par_iter()
        .map(|&x| {
            let k = grid.locate(x);
            let cut = grid.local_width(k).max(grid.local_width(k + 1)).min(0.25 * x);
            let v = eval_fplap_pv(&u, x, cut, s, p)?;
            Ok(v * (x + l).powf(beta) / (2.0 * oracle.phi))
        })
        .collect::<Result<Vec<f64>>>()?;
    let deviation = ratios.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max);

    // local seminorm on (0, 1) at two resolutions
    let window = |n: usize| -> Result<f64> {
        let g = Arc::new(build_grid(0.0, 1.0, n, q)?);
        let f = barrier_profile(&spec, g.clone(), BarrierKind::U)?;
        let op = assemble_operator(&g, s, p, 0.0)?;
        op.interior_seminorm_p(&f.values)
    };
    let (e1, e2) = (window(255)?, window(511)?);

    let checks = vec![
        CheckResult::at_least("phi_minus_c1", oracle.phi - oracle.c1, -oracle.error),
        CheckResult::at_least("c2_minus_phi", oracle.c2 - oracle.phi, -oracle.error),
        CheckResult::at_most("pv_ratio_deviation", deviation, tol),
        CheckResult::at_most("window_seminorm_growth", e2 / e1, 1.1),
    ];
    let notes = vec![
        format!(
            "phi = {:.12}, c1 = {:.6}, c2 = {:.6}, beta = {:.6}, samples in [{xmin}, {xmax}]",
            oracle.phi, oracle.c1, oracle.c2, beta
        ),
        "the operator carries a factor 2 relative to phi: PV = 2 phi (x + L)^(-beta)".into(),
    ];
    Ok(VerificationRecord::new("power_estimate", checks, notes))
}

/// Empirical barrier constants over the nodes of `Omega_eta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BarrierConstants {
    /// `min PV(super) (d + L)^beta`.
    pub c5: f64,
    /// `max PV(sub) (d + L)^beta`.
    pub c6: f64,
    pub probes: usize,
}

fn probe_points(grid: &Grid, eta: f64, max_probes: usize) -> Vec<(f64, f64)> {
    let all = grid.all_nodes();
    let d = grid.all_distances();
    let w = grid.widths();
    let mut pts: Vec<(f64, f64)> = (1..=grid.len())
        .filter_map(|i| {
            let cut = w[i - 1].max(w[i]);
            (d[i] < eta && d[i] >= 2.0 * cut).then_some((all[i], cut))
        })
        .collect();
    if pts.len() > max_probes {
        let stride = pts.len() as f64 / max_probes as f64;
        pts = (0..max_probes).map(|k| pts[(k as f64 * stride) as usize]).collect();
    }
    pts
}

fn constants_at(spec: &BarrierSpec, grid: Arc<Grid>, probes: &[(f64, f64)]) -> Result<BarrierConstants> {
    let sup = barrier_profile(spec, grid.clone(), BarrierKind::Super)?;
    let sub = barrier_profile(spec, grid.clone(), BarrierKind::Sub)?;
    let l = spec.collar();
    let beta = spec.beta();
    let dom = grid.domain();
    let vals = probes
        .par_iter()
        .map(|&(x, cut)| {
            let scale = (dom.boundary_distance(x) + l).powf(beta);
            let a = eval_fplap_pv(&sup, x, cut, spec.s, spec.p)? * scale;
            let b = eval_fplap_pv(&sub, x, cut, spec.s, spec.p)? * scale;
            Ok((a, b))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BarrierConstants {
        c5: vals.iter().map(|v| v.0).fold(f64::INFINITY, f64::min),
        c6: vals.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max),
        probes: probes.len(),
    })
}

/// `(c5, c6)` on `grid` over at most 64 probe nodes of `Omega_eta`.
pub fn barrier_constants(spec: &BarrierSpec, grid: Arc<Grid>, eta: f64) -> Result<BarrierConstants> {
    check_barrier_inputs(spec, &grid, eta)?;
    let probes = probe_points(&grid, eta, 64);
    constants_at(spec, grid, &probes)
}

fn check_barrier_inputs(spec: &BarrierSpec, grid: &Grid, eta: f64) -> Result<()> {
    spec.validate()?;
    if spec.rho <= spec.collar() {
        return Err(Error::CollarTooThin {
            rho: spec.rho,
            collar: spec.collar(),
        });
    }
    let half = 0.5 * grid.domain().width();
    if !(eta > 0.0) || eta > half {
        return Err(Error::EtaTooLarge { eta, half });
    }
    let inside = grid.distances().iter().filter(|&&d| d < eta).count();
    if inside < 16 {
        return Err(Error::Precondition(format!(
            "Omega_eta holds {inside} nodes, need at least 16"
        )));
    }
    Ok(())
}

/// Measures `c5 = min PV(super) (d + L)^beta` and `c6 = max PV(sub) (d + L)^beta`
/// over `Omega_eta` on the grid and two refinements of it. Passes when `c5 > 0`,
/// `c6` is finite, both vary by at most 10% across the three meshes, and
/// `sub <= super` at every node.
pub fn verify_boundary_barrier(
    params: &ProblemParams,
    spec: &BarrierSpec,
    grid: Arc<Grid>,
    eta: f64,
) -> Result<VerificationRecord> {
    if params.s != spec.s || params.p != spec.p {
        return Err(Error::SpecInvalid("barrier (s, p) differ from the problem parameters"));
    }
    if grid.domain() != params.domain {
        return Err(Error::SpecInvalid("grid and problem domains differ"));
    }
    check_barrier_inputs(spec, &grid, eta)?;
    let probes = probe_points(&grid, eta, 64);
    let g1 = Arc::new(grid.refined()?);
    let g2 = Arc::new(g1.refined()?);
    let levels = [
        constants_at(spec, grid.clone(), &probes)?,
        constants_at(spec, g1, &probes)?,
        constants_at(spec, g2, &probes)?,
    ];
    let spread = |f: fn(&BarrierConstants) -> f64| {
        let lo = levels.iter().map(f).fold(f64::INFINITY, f64::min);
        let hi = levels.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        (hi - lo) / hi.abs().max(lo.abs())
    };
    let sup = barrier_profile(spec, grid.clone(), BarrierKind::Super)?;
    let sub = barrier_profile(spec, grid, BarrierKind::Sub)?;
    let order = sub
        .values
        .iter()
        .zip(&sup.values)
        .map(|(a, b)| a - b)
        .fold(f64::NEG_INFINITY, f64::max);
    let finest = levels[2];
    let checks = vec![
        CheckResult::above("c5_min", levels.iter().map(|c| c.c5).fold(f64::INFINITY, f64::min), 0.0),
        CheckResult::at_most(
            "c6_max",
            levels.iter().map(|c| c.c6).fold(f64::NEG_INFINITY, f64::max),
            f64::MAX,
        ),
        CheckResult::at_most("c5_refinement_spread", spread(|c| c.c5), 0.1),
        CheckResult::at_most("c6_refinement_spread", spread(|c| c.c6), 0.1),
        CheckResult::at_most("sub_minus_super", order, 0.0),
    ];
    let notes = vec![format!(
        "c5 = {:.6}, c6 = {:.6} on the finest mesh over {} probes; (lambda, eta) = ({}, {eta})",
        finest.c5, finest.c6, finest.probes, spec.lambda
    )];
    Ok(VerificationRecord::new("boundary_barrier", checks, notes))
}
