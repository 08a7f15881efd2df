//! Boundary exponents, Sobolev and Hardy scans, comparison checks and
//! property tests computed from discrete solutions.

mod bracket;
mod props;
mod scan;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, Side};
use crate::kernel::EnergyValue;

pub use bracket::{barrier_bracket, BracketReport};
pub use props::{composition_check, inequality_props, CompositionReport, PropsReport};
pub use scan::{
    expected_bounded, nonexistence_scan, sobolev_scan, sobolev_table, solve_minimal, NonexistenceRow,
    NonexistenceTable, ScanOptions, ScanRow, ScanTable, ThetaClass, Verdict,
};

/// Slope threshold separating bounded from divergent refinement sequences.
pub const DIVERGENCE_SLOPE: f64 = 0.1;

/// Range of boundary distances used by the exponent fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitWindow {
    pub d_lo: f64,
    pub d_hi: f64,
}

impl FitWindow {
    /// `[8 h_min, 0.1 |Omega|]`.
    pub fn default_for(grid: &crate::grid::Grid) -> Self {
        Self {
            d_lo: 8.0 * grid.h_min(),
            d_hi: 0.1 * grid.domain().width(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SideFit {
    pub side: Side,
    pub d_lo: f64,
    pub d_hi: f64,
    pub nodes: usize,
    pub slope: f64,
    pub intercept: f64,
    /// Root mean square of the regression residuals in `log u`.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentFit {
    pub left: SideFit,
    pub right: SideFit,
    pub reference: f64,
    /// Largest `|slope - reference|` over the two sides.
    pub deviation: f64,
}

impl ExponentFit {
    pub fn sides(&self) -> [&SideFit; 2] {
        [&self.left, &self.right]
    }

    pub fn mean_slope(&self) -> f64 {
        0.5 * (self.left.slope + self.right.slope)
    }
}

fn least_squares(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    (slope, intercept, (rss / k).sqrt())
}

/// Least-squares slope of `log u` against `log d` on each side of the
/// interval, over nodes with `d` in the window (default `[8 h_min, 0.1 |Omega|]`).
pub fn fit_boundary_exponent(u: &GridFunction, window: Option<FitWindow>, reference: f64) -> Result<ExponentFit> {
    let grid = &u.grid;
    let win = window.unwrap_or_else(|| FitWindow::default_for(grid));
    let width = grid.domain().width();
    if !(win.d_lo > 5.0 * grid.h_min() && win.d_hi <= 0.2 * width && win.d_lo < win.d_hi) {
        return Err(Error::OutOfRange {
            name: "fit window",
            value: win.d_lo,
            expected: "5 h_min < d_lo < d_hi <= 0.2 |Omega|",
        });
    }
    let sides = &grid.sides()[1..=grid.len()];
    let mut fits = Vec::with_capacity(2);
    for (side, label) in [(Side::Left, "left"), (Side::Right, "right")] {
        let mut pts = Vec::new();
        for (i, (&d, &sd)) in grid.distances().iter().zip(sides).enumerate() {
            if sd != side || d < win.d_lo || d > win.d_hi {
                continue;
            }
            let v = u.values[i];
            if !(v > 0.0) {
                return Err(Error::NonPositiveValues { index: i, value: v });
            }
            pts.push((d.ln(), v.ln()));
        }
        if pts.len() < 8 {
            return Err(Error::WindowTooThin {
                side: label,
                got: pts.len(),
                min: 8,
            });
        }
        let (slope, intercept, residual) = least_squares(&pts);
        fits.push(SideFit {
            side,
            d_lo: win.d_lo,
            d_hi: win.d_hi,
            nodes: pts.len(),
            slope,
            intercept,
            residual,
        });
    }
    let (left, right) = (fits[0], fits[1]);
    Ok(ExponentFit {
        left,
        right,
        reference,
        deviation: (left.slope - reference).abs().max((right.slope - reference).abs()),
    })
}

/// Nodal approximation of `int_Omega (u^theta / d^s)^p`.
pub fn hardy_quotient(u: &GridFunction, theta: f64, s: f64, p: f64) -> f64 {
    let m = u.grid.masses();
    u.values
        .iter()
        .zip(u.grid.distances())
        .zip(&m)
        .map(|((&v, &d), &w)| w * (v.max(0.0).powf(theta) / d.powf(s)).powf(p))
        .sum()
}

/// Hardy quotients of a refinement sequence, divergent when the log-log slope
/// against the node count exceeds [`DIVERGENCE_SLOPE`].
pub fn hardy_refinement(us: &[GridFunction], theta: f64, s: f64, p: f64) -> EnergyValue {
    let ns: Vec<usize> = us.iter().map(|u| u.grid.len()).collect();
    let vals: Vec<f64> = us.iter().map(|u| hardy_quotient(u, theta, s, p)).collect();
    EnergyValue::from_refinement(&ns, &vals, DIVERGENCE_SLOPE)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonReport {
    /// `max (u_sub - u)_+`.
    pub below: f64,
    /// `max (u - u_super)_+`.
    pub above: f64,
    pub worst_index: Option<usize>,
    pub tol: f64,
    pub passed: bool,
}

/// Measures how far `u_sub <= u <= u_super` fails at the nodes.
pub fn comparison_check(u_sub: &[f64], u: &[f64], u_super: &[f64], tol: f64) -> Result<ComparisonReport> {
    for other in [u_sub, u_super] {
        if other.len() != u.len() {
            return Err(Error::ShapeMismatch {
                expected: u.len(),
                got: other.len(),
            });
        }
    }
    let (mut below, mut above) = (0.0f64, 0.0f64);
    let mut worst = None;
    let mut worst_val = 0.0;
    for i in 0..u.len() {
        let b = (u_sub[i] - u[i]).max(0.0);
        let a = (u[i] - u_super[i]).max(0.0);
        below = below.max(b);
        above = above.max(a);
        if a.max(b) > worst_val {
            worst_val = a.max(b);
            worst = Some(i);
        }
    }
    Ok(ComparisonReport {
        below,
        above,
        worst_index: worst,
        tol,
        passed: below <= tol && above <= tol,
    })
}
