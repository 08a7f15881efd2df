//! Graded 1-D meshes, nodal functions with exterior extensions, and distance fields.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{Interval, ProblemParams};

/// Largest grading exponent used by [`default_grading`]. Beyond this the
/// first cells fall below `1e-9` at desk-scale `n` and the neighbour width
/// ratio near the boundary exceeds `2^q - 1`.
pub const GRADING_CAP: f64 = 3.0;

/// Which boundary point a node is measured from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

/// Symmetric graded mesh on `(a, b)`.
///
/// Internally the two boundary points are stored as nodes `0` and `n + 1`;
/// distances to the nearest boundary point are kept separately so that
/// cells of width far below `eps * (b - a)` stay resolved near `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    domain: Interval,
    grading: f64,
    /// All nodes including both boundary points.
    x: Vec<f64>,
    /// Distance of every node to the nearest boundary point.
    d: Vec<f64>,
    side: Vec<Side>,
    /// `widths[k] = x[k + 1] - x[k]`, `k = 0..=n`.
    widths: Vec<f64>,
}

fn half_map(t: f64, q: f64) -> f64 {
    // distance to the nearest end, as a fraction of the width, for t in [0, 1/2]
    0.5 * (2.0 * t).powf(q)
}

/// Builds the mesh `a + (b - a) sigma(t_k)`, `t_k = k / (n + 1)`, where
/// `sigma(t) = (2t)^q / 2` on the left half and is mirrored on the right.
pub fn build_grid(a: f64, b: f64, n: usize, q: f64) -> Result<Grid> {
    if !(q >= 1.0) || !q.is_finite() {
        return Err(Error::BadGrading(q));
    }
    if n < 2 {
        return Err(Error::TooFewNodes { min: 2, got: n });
    }
    let domain = Interval::new(a, b)?;
    let w = b - a;
    let m = n + 1;
    let mut x = Vec::with_capacity(m + 1);
    let mut d = Vec::with_capacity(m + 1);
    let mut side = Vec::with_capacity(m + 1);
    for k in 0..=m {
        let left = 2 * k <= m;
        let kk = if left { k } else { m - k };
        let t = kk as f64 / m as f64;
        let frac = if q == 1.0 { t } else { half_map(t, q) };
        let dist = w * frac;
        let xk = if q == 1.0 {
            a + w * (k as f64 / m as f64)
        } else if left {
            a + dist
        } else {
            b - dist
        };
        x.push(xk);
        d.push(dist);
        side.push(if left { Side::Left } else { Side::Right });
    }
    x[0] = a;
    x[m] = b;
    d[0] = 0.0;
    d[m] = 0.0;
    let mut widths = Vec::with_capacity(m);
    for k in 0..m {
        let wk = match (side[k], side[k + 1]) {
            (Side::Left, Side::Left) => d[k + 1] - d[k],
            (Side::Right, Side::Right) => d[k] - d[k + 1],
            _ => w - d[k] - d[k + 1],
        };
        widths.push(wk);
    }
    Ok(Grid {
        domain,
        grading: q,
        x,
        d,
        side,
        widths,
    })
}

/// `q = max(1, s / alpha_ref)` capped at [`GRADING_CAP`], where `alpha_ref`
/// is the expected boundary exponent.
pub fn default_grading(params: &ProblemParams) -> f64 {
    let alpha = params.reference_exponent();
    if alpha <= 0.0 {
        return GRADING_CAP;
    }
    (params.s / alpha).clamp(1.0, GRADING_CAP)
}

impl Grid {
    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn grading(&self) -> f64 {
        self.grading
    }

    /// Number of interior nodes.
    pub fn len(&self) -> usize {
        self.x.len() - 2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Interior nodes `x_1 .. x_n`.
    pub fn nodes(&self) -> &[f64] {
        &self.x[1..self.x.len() - 1]
    }

    /// Distances of the interior nodes to the boundary.
    pub fn distances(&self) -> &[f64] {
        &self.d[1..self.d.len() - 1]
    }

    /// All nodes including `a` and `b`.
    pub fn all_nodes(&self) -> &[f64] {
        &self.x
    }

    pub fn all_distances(&self) -> &[f64] {
        &self.d
    }

    pub fn sides(&self) -> &[Side] {
        &self.side
    }

    /// Cell widths, `n + 1` of them, summing to `b - a`.
    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    /// Trapezoid masses of the interior nodes with the two boundary
    /// half-cells lumped into the first and last node; they sum to `b - a`.
    pub fn masses(&self) -> Vec<f64> {
        let w = &self.widths;
        let n = self.len();
        let mut m: Vec<f64> = (1..=n).map(|k| 0.5 * (w[k - 1] + w[k])).collect();
        m[0] += 0.5 * w[0];
        m[n - 1] += 0.5 * w[n];
        m
    }

    pub fn h_min(&self) -> f64 {
        self.widths.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn h_max(&self) -> f64 {
        self.widths.iter().copied().fold(0.0, f64::max)
    }

    /// Distance between full-index nodes `i` and `j`, accurate even for
    /// cells much smaller than `eps * (b - a)`.
    pub fn gap(&self, i: usize, j: usize) -> f64 {
        match (self.side[i], self.side[j]) {
            (Side::Left, Side::Left) | (Side::Right, Side::Right) => (self.d[i] - self.d[j]).abs(),
            _ => self.domain.width() - self.d[i] - self.d[j],
        }
    }

    /// Distances from full-index node `i` to `a` and to `b`.
    pub fn endpoint_distances(&self, i: usize) -> (f64, f64) {
        let w = self.domain.width();
        match self.side[i] {
            Side::Left => (self.d[i], w - self.d[i]),
            Side::Right => (w - self.d[i], self.d[i]),
        }
    }

    /// Largest width of the two cells touching full-index node `i`.
    pub fn local_width(&self, i: usize) -> f64 {
        let m = self.widths.len();
        let left = if i > 0 { self.widths[i - 1] } else { 0.0 };
        let right = if i < m { self.widths[i] } else { 0.0 };
        left.max(right)
    }

    /// Index `k` of the cell `[x_k, x_{k+1}]` containing `y` (clamped).
    pub fn locate(&self, y: f64) -> usize {
        let m = self.widths.len();
        match self.x.binary_search_by(|v| v.total_cmp(&y)) {
            Ok(k) => k.min(m - 1),
            Err(0) => 0,
            Err(k) => (k - 1).min(m - 1),
        }
    }

    /// Same mesh with `2n + 1` interior nodes.
    pub fn refined(&self) -> Result<Grid> {
        build_grid(self.domain.a, self.domain.b, 2 * self.len() + 1, self.grading)
    }
}

/// Values outside `(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Exterior {
    /// `u = 0` outside the domain.
    Zero,
    Constant(f64),
    /// Barrier tail on both sides: at distance `tau` outside the domain the
    /// value is `(L - tau)_+^alpha - offset` for `tau < rho` and `-offset`
    /// beyond, with `L = lambda^(1/alpha)`.
    PowerTail {
        alpha: f64,
        lambda: f64,
        offset: f64,
        rho: f64,
    },
    /// `U_lambda(y - a) = ((y - a + L)_+)^alpha` continued on the whole line.
    HalfLine {
        alpha: f64,
        lambda: f64,
    },
}

/// `lambda^(1/alpha)`, zero when `lambda = 0`.
pub fn collar_width(lambda: f64, alpha: f64) -> f64 {
    if lambda == 0.0 {
        0.0
    } else {
        lambda.powf(1.0 / alpha)
    }
}

impl Exterior {
    /// Exterior value at distance `tau > 0` from the boundary point on `side`
    /// of a domain of width `width`.
    pub fn value(&self, side: Side, tau: f64, width: f64) -> f64 {
        match *self {
            Exterior::Zero => 0.0,
            Exterior::Constant(c) => c,
            Exterior::PowerTail {
                alpha,
                lambda,
                offset,
                rho,
            } => {
                let l = collar_width(lambda, alpha);
                if tau < rho {
                    (l - tau).max(0.0).powf(alpha) - offset
                } else {
                    -offset
                }
            }
            Exterior::HalfLine { alpha, lambda } => {
                let l = collar_width(lambda, alpha);
                match side {
                    Side::Left => (l - tau).max(0.0).powf(alpha),
                    Side::Right => (width + tau + l).powf(alpha),
                }
            }
        }
    }

    /// Limit of the exterior value at the boundary point on `side`.
    pub fn boundary_value(&self, side: Side, width: f64) -> f64 {
        match *self {
            Exterior::Zero => 0.0,
            Exterior::Constant(c) => c,
            Exterior::PowerTail {
                alpha,
                lambda,
                offset,
                rho,
            } => {
                if rho > 0.0 {
                    collar_width(lambda, alpha).powf(alpha) - offset
                } else {
                    -offset
                }
            }
            Exterior::HalfLine { alpha, lambda } => {
                let l = collar_width(lambda, alpha);
                match side {
                    Side::Left => l.powf(alpha),
                    Side::Right => (width + l).powf(alpha),
                }
            }
        }
    }
}

/// Nodal values on a [`Grid`] plus the exterior extension.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
    pub exterior: Exterior,
}

impl GridFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>, exterior: Exterior) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values, exterior })
    }

    /// Zero-extended function built from a closure of the boundary distance.
    pub fn from_distance(grid: Arc<Grid>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.distances().iter().map(|&d| f(d)).collect();
        Self {
            grid,
            values,
            exterior: Exterior::Zero,
        }
    }

    /// Nodal values including the two boundary limits.
    pub fn full_values(&self) -> Vec<f64> {
        let w = self.grid.domain().width();
        let mut out = Vec::with_capacity(self.values.len() + 2);
        out.push(self.exterior.boundary_value(Side::Left, w));
        out.extend_from_slice(&self.values);
        out.push(self.exterior.boundary_value(Side::Right, w));
        out
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
            exterior: self.exterior,
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        let exterior = match self.exterior {
            Exterior::Zero => Exterior::Zero,
            Exterior::Constant(v) => Exterior::Constant(c * v),
            other if c == 1.0 => other,
            _ => Exterior::Zero,
        };
        debug_assert!(
            c == 1.0 || !matches!(self.exterior, Exterior::PowerTail { .. } | Exterior::HalfLine { .. }),
            "scaling a power tail is not representable"
        );
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| c * v).collect(),
            exterior,
        }
    }
}

/// The extended distance: `d` inside the domain, `-dist` in the exterior
/// collar of width `lambda^(1/alpha)`, `-lambda^(1/alpha)` beyond.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtendedDistance {
    pub domain: Interval,
    pub collar: f64,
    pub rho: f64,
}

impl ExtendedDistance {
    pub fn eval(&self, x: f64) -> f64 {
        if self.domain.contains(x) {
            self.domain.boundary_distance(x)
        } else {
            let tau = self.domain.boundary_distance(x);
            if tau < self.collar {
                -tau
            } else {
                -self.collar
            }
        }
    }

    /// Points where the barrier formulas use `d_e` (domain plus the `rho`-collar).
    pub fn in_barrier_support(&self, x: f64) -> bool {
        self.domain.contains(x) || self.domain.boundary_distance(x) < self.rho
    }
}

/// Per-node distances and the extended-distance descriptor.
pub fn distance_fields(grid: &Grid, lambda: f64, alpha: f64, rho: f64) -> Result<(Vec<f64>, ExtendedDistance)> {
    if !(lambda >= 0.0) {
        return Err(Error::OutOfRange {
            name: "lambda",
            value: lambda,
            expected: "lambda >= 0",
        });
    }
    if !(alpha > 0.0) {
        return Err(Error::OutOfRange {
            name: "alpha",
            value: alpha,
            expected: "alpha > 0",
        });
    }
    if !(rho > 0.0) {
        return Err(Error::OutOfRange {
            name: "rho",
            value: rho,
            expected: "rho > 0",
        });
    }
    Ok((
        grid.distances().to_vec(),
        ExtendedDistance {
            domain: grid.domain(),
            collar: collar_width(lambda, alpha),
            rho,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_mesh_is_exact() {
        let g = build_grid(0.0, 1.0, 4, 1.0).unwrap();
        assert_eq!(g.nodes(), &[0.2, 0.4, 0.6, 0.8]);
    }

    #[test]
    fn graded_mesh_refines_endpoints() {
        let g = build_grid(0.0, 1.0, 128, 2.0).unwrap();
        assert!(g.h_min() < 4.0 / (129.0f64 * 129.0));
        let w: f64 = g.widths().iter().sum();
        assert!((w - 1.0).abs() < 1e-14);
        assert!(g.widths().iter().all(|&h| h > 0.0));
        // symmetric
        let n = g.len();
        for i in 0..n {
            assert!((g.distances()[i] - g.distances()[n - 1 - i]).abs() < 1e-15);
        }
    }

    #[test]
    fn bad_grading() {
        assert_eq!(build_grid(0.0, 1.0, 4, 0.5), Err(Error::BadGrading(0.5)));
    }

    #[test]
    fn tiny_cells_near_right_end_are_resolved() {
        let g = build_grid(0.0, 1.0, 1024, 3.0).unwrap();
        let m = g.all_nodes().len() - 1;
        // last cell is far below eps relative to 1, yet has the mirrored width
        assert!(g.widths()[m - 1] < 1e-8);
        assert!((g.widths()[m - 1] - g.widths()[0]).abs() < 1e-22);
        assert!((g.gap(m - 1, m - 2) - g.gap(1, 2)).abs() < 1e-20);
    }

    #[test]
    fn distances() {
        let g = build_grid(0.0, 1.0, 3, 1.0).unwrap();
        assert_eq!(g.distances(), &[0.25, 0.5, 0.25]);
        let (_, de) = distance_fields(&g, 0.1f64.powf(0.5), 0.5, 1.0).unwrap();
        assert!((de.collar - 0.1).abs() < 1e-15);
        assert!((de.eval(-0.05) + 0.05).abs() < 1e-15);
        assert_eq!(de.eval(-5.0), -de.collar);
        assert_eq!(de.eval(0.25), 0.25);
    }

    proptest! {
        #[test]
        fn extended_distance_is_lipschitz(x in -3.0f64..4.0, y in -3.0f64..4.0, lam in 0.0f64..0.5) {
            let g = build_grid(0.0, 1.0, 8, 1.0).unwrap();
            let (_, de) = distance_fields(&g, lam, 0.5, 1.0).unwrap();
            prop_assert!((de.eval(x) - de.eval(y)).abs() <= (x - y).abs() + 1e-12);
            if x > 0.0 && x < 1.0 {
                prop_assert_eq!(de.eval(x), x.min(1.0 - x));
            }
        }

        #[test]
        fn graded_widths_sum(n in 2usize..300, q in 1.0f64..4.0) {
            let g = build_grid(-1.0, 2.0, n, q).unwrap();
            let w: f64 = g.widths().iter().sum();
            prop_assert!((w - 3.0).abs() < 1e-12);
            prop_assert!(g.nodes().windows(2).all(|p| p[1] > p[0]));
            prop_assert!(g.nodes().iter().all(|&x| x > -1.0 && x < 2.0));
        }
    }
}
