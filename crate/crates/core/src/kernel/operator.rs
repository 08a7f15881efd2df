use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{smoothed_curvature, smoothed_potential, smoothed_updiff};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::quadrature::gl8;

/// `int_{R \ (a,b)} |x - y|^(-1-sp) dy = [(x-a)^(-sp) + (b-x)^(-sp)] / sp`.
pub fn exterior_weight(x_minus_a: f64, b_minus_x: f64, sp: f64) -> f64 {
    (x_minus_a.powf(-sp) + b_minus_x.powf(-sp)) / sp
}

/// Discrete fractional p-Laplacian on a [`Grid`] with zero exterior data.
///
/// Row `k` approximates `int [u(x_k) - u(y)]^(p-1) |x_k - y|^(-1-sp) dy`
/// by integrating the piecewise-linear interpolant of the nodal differences
/// `g_j = [v_k - v_j]^(p-1)` against the kernel, with the two cells touching
/// `x_k` handled by the model `a [t]^(p-1) + b |t|^p` that matches the
/// leading behaviour of `g` at the singularity. Rows are then scaled by the
/// node masses and symmetrized so that [`DiscreteOperator::apply`] is the
/// exact gradient of [`DiscreteOperator::energy`].
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    grid: Arc<Grid>,
    n: usize,
    pub s: f64,
    pub p: f64,
    pub mu: f64,
    /// Symmetric pair weights, row-major `n x n`, zero diagonal.
    w: Vec<f64>,
    /// Exact exterior integral at each node.
    pub b: Vec<f64>,
    /// Effective confinement: `b` plus the hat integrals of the two boundary
    /// nodes, where the interpolant takes the exterior value zero.
    pub conf: Vec<f64>,
    /// Node masses; the boundary half-cells are lumped into the first and
    /// last node so that `sum m = b - a`.
    pub m: Vec<f64>,
    /// Number of symmetrized pair weights that came out negative and were
    /// clamped to zero.
    pub clamped: usize,
}

// int_0^h K(r0 + t) dt and int_0^h (t/h) K(r0 + t) dt for K(r) = r^(-1-sp)
fn cell_moments(r0: f64, h: f64, sp: f64) -> (f64, f64) {
    let ratio = h / r0;
    if ratio < 0.5 {
        let rule = gl8();
        let mut i0 = 0.0;
        let mut i1 = 0.0;
        for (&t, &wt) in rule.nodes.iter().zip(&rule.weights) {
            let tt = 0.5 * h * (t + 1.0);
            let k = (r0 + tt).powf(-1.0 - sp);
            i0 += wt * k;
            i1 += wt * k * tt / h;
        }
        (0.5 * h * i0, 0.5 * h * i1)
    } else {
        let l1p = ratio.ln_1p();
        let i0 = -r0.powf(-sp) * (-sp * l1p).exp_m1() / sp;
        let f1 = if (sp - 1.0).abs() < 1e-12 {
            l1p
        } else {
            r0.powf(1.0 - sp) * ((1.0 - sp) * l1p).exp_m1() / (1.0 - sp)
        };
        (i0, (f1 - r0 * i0) / h)
    }
}

// Weights on g(x_k + u) and g(x_k - l) for the core cells around x_k.
fn core_coefficients(l: f64, u: f64, p: f64, sp: f64) -> (f64, f64) {
    let kappa = p - 1.0 - sp;
    let j1 = if kappa.abs() < 1e-12 {
        (u / l).ln()
    } else {
        // (u^kappa - l^kappa) / kappa, stable for u close to l
        l.powf(kappa) * (kappa * (u / l).ln()).exp_m1() / kappa
    };
    let j2 = (u.powf(kappa + 1.0) + l.powf(kappa + 1.0)) / (kappa + 1.0);
    let plus = (l * j1 + j2) / (u.powf(p - 1.0) * (u + l));
    let minus = (-u * j1 + j2) / (l.powf(p - 1.0) * (u + l));
    (minus, plus)
}

/// Unsymmetrized row: weights on all full-index nodes `0..=n+1`.
fn raw_row(grid: &Grid, k: usize, p: f64, sp: f64) -> Vec<f64> {
    let widths = grid.widths();
    let m = widths.len();
    let mut row = vec![0.0; m + 1];
    let (minus, plus) = core_coefficients(widths[k - 1], widths[k], p, sp);
    row[k - 1] += minus;
    row[k + 1] += plus;
    // cells to the right of the core: [x_j, x_{j+1}], j >= k + 1
    for j in (k + 1)..m {
        let r0 = grid.gap(k, j);
        let (i0, i1) = cell_moments(r0, widths[j], sp);
        row[j] += i0 - i1;
        row[j + 1] += i1;
    }
    // cells to the left: [x_j, x_{j+1}], j + 1 <= k - 1
    for j in 0..k.saturating_sub(1) {
        let r0 = grid.gap(k, j + 1);
        let (i0, i1) = cell_moments(r0, widths[j], sp);
        row[j + 1] += i0 - i1;
        row[j] += i1;
    }
    row
}

/// Builds the operator; `mu > 0` smooths `[t]^(p-1)` for `p < 2`.
pub fn assemble_operator(grid: &Grid, s: f64, p: f64, mu: f64) -> Result<DiscreteOperator> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::OutOfRange {
            name: "s",
            value: s,
            expected: "0 < s < 1",
        });
    }
    if !(p > 1.0) {
        return Err(Error::OutOfRange {
            name: "p",
            value: p,
            expected: "p > 1",
        });
    }
    if !(mu >= 0.0) {
        return Err(Error::OutOfRange {
            name: "mu",
            value: mu,
            expected: "mu >= 0",
        });
    }
    let sp = s * p;
    let n = grid.len();
    let widths = grid.widths();
    let last = widths.len();
    let mass = grid.masses();

    let rows: Vec<(Vec<f64>, f64, f64)> = (1..=n)
        .into_par_iter()
        .map(|k| {
            let row = raw_row(grid, k, p, sp);
            let (da, db) = grid.endpoint_distances(k);
            let b = exterior_weight(da, db, sp);
            let conf = b + row[0] + row[last];
            (row, b, conf)
        })
        .collect();

    let b: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let conf: Vec<f64> = rows.iter().map(|r| r.2).collect();

    let mut w = vec![0.0; n * n];
    let mut clamped = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (mass[i] * rows[i].0[j + 1] + mass[j] * rows[j].0[i + 1]);
            let v = if v < 0.0 {
                clamped += 1;
                0.0
            } else {
                v
            };
            w[i * n + j] = v;
            w[j * n + i] = v;
        }
    }
    Ok(DiscreteOperator {
        grid: Arc::new(grid.clone()),
        n,
        s,
        p,
        mu,
        w,
        b,
        conf,
        m: mass,
        clamped,
    })
}

impl DiscreteOperator {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Symmetric pair weight between interior nodes `i` and `j`.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.n + j]
    }

    pub fn weights_row(&self, i: usize) -> &[f64] {
        &self.w[i * self.n..(i + 1) * self.n]
    }

    /// Mass-scaled confinement weight `m_i conf_i`.
    pub fn confinement(&self, i: usize) -> f64 {
        self.m[i] * self.conf[i]
    }

    fn check(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.n {
            return Err(Error::ShapeMismatch {
                expected: self.n,
                got: v.len(),
            });
        }
        Ok(())
    }

    /// Same operator with another smoothing parameter.
    pub fn with_mu(&self, mu: f64) -> Self {
        Self { mu, ..self.clone() }
    }

    /// Weak-form residual `sum_j w_ij [v_i - v_j]^(p-1) + m_i conf_i [v_i]^(p-1)`,
    /// the gradient of [`Self::energy`].
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check(v)?;
        let (p, mu) = (self.p, self.mu);
        Ok((0..self.n)
            .into_par_iter()
            .map(|i| {
                let vi = v[i];
                let row = self.weights_row(i);
                let mut acc = 0.0;
                for (j, &wij) in row.iter().enumerate() {
                    if wij != 0.0 {
                        acc += wij * smoothed_updiff(vi - v[j], p, mu);
                    }
                }
                acc + self.confinement(i) * smoothed_updiff(vi, p, mu)
            })
            .collect())
    }

    /// Pointwise form `apply(v)_i / m_i`, approximating half the fractional
    /// p-Laplacian at `x_i`.
    pub fn apply_pointwise(&self, v: &[f64]) -> Result<Vec<f64>> {
        let r = self.apply(v)?;
        Ok(r.iter().zip(&self.m).map(|(r, m)| r / m).collect())
    }

    /// `sum_{i<j} w_ij phi(v_i - v_j) + sum_i m_i conf_i phi(v_i)` with
    /// `phi(t) = ((t^2 + mu^2)^(p/2) - mu^p) / p`.
    pub fn energy(&self, v: &[f64]) -> Result<f64> {
        self.check(v)?;
        let (p, mu) = (self.p, self.mu);
        let parts: Vec<f64> = (0..self.n)
            .into_par_iter()
            .map(|i| {
                let vi = v[i];
                let row = self.weights_row(i);
                let mut acc = self.confinement(i) * smoothed_potential(vi, p, mu);
                for j in (i + 1)..self.n {
                    let wij = row[j];
                    if wij != 0.0 {
                        acc += wij * smoothed_potential(vi - v[j], p, mu);
                    }
                }
                acc
            })
            .collect();
        Ok(parts.iter().sum())
    }

    /// Hessian of [`Self::energy`]; for `p > 2` entries vanish where
    /// differences vanish.
    pub fn hessian(&self, v: &[f64]) -> Result<DMatrix<f64>> {
        self.check(v)?;
        let n = self.n;
        let (p, mu) = (self.p, self.mu);
        let cols: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let row = self.weights_row(i);
                let mut col = vec![0.0; n];
                let mut diag = self.confinement(i) * smoothed_curvature(v[i], p, mu);
                for (j, &wij) in row.iter().enumerate() {
                    if wij != 0.0 {
                        let c = wij * smoothed_curvature(v[i] - v[j], p, mu);
                        col[j] = -c;
                        diag += c;
                    }
                }
                col[i] = diag;
                col
            })
            .collect();
        // symmetric, so the column-major fill from rows is the same matrix
        Ok(DMatrix::from_fn(n, n, |r, c| cols[c][r]))
    }

    /// `sum_{i != j} w_ij |v_i - v_j|^p`: the seminorm restricted to pairs
    /// of interior nodes, without any exterior contribution.
    pub fn interior_seminorm_p(&self, v: &[f64]) -> Result<f64> {
        self.check(v)?;
        let p = self.p;
        let parts: Vec<f64> = (0..self.n)
            .into_par_iter()
            .map(|i| {
                let row = self.weights_row(i);
                ((i + 1)..self.n)
                    .map(|j| row[j] * (v[i] - v[j]).abs().powf(p))
                    .sum::<f64>()
            })
            .collect();
        Ok(2.0 * parts.iter().sum::<f64>())
    }

    /// Discrete `[u]^p_{s,p}` of the zero-extended interpolant:
    /// `sum_{i != j} w_ij |v_i - v_j|^p + 2 sum_i m_i conf_i |v_i|^p`.
    pub fn seminorm_p(&self, v: &[f64]) -> Result<f64> {
        let e = self.with_mu(0.0).energy(v)?;
        Ok(2.0 * self.p * e)
    }
}
