use super::signed_pow;
use crate::error::{Error, Result};
use crate::grid::{collar_width, Exterior, GridFunction, Side};
use crate::quadrature::{gl8, integrate, integrate_to_infinity, AdaptiveOpts};

/// Tuning of [`eval_fplap_pv`].
#[derive(Debug, Clone, Copy)]
pub struct PvOptions {
    /// Absolute tolerance for the adaptive exterior integrals.
    pub exterior_tol: f64,
    /// Inner exclusion radius as a fraction of the local cell width.
    pub core_fraction: f64,
    /// Extrapolate the excluded core away (two radii).
    pub richardson: bool,
}

impl Default for PvOptions {
    fn default() -> Self {
        Self {
            exterior_tol: 1e-11,
            core_fraction: 0.25,
            richardson: true,
        }
    }
}

/// Piecewise cubic interpolant of the full nodal values (linear in the two
/// boundary cells), evaluated through local offsets so that tiny cells near
/// either endpoint keep full relative precision.
struct Interpolant<'a> {
    f: &'a GridFunction,
    vals: Vec<f64>,
}

impl<'a> Interpolant<'a> {
    fn new(f: &'a GridFunction) -> Self {
        Self {
            f,
            vals: f.full_values(),
        }
    }

    fn cells(&self) -> usize {
        self.vals.len() - 1
    }

    /// Value at `x_k + tau` with `0 <= tau <= width_k`.
    fn in_cell(&self, k: usize, tau: f64) -> f64 {
        let g = &self.f.grid;
        let m = self.cells();
        let h = g.widths()[k];
        if k == 0 || k + 1 == m || m < 3 {
            let t = tau / h;
            return self.vals[k] * (1.0 - t) + self.vals[k + 1] * t;
        }
        let idx = [k - 1, k, k + 1, k + 2];
        let off = [-g.widths()[k - 1], 0.0, h, h + g.widths()[k + 1]];
        let mut acc = 0.0;
        for a in 0..4 {
            let mut l = 1.0;
            for b in 0..4 {
                if a != b {
                    l *= (tau - off[b]) / (off[a] - off[b]);
                }
            }
            acc += l * self.vals[idx[a]];
        }
        acc
    }

    fn at(&self, y: f64) -> f64 {
        let g = &self.f.grid;
        let k = g.locate(y);
        let tau = (y - g.all_nodes()[k]).clamp(0.0, g.widths()[k]);
        self.in_cell(k, tau)
    }
}

/// Evaluates the fractional p-Laplacian `2 PV int [u(x) - u(y)]^(p-1) |x - y|^(-1-sp) dy`
/// of the interpolated grid function at an interior point.
///
/// The integral is split into a symmetric-pair part over `r < |y - x| < cut`,
/// a cellwise far field over the rest of the domain, and the exterior
/// contribution of the extension descriptor. The excluded core `|y - x| < r`
/// is removed by Richardson extrapolation over `r` and `r / 2`.
pub fn eval_fplap_pv(u: &GridFunction, x: f64, cut: f64, s: f64, p: f64) -> Result<f64> {
    eval_fplap_pv_with(u, x, cut, s, p, &PvOptions::default())
}

pub fn eval_fplap_pv_with(u: &GridFunction, x: f64, cut: f64, s: f64, p: f64, opts: &PvOptions) -> Result<f64> {
    let grid = &u.grid;
    let dom = grid.domain();
    if !dom.contains(x) {
        return Err(Error::PointTooCloseToBoundary { x, cut });
    }
    if dom.boundary_distance(x) < 2.0 * cut {
        return Err(Error::PointTooCloseToBoundary { x, cut });
    }
    let k = grid.locate(x);
    let hloc = grid.widths()[k];
    if !(cut >= hloc) {
        return Err(Error::OutOfRange {
            name: "cut",
            value: cut,
            expected: "cut >= local cell width",
        });
    }
    let sp = s * p;
    let interp = Interpolant::new(u);
    let ux = interp.at(x);

    let far = far_field(&interp, x, cut, ux, sp, p);
    let ext = exterior(u, x, ux, s, p, opts.exterior_tol)?;

    let r1 = opts.core_fraction * hloc.min(grid.local_width(k + 1));
    let near1 = near_pairs(&interp, x, r1, cut, ux, sp, p);
    let total = if opts.richardson {
        let near2 = near_pairs(&interp, x, 0.5 * r1, cut, ux, sp, p);
        let q = p - sp;
        near2 + (near2 - near1) / (2f64.powf(q) - 1.0)
    } else {
        near1
    };
    Ok(2.0 * (total + far + ext))
}

fn near_pairs(f: &Interpolant, x: f64, r: f64, cut: f64, ux: f64, sp: f64, p: f64) -> f64 {
    let nodes = f.f.grid.all_nodes();
    // breakpoints in t where x + t or x - t hits a node
    let mut bps: Vec<f64> = nodes
        .iter()
        .map(|&y| (y - x).abs())
        .filter(|&t| t > r && t < cut)
        .collect();
    bps.push(r);
    bps.push(cut);
    bps.sort_by(f64::total_cmp);
    bps.dedup();
    let rule = gl8();
    let mut acc = 0.0;
    for pair in bps.windows(2) {
        let (mut lo, hi) = (pair[0], pair[1]);
        // geometric sub-pieces so the kernel varies by at most a factor 2^(1+sp)
        while lo < hi {
            let top = (2.0 * lo).min(hi);
            let c = 0.5 * (lo + top);
            let h = 0.5 * (top - lo);
            let mut piece = 0.0;
            for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
                let tt = c + h * t;
                let g = signed_pow(ux - f.at(x + tt), p - 1.0) + signed_pow(ux - f.at(x - tt), p - 1.0);
                piece += w * g * tt.powf(-1.0 - sp);
            }
            acc += h * piece;
            lo = top;
        }
    }
    acc
}

fn far_field(f: &Interpolant, x: f64, cut: f64, ux: f64, sp: f64, p: f64) -> f64 {
    let grid = &f.f.grid;
    let nodes = grid.all_nodes();
    let widths = grid.widths();
    let rule = gl8();
    let mut acc = 0.0;
    for k in 0..f.cells() {
        let (xl, h) = (nodes[k], widths[k]);
        let xr = xl + h;
        // portion of the cell outside (x - cut, x + cut), in local offsets
        let mut pieces: [(f64, f64); 2] = [(0.0, 0.0); 2];
        let mut count = 0;
        if xl < x - cut {
            pieces[count] = (0.0, h.min(x - cut - xl));
            count += 1;
        }
        if xr > x + cut {
            pieces[count] = ((x + cut - xl).max(0.0), h);
            count += 1;
        }
        for &(lo, hi) in &pieces[..count] {
            if hi <= lo {
                continue;
            }
            // distance from x to the nearer end of the piece
            let near = if xl + lo >= x { xl + lo - x } else { x - (xl + hi) };
            let mut a = lo;
            while a < hi {
                let b = if hi - a > 0.5 * near.max(f64::MIN_POSITIVE) {
                    (a + 0.5 * near).min(hi)
                } else {
                    hi
                };
                let c = 0.5 * (a + b);
                let hh = 0.5 * (b - a);
                let mut piece = 0.0;
                for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
                    let tau = c + hh * t;
                    let dist = (xl + tau - x).abs();
                    piece += w * signed_pow(ux - f.in_cell(k, tau), p - 1.0) * dist.powf(-1.0 - sp);
                }
                acc += hh * piece;
                a = b;
            }
        }
    }
    acc
}

fn exterior(u: &GridFunction, x: f64, ux: f64, s: f64, p: f64, tol: f64) -> Result<f64> {
    let dom = u.grid.domain();
    let width = dom.width();
    let sp = s * p;
    let mut acc = 0.0;
    let opts = AdaptiveOpts::abs(tol);
    for (side, dist) in [(Side::Left, x - dom.a), (Side::Right, dom.b - x)] {
        let kern = |tau: f64| (dist + tau).powf(-1.0 - sp);
        let tail = |from: f64| (dist + from).powf(-sp) / sp;
        acc += match u.exterior {
            Exterior::Zero => signed_pow(ux, p - 1.0) * tail(0.0),
            Exterior::Constant(c) => signed_pow(ux - c, p - 1.0) * tail(0.0),
            Exterior::PowerTail {
                alpha,
                lambda,
                offset,
                rho,
            } => {
                let collar = collar_width(lambda, alpha).min(rho);
                let inner = integrate(
                    |tau| signed_pow(ux - u.exterior.value(side, tau, width), p - 1.0) * kern(tau),
                    0.0,
                    collar,
                    opts,
                )?;
                inner.value + signed_pow(ux + offset, p - 1.0) * tail(collar)
            }
            Exterior::HalfLine { alpha, lambda } => match side {
                Side::Left => {
                    let collar = collar_width(lambda, alpha);
                    let inner = integrate(
                        |tau| signed_pow(ux - u.exterior.value(side, tau, width), p - 1.0) * kern(tau),
                        0.0,
                        collar,
                        opts,
                    )?;
                    inner.value + signed_pow(ux, p - 1.0) * tail(collar)
                }
                Side::Right => {
                    if alpha * (p - 1.0) >= sp {
                        return Err(Error::ExtensionUnsupported(
                            "half-line tail grows too fast for the kernel",
                        ));
                    }
                    integrate_to_infinity(
                        |tau| signed_pow(ux - u.exterior.value(side, tau, width), p - 1.0) * kern(tau),
                        0.0,
                        opts,
                    )?
                    .value
                }
            },
        };
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use std::sync::Arc;

    #[test]
    fn constant_function_has_zero_operator() {
        let g = Arc::new(build_grid(0.0, 1.0, 64, 1.0).unwrap());
        let u = GridFunction::new(g, vec![3.0; 64], Exterior::Constant(3.0)).unwrap();
        let v = eval_fplap_pv(&u, 0.5, 0.05, 0.5, 2.0).unwrap();
        assert!(v.abs() < 1e-12, "{v}");
    }

    #[test]
    fn homogeneity() {
        let g = Arc::new(build_grid(0.0, 1.0, 64, 1.0).unwrap());
        let u = GridFunction::from_distance(g, |d| d.powf(0.4));
        let a = eval_fplap_pv(&u, 0.4, 0.05, 0.5, 3.0).unwrap();
        let b = eval_fplap_pv(&u.scaled(2.0), 0.4, 0.05, 0.5, 3.0).unwrap();
        assert!((b - 4.0 * a).abs() < 1e-10 * a.abs());
    }

    #[test]
    fn rejects_points_near_the_boundary() {
        let g = Arc::new(build_grid(0.0, 1.0, 64, 1.0).unwrap());
        let u = GridFunction::from_distance(g, |d| d);
        assert!(matches!(
            eval_fplap_pv(&u, 0.05, 0.05, 0.5, 2.0),
            Err(Error::PointTooCloseToBoundary { .. })
        ));
    }
}
