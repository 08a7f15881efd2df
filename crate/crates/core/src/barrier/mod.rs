//! Power barriers, singular weights and numerical verification of the
//! barrier estimates on an interval.

mod verify;
mod weight;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{collar_width, Exterior, Grid, GridFunction};
use crate::params::Interval;

pub use verify::{
    barrier_constants, verify_boundary_barrier, verify_power_estimate, BarrierConstants, CheckResult,
    VerificationRecord,
};
pub use weight::{singular_weight, WeightSpec, WeightValues};

/// `(alpha, lambda, rho)` for the barriers `U_lambda`, the supersolution
/// `(d_e + L)_+^alpha` and the subsolution `(d_e + L)_+^alpha - lambda`,
/// with `L = lambda^(1/alpha)` and `rho` the exterior collar width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierSpec {
    pub alpha: f64,
    pub lambda: f64,
    pub rho: f64,
    pub s: f64,
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BarrierKind {
    /// `((x - a) + L)_+^alpha`, the half-line barrier with origin at `a`.
    U,
    Sub,
    Super,
}

impl BarrierSpec {
    pub fn new(alpha: f64, lambda: f64, rho: f64, s: f64, p: f64) -> Result<Self> {
        let spec = Self {
            alpha,
            lambda,
            rho,
            s,
            p,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s > 0.0 && self.s < 1.0 && self.p > 1.0) {
            return Err(Error::SpecInvalid("need 0 < s < 1 and p > 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < self.s) {
            return Err(Error::SpecInvalid("alpha must lie in (0, s)"));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::SpecInvalid("lambda must be finite and >= 0"));
        }
        if !(self.rho > 0.0) {
            return Err(Error::SpecInvalid("rho must be positive"));
        }
        Ok(())
    }

    /// `sp - alpha (p - 1)`, positive because `alpha < s`.
    pub fn beta(&self) -> f64 {
        self.s * self.p - self.alpha * (self.p - 1.0)
    }

    /// `L = lambda^(1/alpha)`.
    pub fn collar(&self) -> f64 {
        collar_width(self.lambda, self.alpha)
    }

    /// Pointwise value of a barrier on the whole line.
    pub fn value(&self, kind: BarrierKind, domain: Interval, x: f64) -> f64 {
        let l = self.collar();
        match kind {
            BarrierKind::U => (x - domain.a + l).max(0.0).powf(self.alpha),
            BarrierKind::Super | BarrierKind::Sub => {
                let offset = if kind == BarrierKind::Sub { self.lambda } else { 0.0 };
                if domain.contains(x) {
                    (domain.boundary_distance(x) + l).powf(self.alpha) - offset
                } else {
                    let tau = domain.boundary_distance(x);
                    if tau < self.rho {
                        (l - tau).max(0.0).powf(self.alpha) - offset
                    } else {
                        -offset
                    }
                }
            }
        }
    }
}

/// Nodal values of a barrier with the matching exterior descriptor.
pub fn barrier_profile(spec: &BarrierSpec, grid: Arc<Grid>, kind: BarrierKind) -> Result<GridFunction> {
    spec.validate()?;
    let dom = grid.domain();
    let l = spec.collar();
    let values: Vec<f64> = match kind {
        BarrierKind::U => grid.nodes().iter().map(|&x| (x - dom.a + l).powf(spec.alpha)).collect(),
        BarrierKind::Super | BarrierKind::Sub => {
            let offset = if kind == BarrierKind::Sub { spec.lambda } else { 0.0 };
            grid.distances()
                .iter()
                .map(|&d| (d + l).powf(spec.alpha) - offset)
                .collect()
        }
    };
    let exterior = match kind {
        BarrierKind::U => Exterior::HalfLine {
            alpha: spec.alpha,
            lambda: spec.lambda,
        },
        BarrierKind::Super => Exterior::PowerTail {
            alpha: spec.alpha,
            lambda: spec.lambda,
            offset: 0.0,
            rho: spec.rho,
        },
        BarrierKind::Sub => Exterior::PowerTail {
            alpha: spec.alpha,
            lambda: spec.lambda,
            offset: spec.lambda,
            rho: spec.rho,
        },
    };
    GridFunction::new(grid, values, exterior)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    #[test]
    fn pointwise_identities() {
        let spec = BarrierSpec::new(0.25, 0.1, 0.5, 0.5, 2.0).unwrap();
        let dom = Interval::new(0.0, 1.0).unwrap();
        assert!((spec.value(BarrierKind::U, dom, 0.0) - 0.1).abs() < 1e-15);
        assert_eq!(spec.value(BarrierKind::Sub, dom, -5.0), -0.1);
        assert!((spec.value(BarrierKind::Super, dom, 1.0) - 0.1).abs() < 1e-15);
        assert_eq!(spec.value(BarrierKind::Super, dom, 7.0), 0.0);
        for i in 0..200 {
            let x = -1.0 + 0.015 * i as f64;
            let sup = spec.value(BarrierKind::Super, dom, x);
            let sub = spec.value(BarrierKind::Sub, dom, x);
            assert!((sup - sub - 0.1).abs() < 1e-15);
        }
    }

    #[test]
    fn profiles_match_pointwise_values() {
        let g = Arc::new(build_grid(0.0, 1.0, 32, 2.0).unwrap());
        let spec = BarrierSpec::new(0.3, 0.05, 0.5, 0.5, 2.0).unwrap();
        for kind in [BarrierKind::U, BarrierKind::Sub, BarrierKind::Super] {
            let f = barrier_profile(&spec, g.clone(), kind).unwrap();
            for (v, &x) in f.values.iter().zip(g.nodes()) {
                assert!((v - spec.value(kind, g.domain(), x)).abs() < 1e-14);
            }
            let fv = f.full_values();
            assert!((fv[0] - spec.value(kind, g.domain(), 0.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn invalid_specs() {
        assert!(matches!(
            BarrierSpec::new(0.6, 0.1, 0.5, 0.5, 2.0),
            Err(Error::SpecInvalid(_))
        ));
        assert!(matches!(
            BarrierSpec::new(0.2, -0.1, 0.5, 0.5, 2.0),
            Err(Error::SpecInvalid(_))
        ));
        assert!(matches!(
            BarrierSpec::new(0.2, 0.1, 0.0, 0.5, 2.0),
            Err(Error::SpecInvalid(_))
        ));
    }
}
