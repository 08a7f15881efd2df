use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// The singular weight `K` and its regularizations, all built on the
/// canonical `K_delta = d^(-delta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WeightSpec {
    /// `d^(-delta)`.
    Exact { delta: f64 },
    /// `(d + eps^((gamma + p - 1)/(sp - delta)))^(-delta)`.
    EpsRegularized {
        delta: f64,
        eps: f64,
        gamma: f64,
        p: f64,
        s: f64,
    },
    /// `(d + lambda^((p - 1)/(sp - delta)))^(-delta)`.
    LambdaRegularized { delta: f64, lambda: f64, s: f64, p: f64 },
}

impl WeightSpec {
    pub fn delta(&self) -> f64 {
        match *self {
            WeightSpec::Exact { delta }
            | WeightSpec::EpsRegularized { delta, .. }
            | WeightSpec::LambdaRegularized { delta, .. } => delta,
        }
    }

    /// Shift added to `d` before raising to `-delta`.
    pub fn scale(&self) -> Result<f64> {
        match *self {
            WeightSpec::Exact { .. } => Ok(0.0),
            WeightSpec::EpsRegularized {
                delta,
                eps,
                gamma,
                p,
                s,
            } => {
                let sp = s * p;
                if delta >= sp {
                    return Err(Error::RegimeError { delta, sp });
                }
                if !(eps > 0.0) {
                    return Err(Error::OutOfRange {
                        name: "eps",
                        value: eps,
                        expected: "eps > 0",
                    });
                }
                Ok(eps.powf((gamma + p - 1.0) / (sp - delta)))
            }
            WeightSpec::LambdaRegularized { delta, lambda, s, p } => {
                let sp = s * p;
                if delta >= sp {
                    return Err(Error::RegimeError { delta, sp });
                }
                if !(lambda >= 0.0) {
                    return Err(Error::OutOfRange {
                        name: "lambda",
                        value: lambda,
                        expected: "lambda >= 0",
                    });
                }
                Ok(if lambda == 0.0 {
                    0.0
                } else {
                    lambda.powf((p - 1.0) / (sp - delta))
                })
            }
        }
    }

    /// Weight at boundary distance `d`. For `delta = 0` every variant is `1`.
    pub fn eval(&self, d: f64) -> Result<f64> {
        let delta = self.delta();
        let scale = self.scale()?;
        if delta == 0.0 {
            return Ok(1.0);
        }
        Ok((d + scale).powf(-delta))
    }
}

/// Nodal weights with the measured envelope constants
/// `min / max of K (d + scale)^delta` over the nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightValues {
    pub values: Vec<f64>,
    pub scale: f64,
    pub envelope_lower: f64,
    pub envelope_upper: f64,
}

impl WeightValues {
    /// Envelope constants equal one up to rounding, as for the canonical weight.
    pub fn envelope_is_canonical(&self) -> bool {
        (self.envelope_lower - 1.0).abs() < 1e-12 && (self.envelope_upper - 1.0).abs() < 1e-12
    }
}

pub fn singular_weight(spec: &WeightSpec, grid: &Grid) -> Result<WeightValues> {
    let scale = spec.scale()?;
    let delta = spec.delta();
    let values = grid
        .distances()
        .iter()
        .map(|&d| spec.eval(d))
        .collect::<Result<Vec<_>>>()?;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for (&k, &d) in values.iter().zip(grid.distances()) {
        let r = k * (d + scale).powf(delta);
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok(WeightValues {
        values,
        scale,
        envelope_lower: lo,
        envelope_upper: hi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    #[test]
    fn examples() {
        assert!((WeightSpec::Exact { delta: 0.5 }.eval(0.25).unwrap() - 2.0).abs() < 1e-15);
        // exponent (gamma + p - 1)/(sp - delta) = 2 / 0.5 = 4, eps^4 = 0.25
        let eps = 0.25f64.powf(0.25);
        let w = WeightSpec::EpsRegularized {
            delta: 0.5,
            eps,
            gamma: 1.0,
            p: 2.0,
            s: 0.5,
        };
        assert!((w.eval(0.25).unwrap() - 2f64.sqrt()).abs() < 1e-14);
        let g = build_grid(0.0, 1.0, 64, 2.0).unwrap();
        assert!(singular_weight(&w, &g).unwrap().envelope_is_canonical());
    }

    #[test]
    fn regime_error() {
        let w = WeightSpec::EpsRegularized {
            delta: 1.0,
            eps: 0.1,
            gamma: 1.0,
            p: 2.0,
            s: 0.5,
        };
        assert!(matches!(w.eval(0.3), Err(Error::RegimeError { .. })));
    }

    #[test]
    fn monotone_as_eps_decreases() {
        let mk = |eps| WeightSpec::EpsRegularized {
            delta: 0.7,
            eps,
            gamma: 0.5,
            p: 2.5,
            s: 0.6,
        };
        for i in 0..50 {
            let d = 1e-4 + 0.01 * i as f64;
            let mut prev = 0.0;
            for k in 0..12 {
                let v = mk(0.5f64.powi(k)).eval(d).unwrap();
                assert!(v >= prev);
                prev = v;
            }
            let exact = WeightSpec::Exact { delta: 0.7 }.eval(d).unwrap();
            assert!(prev <= exact && (prev - exact).abs() < 1e-3 * exact);
        }
    }
}
