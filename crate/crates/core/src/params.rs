//! Problem parameters and the exponent/threshold bookkeeping derived from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The open interval `(a, b)` on which the problem is posed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::OutOfRange {
                name: "b",
                value: b,
                expected: "b > a",
            });
        }
        Ok(Self { a, b })
    }

    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.a && x < self.b
    }

    /// Distance to the boundary `{a, b}`; positive inside, measured outward outside.
    pub fn boundary_distance(&self, x: f64) -> f64 {
        if x <= self.a {
            self.a - x
        } else if x >= self.b {
            x - self.b
        } else {
            (x - self.a).min(self.b - x)
        }
    }
}

/// `(s, p, gamma, delta)` together with the domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub s: f64,
    pub p: f64,
    pub gamma: f64,
    pub delta: f64,
    pub domain: Interval,
}

/// Validates raw reals into [`ProblemParams`].
///
/// `delta >= s p` is accepted here; solvers reject it separately through
/// [`ProblemParams::require_existence`].
pub fn make_params(s: f64, p: f64, gamma: f64, delta: f64, a: f64, b: f64) -> Result<ProblemParams> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::OutOfRange {
            name: "s",
            value: s,
            expected: "0 < s < 1",
        });
    }
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::OutOfRange {
            name: "p",
            value: p,
            expected: "1 < p < inf",
        });
    }
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::OutOfRange {
            name: "gamma",
            value: gamma,
            expected: "gamma >= 0",
        });
    }
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::OutOfRange {
            name: "delta",
            value: delta,
            expected: "delta >= 0",
        });
    }
    let domain = Interval::new(a, b)?;
    Ok(ProblemParams {
        s,
        p,
        gamma,
        delta,
        domain,
    })
}

impl ProblemParams {
    pub fn sp(&self) -> f64 {
        self.s * self.p
    }

    /// Same exponents on another domain.
    pub fn with_domain(&self, domain: Interval) -> Self {
        Self { domain, ..*self }
    }

    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        make_params(self.s, self.p, self.gamma, delta, self.domain.a, self.domain.b)
    }

    /// Solvers need `delta < s p`.
    pub fn require_existence(&self) -> Result<()> {
        if self.delta < self.sp() {
            Ok(())
        } else {
            Err(Error::RegimeError {
                delta: self.delta,
                sp: self.sp(),
            })
        }
    }

    /// `(sp - delta) / (gamma + p - 1)`.
    pub fn alpha_star(&self) -> f64 {
        (self.sp() - self.delta) / (self.gamma + self.p - 1.0)
    }

    /// `(sp - delta) / (p - 1)`.
    pub fn alpha_star0(&self) -> f64 {
        (self.sp() - self.delta) / (self.p - 1.0)
    }

    /// Boundary exponent the minimal solution is expected to follow.
    pub fn reference_exponent(&self) -> f64 {
        match self.boundary_case() {
            BoundaryCase::CaseS => self.s,
            BoundaryCase::CaseAlphaStar => self.alpha_star(),
        }
    }

    pub fn boundary_case(&self) -> BoundaryCase {
        if self.delta - self.s * (1.0 - self.gamma) <= 0.0 {
            BoundaryCase::CaseS
        } else {
            BoundaryCase::CaseAlphaStar
        }
    }

    /// Exponent of the `eps`-regularisation scale in `K_{eps,delta}`.
    pub fn eps_scale_exponent(&self) -> f64 {
        (self.gamma + self.p - 1.0) / (self.sp() - self.delta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryCase {
    /// `delta - s(1 - gamma) <= 0`: solutions behave like `d^s`.
    CaseS,
    /// `delta - s(1 - gamma) > 0`: solutions behave like `d^{alpha*}`.
    CaseAlphaStar,
}

/// `+inf` sentinel for the Sobolev threshold when `delta = s p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold(pub f64);

impl Serialize for Threshold {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            ser.serialize_f64(self.0)
        } else if self.0 > 0.0 {
            ser.serialize_str("+inf")
        } else {
            ser.serialize_str("-inf")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport {
    pub alpha_star: f64,
    pub alpha_star0: f64,
    pub lambda_cap: Threshold,
    pub uniq_threshold: f64,
    pub case_flag: BoundaryCase,
    pub existence_flag: bool,
    pub uniqueness_flag: bool,
    pub sobolev_flag: bool,
    pub notes: Vec<String>,
}

/// Computes every exponent and flag of the regime from `(s, p, gamma, delta)`.
pub fn classify_regime(params: &ProblemParams) -> RegimeReport {
    let ProblemParams { s, p, gamma, delta, .. } = *params;
    let sp = s * p;
    let mut notes = Vec::new();

    let denom = p * (sp - delta);
    let lambda_cap = if denom == 0.0 {
        notes.push("delta = sp: Sobolev threshold reported as +inf".to_string());
        f64::INFINITY
    } else {
        (sp - 1.0) * (p - 1.0 + gamma) / denom
    };

    let uniq_threshold = 1.0 + s - 1.0 / p;
    if delta == 0.0 {
        notes.push(
            "delta = 0 counted inside the uniqueness range 0 <= delta < 1 + s - 1/p; \
             the strict form 0 < delta excludes it"
                .to_string(),
        );
    }
    if delta >= sp {
        notes.push("delta >= sp: no weak solution exists; classification only".to_string());
    }

    RegimeReport {
        alpha_star: params.alpha_star(),
        alpha_star0: params.alpha_star0(),
        lambda_cap: Threshold(lambda_cap),
        uniq_threshold,
        case_flag: params.boundary_case(),
        existence_flag: delta < sp,
        uniqueness_flag: delta < uniq_threshold,
        sobolev_flag: lambda_cap < 1.0,
        notes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn worked_values() {
        let r = classify_regime(&make_params(0.5, 2.0, 1.0, 0.5, 0.0, 1.0).unwrap());
        assert_eq!(r.alpha_star, 0.25);
        assert_eq!(r.alpha_star0, 0.5);
        assert_eq!(r.lambda_cap.0, 0.0);
        assert_eq!(r.uniq_threshold, 1.0);
        assert_eq!(r.case_flag, BoundaryCase::CaseAlphaStar);
        assert!(r.uniqueness_flag);

        let r = classify_regime(&make_params(0.75, 2.0, 2.0, 0.5, 0.0, 1.0).unwrap());
        assert!((r.alpha_star - 1.0 / 3.0).abs() < 1e-15);
        assert!((r.lambda_cap.0 - 0.75).abs() < 1e-15);
        assert!(r.sobolev_flag);

        let r = classify_regime(&make_params(0.75, 2.0, 2.0, 1.2, 0.0, 1.0).unwrap());
        assert!((r.lambda_cap.0 - 2.5).abs() < 1e-12);
        assert!(!r.sobolev_flag);
    }

    #[test]
    fn range_errors() {
        assert!(make_params(0.5, 2.0, 1.0, 0.5, 0.0, 1.0).is_ok());
        assert!(matches!(
            make_params(1.2, 2.0, 1.0, 0.5, 0.0, 1.0),
            Err(Error::OutOfRange { name: "s", .. })
        ));
        assert!(matches!(
            make_params(0.5, 1.0, 1.0, 0.5, 0.0, 1.0),
            Err(Error::OutOfRange { name: "p", .. })
        ));
        assert!(matches!(
            make_params(0.5, 2.0, -1.0, 0.5, 0.0, 1.0),
            Err(Error::OutOfRange { name: "gamma", .. })
        ));
        assert!(matches!(
            make_params(0.5, 2.0, 1.0, -0.5, 0.0, 1.0),
            Err(Error::OutOfRange { name: "delta", .. })
        ));
        assert!(matches!(
            make_params(0.5, 2.0, 1.0, 0.5, 1.0, 1.0),
            Err(Error::OutOfRange { name: "b", .. })
        ));
    }

    #[test]
    fn nonexistence_regime_is_classified_not_rejected() {
        let params = make_params(0.5, 2.0, 1.0, 1.5, 0.0, 1.0).unwrap();
        let r = classify_regime(&params);
        assert!(!r.existence_flag);
        assert!(r.alpha_star <= 0.0);
        assert!(params.require_existence().is_err());
    }

    #[test]
    fn lambda_sentinel_at_delta_equal_sp() {
        let r = classify_regime(&make_params(0.5, 2.0, 1.0, 1.0, 0.0, 1.0).unwrap());
        assert!(r.lambda_cap.0.is_infinite());
        assert!(!r.sobolev_flag);
    }

    proptest! {
        #[test]
        fn scale_free_in_domain(s in 0.05f64..0.95, p in 1.1f64..4.0, g in 0.0f64..3.0,
                                df in 0.0f64..1.5, a in -5.0f64..5.0, w in 0.1f64..10.0) {
            let delta = df * s * p;
            let r1 = classify_regime(&make_params(s, p, g, delta, 0.0, 1.0).unwrap());
            let r2 = classify_regime(&make_params(s, p, g, delta, a, a + w).unwrap());
            prop_assert_eq!(r1, r2);
        }

        #[test]
        fn alpha_star_ordering(s in 0.05f64..0.95, p in 1.1f64..4.0, g in 0.0f64..3.0, df in 0.0f64..0.99) {
            let params = make_params(s, p, g, df * s * p, 0.0, 1.0).unwrap();
            let r = classify_regime(&params);
            prop_assert!(r.alpha_star <= r.alpha_star0);
            if g == 0.0 {
                prop_assert_eq!(r.alpha_star, r.alpha_star0);
            } else {
                prop_assert!(r.alpha_star < r.alpha_star0);
            }
        }

        #[test]
        fn alpha_star_monotone(s in 0.05f64..0.9, p in 1.1f64..4.0, g in 0.0f64..3.0, d in 0.0f64..0.05) {
            let base = make_params(s, p, g, d, 0.0, 1.0).unwrap();
            let more_gamma = make_params(s, p, g + 0.1, d, 0.0, 1.0).unwrap();
            let more_delta = make_params(s, p, g, d + 0.01, 0.0, 1.0).unwrap();
            let more_s = make_params(s + 0.05, p, g, d, 0.0, 1.0).unwrap();
            prop_assert!(more_gamma.alpha_star() < base.alpha_star());
            prop_assert!(more_delta.alpha_star() < base.alpha_star());
            prop_assert!(more_s.alpha_star() > base.alpha_star());
        }
    }
}
