//! Experiment configuration. Every field has a default, so `{}` is a valid
//! configuration; unknown keys are rejected.

use std::path::PathBuf;

use fracp_core::analysis::{FitWindow, ScanOptions};
use fracp_core::params::{make_params, ProblemParams};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub params: ParamsBlock,
    pub grid: GridBlock,
    pub solver: SolverBlock,
    pub analysis: AnalysisBlock,
    pub output: OutputBlock,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsBlock {
    pub s: f64,
    pub p: f64,
    pub gamma: f64,
    pub delta: f64,
    pub a: f64,
    pub b: f64,
}

impl Default for ParamsBlock {
    fn default() -> Self {
        Self {
            s: 0.5,
            p: 2.0,
            gamma: 1.0,
            delta: 0.5,
            a: 0.0,
            b: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridBlock {
    pub n: usize,
    /// Grading exponent; chosen from the boundary exponent when absent.
    pub grading: Option<f64>,
}

impl Default for GridBlock {
    fn default() -> Self {
        Self { n: 512, grading: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverBlock {
    pub eps0: f64,
    pub halvings: usize,
    /// Continuation stopping increment.
    pub tol: f64,
    /// Initial smoothing for `p < 2`.
    pub mu0: f64,
}

impl Default for SolverBlock {
    fn default() -> Self {
        Self {
            eps0: 0.5,
            halvings: 40,
            tol: 1e-4,
            mu0: 1e-2,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowBlock {
    pub d_lo: f64,
    pub d_hi: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisBlock {
    pub theta_list: Vec<f64>,
    pub n_list: Vec<usize>,
    /// Exponent fit window; `[8 h_min, 0.1 |Omega|]` when absent.
    pub fit_window: Option<WindowBlock>,
    pub delta_list: Vec<f64>,
    /// Half-width of the boundary strip for barrier checks.
    pub eta: f64,
    /// Exterior collar width of the barriers.
    pub rho: f64,
    /// Shift `lambda` of the half-line barrier.
    pub barrier_lambda: f64,
    /// Oracle sweep: `alpha = fraction * s` over all combinations.
    pub alpha_fractions: Vec<f64>,
    pub s_list: Vec<f64>,
    pub p_list: Vec<f64>,
    pub property_samples: usize,
}

impl Default for AnalysisBlock {
    fn default() -> Self {
        Self {
            theta_list: vec![1.0, 2.0, 3.0],
            n_list: vec![128, 256, 512],
            fit_window: None,
            delta_list: vec![0.6, 0.8, 0.9, 0.95],
            eta: 0.1,
            rho: 0.5,
            barrier_lambda: 0.1,
            alpha_fractions: vec![0.1, 0.3, 0.5, 0.7, 0.9],
            s_list: vec![0.3, 0.5, 0.7],
            p_list: vec![1.5, 2.0, 3.0],
            property_samples: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Plotdata,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    /// Used when `--out` is not given.
    pub directory: Option<PathBuf>,
    pub formats: Vec<Format>,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self {
            directory: None,
            formats: vec![Format::Csv, Format::Json, Format::Plotdata],
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("ConfigParse: {e}"))
    }

    pub fn problem(&self) -> fracp_core::Result<ProblemParams> {
        let b = &self.params;
        make_params(b.s, b.p, b.gamma, b.delta, b.a, b.b)
    }

    pub fn scan_options(&self) -> ScanOptions {
        ScanOptions {
            eps0: self.solver.eps0,
            halvings: self.solver.halvings,
            tol: self.solver.tol,
            grading: self.grid.grading,
            mu0: self.solver.mu0,
        }
    }

    pub fn fit_window(&self) -> Option<FitWindow> {
        self.analysis.fit_window.map(|w| FitWindow {
            d_lo: w.d_lo,
            d_hi: w.d_hi,
        })
    }

    pub fn wants(&self, f: Format) -> bool {
        self.output.formats.contains(&f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_uses_defaults() {
        let c = ExperimentConfig::parse("{}").unwrap();
        assert_eq!(c.params.s, 0.5);
        assert_eq!(c.grid.n, 512);
        assert!(c.wants(Format::Csv));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ExperimentConfig::parse(r#"{"params": {"s": 0.5, "q": 1}}"#).is_err());
        assert!(ExperimentConfig::parse(r#"{"extra": 1}"#).is_err());
        assert!(ExperimentConfig::parse("{not json").is_err());
    }
}
