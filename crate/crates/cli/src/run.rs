//! Experiment orchestration and artifact emission.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use fracp_core::analysis::{
    barrier_bracket, fit_boundary_exponent, inequality_props, nonexistence_scan, sobolev_scan, solve_minimal,
    ExponentFit, Verdict,
};
use fracp_core::barrier::{
    verify_boundary_barrier, verify_power_estimate, BarrierSpec, CheckResult, VerificationRecord, WeightSpec,
};
use fracp_core::grid::{build_grid, default_grading, Grid, GRADING_CAP};
use fracp_core::kernel::phi_constant;
use fracp_core::params::{classify_regime, BoundaryCase, ProblemParams, RegimeReport};
use fracp_core::solver::{residual_check, Continuation};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, Format};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Classify,
    Oracle,
    BarrierCheck,
    Solve,
    ExponentFit,
    SobolevScan,
    NonexistenceScan,
    Compare,
    Properties,
}

impl Experiment {
    pub fn id(self) -> &'static str {
        match self {
            Experiment::Classify => "classify",
            Experiment::Oracle => "oracle",
            Experiment::BarrierCheck => "barrier-check",
            Experiment::Solve => "solve",
            Experiment::ExponentFit => "exponent-fit",
            Experiment::SobolevScan => "sobolev-scan",
            Experiment::NonexistenceScan => "nonexistence-scan",
            Experiment::Compare => "compare",
            Experiment::Properties => "properties",
        }
    }

    pub const ALL: [Experiment; 9] = [
        Experiment::Classify,
        Experiment::Oracle,
        Experiment::BarrierCheck,
        Experiment::Solve,
        Experiment::ExponentFit,
        Experiment::Compare,
        Experiment::SobolevScan,
        Experiment::NonexistenceScan,
        Experiment::Properties,
    ];
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorInfo {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentOutcome {
    pub id: String,
    pub passed: bool,
    pub records: Vec<VerificationRecord>,
    pub data: Value,
    pub error: Option<ErrorInfo>,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: ExperimentConfig,
    pub regime: RegimeReport,
    pub experiments: Vec<ExperimentOutcome>,
    pub passed: bool,
    pub seed: u64,
    pub threads: usize,
    pub total_seconds: f64,
}

/// Run state shared by the experiments of one invocation.
pub struct Context {
    pub config: ExperimentConfig,
    pub params: ProblemParams,
    pub out: PathBuf,
    pub seed: u64,
    solution: Option<(Arc<Grid>, Continuation)>,
}

type Outcome = fracp_core::Result<(Vec<VerificationRecord>, Value)>;

impl Context {
    pub fn new(config: ExperimentConfig, params: ProblemParams, out: PathBuf, seed: u64) -> Self {
        Self {
            config,
            params,
            out,
            seed,
            solution: None,
        }
    }

    fn grading(&self) -> f64 {
        self.config
            .grid
            .grading
            .unwrap_or_else(|| default_grading(&self.params))
    }

    fn grid(&self) -> fracp_core::Result<Grid> {
        let d = self.params.domain;
        build_grid(d.a, d.b, self.config.grid.n, self.grading())
    }

    /// Minimal solution on the configured grid, computed once per run.
    fn solution(&mut self) -> fracp_core::Result<(Arc<Grid>, Continuation)> {
        if self.solution.is_none() {
            let opts = self.config.scan_options();
            let c = solve_minimal(&self.params, self.config.grid.n, &opts)?;
            self.solution = Some((c.u_min.grid.clone(), c));
        }
        Ok(self.solution.clone().expect("solution cached"))
    }

    pub fn run(&mut self, e: Experiment) -> ExperimentOutcome {
        let start = Instant::now();
        let result = match e {
            Experiment::Classify => self.classify(),
            Experiment::Oracle => self.oracle(),
            Experiment::BarrierCheck => self.barrier_check(),
            Experiment::Solve => self.solve(),
            Experiment::ExponentFit => self.exponent_fit(),
            Experiment::SobolevScan => self.sobolev(),
            Experiment::NonexistenceScan => self.nonexistence(),
            Experiment::Compare => self.compare(),
            Experiment::Properties => self.properties(),
        };
        let seconds = start.elapsed().as_secs_f64();
        match result {
            Ok((records, data)) => ExperimentOutcome {
                id: e.id().into(),
                passed: records.iter().all(|r| r.passed),
                records,
                data,
                error: None,
                seconds,
            },
            Err(err) => {
                eprintln!("experiment {} failed: {}: {err}", e.id(), err.kind());
                ExperimentOutcome {
                    id: e.id().into(),
                    passed: false,
                    records: Vec::new(),
                    data: Value::Null,
                    error: Some(ErrorInfo {
                        kind: err.kind().into(),
                        message: err.to_string(),
                    }),
                    seconds,
                }
            }
        }
    }

    fn classify(&mut self) -> Outcome {
        let regime = classify_regime(&self.params);
        let record = VerificationRecord::new("classify", Vec::new(), regime.notes.clone());
        Ok((vec![record], serde_json::to_value(&regime).unwrap_or(Value::Null)))
    }

    fn oracle(&mut self) -> Outcome {
        let a = &self.config.analysis;
        let mut rows = Vec::new();
        let mut failures = 0usize;
        let mut curves = Vec::new();
        for &s in &a.s_list {
            for &p in &a.p_list {
                let mut curve = Vec::new();
                for &frac in &a.alpha_fractions {
                    let o = phi_constant(frac * s, s, p, 1e-8)?;
                    let pass = o.within_bounds();
                    failures += usize::from(!pass);
                    rows.push(vec![
                        num(o.alpha),
                        num(s),
                        num(p),
                        num(o.beta),
                        num(o.phi),
                        num(o.c1),
                        num(o.c2),
                        pass.to_string(),
                    ]);
                    curve.push((o.alpha, o.phi));
                }
                curves.push((format!("s={s} p={p}"), curve));
            }
        }
        self.write_csv(
            "phi_table.csv",
            &["alpha", "s", "p", "beta", "phi", "c1", "c2", "pass"],
            &rows,
        )?;
        self.write_plot("phi_constant.dat", "alpha phi", &curves)?;
        let record = VerificationRecord::new(
            "oracle",
            vec![CheckResult::at_most("bound_failures", failures as f64, 0.0)],
            vec![format!("{} (alpha, s, p) cases", rows.len())],
        );
        Ok((vec![record], json!({ "cases": rows.len(), "failures": failures })))
    }

    fn barrier_alpha(&self) -> (f64, Option<String>) {
        let p = &self.params;
        match p.boundary_case() {
            BoundaryCase::CaseAlphaStar => (p.alpha_star(), None),
            BoundaryCase::CaseS => (
                0.5 * p.s,
                Some("boundary exponent is s; barriers checked with alpha = s / 2".into()),
            ),
        }
    }

    fn barrier_check(&mut self) -> Outcome {
        self.params.require_existence()?;
        let (alpha, note) = self.barrier_alpha();
        let a = &self.config.analysis;
        let samples: Vec<f64> = (0..10).map(|k| 0.05 + 0.045 * k as f64).collect();
        let mut power = verify_power_estimate(alpha, self.params.s, self.params.p, a.barrier_lambda, &samples, 0.01)?;
        power.notes.extend(note.clone());
        let spec = BarrierSpec::new(alpha, a.barrier_lambda, a.rho, self.params.s, self.params.p)?;
        let grid = Arc::new(self.grid()?);
        let boundary = verify_boundary_barrier(&self.params, &spec, grid, a.eta)?;
        Ok((
            vec![power, boundary],
            json!({ "alpha": alpha, "lambda": a.barrier_lambda }),
        ))
    }

    fn solve(&mut self) -> Outcome {
        self.params.require_existence()?;
        let (grid, c) = self.solution()?;
        let last = c.steps.last().expect("continuation has steps");
        let mono = c.monotonicity.iter().copied().fold(f64::INFINITY, f64::min);
        let width = self.params.domain.width();
        let weight = WeightSpec::EpsRegularized {
            delta: self.params.delta,
            eps: last.eps.unwrap_or(self.config.solver.eps0),
            gamma: self.params.gamma,
            p: self.params.p,
            s: self.params.s,
        };
        let residual = residual_check(&c.u_min, &self.params, &weight, 0.1 * width)?;
        let checks = vec![
            CheckResult::at_most(
                "final_increment",
                c.increments.last().copied().unwrap_or(f64::INFINITY),
                self.config.solver.tol,
            ),
            CheckResult::at_least("monotonicity_defect", mono, -1e-6),
            CheckResult::above("min_value", last.min_value, 0.0),
        ];
        let notes = vec![format!(
            "pointwise residual of the strong form at d > 0.1|Omega|: max {:.3e}, mean {:.3e}",
            residual.max_relative, residual.mean_relative
        )];
        let curve: Vec<(f64, f64)> = grid
            .nodes()
            .iter()
            .copied()
            .zip(c.u_min.values.iter().copied())
            .collect();
        self.write_plot("solution.dat", "x u", &[("u".into(), curve)])?;
        let inc: Vec<(f64, f64)> = c
            .increments
            .iter()
            .enumerate()
            .map(|(k, &v)| ((k + 1) as f64, v))
            .collect();
        self.write_plot("increments.dat", "k increment", &[("increment".into(), inc)])?;
        let data = json!({
            "n": grid.len(),
            "grading": grid.grading(),
            "steps": c.steps,
            "increments": c.increments,
            "monotonicity": c.monotonicity,
            "converged": c.converged,
            "residual": {
                "max_relative": residual.max_relative,
                "mean_relative": residual.mean_relative,
                "probes": residual.probes.len(),
            },
        });
        Ok((vec![VerificationRecord::new("solve", checks, notes)], data))
    }

    fn fit_band(&self) -> (f64, f64) {
        let p = &self.params;
        match p.boundary_case() {
            BoundaryCase::CaseS => (p.s - 0.1, p.s + 0.05),
            BoundaryCase::CaseAlphaStar => (p.alpha_star() - 0.05, p.alpha_star() + 0.05),
        }
    }

    fn exponent_fit(&mut self) -> Outcome {
        self.params.require_existence()?;
        let (_, c) = self.solution()?;
        let fit: ExponentFit =
            fit_boundary_exponent(&c.u_min, self.config.fit_window(), self.params.reference_exponent())?;
        let (lo, hi) = self.fit_band();
        let mut checks = Vec::new();
        let mut rows = Vec::new();
        let mut curves = Vec::new();
        for sf in fit.sides() {
            let name = match sf.side {
                fracp_core::grid::Side::Left => "left",
                fracp_core::grid::Side::Right => "right",
            };
            checks.push(CheckResult::at_least(&format!("{name}_slope_min"), sf.slope, lo));
            checks.push(CheckResult::at_most(&format!("{name}_slope_max"), sf.slope, hi));
            rows.push(vec![
                name.to_string(),
                num(sf.d_lo),
                num(sf.d_hi),
                num(sf.slope),
                num(fit.reference),
                num((sf.slope - fit.reference).abs()),
                num(sf.residual),
            ]);
            let g = &c.u_min.grid;
            let pts: Vec<(f64, f64)> = g
                .distances()
                .iter()
                .zip(&g.sides()[1..=g.len()])
                .zip(&c.u_min.values)
                .filter(|((&d, &side), _)| side == sf.side && d >= sf.d_lo && d <= sf.d_hi)
                .map(|((&d, _), &v)| (d.ln(), v.ln()))
                .collect();
            curves.push((name.to_string(), pts));
        }
        self.write_csv(
            "exponent_fit.csv",
            &["side", "d_lo", "d_hi", "slope", "reference", "deviation", "residual"],
            &rows,
        )?;
        self.write_plot("exponent_fit.dat", "log(d) log(u)", &curves)?;
        let notes = vec![format!("accepted slope band [{lo}, {hi}]")];
        Ok((
            vec![VerificationRecord::new("exponent_fit", checks, notes)],
            serde_json::to_value(fit).unwrap_or(Value::Null),
        ))
    }

    fn sobolev(&mut self) -> Outcome {
        let a = &self.config.analysis;
        let table = sobolev_scan(&self.params, &a.theta_list, &a.n_list, &self.config.scan_options())?;
        let rows: Vec<Vec<String>> = table
            .rows
            .iter()
            .map(|r| vec![num(r.theta), r.n.to_string(), num(r.energy)])
            .collect();
        self.write_csv("sobolev_scan.csv", &["theta", "n", "energy"], &rows)?;
        let verdict = |v: Verdict| match v {
            Verdict::Bounded => "bounded".to_string(),
            Verdict::Divergent => "divergent".to_string(),
        };
        let classes: Vec<Vec<String>> = table
            .classes
            .iter()
            .map(|c| vec![num(c.theta), num(c.slope), verdict(c.verdict), verdict(c.expected)])
            .collect();
        self.write_csv(
            "sobolev_classes.csv",
            &["theta", "slope", "verdict", "expected"],
            &classes,
        )?;
        let curves: Vec<(String, Vec<(f64, f64)>)> = table
            .classes
            .iter()
            .map(|c| {
                let pts = table
                    .rows
                    .iter()
                    .filter(|r| r.theta == c.theta)
                    .map(|r| ((r.n as f64).ln(), r.energy.ln()))
                    .collect();
                (format!("theta={}", c.theta), pts)
            })
            .collect();
        self.write_plot("sobolev_scan.dat", "log(n) log(energy)", &curves)?;
        let checks = vec![
            CheckResult::at_least("verdicts_match_threshold", f64::from(u8::from(table.consistent)), 1.0),
            CheckResult::at_least("monotone_in_theta", f64::from(u8::from(table.monotone)), 1.0),
        ];
        Ok((
            vec![VerificationRecord::new("sobolev_scan", checks, Vec::new())],
            serde_json::to_value(&table).unwrap_or(Value::Null),
        ))
    }

    fn nonexistence(&mut self) -> Outcome {
        let q = self.config.grid.grading.unwrap_or(GRADING_CAP);
        let d = self.params.domain;
        let grid = build_grid(d.a, d.b, self.config.grid.n, q)?;
        let table = nonexistence_scan(
            &self.params,
            &self.config.analysis.delta_list,
            &grid,
            &self.config.scan_options(),
        )?;
        let rows: Vec<Vec<String>> = table
            .rows
            .iter()
            .map(|r| {
                vec![
                    num(r.delta),
                    num(r.alpha_star),
                    num(r.slope),
                    num(r.left_slope),
                    num(r.right_slope),
                    num(r.hardy),
                    num(r.increment),
                ]
            })
            .collect();
        self.write_csv(
            "nonexistence.csv",
            &[
                "delta",
                "alpha_star",
                "slope",
                "left_slope",
                "right_slope",
                "hardy",
                "increment",
            ],
            &rows,
        )?;
        let slope: Vec<(f64, f64)> = table.rows.iter().map(|r| (r.delta, r.slope)).collect();
        let reference: Vec<(f64, f64)> = table.rows.iter().map(|r| (r.delta, r.alpha_star)).collect();
        self.write_plot(
            "nonexistence_exponent.dat",
            "delta exponent",
            &[("fitted".into(), slope), ("alpha_star".into(), reference)],
        )?;
        let hardy: Vec<(f64, f64)> = table.rows.iter().map(|r| (r.delta, r.hardy)).collect();
        self.write_plot("nonexistence_hardy.dat", "delta hardy", &[("hardy".into(), hardy)])?;
        let checks = vec![
            CheckResult::at_least(
                "exponents_decreasing",
                f64::from(u8::from(table.exponents_decreasing)),
                1.0,
            ),
            CheckResult::at_least("hardy_increasing", f64::from(u8::from(table.hardy_increasing)), 1.0),
        ];
        Ok((
            vec![VerificationRecord::new("nonexistence_scan", checks, Vec::new())],
            serde_json::to_value(&table).unwrap_or(Value::Null),
        ))
    }

    fn compare(&mut self) -> Outcome {
        self.params.require_existence()?;
        let (grid, c) = self.solution()?;
        let a = &self.config.analysis;
        let (eta, rho) = (a.eta, a.rho);
        let report = barrier_bracket(&self.params, c.steps.last().expect("steps"), eta, rho, 1e-3)?;
        let checks = vec![
            CheckResult::at_most("sub_violation", report.comparison.below, report.comparison.tol),
            CheckResult::at_most("super_violation", report.comparison.above, report.comparison.tol),
        ];
        let l = report.eps.powf(1.0 / report.alpha);
        let (mut sub, mut sol, mut sup) = (Vec::new(), Vec::new(), Vec::new());
        for (&d, &v) in grid.distances().iter().zip(&c.u_min.values) {
            if d < eta {
                let base = (d + l).powf(report.alpha);
                sub.push((d, report.c_sub * (base - report.eps)));
                sol.push((d, v));
                sup.push((d, report.c_super * base));
            }
        }
        self.write_plot(
            "bracket.dat",
            "d value",
            &[("sub".into(), sub), ("u".into(), sol), ("super".into(), sup)],
        )?;
        let notes = vec![format!(
            "c_sub = {:.6}, c_super = {:.6}, c5 = {:.6}, c6 = {:.6}",
            report.c_sub, report.c_super, report.c5, report.c6
        )];
        Ok((
            vec![VerificationRecord::new("compare", checks, notes)],
            serde_json::to_value(report).unwrap_or(Value::Null),
        ))
    }

    fn properties(&mut self) -> Outcome {
        let r = inequality_props(self.seed, self.config.analysis.property_samples)?;
        let mut checks = vec![CheckResult::at_most(
            "inequality_failures",
            r.inequality_failures as f64,
            0.0,
        )];
        for c in &r.composition {
            checks.push(CheckResult::at_most(
                &format!("composition_failures_p{}_theta{}", c.p, c.theta),
                c.failures as f64,
                0.0,
            ));
        }
        Ok((
            vec![VerificationRecord::new("properties", checks, Vec::new())],
            serde_json::to_value(&r).unwrap_or(Value::Null),
        ))
    }

    fn write_csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> fracp_core::Result<()> {
        if !self.config.wants(Format::Csv) {
            return Ok(());
        }
        let io = |e: csv::Error| fracp_core::Error::Precondition(format!("writing {name}: {e}"));
        let mut w = csv::Writer::from_path(self.out.join(name)).map_err(io)?;
        w.write_record(header).map_err(io)?;
        for r in rows {
            w.write_record(r).map_err(io)?;
        }
        w.flush()
            .map_err(|e| fracp_core::Error::Precondition(format!("writing {name}: {e}")))
    }

    /// One file per figure: a comment line per curve followed by its
    /// two-column points, curves separated by blank lines.
    fn write_plot(&self, name: &str, columns: &str, curves: &[(String, Vec<(f64, f64)>)]) -> fracp_core::Result<()> {
        if !self.config.wants(Format::Plotdata) {
            return Ok(());
        }
        let mut text = format!("# {columns}\n");
        for (k, (label, pts)) in curves.iter().enumerate() {
            if k > 0 {
                text.push_str("\n\n");
            }
            text.push_str(&format!("# {label}\n"));
            for (x, y) in pts {
                text.push_str(&format!("{} {}\n", num(*x), num(*y)));
            }
        }
        write_file(&self.out.join(name), &text)
    }
}

pub fn write_file(path: &Path, text: &str) -> fracp_core::Result<()> {
    fs::write(path, text).map_err(|e| fracp_core::Error::Precondition(format!("writing {}: {e}", path.display())))
}

/// Shortest round-trip decimal form, so repeated runs are byte-identical.
fn num(x: f64) -> String {
    format!("{x}")
}
