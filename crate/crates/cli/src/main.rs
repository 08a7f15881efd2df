mod config;
mod run;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use fracp_core::params::classify_regime;

use config::ExperimentConfig;
use run::{write_file, Context, Experiment, Report};

/// Numerical experiments for singular problems driven by the fractional
/// p-Laplacian on an interval.
#[derive(Debug, Parser)]
#[command(name = "fracp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: the configured one, else `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for the parallel kernels.
    #[arg(long, global = true, env = "FRACP_THREADS")]
    threads: Option<usize>,
    /// Seed for randomized property checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Exponents and flags of the parameter regime.
    Classify,
    /// Barrier constant table over the configured (alpha, s, p) sweep.
    Oracle,
    /// Power barrier and boundary barrier verification.
    BarrierCheck,
    /// Continuation in eps toward the minimal solution.
    Solve,
    /// Boundary exponent of the minimal solution.
    ExponentFit,
    /// Energy-space membership of powers of the minimal solution.
    SobolevScan,
    /// Exponent and Hardy trends as delta approaches sp.
    NonexistenceScan,
    /// Bracketing of the solution between scaled barriers.
    Compare,
    /// Every experiment plus the randomized property checks.
    All,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Classify => "classify",
            Command::Oracle => "oracle",
            Command::BarrierCheck => "barrier-check",
            Command::Solve => "solve",
            Command::ExponentFit => "exponent-fit",
            Command::SobolevScan => "sobolev-scan",
            Command::NonexistenceScan => "nonexistence-scan",
            Command::Compare => "compare",
            Command::All => "all",
        }
    }

    fn experiments(self) -> Vec<Experiment> {
        match self {
            Command::Classify => vec![Experiment::Classify],
            Command::Oracle => vec![Experiment::Oracle],
            Command::BarrierCheck => vec![Experiment::BarrierCheck],
            Command::Solve => vec![Experiment::Solve],
            Command::ExponentFit => vec![Experiment::ExponentFit],
            Command::SobolevScan => vec![Experiment::SobolevScan],
            Command::NonexistenceScan => vec![Experiment::NonexistenceScan],
            Command::Compare => vec![Experiment::Compare],
            Command::All => Experiment::ALL.to_vec(),
        }
    }
}

fn usage_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(1)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let start = Instant::now();

    let config = match &cli.config {
        Some(path) => match fs::read_to_string(path) {
            Ok(text) => match ExperimentConfig::parse(&text) {
                Ok(c) => c,
                Err(e) => return usage_error(e),
            },
            Err(e) => return usage_error(format!("cannot read {}: {e}", path.display())),
        },
        None => ExperimentConfig::default(),
    };
    let params = match config.problem() {
        Ok(p) => p,
        Err(e) => return usage_error(format!("ConfigParse: {}: {e}", e.kind())),
    };
    if let Some(k) = cli.threads {
        if k == 0 {
            return usage_error("--threads must be positive");
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            return usage_error(format!("thread pool: {e}"));
        }
    }
    let out = cli
        .out
        .clone()
        .or_else(|| config.output.directory.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    if let Err(e) = fs::create_dir_all(&out) {
        return usage_error(format!("cannot create {}: {e}", out.display()));
    }

    let mut ctx = Context::new(config.clone(), params, out.clone(), cli.seed);
    let experiments: Vec<_> = cli.command.experiments().into_iter().map(|e| ctx.run(e)).collect();
    let passed = experiments.iter().all(|e| e.passed);
    let report = Report {
        tool: "fracp".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: cli.command.name().into(),
        config,
        regime: classify_regime(&params),
        experiments,
        passed,
        seed: cli.seed,
        threads: rayon::current_num_threads(),
        total_seconds: start.elapsed().as_secs_f64(),
    };
    let text = match serde_json::to_string_pretty(&report) {
        Ok(t) => t,
        Err(e) => return usage_error(format!("serializing report: {e}")),
    };
    if let Err(e) = write_file(&out.join("report.json"), &(text + "\n")) {
        return usage_error(e);
    }
    for e in &report.experiments {
        println!("{:<18} {}", e.id, if e.passed { "PASS" } else { "FAIL" });
    }
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}
