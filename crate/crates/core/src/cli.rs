//! Command-line surface. [`run`] does all the work and returns the report and
//! exit status, so it is testable without spawning a process.

use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};

use crate::embedding::build_embedding;
use crate::error::Error;
use crate::fixtures::{self, APPENDIX_DIMENSION, APPENDIX_ERROR, APPENDIX_ORDER, APPENDIX_P_LOWER, APPENDIX_X_STAR, APPENDIX_X_TILDE};
use crate::hpm::choose_order;
use crate::model::{compute_params, QuadraticSystem};
use crate::pipeline::{run_pipeline, PipelineConfig, PipelineRun};
use crate::problem::{load_problem, validate_epsilon, validate_order};
use crate::report::{layout_dump, matrix_dump, vector_dump, Report};
use crate::selftest;
use crate::solver::SolveMethod;

pub const DEFAULT_EPSILON: f64 = 1e-3;

/// Exit statuses by failure category.
pub mod status {
    pub const OK: i32 = 0;
    pub const INTERNAL: i32 = 1;
    pub const PARSE: i32 = 2;
    pub const DIVERGENT: i32 = 3;
    pub const SOLVER: i32 = 4;
    pub const VERIFICATION: i32 = 5;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Solve the embedded system and print x̃, residual and success probability.
    Solve,
    /// Build the embedding and write matrix/layout dumps.
    Embed,
    /// Solve and print every bound next to its measured value.
    Analyze,
    /// Check the bundled two-dimensional example against its golden values.
    VerifyAppendix,
    /// Run the randomized property suites.
    Selftest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Direct,
    Iterative,
    Auto,
}

impl From<SolverArg> for SolveMethod {
    fn from(a: SolverArg) -> Self {
        match a {
            SolverArg::Direct => SolveMethod::Direct,
            SolverArg::Iterative => SolveMethod::Iterative,
            SolverArg::Auto => SolveMethod::Auto,
        }
    }
}

/// Linear embedding solver for quadratic systems `F₀ + F₁x + F₂(x⊗x) = 0`.
#[derive(Debug, Clone, Parser)]
#[command(name = "quadhpm", version)]
pub struct RunConfig {
    #[arg(value_enum)]
    pub command: Command,
    /// Problem file (JSON); required for solve, embed and analyze.
    pub problem_path: Option<PathBuf>,
    /// Truncation order c in [1, 64]; chosen automatically when omitted.
    #[arg(long = "order")]
    pub order_c: Option<usize>,
    /// Target precision; overrides the problem file, default 1e-3.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long = "solver", value_enum, default_value = "auto")]
    pub solver_method: SolverArg,
    /// Write A as `row col value` triplets here, and b to `<PATH>.b`.
    #[arg(long)]
    pub dump_matrix: Option<PathBuf>,
    /// Write the block layout here.
    #[arg(long)]
    pub dump_layout: Option<PathBuf>,
    /// Seed for the randomized suites.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            problem_path: None,
            order_c: None,
            epsilon: None,
            solver_method: SolverArg::Auto,
            dump_matrix: None,
            dump_layout: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutput {
    pub status: i32,
    pub report: String,
    /// Diagnostic for stderr when `status` is nonzero.
    pub message: Option<String>,
}

impl RunOutput {
    fn ok(report: Report) -> Self {
        Self {
            status: status::OK,
            report: report.into_string(),
            message: None,
        }
    }

    fn failed(status: i32, report: Report, message: String) -> Self {
        Self {
            status,
            report: report.into_string(),
            message: Some(message),
        }
    }
}

/// Maps an error raised after the problem loaded to its exit status.
fn run_status(e: &Error) -> i32 {
    match e {
        Error::Divergent(_) => status::DIVERGENT,
        Error::InvalidOrder(_) | Error::Parse(_) => status::PARSE,
        _ => status::SOLVER,
    }
}

struct Loaded {
    system: QuadraticSystem,
    epsilon: f64,
    order: Option<usize>,
}

fn load(config: &RunConfig) -> Result<Loaded, String> {
    let path = config
        .problem_path
        .as_deref()
        .ok_or_else(|| "this command needs a problem file".to_string())?;
    let problem = load_problem(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let epsilon = validate_epsilon(config.epsilon.or(problem.epsilon).unwrap_or(DEFAULT_EPSILON))
        .map_err(|e| e.to_string())?;
    let order = config
        .order_c
        .or(problem.order_c)
        .map(validate_order)
        .transpose()
        .map_err(|e| e.to_string())?;
    Ok(Loaded {
        system: problem.system,
        epsilon,
        order,
    })
}

pub fn run(config: &RunConfig) -> RunOutput {
    match config.command {
        Command::VerifyAppendix => return verify_appendix(config),
        Command::Selftest => return run_selftest(config.seed),
        _ => {}
    }
    if let Some(c) = config.order_c {
        if let Err(e) = validate_order(c) {
            return RunOutput::failed(status::PARSE, Report::new(), e.to_string());
        }
    }
    let loaded = match load(config) {
        Ok(l) => l,
        Err(msg) => return RunOutput::failed(status::PARSE, Report::new(), msg),
    };
    let mut report = Report::new();
    let result = match config.command {
        Command::Embed => embed(config, &loaded, &mut report),
        Command::Solve => solve_or_analyze(config, &loaded, false, &mut report),
        Command::Analyze => solve_or_analyze(config, &loaded, true, &mut report),
        Command::VerifyAppendix | Command::Selftest => unreachable!("dispatched above"),
    };
    match result {
        Ok(()) => RunOutput::ok(report),
        Err(Failure { status, message }) => RunOutput::failed(status, report, message),
    }
}

struct Failure {
    status: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            status: run_status(&e),
            message: e.to_string(),
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure {
        status: status::INTERNAL,
        message: format!("{}: {e}", path.display()),
    })
}

fn dumps(config: &RunConfig, emb: &crate::embedding::EmbeddedSystem, report: &mut Report) -> Result<(), Failure> {
    if let Some(path) = &config.dump_matrix {
        write_file(path, &matrix_dump(&emb.matrix_a))?;
        let mut b_path = path.clone().into_os_string();
        b_path.push(".b");
        let b_path = PathBuf::from(b_path);
        write_file(&b_path, &vector_dump(&emb.vector_b))?;
        report.line("matrix_dump", path.display());
        report.line("vector_dump", b_path.display());
    }
    if let Some(path) = &config.dump_layout {
        write_file(path, &layout_dump(&emb.layout))?;
        report.line("layout_dump", path.display());
    }
    Ok(())
}

fn embed(config: &RunConfig, loaded: &Loaded, report: &mut Report) -> Result<(), Failure> {
    let sys = &loaded.system;
    let c = match loaded.order {
        Some(c) => c,
        None => choose_order(&compute_params(sys, 1)?, loaded.epsilon, None)?,
    };
    let emb = build_embedding(sys, c)?;
    report.line("command", "embed");
    report.line("n", sys.n());
    report.line("order_c", c);
    report.line("order_source", if loaded.order.is_some() { "override" } else { "truncation_rule" });
    report.line("embedding_dimension", emb.layout.total_dim_n);
    report.line("term_count", emb.layout.term_count());
    report.line("nnz", emb.matrix_a.nnz());
    report.line("max_row_nnz", emb.matrix_a.max_row_nnz());
    report.line("sparsity_s", sys.sparsity());
    report.line("sparsity_s_a", emb.sparsity_s_a);
    let betas: Vec<String> = emb.layout.beta_counts.iter().map(|b| b.to_string()).collect();
    report.line("beta_counts", format!("[{}]", betas.join(", ")));
    dumps(config, &emb, report)
}

fn run_lines(run: &PipelineRun, sys: &QuadraticSystem, epsilon: f64, report: &mut Report) {
    report.line("n", sys.n());
    report.line("order_c", run.order_c);
    report.line("order_source", run.order_source.label());
    report.real("epsilon", epsilon);
    report.real("big_r", run.params.big_r);
    report.real("alpha", run.params.alpha);
    report.real("g_factor", run.params.g_factor);
    if run.params.big_r >= 1.0 {
        report.line("divergence_warning", "R >= 1, the truncated series carries no error guarantee");
    }
    report.line("embedding_dimension", run.embedded.layout.total_dim_n);
    report.line("solver_method", run.outcome.method);
    report.line("solver_iterations", run.outcome.iterations);
    report.real("solver_residual_rel", run.outcome.residual_rel);
    report.vector("x_tilde", &run.x_tilde);
    report.real("residual_norm", run.residual_norm);
    report.real("p_empirical", run.p_empirical);
    match &run.newton {
        Ok(r) => {
            report.line("newton_converged", true);
            report.line("newton_iterations", r.iterations);
            report.vector("x_star", &r.x_star);
            report.real("error_empirical", (&r.x_star - &run.x_tilde).norm());
        }
        Err(e) => {
            report.line("newton_converged", false);
            report.line("newton_failure", e);
        }
    }
}

fn solve_or_analyze(config: &RunConfig, loaded: &Loaded, analyze: bool, report: &mut Report) -> Result<(), Failure> {
    let sys = &loaded.system;
    let run = run_pipeline(
        sys,
        &PipelineConfig {
            order: loaded.order,
            epsilon: loaded.epsilon,
            method: config.solver_method.into(),
        },
    )?;
    report.line("command", if analyze { "analyze" } else { "solve" });
    run_lines(&run, sys, loaded.epsilon, report);
    if analyze {
        match &run.series {
            Some(series) => {
                let norms: Vec<String> = series.nu_norms().iter().map(|v| format!("{v:?}")).collect();
                report.line("nu_norms", format!("[{}]", norms.join(", ")));
                report.real("recursion_gap", (&series.x_tilde - &run.x_tilde).norm());
            }
            None => report.line("nu_norms", "overflow"),
        }
        let bounds = run.bounds_report(sys, loaded.epsilon)?;
        report.raw(&bounds.render());
    }
    dumps(config, &run.embedded, report)
}

fn check(report: &mut Report, name: &str, value: f64, ok: bool, failures: &mut Vec<String>) {
    report.line(
        &format!("check.{name}"),
        format!("{} value={value:?}", if ok { "PASS" } else { "FAIL" }),
    );
    if !ok {
        failures.push(name.to_string());
    }
}

fn verify_appendix(config: &RunConfig) -> RunOutput {
    let sys = fixtures::appendix_system();
    let mut report = Report::new();
    report.line("command", "verify-appendix");
    let run = match run_pipeline(
        &sys,
        &PipelineConfig {
            order: Some(APPENDIX_ORDER),
            epsilon: DEFAULT_EPSILON,
            method: config.solver_method.into(),
        },
    ) {
        Ok(r) => r,
        Err(e) => return RunOutput::failed(status::VERIFICATION, report, e.to_string()),
    };
    run_lines(&run, &sys, DEFAULT_EPSILON, &mut report);
    let mut failures = Vec::new();
    let dim = run.embedded.layout.total_dim_n;
    check(&mut report, "embedding_dimension", dim as f64, dim == APPENDIX_DIMENSION, &mut failures);
    for (k, want) in APPENDIX_X_TILDE.iter().enumerate() {
        let got = run.x_tilde[k];
        check(&mut report, &format!("x_tilde[{k}]"), got, (got - want).abs() <= 1e-9, &mut failures);
    }
    match run.x_star() {
        Some(x) => {
            for k in 0..2 {
                let d = (x[k] - APPENDIX_X_STAR[k]).abs();
                check(&mut report, &format!("x_star[{k}]"), x[k], d <= 5e-9, &mut failures);
            }
            let err = (x - &run.x_tilde).norm();
            check(&mut report, "error_empirical", err, (err - APPENDIX_ERROR).abs() <= 1e-9, &mut failures);
        }
        None => check(&mut report, "newton_converged", f64::NAN, false, &mut failures),
    }
    check(&mut report, "p_empirical_vs_bound", run.p_empirical, run.p_empirical >= APPENDIX_P_LOWER, &mut failures);
    if failures.is_empty() {
        RunOutput::ok(report)
    } else {
        let msg = format!("verification failed: {}", failures.join(", "));
        RunOutput::failed(status::VERIFICATION, report, msg)
    }
}

fn run_selftest(seed: u64) -> RunOutput {
    let mut report = Report::new();
    report.line("command", "selftest");
    report.line("seed", seed);
    let results = match selftest::run_all(seed) {
        Ok(r) => r,
        Err(e) => return RunOutput::failed(status::VERIFICATION, report, e.to_string()),
    };
    report.raw(&selftest::render(&results));
    let failed: Vec<&str> = results.iter().filter(|r| !r.passed()).map(|r| r.name).collect();
    if failed.is_empty() {
        RunOutput::ok(report)
    } else {
        let msg = format!("suites failed: {}", failed.join(", "));
        RunOutput::failed(status::VERIFICATION, report, msg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verify_appendix_passes() {
        let out = run(&RunConfig::new(Command::VerifyAppendix));
        assert_eq!(out.status, status::OK, "{}", out.report);
        assert!(out.report.contains("check.error_empirical: PASS"));
    }

    #[test]
    fn missing_problem_is_parse_error() {
        let out = run(&RunConfig::new(Command::Solve));
        assert_eq!(out.status, status::PARSE);
    }

    #[test]
    fn bad_order_is_parse_error() {
        let mut cfg = RunConfig::new(Command::Solve);
        cfg.order_c = Some(0);
        assert_eq!(run(&cfg).status, status::PARSE);
    }

    #[test]
    fn flags_parse() {
        let cfg = RunConfig::try_parse_from([
            "quadhpm", "solve", "p.json", "--order", "3", "--solver", "iterative", "--epsilon", "0.01", "--seed", "9",
        ])
        .unwrap();
        assert_eq!(cfg.command, Command::Solve);
        assert_eq!(cfg.order_c, Some(3));
        assert_eq!(cfg.solver_method, SolverArg::Iterative);
        assert_eq!(cfg.epsilon, Some(0.01));
        assert_eq!(cfg.seed, 9);
        let cfg = RunConfig::try_parse_from(["quadhpm", "verify-appendix"]).unwrap();
        assert_eq!(cfg.command, Command::VerifyAppendix);
    }
}
