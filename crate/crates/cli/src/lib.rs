//! `frb` command-line driver.
//!
//! Exit codes: 0 on success, 1 for usage and configuration errors, 2 for
//! numerical failures and violated certificates.

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use frb_core::harness::{
    run_suite_with, run_trial_report, InstanceDescriptor, SolverKind, REFERENCE_SIZES,
};
use frb_core::merit::{check_descent, check_residual_bound, estimate_linear_rate};
use frb_core::solvers::{
    frb_stepsize_bound, DEFAULT_FRB_LAMBDA, DEFAULT_ITSENG_ALPHA, DEFAULT_ITSENG_LAMBDA,
    DEFAULT_TOL,
};
use frb_core::{write_report, Error, NonsmoothPart, SmoothPart, SolverConfig};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_FAILURE: u8 = 2;

/// Environment variable naming the default directory for bench output.
pub const OUT_DIR_ENV: &str = "FRB_OUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "frb",
    version,
    about = "Forward-reflected-backward splitting on sparse feasibility problems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate one instance and run one solver on it.
    Solve(SolveArgs),
    /// Run the solver comparison suite and write a CSV report.
    Bench(BenchArgs),
    /// Run FRB with full tracing and check the merit certificates.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct StepArgs {
    /// FRB step size.
    #[arg(long, default_value_t = DEFAULT_FRB_LAMBDA)]
    pub lambda: f64,
    /// Inertial Tseng step size.
    #[arg(long, default_value_t = DEFAULT_ITSENG_LAMBDA)]
    pub itseng_lambda: f64,
    /// Inertial Tseng inertia weight.
    #[arg(long, default_value_t = DEFAULT_ITSENG_ALPHA)]
    pub alpha: f64,
    /// Douglas-Rachford step size (default 0.93·(√(3/2) - 1)/L).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Termination tolerance on the relative step gap.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = frb_core::solvers::DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    /// Allow FRB step sizes outside 0 < lambda < min{1/(4L), lambda_f}.
    #[arg(long)]
    pub no_enforce: bool,
}

impl StepArgs {
    fn config(&self, solver: SolverKind) -> SolverConfig {
        let mut config = SolverConfig {
            tol: self.tol,
            max_iter: self.max_iter,
            enforce_stepsize_rule: !self.no_enforce,
            ..SolverConfig::default()
        };
        match solver {
            SolverKind::Frb => config.lambda = self.lambda,
            SolverKind::ITseng => {
                config.lambda = self.itseng_lambda;
                config.inertia_alpha = self.alpha;
            }
            SolverKind::Dr => config.dr_gamma = self.gamma,
        }
        config
    }
}

#[derive(Debug, Clone, Args)]
pub struct InstanceArgs {
    #[arg(long, default_value_t = 300)]
    pub m: usize,
    #[arg(long, default_value_t = 600)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Read m, n and seed from an instance descriptor file instead.
    #[arg(long, conflicts_with_all = ["m", "n", "seed"])]
    pub instance: Option<PathBuf>,
    /// Write the instance descriptor to this path.
    #[arg(long)]
    pub save_instance: Option<PathBuf>,
}

impl InstanceArgs {
    fn descriptor(&self) -> Result<InstanceDescriptor, CliError> {
        let descriptor = match &self.instance {
            Some(path) => {
                InstanceDescriptor::load(path).map_err(|e| CliError::usage("--instance", e))?
            }
            None => InstanceDescriptor {
                m: self.m,
                n: self.n,
                seed: self.seed,
            },
        };
        check_size(descriptor.m, descriptor.n)?;
        if let Some(path) = &self.save_instance {
            descriptor
                .save(path)
                .map_err(|e| CliError::usage("--save-instance", e))?;
        }
        Ok(descriptor)
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long, default_value = "frb", value_parser = parse_solver)]
    pub solver: SolverKind,
    #[command(flatten)]
    pub steps: StepArgs,
    /// Write the per-iteration trace as CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated sizes such as 300x600,400x700 (default: the 15 reference sizes).
    #[arg(long, value_delimiter = ',', value_parser = parse_size)]
    pub sizes: Vec<(usize, usize)>,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    /// Comma-separated solvers (default: frb,dr,itseng).
    #[arg(long, value_delimiter = ',', value_parser = parse_solver)]
    pub solvers: Vec<SolverKind>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Report path (default: $FRB_OUT_DIR/bench.csv, else ./bench.csv).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub steps: StepArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[command(flatten)]
    pub steps: StepArgs,
    /// Write the per-iteration trace as CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

fn parse_solver(s: &str) -> Result<SolverKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (m, n) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected MxN, got {s:?}"))?;
    let m = m.trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
    let n = n.trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
    Ok((m, n))
}

fn check_size(m: usize, n: usize) -> Result<(), CliError> {
    if m == 0 || m >= n {
        return Err(CliError::Usage(format!(
            "--m/--n: m must be < n (got m = {m}, n = {n})"
        )));
    }
    Ok(())
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failure(String),
}

impl CliError {
    fn usage(flag: &str, err: Error) -> Self {
        Self::Usage(format!("{flag}: {err}"))
    }

    /// Configuration problems are usage errors; everything else is a numerical failure.
    fn from_solver(flag: &str, err: Error) -> Self {
        match root_cause(&err) {
            Error::StepSize { .. } | Error::InvalidArgument(_) | Error::Unsupported(_) => {
                Self::usage(flag, err)
            }
            _ => Self::Failure(err.to_string()),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => EXIT_USAGE,
            Self::Failure(_) => EXIT_FAILURE,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(msg) | Self::Failure(msg) => f.write_str(msg),
        }
    }
}

fn root_cause(err: &Error) -> &Error {
    match err {
        Error::Trial { source, .. } => root_cause(source),
        other => other,
    }
}

fn solver_flag(solver: SolverKind) -> &'static str {
    match solver {
        SolverKind::Frb => "--lambda",
        SolverKind::ITseng => "--itseng-lambda/--alpha",
        SolverKind::Dr => "--gamma",
    }
}

pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<u8, CliError> {
    match &cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Verify(args) => cmd_verify(args),
    }
}

pub fn cmd_solve(args: &SolveArgs) -> Result<u8, CliError> {
    let descriptor = args.instance.descriptor()?;
    let instance = descriptor
        .generate()
        .map_err(|e| CliError::usage("--m/--n", e))?;
    let config = args.steps.config(args.solver);
    let (trial, report) = run_trial_report(&instance, args.solver, &config)
        .map_err(|e| CliError::from_solver(solver_flag(args.solver), e))?;
    println!(
        "solver={} m={} n={} seed={} iterations={} objective={:e} success={} reason={}",
        trial.solver,
        descriptor.m,
        descriptor.n,
        descriptor.seed,
        trial.iterations,
        trial.terminal_objective,
        trial.success,
        trial.termination_reason
    );
    if let Some(path) = &args.trace {
        report
            .trace
            .write_csv(path)
            .map_err(|e| CliError::usage("--trace", e))?;
    }
    Ok(EXIT_OK)
}

fn default_report_path() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
        .join("bench.csv")
}

pub fn cmd_bench(args: &BenchArgs) -> Result<u8, CliError> {
    let sizes = if args.sizes.is_empty() {
        REFERENCE_SIZES.to_vec()
    } else {
        args.sizes.clone()
    };
    for &(m, n) in &sizes {
        check_size(m, n)?;
    }
    if args.trials == 0 {
        return Err(CliError::Usage("--trials: must be at least 1".into()));
    }
    let solvers = if args.solvers.is_empty() {
        SolverKind::ALL.to_vec()
    } else {
        args.solvers.clone()
    };
    let configured: Vec<_> = solvers
        .iter()
        .map(|s| (*s, args.steps.config(*s)))
        .collect();
    let out = args.out.clone().unwrap_or_else(default_report_path);

    let report = run_suite_with(&sizes, args.trials, &configured, args.seed).map_err(|e| {
        let flag = match root_cause(&e) {
            Error::StepSize { .. } => "--lambda",
            _ => "--gamma/--itseng-lambda/--alpha",
        };
        CliError::from_solver(flag, e)
    })?;
    write_report(&report, &out).map_err(|e| CliError::usage("--out", e))?;
    for row in &report.rows {
        println!(
            "m={} n={} solver={} iter={} fval_min={:.6e} succ={} trials={}",
            row.m,
            row.n,
            row.solver,
            row.mean_iter_ceiling,
            row.fval_min,
            row.success_count,
            row.trials
        );
    }
    println!("report={}", out.display());
    Ok(EXIT_OK)
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<u8, CliError> {
    let descriptor = args.instance.descriptor()?;
    let instance = descriptor
        .generate()
        .map_err(|e| CliError::usage("--m/--n", e))?;
    let config = args.steps.config(SolverKind::Frb).with_iterates();
    let (trial, report) = run_trial_report(&instance, SolverKind::Frb, &config)
        .map_err(|e| CliError::from_solver("--lambda", e))?;
    if let Some(path) = &args.trace {
        report
            .trace
            .write_csv(path)
            .map_err(|e| CliError::usage("--trace", e))?;
    }

    println!(
        "m={} n={} seed={} lambda={} iterations={} objective={:e} success={} reason={}",
        descriptor.m,
        descriptor.n,
        descriptor.seed,
        config.lambda,
        trial.iterations,
        trial.terminal_objective,
        trial.success,
        trial.termination_reason
    );
    let descent = check_descent(&report.trace);
    let residual = check_residual_bound(&report.trace);
    println!(
        "descent violations: {}, residual violations: {}",
        descent.len(),
        residual.len()
    );
    if let Some(v) = descent.first() {
        println!(
            "first descent violation: k={} lhs={:e} rhs={:e}",
            v.k, v.lhs, v.rhs
        );
    }
    if let Some(v) = residual.first() {
        println!(
            "first residual violation: k={} lhs={:e} rhs={:e}",
            v.k, v.lhs, v.rhs
        );
    }
    match estimate_linear_rate(&report.trace, &report.final_x) {
        Ok(rate) => println!(
            "linear rate: Q={:.6} R2={:.4} samples={}",
            rate.rate, rate.r_squared, rate.samples
        ),
        Err(e) => println!("linear rate: unavailable ({e})"),
    }

    let problem = instance
        .problem()
        .map_err(|e| CliError::Failure(e.to_string()))?;
    let bound = frb_stepsize_bound(
        problem.smooth().lipschitz(),
        problem.nonsmooth().prox_threshold(),
    );
    let rule_holds = config.lambda < bound;
    if !rule_holds {
        println!("step-size rule violated: lambda={} >= min{{1/(4L), lambda_f}}={bound}; certificates do not apply", config.lambda);
    }
    Ok(if descent.is_empty() && residual.is_empty() && rule_holds {
        EXIT_OK
    } else {
        EXIT_FAILURE
    })
}
