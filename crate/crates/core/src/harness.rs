//! Random sparse-feasibility instances and the solver comparison suite.
//!
//! An instance asks for an `r`-sparse, box-bounded solution of an
//! underdetermined Gaussian system, posed as `min δ_D(x) + ½dist²(x, C)` with
//! `C = {x : A·x = b}` and `D = {x : ‖x‖₀ <= r, ‖x‖∞ <= l}`. A run counts as a
//! success when its terminal objective is below `1e-12`, i.e. it found a point
//! of `C ∩ D` rather than a mere stationary point.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::functions::{AffineDistance, SparseBoxIndicator};
use crate::problem::CompositeProblem;
use crate::prox::{project_box, AffineSet, SparseBoxSet};
use crate::solvers::{
    dr_solve, frb_solve, itseng_solve, RunReport, SolverConfig, TerminationReason,
    DEFAULT_FRB_LAMBDA, DEFAULT_ITSENG_ALPHA, DEFAULT_ITSENG_LAMBDA,
};

pub const BOX_RADIUS: f64 = 1e6;
pub const SUCCESS_THRESHOLD: f64 = 1e-12;

/// The fifteen `(m, n)` sizes of the reference comparison.
pub const REFERENCE_SIZES: [(usize, usize); 15] = [
    (300, 600),
    (300, 700),
    (300, 800),
    (300, 900),
    (300, 1000),
    (400, 600),
    (400, 700),
    (400, 800),
    (400, 900),
    (400, 1000),
    (500, 600),
    (500, 700),
    (500, 800),
    (500, 900),
    (500, 1000),
];

pub type FeasibilityProblem = CompositeProblem<AffineDistance, SparseBoxIndicator>;

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityInstance {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub r: usize,
    pub l: f64,
    pub planted: DVector<f64>,
    pub seed: u64,
}

impl FeasibilityInstance {
    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn sparse_set(&self) -> SparseBoxSet {
        SparseBoxSet::new(self.r, self.l).expect("instance holds a valid sparsity budget")
    }

    pub fn affine_set(&self) -> Result<AffineSet> {
        AffineSet::new(self.a.clone(), self.b.clone())
    }

    /// `f = δ_D`, `g = ½dist²(·, C)`.
    pub fn problem(&self) -> Result<FeasibilityProblem> {
        CompositeProblem::new(
            AffineDistance::new(self.affine_set()?),
            SparseBoxIndicator::new(self.n(), self.sparse_set())?,
        )
    }

    pub fn descriptor(&self) -> InstanceDescriptor {
        InstanceDescriptor {
            m: self.m(),
            n: self.n(),
            seed: self.seed,
        }
    }
}

/// Draws an instance from `ChaCha8Rng::seed_from_u64(seed)`, in this order:
/// the entries of `A` (column-major, standard normal via the ziggurat
/// sampler of `rand_distr`), the `r` planted values, then the `r` support
/// indices. `r = ⌈m/5⌉`, `l = 10⁶` and `b = A·x̃`.
pub fn generate_instance(m: usize, n: usize, seed: u64) -> Result<FeasibilityInstance> {
    if m == 0 || m >= n {
        return Err(Error::InvalidArgument(format!(
            "m must be < n (and positive), got m = {m}, n = {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = m.div_ceil(5);
    let a = DMatrix::from_fn(m, n, |_, _| StandardNormal.sample(&mut rng));
    let values = project_box(
        &DVector::from_fn(r, |_, _| StandardNormal.sample(&mut rng)),
        BOX_RADIUS,
    );
    let support = rand::seq::index::sample(&mut rng, n, r);
    let mut planted = DVector::zeros(n);
    for (value, i) in values.iter().zip(support.iter()) {
        planted[i] = *value;
    }
    let b = &a * &planted;
    Ok(FeasibilityInstance {
        a,
        b,
        r,
        l: BOX_RADIUS,
        planted,
        seed,
    })
}

/// `(m, n, seed)`: enough to regenerate an instance bit for bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InstanceDescriptor {
    pub m: usize,
    pub n: usize,
    pub seed: u64,
}

impl InstanceDescriptor {
    pub fn generate(&self) -> Result<FeasibilityInstance> {
        generate_instance(self.m, self.n, self.seed)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_string()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        text.parse()
    }
}

impl fmt::Display for InstanceDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# sparse feasibility instance")?;
        writeln!(f, "m={}", self.m)?;
        writeln!(f, "n={}", self.n)?;
        writeln!(f, "seed={}", self.seed)
    }
}

impl FromStr for InstanceDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |detail: String| Error::Parse {
            what: "instance descriptor",
            detail,
        };
        let (mut m, mut n, mut seed) = (None, None, None);
        for line in s
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
        {
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, got {line:?}")))?;
            let value = value.trim();
            match key.trim() {
                "m" => m = Some(value.parse().map_err(|e| bad(format!("m: {e}")))?),
                "n" => n = Some(value.parse().map_err(|e| bad(format!("n: {e}")))?),
                "seed" => seed = Some(value.parse().map_err(|e| bad(format!("seed: {e}")))?),
                other => return Err(bad(format!("unknown key {other:?}"))),
            }
        }
        match (m, n, seed) {
            (Some(m), Some(n), Some(seed)) => Ok(Self { m, n, seed }),
            _ => Err(bad("m, n and seed are all required".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverKind {
    Frb,
    Dr,
    ITseng,
}

impl SolverKind {
    pub const ALL: [SolverKind; 3] = [SolverKind::Frb, SolverKind::Dr, SolverKind::ITseng];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Frb => "FRB",
            Self::Dr => "DR",
            Self::ITseng => "iTseng",
        }
    }

    /// Step sizes used for the feasibility experiments.
    pub fn default_config(&self) -> SolverConfig {
        match self {
            Self::Frb => SolverConfig::frb(DEFAULT_FRB_LAMBDA),
            Self::Dr => SolverConfig::default(),
            Self::ITseng => SolverConfig::itseng(DEFAULT_ITSENG_LAMBDA, DEFAULT_ITSENG_ALPHA),
        }
    }

    pub fn solve(
        &self,
        problem: &FeasibilityProblem,
        x0: &DVector<f64>,
        config: &SolverConfig,
    ) -> Result<RunReport> {
        match self {
            Self::Frb => frb_solve(problem, x0, config),
            Self::Dr => dr_solve(problem, x0, config),
            Self::ITseng => itseng_solve(problem, x0, config),
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "frb" => Ok(Self::Frb),
            "dr" => Ok(Self::Dr),
            "itseng" | "tseng" => Ok(Self::ITseng),
            _ => Err(Error::Parse {
                what: "solver",
                detail: format!("{s:?} (expected frb, dr or itseng)"),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub solver: SolverKind,
    pub seed: u64,
    pub iterations: usize,
    pub terminal_objective: f64,
    pub success: bool,
    pub termination_reason: TerminationReason,
    pub wall_time: Duration,
}

impl TrialResult {
    fn from_report(solver: SolverKind, seed: u64, report: &RunReport, wall_time: Duration) -> Self {
        Self {
            solver,
            seed,
            iterations: report.iterations,
            terminal_objective: report.terminal_objective,
            success: report.terminal_objective < SUCCESS_THRESHOLD,
            termination_reason: report.termination_reason,
            wall_time,
        }
    }
}

/// Runs one solver from the origin and keeps the full report alongside the metrics.
pub fn run_trial_report(
    instance: &FeasibilityInstance,
    solver: SolverKind,
    config: &SolverConfig,
) -> Result<(TrialResult, RunReport)> {
    let wrap = |e: Error| Error::Trial {
        seed: instance.seed,
        source: Box::new(e),
    };
    let problem = instance.problem().map_err(wrap)?;
    run_on_problem(&problem, instance.seed, solver, config).map_err(wrap)
}

pub fn run_trial(
    instance: &FeasibilityInstance,
    solver: SolverKind,
    config: &SolverConfig,
) -> Result<TrialResult> {
    run_trial_report(instance, solver, config).map(|(trial, _)| trial)
}

fn run_on_problem(
    problem: &FeasibilityProblem,
    seed: u64,
    solver: SolverKind,
    config: &SolverConfig,
) -> Result<(TrialResult, RunReport)> {
    let x0 = DVector::zeros(problem.dim());
    let start = Instant::now();
    let report = solver.solve(problem, &x0, config)?;
    Ok((
        TrialResult::from_report(solver, seed, &report, start.elapsed()),
        report,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub m: usize,
    pub n: usize,
    pub solver: SolverKind,
    /// Ceiling of the mean iteration count.
    pub mean_iter_ceiling: usize,
    pub mean_iterations: f64,
    pub fval_min: f64,
    pub success_count: usize,
    pub trials: usize,
}

impl BenchRow {
    fn aggregate(m: usize, n: usize, solver: SolverKind, results: &[TrialResult]) -> Self {
        let trials = results.len();
        let total: usize = results.iter().map(|t| t.iterations).sum();
        let mean_iterations = total as f64 / trials as f64;
        Self {
            m,
            n,
            solver,
            mean_iter_ceiling: total.div_ceil(trials),
            mean_iterations,
            fval_min: results
                .iter()
                .map(|t| t.terminal_objective)
                .fold(f64::INFINITY, f64::min),
            success_count: results.iter().filter(|t| t.success).count(),
            trials,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn row(&self, m: usize, n: usize, solver: SolverKind) -> Option<&BenchRow> {
        self.rows
            .iter()
            .find(|r| r.m == m && r.n == n && r.solver == solver)
    }
}

/// Runs every solver with its [`SolverKind::default_config`].
pub fn run_suite(
    sizes: &[(usize, usize)],
    trials: usize,
    solvers: &[SolverKind],
    base_seed: u64,
) -> Result<BenchReport> {
    let configured: Vec<_> = solvers.iter().map(|s| (*s, s.default_config())).collect();
    run_suite_with(sizes, trials, &configured, base_seed)
}

/// For each size and each trial `t`, generates the instance with seed
/// `base_seed + t` and runs every solver on it from the origin. Trials run in
/// parallel; the aggregation does not depend on completion order.
pub fn run_suite_with(
    sizes: &[(usize, usize)],
    trials: usize,
    solvers: &[(SolverKind, SolverConfig)],
    base_seed: u64,
) -> Result<BenchReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let mut report = BenchReport::default();
    for &(m, n) in sizes {
        let per_trial: Vec<Vec<TrialResult>> = (0..trials as u64)
            .into_par_iter()
            .map(|t| {
                let seed = base_seed.wrapping_add(t);
                let instance = generate_instance(m, n, seed)?;
                let wrap = |e: Error| Error::Trial {
                    seed,
                    source: Box::new(e),
                };
                let problem = instance.problem().map_err(wrap)?;
                solvers
                    .iter()
                    .map(|(kind, config)| {
                        run_on_problem(&problem, seed, *kind, config)
                            .map(|r| r.0)
                            .map_err(wrap)
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        for (i, (kind, _)) in solvers.iter().enumerate() {
            let results: Vec<TrialResult> = per_trial.iter().map(|row| row[i].clone()).collect();
            report.rows.push(BenchRow::aggregate(m, n, *kind, &results));
        }
    }
    Ok(report)
}

pub const REPORT_HEADER: [&str; 7] = ["m", "n", "solver", "iter", "fval_min", "succ", "trials"];

/// CSV with header `m,n,solver,iter,fval_min,succ,trials`; `fval_min` in
/// scientific notation with seven significant digits.
pub fn write_report(report: &BenchReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(REPORT_HEADER).map_err(csv_err)?;
    for row in &report.rows {
        w.write_record([
            row.m.to_string(),
            row.n.to_string(),
            row.solver.to_string(),
            row.mean_iter_ceiling.to_string(),
            format!("{:.6e}", row.fval_min),
            row.success_count.to_string(),
            row.trials.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a report written by [`write_report`]. `mean_iterations` is restored
/// from the ceiling column.
pub fn read_report(path: impl AsRef<Path>) -> Result<BenchReport> {
    let path = path.as_ref();
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let bad = |detail: String| Error::Parse {
        what: "report row",
        detail,
    };
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.iter().ne(REPORT_HEADER) {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    let mut report = BenchReport::default();
    for record in rdr.records() {
        let record = record.map_err(csv_err)?;
        let field = |i: usize| {
            record
                .get(i)
                .ok_or_else(|| bad(format!("missing column {}", REPORT_HEADER[i])))
        };
        let int = |i: usize| -> Result<usize> {
            field(i)?
                .parse()
                .map_err(|e| bad(format!("{}: {e}", REPORT_HEADER[i])))
        };
        let mean_iter_ceiling = int(3)?;
        report.rows.push(BenchRow {
            m: int(0)?,
            n: int(1)?,
            solver: field(2)?.parse()?,
            mean_iter_ceiling,
            mean_iterations: mean_iter_ceiling as f64,
            fval_min: field(4)?
                .parse()
                .map_err(|e| bad(format!("fval_min: {e}")))?,
            success_count: int(5)?,
            trials: int(6)?,
        });
    }
    Ok(report)
}
