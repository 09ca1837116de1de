//! FRB merit function, subgradient residual and the certificate checks.
//!
//! Along an FRB run with `0 < λ < min{1/(4L), λ_f}` and `z_k = (x_{k+1}, x_k)`:
//!
//! * `M₁‖z_k - z_{k-1}‖² <= H(z_{k-1}) - H(z_k)` with `M₁ = 1/(4λ) - L`;
//! * `‖(A_{k+1}, B_{k+1})‖ <= M₂‖z_k - z_{k-1}‖` with `M₂ = √2(L + 2/λ)`.
//!
//! [`check_descent`] and [`check_residual_bound`] report every index where a
//! recorded trace breaks one of these beyond floating-point slack.

use std::path::Path;

use nalgebra::DVector;

use crate::error::{check_dim, Error, Result};
use crate::problem::{CompositeProblem, NonsmoothPart, SmoothPart};

/// Relative slack on the descent inequality.
pub const DESCENT_SLACK: f64 = 1e-8;
/// Absolute slack on the residual bound.
pub const RESIDUAL_SLACK: f64 = 1e-10;
pub const MIN_RATE_SAMPLES: usize = 20;
const RATE_TAIL_FRACTION: f64 = 0.6;
const RATE_TAIL_CAP: usize = 500;

/// Per-iteration telemetry for step `k` (the step producing `x_{k+1}`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeritSample {
    pub k: usize,
    /// `H(z_k) = H(x_{k+1}, x_k)`.
    pub merit: f64,
    /// `‖z_k - z_{k-1}‖ = √(‖x_{k+1} - x_k‖² + ‖x_k - x_{k-1}‖²)`.
    pub z_gap: f64,
    /// `‖(A_{k+1}, B_{k+1})‖`.
    pub residual_norm: f64,
    /// `F(x_{k+1})`.
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverTrace {
    pub samples: Vec<MeritSample>,
    pub lambda: f64,
    pub lipschitz: f64,
    /// `H(z_{-1}) = H(x_0, x_{-1})`.
    pub initial_merit: f64,
    /// `x_0, x_1, …` when the solver was asked to keep them.
    pub iterates: Vec<DVector<f64>>,
}

impl SolverTrace {
    pub fn new(lambda: f64, lipschitz: f64, initial_merit: f64) -> Self {
        Self {
            samples: Vec::new(),
            lambda,
            lipschitz,
            initial_merit,
            iterates: Vec::new(),
        }
    }

    /// `M₁ = 1/(4λ) - L`.
    pub fn m1(&self) -> f64 {
        0.25 / self.lambda - self.lipschitz
    }

    /// `M₂ = √2(L + 2/λ)`.
    pub fn m2(&self) -> f64 {
        std::f64::consts::SQRT_2 * (self.lipschitz + 2.0 / self.lambda)
    }

    /// CSV with columns `k,H,z_gap,residual_norm,objective`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let csv_err = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        w.write_record(["k", "H", "z_gap", "residual_norm", "objective"])
            .map_err(csv_err)?;
        for s in &self.samples {
            w.write_record([
                s.k.to_string(),
                format!("{:e}", s.merit),
                format!("{:e}", s.z_gap),
                format!("{:e}", s.residual_norm),
                format!("{:e}", s.objective),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// `H(x, y) = f(x) + g(x) + ‖x - y‖²/(4λ)`; `+∞` iff `f(x) = +∞`.
pub fn merit_value<S: SmoothPart, N: NonsmoothPart>(
    x: &DVector<f64>,
    y: &DVector<f64>,
    lambda: f64,
    problem: &CompositeProblem<S, N>,
) -> Result<f64> {
    check_dim(x.len(), y.len())?;
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    let objective = problem.evaluate_objective(x)?;
    let d = x - y;
    Ok(objective + d.norm_squared() / (4.0 * lambda))
}

/// `(A_{k+1}, B_{k+1})` from cached gradients:
///
/// ```text
/// p = (x_k - x_{k+1})/λ + ∇g(x_{k+1}) - 2∇g(x_k) + ∇g(x_{k-1})
/// A = p + (x_{k+1} - x_k)/(2λ),   B = (x_k - x_{k+1})/(2λ)
/// ```
pub(crate) fn residual_pair(
    x_next: &DVector<f64>,
    x_curr: &DVector<f64>,
    grad_next: &DVector<f64>,
    grad_curr: &DVector<f64>,
    grad_prev: &DVector<f64>,
    lambda: f64,
) -> (DVector<f64>, DVector<f64>) {
    let back = x_curr - x_next;
    // p + (x_{k+1} - x_k)/(2λ) = (x_k - x_{k+1})/(2λ) + ∇g(x_{k+1}) - 2∇g(x_k) + ∇g(x_{k-1})
    let b = &back / (2.0 * lambda);
    let mut a = grad_next - grad_curr * 2.0 + grad_prev;
    a += &b;
    (a, b)
}

/// Subgradient pair `(A_{k+1}, B_{k+1}) ∈ ∂H(z_k)` for three consecutive FRB
/// iterates. Re-evaluates the three gradients.
pub fn frb_residual<S: SmoothPart, N: NonsmoothPart>(
    x_next: &DVector<f64>,
    x_curr: &DVector<f64>,
    x_prev: &DVector<f64>,
    lambda: f64,
    problem: &CompositeProblem<S, N>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    problem.check_vector(x_next)?;
    problem.check_vector(x_curr)?;
    problem.check_vector(x_prev)?;
    let g = problem.smooth();
    Ok(residual_pair(
        x_next,
        x_curr,
        &g.gradient(x_next),
        &g.gradient(x_curr),
        &g.gradient(x_prev),
        lambda,
    ))
}

/// A certificate failure at iteration `k`: `lhs > rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub k: usize,
    pub lhs: f64,
    pub rhs: f64,
}

/// Iterations where `M₁·gap² > H(z_{k-1}) - H(z_k) + 1e-8·(1 + |H(z_{k-1})|)`.
pub fn check_descent(trace: &SolverTrace) -> Vec<Violation> {
    let m1 = trace.m1();
    let mut prev = trace.initial_merit;
    let mut out = Vec::new();
    for s in &trace.samples {
        let lhs = m1 * s.z_gap * s.z_gap;
        let rhs = prev - s.merit + DESCENT_SLACK * (1.0 + prev.abs());
        if lhs > rhs {
            out.push(Violation { k: s.k, lhs, rhs });
        }
        prev = s.merit;
    }
    out
}

/// Iterations where `‖(A, B)‖ > M₂·gap + 1e-10`.
pub fn check_residual_bound(trace: &SolverTrace) -> Vec<Violation> {
    let m2 = trace.m2();
    trace
        .samples
        .iter()
        .filter_map(|s| {
            let rhs = m2 * s.z_gap + RESIDUAL_SLACK;
            (s.residual_norm > rhs).then_some(Violation {
                k: s.k,
                lhs: s.residual_norm,
                rhs,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearRate {
    /// `Q = exp(slope)` of `log‖x_k - x*‖` against `k`.
    pub rate: f64,
    pub r_squared: f64,
    /// Number of points used in the fit.
    pub samples: usize,
}

/// Least-squares fit of `log‖x_k - x*‖` against `k` over the tail of the run
/// (last 60% of iterates, at most 500). Needs the iterates stored in the trace.
pub fn estimate_linear_rate(trace: &SolverTrace, x_star: &DVector<f64>) -> Result<LinearRate> {
    let total = trace.iterates.len();
    let window = ((total as f64 * RATE_TAIL_FRACTION).ceil() as usize).min(RATE_TAIL_CAP);
    let mut points = Vec::with_capacity(window);
    for (k, x) in trace.iterates.iter().enumerate().skip(total - window) {
        check_dim(x_star.len(), x.len())?;
        let d = (x - x_star).norm();
        if d > 0.0 && d.is_finite() {
            points.push((k as f64, d.ln()));
        }
    }
    if points.len() < MIN_RATE_SAMPLES {
        return Err(Error::InsufficientData {
            usable: points.len(),
            required: MIN_RATE_SAMPLES,
        });
    }

    let n = points.len() as f64;
    let mean_k = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut skk, mut sky, mut syy) = (0.0, 0.0, 0.0);
    for (k, y) in &points {
        skk += (k - mean_k) * (k - mean_k);
        sky += (k - mean_k) * (y - mean_y);
        syy += (y - mean_y) * (y - mean_y);
    }
    let slope = sky / skk;
    let r_squared = if syy > 0.0 {
        sky * sky / (skk * syy)
    } else {
        1.0
    };
    Ok(LinearRate {
        rate: slope.exp(),
        r_squared,
        samples: points.len(),
    })
}
