use nalgebra::DVector;

use super::{termination_ratio, Progress, RunReport, SolverConfig, TerminationReason};
use crate::error::{Error, Result};
use crate::merit::{MeritSample, SolverTrace};
use crate::problem::{CompositeProblem, NonsmoothPart, SmoothPart};

/// Inertial Tseng forward-backward-forward splitting:
///
/// ```text
/// p_{k+1} = Prox_{λ′f}(x_k - λ′∇g(x_k) + α(x_k - x_{k-1}))
/// x_{k+1} = p_{k+1} + λ′(∇g(x_k) - ∇g(p_{k+1}))
/// ```
///
/// `x_{k+1}` generally leaves `dom f`, so the reported point and objective are
/// those of the last `p_{k+1}`. Trace samples carry the objective and step gaps;
/// the FRB-specific merit and residual columns are NaN.
pub fn itseng_solve<S: SmoothPart, N: NonsmoothPart>(
    problem: &CompositeProblem<S, N>,
    x0: &DVector<f64>,
    config: &SolverConfig,
) -> Result<RunReport> {
    config.validate_common()?;
    problem.check_vector(x0)?;
    let lambda = config.lambda;
    let alpha = config.inertia_alpha;
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "step size must be positive, got {lambda}"
        )));
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!(
            "inertia alpha must lie in [0, 1), got {alpha}"
        )));
    }

    let smooth = problem.smooth();
    let initial_objective = problem.evaluate_objective(x0)?;
    let mut trace = SolverTrace::new(lambda, smooth.lipschitz(), initial_objective);
    if config.keep_iterates {
        trace.iterates.push(x0.clone());
    }

    let mut x_prev = x0.clone();
    let mut x_curr = x0.clone();
    let mut grad_curr = smooth.gradient(x0);
    let mut best_x = x0.clone();
    let mut objective = initial_objective;
    let mut progress = Progress::new(config);
    let mut reason = TerminationReason::MaxIter;
    let mut k = 0;
    while k < config.max_iter {
        let mut point = x_curr.clone();
        point.axpy(-lambda, &grad_curr, 1.0);
        point.axpy(alpha, &(&x_curr - &x_prev), 1.0);
        let p = problem.nonsmooth().prox(&point, lambda)?;
        problem.check_vector(&p)?;
        let (smooth_p, grad_p) = smooth.value_and_gradient(&p);
        let mut x_next = p.clone();
        x_next.axpy(lambda, &(&grad_curr - &grad_p), 1.0);
        let grad_next = smooth.gradient(&x_next);
        k += 1;

        objective = problem.nonsmooth().value(&p) + smooth_p;
        let step = (&x_next - &x_curr).norm_squared();
        let prev_step = (&x_curr - &x_prev).norm_squared();
        trace.samples.push(MeritSample {
            k: k - 1,
            merit: f64::NAN,
            z_gap: (step + prev_step).sqrt(),
            residual_norm: f64::NAN,
            objective,
        });
        if config.keep_iterates {
            trace.iterates.push(p.clone());
        }

        let ratio = termination_ratio(&x_next, &x_curr, &x_prev);
        best_x = p;
        x_prev = std::mem::replace(&mut x_curr, x_next);
        grad_curr = grad_next;
        if let Some(r) = progress.update(ratio) {
            reason = r;
            break;
        }
    }

    Ok(RunReport {
        final_x: best_x,
        iterations: k,
        terminal_objective: objective,
        termination_reason: reason,
        trace,
    })
}
