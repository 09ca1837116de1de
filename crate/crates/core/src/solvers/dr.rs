use nalgebra::DVector;

use super::{
    termination_ratio, Progress, RunReport, SolverConfig, TerminationReason,
    DEFAULT_DR_GAMMA_OVER_L,
};
use crate::error::{Error, Result};
use crate::merit::{MeritSample, SolverTrace};
use crate::problem::{CompositeProblem, NonsmoothPart, SmoothPart};

/// Fixed-step Douglas-Rachford splitting, smooth part first:
///
/// ```text
/// y_{t+1} = Prox_{γg}(z_t)
/// x_{t+1} = Prox_{γf}(2y_{t+1} - z_t)
/// z_{t+1} = z_t + x_{t+1} - y_{t+1}
/// ```
///
/// The termination rule is applied to the governing sequence `z_t`; the
/// reported point is the last `x_{t+1}`. Requires [`SmoothPart::prox`].
pub fn dr_solve<S: SmoothPart, N: NonsmoothPart>(
    problem: &CompositeProblem<S, N>,
    z0: &DVector<f64>,
    config: &SolverConfig,
) -> Result<RunReport> {
    config.validate_common()?;
    problem.check_vector(z0)?;
    let smooth = problem.smooth();
    let lipschitz = smooth.lipschitz();
    let gamma = config.dr_gamma.unwrap_or_else(|| {
        if lipschitz > 0.0 {
            DEFAULT_DR_GAMMA_OVER_L / lipschitz
        } else {
            DEFAULT_DR_GAMMA_OVER_L
        }
    });
    if !(gamma > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "DR step gamma must be positive, got {gamma}"
        )));
    }
    let unsupported = || Error::Unsupported("smooth part has no closed-form proximal map".into());
    smooth.prox(z0, gamma).ok_or_else(unsupported)?;

    let initial_objective = problem.evaluate_objective(z0)?;
    let mut trace = SolverTrace::new(gamma, lipschitz, initial_objective);
    if config.keep_iterates {
        trace.iterates.push(z0.clone());
    }

    let mut z_prev = z0.clone();
    let mut z_curr = z0.clone();
    let mut x = z0.clone();
    let mut objective = initial_objective;
    let mut progress = Progress::new(config);
    let mut reason = TerminationReason::MaxIter;
    let mut t = 0;
    while t < config.max_iter {
        let y = smooth.prox(&z_curr, gamma).ok_or_else(unsupported)?;
        x = problem.nonsmooth().prox(&(&y * 2.0 - &z_curr), gamma)?;
        problem.check_vector(&x)?;
        let z_next = &z_curr + &x - &y;
        t += 1;

        objective = problem.evaluate_objective(&x)?;
        let step = (&z_next - &z_curr).norm_squared();
        let prev_step = (&z_curr - &z_prev).norm_squared();
        trace.samples.push(MeritSample {
            k: t - 1,
            merit: f64::NAN,
            z_gap: (step + prev_step).sqrt(),
            residual_norm: f64::NAN,
            objective,
        });
        if config.keep_iterates {
            trace.iterates.push(x.clone());
        }

        let ratio = termination_ratio(&z_next, &z_curr, &z_prev);
        z_prev = std::mem::replace(&mut z_curr, z_next);
        if let Some(r) = progress.update(ratio) {
            reason = r;
            break;
        }
    }

    Ok(RunReport {
        final_x: x,
        iterations: t,
        terminal_objective: objective,
        termination_reason: reason,
        trace,
    })
}
