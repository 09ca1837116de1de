use nalgebra::DVector;

use super::{
    frb_stepsize_bound, termination_ratio, Progress, RunReport, SolverConfig, TerminationReason,
};
use crate::error::{Error, Result};
use crate::merit::{residual_pair, MeritSample, SolverTrace};
use crate::problem::{CompositeProblem, NonsmoothPart, SmoothPart};

/// The two most recent FRB iterates with their cached gradients.
///
/// `grad_curr = ∇g(x_curr)` and `grad_prev = ∇g(x_prev)` always hold, so a
/// step only ever evaluates the gradient at the new point.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateState {
    pub x_curr: DVector<f64>,
    pub x_prev: DVector<f64>,
    pub grad_curr: DVector<f64>,
    pub grad_prev: DVector<f64>,
    /// `g(x_curr)`, returned alongside the gradient.
    pub smooth_curr: f64,
    pub k: usize,
}

impl IterateState {
    /// Starts from `x_{-1} = x_0`, so the first reflection term vanishes.
    pub fn new<S: SmoothPart, N: NonsmoothPart>(
        problem: &CompositeProblem<S, N>,
        x0: DVector<f64>,
    ) -> Result<Self> {
        problem.check_vector(&x0)?;
        let (smooth_curr, grad_curr) = problem.smooth().value_and_gradient(&x0);
        Ok(Self {
            x_prev: x0.clone(),
            x_curr: x0,
            grad_prev: grad_curr.clone(),
            grad_curr,
            smooth_curr,
            k: 0,
        })
    }
}

/// One FRB iteration:
/// `x_{k+1} = Prox_{λf}(x_k - λ(2∇g(x_k) - ∇g(x_{k-1})))`.
pub fn frb_step<S: SmoothPart, N: NonsmoothPart>(
    state: IterateState,
    problem: &CompositeProblem<S, N>,
    lambda: f64,
) -> Result<IterateState> {
    let IterateState {
        x_curr,
        grad_curr,
        grad_prev,
        k,
        ..
    } = state;
    // x_k - λ(2∇g(x_k) - ∇g(x_{k-1}))
    let mut point = x_curr.clone();
    point.axpy(-2.0 * lambda, &grad_curr, 1.0);
    point.axpy(lambda, &grad_prev, 1.0);
    let x_next = problem.nonsmooth().prox(&point, lambda)?;
    problem.check_vector(&x_next)?;
    let (smooth_next, grad_next) = problem.smooth().value_and_gradient(&x_next);
    Ok(IterateState {
        x_prev: x_curr,
        x_curr: x_next,
        grad_prev: grad_curr,
        grad_curr: grad_next,
        smooth_curr: smooth_next,
        k: k + 1,
    })
}

/// Runs FRB from `x0` (with `x_{-1} = x0`) until the step-gap rule fires,
/// progress stagnates or `max_iter` steps have been taken.
///
/// Every step is recorded in the trace together with the merit value
/// `H(z_k)`, the product-norm gap `‖z_k - z_{k-1}‖` and the residual norm
/// `‖(A_{k+1}, B_{k+1})‖`, none of which need extra oracle calls.
pub fn frb_solve<S: SmoothPart, N: NonsmoothPart>(
    problem: &CompositeProblem<S, N>,
    x0: &DVector<f64>,
    config: &SolverConfig,
) -> Result<RunReport> {
    config.validate_common()?;
    let lambda = config.lambda;
    let lipschitz = problem.smooth().lipschitz();
    let bound = frb_stepsize_bound(lipschitz, problem.nonsmooth().prox_threshold());
    if !(lambda > 0.0) || (config.enforce_stepsize_rule && !(lambda < bound)) {
        return Err(Error::StepSize { lambda, bound });
    }

    let mut state = IterateState::new(problem, x0.clone())?;
    let initial_objective = problem.evaluate_objective(x0)?;
    let mut trace = SolverTrace::new(lambda, lipschitz, initial_objective);
    if config.keep_iterates {
        trace.iterates.push(x0.clone());
    }

    let mut objective = initial_objective;
    let mut progress = Progress::new(config);
    let mut reason = TerminationReason::MaxIter;
    while state.k < config.max_iter {
        let x_prev = state.x_prev.clone();
        let grad_prev = state.grad_prev.clone();
        state = frb_step(state, problem, lambda)?;
        // after the step: x_curr = x_{k+1}, x_prev = x_k, and x_prev/grad_prev above hold x_{k-1}
        let (x_next, x_curr) = (&state.x_curr, &state.x_prev);

        objective = problem.nonsmooth().value(x_next) + state.smooth_curr;
        let step = (x_next - x_curr).norm_squared();
        let prev_step = (x_curr - &x_prev).norm_squared();
        let (a, b) = residual_pair(
            x_next,
            x_curr,
            &state.grad_curr,
            &state.grad_prev,
            &grad_prev,
            lambda,
        );
        trace.samples.push(MeritSample {
            k: state.k - 1,
            merit: objective + step / (4.0 * lambda),
            z_gap: (step + prev_step).sqrt(),
            residual_norm: (a.norm_squared() + b.norm_squared()).sqrt(),
            objective,
        });
        if config.keep_iterates {
            trace.iterates.push(x_next.clone());
        }

        if let Some(r) = progress.update(termination_ratio(x_next, x_curr, &x_prev)) {
            reason = r;
            break;
        }
    }

    Ok(RunReport {
        iterations: state.k,
        final_x: state.x_curr,
        terminal_objective: objective,
        termination_reason: reason,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{AffineDistance, HalfSquaredNorm, NoNonsmooth, SparseBoxIndicator};
    use crate::prox::{project_sparse_box, AffineSet, SparseBoxSet};
    use nalgebra::DMatrix;
    use std::cell::Cell;

    fn quadratic(n: usize) -> CompositeProblem<HalfSquaredNorm, NoNonsmooth> {
        CompositeProblem::new(HalfSquaredNorm::new(n), NoNonsmooth::new(n)).unwrap()
    }

    #[test]
    fn reflection_vanishes_on_first_step() {
        let p = quadratic(3);
        let x0 = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let lambda = 0.2;
        let next = frb_step(IterateState::new(&p, x0.clone()).unwrap(), &p, lambda).unwrap();
        assert_eq!(next.x_curr, &x0 * (1.0 - lambda));
        assert_eq!(next.x_prev, x0);
        assert_eq!(next.grad_curr, next.x_curr);
        assert_eq!(next.k, 1);
    }

    fn small_instance() -> (AffineSet, SparseBoxSet) {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 0.5, -1.0, 0.0, 3.0]);
        let b = DVector::from_vec(vec![1.0, 2.0]);
        (
            AffineSet::new(a, b).unwrap(),
            SparseBoxSet::new(1, 10.0).unwrap(),
        )
    }

    #[test]
    fn first_step_matches_transcription_on_2x3() {
        let (set, sparse) = small_instance();
        let p = CompositeProblem::new(
            AffineDistance::new(set.clone()),
            SparseBoxIndicator::new(3, sparse).unwrap(),
        )
        .unwrap();
        let lambda = 0.2;
        let x0 = DVector::zeros(3);
        let got = frb_step(IterateState::new(&p, x0.clone()).unwrap(), &p, lambda)
            .unwrap()
            .x_curr;

        // y = x0 + λ(∇g(x_{-1}) - ∇g(x0)), x1 = Proj_D(y - λ∇g(x0)), ∇g(x) = x - Proj_C(x)
        let grad = |x: &DVector<f64>| x - set.project(x);
        let y = &x0 + (grad(&x0) - grad(&x0)) * lambda;
        let expected = project_sparse_box(&(&y - grad(&x0) * lambda), &sparse).unwrap();
        assert!((got - expected).norm() < 1e-14);
    }

    #[test]
    fn generic_step_matches_feasibility_closed_form() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let (m, n) = (6, 12);
        let a = DMatrix::from_fn(m, n, |_, _| StandardNormal.sample(&mut rng));
        let b = DVector::from_fn(m, |_, _| StandardNormal.sample(&mut rng));
        let set = AffineSet::new(a.clone(), b.clone()).unwrap();
        let sparse = SparseBoxSet::new(2, 1e6).unwrap();
        let p = CompositeProblem::new(
            AffineDistance::new(set.clone()),
            SparseBoxIndicator::new(n, sparse).unwrap(),
        )
        .unwrap();
        let pinv = set.pseudoinverse();
        let lambda = 0.9999 * 0.25;
        for _ in 0..20 {
            let x_prev = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
            let x_curr = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
            let state = IterateState {
                grad_curr: p.smooth().gradient(&x_curr),
                grad_prev: p.smooth().gradient(&x_prev),
                smooth_curr: p.smooth().value(&x_curr),
                x_curr: x_curr.clone(),
                x_prev: x_prev.clone(),
                k: 0,
            };
            let generic = frb_step(state, &p, lambda).unwrap().x_curr;
            // Proj_D(x_k - λA†A(2x_k - x_{k-1}) + λA†b)
            let arg =
                &x_curr - pinv * (&a * (&x_curr * 2.0 - &x_prev)) * lambda + pinv * &b * lambda;
            let special = project_sparse_box(&arg, &sparse).unwrap();
            assert!((generic - special).amax() <= 1e-10);
        }
    }

    #[test]
    fn zero_iterations_returns_start() {
        let p = quadratic(2);
        let x0 = DVector::from_vec(vec![1.0, 1.0]);
        let report = frb_solve(&p, &x0, &SolverConfig::frb(0.2).with_max_iter(0)).unwrap();
        assert_eq!(report.final_x, x0);
        assert_eq!(report.iterations, 0);
        assert_eq!(report.termination_reason, TerminationReason::MaxIter);
        assert_eq!(report.terminal_objective, 1.0);
        assert!(report.trace.samples.is_empty());
    }

    #[test]
    fn stepsize_rule_is_enforced() {
        let p = quadratic(2);
        let x0 = DVector::zeros(2);
        let err = frb_solve(&p, &x0, &SolverConfig::frb(0.3)).unwrap_err();
        assert!(
            matches!(err, Error::StepSize { bound, .. } if bound == 0.25),
            "{err}"
        );
        assert!(frb_solve(&p, &x0, &SolverConfig::frb(0.25)).is_err());
        assert!(frb_solve(&p, &x0, &SolverConfig::frb(0.3).unenforced()).is_ok());
        assert!(frb_solve(&p, &x0, &SolverConfig::frb(0.0).unenforced()).is_err());
    }

    #[test]
    fn quadratic_converges_to_origin() {
        let p = quadratic(4);
        let x0 = DVector::from_element(4, 3.0);
        let report = frb_solve(&p, &x0, &SolverConfig::frb(0.2)).unwrap();
        assert_eq!(report.termination_reason, TerminationReason::ToleranceMet);
        assert!(report.final_x.norm() < 1e-7);
        assert_eq!(report.trace.samples.len(), report.iterations);
    }

    struct Counting<S> {
        inner: S,
        gradients: Cell<usize>,
    }

    impl<S: SmoothPart> SmoothPart for Counting<S> {
        fn dim(&self) -> usize {
            self.inner.dim()
        }
        fn value(&self, x: &DVector<f64>) -> f64 {
            self.inner.value(x)
        }
        fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
            self.gradients.set(self.gradients.get() + 1);
            self.inner.gradient(x)
        }
        fn value_and_gradient(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
            self.gradients.set(self.gradients.get() + 1);
            self.inner.value_and_gradient(x)
        }
        fn lipschitz(&self) -> f64 {
            self.inner.lipschitz()
        }
    }

    #[test]
    fn one_gradient_per_step() {
        let g = Counting {
            inner: HalfSquaredNorm::new(3),
            gradients: Cell::new(0),
        };
        let p = CompositeProblem::new(g, NoNonsmooth::new(3)).unwrap();
        let report = frb_solve(
            &p,
            &DVector::from_element(3, 1.0),
            &SolverConfig::frb(0.2).with_max_iter(17),
        )
        .unwrap();
        assert_eq!(report.iterations, 17);
        assert_eq!(p.smooth().gradients.get(), 1 + 17);
    }
}
