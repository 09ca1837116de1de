//! Shared fixtures for the criterion benchmarks in `benches/`.

use frb_core::harness::{generate_instance, FeasibilityInstance, FeasibilityProblem};
use frb_core::solvers::IterateState;
use frb_core::DVector;

pub const M: usize = 300;
pub const N: usize = 600;
pub const SEED: u64 = 7;

pub struct Fixture {
    pub instance: FeasibilityInstance,
    pub problem: FeasibilityProblem,
    /// A dense, mostly infeasible point for the projection kernels.
    pub probe: DVector<f64>,
    /// FRB state at the origin, the solvers' starting point.
    pub start: IterateState,
}

impl Fixture {
    pub fn new(m: usize, n: usize, seed: u64) -> frb_core::Result<Self> {
        let instance = generate_instance(m, n, seed)?;
        let problem = instance.problem()?;
        let probe = DVector::from_fn(n, |i, _| ((i * 7919) % 1013) as f64 - 506.0);
        let start = IterateState::new(&problem, DVector::zeros(n))?;
        Ok(Self {
            instance,
            problem,
            probe,
            start,
        })
    }

    pub fn standard() -> Self {
        Self::new(M, N, SEED).expect("the standard benchmark instance is valid")
    }
}
