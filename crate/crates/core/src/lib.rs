//! Forward-reflected-backward (FRB) splitting for nonconvex composite problems
//! `min F(x) = f(x) + g(x)`, where `g` has a Lipschitz gradient and `f` is only
//! required to have a computable proximal mapping.
//!
//! The crate is organised around a small number of pieces:
//!
//! * [`problem`]: the [`SmoothPart`] / [`NonsmoothPart`] oracle traits and the
//!   [`CompositeProblem`] pairing them.
//! * [`prox`] and [`functions`]: closed-form projections (box, sparse box, affine
//!   subspace) and the concrete smooth/nonsmooth parts built on top of them.
//! * [`solvers`]: FRB plus the fixed-step Douglas-Rachford and inertial Tseng
//!   baselines, sharing one termination rule.
//! * [`merit`]: the FRB merit function, the subgradient residual and the
//!   certificate checks run over a [`SolverTrace`].
//! * [`harness`]: random sparse-feasibility instances and the solver comparison
//!   suite.

// Parameter checks are written as `!(x > 0.0)` on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod functions;
pub mod harness;
pub mod merit;
pub mod problem;
pub mod prox;
pub mod solvers;

pub use error::{Error, Result};
pub use functions::{
    AffineDistance, HalfSquaredNorm, L1Norm, LeastSquares, NoNonsmooth, SparseBoxIndicator,
    ZeroSmooth,
};
pub use harness::{
    generate_instance, read_report, run_suite, run_suite_with, run_trial, run_trial_report,
    write_report, BenchReport, BenchRow, FeasibilityInstance, InstanceDescriptor, SolverKind,
    TrialResult,
};
pub use merit::{
    check_descent, check_residual_bound, estimate_linear_rate, frb_residual, merit_value,
    LinearRate, MeritSample, SolverTrace,
};
pub use problem::{CompositeProblem, NonsmoothPart, SmoothPart};
pub use prox::{project_box, project_sparse_box, prox_l1, AffineSet, SparseBoxSet};
pub use solvers::{
    dr_solve, frb_solve, frb_step, itseng_solve, stopping_criterion, IterateState, RunReport,
    SolverConfig, TerminationReason,
};

pub use nalgebra::{DMatrix, DVector};
