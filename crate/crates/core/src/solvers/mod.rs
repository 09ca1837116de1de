//! FRB and the two baseline splitting solvers.
//!
//! All three share [`SolverConfig`], the relative step-gap termination rule
//! ([`stopping_criterion`]), stagnation detection and [`RunReport`].

mod dr;
mod frb;
mod tseng;

pub use dr::dr_solve;
pub use frb::{frb_solve, frb_step, IterateState};
pub use tseng::itseng_solve;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::merit::SolverTrace;

/// FRB step used by the sparse-feasibility experiments: `0.9999 · 1/4`.
pub const DEFAULT_FRB_LAMBDA: f64 = 0.9999 * 0.25;
/// Inertial Tseng step `λ′` for the sparse-feasibility experiments.
pub const DEFAULT_ITSENG_LAMBDA: f64 = 0.1316;
pub const DEFAULT_ITSENG_ALPHA: f64 = 0.125;
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 50_000;
pub const DEFAULT_STAGNATION_WINDOW: usize = 5_000;
/// Douglas-Rachford step as a multiple of `1/L`: `0.93 · (√(3/2) - 1)`, a
/// safety factor below the `√(3/2) - 1` step limit for `½dist²` to a convex set.
pub const DEFAULT_DR_GAMMA_OVER_L: f64 = 0.93 * 0.224_744_871_391_589;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Step size: `λ` for FRB, `λ′` for inertial Tseng.
    pub lambda: f64,
    pub max_iter: usize,
    pub tol: f64,
    /// Inertial weight `α ∈ [0, 1)` (inertial Tseng only).
    pub inertia_alpha: f64,
    /// Douglas-Rachford step `γ`; `None` means [`DEFAULT_DR_GAMMA_OVER_L`]` / L`.
    pub dr_gamma: Option<f64>,
    /// Reject FRB runs with `λ >= min{1/(4L), λ_f}`.
    pub enforce_stepsize_rule: bool,
    /// Stop once the termination ratio has not reached a new minimum for this
    /// many consecutive iterations.
    pub stagnation_window: usize,
    /// Keep every iterate in the trace (needed for rate fitting).
    pub keep_iterates: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda: DEFAULT_FRB_LAMBDA,
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
            inertia_alpha: DEFAULT_ITSENG_ALPHA,
            dr_gamma: None,
            enforce_stepsize_rule: true,
            stagnation_window: DEFAULT_STAGNATION_WINDOW,
            keep_iterates: false,
        }
    }
}

impl SolverConfig {
    pub fn frb(lambda: f64) -> Self {
        Self {
            lambda,
            ..Self::default()
        }
    }

    pub fn itseng(lambda: f64, alpha: f64) -> Self {
        Self {
            lambda,
            inertia_alpha: alpha,
            ..Self::default()
        }
    }

    pub fn dr(gamma: f64) -> Self {
        Self {
            dr_gamma: Some(gamma),
            ..Self::default()
        }
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_iterates(mut self) -> Self {
        self.keep_iterates = true;
        self
    }

    pub fn unenforced(mut self) -> Self {
        self.enforce_stepsize_rule = false;
        self
    }

    fn validate_common(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

/// `min{1/(4L), λ_f}`; `1/(4L)` is read as `+∞` when `L = 0`.
pub fn frb_stepsize_bound(lipschitz: f64, prox_threshold: f64) -> f64 {
    let smooth_bound = if lipschitz > 0.0 {
        0.25 / lipschitz
    } else {
        f64::INFINITY
    };
    smooth_bound.min(prox_threshold)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminationReason {
    ToleranceMet,
    MaxIter,
    Stagnation,
}

impl TerminationReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::ToleranceMet => "tolerance_met",
            Self::MaxIter => "max_iter",
            Self::Stagnation => "stagnation",
        }
    }
}

impl std::fmt::Display for TerminationReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub final_x: DVector<f64>,
    pub iterations: usize,
    pub terminal_objective: f64,
    pub termination_reason: TerminationReason,
    pub trace: SolverTrace,
}

/// `max{‖x⁺ - x‖, ‖x - x⁻‖} / max{1, ‖x⁺‖, ‖x‖, ‖x⁻‖}`.
pub fn termination_ratio(
    x_next: &DVector<f64>,
    x_curr: &DVector<f64>,
    x_prev: &DVector<f64>,
) -> f64 {
    let num = (x_next - x_curr).norm().max((x_curr - x_prev).norm());
    let den = 1f64
        .max(x_next.norm())
        .max(x_curr.norm())
        .max(x_prev.norm());
    num / den
}

/// True iff the relative step gap of three consecutive iterates is strictly below `tol`.
pub fn stopping_criterion(
    x_next: &DVector<f64>,
    x_curr: &DVector<f64>,
    x_prev: &DVector<f64>,
    tol: f64,
) -> bool {
    termination_ratio(x_next, x_curr, x_prev) < tol
}

/// Tracks the termination ratio across iterations.
#[derive(Debug)]
pub(crate) struct Progress {
    tol: f64,
    window: usize,
    best: f64,
    since_best: usize,
}

impl Progress {
    pub(crate) fn new(config: &SolverConfig) -> Self {
        Self {
            tol: config.tol,
            window: config.stagnation_window,
            best: f64::INFINITY,
            since_best: 0,
        }
    }

    pub(crate) fn update(&mut self, ratio: f64) -> Option<TerminationReason> {
        if ratio < self.tol {
            return Some(TerminationReason::ToleranceMet);
        }
        if ratio < self.best {
            self.best = ratio;
            self.since_best = 0;
        } else {
            self.since_best += 1;
            if self.window > 0 && self.since_best >= self.window {
                return Some(TerminationReason::Stagnation);
            }
        }
        None
    }
}
