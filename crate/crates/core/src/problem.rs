//! Oracle interfaces for the composite objective `F = f + g`.
//!
//! `g` ([`SmoothPart`]) is differentiable with an `L`-Lipschitz gradient, `f`
//! ([`NonsmoothPart`]) is proper, lower semicontinuous and prox-bounded. Values of
//! `f` are extended reals: `f64::INFINITY` marks points outside `dom f`.

use nalgebra::DVector;

use crate::error::{check_dim, Result};

/// Smooth part `g` of the objective.
pub trait SmoothPart {
    fn dim(&self) -> usize;

    fn value(&self, x: &DVector<f64>) -> f64;

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;

    /// `(g(x), ∇g(x))` in one oracle call. Solvers use this so that each new
    /// iterate costs exactly one gradient evaluation; implementations where the
    /// value falls out of the gradient computation should override it.
    fn value_and_gradient(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        (self.value(x), self.gradient(x))
    }

    /// Lipschitz constant of `∇g`.
    fn lipschitz(&self) -> f64;

    /// `Prox_{γg}(z)`, when available in closed form. Only Douglas-Rachford needs it.
    fn prox(&self, _z: &DVector<f64>, _gamma: f64) -> Option<DVector<f64>> {
        None
    }
}

/// Nonsmooth part `f` of the objective.
pub trait NonsmoothPart {
    fn dim(&self) -> usize;

    /// `f(x)`, possibly `+∞`.
    fn value(&self, x: &DVector<f64>) -> f64;

    /// One deterministic element of `Prox_{λf}(z)`. The mapping may be
    /// set-valued when `f` is nonconvex; each implementation documents which
    /// element it returns.
    fn prox(&self, z: &DVector<f64>, lambda: f64) -> Result<DVector<f64>>;

    /// Prox-boundedness threshold `λ_f` (`+∞` for indicators and convex `f`).
    fn prox_threshold(&self) -> f64;
}

/// `F = f + g` over `R^dim`. Immutable once built.
#[derive(Debug, Clone)]
pub struct CompositeProblem<S, N> {
    dim: usize,
    smooth: S,
    nonsmooth: N,
}

impl<S: SmoothPart, N: NonsmoothPart> CompositeProblem<S, N> {
    pub fn new(smooth: S, nonsmooth: N) -> Result<Self> {
        let dim = smooth.dim();
        check_dim(dim, nonsmooth.dim())?;
        Ok(Self {
            dim,
            smooth,
            nonsmooth,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn smooth(&self) -> &S {
        &self.smooth
    }

    pub fn nonsmooth(&self) -> &N {
        &self.nonsmooth
    }

    /// `F(x) = f(x) + g(x)`; `+∞` exactly when `f(x) = +∞`.
    pub fn evaluate_objective(&self, x: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        let f = self.nonsmooth.value(x);
        if f == f64::INFINITY {
            return Ok(f64::INFINITY);
        }
        Ok(f + self.smooth.value(x))
    }

    pub(crate) fn check_vector(&self, x: &DVector<f64>) -> Result<()> {
        check_dim(self.dim, x.len())
    }
}
