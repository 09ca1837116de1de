//! Concrete smooth and nonsmooth parts.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::problem::{NonsmoothPart, SmoothPart};
use crate::prox::{project_sparse_box, prox_l1, AffineSet, SparseBoxSet};

/// `g(x) = ½ dist²(x, C)` for an affine set `C`; `∇g(x) = x - Proj_C(x)`, `L = 1`.
#[derive(Debug, Clone)]
pub struct AffineDistance {
    set: AffineSet,
}

impl AffineDistance {
    pub fn new(set: AffineSet) -> Self {
        Self { set }
    }

    pub fn set(&self) -> &AffineSet {
        &self.set
    }
}

impl SmoothPart for AffineDistance {
    fn dim(&self) -> usize {
        self.set.dim()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * self.set.offset(x).norm_squared()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.set.offset(x)
    }

    fn value_and_gradient(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let grad = self.set.offset(x);
        (0.5 * grad.norm_squared(), grad)
    }

    fn lipschitz(&self) -> f64 {
        1.0
    }

    /// `(z + γ·Proj_C(z)) / (1 + γ)`.
    fn prox(&self, z: &DVector<f64>, gamma: f64) -> Option<DVector<f64>> {
        Some(z - self.set.offset(z) * (gamma / (1.0 + gamma)))
    }
}

/// `g(x) = ½‖A·x - b‖²` with `L = λ_max(AᵀA)`.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    a: DMatrix<f64>,
    b: DVector<f64>,
    normal: DMatrix<f64>,
    atb: DVector<f64>,
    lipschitz: f64,
}

impl LeastSquares {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        check_dim(a.nrows(), b.len())?;
        let normal = a.transpose() * &a;
        let atb = a.transpose() * &b;
        let lipschitz = normal.clone().symmetric_eigenvalues().max().max(0.0);
        Ok(Self {
            a,
            b,
            normal,
            atb,
            lipschitz,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.b
    }

    fn residual(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut r = self.b.clone();
        r.gemv(1.0, &self.a, x, -1.0);
        r
    }
}

impl SmoothPart for LeastSquares {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * self.residual(x).norm_squared()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.a.tr_mul(&self.residual(x))
    }

    fn value_and_gradient(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let r = self.residual(x);
        (0.5 * r.norm_squared(), self.a.tr_mul(&r))
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// `(I + γAᵀA)⁻¹(z + γAᵀb)`.
    fn prox(&self, z: &DVector<f64>, gamma: f64) -> Option<DVector<f64>> {
        let n = self.dim();
        let lhs = DMatrix::identity(n, n) + &self.normal * gamma;
        let rhs = z + &self.atb * gamma;
        lhs.cholesky().map(|c| c.solve(&rhs))
    }
}

/// `g(x) = ½‖x‖²`.
#[derive(Debug, Clone, Copy)]
pub struct HalfSquaredNorm {
    dim: usize,
}

impl HalfSquaredNorm {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl SmoothPart for HalfSquaredNorm {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.norm_squared()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        x.clone()
    }

    fn lipschitz(&self) -> f64 {
        1.0
    }

    fn prox(&self, z: &DVector<f64>, gamma: f64) -> Option<DVector<f64>> {
        Some(z / (1.0 + gamma))
    }
}

/// `g ≡ 0`. Its gradient is constant, so the reported Lipschitz constant is 0.
#[derive(Debug, Clone, Copy)]
pub struct ZeroSmooth {
    dim: usize,
}

impl ZeroSmooth {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl SmoothPart for ZeroSmooth {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, _x: &DVector<f64>) -> f64 {
        0.0
    }

    fn gradient(&self, _x: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(self.dim)
    }

    fn lipschitz(&self) -> f64 {
        0.0
    }

    fn prox(&self, z: &DVector<f64>, _gamma: f64) -> Option<DVector<f64>> {
        Some(z.clone())
    }
}

/// `f ≡ 0`; the prox is the identity.
#[derive(Debug, Clone, Copy)]
pub struct NoNonsmooth {
    dim: usize,
}

impl NoNonsmooth {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl NonsmoothPart for NoNonsmooth {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, _x: &DVector<f64>) -> f64 {
        0.0
    }

    fn prox(&self, z: &DVector<f64>, _lambda: f64) -> Result<DVector<f64>> {
        check_dim(self.dim, z.len())?;
        Ok(z.clone())
    }

    fn prox_threshold(&self) -> f64 {
        f64::INFINITY
    }
}

/// `f(x) = τ‖x‖₁`.
#[derive(Debug, Clone, Copy)]
pub struct L1Norm {
    dim: usize,
    weight: f64,
}

impl L1Norm {
    pub fn new(dim: usize, weight: f64) -> Result<Self> {
        if !(weight > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "l1 weight must be positive, got {weight}"
            )));
        }
        Ok(Self { dim, weight })
    }
}

impl NonsmoothPart for L1Norm {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        self.weight * x.lp_norm(1)
    }

    fn prox(&self, z: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
        check_dim(self.dim, z.len())?;
        Ok(prox_l1(z, lambda * self.weight))
    }

    fn prox_threshold(&self) -> f64 {
        f64::INFINITY
    }
}

/// Indicator `δ_D` of a [`SparseBoxSet`]. Its prox is `Proj_D` for every `λ`,
/// with the tie-breaking of [`project_sparse_box`].
#[derive(Debug, Clone, Copy)]
pub struct SparseBoxIndicator {
    dim: usize,
    set: SparseBoxSet,
}

impl SparseBoxIndicator {
    pub fn new(dim: usize, set: SparseBoxSet) -> Result<Self> {
        if set.r() > dim {
            return Err(Error::InvalidArgument(format!(
                "sparsity budget r = {} exceeds dimension n = {dim}",
                set.r()
            )));
        }
        Ok(Self { dim, set })
    }

    pub fn set(&self) -> &SparseBoxSet {
        &self.set
    }
}

impl NonsmoothPart for SparseBoxIndicator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        if self.set.contains(x) {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn prox(&self, z: &DVector<f64>, _lambda: f64) -> Result<DVector<f64>> {
        check_dim(self.dim, z.len())?;
        project_sparse_box(z, &self.set)
    }

    fn prox_threshold(&self) -> f64 {
        f64::INFINITY
    }
}
