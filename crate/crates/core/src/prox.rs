//! Closed-form projections and proximal operators.

use std::cmp::Ordering;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{check_dim, Error, Result};

/// Condition estimate of `A·Aᵀ` above which the factorization is rejected.
const MAX_GRAM_CONDITION: f64 = 1e12;

/// Componentwise clamp of `z` to `[-l, l]`.
pub fn project_box(z: &DVector<f64>, l: f64) -> DVector<f64> {
    z.map(|v| v.clamp(-l, l))
}

/// Soft thresholding, the proximal map of `τ‖·‖₁`.
pub fn prox_l1(z: &DVector<f64>, tau: f64) -> DVector<f64> {
    z.map(|v| v.signum() * (v.abs() - tau).max(0.0))
}

/// `D = {x : ‖x‖₀ ≤ r, ‖x‖∞ ≤ l}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparseBoxSet {
    r: usize,
    l: f64,
}

impl SparseBoxSet {
    pub fn new(r: usize, l: f64) -> Result<Self> {
        if r == 0 {
            return Err(Error::InvalidArgument(
                "sparsity budget r must be at least 1".into(),
            ));
        }
        if !(l > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "box radius l must be positive, got {l}"
            )));
        }
        Ok(Self { r, l })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    /// Exact membership test.
    pub fn contains(&self, x: &DVector<f64>) -> bool {
        let mut nnz = 0;
        for v in x.iter() {
            if v.abs() > self.l || v.is_nan() {
                return false;
            }
            if *v != 0.0 {
                nnz += 1;
            }
        }
        nnz <= self.r
    }
}

/// One element of `Proj_D(z)`.
///
/// Each coordinate is first clamped to the box, `t_i = clamp(z_i, -l, l)`, and
/// scored by `v_i = z_i² - (t_i - z_i)²`, the decrease in squared distance from
/// keeping coordinate `i` instead of zeroing it. The `r` highest scores keep
/// their clamped values and the rest are set to zero. Ties are broken towards
/// the lowest index.
pub fn project_sparse_box(z: &DVector<f64>, set: &SparseBoxSet) -> Result<DVector<f64>> {
    let n = z.len();
    if set.r > n {
        return Err(Error::InvalidArgument(format!(
            "sparsity budget r = {} exceeds dimension n = {n}",
            set.r
        )));
    }
    let clamped = project_box(z, set.l);
    let scores: Vec<f64> = z
        .iter()
        .zip(clamped.iter())
        .map(|(zi, ti)| zi * zi - (ti - zi) * (ti - zi))
        .collect();

    let mut order: Vec<usize> = (0..n).collect();
    let by_score =
        |a: &usize, b: &usize| -> Ordering { scores[*b].total_cmp(&scores[*a]).then(a.cmp(b)) };
    if set.r < n {
        order.select_nth_unstable_by(set.r - 1, by_score);
    }

    let mut out = DVector::zeros(n);
    for &i in &order[..set.r] {
        out[i] = clamped[i];
    }
    Ok(out)
}

/// Affine subspace `C = {x : A·x = b}` for a full-row-rank `A` (`m ≤ n`).
///
/// The Cholesky factor of `A·Aᵀ` is computed once, and from it the
/// pseudoinverse `A† = Aᵀ(A·Aᵀ)⁻¹`, which every projection reuses.
#[derive(Debug, Clone)]
pub struct AffineSet {
    a: DMatrix<f64>,
    b: DVector<f64>,
    gram_factor: Cholesky<f64, Dyn>,
    pinv: DMatrix<f64>,
}

impl AffineSet {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        let (m, n) = a.shape();
        check_dim(m, b.len())?;
        if m == 0 || m > n {
            return Err(Error::InvalidArgument(format!(
                "affine set needs 1 <= m <= n, got {m}x{n}"
            )));
        }
        let gram = &a * a.transpose();
        let Some(gram_factor) = gram.clone().cholesky() else {
            return Err(Error::RankDeficient {
                condition_estimate: f64::INFINITY,
            });
        };
        let diag = gram_factor.l_dirty().diagonal();
        let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), d| {
            (lo.min(*d), hi.max(*d))
        });
        let condition_estimate = (hi / lo).powi(2);
        if !(condition_estimate < MAX_GRAM_CONDITION) {
            return Err(Error::RankDeficient { condition_estimate });
        }
        // (A·Aᵀ)⁻¹·A, transposed
        let pinv = gram_factor.solve(&a).transpose();
        Ok(Self {
            a,
            b,
            gram_factor,
            pinv,
        })
    }

    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn gram_factor(&self) -> &Cholesky<f64, Dyn> {
        &self.gram_factor
    }

    /// `A† = Aᵀ(A·Aᵀ)⁻¹`.
    pub fn pseudoinverse(&self) -> &DMatrix<f64> {
        &self.pinv
    }

    /// `A·z - b`.
    pub fn residual(&self, z: &DVector<f64>) -> DVector<f64> {
        let mut r = self.b.clone();
        r.gemv(1.0, &self.a, z, -1.0);
        r
    }

    /// `z - Proj_C(z) = A†(A·z - b)`, computed without the cancellation of
    /// subtracting the projection from `z`.
    pub fn offset(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.pinv * self.residual(z)
    }

    /// `Proj_C(z) = z - Aᵀ(A·Aᵀ)⁻¹(A·z - b)`.
    pub fn project(&self, z: &DVector<f64>) -> DVector<f64> {
        z - self.offset(z)
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.residual(x).norm() <= tol * (1.0 + self.b.norm())
    }
}
