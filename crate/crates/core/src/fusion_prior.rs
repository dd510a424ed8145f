//! Merged design and prior covariances for a given fusion indicator.
//!
//! For an indicator `δ` with `p1` ones the coefficients fall into `p1 + 1`
//! contiguous blocks. The merged design `X_δ` has one column per block (the
//! sum of the original columns in it), the block coefficients `β_δ` carry the
//! g-prior covariance `B0 = g (X_δᵀX_δ)⁻¹`, and the retained differences
//! `γ_δ = D β_δ` inherit `H0 = D B0 Dᵀ`, written entrywise as
//!
//! ```text
//! α_ij = z_(i+1)(j+1) − z_(i+1)j − z_i(j+1) + z_ij
//! ```
//!
//! where `z` are the entries of `B0`.

use nalgebra::{DMatrix, DVector};

use crate::error::{FusionError, Result};
use crate::linalg::{self, Chol};
use crate::model::{Dataset, FusionIndicator, HyperParams, Partition};

/// Prior pieces that depend on the data only through `X_δᵀX_δ`.
#[derive(Debug, Clone)]
pub struct FusedPrior {
    /// `X_δᵀX_δ`, `(p1+1) × (p1+1)`.
    pub gram: DMatrix<f64>,
    /// First-difference operator, `p1 × (p1+1)`.
    pub d_delta: DMatrix<f64>,
    /// g-prior covariance of `β_δ` (up to `σ²`).
    pub b0_delta: DMatrix<f64>,
    /// Slab covariance of the retained differences (up to `σ²`), `p1 × p1`.
    pub h0_delta: DMatrix<f64>,
    /// Slab mean, always zero.
    pub h0_mean: DVector<f64>,
    h0_chol: Option<Chol>,
}

impl FusedPrior {
    /// Builds the prior from the merged Gram matrix. Fails with
    /// `SingularDesign` when the Gram matrix (or the induced `H0`) is not
    /// positive definite.
    pub fn from_gram(gram: DMatrix<f64>, g: f64, delta: &FusionIndicator) -> Result<Self> {
        let k = gram.nrows();
        debug_assert_eq!(k, delta.p1() + 1);
        let singular = || FusionError::SingularDesign(delta.to_string());
        let gram_chol = linalg::cholesky(gram.clone()).ok_or_else(singular)?;
        let mut b0 = gram_chol.inverse() * g;
        linalg::symmetrize(&mut b0);
        let h0 = difference_covariance(&b0)?;
        let h0_chol = if k > 1 {
            Some(linalg::cholesky(h0.clone()).ok_or_else(singular)?)
        } else {
            None
        };
        Ok(Self {
            gram,
            d_delta: linalg::difference_operator(k),
            b0_delta: b0,
            h0_delta: h0,
            h0_mean: DVector::zeros(k - 1),
            h0_chol,
        })
    }

    /// Number of merged blocks, `p1 + 1`.
    pub fn blocks(&self) -> usize {
        self.gram.nrows()
    }

    pub fn p1(&self) -> usize {
        self.blocks() - 1
    }

    /// `log |H0|`; the empty matrix of full fusion has determinant one.
    pub fn log_det_h0(&self) -> f64 {
        self.h0_chol.as_ref().map_or(0.0, linalg::log_det)
    }

    /// `Dᵀ H0⁻¹ D`; the `1 × 1` zero matrix under full fusion.
    pub fn difference_precision(&self) -> DMatrix<f64> {
        match &self.h0_chol {
            None => DMatrix::zeros(1, 1),
            Some(chol) => {
                let z = chol.solve(&self.d_delta);
                let mut m = self.d_delta.transpose() * z;
                linalg::symmetrize(&mut m);
                m
            }
        }
    }

    /// `Dᵀ H0⁻¹ h0`, zero for the zero-mean slab but kept for the general form.
    pub fn difference_shift(&self) -> DVector<f64> {
        match &self.h0_chol {
            None => DVector::zeros(1),
            Some(chol) => self.d_delta.transpose() * chol.solve(&self.h0_mean),
        }
    }

    /// `h0ᵀ H0⁻¹ h0`.
    pub fn mean_quad_form(&self) -> f64 {
        self.h0_chol
            .as_ref()
            .map_or(0.0, |c| linalg::inv_quad_form(c, &self.h0_mean))
    }

    /// Log-density of the slab `N_{p1}(h0, σ² H0)` at `γ`.
    pub fn log_slab_density(&self, gamma: &DVector<f64>, sigma2: f64) -> f64 {
        let p1 = self.p1() as f64;
        let Some(chol) = &self.h0_chol else {
            return 0.0;
        };
        let r = gamma - &self.h0_mean;
        -0.5 * p1 * (2.0 * std::f64::consts::PI * sigma2).ln()
            - 0.5 * linalg::log_det(chol)
            - 0.5 * linalg::inv_quad_form(chol, &r) / sigma2
    }
}

/// The merged design for one indicator.
#[derive(Debug, Clone)]
pub struct FusedDesign {
    pub blocks: Partition,
    /// `n × (p1+1)`, column `k` is the sum of the original columns in block `k`.
    pub x_delta: DMatrix<f64>,
    pub prior: FusedPrior,
}

impl FusedDesign {
    pub fn d_delta(&self) -> &DMatrix<f64> {
        &self.prior.d_delta
    }

    pub fn b0_delta(&self) -> &DMatrix<f64> {
        &self.prior.b0_delta
    }

    pub fn h0_delta(&self) -> &DMatrix<f64> {
        &self.prior.h0_delta
    }
}

/// Sums the columns of `x` within each block.
pub fn merge_columns(x: &DMatrix<f64>, blocks: &Partition) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(x.nrows(), blocks.len());
    for (k, b) in blocks.blocks().iter().enumerate() {
        let mut col = out.column_mut(k);
        for j in b.clone() {
            col += x.column(j);
        }
    }
    out
}

pub fn build_fused_design(
    data: &Dataset,
    delta: &FusionIndicator,
    hyper: &HyperParams,
) -> Result<FusedDesign> {
    if delta.len() + 1 != data.p() {
        return Err(FusionError::DimensionMismatch(format!(
            "indicator has {} entries, expected {}",
            delta.len(),
            data.p() - 1
        )));
    }
    let blocks = delta.partition();
    let x_delta = merge_columns(data.x(), &blocks);
    let gram = x_delta.tr_mul(&x_delta);
    let prior = FusedPrior::from_gram(gram, hyper.g, delta)?;
    Ok(FusedDesign {
        blocks,
        x_delta,
        prior,
    })
}

/// `H0` from `B0` by the entrywise rule `α_ij = z_(i+1)(j+1) − z_(i+1)j − z_i(j+1) + z_ij`.
pub fn difference_covariance(b0: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let k = b0.nrows();
    if k == 0 || b0.ncols() != k {
        return Err(FusionError::DimensionMismatch(format!(
            "difference covariance needs a non-empty square matrix, got {}x{}",
            b0.nrows(),
            b0.ncols()
        )));
    }
    let z = |i: usize, j: usize| b0[(i, j)];
    Ok(DMatrix::from_fn(k - 1, k - 1, |i, j| {
        z(i + 1, j + 1) - z(i + 1, j) - z(i, j + 1) + z(i, j)
    }))
}
