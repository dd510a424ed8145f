//! Closed-form marginal likelihood `p(y | δ)` and the posterior factors it is
//! built from.
//!
//! With `β_δ` and `σ²` integrated out,
//!
//! ```text
//! H_δ = (X_δᵀX_δ + Dᵀ H0⁻¹ D)⁻¹
//! h_δ = H_δ (X_δᵀy + Dᵀ H0⁻¹ h0)
//! s_c = ½ (yᵀy + h0ᵀ H0⁻¹ h0 − h_δᵀ H_δ⁻¹ h_δ)
//! p(y | δ) = (2π)^{−(n−1)/2} |H_δ|^{½} / |H0|^{½} · Γ(n/2) / s_c^{n/2}
//! ```
//!
//! Everything is evaluated in log space from Cholesky factors.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{FusionError, Result};
use crate::fusion_prior::{build_fused_design, FusedDesign, FusedPrior};
use crate::linalg::{self, Chol};
use crate::model::{Dataset, FusionIndicator, HyperParams, Partition};

/// How `log p(y | δ)` is evaluated inside the sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvidenceRoute {
    /// Builds `B0`, `H0`, `H_δ` and factors them for every evaluation.
    #[default]
    Dense,
    /// Uses the g-prior reduction of the same quantity: with
    /// `A = X_δᵀX_δ`, `c = X_δᵀy` and `t = 1ᵀA1`,
    /// `|H_δ| / |H0| = (1+g)^{−p1} / t` and
    /// `2 s_c = yᵀy − g/(g+1)·cᵀA⁻¹c − (1ᵀc)² / ((g+1) t)`.
    /// Only `A` is factored.
    Reduced,
}

#[derive(Debug, Clone)]
pub struct PosteriorFactors {
    /// Cholesky factor of `H_δ⁻¹`.
    pub precision_chol: Chol,
    pub h_delta: DVector<f64>,
    pub s_c: f64,
    pub log_det_h_delta: f64,
    pub log_det_h0_delta: f64,
}

impl PosteriorFactors {
    pub fn is_degenerate(&self) -> bool {
        self.s_c.is_nan() || self.s_c <= 0.0
    }

    /// `H_δ` as a dense matrix.
    pub fn h_matrix(&self) -> DMatrix<f64> {
        self.precision_chol.inverse()
    }

    pub fn log_marginal(&self, n: usize) -> Result<f64> {
        if self.is_degenerate() {
            return Err(FusionError::DegenerateScale(self.s_c));
        }
        Ok(log_evidence_from_parts(
            n,
            self.log_det_h_delta - self.log_det_h0_delta,
            self.s_c,
        ))
    }
}

fn log_evidence_from_parts(n: usize, log_det_ratio: f64, s_c: f64) -> f64 {
    let nf = n as f64;
    -0.5 * (nf - 1.0) * (2.0 * PI).ln() + 0.5 * log_det_ratio + ln_gamma(0.5 * nf)
        - 0.5 * nf * s_c.ln()
}

/// Factors from the prior pieces and the sufficient statistics `X_δᵀy`, `yᵀy`.
pub fn posterior_factors_from_prior(
    prior: &FusedPrior,
    xty: &DVector<f64>,
    yty: f64,
) -> Result<PosteriorFactors> {
    let precision = &prior.gram + prior.difference_precision();
    let chol = linalg::cholesky(precision).ok_or(FusionError::SingularSystem)?;
    let rhs = xty + prior.difference_shift();
    let h = chol.solve(&rhs);
    let fit = linalg::inv_quad_form(&chol, &rhs);
    let s_c = 0.5 * (yty + prior.mean_quad_form() - fit);
    Ok(PosteriorFactors {
        log_det_h_delta: -linalg::log_det(&chol),
        log_det_h0_delta: prior.log_det_h0(),
        precision_chol: chol,
        h_delta: h,
        s_c,
    })
}

pub fn posterior_factors(data: &Dataset, fd: &FusedDesign) -> Result<PosteriorFactors> {
    let xty = fd.x_delta.tr_mul(data.y());
    posterior_factors_from_prior(&fd.prior, &xty, data.y().norm_squared())
}

/// `log p(y | δ)`. Inadmissible indicators (singular merged design) give
/// `-∞`; a zero response is reported as `DegenerateScale`.
pub fn log_marginal_likelihood(
    data: &Dataset,
    delta: &FusionIndicator,
    hyper: &HyperParams,
) -> Result<f64> {
    let fd = match build_fused_design(data, delta, hyper) {
        Ok(fd) => fd,
        Err(FusionError::SingularDesign(_)) => return Ok(f64::NEG_INFINITY),
        Err(e) => return Err(e),
    };
    match posterior_factors(data, &fd) {
        Ok(f) => f.log_marginal(data.n()),
        Err(FusionError::SingularSystem) => Ok(f64::NEG_INFINITY),
        Err(e) => Err(e),
    }
}

/// `XᵀX`, `Xᵀy` and `yᵀy`, with row-wise prefix sums of `XᵀX` so the Gram
/// matrix of any merged design costs `O(p · blocks)`.
#[derive(Debug, Clone)]
pub struct SufficientStats {
    n: usize,
    p: usize,
    yty: f64,
    xty: DVector<f64>,
    /// `row_prefix[(i, j)] = Σ_{l<j} (XᵀX)_{il}`, `p × (p+1)`.
    row_prefix: DMatrix<f64>,
    /// `1ᵀ XᵀX 1`, the same for every indicator.
    total: f64,
    /// `1ᵀ Xᵀy`.
    total_xty: f64,
}

impl SufficientStats {
    pub fn new(data: &Dataset) -> Self {
        let x = data.x();
        let gram = x.tr_mul(x);
        let p = data.p();
        let mut row_prefix = DMatrix::zeros(p, p + 1);
        for i in 0..p {
            let mut acc = 0.0;
            for j in 0..p {
                acc += gram[(i, j)];
                row_prefix[(i, j + 1)] = acc;
            }
        }
        let xty = x.tr_mul(data.y());
        Self {
            n: data.n(),
            p,
            yty: data.y().norm_squared(),
            total: gram.sum(),
            total_xty: xty.sum(),
            xty,
            row_prefix,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn yty(&self) -> f64 {
        self.yty
    }

    /// `X_δᵀX_δ` for the given blocks.
    pub fn fused_gram(&self, blocks: &Partition) -> DMatrix<f64> {
        let bs = blocks.blocks();
        let k = bs.len();
        let mut a = DMatrix::zeros(k, k);
        for (r, br) in bs.iter().enumerate() {
            for c in r..k {
                let bc = &bs[c];
                let v: f64 = br
                    .clone()
                    .map(|i| self.row_prefix[(i, bc.end)] - self.row_prefix[(i, bc.start)])
                    .sum();
                a[(r, c)] = v;
                a[(c, r)] = v;
            }
        }
        a
    }

    /// `X_δᵀy` for the given blocks.
    pub fn fused_xty(&self, blocks: &Partition) -> DVector<f64> {
        DVector::from_iterator(
            blocks.len(),
            blocks.blocks().iter().map(|b| self.xty.rows_range(b.clone()).sum()),
        )
    }
}

/// Evaluates `log p(y | δ)` and the posterior factors from cached sufficient
/// statistics.
#[derive(Debug, Clone)]
pub struct EvidenceModel {
    stats: SufficientStats,
    hyper: HyperParams,
    route: EvidenceRoute,
}

impl EvidenceModel {
    pub fn new(data: &Dataset, hyper: HyperParams, route: EvidenceRoute) -> Self {
        Self {
            stats: SufficientStats::new(data),
            hyper,
            route,
        }
    }

    pub fn stats(&self) -> &SufficientStats {
        &self.stats
    }

    pub fn hyper(&self) -> &HyperParams {
        &self.hyper
    }

    pub fn route(&self) -> EvidenceRoute {
        self.route
    }

    /// Partition and posterior factors for `δ`. Errors with
    /// `SingularDesign`/`SingularSystem` for inadmissible indicators.
    pub fn factors(&self, delta: &FusionIndicator) -> Result<(Partition, PosteriorFactors)> {
        let blocks = delta.partition();
        let prior = FusedPrior::from_gram(self.stats.fused_gram(&blocks), self.hyper.g, delta)?;
        let xty = self.stats.fused_xty(&blocks);
        let factors = posterior_factors_from_prior(&prior, &xty, self.stats.yty)?;
        Ok((blocks, factors))
    }

    /// `log p(y | δ)`, `-∞` when `δ` is inadmissible.
    pub fn log_evidence(&self, delta: &FusionIndicator) -> Result<f64> {
        match self.route {
            EvidenceRoute::Dense => match self.factors(delta) {
                Ok((_, f)) => f.log_marginal(self.stats.n),
                Err(FusionError::SingularDesign(_) | FusionError::SingularSystem) => {
                    Ok(f64::NEG_INFINITY)
                }
                Err(e) => Err(e),
            },
            EvidenceRoute::Reduced => self.reduced_log_evidence(delta),
        }
    }

    fn reduced_log_evidence(&self, delta: &FusionIndicator) -> Result<f64> {
        let blocks = delta.partition();
        let Some(chol) = linalg::cholesky(self.stats.fused_gram(&blocks)) else {
            return Ok(f64::NEG_INFINITY);
        };
        let g = self.hyper.g;
        let stats = &self.stats;
        let fit = linalg::inv_quad_form(&chol, &stats.fused_xty(&blocks));
        let s_c = 0.5
            * (stats.yty
                - g / (g + 1.0) * fit
                - stats.total_xty * stats.total_xty / ((g + 1.0) * stats.total));
        if s_c.is_nan() || s_c <= 0.0 {
            return Err(FusionError::DegenerateScale(s_c));
        }
        let log_det_ratio = -(delta.p1() as f64) * (1.0 + g).ln() - stats.total.ln();
        Ok(log_evidence_from_parts(stats.n, log_det_ratio, s_c))
    }
}
