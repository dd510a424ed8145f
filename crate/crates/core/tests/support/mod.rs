//! Independent oracles used by the integration and acceptance tests.
//!
//! Everything here is computed with explicit matrix products, explicit
//! inverses and determinants, so it shares no code path with the Cholesky
//! based implementation it checks.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::function::gamma::ln_gamma;

use vfusion::fusion_prior::merge_columns;
use vfusion::selection::{SelectionIndicator, SlabKind};
use vfusion::{log_marginal_likelihood, Dataset, FusionIndicator, HyperParams};

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn gaussian_vector(rng: &mut ChaCha8Rng, len: usize) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Random symmetric positive-definite matrix `MᵀM + ε I`.
pub fn random_spd(rng: &mut ChaCha8Rng, k: usize) -> DMatrix<f64> {
    let m = gaussian_matrix(rng, k + 2, k);
    m.tr_mul(&m) + DMatrix::identity(k, k) * 0.1
}

/// Random centered regression instance with a mildly grouped signal.
pub fn random_instance(seed: u64, n: usize, p: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = gaussian_matrix(&mut rng, n, p);
    let beta = DVector::from_fn(p, |j, _| if j < p / 2 { 1.0 } else { 1.6 });
    let y = &x * beta + gaussian_vector(&mut rng, n) * 0.8;
    Dataset::center(y, x).unwrap()
}

pub fn difference_matrix(k: usize) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(k - 1, k);
    for i in 0..k - 1 {
        d[(i, i)] = -1.0;
        d[(i, i + 1)] = 1.0;
    }
    d
}

/// Quantities of the fusion model evaluated directly from their definitions.
pub struct DenseFusion {
    pub x_delta: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub h0: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub h_mean: DVector<f64>,
    pub s_c: f64,
    pub log_evidence: f64,
}

pub fn dense_fusion(data: &Dataset, delta: &FusionIndicator, hyper: &HyperParams) -> DenseFusion {
    let n = data.n() as f64;
    let y = data.y();
    let x_delta = merge_columns(data.x(), &delta.partition());
    let k = x_delta.ncols();
    let xtx = x_delta.transpose() * &x_delta;
    let b0 = xtx.clone().try_inverse().unwrap() * hyper.g;
    let d = difference_matrix(k);
    let h0 = &d * &b0 * d.transpose();
    let penalty = if k > 1 {
        d.transpose() * h0.clone().try_inverse().unwrap() * &d
    } else {
        DMatrix::zeros(1, 1)
    };
    let h = (xtx + penalty).try_inverse().unwrap();
    let h_mean = &h * (x_delta.transpose() * y);
    let h_inv = h.clone().try_inverse().unwrap();
    let s_c = 0.5 * (y.dot(y) - (h_mean.transpose() * &h_inv * &h_mean)[(0, 0)]);
    let det_h0 = if k > 1 { h0.determinant() } else { 1.0 };
    let log_evidence = -0.5 * (n - 1.0) * (2.0 * PI).ln() + 0.5 * h.determinant().ln()
        - 0.5 * det_h0.ln()
        + ln_gamma(0.5 * n)
        - 0.5 * n * s_c.ln();
    DenseFusion {
        x_delta,
        d,
        h0,
        h,
        h_mean,
        s_c,
        log_evidence,
    }
}

/// Closed form of the fusion evidence as an ordinary g-prior regression on
/// `X_δ` with an unpenalised direction along `X 1`: uses the least-squares
/// fit instead of `H_δ`.
pub fn gprior_closed_form(data: &Dataset, delta: &FusionIndicator, g: f64) -> f64 {
    let n = data.n() as f64;
    let y = data.y();
    let x_delta = merge_columns(data.x(), &delta.partition());
    let ls = x_delta
        .clone()
        .svd(true, true)
        .solve(y, 1e-14)
        .unwrap();
    let fitted = &x_delta * ls;
    let xsum = data.x().column_sum();
    let total = xsum.norm_squared();
    let s_c = 0.5 * (y.dot(y) - g / (g + 1.0) * fitted.dot(&fitted)
        - xsum.dot(y).powi(2) / ((g + 1.0) * total));
    -0.5 * (n - 1.0) * (2.0 * PI).ln() - 0.5 * delta.p1() as f64 * (1.0 + g).ln()
        - 0.5 * total.ln()
        + ln_gamma(0.5 * n)
        - 0.5 * n * s_c.ln()
}

pub fn log_mvn(x: &DVector<f64>, mean: &DVector<f64>, cov: &DMatrix<f64>) -> f64 {
    let k = x.len() as f64;
    let r = x - mean;
    let q = (r.transpose() * cov.clone().try_inverse().unwrap() * &r)[(0, 0)];
    -0.5 * k * (2.0 * PI).ln() - 0.5 * cov.determinant().ln() - 0.5 * q
}

pub fn log_inverse_gamma(x: f64, shape: f64, scale: f64) -> f64 {
    shape * scale.ln() - ln_gamma(shape) - (shape + 1.0) * x.ln() - scale / x
}

pub fn log_likelihood(y: &DVector<f64>, x: &DMatrix<f64>, beta: &DVector<f64>, sigma2: f64) -> f64 {
    let n = y.len() as f64;
    let r = y - x * beta;
    -0.5 * n * (2.0 * PI * sigma2).ln() - 0.5 * r.norm_squared() / sigma2
}

/// `log[p(y|β_δ,σ²) p(Dβ_δ|σ²) π(σ²)] − log[p(β_δ|y,σ²) p(σ²|y) p(y|δ)]`
/// at one point, with the conditionals and evidence taken from the library.
///
/// The flat direction of `β_δ` (the constant vector, null space of `D`)
/// carries the location-scale factor `(σ²)^{−½}`; the closed-form evidence
/// and `IG(n/2, s_c)` are exact for this joint.
pub fn fusion_identity_residual(
    data: &Dataset,
    delta: &FusionIndicator,
    hyper: &HyperParams,
    beta_delta: &DVector<f64>,
    sigma2: f64,
) -> f64 {
    let n = data.n() as f64;
    let oracle = dense_fusion(data, delta, hyper);
    let fd = vfusion::build_fused_design(data, delta, hyper).unwrap();
    let factors = vfusion::posterior_factors(data, &fd).unwrap();

    let log_prior = if delta.p1() > 0 {
        log_mvn(
            &(&oracle.d * beta_delta),
            &DVector::zeros(delta.p1()),
            &(&oracle.h0 * sigma2),
        )
    } else {
        0.0
    } - 0.5 * sigma2.ln();
    let joint = log_likelihood(data.y(), &oracle.x_delta, beta_delta, sigma2) + log_prior
        - sigma2.ln();

    let cond_beta = log_mvn(beta_delta, &factors.h_delta, &(factors.h_matrix() * sigma2));
    let cond_sigma = log_inverse_gamma(sigma2, 0.5 * n, factors.s_c);
    let evidence = log_marginal_likelihood(data, delta, hyper).unwrap();
    joint - cond_beta - cond_sigma - evidence
}

/// Same identity for the selection model. For the f-slab the listed
/// conditionals correspond to the fractional construction in which the slab
/// contributes only its normalising constant.
pub fn selection_identity_residual(
    data: &Dataset,
    xi: &SelectionIndicator,
    slab: SlabKind,
    beta_active: &DVector<f64>,
    sigma2: f64,
) -> f64 {
    let n = data.n() as f64;
    let idx = xi.active();
    let p0 = idx.len();
    let x_xi = data.x().select_columns(&idx);
    let xtx = x_xi.transpose() * &x_xi;
    let log_prior = if p0 == 0 {
        0.0
    } else {
        match slab {
            SlabKind::ISlab(c) => log_mvn(
                beta_active,
                &DVector::zeros(p0),
                &(DMatrix::identity(p0, p0) * (c * sigma2)),
            ),
            SlabKind::GSlab(g) => log_mvn(
                beta_active,
                &DVector::zeros(p0),
                &(xtx.clone().try_inverse().unwrap() * (g * sigma2)),
            ),
            SlabKind::FSlab(b) => {
                let cov = xtx.clone().try_inverse().unwrap() * (sigma2 / b);
                -0.5 * p0 as f64 * (2.0 * PI).ln() - 0.5 * cov.determinant().ln()
            }
        }
    };
    let joint = log_likelihood(data.y(), &x_xi, beta_active, sigma2) + log_prior - sigma2.ln();

    let f = vfusion::selection_posterior_factors(data, xi, slab).unwrap();
    let cond_beta = if p0 == 0 {
        0.0
    } else {
        log_mvn(beta_active, &f.b_xi, &(f.b_matrix() * sigma2))
    };
    let cond_sigma = log_inverse_gamma(sigma2, 0.5 * n, f.s_n);
    let evidence = vfusion::selection_log_marginal(data, xi, slab).unwrap();
    joint - cond_beta - cond_sigma - evidence
}

/// Exact `p(δ | y)` with `ω ~ Beta(a, b)` integrated out, indexed by
/// [`FusionIndicator::code`].
pub fn enumerate_fusion_posterior(data: &Dataset, hyper: &HyperParams) -> Vec<f64> {
    let p = data.p();
    let logs: Vec<f64> = (0..1u64 << (p - 1))
        .map(|code| {
            let delta = FusionIndicator::from_code(p, code);
            let p1 = delta.p1() as f64;
            log_marginal_likelihood(data, &delta, hyper).unwrap()
                + ln_beta(hyper.a_omega + p1, hyper.b_omega + (p - 1) as f64 - p1)
        })
        .collect();
    normalize_logs(&logs)
}

/// Exact `p(ξ | y)` for the selection model.
pub fn enumerate_selection_posterior(data: &Dataset, slab: SlabKind, hyper: &HyperParams) -> Vec<f64> {
    let p = data.p();
    let logs: Vec<f64> = (0..1u64 << p)
        .map(|code| {
            let xi = SelectionIndicator::from_code(p, code);
            let p0 = xi.p0() as f64;
            vfusion::selection_log_marginal(data, &xi, slab).unwrap()
                + ln_beta(hyper.a_omega + p0, hyper.b_omega + p as f64 - p0)
        })
        .collect();
    normalize_logs(&logs)
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

pub fn normalize_logs(logs: &[f64]) -> Vec<f64> {
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = w.iter().sum();
    w.iter().map(|v| v / z).collect()
}

/// Marginal inclusion probabilities `P(bit j = 1)` from a distribution over codes.
pub fn marginal_inclusion(probs: &[f64], bits: usize) -> Vec<f64> {
    (0..bits)
        .map(|j| {
            probs
                .iter()
                .enumerate()
                .filter(|(code, _)| (code >> j) & 1 == 1)
                .map(|(_, q)| q)
                .sum()
        })
        .collect()
}
