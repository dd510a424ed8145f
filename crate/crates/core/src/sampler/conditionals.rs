//! Full conditional updates of the fusion sampler.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma, StandardNormal};

use crate::error::{FusionError, Result};
use crate::model::{Dataset, FusionIndicator, HyperParams, Partition};

use super::evidence::{log_marginal_likelihood, PosteriorFactors};

const EXP_CLAMP: f64 = 700.0;

/// `P(indicator = 1 | rest)` from the two log evidences and the prior
/// inclusion probability `ω`:
/// `1 / (1 + (1−ω)/ω · R)` with `log R = log_ev_zero − log_ev_one`.
///
/// Returns `None` when both branches are inadmissible.
pub fn inclusion_probability(log_ev_one: f64, log_ev_zero: f64, omega: f64) -> Option<f64> {
    let one_dead = log_ev_one == f64::NEG_INFINITY;
    let zero_dead = log_ev_zero == f64::NEG_INFINITY;
    if one_dead && zero_dead {
        return None;
    }
    if omega >= 1.0 {
        return Some(1.0);
    }
    if omega <= 0.0 {
        return Some(0.0);
    }
    if one_dead {
        return Some(0.0);
    }
    if zero_dead {
        return Some(1.0);
    }
    let log_odds_zero = (log_ev_zero - log_ev_one) + ((1.0 - omega) / omega).ln();
    Some(1.0 / (1.0 + log_odds_zero.clamp(-EXP_CLAMP, EXP_CLAMP).exp()))
}

/// `P(δ_j = 1 | δ_{−j}, y, ω)` using the dense marginal likelihood. The value of
/// `delta[j]` on input is ignored.
pub fn delta_conditional_prob(
    data: &Dataset,
    delta: &FusionIndicator,
    j: usize,
    omega: f64,
    hyper: &HyperParams,
) -> Result<f64> {
    if j >= delta.len() {
        return Err(FusionError::DimensionMismatch(format!(
            "index {j} out of range for {} indicators",
            delta.len()
        )));
    }
    let one = log_marginal_likelihood(data, &delta.with(j, true), hyper)?;
    let zero = log_marginal_likelihood(data, &delta.with(j, false), hyper)?;
    inclusion_probability(one, zero, omega).ok_or(FusionError::InadmissibleState(j))
}

/// `ω | δ ~ Beta(a_ω + p1, b_ω + p − 1 − p1)`.
pub fn sample_omega<R: Rng + ?Sized>(rng: &mut R, p1: usize, p: usize, hyper: &HyperParams) -> f64 {
    debug_assert!(p1 < p);
    sample_beta_dist(rng, hyper.a_omega + p1 as f64, hyper.b_omega + (p - 1 - p1) as f64)
}

pub(crate) fn sample_beta_dist<R: Rng + ?Sized>(rng: &mut R, a: f64, b: f64) -> f64 {
    Beta::new(a, b)
        .expect("beta parameters are positive")
        .sample(rng)
}

/// `σ² ~ IG(n/2, s_c)`, drawn as the reciprocal of a `Gamma(n/2, 1/s_c)` draw.
pub fn sample_sigma2<R: Rng + ?Sized>(rng: &mut R, n: usize, s_c: f64) -> Result<f64> {
    inverse_gamma(rng, 0.5 * n as f64, s_c)
}

pub(crate) fn inverse_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64, scale: f64) -> Result<f64> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(FusionError::DegenerateScale(scale));
    }
    let gamma = Gamma::new(shape, 1.0 / scale).map_err(|_| FusionError::DegenerateScale(scale))?;
    Ok(1.0 / gamma.sample(rng))
}

/// Draws `β_δ ~ N(h_δ, σ² H_δ)` and copies each block value across its block.
pub fn sample_beta<R: Rng + ?Sized>(
    rng: &mut R,
    factors: &PosteriorFactors,
    sigma2: f64,
    blocks: &Partition,
) -> Vec<f64> {
    let block_draw = draw_gaussian(rng, &factors.precision_chol, &factors.h_delta, sigma2);
    blocks.expand(block_draw.as_slice())
}

/// `mean + σ L⁻ᵀ z` where `L Lᵀ` is the precision; covariance is `σ² (L Lᵀ)⁻¹`.
pub(crate) fn draw_gaussian<R: Rng + ?Sized>(
    rng: &mut R,
    precision_chol: &crate::linalg::Chol,
    mean: &DVector<f64>,
    sigma2: f64,
) -> DVector<f64> {
    let k = mean.len();
    let mut z = DVector::from_iterator(k, (0..k).map(|_| rng.sample::<f64, _>(StandardNormal)));
    precision_chol.l_dirty().tr_solve_lower_triangular_mut(&mut z);
    mean + z * sigma2.sqrt()
}
