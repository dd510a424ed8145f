//! Gibbs sampler for the fusion model.
//!
//! One sweep updates, in this order and from one random stream:
//!
//! 1. every `δ_j`, visited in a freshly shuffled order, from
//!    `P(δ_j = 1 | δ_{−j}, y) = 1 / (1 + (1−ω)/ω · R_j)` with
//!    `R_j = p(y | δ_j = 0, δ_{−j}) / p(y | δ_j = 1, δ_{−j})`
//!    (ω is the value from the previous sweep), then `σ² ~ IG(n/2, s_c)`
//!    under the updated `δ`;
//! 2. `ω ~ Beta(a_ω + p1, b_ω + p − 1 − p1)`;
//! 3. `β_δ ~ N(h_δ, σ² H_δ)`, expanded so that fused neighbours are equal.
//!
//! Random numbers are consumed as: the permutation, one uniform per visited
//! index, the `σ²` draw, the `ω` draw, then `p1 + 1` standard normals.

mod conditionals;
pub mod diagnostics;
mod evidence;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{FusionError, Result};
use crate::model::{
    Chain, ChainMeta, Dataset, FusionIndicator, GibbsState, HyperParams, Partition,
    PosteriorSummary,
};

pub use conditionals::{
    delta_conditional_prob, inclusion_probability, sample_beta, sample_omega, sample_sigma2,
};
pub(crate) use conditionals::{draw_gaussian, inverse_gamma, sample_beta_dist};
pub use evidence::{
    log_marginal_likelihood, posterior_factors, posterior_factors_from_prior, EvidenceModel,
    EvidenceRoute, PosteriorFactors, SufficientStats,
};

pub const DEFAULT_SEED: u64 = 20_210_601;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub total_iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub partition_threshold: f64,
    pub route: EvidenceRoute,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            total_iterations: 10_000,
            burn_in: 2_000,
            seed: DEFAULT_SEED,
            partition_threshold: 0.5,
            route: EvidenceRoute::Dense,
        }
    }
}

impl SamplerConfig {
    pub fn new(total_iterations: usize, burn_in: usize, seed: u64) -> Self {
        Self {
            total_iterations,
            burn_in,
            seed,
            ..Self::default()
        }
    }

    pub fn with_route(mut self, route: EvidenceRoute) -> Self {
        self.route = route;
        self
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.partition_threshold = threshold;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.total_iterations == 0 {
            return Err(FusionError::InvalidConfig("iterations must be positive".into()));
        }
        if self.burn_in >= self.total_iterations {
            return Err(FusionError::InvalidConfig(format!(
                "burn-in ({}) must be smaller than iterations ({})",
                self.burn_in, self.total_iterations
            )));
        }
        validate_threshold(self.partition_threshold)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

pub(crate) fn validate_threshold(t: f64) -> Result<()> {
    if t > 0.0 && t < 1.0 {
        Ok(())
    } else {
        Err(FusionError::InvalidConfig(format!("threshold must lie in (0, 1), got {t}")))
    }
}

/// Sampler bound to one dataset and hyper-parameter setting.
#[derive(Debug, Clone)]
pub struct FusionSampler {
    model: EvidenceModel,
}

impl FusionSampler {
    pub fn new(data: &Dataset, hyper: HyperParams, route: EvidenceRoute) -> Self {
        Self {
            model: EvidenceModel::new(data, hyper, route),
        }
    }

    pub fn model(&self) -> &EvidenceModel {
        &self.model
    }

    fn n(&self) -> usize {
        self.model.stats().n()
    }

    fn p(&self) -> usize {
        self.model.stats().p()
    }

    /// No fusion, `ω = a_ω/(a_ω+b_ω)`, `σ²` the sample variance of `y`, and
    /// `β` the conditional posterior mean.
    pub fn initial_state(&self, data: &Dataset) -> Result<GibbsState> {
        let hyper = self.model.hyper();
        let delta = FusionIndicator::all_ones(self.p());
        let (blocks, factors) = self.model.factors(&delta)?;
        let y = data.y();
        let mean = y.mean();
        let sigma2 = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (y.len() - 1) as f64;
        Ok(GibbsState {
            beta: blocks.expand(factors.h_delta.as_slice()),
            delta,
            omega: hyper.a_omega / (hyper.a_omega + hyper.b_omega),
            sigma2,
        })
    }

    /// One full sweep starting from `state`.
    pub fn sweep<R: Rng + ?Sized>(&self, state: &GibbsState, rng: &mut R) -> Result<GibbsState> {
        let p = self.p();
        if state.delta.len() + 1 != p {
            return Err(FusionError::DimensionMismatch(format!(
                "state has {} indicators, expected {}",
                state.delta.len(),
                p - 1
            )));
        }
        let mut delta = state.delta.clone();
        let mut order: Vec<usize> = (0..p - 1).collect();
        order.shuffle(rng);

        let mut current = self.model.log_evidence(&delta)?;
        for j in order {
            let flipped = delta.with(j, !delta.get(j));
            let other = self.model.log_evidence(&flipped)?;
            let (one, zero) = if delta.get(j) { (current, other) } else { (other, current) };
            let prob = inclusion_probability(one, zero, state.omega)
                .ok_or(FusionError::InadmissibleState(j))?;
            let u: f64 = rng.random();
            if (u < prob) != delta.get(j) {
                delta = flipped;
                current = other;
            }
        }

        let (blocks, factors) = self.model.factors(&delta)?;
        let sigma2 = sample_sigma2(rng, self.n(), factors.s_c)?;
        let omega = sample_omega(rng, delta.p1(), p, self.model.hyper());
        let beta = sample_beta(rng, &factors, sigma2, &blocks);
        Ok(GibbsState {
            delta,
            omega,
            sigma2,
            beta,
        })
    }

    /// Runs `total_iterations` sweeps from [`Self::initial_state`] and keeps
    /// the draws after burn-in.
    pub fn run(&self, data: &Dataset, config: &SamplerConfig) -> Result<Chain> {
        config.validate()?;
        let mut rng = config.rng();
        let mut state = self.initial_state(data)?;
        let keep = config.total_iterations - config.burn_in;
        let mut draws = Vec::with_capacity(keep);
        for iter in 0..config.total_iterations {
            state = self.sweep(&state, &mut rng)?;
            if iter >= config.burn_in {
                draws.push(state.clone());
            }
        }
        Ok(Chain {
            draws,
            meta: ChainMeta {
                seed: config.seed,
                total_iterations: config.total_iterations,
                burn_in: config.burn_in,
                n: self.n(),
                p: self.p(),
                hyper: *self.model.hyper(),
            },
        })
    }
}

/// One sweep with the dense evidence route.
pub fn gibbs_sweep<R: Rng + ?Sized>(
    state: &GibbsState,
    data: &Dataset,
    hyper: &HyperParams,
    rng: &mut R,
) -> Result<GibbsState> {
    FusionSampler::new(data, *hyper, EvidenceRoute::Dense).sweep(state, rng)
}

pub fn run_chain(data: &Dataset, hyper: &HyperParams, config: &SamplerConfig) -> Result<Chain> {
    FusionSampler::new(data, *hyper, config.route).run(data, config)
}

/// Posterior means over the draws; block boundaries are declared where
/// `P(δ_j = 1) > threshold`.
pub fn summarize(chain: &Chain, threshold: f64) -> Result<PosteriorSummary> {
    validate_threshold(threshold)?;
    let first = chain.draws.first().ok_or(FusionError::EmptyChain)?;
    let m = chain.draws.len() as f64;
    let p = first.beta.len();
    let mut beta_mean = vec![0.0; p];
    let mut delta_count = vec![0usize; p - 1];
    let (mut sigma2, mut omega) = (0.0, 0.0);
    for d in &chain.draws {
        for (acc, b) in beta_mean.iter_mut().zip(&d.beta) {
            *acc += b;
        }
        for (c, &on) in delta_count.iter_mut().zip(d.delta.as_slice()) {
            *c += on as usize;
        }
        sigma2 += d.sigma2;
        omega += d.omega;
    }
    beta_mean.iter_mut().for_each(|b| *b /= m);
    let delta_prob: Vec<f64> = delta_count.iter().map(|&c| c as f64 / m).collect();
    let boundaries = delta_prob
        .iter()
        .enumerate()
        .filter(|(_, &q)| q > threshold)
        .map(|(j, _)| j);
    Ok(PosteriorSummary {
        partition_est: Partition::from_boundaries(p, boundaries),
        beta_mean,
        delta_prob,
        sigma2_mean: sigma2 / m,
        omega_mean: omega / m,
        threshold,
    })
}
