//! Bayesian variable fusion for linear regression.
//!
//! Adjacent coefficient differences `γ_j = β_{j+1} − β_j` get a Dirac-spike /
//! g-slab prior, so a posterior draw either fuses `β_j` and `β_{j+1}` exactly
//! or keeps them apart. Estimation is by a collapsed Gibbs sampler whose
//! indicator updates use the closed-form marginal likelihood `p(y | δ)`.
//!
//! The crate also carries the classical spike-and-slab selection sampler
//! ([`selection`]) and the simulation study harness ([`simbench`]).

pub mod error;
pub mod fusion_prior;
pub mod linalg;
pub mod model;
pub mod sampler;
pub mod selection;
pub mod simbench;

pub use error::{FusionError, Result};
pub use fusion_prior::{build_fused_design, difference_covariance, FusedDesign, FusedPrior};
pub use model::{
    partition_from_delta, standardize, Chain, ChainMeta, Dataset, FusionIndicator, GibbsState,
    HyperParams, Partition, PosteriorSummary, Preprocessing,
};
pub use sampler::{
    delta_conditional_prob, gibbs_sweep, log_marginal_likelihood, posterior_factors, run_chain,
    sample_beta, sample_omega, sample_sigma2, summarize, EvidenceModel, EvidenceRoute,
    FusionSampler, PosteriorFactors, SamplerConfig, DEFAULT_SEED,
};
pub use selection::{
    selection_gibbs, selection_log_marginal, selection_posterior_factors, summarize_selection,
    SelectionIndicator, SelectionState, SelectionSummary, SlabKind,
};
