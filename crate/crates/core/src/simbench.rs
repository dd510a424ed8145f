//! Monte Carlo study: the six grouped-coefficient cases, their data
//! generator, and the MSE / PSE / P_B accuracy metrics.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FusionError, Result};
use crate::linalg;
use crate::model::{Dataset, HyperParams, Partition, Preprocessing};
use crate::sampler::{run_chain, summarize, SamplerConfig};

/// Number of coefficients in every case.
pub const NUM_COEFS: usize = 20;
/// Size of each true coefficient group.
pub const GROUP_SIZE: usize = 5;

/// Stream of the data generator; the sampler uses stream 0 of the same seed.
const DATA_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimCase {
    pub case_id: u8,
    pub beta_true: Vec<f64>,
    pub sigma: f64,
    pub rho: f64,
    pub n: usize,
}

impl SimCase {
    /// Cases 1–6: groups of five at levels `(1, h, 1, h)` with
    /// `h ∈ {1.5, 2, 3}` and noise `σ ∈ {0.75, 1.5}`.
    pub fn new(case_id: u8, n: usize, rho: f64) -> Result<Self> {
        let (high, sigma) = match case_id {
            1 => (1.5, 0.75),
            2 => (1.5, 1.5),
            3 => (2.0, 0.75),
            4 => (2.0, 1.5),
            5 => (3.0, 0.75),
            6 => (3.0, 1.5),
            _ => return Err(FusionError::InvalidConfig("case must be 1..6".into())),
        };
        if !(0.0..1.0).contains(&rho) {
            return Err(FusionError::InvalidConfig(format!("rho must lie in [0, 1), got {rho}")));
        }
        if n < 2 {
            return Err(FusionError::TooSmall {
                what: "observations",
                min: 2,
                got: n,
            });
        }
        let beta_true = [1.0, high, 1.0, high]
            .iter()
            .flat_map(|&v| std::iter::repeat_n(v, GROUP_SIZE))
            .collect();
        Ok(Self {
            case_id,
            beta_true,
            sigma,
            rho,
            n,
        })
    }

    pub fn p(&self) -> usize {
        self.beta_true.len()
    }

    /// `Σ_ij = 1` on the diagonal, `ρ` elsewhere.
    pub fn covariance(&self) -> DMatrix<f64> {
        compound_symmetry(self.p(), self.rho)
    }

    pub fn groups(&self) -> Partition {
        Partition::equal_blocks(self.p(), GROUP_SIZE)
    }
}

pub fn compound_symmetry(p: usize, rho: f64) -> DMatrix<f64> {
    DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { rho })
}

/// Untransformed simulated data.
#[derive(Debug, Clone, PartialEq)]
pub struct RawData {
    pub y: DVector<f64>,
    pub x: DMatrix<f64>,
}

/// Rows of `X` i.i.d. `N(0, Σ)`, `y = Xβ* + ε` with `ε ~ N(0, σ² I)`.
pub fn generate_case(case: &SimCase, seed: u64) -> (RawData, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(DATA_STREAM);
    let p = case.p();
    let chol = linalg::cholesky(case.covariance()).expect("compound symmetry with rho < 1 is PD");
    let l = chol.l();
    let z = DMatrix::from_fn(case.n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let x = z * l.transpose();
    let beta = DVector::from_column_slice(&case.beta_true);
    let noise = DVector::from_fn(case.n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let y = &x * beta + noise * case.sigma;
    (RawData { y, x }, case.beta_true.clone())
}

fn check_lengths(beta_hats: &[Vec<f64>], beta_true: &[f64]) -> Result<()> {
    if beta_hats.is_empty() {
        return Err(FusionError::EmptyInput);
    }
    if let Some(b) = beta_hats.iter().find(|b| b.len() != beta_true.len()) {
        return Err(FusionError::DimensionMismatch(format!(
            "estimate has {} coefficients, truth has {}",
            b.len(),
            beta_true.len()
        )));
    }
    Ok(())
}

pub fn squared_error(beta_hat: &[f64], beta_true: &[f64]) -> f64 {
    beta_hat
        .iter()
        .zip(beta_true)
        .map(|(a, b)| (a - b).powi(2))
        .sum()
}

/// `(β̂ − β*)ᵀ Σ (β̂ − β*)`.
pub fn weighted_squared_error(beta_hat: &[f64], beta_true: &[f64], sigma: &DMatrix<f64>) -> f64 {
    let d = DVector::from_iterator(
        beta_hat.len(),
        beta_hat.iter().zip(beta_true).map(|(a, b)| a - b),
    );
    d.dot(&(sigma * &d))
}

/// Mean over replicates of the squared Euclidean error.
pub fn compute_mse(beta_hats: &[Vec<f64>], beta_true: &[f64]) -> Result<f64> {
    check_lengths(beta_hats, beta_true)?;
    Ok(beta_hats
        .iter()
        .map(|b| squared_error(b, beta_true))
        .sum::<f64>()
        / beta_hats.len() as f64)
}

/// Mean over replicates of the `Σ`-weighted squared error.
pub fn compute_pse(beta_hats: &[Vec<f64>], beta_true: &[f64], sigma: &DMatrix<f64>) -> Result<f64> {
    check_lengths(beta_hats, beta_true)?;
    let p = beta_true.len();
    if sigma.shape() != (p, p) {
        return Err(FusionError::DimensionMismatch(format!(
            "covariance is {}x{}, expected {p}x{p}",
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    Ok(beta_hats
        .iter()
        .map(|b| weighted_squared_error(b, beta_true, sigma))
        .sum::<f64>()
        / beta_hats.len() as f64)
}

/// Grouping accuracy of one estimate: `(p − Σ_l N_l) / (p − L)` where `N_l`
/// counts the distinct estimated blocks meeting true group `B_l`.
pub fn compute_pb(partition_est: &Partition, groups_true: &Partition) -> Result<f64> {
    let p = groups_true.p();
    if partition_est.p() != p {
        return Err(FusionError::DimensionMismatch(format!(
            "estimated partition covers {} coefficients, truth covers {p}",
            partition_est.p()
        )));
    }
    let l = groups_true.len();
    if l >= p {
        return Err(FusionError::DegenerateGroups);
    }
    let labels = partition_est.labels();
    let total: usize = groups_true
        .blocks()
        .iter()
        .map(|b| {
            let mut seen: Vec<usize> = labels[b.clone()].to_vec();
            seen.dedup();
            seen.len()
        })
        .sum();
    Ok((p - total) as f64 / (p - l) as f64)
}

/// Fraction of coefficient pairs on which two partitions agree (same block in
/// both or different blocks in both). Reported alongside P_B, which does not
/// penalise merging distinct groups.
pub fn rand_index(a: &Partition, b: &Partition) -> f64 {
    let la = a.labels();
    let lb = b.labels();
    let p = la.len();
    if p < 2 {
        return 1.0;
    }
    let mut agree = 0usize;
    for i in 0..p {
        for j in (i + 1)..p {
            agree += ((la[i] == la[j]) == (lb[i] == lb[j])) as usize;
        }
    }
    agree as f64 / (p * (p - 1) / 2) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub case_id: u8,
    pub n: usize,
    pub rho: f64,
    pub replicates: usize,
    /// Slab scale; `None` means `g = n`.
    pub g: Option<f64>,
    pub a_omega: f64,
    pub b_omega: f64,
    pub sampler: SamplerConfig,
    pub seed: u64,
    pub threads: usize,
    pub preprocessing: Preprocessing,
}

impl StudyConfig {
    /// Study defaults: `g = n`, `a_ω = b_ω = 1`, 10000 sweeps with
    /// 2000 burn-in, centered data.
    pub fn new(case_id: u8, n: usize, rho: f64, replicates: usize, seed: u64) -> Self {
        Self {
            case_id,
            n,
            rho,
            replicates,
            g: None,
            a_omega: 1.0,
            b_omega: 1.0,
            sampler: SamplerConfig::default(),
            seed,
            threads: 1,
            preprocessing: Preprocessing::Centered,
        }
    }

    pub fn hyper(&self) -> Result<HyperParams> {
        HyperParams::new(self.g.unwrap_or(self.n as f64), self.a_omega, self.b_omega)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub index: usize,
    pub seed: u64,
    pub mse: f64,
    pub pse: f64,
    pub p_b: f64,
    /// Supplementary; not one of the reported study metrics.
    pub rand_index: f64,
    pub delta_prob: Vec<f64>,
    pub beta_hat: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    /// Sample standard deviation (divisor `replicates − 1`); 0 when undefined.
    pub sd: f64,
    pub sd_defined: bool,
}

impl Aggregate {
    pub fn of(values: &[f64]) -> Self {
        let m = values.len() as f64;
        let mean = values.iter().sum::<f64>() / m;
        if values.len() < 2 {
            return Self {
                mean,
                sd: 0.0,
                sd_defined: false,
            };
        }
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
        Self {
            mean,
            sd: var.sqrt(),
            sd_defined: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub config: StudyConfig,
    pub g: f64,
    pub replicates: Vec<ReplicateResult>,
    pub mse: Aggregate,
    pub pse: Aggregate,
    pub p_b: Aggregate,
    pub rand_index: Aggregate,
}

/// SplitMix64 mix of the study seed and replicate index.
pub fn replicate_seed(study_seed: u64, index: usize) -> u64 {
    let mut z = study_seed
        .wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generate, preprocess, sample, summarize and score one replicate.
pub fn run_replicate(cfg: &StudyConfig, case: &SimCase, index: usize) -> Result<ReplicateResult> {
    let seed = replicate_seed(cfg.seed, index);
    let (raw, beta_true) = generate_case(case, seed);
    let data = Dataset::preprocess(raw.y, raw.x, cfg.preprocessing)?;
    let hyper = cfg.hyper()?;
    let sampler = SamplerConfig { seed, ..cfg.sampler };
    let chain = run_chain(&data, &hyper, &sampler)?;
    let summary = summarize(&chain, sampler.partition_threshold)?;
    let beta_hat = summary.fused_beta();
    let groups = case.groups();
    Ok(ReplicateResult {
        index,
        seed,
        mse: squared_error(&beta_hat, &beta_true),
        pse: weighted_squared_error(&beta_hat, &beta_true, &case.covariance()),
        p_b: compute_pb(&summary.partition_est, &groups)?,
        rand_index: rand_index(&summary.partition_est, &groups),
        delta_prob: summary.delta_prob,
        beta_hat,
    })
}

/// Runs all replicates (concurrently when `threads > 1`) and aggregates them
/// in replicate order.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyResult> {
    if cfg.replicates == 0 {
        return Err(FusionError::InvalidConfig("replicates must be at least 1".into()));
    }
    cfg.sampler.validate()?;
    let hyper = cfg.hyper()?;
    let case = SimCase::new(cfg.case_id, cfg.n, cfg.rho)?;
    let work = || {
        (0..cfg.replicates)
            .into_par_iter()
            .map(|k| run_replicate(cfg, &case, k))
            .collect::<Result<Vec<_>>>()
    };
    let replicates = if cfg.threads <= 1 {
        (0..cfg.replicates)
            .map(|k| run_replicate(cfg, &case, k))
            .collect::<Result<Vec<_>>>()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| FusionError::InvalidConfig(format!("thread pool: {e}")))?
            .install(work)?
    };
    let col = |f: fn(&ReplicateResult) -> f64| -> Vec<f64> { replicates.iter().map(f).collect() };
    Ok(StudyResult {
        config: cfg.clone(),
        g: hyper.g,
        mse: Aggregate::of(&col(|r| r.mse)),
        pse: Aggregate::of(&col(|r| r.pse)),
        p_b: Aggregate::of(&col(|r| r.p_b)),
        rand_index: Aggregate::of(&col(|r| r.rand_index)),
        replicates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_table() {
        let c1 = SimCase::new(1, 50, 0.0).unwrap();
        assert_eq!(&c1.beta_true[..6], &[1.0, 1.0, 1.0, 1.0, 1.0, 1.5]);
        assert_eq!(c1.beta_true[19], 1.5);
        assert_eq!(c1.sigma, 0.75);
        assert_eq!(SimCase::new(4, 50, 0.0).unwrap().sigma, 1.5);
        assert_eq!(SimCase::new(6, 50, 0.0).unwrap().beta_true[9], 3.0);
        assert_eq!(SimCase::new(3, 50, 0.0).unwrap().beta_true[14], 1.0);
        assert!(SimCase::new(7, 50, 0.0).is_err());
        assert!(SimCase::new(0, 50, 0.0).is_err());
        let cov = SimCase::new(2, 50, 0.5).unwrap().covariance();
        assert_eq!(cov[(0, 0)], 1.0);
        assert_eq!(cov[(3, 7)], 0.5);
    }

    #[test]
    fn noiseless_response_is_exact() {
        let mut case = SimCase::new(1, 30, 0.5).unwrap();
        case.sigma = 0.0;
        let (raw, beta) = generate_case(&case, 11);
        let fitted = &raw.x * DVector::from_vec(beta);
        assert!((fitted - raw.y).amax() < 1e-12);
    }

    #[test]
    fn mse_examples() {
        let truth = vec![1.0; 20];
        assert_eq!(compute_mse(&[truth.clone(), truth.clone()], &truth).unwrap(), 0.0);
        let mut off = truth.clone();
        off[0] += 1.0;
        assert_eq!(compute_mse(&[off], &truth).unwrap(), 1.0);
        assert_eq!(compute_mse(&[], &truth), Err(FusionError::EmptyInput));
    }

    #[test]
    fn pse_examples() {
        let truth = vec![0.0; 20];
        let ones = vec![1.0; 20];
        let sigma = compound_symmetry(20, 0.5);
        assert!((compute_pse(std::slice::from_ref(&ones), &truth, &sigma).unwrap() - 210.0).abs() < 1e-12);
        let ident = DMatrix::identity(20, 20);
        assert_eq!(
            compute_pse(std::slice::from_ref(&ones), &truth, &ident).unwrap(),
            compute_mse(std::slice::from_ref(&ones), &truth).unwrap()
        );
        assert!(compute_pse(&[ones], &truth, &DMatrix::identity(3, 3)).is_err());
    }

    #[test]
    fn pb_examples() {
        let groups = Partition::equal_blocks(20, 5);
        assert_eq!(compute_pb(&groups, &groups).unwrap(), 1.0);
        let singletons = Partition::from_boundaries(20, 0..19);
        assert_eq!(compute_pb(&singletons, &groups).unwrap(), 0.0);
        let split = Partition::from_boundaries(20, [1, 4, 9, 14]);
        assert_eq!(compute_pb(&split, &groups).unwrap(), 0.9375);
        let all = Partition::from_boundaries(20, []);
        assert_eq!(compute_pb(&all, &groups).unwrap(), 1.0);
        assert!(rand_index(&all, &groups) < 1.0);
        assert_eq!(
            compute_pb(&groups, &Partition::from_boundaries(4, 0..3)),
            Err(FusionError::DimensionMismatch(
                "estimated partition covers 20 coefficients, truth covers 4".into()
            ))
        );
        let s4 = Partition::from_boundaries(4, 0..3);
        assert_eq!(compute_pb(&s4, &s4), Err(FusionError::DegenerateGroups));
    }

    #[test]
    fn aggregate_single_replicate() {
        let a = Aggregate::of(&[0.3]);
        assert_eq!(a.mean, 0.3);
        assert_eq!(a.sd, 0.0);
        assert!(!a.sd_defined);
        let b = Aggregate::of(&[1.0, 3.0]);
        assert!((b.sd - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn replicate_seeds_differ() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|k| replicate_seed(42, k)).collect();
        assert_eq!(seeds.len(), 1000);
    }
}
