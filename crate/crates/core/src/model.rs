//! Domain types shared by the fusion sampler, the selection baseline and the
//! simulation bench.

use std::fmt;
use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{FusionError, Result};

/// How the response and predictors were transformed before fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preprocessing {
    /// Used as given (e.g. the identity design of signal smoothing).
    Raw,
    /// Response and columns centered to zero mean, columns not rescaled.
    Centered,
    /// Response centered, columns centered and scaled so that `Σ x_ij² = n`.
    Standardized,
}

/// Response vector and design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: DVector<f64>,
    x: DMatrix<f64>,
    preprocessing: Preprocessing,
}

const CENTER_TOL: f64 = 1e-8;
const SCALE_TOL: f64 = 1e-6;

impl Dataset {
    /// Wraps data without transforming it.
    pub fn new(y: DVector<f64>, x: DMatrix<f64>) -> Result<Self> {
        validate_shapes(&y, &x)?;
        Ok(Self {
            y,
            x,
            preprocessing: Preprocessing::Raw,
        })
    }

    /// Centers the response and standardizes every column to mean zero and
    /// `Σ_i x_ij² = n`.
    pub fn standardize(y: DVector<f64>, x: DMatrix<f64>) -> Result<Self> {
        Self::preprocess(y, x, Preprocessing::Standardized)
    }

    /// Centers the response and every column without rescaling.
    pub fn center(y: DVector<f64>, x: DMatrix<f64>) -> Result<Self> {
        Self::preprocess(y, x, Preprocessing::Centered)
    }

    /// `y = β + ε`: the design is the `n × n` identity and nothing is centered.
    pub fn identity_design(signal: &[f64]) -> Result<Self> {
        let n = signal.len();
        Self::new(DVector::from_column_slice(signal), DMatrix::identity(n, n))
    }

    pub fn preprocess(y: DVector<f64>, x: DMatrix<f64>, how: Preprocessing) -> Result<Self> {
        validate_shapes(&y, &x)?;
        if how == Preprocessing::Raw {
            return Self::new(y, x);
        }
        let n = y.len();
        let nf = n as f64;
        let y_mean = y.mean();
        let y = y.map(|v| v - y_mean);
        let mut x = x;
        for (j, mut col) in x.column_iter_mut().enumerate() {
            let mean = col.mean();
            col.apply(|v| *v -= mean);
            let ss = col.norm_squared();
            let scale = col.amax();
            // A column whose centered entries vanish relative to its magnitude is constant.
            if ss == 0.0 || scale <= 1e-12 * mean.abs().max(1.0) {
                return Err(FusionError::ConstantColumn(j));
            }
            if how == Preprocessing::Standardized {
                let rms = (ss / nf).sqrt();
                col.apply(|v| *v /= rms);
            }
        }
        let data = Self {
            y,
            x,
            preprocessing: how,
        };
        data.check_invariants()?;
        Ok(data)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn preprocessing(&self) -> Preprocessing {
        self.preprocessing
    }

    pub fn is_standardized(&self) -> bool {
        self.preprocessing == Preprocessing::Standardized
    }

    /// Checks the shape, finiteness and (where applicable) centering and
    /// scaling invariants.
    pub fn check_invariants(&self) -> Result<()> {
        validate_shapes(&self.y, &self.x)?;
        if self.preprocessing == Preprocessing::Raw {
            return Ok(());
        }
        let nf = self.n() as f64;
        let y_scale = self.y.amax().max(1.0);
        if self.y.sum().abs() > CENTER_TOL * nf * y_scale {
            return Err(FusionError::InvalidConfig("response is not centered".into()));
        }
        for (j, col) in self.x.column_iter().enumerate() {
            let scale = col.amax().max(1.0);
            if col.sum().abs() > CENTER_TOL * nf * scale {
                return Err(FusionError::InvalidConfig(format!("column {j} is not centered")));
            }
            if self.preprocessing == Preprocessing::Standardized
                && (col.norm_squared() - nf).abs() > SCALE_TOL * nf
            {
                return Err(FusionError::InvalidConfig(format!("column {j} is not standardized")));
            }
        }
        Ok(())
    }
}

fn validate_shapes(y: &DVector<f64>, x: &DMatrix<f64>) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(FusionError::DimensionMismatch(format!(
            "response has {} rows, design has {}",
            y.len(),
            x.nrows()
        )));
    }
    if y.len() < 2 {
        return Err(FusionError::TooSmall {
            what: "observations",
            min: 2,
            got: y.len(),
        });
    }
    if x.ncols() < 2 {
        return Err(FusionError::TooSmall {
            what: "predictors",
            min: 2,
            got: x.ncols(),
        });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(FusionError::NonFinite("response"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(FusionError::NonFinite("design matrix"));
    }
    Ok(())
}

/// Free-function form of [`Dataset::standardize`].
pub fn standardize(raw_y: DVector<f64>, raw_x: DMatrix<f64>) -> Result<Dataset> {
    Dataset::standardize(raw_y, raw_x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    /// Scale of the g-slab.
    pub g: f64,
    pub a_omega: f64,
    pub b_omega: f64,
}

impl HyperParams {
    pub fn new(g: f64, a_omega: f64, b_omega: f64) -> Result<Self> {
        for (name, value) in [("g", g), ("a_omega", a_omega), ("b_omega", b_omega)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(FusionError::InvalidHyperParam { name, value });
            }
        }
        Ok(Self { g, a_omega, b_omega })
    }

    /// `g = n`, `a_ω = b_ω = 1`.
    pub fn defaults_for(n: usize) -> Self {
        Self {
            g: n as f64,
            a_omega: 1.0,
            b_omega: 1.0,
        }
    }
}

/// Binary indicators over the `p - 1` adjacent coefficient pairs. Entry `j`
/// (zero-based) is `true` when `β_j` and `β_{j+1}` are kept distinct.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FusionIndicator(Vec<bool>);

impl FusionIndicator {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    /// No fusion: every coefficient in its own block.
    pub fn all_ones(p: usize) -> Self {
        Self(vec![true; p.saturating_sub(1)])
    }

    /// Full fusion: a single block.
    pub fn all_zeros(p: usize) -> Self {
        Self(vec![false; p.saturating_sub(1)])
    }

    /// Indicator number `code` in the enumeration of all `2^(p-1)` vectors;
    /// bit `j` of `code` is `δ_j`.
    pub fn from_code(p: usize, code: u64) -> Self {
        Self((0..p - 1).map(|j| (code >> j) & 1 == 1).collect())
    }

    pub fn code(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .fold(0u64, |acc, (j, &b)| acc | ((b as u64) << j))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of coefficients the indicator spans.
    pub fn p(&self) -> usize {
        self.0.len() + 1
    }

    /// Number of ones.
    pub fn p1(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn get(&self, j: usize) -> bool {
        self.0[j]
    }

    pub fn set(&mut self, j: usize, value: bool) {
        self.0[j] = value;
    }

    pub fn with(&self, j: usize, value: bool) -> Self {
        let mut out = self.clone();
        out.0[j] = value;
        out
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn partition(&self) -> Partition {
        partition_from_delta(self)
    }
}

impl fmt::Display for FusionIndicator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Partition of `0..p` into contiguous blocks.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    p: usize,
    blocks: Vec<Range<usize>>,
}

impl Partition {
    /// Builds a partition from block boundaries: a new block starts after
    /// every index `j` in `boundaries` (zero-based, `j < p - 1`).
    pub fn from_boundaries(p: usize, boundaries: impl IntoIterator<Item = usize>) -> Self {
        let mut bits = vec![false; p.saturating_sub(1)];
        for j in boundaries {
            bits[j] = true;
        }
        partition_from_delta(&FusionIndicator(bits))
    }

    /// Validates that the ranges are non-empty, contiguous and cover `0..p`.
    pub fn from_blocks(p: usize, blocks: Vec<Range<usize>>) -> Result<Self> {
        let mut next = 0;
        for b in &blocks {
            if b.start != next || b.end <= b.start {
                return Err(FusionError::InvalidConfig(format!(
                    "blocks must be contiguous and non-empty, found {b:?} at {next}"
                )));
            }
            next = b.end;
        }
        if next != p {
            return Err(FusionError::InvalidConfig(format!(
                "blocks cover 0..{next}, expected 0..{p}"
            )));
        }
        Ok(Self { p, blocks })
    }

    /// Blocks of equal `size` covering `0..p`.
    pub fn equal_blocks(p: usize, size: usize) -> Self {
        let blocks = (0..p).step_by(size).map(|s| s..(s + size).min(p)).collect();
        Self { p, blocks }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn blocks(&self) -> &[Range<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Inverse of [`partition_from_delta`].
    pub fn to_indicator(&self) -> FusionIndicator {
        let mut bits = vec![false; self.p.saturating_sub(1)];
        for b in &self.blocks[..self.blocks.len().saturating_sub(1)] {
            bits[b.end - 1] = true;
        }
        FusionIndicator(bits)
    }

    /// Block label of every coefficient.
    pub fn labels(&self) -> Vec<usize> {
        let mut out = vec![0; self.p];
        for (k, b) in self.blocks.iter().enumerate() {
            out[b.clone()].fill(k);
        }
        out
    }

    /// Copies one value per block to every index of the block.
    pub fn expand(&self, block_values: &[f64]) -> Vec<f64> {
        debug_assert_eq!(block_values.len(), self.blocks.len());
        let mut out = vec![0.0; self.p];
        for (b, &v) in self.blocks.iter().zip(block_values) {
            out[b.clone()].fill(v);
        }
        out
    }

    /// Replaces every entry by the mean of its block.
    pub fn block_average(&self, values: &[f64]) -> Vec<f64> {
        let means: Vec<f64> = self
            .blocks
            .iter()
            .map(|b| values[b.clone()].iter().sum::<f64>() / b.len() as f64)
            .collect();
        self.expand(&means)
    }
}

/// Maps an indicator to its block partition: a block ends after every `j`
/// with `δ_j = 1`.
pub fn partition_from_delta(delta: &FusionIndicator) -> Partition {
    let p = delta.p();
    let mut blocks = Vec::with_capacity(delta.p1() + 1);
    let mut start = 0;
    for (j, &b) in delta.as_slice().iter().enumerate() {
        if b {
            blocks.push(start..j + 1);
            start = j + 1;
        }
    }
    blocks.push(start..p);
    Partition { p, blocks }
}

/// One draw of the fusion sampler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsState {
    pub delta: FusionIndicator,
    pub omega: f64,
    pub sigma2: f64,
    pub beta: Vec<f64>,
}

impl GibbsState {
    /// `δ_j = 0` implies `β_j == β_{j+1}` bit for bit.
    pub fn satisfies_fusion(&self) -> bool {
        self.delta
            .as_slice()
            .iter()
            .enumerate()
            .all(|(j, &d)| d || self.beta[j].to_bits() == self.beta[j + 1].to_bits())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainMeta {
    pub seed: u64,
    pub total_iterations: usize,
    pub burn_in: usize,
    pub n: usize,
    pub p: usize,
    pub hyper: HyperParams,
}

/// Post-burn-in draws of a sampler.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain<S = GibbsState> {
    pub draws: Vec<S>,
    pub meta: ChainMeta,
}

impl<S> Chain<S> {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }
}

/// Posterior means and the thresholded partition of a fusion chain.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    pub beta_mean: Vec<f64>,
    /// Fraction of draws with `δ_j = 1`.
    pub delta_prob: Vec<f64>,
    pub partition_est: Partition,
    pub sigma2_mean: f64,
    pub omega_mean: f64,
    pub threshold: f64,
}

impl PosteriorSummary {
    /// Posterior mean with every declared block replaced by its average.
    pub fn fused_beta(&self) -> Vec<f64> {
        self.partition_est.block_average(&self.beta_mean)
    }
}
