//! Classical spike-and-slab variable selection with a Dirac spike, used as a
//! baseline for the fusion sampler.
//!
//! `ξ_j = 1` puts `β_j` in the slab, `ξ_j = 0` forces `β_j = 0`. With `p0`
//! active columns `X_ξ`, `A = X_ξᵀX_ξ` and `c = X_ξᵀy`, the slab kinds give
//!
//! | slab   | prior mean `b0`  | prior covariance `B0` | `B_ξ`               |
//! |--------|------------------|-----------------------|---------------------|
//! | i-slab | 0                | `c·I`                 | `(A + I/c)⁻¹`       |
//! | g-slab | 0                | `g·A⁻¹`               | `g/(g+1)·A⁻¹`       |
//! | f-slab | `A⁻¹X_ξᵀy`       | `A⁻¹/b`               | `A⁻¹`               |
//!
//! and in every case `b_ξ = B_ξ X_ξᵀy`, `s_n = (yᵀy − b_ξᵀB_ξ⁻¹b_ξ)/2` and
//! `p(y | ξ) = (2π)^{−n/2} |B_ξ|^{½}/|B0|^{½} · Γ(n/2)/s_n^{n/2}`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{FusionError, Result};
use crate::linalg::{self, Chol};
use crate::model::{Chain, ChainMeta, Dataset, HyperParams};
use crate::sampler::{
    draw_gaussian, inclusion_probability, inverse_gamma, sample_beta_dist, validate_threshold,
    SamplerConfig,
};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SelectionIndicator(Vec<bool>);

impl SelectionIndicator {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn all_ones(p: usize) -> Self {
        Self(vec![true; p])
    }

    pub fn all_zeros(p: usize) -> Self {
        Self(vec![false; p])
    }

    pub fn from_code(p: usize, code: u64) -> Self {
        Self((0..p).map(|j| (code >> j) & 1 == 1).collect())
    }

    pub fn code(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .fold(0, |acc, (j, &b)| acc | ((b as u64) << j))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn p0(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn get(&self, j: usize) -> bool {
        self.0[j]
    }

    pub fn with(&self, j: usize, value: bool) -> Self {
        let mut out = self.clone();
        out.0[j] = value;
        out
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    /// Indices of the active columns.
    pub fn active(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter_map(|(j, &b)| b.then_some(j))
            .collect()
    }
}

impl fmt::Display for SelectionIndicator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "param", rename_all = "lowercase")]
pub enum SlabKind {
    /// Independence slab with variance `c`.
    ISlab(f64),
    /// Zellner g-prior.
    GSlab(f64),
    /// Fractional slab with fraction `b`.
    FSlab(f64),
}

impl SlabKind {
    pub fn param(&self) -> f64 {
        match *self {
            SlabKind::ISlab(v) | SlabKind::GSlab(v) | SlabKind::FSlab(v) => v,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.param();
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(FusionError::InvalidHyperParam {
                name: self.name(),
                value: v,
            })
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SlabKind::ISlab(_) => "islab",
            SlabKind::GSlab(_) => "gslab",
            SlabKind::FSlab(_) => "fslab",
        }
    }
}

impl fmt::Display for SlabKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.name(), self.param())
    }
}

impl FromStr for SlabKind {
    type Err = FusionError;

    /// `islab:C`, `gslab:G` or `fslab:B`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || FusionError::InvalidConfig(format!("invalid slab {s:?}, expected islab:C, gslab:G or fslab:B"));
        let (kind, value) = s.split_once(':').ok_or_else(bad)?;
        let v: f64 = value.trim().parse().map_err(|_| bad())?;
        let slab = match kind.trim() {
            "islab" => SlabKind::ISlab(v),
            "gslab" => SlabKind::GSlab(v),
            "fslab" => SlabKind::FSlab(v),
            _ => return Err(bad()),
        };
        slab.validate()?;
        Ok(slab)
    }
}

/// Conditional posterior pieces for one selection indicator.
#[derive(Debug, Clone)]
pub struct SelectionFactors {
    /// Factor of `B_ξ⁻¹`; `None` for the empty model.
    pub precision_chol: Option<Chol>,
    pub b_xi: DVector<f64>,
    pub s_n: f64,
    pub log_det_b: f64,
    pub log_det_b0: f64,
}

impl SelectionFactors {
    pub fn log_marginal(&self, n: usize) -> Result<f64> {
        if self.s_n.is_nan() || self.s_n <= 0.0 {
            return Err(FusionError::DegenerateScale(self.s_n));
        }
        let nf = n as f64;
        Ok(-0.5 * nf * (2.0 * PI).ln() + 0.5 * (self.log_det_b - self.log_det_b0)
            + ln_gamma(0.5 * nf)
            - 0.5 * nf * self.s_n.ln())
    }

    /// `B_ξ` as a dense matrix (`0 × 0` for the empty model).
    pub fn b_matrix(&self) -> DMatrix<f64> {
        self.precision_chol
            .as_ref()
            .map_or_else(|| DMatrix::zeros(0, 0), |c| c.inverse())
    }
}

/// Sufficient statistics and slab choice for the selection sampler.
#[derive(Debug, Clone)]
pub struct SelectionModel {
    n: usize,
    gram: DMatrix<f64>,
    xty: DVector<f64>,
    yty: f64,
    slab: SlabKind,
}

impl SelectionModel {
    pub fn new(data: &Dataset, slab: SlabKind) -> Result<Self> {
        slab.validate()?;
        Ok(Self {
            n: data.n(),
            gram: data.x().tr_mul(data.x()),
            xty: data.x().tr_mul(data.y()),
            yty: data.y().norm_squared(),
            slab,
        })
    }

    pub fn slab(&self) -> SlabKind {
        self.slab
    }

    pub fn p(&self) -> usize {
        self.gram.nrows()
    }

    pub fn factors(&self, xi: &SelectionIndicator) -> Result<SelectionFactors> {
        if xi.len() != self.p() {
            return Err(FusionError::DimensionMismatch(format!(
                "indicator has {} entries, expected {}",
                xi.len(),
                self.p()
            )));
        }
        let idx = xi.active();
        let p0 = idx.len();
        if p0 == 0 {
            return Ok(SelectionFactors {
                precision_chol: None,
                b_xi: DVector::zeros(0),
                s_n: 0.5 * self.yty,
                log_det_b: 0.0,
                log_det_b0: 0.0,
            });
        }
        let a = self.gram.select_rows(&idx).select_columns(&idx);
        let c = self.xty.select_rows(&idx);
        let p0f = p0 as f64;
        let singular = || FusionError::SingularDesign(xi.to_string());
        let (precision, log_det_b0) = match self.slab {
            SlabKind::ISlab(v) => {
                let mut m = a;
                for i in 0..p0 {
                    m[(i, i)] += 1.0 / v;
                }
                (m, p0f * v.ln())
            }
            SlabKind::GSlab(g) => {
                let log_det_a = linalg::log_det(&linalg::cholesky(a.clone()).ok_or_else(singular)?);
                (a * ((g + 1.0) / g), p0f * g.ln() - log_det_a)
            }
            SlabKind::FSlab(b) => {
                let log_det_a = linalg::log_det(&linalg::cholesky(a.clone()).ok_or_else(singular)?);
                (a, -p0f * b.ln() - log_det_a)
            }
        };
        let chol = linalg::cholesky(precision).ok_or_else(|| match self.slab {
            SlabKind::ISlab(_) => FusionError::SingularSystem,
            _ => singular(),
        })?;
        let b_xi = chol.solve(&c);
        let s_n = 0.5 * (self.yty - linalg::inv_quad_form(&chol, &c));
        Ok(SelectionFactors {
            log_det_b: -linalg::log_det(&chol),
            precision_chol: Some(chol),
            b_xi,
            s_n,
            log_det_b0,
        })
    }

    /// `log p(y | ξ)`, `-∞` for rank-deficient g/f-slab models.
    pub fn log_evidence(&self, xi: &SelectionIndicator) -> Result<f64> {
        match self.factors(xi) {
            Ok(f) => f.log_marginal(self.n),
            Err(FusionError::SingularDesign(_) | FusionError::SingularSystem) => {
                Ok(f64::NEG_INFINITY)
            }
            Err(e) => Err(e),
        }
    }
}

pub fn selection_posterior_factors(
    data: &Dataset,
    xi: &SelectionIndicator,
    slab: SlabKind,
) -> Result<SelectionFactors> {
    SelectionModel::new(data, slab)?.factors(xi)
}

pub fn selection_log_marginal(data: &Dataset, xi: &SelectionIndicator, slab: SlabKind) -> Result<f64> {
    SelectionModel::new(data, slab)?.log_evidence(xi)
}

/// One draw of the selection sampler; `β_j = 0` exactly where `ξ_j = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionState {
    pub xi: SelectionIndicator,
    pub omega: f64,
    pub sigma2: f64,
    pub beta: Vec<f64>,
}

impl SelectionState {
    pub fn satisfies_spike(&self) -> bool {
        self.xi
            .as_slice()
            .iter()
            .zip(&self.beta)
            .all(|(&on, &b)| on || b == 0.0)
    }
}

#[derive(Debug, Clone)]
pub struct SelectionSampler {
    model: SelectionModel,
    hyper: HyperParams,
}

impl SelectionSampler {
    pub fn new(data: &Dataset, slab: SlabKind, hyper: HyperParams) -> Result<Self> {
        Ok(Self {
            model: SelectionModel::new(data, slab)?,
            hyper,
        })
    }

    pub fn model(&self) -> &SelectionModel {
        &self.model
    }

    /// Full model when admissible, otherwise the empty model.
    pub fn initial_state(&self, data: &Dataset) -> Result<SelectionState> {
        let p = self.model.p();
        let full = SelectionIndicator::all_ones(p);
        let xi = if self.model.log_evidence(&full)? > f64::NEG_INFINITY {
            full
        } else {
            SelectionIndicator::all_zeros(p)
        };
        let f = self.model.factors(&xi)?;
        let y = data.y();
        let mean = y.mean();
        Ok(SelectionState {
            beta: scatter(&xi, f.b_xi.as_slice()),
            xi,
            omega: self.hyper.a_omega / (self.hyper.a_omega + self.hyper.b_omega),
            sigma2: y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (y.len() - 1) as f64,
        })
    }

    pub fn sweep<R: Rng + ?Sized>(&self, state: &SelectionState, rng: &mut R) -> Result<SelectionState> {
        let p = self.model.p();
        let mut xi = state.xi.clone();
        let mut order: Vec<usize> = (0..p).collect();
        order.shuffle(rng);
        let mut current = self.model.log_evidence(&xi)?;
        for j in order {
            let flipped = xi.with(j, !xi.get(j));
            let other = self.model.log_evidence(&flipped)?;
            let (one, zero) = if xi.get(j) { (current, other) } else { (other, current) };
            let prob = inclusion_probability(one, zero, state.omega)
                .ok_or(FusionError::InadmissibleState(j))?;
            let u: f64 = rng.random();
            if (u < prob) != xi.get(j) {
                xi = flipped;
                current = other;
            }
        }
        let f = self.model.factors(&xi)?;
        let sigma2 = inverse_gamma(rng, 0.5 * self.model.n as f64, f.s_n)?;
        let p0 = xi.p0();
        let omega = sample_beta_dist(
            rng,
            self.hyper.a_omega + p0 as f64,
            self.hyper.b_omega + (p - p0) as f64,
        );
        let active = match &f.precision_chol {
            Some(chol) => draw_gaussian(rng, chol, &f.b_xi, sigma2),
            None => DVector::zeros(0),
        };
        Ok(SelectionState {
            beta: scatter(&xi, active.as_slice()),
            xi,
            omega,
            sigma2,
        })
    }

    pub fn run(&self, data: &Dataset, config: &SamplerConfig) -> Result<Chain<SelectionState>> {
        config.validate()?;
        let mut rng = config.rng();
        let mut state = self.initial_state(data)?;
        let mut draws = Vec::with_capacity(config.total_iterations - config.burn_in);
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
                n: data.n(),
                p: data.p(),
                hyper: self.hyper,
            },
        })
    }
}

fn scatter(xi: &SelectionIndicator, active: &[f64]) -> Vec<f64> {
    let mut beta = vec![0.0; xi.len()];
    for (j, &v) in xi.active().iter().zip(active) {
        beta[*j] = v;
    }
    beta
}

pub fn selection_gibbs(
    data: &Dataset,
    slab: SlabKind,
    hyper: &HyperParams,
    config: &SamplerConfig,
) -> Result<Chain<SelectionState>> {
    SelectionSampler::new(data, slab, *hyper)?.run(data, config)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionSummary {
    pub beta_mean: Vec<f64>,
    pub xi_prob: Vec<f64>,
    /// `xi_prob > threshold`.
    pub selected: Vec<bool>,
    pub sigma2_mean: f64,
    pub omega_mean: f64,
    pub threshold: f64,
}

pub fn summarize_selection(chain: &Chain<SelectionState>, threshold: f64) -> Result<SelectionSummary> {
    validate_threshold(threshold)?;
    let first = chain.draws.first().ok_or(FusionError::EmptyChain)?;
    let p = first.beta.len();
    let m = chain.draws.len() as f64;
    let mut beta_mean = vec![0.0; p];
    let mut xi_prob = vec![0.0; p];
    let (mut sigma2, mut omega) = (0.0, 0.0);
    for d in &chain.draws {
        for j in 0..p {
            beta_mean[j] += d.beta[j];
            xi_prob[j] += d.xi.get(j) as u8 as f64;
        }
        sigma2 += d.sigma2;
        omega += d.omega;
    }
    beta_mean.iter_mut().for_each(|v| *v /= m);
    xi_prob.iter_mut().for_each(|v| *v /= m);
    Ok(SelectionSummary {
        selected: xi_prob.iter().map(|&q| q > threshold).collect(),
        beta_mean,
        xi_prob,
        sigma2_mean: sigma2 / m,
        omega_mean: omega / m,
        threshold,
    })
}
