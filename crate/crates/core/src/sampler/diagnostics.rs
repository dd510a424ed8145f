//! Optional convergence diagnostics.

use crate::model::{Chain, GibbsState};

/// Effective sample size of a scalar trace using Geyer's initial positive
/// sequence estimator of the integrated autocorrelation time.
pub fn effective_sample_size(trace: &[f64]) -> f64 {
    let m = trace.len();
    if m < 4 {
        return m as f64;
    }
    let mean = trace.iter().sum::<f64>() / m as f64;
    let centered: Vec<f64> = trace.iter().map(|v| v - mean).collect();
    let var = centered.iter().map(|v| v * v).sum::<f64>() / m as f64;
    if var == 0.0 {
        return m as f64;
    }
    let autocorr = |lag: usize| {
        centered[..m - lag]
            .iter()
            .zip(&centered[lag..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / (m as f64 * var)
    };
    let mut tau = -1.0;
    let mut lag = 0;
    while lag + 1 < m {
        let pair = autocorr(lag) + autocorr(lag + 1);
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        lag += 2;
    }
    (m as f64 / tau.max(1.0)).min(m as f64)
}

/// Largest absolute difference between the `δ` inclusion frequencies of two
/// chains on the same data.
pub fn chain_agreement(a: &Chain<GibbsState>, b: &Chain<GibbsState>) -> f64 {
    let freq = |c: &Chain<GibbsState>| {
        let p = c.meta.p;
        let mut f = vec![0.0; p - 1];
        for d in &c.draws {
            for (acc, &on) in f.iter_mut().zip(d.delta.as_slice()) {
                *acc += on as u8 as f64;
            }
        }
        f.iter_mut().for_each(|v| *v /= c.draws.len().max(1) as f64);
        f
    };
    freq(a)
        .iter()
        .zip(freq(b))
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn independent_draws_have_full_ess() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
        let ess = effective_sample_size(&xs);
        assert!(ess > 4000.0, "{ess}");
    }

    #[test]
    fn sticky_chain_has_small_ess() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut x = 0.0;
        let xs: Vec<f64> = (0..5000)
            .map(|_| {
                x = 0.95 * x + rng.random::<f64>() - 0.5;
                x
            })
            .collect();
        // AR(1) with φ = 0.95 has τ = (1+φ)/(1−φ) = 39.
        let ess = effective_sample_size(&xs);
        assert!(ess > 5000.0 / 80.0 && ess < 5000.0 / 20.0, "{ess}");
    }

    #[test]
    fn constant_trace() {
        assert_eq!(effective_sample_size(&[1.0; 10]), 10.0);
    }
}
