use nalgebra::DMatrix;

use vfusion::simbench::*;
use vfusion::{FusionIndicator, Partition, SamplerConfig};

fn sample_covariance(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows() as f64;
    let mut c = x.clone();
    for mut col in c.column_iter_mut() {
        let m = col.mean();
        col.add_scalar_mut(-m);
    }
    c.tr_mul(&c) / (n - 1.0)
}

/// `E‖S − Σ‖_F² = Σ_ij (Σ_ii Σ_jj + Σ_ij²) / (n − 1)` for Gaussian rows, about
/// 0.084 at ρ = 0 and 0.103 at ρ = 0.5 with p = 20, n = 5000. The ρ = 0.5
/// error is dominated by one common factor, hence the loose one-sided bound.
#[test]
fn generated_designs_have_the_target_covariance() {
    for case_id in 1..=6 {
        for &rho in &[0.0, 0.5] {
            let case = SimCase::new(case_id, 5000, rho).unwrap();
            let (raw, truth) = generate_case(&case, 31 + case_id as u64);
            assert_eq!(truth, case.beta_true);
            let sigma = case.covariance();
            let expected: f64 = (0..20)
                .flat_map(|i| (0..20).map(move |j| (i, j)))
                .map(|(i, j)| sigma[(i, i)] * sigma[(j, j)] + sigma[(i, j)].powi(2))
                .sum::<f64>()
                / 4999.0;
            let diff = sample_covariance(&raw.x) - sigma;
            let dist2 = diff.norm_squared();
            assert!(dist2 <= 3.0 * expected, "case {case_id} rho {rho}: {dist2} vs {expected}");
            assert!(diff.amax() <= 0.1, "case {case_id} rho {rho}: {}", diff.amax());
        }
    }
}

#[test]
fn noise_level_matches_case() {
    let case = SimCase::new(4, 5000, 0.0).unwrap();
    let (raw, truth) = generate_case(&case, 5);
    let resid = &raw.y - &raw.x * nalgebra::DVector::from_vec(truth);
    let sd = (resid.norm_squared() / 5000.0).sqrt();
    assert!((sd - 1.5).abs() < 0.05, "{sd}");
}

#[test]
fn pse_with_identity_is_mse() {
    let truth = SimCase::new(2, 10, 0.0).unwrap().beta_true;
    let hats: Vec<Vec<f64>> = (0..4)
        .map(|k| truth.iter().enumerate().map(|(j, b)| b + 0.1 * ((j * k) % 3) as f64).collect())
        .collect();
    let eye = DMatrix::identity(20, 20);
    assert_eq!(compute_pse(&hats, &truth, &eye).unwrap(), compute_mse(&hats, &truth).unwrap());
}

#[test]
fn pb_stays_in_unit_interval() {
    for p in 2..=8usize {
        let all: Vec<Partition> = (0..1u64 << (p - 1))
            .map(|c| FusionIndicator::from_code(p, c).partition())
            .collect();
        for truth in all.iter().filter(|t| t.len() < p) {
            for est in &all {
                let v = compute_pb(est, truth).unwrap();
                assert!((0.0..=1.0).contains(&v));
            }
            assert_eq!(compute_pb(truth, truth).unwrap(), 1.0);
        }
    }
}

#[test]
fn pb_examples() {
    let truth = Partition::equal_blocks(20, 5);
    assert_eq!(compute_pb(&truth, &truth).unwrap(), 1.0);
    let singletons = Partition::from_boundaries(20, 0..19);
    assert_eq!(compute_pb(&singletons, &truth).unwrap(), 0.0);
    let one_split = Partition::from_boundaries(20, [1, 4, 9, 14]);
    assert_eq!(compute_pb(&one_split, &truth).unwrap(), 0.9375);
    assert!(compute_pb(&singletons, &singletons).is_err());
}

fn small_study(threads: usize) -> StudyConfig {
    let mut cfg = StudyConfig::new(1, 60, 0.2, 4, 123);
    cfg.sampler = SamplerConfig::new(400, 100, 0);
    cfg.threads = threads;
    cfg
}

#[test]
fn study_is_deterministic_and_thread_invariant() {
    let a = run_study(&small_study(1)).unwrap();
    let b = run_study(&small_study(1)).unwrap();
    let c = run_study(&small_study(4)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.replicates, c.replicates);
    assert_eq!(a.mse, c.mse);
    assert!(a.replicates.iter().enumerate().all(|(i, r)| r.index == i));
    assert_eq!(a.g, 60.0);
}

#[test]
fn single_replicate_has_no_sd() {
    let mut cfg = small_study(1);
    cfg.replicates = 1;
    let r = run_study(&cfg).unwrap();
    assert!(!r.mse.sd_defined);
    assert_eq!(r.mse.sd, 0.0);
    assert_eq!(r.mse.mean, r.replicates[0].mse);
}

#[test]
fn replicate_seeds_are_distinct() {
    let seeds: std::collections::HashSet<u64> = (0..1000).map(|k| replicate_seed(7, k)).collect();
    assert_eq!(seeds.len(), 1000);
}

#[test]
fn bad_case_is_rejected() {
    let err = SimCase::new(7, 100, 0.0).unwrap_err();
    assert!(err.to_string().contains("case must be 1..6"));
    assert!(run_study(&StudyConfig::new(7, 100, 0.0, 2, 1)).is_err());
}
