use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use vfusion::{standardize, Dataset, FusionError, FusionIndicator, Partition};

proptest! {
    #[test]
    fn standardize_output_is_valid(
        n in 3usize..30,
        p in 2usize..6,
        seed in prop::collection::vec(-1e3f64..1e3, 180),
        shift in -50.0f64..50.0,
    ) {
        let x = DMatrix::from_fn(n, p, |i, j| seed[(i * p + j) % 180] + shift * j as f64 + (i * j) as f64 * 1e-3);
        let y = DVector::from_fn(n, |i, _| seed[(i * 7) % 180] - shift);
        match standardize(y, x) {
            Ok(d) => {
                prop_assert!(d.check_invariants().is_ok());
                prop_assert!(d.is_standardized());
                for col in d.x().column_iter() {
                    prop_assert!(col.sum().abs() < 1e-8 * n as f64);
                    prop_assert!((col.norm_squared() - n as f64).abs() < 1e-8 * n as f64);
                }
                prop_assert!(d.y().sum().abs() < 1e-6 * n as f64);
            }
            Err(FusionError::ConstantColumn(_)) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }
}

#[test]
fn rejects_bad_inputs() {
    let x = DMatrix::from_fn(4, 2, |i, j| (i + 2 * j) as f64);
    assert!(Dataset::new(DVector::zeros(3), x.clone()).is_err());
    let mut bad = x.clone();
    bad[(0, 0)] = f64::NAN;
    assert!(Dataset::new(DVector::zeros(4), bad).is_err());
    let constant = DMatrix::from_fn(4, 2, |i, j| if j == 1 { 3.0 } else { i as f64 });
    assert!(matches!(
        standardize(DVector::from_element(4, 1.0), constant),
        Err(FusionError::ConstantColumn(1))
    ));
}

#[test]
fn partition_round_trip() {
    for p in 2..=10usize {
        for code in 0..1u64 << (p - 1) {
            let d = FusionIndicator::from_code(p, code);
            let part = d.partition();
            assert_eq!(part.len(), d.p1() + 1);
            assert_eq!(part.to_indicator(), d);
        }
    }
    let part = FusionIndicator::new(vec![false, true, false, false]).partition();
    assert_eq!(part, Partition::from_blocks(5, vec![0..2, 2..5]).unwrap());
}
