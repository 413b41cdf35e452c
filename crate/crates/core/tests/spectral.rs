use nalgebra::DMatrix;
use num_bigint::BigInt;
use proptest::prelude::*;

use toral_rigidity::group_model::{build_theorem1_family, sl_generators};
use toral_rigidity::spectral_witness::{
    asi_witness, compression_norm, CompressedOperator, DiscreteMeasure, Exclusion,
};
use toral_rigidity::{IntMatrix, LatticeVector};

fn sl2_matrix() -> impl Strategy<Value = IntMatrix> {
    prop::collection::vec(-3i64..=3, 4)
        .prop_filter("det 1", |e| e[0] * e[3] - e[1] * e[2] == 1)
        .prop_map(|e| IntMatrix::new(2, 2, e.into_iter().map(BigInt::from).collect()).unwrap())
}

fn dense_top(op: &CompressedOperator) -> f64 {
    let n = op.len();
    let m = DMatrix::from_row_slice(n, n, &op.to_dense());
    m.singular_values().max()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn estimate_never_exceeds_dense_oracle(gens in prop::collection::vec(sl2_matrix(), 1..=3), radius in 2u32..=10) {
        let op = CompressedOperator::build(&gens, Exclusion::Origin, radius).unwrap();
        prop_assume!(op.len() <= 2000);
        let est = compression_norm(&gens, Exclusion::Origin, radius, 1e-12, 200_000, 1).unwrap();
        prop_assert!(est.norm_estimate <= dense_top(&op) + 1e-6);
    }

    #[test]
    fn nested_compressions_are_monotone(gens in prop::collection::vec(sl2_matrix(), 1..=2), r1 in 2u32..=8, extra in 1u32..=4) {
        let small = compression_norm(&gens, Exclusion::Origin, r1, 1e-13, 1_000_000, 0).unwrap();
        let large = compression_norm(&gens, Exclusion::Origin, r1 + extra, 1e-13, 1_000_000, 0).unwrap();
        prop_assume!(small.converged && large.converged);
        prop_assert!(small.norm_estimate <= large.norm_estimate + 1e-9,
            "radius {} gives {}, radius {} gives {}", r1, small.norm_estimate, r1 + extra, large.norm_estimate);
    }

    #[test]
    fn witness_deviation_decays_with_window(l in 8usize..=96) {
        let a = IntMatrix::from_i64(&[[2, 1], [1, 1]]).unwrap();
        let xi = LatticeVector::from_i64(&[1, 0]);
        let d1 = asi_witness(&a, &xi, l).unwrap().deviations[0].deviation;
        let d2 = asi_witness(&a, &xi, 2 * l).unwrap().deviations[0].deviation;
        prop_assert!(d2 <= 0.75 * d1);
    }

    #[test]
    fn lifted_witness_matches_lambda(l in 1usize..=24, seed in prop::collection::vec(-3i64..=3, 2)) {
        let xi = LatticeVector::from_i64(&seed);
        prop_assume!(!xi.is_zero());
        let a = IntMatrix::from_i64(&[[3, 2], [1, 1]]).unwrap();
        let p = build_theorem1_family(2, 2, std::slice::from_ref(&a)).unwrap();
        let w = asi_witness(&a, &xi, l).unwrap();
        for (up, down) in w.lift_deviations(&p).unwrap() {
            prop_assert_eq!(up, down);
        }
    }

    #[test]
    fn marginals_sum_to_total_mass(raw in prop::collection::vec((0u64..64, 0u64..64, 1u32..1000), 1..200)) {
        let total: f64 = raw.iter().map(|e| e.2 as f64).sum();
        let entries = raw.iter().map(|&(x, y, w)| (x, y, w as f64 / total)).collect();
        let m = DiscreteMeasure::new(2, 8, entries).unwrap();
        let (mx, my) = m.marginals();
        prop_assert!((mx.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
        prop_assert!((my.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
    }
}

#[test]
fn sl2_radii_table_is_monotone() {
    let gens = sl_generators(2);
    let norms: Vec<f64> = [4, 6, 8, 10, 12]
        .iter()
        .map(|&r| compression_norm(&gens, Exclusion::Origin, r, 1e-13, 1_000_000, 0).unwrap().norm_estimate)
        .collect();
    assert!(norms.windows(2).all(|w| w[1] >= w[0] - 1e-9), "{norms:?}");
    assert!(norms.iter().all(|&x| x < 1.0));
}

#[test]
fn origin_included_control_is_one() {
    for r in [2, 5, 9] {
        let est = compression_norm(&sl_generators(2), Exclusion::None, r, 1e-13, 1_000_000, 0).unwrap();
        assert!((est.norm_estimate - 1.0).abs() <= 1e-9, "{}", est.norm_estimate);
    }
}
