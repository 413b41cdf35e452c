use num_bigint::BigInt;
use num_traits::{One, Signed};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use toral_rigidity::small_n_classify::{
    classify_small_n, conjugate_into_k, detect_on_side, in_k_pattern, Side,
};
use toral_rigidity::IntMatrix;

fn k_element(rng: &mut ChaCha8Rng) -> IntMatrix {
    let eps: i64 = if rng.gen_bool(0.5) { 1 } else { -1 };
    let t = |rng: &mut ChaCha8Rng| rng.gen_range(-2..=2);
    let mut c = IntMatrix::from_i64(&[[1, 0], [0, eps]]).unwrap();
    for _ in 0..3 {
        c = &c * &IntMatrix::transvection(2, 0, 1, t(rng));
        c = &c * &IntMatrix::transvection(2, 1, 0, t(rng));
    }
    let mut m = IntMatrix::identity(3);
    m.set(0, 0, BigInt::from(eps));
    m.set(0, 1, BigInt::from(rng.gen_range(-4..=4)));
    m.set(0, 2, BigInt::from(rng.gen_range(-4..=4)));
    m.set_block(1, 1, &c);
    m
}

fn unimodular(rng: &mut ChaCha8Rng) -> IntMatrix {
    loop {
        let m = IntMatrix::new(3, 3, (0..9).map(|_| BigInt::from(rng.gen_range(-10..=10))).collect()).unwrap();
        if m.det().unwrap().abs().is_one() {
            return m;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn conjugated_k_subgroups_come_back(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gens: Vec<IntMatrix> = (0..rng.gen_range(1..=3)).map(|_| k_element(&mut rng)).collect();
        let b = unimodular(&mut rng);
        let b_inv = b.inverse_unimodular().unwrap();
        let conj: Vec<IntMatrix> = gens.iter().map(|g| &(&b * g) * &b_inv).collect();

        let cert = detect_on_side(&conj, 3, Side::Gamma).unwrap().expect("B e1 is a common eigenvector");
        prop_assert!(cert.verify());
        let r = conjugate_into_k(&cert).unwrap();
        prop_assert!(r.conjugator.det().unwrap().is_one());
        prop_assert_eq!(r.conjugator.col(0), cert.vector.entries().to_vec());
        let a_inv = r.conjugator.inverse_unimodular().unwrap();
        for (g, k) in conj.iter().zip(&r.conjugated) {
            prop_assert_eq!(&(&(&a_inv * g) * &r.conjugator), k);
            prop_assert!(in_k_pattern(k));
        }
        let report = classify_small_n(&conj, 3).unwrap();
        prop_assert!(report.gamma_side.is_some());
    }

    #[test]
    fn transpose_side_is_the_gamma_side_of_the_transpose(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gens: Vec<IntMatrix> = (0..2).map(|_| k_element(&mut rng)).collect();
        let b = unimodular(&mut rng);
        let b_inv = b.inverse_unimodular().unwrap();
        let conj: Vec<IntMatrix> = gens.iter().map(|g| &(&b * g) * &b_inv).collect();
        let transposed: Vec<IntMatrix> = conj.iter().map(IntMatrix::transpose).collect();
        let left = detect_on_side(&transposed, 3, Side::Transpose).unwrap();
        let right = detect_on_side(&conj, 3, Side::Gamma).unwrap();
        prop_assert_eq!(left.is_some(), right.is_some());
        if let Some(c) = left {
            prop_assert!(c.verify());
        }
    }
}

#[test]
fn sl2_and_sl3_standard_generators_have_no_common_eigenvector() {
    let sl2 = vec![IntMatrix::from_i64(&[[1, 1], [0, 1]]).unwrap(), IntMatrix::from_i64(&[[1, 0], [1, 1]]).unwrap()];
    let r = classify_small_n(&sl2, 2).unwrap();
    assert!(r.gamma_side.is_none() && r.transpose_side.is_none());
    assert!(r.non_ergodicity_witness.is_none());
    let sl3 = vec![IntMatrix::transvection(3, 0, 1, 1), IntMatrix::transvection(3, 1, 2, 1), IntMatrix::transvection(3, 2, 0, 1)];
    let r = classify_small_n(&sl3, 3).unwrap();
    assert!(r.gamma_side.is_none() && r.transpose_side.is_none());
}
