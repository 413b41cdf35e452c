use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use toral_rigidity::group_model::{
    build_theorem1_family, membership, random_h1, random_word, semidirect_split, BlockSpec, SubgroupTag,
};
use toral_rigidity::relt_certificate::{build_certificate, check_certificate, klkl_decompose};
use toral_rigidity::IntMatrix;

fn lambda_for(k: usize) -> Vec<IntMatrix> {
    match k {
        0 => vec![],
        1 => vec![IntMatrix::identity(1)],
        2 => vec![IntMatrix::from_i64(&[[2, 1], [1, 1]]).unwrap()],
        _ => vec![IntMatrix::from_i64(&[[0, 0, 1], [1, 0, -1], [0, 1, 0]]).unwrap()],
    }
}

const TAGS: [SubgroupTag; 7] =
    [SubgroupTag::G, SubgroupTag::Gamma, SubgroupTag::H, SubgroupTag::H1, SubgroupTag::H2, SubgroupTag::K, SubgroupTag::L];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn words_stay_in_their_subgroup(k in 0usize..=3, n in 2usize..=3, len in 0usize..=12, seed in any::<u64>()) {
        let p = build_theorem1_family(k, n, &lambda_for(k)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for tag in p.all_tags() {
            let g = random_word(&p, tag, len, &mut rng);
            prop_assert!(membership(&p.spec, &g, tag).unwrap(), "{:?} word {} left the subgroup", tag, g);
            prop_assert!(membership(&p.spec, &g, SubgroupTag::G).unwrap());
        }
    }

    #[test]
    fn h1_elements_split_and_decompose(k in 1usize..=3, n in 2usize..=3, seed in any::<u64>()) {
        let spec = BlockSpec::new(k, n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_h1(spec, 50, &mut rng);
        prop_assert!(h.belongs_to(SubgroupTag::H1));
        let w = klkl_decompose(&h).unwrap();
        prop_assert!(w.verify().is_ok());
        prop_assert_eq!(w.recompose(), h.clone());

        let p = build_theorem1_family(k, n, &lambda_for(k)).unwrap();
        let g = random_word(&p, SubgroupTag::G, 8, &mut rng);
        let (t, gamma) = semidirect_split(&g).unwrap();
        prop_assert!(t.belongs_to(SubgroupTag::H));
        prop_assert!(gamma.belongs_to(SubgroupTag::Gamma));
        prop_assert_eq!(t.mul(&gamma), g);
    }

    #[test]
    fn inverses_and_identity_are_members_everywhere(k in 0usize..=3, n in 2usize..=3, seed in any::<u64>()) {
        let p = build_theorem1_family(k, n, &lambda_for(k)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let id = toral_rigidity::group_model::GroupElement::identity(p.spec);
        for tag in TAGS {
            prop_assert!(id.belongs_to(tag));
            let g = random_word(&p, tag, 5, &mut rng);
            prop_assert!(g.inverse().belongs_to(tag));
            prop_assert!(g.mul(&g.inverse()).is_identity());
        }
    }
}

#[test]
fn certificates_check_across_small_families() {
    for k in 0..=3 {
        for n in [2, 3] {
            let p = build_theorem1_family(k, n, &lambda_for(k)).unwrap();
            let cert = build_certificate(&p).unwrap();
            let r = check_certificate(&cert, &p, 40, k as u64).unwrap();
            assert!(r.all_passed, "k={k} n={n}: {:?}", r.failures().collect::<Vec<_>>());
        }
    }
}
