//! Invariants checked on random inputs.

use proptest::prelude::*;
use weakhilbert::acceptance::{random_specials, sandwich_params, sigma_params};
use weakhilbert::averages::{average_support_len, repeated_average};
use weakhilbert::estimates::{check_counting, random_counting};
use weakhilbert::gen;
use weakhilbert::norm::{full_j_max, le, norm_bounds, upper_bound, NormOptions};
use weakhilbert::params::TreeVerdict;
use weakhilbert::schreier::{is_member, oracle, Variant};
use weakhilbert::{Caps, FiniteSet, RealVector, SigmaRegistry, Q};

fn set_strategy(max: u32, len: usize) -> impl Strategy<Value = FiniteSet> {
    proptest::collection::btree_set(1..=max, 0..=len).prop_map(|s| FiniteSet::from_unsorted(s.into_iter().collect()))
}

fn vector_strategy() -> impl Strategy<Value = RealVector> {
    proptest::collection::btree_map(1u32..=16, -1.0f64..1.0, 1..=6)
        .prop_map(|m| RealVector::new(m.into_iter().filter(|(_, v)| *v != 0.0)))
        .prop_filter("nonzero", |x| !x.is_empty())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn greedy_membership_matches_definition(f in set_strategy(14, 7), n in 0u32..4) {
        prop_assert_eq!(is_member(&f, n, Variant::Standard), oracle::standard_member(f.elems(), n));
    }

    #[test]
    fn schreier_families_are_hereditary(f in set_strategy(14, 7), n in 0u32..4, mask in any::<u64>()) {
        let g = f.select(mask);
        if is_member(&f, n, Variant::Standard) {
            prop_assert!(is_member(&g, n, Variant::Standard));
        }
    }

    #[test]
    fn schreier_families_are_spreading(f in set_strategy(12, 6), n in 0u32..4, shift in proptest::collection::vec(0u32..3, 6)) {
        let mut acc = 0;
        let spread: Vec<u32> = f.elems().iter().zip(&shift).map(|(e, s)| { acc += s; e + acc }).collect();
        if is_member(&f, n, Variant::Standard) {
            prop_assert!(is_member(&FiniteSet::from_unsorted(spread), n, Variant::Standard));
        }
    }

    #[test]
    fn averages_are_probability_vectors(n in 0u32..3, start in 1u32..7) {
        let len = average_support_len(n, start as u64);
        let l: Vec<u32> = (start..=start + len as u32).collect();
        let a = repeated_average(n, &l).unwrap();
        prop_assert_eq!(a.l1(), Q::from_integer(1.into()));
        prop_assert_eq!(a.coeffs().len() as u64, len);
        prop_assert_eq!(a.coeffs()[0].0, start);
    }

    #[test]
    fn norm_bounds_are_ordered(x in vector_strategy()) {
        let p = sandwich_params();
        let reg = SigmaRegistry::new();
        let b = norm_bounds(&x, &p, &reg, &NormOptions::new(full_j_max(&p))).unwrap();
        let l1: f64 = x.coeffs().iter().map(|c| c.1.abs()).sum();
        prop_assert!(le(x.linf(), b.lower));
        prop_assert!(le(b.lower, b.upper));
        prop_assert!(le(b.upper, l1));
        prop_assert!((b.lower_certificate.evaluate(&x) - b.lower).abs() <= 1e-9);
        prop_assert!(b.lower_certificate.validate(&p, &reg).is_ok());
    }

    #[test]
    fn norm_is_homogeneous_and_sign_invariant(x in vector_strategy(), c in 0.1f64..4.0) {
        let p = sandwich_params();
        let caps = Caps::default();
        let (u, _) = upper_bound(&x, &p, &caps).unwrap();
        let (us, _) = upper_bound(&x.scale(-c), &p, &caps).unwrap();
        prop_assert!((us - c * u).abs() <= 1e-9 * us.max(1.0));
    }

    #[test]
    fn functionals_never_exceed_the_upper_bound(seed in any::<u64>(), x in vector_strategy()) {
        let p = sandwich_params();
        let mut rng = gen::rng(seed);
        let supp: Vec<u32> = (1..=16).collect();
        let f = gen::even_functional(&mut rng, &p, &supp, 3, &[2, 4]);
        let (u, _) = upper_bound(&x, &p, &Caps::default()).unwrap();
        prop_assert!(le(f.evaluate(&x).abs(), u));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sigma_tables_stay_treelike(seed in any::<u64>()) {
        let p = sigma_params();
        let mut reg = SigmaRegistry::new();
        let mut rng = gen::rng(seed);
        let seqs = random_specials(&p, &mut reg, &mut rng, 60).unwrap();
        reg.verify(&p).unwrap();
        for s in &seqs {
            for t in &seqs {
                let v = reg.check_treelike(&p, s, t).unwrap();
                prop_assert!(!matches!(v, TreeVerdict::Violation { .. }), "{:?}", v);
            }
        }
    }

    #[test]
    fn even_counting_identity_is_exact(seed in any::<u64>(), half in 1usize..4) {
        let r = check_counting(&random_counting(&mut gen::rng(seed), 2 * half)).unwrap();
        prop_assert!(r.stated_holds);
        prop_assert!(r.empirical_holds);
        prop_assert_eq!(&r.stated_constant, &r.empirical_constant);
    }
}
