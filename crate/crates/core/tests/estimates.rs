//! Estimate checkers: accepted instances, rejected hypotheses and bundles.

use weakhilbert::acceptance::{average_cell, average_cells};
use weakhilbert::estimates::{
    basic_params, check_counting, check_estimate, fuzz, generate, generator_params, random_counting, rise_params,
    Bundle, CountingInstance, EstimateInstance, Kind, Verdict,
};
use weakhilbert::{gen, Caps, Error, FiniteSet, Functional, RealVector, SigmaRegistry, Q};

fn hypothesis(r: Result<weakhilbert::estimates::EstimateReport, Error>) -> String {
    match r {
        Err(Error::Hypothesis(m)) => m,
        other => panic!("expected a hypothesis failure, got {other:?}"),
    }
}

#[test]
fn mfe_rejects_overlapping_functionals_and_large_lambdas() {
    let p = basic_params();
    let reg = SigmaRegistry::new();
    let caps = Caps::default();
    let mut inst = EstimateInstance::new(Kind::Mfe, 1.0);
    inst.functionals = vec![Functional::leaf(1, 1), Functional::leaf(-1, 7)];
    inst.vectors = vec![RealVector::unit(3), RealVector::unit(5)];
    inst.b = vec![0.6, 0.8];
    inst.lambdas = vec![0.6, 0.8];
    let r = check_estimate(&inst, &p, &reg, &caps).unwrap();
    assert!(r.holds);
    assert_eq!(r.verdict, Verdict::Holds);
    assert!((r.rhs - 4.0).abs() < 1e-12);

    inst.lambdas = vec![1.0, 1.0];
    assert!(hypothesis(check_estimate(&inst, &p, &reg, &caps)).contains("unit ball"));

    inst.lambdas = vec![0.6, 0.8];
    inst.functionals[1] = Functional::leaf(1, 1);
    assert!(hypothesis(check_estimate(&inst, &p, &reg, &caps)).contains("not disjoint"));

    inst.functionals[1] = Functional::leaf(1, 7);
    inst.c = 0.5;
    assert!(hypothesis(check_estimate(&inst, &p, &reg, &caps)).contains("‖x_1‖ ≤ C"));
}

#[test]
fn sae_needs_scc_and_allowability() {
    let p = basic_params();
    let reg = SigmaRegistry::new();
    let caps = Caps::default();
    let inst = generate(&mut gen::rng(3), Kind::Sae, &p, &caps).unwrap();
    assert!(check_estimate(&inst, &p, &reg, &caps).unwrap().holds);

    let mut loose = inst.clone();
    loose.eps = Some("1/2".into());
    assert!(hypothesis(check_estimate(&loose, &p, &reg, &caps)).contains("exceeds 1/m"));

    let mut uneven = inst.clone();
    uneven.b_squares[0] = Q::new(1.into(), 2.into());
    uneven.b[0] = 0.5f64.sqrt();
    assert!(check_estimate(&uneven, &p, &reg, &caps).is_err());

    let mut two = inst.clone();
    let later = inst.vectors.last().unwrap().max_supp().unwrap();
    two.functionals.push(Functional::leaf(1, later + 1));
    two.functionals.push(Functional::leaf(1, later + 2));
    two.lambdas = vec![0.5, 0.5, 0.5];
    assert!(hypothesis(check_estimate(&two, &p, &reg, &caps)).contains("allowable"));
}

#[test]
fn rise_rejects_slow_weights() {
    let p = rise_params();
    let reg = SigmaRegistry::new();
    let caps = Caps::default();
    let inst = generate(&mut gen::rng(4), Kind::Rise, &p, &caps).unwrap();
    assert!(check_estimate(&inst, &p, &reg, &caps).unwrap().holds);
    let mut slow = inst.clone();
    slow.weights = (0..slow.weights.len() as u32).map(|k| 2 + 2 * k).collect();
    assert!(check_estimate(&slow, &p, &reg, &caps).is_err());
    let mut big = inst.clone();
    big.b[0] = p.m(big.weights[0] as usize).unwrap() as f64 * 2.0;
    assert!(hypothesis(check_estimate(&big, &p, &reg, &caps)).contains("c_1"));
}

#[test]
fn growth_dependent_kinds_are_refused_on_toy_parameters() {
    let p = basic_params();
    let caps = Caps::default();
    for kind in [Kind::L73, Kind::P74, Kind::P78, Kind::P710, Kind::Pnorm] {
        let inst = EstimateInstance::new(kind, 2.0);
        let msg = hypothesis(check_estimate(&inst, &p, &SigmaRegistry::new(), &caps));
        assert!(msg.contains("growth"), "{kind}: {msg}");
        assert!(generator_params(kind).is_err());
    }
}

#[test]
fn kinds_parse_and_serialize_by_name() {
    for kind in Kind::ALL {
        assert_eq!(kind.name().parse::<Kind>().unwrap(), kind);
        assert_eq!(serde_json::to_string(&kind).unwrap(), format!("\"{}\"", kind.name()));
    }
    assert!("P7_5".parse::<Kind>().is_err());
}

#[test]
fn bundles_replay() {
    let caps = Caps::default();
    for kind in [Kind::Mfe, Kind::Sae, Kind::Rise, Kind::L72] {
        let p = generator_params(kind).unwrap();
        let inst = generate(&mut gen::rng(11), kind, &p, &caps).unwrap();
        let reg = SigmaRegistry::new();
        let report = check_estimate(&inst, &p, &reg, &caps).unwrap();
        let bundle = Bundle {
            params: p.config(),
            registry: reg,
            instance: inst,
            report: Some(report.clone()),
        };
        let back: Bundle = serde_json::from_str(&serde_json::to_string(&bundle).unwrap()).unwrap();
        assert_eq!(back.check(&caps).unwrap(), report);
    }
}

#[test]
fn fuzzing_is_reproducible() {
    let caps = Caps::default();
    let a = fuzz(Kind::Mfe, 50, 3, &caps).unwrap();
    let b = fuzz(Kind::Mfe, 50, 3, &caps).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.holds, 50);
}

#[test]
fn counting_two_element_case_by_hand() {
    // A = {1, 2}: the partitions are ({1},{2}) and ({2},{1}); the constant is 2
    let inst = CountingInstance {
        a: FiniteSet::interval(1, 2),
        t: vec![vec!["0".into(), "1/3".into()], vec!["5".into(), "0".into()]],
        x: vec!["2".into(), "-3".into()],
    };
    let r = check_counting(&inst).unwrap();
    assert_eq!(r.partitions, 2);
    assert!(r.stated_holds);
}

#[test]
fn odd_counting_constant_is_reported_not_asserted() {
    let mut rng = gen::rng(2);
    for (size, num, den) in [(3usize, 3, 1), (5, 10, 3), (7, 7, 2)] {
        let r = check_counting(&random_counting(&mut rng, size)).unwrap();
        assert!(!r.even);
        assert!(r.empirical_holds);
        assert_eq!(r.empirical_constant, Q::new(num.into(), den.into()));
        // 2(2L+1)/(L+1) with |A| = 2L+1
        let l = (size / 2) as i64;
        assert_eq!(r.empirical_constant, Q::new((2 * (2 * l + 1)).into(), (l + 1).into()));
    }
}

#[test]
fn counting_rejects_nonzero_diagonal_and_oversize() {
    let mut inst = random_counting(&mut gen::rng(1), 4);
    inst.t[2][2] = "1/2".into();
    assert!(matches!(check_counting(&inst), Err(Error::Hypothesis(_))));
    assert!(check_counting(&random_counting(&mut gen::rng(1), 11)).is_err());
}

#[test]
#[ignore = "cells with n = 3 and min L ≥ 3 have supports beyond 4·10^8 coordinates"]
fn averages_full_grid() {
    let caps = Caps::default();
    for (n, min_l, _) in average_cells() {
        average_cell(n, min_l, &caps).unwrap().unwrap();
    }
}
