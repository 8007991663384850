//! Rapidly increasing sequences, exact vectors and dependent sequences.

use weakhilbert::constructions::{
    build_dependent, build_exact_sequence, build_ris, check_exact_sequence, gap_demo, gap_toy_params,
    DependentWitness, ExactSequence, RisWitness,
};
use weakhilbert::params::Split;
use weakhilbert::schreier::{is_maximal, minima};
use weakhilbert::{Caps, FiniteSet, Functional, ParameterSystem, RealVector, SigmaRegistry};

fn chain_params() -> ParameterSystem {
    let m: Vec<u128> = vec![
        2, 2, 2, 4, 4, 8, 16, 16, 32, 32, 1 << 20, 1 << 20, 1 << 24, 1 << 24, 1 << 40, 1 << 40,
    ];
    // n = 0 on the even indices from 6 on, so single-term scc's are admissible there
    let n: Vec<u64> = (0..16).map(|w| u64::from(!(w % 2 == 0 && w >= 6))).collect();
    ParameterSystem::toy(m, n, Split::default()).unwrap()
}

fn chain_base() -> (Vec<RealVector>, Vec<Functional>) {
    let base: Vec<RealVector> = [3, 6, 9].iter().map(|&t| RealVector::unit(t)).collect();
    let fns = [3, 6, 9].iter().map(|&t| Functional::leaf(1, t - 1)).collect();
    (base, fns)
}

fn chain() -> (ParameterSystem, SigmaRegistry, RisWitness, DependentWitness) {
    let p = chain_params();
    let caps = Caps::default();
    let (base, fns) = chain_base();
    let ris = build_ris(&p, &base, 2.0, 8, None, &caps).unwrap();
    let mut reg = SigmaRegistry::new();
    let dep = build_dependent(&p, &mut reg, &ris, 1, &fns, None, &caps).unwrap();
    (p, reg, ris, dep)
}

#[test]
fn ris_weights_follow_growth() {
    let (p, _, ris, _) = chain();
    assert_eq!(ris.weights, vec![8, 10, 14]);
    ris.verify(&p, &Caps::default()).unwrap();
}

#[test]
fn dependent_sequence_chains_through_sigma() {
    let (p, reg, _, dep) = chain();
    let caps = Caps::default();
    let pairs = &dep.special.pairs;
    assert_eq!(pairs.len(), 2);
    assert_eq!(pairs[0], (FiniteSet::new(vec![2, 4]).unwrap(), 3));
    assert_eq!(pairs[1], (FiniteSet::new(vec![8, 10]).unwrap(), 6));
    assert_eq!(reg.lookup(&pairs[..1]), Some(6));
    let mins = minima(pairs.iter().map(|(e, _)| e));
    assert!(is_maximal(&mins, p.level(3).unwrap()).unwrap());
    dep.verify(&p, &reg, &caps).unwrap();
    dep.functional.validate(&p, &reg).unwrap();
}

#[test]
fn dependent_witness_round_trips_and_detects_tampering() {
    let (p, reg, _, dep) = chain();
    let caps = Caps::default();
    let json = serde_json::to_string(&dep).unwrap();
    let back: DependentWitness = serde_json::from_str(&json).unwrap();
    assert_eq!(back, dep);
    let reg_back = SigmaRegistry::from_json(&reg.to_json().unwrap(), &p).unwrap();
    back.verify(&p, &reg_back, &caps).unwrap();
    // the special functional is checked against the registry it was coded in
    assert!(back.verify(&p, &SigmaRegistry::new(), &caps).is_err());
    let mut bad = dep.clone();
    bad.target_j = 2;
    assert!(bad.verify(&p, &reg, &caps).is_err());
}

#[test]
fn exact_sequence_round_trip() {
    let p = chain_params();
    let caps = Caps::default();
    let (base, _) = chain_base();
    let ris = build_ris(&p, &base, 2.0, 8, None, &caps).unwrap();
    let ex = build_exact_sequence(&p, &ris, &[6, 12], &caps).unwrap();
    assert_eq!(ex.weights(), vec![6, 12]);
    let back: ExactSequence = serde_json::from_str(&serde_json::to_string(&ex).unwrap()).unwrap();
    back.verify(&p, &caps).unwrap();
    check_exact_sequence(&p, &back.ris, &back.vectors, &caps).unwrap();
    let mut swapped = back.clone();
    swapped.vectors.reverse();
    assert!(swapped.verify(&p, &caps).is_err());
}

#[test]
fn ris_rejects_small_constant_and_short_lists() {
    let p = chain_params();
    let caps = Caps::default();
    let (base, _) = chain_base();
    assert!(build_ris(&p, &base, 0.5, 8, None, &caps).is_err());
    assert!(build_ris(&p, &base, 2.0, 8, Some(5), &caps).is_err());
}

#[test]
fn gap_demo_is_deterministic() {
    let p = gap_toy_params(1).unwrap();
    let caps = Caps::default();
    let a = gap_demo(&p, &mut SigmaRegistry::new(), 1, 8, &caps).unwrap();
    let b = gap_demo(&p, &mut SigmaRegistry::new(), 1, 8, &caps).unwrap();
    assert_eq!(a, b);
    assert!(a.lower <= a.upper_combined);
    assert_eq!(a.bound, 2.0 / (p.m(3).unwrap() as f64).powi(2));
}
