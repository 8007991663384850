//! Seeded random generators for vectors, functionals and disjoint families.
//!
//! Everything here is driven by an explicit [`ChaCha8Rng`] so batches are
//! reproducible from a seed.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::functionals::{Functional, Scalar};
use crate::params::ParameterSystem;
use crate::schreier::{is_member, FiniteSet, Variant};
use crate::vector::RealVector;

pub type Rand = ChaCha8Rng;

pub fn rng(seed: u64) -> Rand {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Nonzero coefficient in `[-1, -0.05] ∪ [0.05, 1]`.
pub fn coefficient(rng: &mut Rand) -> f64 {
    let v: f64 = rng.gen_range(0.05..=1.0);
    if rng.gen_bool(0.5) {
        -v
    } else {
        v
    }
}

/// Random vector on `k` distinct coordinates drawn from `lo..=hi`.
pub fn vector_in(rng: &mut Rand, lo: u32, hi: u32, k: usize) -> RealVector {
    let mut pool: Vec<u32> = (lo..=hi).collect();
    pool.shuffle(rng);
    RealVector::new(pool.into_iter().take(k).map(|n| (n, coefficient(rng))))
}

/// Successive blocks, each on a random nonempty subset of its own interval,
/// starting at `start` and separated by gaps of `gap` unused coordinates.
pub fn blocks(rng: &mut Rand, start: u32, count: usize, max_len: u32, gap: u32) -> Vec<RealVector> {
    let mut out = Vec::with_capacity(count);
    let mut lo = start;
    for _ in 0..count {
        let len = rng.gen_range(1..=max_len);
        let hi = lo + len - 1;
        let k = rng.gen_range(1..=len as usize);
        let mut v = vector_in(rng, lo, hi, k);
        if v.min_supp() != Some(lo) {
            v = v.add(&RealVector::new([(lo, coefficient(rng))]));
        }
        out.push(v);
        lo = hi + 1 + gap;
    }
    out
}

/// Splits `n` coordinates-worth of scalars into an ℓ2-normalised vector
/// scaled by a factor in `[0.5, 1]`.
pub fn ball_scalars(rng: &mut Rand, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| coefficient(rng)).collect();
    let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
    let r: f64 = rng.gen_range(0.5..=1.0);
    raw.into_iter().map(|v| v / norm * r).collect()
}

/// Cuts a sorted support into consecutive pieces whose minima lie in `S_level`.
fn allowable_pieces(rng: &mut Rand, support: &[u32], level: u32) -> Vec<Vec<u32>> {
    loop {
        let mut pieces: Vec<Vec<u32>> = Vec::new();
        for &n in support {
            if pieces.is_empty() || rng.gen_bool(0.5) {
                pieces.push(vec![n]);
            } else {
                pieces.last_mut().unwrap().push(n);
            }
        }
        let mins = FiniteSet::from_unsorted(pieces.iter().map(|p| p[0]).collect());
        if is_member(&mins, level, Variant::Standard) {
            return pieces;
        }
        if pieces.len() == 1 {
            return pieces;
        }
    }
}

/// Random even-only functional supported in `support`, of depth at
/// most `depth`, every node of weight index in `weights`.
pub fn even_functional(
    rng: &mut Rand,
    params: &ParameterSystem,
    support: &[u32],
    depth: usize,
    weights: &[usize],
) -> Functional {
    if support.len() == 1 && (depth == 0 || rng.gen_bool(0.4)) || weights.is_empty() {
        let n = *support.choose(rng).unwrap();
        return Functional::leaf(if rng.gen_bool(0.5) { 1 } else { -1 }, n);
    }
    if depth == 0 {
        let n = *support.choose(rng).unwrap();
        return Functional::leaf(1, n);
    }
    let w = *weights.choose(rng).unwrap();
    let level = params.level(w).expect("weight index in list");
    let pieces = allowable_pieces(rng, support, level);
    let scalars = ball_scalars(rng, pieces.len());
    let children = pieces
        .iter()
        .zip(scalars)
        .map(|(p, s)| (Scalar::from_f64(s), even_functional(rng, params, p, depth - 1, weights)))
        .collect();
    Functional::node(params, w as u32, children, None).expect("weight index in list")
}

/// Random finite subset of `1..=max` of size at most `k`.
pub fn subset(rng: &mut Rand, max: u32, k: usize) -> FiniteSet {
    let mut pool: Vec<u32> = (1..=max).collect();
    pool.shuffle(rng);
    let take = rng.gen_range(0..=k.min(pool.len()));
    FiniteSet::from_unsorted(pool.into_iter().take(take).collect())
}

/// Pairwise disjoint vectors with `d ≤ minsupp x_k`, coordinates in `1..=max`.
pub fn disjoint_family(rng: &mut Rand, max: u32, total: usize) -> Vec<RealVector> {
    loop {
        let d = rng.gen_range(1..=total.min(4));
        let lo = d as u32;
        let mut pool: Vec<u32> = (lo..=max).collect();
        pool.shuffle(rng);
        let per = total / d;
        let mut out = Vec::with_capacity(d);
        for _ in 0..d {
            let size = rng.gen_range(1..=per.max(1));
            let coords: Vec<u32> = pool.drain(..size.min(pool.len())).collect();
            if coords.is_empty() {
                break;
            }
            out.push(RealVector::new(coords.into_iter().map(|n| (n, coefficient(rng)))));
        }
        if out.len() == d {
            return out;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{SigmaRegistry, Split};

    #[test]
    fn functionals_validate() {
        let p = ParameterSystem::toy(vec![2, 2, 2, 3, 4], vec![1, 1, 1, 1, 2], Split::default()).unwrap();
        let reg = SigmaRegistry::new();
        let mut r = rng(3);
        for _ in 0..200 {
            let supp: Vec<u32> = vector_in(&mut r, 1, 20, 6).coeffs().iter().map(|c| c.0).collect();
            let f = even_functional(&mut r, &p, &supp, 3, &[2, 4]);
            f.validate(&p, &reg).unwrap();
            assert!(f.support().elems().iter().all(|n| supp.contains(n)));
        }
    }

    #[test]
    fn blocks_are_successive() {
        let mut r = rng(1);
        let b = blocks(&mut r, 5, 6, 4, 2);
        for w in b.windows(2) {
            assert!(w[0].max_supp().unwrap() + 2 < w[1].min_supp().unwrap());
        }
        assert_eq!(b[0].min_supp(), Some(5));
    }
}
