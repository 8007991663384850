//! Repeated averages `a_n^L` and basic/plain special convex combinations.
//!
//! For `p = 2` coefficients are carried as their rational squares, so every
//! `Σ b_k²` condition is decided exactly.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::caps::Caps;
use crate::error::{pre, Error, Result};
use crate::rational::{self, q_u128, serde_q, serde_q_vec, Q};
use crate::schreier::{is_member, FiniteSet, GreedyState, Variant};
use crate::vector::{RealVector, Vector};

/// `a_n^L`; `L` must be long enough for the recursion.
pub fn repeated_average(n: u32, l: &[u32]) -> Result<Vector> {
    if l.windows(2).any(|w| w[0] >= w[1]) || l.first() == Some(&0) {
        return Err(pre("L must be strictly increasing and positive"));
    }
    let (coeffs, _) = average_rec(n, l)?;
    Ok(Vector::new(coeffs))
}

/// Returns the coefficients of `a_n^L` and how many entries of `L` they use.
fn average_rec(n: u32, l: &[u32]) -> Result<(Vec<(u32, Q)>, usize)> {
    let Some(&first) = l.first() else {
        return Err(Error::Exhausted("L ran out during the averaging recursion".into()));
    };
    if n == 0 {
        return Ok((vec![(first, Q::one())], 1));
    }
    let pieces = first as usize;
    let weight = Q::new(BigInt::one(), BigInt::from(first));
    let mut out = Vec::new();
    let mut used = 0;
    for _ in 0..pieces {
        let (c, u) = average_rec(n - 1, &l[used..])?;
        out.extend(c.into_iter().map(|(k, v)| (k, v * &weight)));
        used += u;
    }
    Ok((out, used))
}

/// Size of `supp a_n^L` for an interval `L = {start, start+1, …}`,
/// saturating at `u64::MAX`.
pub fn average_support_len(n: u32, start: u64) -> u64 {
    match n {
        0 => 1,
        1 => start,
        2 if start >= 58 => u64::MAX,
        2 => start * ((1u64 << start) - 1),
        _ => {
            let mut next = start;
            for _ in 0..start {
                let piece = average_support_len(n - 1, next);
                next = match next.checked_add(piece) {
                    Some(v) if v < u64::MAX => v,
                    _ => return u64::MAX,
                };
            }
            next - start
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchreierWeight {
    /// `Σ_{i∈G} |b_i|^p`, exact.
    #[serde(with = "serde_q")]
    pub power_sum: Q,
    pub set: FiniteSet,
    /// `(Σ_{i∈G} |b_i|^p)^{1/p}`.
    pub value: f64,
}

fn check_p(p: u32) -> Result<()> {
    if p == 1 || p == 2 {
        Ok(())
    } else {
        Err(pre(format!("p = {p} is not supported (p ∈ {{1, 2}})")))
    }
}

fn powers(x: &Vector, p: u32) -> Vec<(u32, Q)> {
    x.coeffs()
        .iter()
        .map(|(k, v)| {
            let a = v.abs();
            (*k, if p == 2 { &a * &a } else { a })
        })
        .collect()
}

fn root(s: &Q, p: u32) -> f64 {
    if p == 2 {
        rational::sqrt_f64(s)
    } else {
        rational::to_f64(s)
    }
}

/// `max_{G ∈ S_k, G ⊆ supp x} (Σ_{i∈G} |b_i|^p)^{1/p}`.
pub fn max_schreier_weight(x: &Vector, p: u32, k: u32, caps: &Caps) -> Result<SchreierWeight> {
    check_p(p)?;
    let (power_sum, set) = max_power_sum(&powers(x, p), k, caps)?;
    let value = root(&power_sum, p);
    Ok(SchreierWeight { power_sum, set, value })
}

/// Maximises `Σ_{i∈G} w_i` over `G ∈ S_k` for nonnegative weights `w`.
pub fn max_power_sum(w: &[(u32, Q)], k: u32, caps: &Caps) -> Result<(Q, FiniteSet)> {
    if w.is_empty() {
        return Ok((Q::zero(), FiniteSet::empty()));
    }
    match k {
        0 => {
            let (idx, v) = w
                .iter()
                .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
                .expect("nonempty");
            Ok((v.clone(), FiniteSet::singleton(*idx)))
        }
        1 => Ok(max_s1(w)),
        _ if w.len() > caps.exhaustive_weight => Err(Error::Cap(format!(
            "exhaustive S_{k} weight search over {} coordinates exceeds {}",
            w.len(),
            caps.exhaustive_weight
        ))),
        _ => Ok(max_exhaustive(w, k)),
    }
}

/// The exact maximum when it is computable, otherwise the total mass.
/// The flag reports whether the value is exact.
pub fn power_sum_bound(w: &[(u32, Q)], k: u32, caps: &Caps) -> (Q, bool) {
    match max_power_sum(w, k, caps) {
        Ok((s, _)) => (s, true),
        Err(_) => (w.iter().map(|(_, v)| v.clone()).sum(), false),
    }
}

/// Fenwick tree over ranks holding counts and integer-scaled weights.
struct Fenwick {
    count: Vec<usize>,
    sum: Vec<BigInt>,
}

impl Fenwick {
    fn new(n: usize) -> Self {
        Fenwick {
            count: vec![0; n + 1],
            sum: vec![BigInt::zero(); n + 1],
        }
    }

    fn add(&mut self, rank: usize, v: &BigInt) {
        let mut i = rank + 1;
        while i < self.count.len() {
            self.count[i] += 1;
            self.sum[i] += v;
            i += i & i.wrapping_neg();
        }
    }

    /// Sum of the first `c` present ranks (ranks sorted by decreasing weight).
    fn top(&self, c: usize) -> BigInt {
        let n = self.count.len() - 1;
        let mut pos = 0;
        let mut left = c;
        let mut acc = BigInt::zero();
        let mut step = n.next_power_of_two();
        while step > 0 {
            let nxt = pos + step;
            if nxt <= n && self.count[nxt] <= left {
                left -= self.count[nxt];
                acc += &self.sum[nxt];
                pos = nxt;
            }
            step >>= 1;
        }
        acc
    }
}

fn max_s1(w: &[(u32, Q)]) -> (Q, FiniteSet) {
    let denom = w
        .iter()
        .fold(BigInt::one(), |acc, (_, v)| acc.lcm(v.denom()));
    let scaled: Vec<BigInt> = w
        .iter()
        .map(|(_, v)| v.numer() * (&denom / v.denom()))
        .collect();
    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|&a, &b| scaled[b].cmp(&scaled[a]).then(a.cmp(&b)));
    let mut rank = vec![0; w.len()];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    let mut fw = Fenwick::new(w.len());
    let mut best = (BigInt::from(-1), 0usize);
    for i in (0..w.len()).rev() {
        let extra = (w[i].0 as usize).saturating_sub(1);
        let val = &scaled[i] + fw.top(extra);
        if val >= best.0 {
            best = (val, i);
        }
        fw.add(rank[i], &scaled[i]);
    }
    let i = best.1;
    let extra = (w[i].0 as usize).saturating_sub(1);
    let mut rest: Vec<usize> = (i + 1..w.len()).collect();
    rest.sort_by(|&a, &b| scaled[b].cmp(&scaled[a]).then(a.cmp(&b)));
    let mut set: Vec<u32> = rest.into_iter().take(extra).map(|j| w[j].0).collect();
    set.push(w[i].0);
    (Q::new(best.0, denom), FiniteSet::from_unsorted(set))
}

fn max_exhaustive(w: &[(u32, Q)], k: u32) -> (Q, FiniteSet) {
    let mut suffix = vec![Q::zero(); w.len() + 1];
    for i in (0..w.len()).rev() {
        suffix[i] = &suffix[i + 1] + &w[i].1;
    }
    let mut best = (Q::zero(), Vec::new());
    let mut chosen = Vec::new();
    dfs(w, 0, GreedyState::new(k), &Q::zero(), &suffix, &mut chosen, &mut best);
    (best.0, FiniteSet::from_unsorted(best.1))
}

fn dfs(
    w: &[(u32, Q)],
    from: usize,
    state: GreedyState,
    acc: &Q,
    suffix: &[Q],
    chosen: &mut Vec<u32>,
    best: &mut (Q, Vec<u32>),
) {
    if *acc > best.0 {
        *best = (acc.clone(), chosen.clone());
    }
    if from >= w.len() || acc + &suffix[from] <= best.0 {
        return;
    }
    for i in from..w.len() {
        if acc + &suffix[i] <= best.0 {
            return;
        }
        if let Some(next) = state.clone().push(w[i].0) {
            chosen.push(w[i].0);
            dfs(w, i + 1, next, &(acc + &w[i].1), suffix, chosen, best);
            chosen.pop();
        }
    }
}

/// Whether `x` is a `(p, eps, n)`-bscc. `Err` only when a weight condition
/// cannot be decided within the caps.
pub fn is_bscc(x: &Vector, p: u32, eps: &Q, n: u32, caps: &Caps) -> Result<bool> {
    check_p(p)?;
    is_bscc_powers(&powers(x, p), p, eps, n, caps)
}

/// [`is_bscc`] on the `p`-th powers `|b_k|^p` of the coefficients.
pub fn is_bscc_powers(w: &[(u32, Q)], p: u32, eps: &Q, n: u32, caps: &Caps) -> Result<bool> {
    check_p(p)?;
    if !eps.is_positive() {
        return Err(pre("eps must be positive"));
    }
    let supp = FiniteSet::from_unsorted(w.iter().map(|(k, _)| *k).collect());
    if !is_member(&supp, n, Variant::Standard) {
        return Ok(false);
    }
    let total: Q = w.iter().map(|(_, v)| v.clone()).sum();
    if !total.is_one() {
        return Ok(false);
    }
    let eps_p = if p == 2 { eps * eps } else { eps.clone() };
    for k in 0..n {
        let (s, exact) = power_sum_bound(w, k, caps);
        if s >= eps_p {
            if exact {
                return Ok(false);
            }
            return Err(Error::Cap(format!(
                "S_{k} weight over {} coordinates not decidable within caps",
                w.len()
            )));
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SccWitness {
    pub p: u32,
    #[serde(with = "serde_q")]
    pub eps: Q,
    pub n: u32,
    /// `b_k^p`, in anchor order.
    #[serde(with = "serde_q_vec")]
    pub powers: Vec<Q>,
    /// `t_k = maxsupp y_k` (for a bscc, the support itself).
    pub anchors: Vec<u32>,
}

impl SccWitness {
    /// `b_k = (b_k^p)^{1/p}`.
    pub fn coefficients(&self) -> Vec<f64> {
        self.powers.iter().map(|s| root(s, self.p)).collect()
    }

    pub fn power_pairs(&self) -> Vec<(u32, Q)> {
        self.anchors.iter().copied().zip(self.powers.iter().cloned()).collect()
    }

    pub fn verify(&self, caps: &Caps) -> Result<bool> {
        if self.powers.len() != self.anchors.len() {
            return Ok(false);
        }
        is_bscc_powers(&self.power_pairs(), self.p, &self.eps, self.n, caps)
    }
}

/// `Σ_k (a_n^L(k))^{1/p} e_k`, which is a `(p, eps, n)`-bscc when `3/min L < eps^p`.
pub fn make_bscc(p: u32, eps: &Q, n: u32, l: &[u32]) -> Result<(RealVector, SccWitness)> {
    check_p(p)?;
    let min = *l.first().ok_or_else(|| pre("L is empty"))?;
    let eps_p = if p == 2 { eps * eps } else { eps.clone() };
    if Q::new(BigInt::from(3), BigInt::from(min)) >= eps_p {
        return Err(pre(format!(
            "3/min L = 3/{min} is not below eps^p = {}",
            rational::format(&eps_p)
        )));
    }
    let a = repeated_average(n, l)?;
    let witness = SccWitness {
        p,
        eps: eps.clone(),
        n,
        powers: a.coeffs().iter().map(|(_, v)| v.clone()).collect(),
        anchors: a.coeffs().iter().map(|(k, _)| *k).collect(),
    };
    let y = RealVector::new(witness.anchors.iter().copied().zip(witness.coefficients()));
    Ok((y, witness))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scc {
    /// First and last block used (0-based, inclusive).
    pub start: usize,
    pub end: usize,
    pub witness: SccWitness,
}

impl Scc {
    pub fn combine(&self, blocks: &[RealVector]) -> RealVector {
        let b = self.witness.coefficients();
        RealVector::sum(
            blocks[self.start..=self.end]
                .iter()
                .zip(&b)
                .map(|(y, c)| y.scale(*c))
                .collect::<Vec<_>>()
                .iter(),
        )
    }
}

/// Chooses an interval of blocks and coefficients forming a `(2, eps, n)`-scc.
///
/// The interval starts at the first block whose anchor `t` satisfies
/// `3/t < eps²` (or whose averaged anchors pass the exact bscc check) and
/// runs until the anchors form a maximal member of `S_n`.
pub fn make_scc(blocks: &[RealVector], eps: &Q, n: u32, caps: &Caps) -> Result<Scc> {
    if blocks.is_empty() {
        return Err(Error::Exhausted("no blocks".into()));
    }
    let mut anchors = Vec::with_capacity(blocks.len());
    for (i, y) in blocks.iter().enumerate() {
        let t = y.max_supp().ok_or_else(|| pre(format!("block {i} is zero")))?;
        if let Some(prev) = blocks[..i].last() {
            if prev.max_supp().unwrap_or(0) >= y.min_supp().unwrap_or(u32::MAX) {
                return Err(pre(format!("blocks {} and {i} are not successive", i - 1)));
            }
        }
        anchors.push(t);
    }
    let eps2 = eps * eps;
    for s in 0..anchors.len() {
        let tail = &anchors[s..];
        let a = match repeated_average(n, tail) {
            Ok(a) => a,
            Err(Error::Exhausted(_)) => {
                return Err(Error::Exhausted(format!(
                    "anchors from block {s} on never reach a maximal S_{n} set"
                )))
            }
            Err(e) => return Err(e),
        };
        let witness = SccWitness {
            p: 2,
            eps: eps.clone(),
            n,
            powers: a.coeffs().iter().map(|(_, v)| v.clone()).collect(),
            anchors: a.coeffs().iter().map(|(k, _)| *k).collect(),
        };
        let cheap = Q::new(BigInt::from(3), BigInt::from(tail[0])) < eps2 || n == 0;
        if cheap || witness.verify(caps).unwrap_or(false) {
            let end = s + witness.anchors.len() - 1;
            return Ok(Scc { start: s, end, witness });
        }
    }
    Err(Error::Exhausted("no admissible starting block".into()))
}

/// `3/min L` as an exact rational.
pub fn exbscc_bound(min_l: u32) -> Q {
    Q::new(BigInt::from(3), BigInt::from(min_l))
}

/// Maximal initial segment of `l` lying in `S_n`.
pub fn maximal_initial_segment(n: u32, l: &[u32]) -> usize {
    let mut state = GreedyState::new(n);
    for (i, &e) in l.iter().enumerate() {
        match state.push(e) {
            Some(s) => state = s,
            None => return i,
        }
    }
    l.len()
}

pub fn one_over(k: u128) -> Q {
    Q::one() / q_u128(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn interval(lo: u32, hi: u32) -> Vec<u32> {
        (lo..=hi).collect()
    }

    #[test]
    fn averages_examples() {
        assert_eq!(repeated_average(0, &[5, 9, 11]).unwrap(), Vector::unit(5));
        assert_eq!(
            repeated_average(1, &interval(2, 6)).unwrap(),
            Vector::new([(2, q(1, 2)), (3, q(1, 2))])
        );
        let a2 = repeated_average(2, &interval(2, 9)).unwrap();
        assert_eq!(
            a2,
            Vector::new([
                (2, q(1, 4)),
                (3, q(1, 4)),
                (4, q(1, 8)),
                (5, q(1, 8)),
                (6, q(1, 8)),
                (7, q(1, 8)),
            ])
        );
        assert_eq!(a2.l1(), Q::one());
        assert!(matches!(repeated_average(2, &interval(2, 5)), Err(Error::Exhausted(_))));
    }

    #[test]
    fn support_is_maximal_initial_segment() {
        for n in 0..=3 {
            for start in 1..=4u32 {
                let expected = average_support_len(n, start as u64);
                if expected > 5000 {
                    continue;
                }
                let l = interval(start, start + expected as u32 + 40);
                let a = repeated_average(n, &l).unwrap();
                let len = a.coeffs().len();
                assert_eq!(len, maximal_initial_segment(n, &l));
                assert_eq!(len as u64, average_support_len(n, start as u64));
            }
        }
    }

    #[test]
    fn weight_examples() {
        let caps = Caps::default();
        let a2 = repeated_average(2, &interval(2, 9)).unwrap();
        let w = max_schreier_weight(&a2, 1, 1, &caps).unwrap();
        assert_eq!(w.power_sum, q(1, 2));
        assert_eq!(max_schreier_weight(&Vector::unit(7), 2, 1, &caps).unwrap().value, 1.0);
        let flat = Vector::new((2..=5).map(|k| (k, q(1, 2))));
        let w = max_schreier_weight(&flat, 2, 1, &caps).unwrap();
        assert_eq!(w.power_sum, q(3, 4));
        assert_eq!(w.set.elems(), &[3, 4, 5]);
        assert!((w.value - 3f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn bscc_examples() {
        let caps = Caps::default();
        let a2 = repeated_average(2, &interval(2, 9)).unwrap();
        assert!(is_bscc(&a2, 1, &q(3, 5), 2, &caps).unwrap());
        assert!(!is_bscc(&a2, 1, &q(2, 5), 2, &caps).unwrap());
        assert!(is_bscc(&Vector::unit(4), 2, &q(1, 100), 0, &caps).unwrap());
    }

    #[test]
    fn make_bscc_examples() {
        let caps = Caps::default();
        let (y, w) = make_bscc(2, &q(4, 5), 2, &interval(15, 15 + 491_520)).unwrap();
        assert!(w.verify(&caps).unwrap());
        assert!((y.l2() - 1.0).abs() < 1e-9);
        assert!(make_bscc(2, &q(2, 5), 2, &interval(2, 50)).is_err());
        let (_, w1) = make_bscc(1, &Q::one(), 1, &interval(4, 20)).unwrap();
        assert!(w1.verify(&caps).unwrap());
    }

    #[test]
    fn make_scc_examples() {
        let caps = Caps::default();
        let blocks = vec![RealVector::unit(2), RealVector::unit(3)];
        let s = make_scc(&blocks, &Q::from_integer(2.into()), 1, &caps).unwrap();
        assert_eq!((s.start, s.end), (0, 1));
        assert_eq!(s.witness.powers, vec![q(1, 2), q(1, 2)]);
        let single = make_scc(&[RealVector::unit(9)], &q(1, 100), 0, &caps).unwrap();
        assert_eq!(single.witness.powers, vec![Q::one()]);
        let short = vec![RealVector::unit(3), RealVector::unit(4)];
        assert!(matches!(make_scc(&short, &Q::from_integer(9.into()), 1, &caps), Err(Error::Exhausted(_))));
    }

    #[test]
    fn s1_weight_matches_exhaustive() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let caps = Caps::default();
        for _ in 0..300 {
            let len = rng.gen_range(1..12);
            let mut idx: Vec<u32> = (1..=16).collect();
            idx.sort_by_key(|_| rng.gen::<u32>());
            idx.truncate(len);
            idx.sort();
            let w: Vec<(u32, Q)> = idx.iter().map(|&k| (k, q(rng.gen_range(0..9), rng.gen_range(1..5)))).collect();
            let (fast, set) = max_s1(&w);
            let (slow, _) = max_exhaustive(&w, 1);
            assert_eq!(fast, slow);
            assert!(is_member(&set, 1, Variant::Standard));
            let _ = &caps;
        }
    }
}
