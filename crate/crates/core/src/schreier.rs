//! The Schreier hierarchy `S_n`, its modified version `S_n^M`, and
//! convolutions `S_k[S_l]`.
//!
//! Conventions: `S_0 = {∅} ∪ {singletons}` and `∅ ∈ S_n` for every `n`.
//! Standard membership runs the greedy initial-segment decomposition through
//! [`GreedyState`]; the exhaustive decompositions live in [`oracle`] and are
//! only used to cross-check it.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

use crate::caps::Caps;

/// Modified membership is decided exhaustively up to this many elements.
pub const MODIFIED_EXHAUSTIVE_LIMIT: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchreierError {
    #[error("set elements must be positive and strictly increasing: {0:?}")]
    InvalidSet(Vec<u32>),
    #[error("{set} is not a member of S_{n}")]
    NotMember { set: FiniteSet, n: u32 },
    #[error("universe {{1..{universe}}} exceeds the enumeration cap {cap}")]
    CapExceeded { universe: u32, cap: u32 },
}

/// A finite subset of ℕ stored as a strictly increasing list of positive integers.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize)]
#[serde(transparent)]
pub struct FiniteSet(Vec<u32>);

impl FiniteSet {
    pub fn new(elems: Vec<u32>) -> Result<Self, SchreierError> {
        if elems.first() == Some(&0) || elems.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SchreierError::InvalidSet(elems));
        }
        Ok(FiniteSet(elems))
    }

    /// Sorts and deduplicates; panics on zero.
    pub fn from_unsorted(mut elems: Vec<u32>) -> Self {
        elems.sort_unstable();
        elems.dedup();
        assert!(elems.first() != Some(&0), "basis indices start at 1");
        FiniteSet(elems)
    }

    pub fn empty() -> Self {
        FiniteSet(Vec::new())
    }

    pub fn singleton(k: u32) -> Self {
        assert!(k >= 1);
        FiniteSet(vec![k])
    }

    pub fn interval(lo: u32, hi: u32) -> Self {
        FiniteSet((lo..=hi).collect())
    }

    pub fn elems(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn min_elem(&self) -> Option<u32> {
        self.0.first().copied()
    }

    pub fn max_elem(&self) -> Option<u32> {
        self.0.last().copied()
    }

    pub fn contains(&self, k: u32) -> bool {
        self.0.binary_search(&k).is_ok()
    }

    pub fn is_disjoint(&self, other: &FiniteSet) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return false,
            }
        }
        true
    }

    pub fn is_subset(&self, other: &FiniteSet) -> bool {
        self.0.iter().all(|&k| other.contains(k))
    }

    /// `self < other`: max of one below min of the other, or either empty.
    pub fn precedes(&self, other: &FiniteSet) -> bool {
        match (self.max_elem(), other.min_elem()) {
            (Some(a), Some(b)) => a < b,
            _ => true,
        }
    }

    pub fn union(&self, other: &FiniteSet) -> FiniteSet {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        FiniteSet::from_unsorted(v)
    }

    pub fn with(&self, k: u32) -> FiniteSet {
        self.union(&FiniteSet::singleton(k))
    }

    /// Subset selected by a bitmask over positions.
    pub fn select(&self, mask: u64) -> FiniteSet {
        FiniteSet(
            self.0
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &k)| k)
                .collect(),
        )
    }
}

impl<'de> Deserialize<'de> for FiniteSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Vec::<u32>::deserialize(d)?;
        FiniteSet::new(v).map_err(serde::de::Error::custom)
    }
}

impl fmt::Debug for FiniteSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Display for FiniteSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl From<&[u32]> for FiniteSet {
    fn from(v: &[u32]) -> Self {
        FiniteSet::from_unsorted(v.to_vec())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Standard,
    Modified,
}

/// Levels above `|F| - 1` add nothing: a set in some `S_n` already lies in `S_{|F|-1}`.
pub fn effective_level(len: usize, n: u32) -> u32 {
    n.min(len.saturating_sub(1) as u32)
}

/// Incremental greedy decomposition for `S_n`, fed elements in increasing order.
///
/// Whether `G ∪ {m}` (with `m > max G`) lies in `S_n` does not depend on `m`,
/// so the state below decides every future extension.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GreedyState {
    // levels[0]: number of elements in the open S_0 piece (0 or 1)
    // levels[t], t >= 1: (min of the open S_t segment or 0, closed S_{t-1} pieces in it)
    levels: Vec<(u32, u32)>,
}

impl GreedyState {
    pub fn new(n: u32) -> Self {
        GreedyState {
            levels: vec![(0, 0); n as usize + 1],
        }
    }

    pub fn is_empty(&self) -> bool {
        self.levels.iter().all(|&l| l == (0, 0))
    }

    /// Whether one more (larger) element may be appended.
    pub fn can_push(&self) -> bool {
        self.clone().push(u32::MAX).is_some()
    }

    pub fn push(mut self, e: u32) -> Option<Self> {
        let top = self.levels.len() - 1;
        if self.push_level(top, e) {
            Some(self)
        } else {
            None
        }
    }

    fn reset_below(&mut self, t: usize) {
        for l in &mut self.levels[..t] {
            *l = (0, 0);
        }
    }

    fn push_level(&mut self, t: usize, e: u32) -> bool {
        if t == 0 {
            if self.levels[0].0 == 0 {
                self.levels[0].0 = 1;
                return true;
            }
            return false;
        }
        let (first_min, closed) = self.levels[t];
        if first_min == 0 {
            self.levels[t] = (e, 0);
            self.reset_below(t);
            return self.push_level(t - 1, e);
        }
        let saved: Vec<(u32, u32)> = self.levels[..t].to_vec();
        if self.push_level(t - 1, e) {
            return true;
        }
        self.levels[..t].copy_from_slice(&saved);
        // open a new S_{t-1} piece: pieces = closed + 2 must not exceed the segment minimum
        if closed + 2 > first_min {
            return false;
        }
        self.levels[t].1 = closed + 1;
        self.reset_below(t);
        self.push_level(t - 1, e)
    }
}

fn greedy_member(elems: &[u32], n: u32) -> bool {
    let n = effective_level(elems.len(), n);
    elems
        .iter()
        .try_fold(GreedyState::new(n), |s, &e| s.push(e))
        .is_some()
}

/// Membership in `S_n` (standard) or `S_n^M` (modified).
pub fn is_member(f: &FiniteSet, n: u32, variant: Variant) -> bool {
    match variant {
        Variant::Standard => greedy_member(f.elems(), n),
        Variant::Modified => {
            if f.len() > MODIFIED_EXHAUSTIVE_LIMIT {
                // beyond the exhaustive range the two families coincide on every
                // instance we can check; decide through the standard recursion
                greedy_member(f.elems(), n)
            } else {
                let n = effective_level(f.len(), n);
                let table = ModifiedTable::build(f.elems(), n);
                table.contains(n, (1u64 << f.len()) - 1)
            }
        }
    }
}

/// `F ∈ S_n` and no `F ∪ {m}` with `m > max F` stays in `S_n`.
pub fn is_maximal(f: &FiniteSet, n: u32) -> Result<bool, SchreierError> {
    if !is_member(f, n, Variant::Standard) {
        return Err(SchreierError::NotMember { set: f.clone(), n });
    }
    let Some(max) = f.max_elem() else {
        return Ok(false);
    };
    // membership of F ∪ {m} is independent of m > max F
    Ok(!is_member(&f.with(max + 1), n, Variant::Standard))
}

/// Membership tables of `S_t^M`, `t ≤ n`, for every subset of a small universe.
pub struct ModifiedTable {
    universe: Vec<u32>,
    levels: Vec<Vec<bool>>,
}

impl ModifiedTable {
    pub fn build(universe: &[u32], n: u32) -> Self {
        let k = universe.len();
        assert!(k <= 24, "modified table over {k} elements is too large");
        let size = 1usize << k;
        let lvl0: Vec<bool> = (0..size).map(|m| (m as u64).count_ones() <= 1).collect();
        let mut levels = vec![lvl0];
        for _ in 1..=n {
            let prev = levels.last().unwrap();
            let mut cover = vec![u32::MAX; size];
            cover[0] = 0;
            for mask in 1..size {
                let low = mask & mask.wrapping_neg();
                let rest = mask ^ low;
                // submasks of `rest`, each extended by the lowest element
                let mut sub = rest;
                loop {
                    let piece = sub | low;
                    if prev[piece] && cover[mask ^ piece] != u32::MAX {
                        cover[mask] = cover[mask].min(cover[mask ^ piece] + 1);
                    }
                    if sub == 0 {
                        break;
                    }
                    sub = (sub - 1) & rest;
                }
            }
            let lvl: Vec<bool> = (0..size)
                .map(|mask| {
                    if mask == 0 {
                        return true;
                    }
                    let min = universe[mask.trailing_zeros() as usize];
                    cover[mask] <= min
                })
                .collect();
            levels.push(lvl);
        }
        ModifiedTable {
            universe: universe.to_vec(),
            levels,
        }
    }

    pub fn contains(&self, n: u32, mask: u64) -> bool {
        let t = (n as usize).min(self.levels.len() - 1);
        self.levels[t][mask as usize]
    }

    pub fn universe(&self) -> &[u32] {
        &self.universe
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyMode {
    Admissible,
    Allowable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetFamily {
    pub members: Vec<FiniteSet>,
    pub mode: FamilyMode,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FamilyViolation {
    #[error("members {0} and {1} intersect")]
    Overlap(usize, usize),
    #[error("members {0} and {1} are not successive")]
    NotSuccessive(usize, usize),
    #[error("minima {mins} do not lie in S_{n}")]
    Minima { mins: FiniteSet, n: u32 },
}

/// Checks `S_n`-admissibility or `S_n`-allowability of a family.
pub fn check_family(fam: &SetFamily, n: u32) -> Result<(), FamilyViolation> {
    let m = &fam.members;
    for i in 0..m.len() {
        for j in i + 1..m.len() {
            match fam.mode {
                FamilyMode::Allowable if !m[i].is_disjoint(&m[j]) => {
                    return Err(FamilyViolation::Overlap(i, j))
                }
                FamilyMode::Admissible if !m[i].precedes(&m[j]) => {
                    return Err(FamilyViolation::NotSuccessive(i, j))
                }
                _ => {}
            }
        }
    }
    let mins = minima(m.iter());
    if is_member(&mins, n, Variant::Standard) {
        Ok(())
    } else {
        Err(FamilyViolation::Minima { mins, n })
    }
}

/// `{min E : E nonempty}` of a family, as a set.
pub fn minima<'a>(sets: impl IntoIterator<Item = &'a FiniteSet>) -> FiniteSet {
    FiniteSet::from_unsorted(sets.into_iter().filter_map(FiniteSet::min_elem).collect())
}

/// All members of `S_n` inside `{1..universe_max}`, by size then lexicographically.
pub fn enumerate(n: u32, universe_max: u32, caps: &Caps) -> Result<Vec<FiniteSet>, SchreierError> {
    if universe_max > caps.enumeration {
        return Err(SchreierError::CapExceeded {
            universe: universe_max,
            cap: caps.enumeration,
        });
    }
    let universe: Vec<u32> = (1..=universe_max).collect();
    let all = FiniteSet(universe);
    let mut out: Vec<FiniteSet> = (0u64..1 << universe_max)
        .map(|mask| all.select(mask))
        .filter(|f| is_member(f, n, Variant::Standard))
        .collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.elems().cmp(b.elems())));
    Ok(out)
}

/// `F ∈ S_p[S_q]` (standard) or `F ∈ S_p[S_q]_M` (modified), by exhaustive decomposition.
pub fn convolution_member(f: &FiniteSet, p_level: u32, q_level: u32, modified: bool) -> bool {
    if f.is_empty() {
        return true;
    }
    if modified {
        oracle::modified_convolution(f, p_level, q_level)
    } else {
        oracle::standard_convolution(f, p_level, q_level)
    }
}

/// Exhaustive decision procedures kept as independent oracles.
pub mod oracle {
    use super::*;

    /// Every way of cutting `elems` into consecutive nonempty runs.
    fn compositions(len: usize) -> impl Iterator<Item = Vec<(usize, usize)>> {
        let cuts = len.saturating_sub(1);
        (0u64..1 << cuts).map(move |bits| {
            let mut runs = Vec::new();
            let mut start = 0;
            for i in 0..cuts {
                if bits >> i & 1 == 1 {
                    runs.push((start, i + 1));
                    start = i + 1;
                }
            }
            runs.push((start, len));
            runs
        })
    }

    /// Standard membership straight from the recursive definition.
    pub fn standard_member(elems: &[u32], n: u32) -> bool {
        if elems.len() <= 1 {
            return true;
        }
        if n == 0 {
            return false;
        }
        let n = effective_level(elems.len(), n);
        compositions(elems.len()).any(|runs| {
            runs.len() as u32 <= elems[0]
                && runs.iter().all(|&(a, b)| standard_member(&elems[a..b], n - 1))
        })
    }

    pub fn standard_convolution(f: &FiniteSet, p: u32, q: u32) -> bool {
        let e = f.elems();
        compositions(e.len()).any(|runs| {
            let mins: Vec<u32> = runs.iter().map(|&(a, _)| e[a]).collect();
            standard_member(&mins, p) && runs.iter().all(|&(a, b)| standard_member(&e[a..b], q))
        })
    }

    /// Set partitions of `0..len` as lists of position masks, lowest element first.
    fn partitions(rest: u64, acc: &mut Vec<u64>, visit: &mut dyn FnMut(&[u64]) -> bool) -> bool {
        if rest == 0 {
            return visit(acc);
        }
        let low = rest & rest.wrapping_neg();
        let others = rest ^ low;
        let mut sub = others;
        loop {
            acc.push(sub | low);
            if partitions(others ^ sub, acc, visit) {
                acc.pop();
                return true;
            }
            acc.pop();
            if sub == 0 {
                return false;
            }
            sub = (sub - 1) & others;
        }
    }

    pub fn modified_convolution(f: &FiniteSet, p: u32, q: u32) -> bool {
        let k = f.len();
        assert!(k <= MODIFIED_EXHAUSTIVE_LIMIT, "modified convolution over {k} elements");
        let table = ModifiedTable::build(f.elems(), q.min(k as u32));
        let full = (1u64 << k) - 1;
        let mut found = false;
        partitions(full, &mut Vec::new(), &mut |blocks| {
            let ok = blocks.iter().all(|&b| table.contains(q, b)) && {
                let mins: Vec<u32> = blocks
                    .iter()
                    .map(|&b| f.elems()[b.trailing_zeros() as usize])
                    .collect();
                is_member(&FiniteSet::from_unsorted(mins), p, Variant::Modified)
            };
            found |= ok;
            ok
        });
        found
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[u32]) -> FiniteSet {
        FiniteSet::new(v.to_vec()).unwrap()
    }

    #[test]
    fn membership_examples() {
        assert!(is_member(&s(&[1]), 1, Variant::Standard));
        assert!(!is_member(&s(&[1, 2]), 2, Variant::Standard));
        assert!(is_member(&s(&[2, 3, 4, 5]), 2, Variant::Standard));
        assert!(!is_member(&s(&[3, 4, 5, 6]), 1, Variant::Standard));
        // the exhaustive oracle agrees on the same examples
        assert!(!oracle::standard_member(&[1, 2], 2));
        assert!(oracle::standard_member(&[2, 3, 4, 5], 2));
    }

    #[test]
    fn empty_and_s0() {
        for n in 0..5 {
            assert!(is_member(&FiniteSet::empty(), n, Variant::Standard));
            assert!(is_member(&FiniteSet::empty(), n, Variant::Modified));
        }
        assert!(is_member(&s(&[9]), 0, Variant::Standard));
        assert!(!is_member(&s(&[5, 9]), 0, Variant::Standard));
        assert!(!is_member(&s(&[5, 9]), 0, Variant::Modified));
    }

    #[test]
    fn maximality_examples() {
        assert!(is_maximal(&s(&[2, 3]), 1).unwrap());
        assert!(!is_maximal(&s(&[3, 4]), 1).unwrap());
        assert!(is_maximal(&s(&[1]), 2).unwrap());
        for m in 2..=20 {
            assert!(!is_member(&s(&[1, m]), 2, Variant::Standard));
            assert!(!oracle::standard_member(&[1, m], 2));
        }
        assert!(matches!(is_maximal(&s(&[3, 4, 5, 6]), 1), Err(SchreierError::NotMember { .. })));
    }

    #[test]
    fn extension_membership_ignores_new_element() {
        let all: Vec<u32> = (1..=9).collect();
        let u = FiniteSet(all);
        for mask in 1u64..1 << 9 {
            let f = u.select(mask);
            let top = f.max_elem().unwrap();
            for n in 0..3 {
                let a = is_member(&f.with(top + 1), n, Variant::Standard);
                let b = is_member(&f.with(top + 7), n, Variant::Standard);
                assert_eq!(a, b, "{f} n={n}");
            }
        }
    }

    #[test]
    fn family_examples() {
        let fam = |mode| SetFamily {
            members: vec![s(&[2, 5]), s(&[3, 6])],
            mode,
        };
        assert!(check_family(&fam(FamilyMode::Allowable), 1).is_ok());
        assert_eq!(
            check_family(&fam(FamilyMode::Admissible), 1),
            Err(FamilyViolation::NotSuccessive(0, 1))
        );
        let singles = SetFamily {
            members: vec![s(&[1]), s(&[2]), s(&[3])],
            mode: FamilyMode::Allowable,
        };
        assert!(matches!(check_family(&singles, 1), Err(FamilyViolation::Minima { .. })));
        let overlap = SetFamily {
            members: vec![s(&[4, 5]), s(&[5, 6])],
            mode: FamilyMode::Allowable,
        };
        assert_eq!(check_family(&overlap, 3), Err(FamilyViolation::Overlap(0, 1)));
    }

    #[test]
    fn enumeration_examples() {
        let caps = Caps::default();
        assert_eq!(
            enumerate(1, 3, &caps).unwrap(),
            vec![FiniteSet::empty(), s(&[1]), s(&[2]), s(&[3]), s(&[2, 3])]
        );
        assert_eq!(
            enumerate(0, 2, &caps).unwrap(),
            vec![FiniteSet::empty(), s(&[1]), s(&[2])]
        );
        assert_eq!(
            enumerate(2, 2, &caps).unwrap(),
            vec![FiniteSet::empty(), s(&[1]), s(&[2])]
        );
        assert!(matches!(enumerate(1, 15, &caps), Err(SchreierError::CapExceeded { .. })));
    }

    #[test]
    fn convolution_examples() {
        assert!(convolution_member(&s(&[2, 3, 4, 5]), 1, 1, false));
        assert!(convolution_member(&s(&[2, 3, 4, 5]), 1, 1, true));
        for (k, l) in [(0, 0), (1, 2), (3, 1)] {
            assert!(convolution_member(&FiniteSet::empty(), k, l, false));
            assert!(convolution_member(&FiniteSet::empty(), k, l, true));
        }
        assert!(!convolution_member(&s(&[1, 2]), 1, 1, false));
    }

    #[test]
    fn greedy_matches_exhaustive_on_small_universe() {
        let u = FiniteSet((1..=10).collect());
        for mask in 0u64..1 << 10 {
            let f = u.select(mask);
            for n in 0..=3 {
                assert_eq!(
                    is_member(&f, n, Variant::Standard),
                    oracle::standard_member(f.elems(), n),
                    "{f} n={n}"
                );
            }
        }
    }

    #[test]
    fn hereditary_on_small_universe() {
        let u = FiniteSet((1..=10).collect());
        for n in 0..=3 {
            for mask in 0u64..1 << 10 {
                if !is_member(&u.select(mask), n, Variant::Standard) {
                    continue;
                }
                let mut sub = mask;
                while sub != 0 {
                    sub = (sub - 1) & mask;
                    assert!(is_member(&u.select(sub), n, Variant::Standard));
                }
            }
        }
    }

    #[test]
    fn level_cap_is_harmless() {
        let u = FiniteSet((1..=9).collect());
        for mask in 0u64..1 << 9 {
            let f = u.select(mask);
            assert_eq!(
                is_member(&f, 50, Variant::Standard),
                oracle::standard_member(f.elems(), f.len() as u32 + 2)
            );
        }
    }

    #[test]
    fn invalid_sets_rejected() {
        assert!(FiniteSet::new(vec![0, 1]).is_err());
        assert!(FiniteSet::new(vec![3, 3]).is_err());
        assert!(serde_json::from_str::<FiniteSet>("[5,2]").is_err());
        assert_eq!(serde_json::from_str::<FiniteSet>("[2,5]").unwrap(), s(&[2, 5]));
    }
}
