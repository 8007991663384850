//! Weight sequences `(m_j)`, `(n_j)`, the `N1/N2` split and the coding `σ`.
//!
//! Special sequences store the half index `j_i`; the weight attached to the
//! pair `(E_i, 2j_i)` is `m_{2j_i}`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schreier::{is_member, minima, FiniteSet, Variant};

/// Partition of ℕ = {1, 2, …} into `N1` and `N2` by residues.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub modulus: u32,
    /// Residues (mod `modulus`) that belong to `N1`.
    pub n1_residues: Vec<u32>,
}

impl Default for Split {
    fn default() -> Self {
        Split {
            modulus: 2,
            n1_residues: vec![1],
        }
    }
}

impl Split {
    pub fn in_n1(&self, j: u32) -> bool {
        j >= 1 && self.n1_residues.contains(&(j % self.modulus))
    }

    pub fn in_n2(&self, j: u32) -> bool {
        j >= 1 && !self.in_n1(j)
    }

    fn validate(&self) -> Result<()> {
        let m = self.modulus;
        if m == 0 || self.n1_residues.iter().any(|&r| r >= m) {
            return Err(Error::Params("split residues must lie in 0..modulus".into()));
        }
        let n1: BTreeSet<u32> = self.n1_residues.iter().copied().collect();
        if n1.is_empty() || n1.len() as u32 == m {
            return Err(Error::Params("both halves of the split must be infinite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "condition", rename_all = "snake_case")]
pub enum GrowthViolation {
    /// `m_0 = m_1 = 2`, `n_0 = 1`.
    Base,
    /// `m_{j+1} ≥ m_j³`.
    MGrowth { j: usize },
    /// `ℓ_j (n_{j-1} + 1) < n_j`.
    NGrowth { j: usize },
}

impl fmt::Display for GrowthViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GrowthViolation::Base => write!(f, "m_0 = m_1 = 2, n_0 = 1"),
            GrowthViolation::MGrowth { j } => write!(f, "m_{} >= m_{j}^3", j + 1),
            GrowthViolation::NGrowth { j } => write!(f, "l_{j}(n_{} + 1) < n_{j}", j - 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum ParamsConfig {
    /// Minimal sequences satisfying the growth conditions, `levels` entries each.
    Strict {
        levels: usize,
        #[serde(default)]
        split: Split,
    },
    /// Explicit lists; failing growth conditions are reported.
    Toy {
        #[serde(with = "wide")]
        m: Vec<u128>,
        n: Vec<u64>,
        #[serde(default)]
        split: Split,
    },
}

/// `u128` lists as JSON numbers when they fit in `u64`, decimal strings otherwise.
mod wide {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};
    use serde_json::Value;

    pub fn serialize<S: Serializer>(xs: &[u128], s: S) -> std::result::Result<S::Ok, S::Error> {
        let vals: Vec<Value> = xs
            .iter()
            .map(|&x| match u64::try_from(x) {
                Ok(v) => Value::from(v),
                Err(_) => Value::from(x.to_string()),
            })
            .collect();
        s.collect_seq(vals)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<u128>, D::Error> {
        Vec::<Value>::deserialize(d)?
            .into_iter()
            .map(|v| match &v {
                Value::Number(n) => n.as_u64().map(u128::from),
                Value::String(t) => t.parse().ok(),
                _ => None,
            }
            .ok_or_else(|| D::Error::custom(format!("{v} is not a nonnegative integer"))))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSystem {
    m: Vec<u128>,
    n: Vec<u64>,
    pub split: Split,
    pub strict: bool,
    pub violations: Vec<GrowthViolation>,
}

/// `ℓ_j = 3 log₂(m_j) + 1`.
pub fn ell(m: u128) -> f64 {
    3.0 * (m as f64).log2() + 1.0
}

/// Smallest integer strictly above `ℓ (n_prev + 1)`.
fn next_n(m: u128, n_prev: u64) -> u64 {
    let bound = ell(m) * (n_prev as f64 + 1.0);
    bound.floor() as u64 + 1
}

impl ParameterSystem {
    pub fn build(config: &ParamsConfig) -> Result<Self> {
        match config {
            ParamsConfig::Strict { levels, split } => Self::strict(*levels, split.clone()),
            ParamsConfig::Toy { m, n, split } => Self::toy(m.clone(), n.clone(), split.clone()),
        }
    }

    /// `m = (2, 2, 8, 512, 2^27, 2^81)`, truncated to what fits in `u128`.
    pub fn strict(levels: usize, split: Split) -> Result<Self> {
        split.validate()?;
        if levels == 0 {
            return Err(Error::Params("at least one level is required".into()));
        }
        let mut m: Vec<u128> = vec![2];
        while m.len() < levels {
            let j = m.len();
            let next = if j == 1 {
                2
            } else {
                let prev = m[j - 1];
                prev.checked_mul(prev)
                    .and_then(|v| v.checked_mul(prev))
                    .ok_or_else(|| {
                        Error::Params(format!("m_{j} does not fit in 128 bits; use at most {j} levels"))
                    })?
            };
            m.push(next);
        }
        let mut n: Vec<u64> = vec![1];
        for j in 1..levels {
            n.push(next_n(m[j], n[j - 1]));
        }
        Ok(ParameterSystem {
            m,
            n,
            split,
            strict: true,
            violations: Vec::new(),
        })
    }

    pub fn toy(m: Vec<u128>, n: Vec<u64>, split: Split) -> Result<Self> {
        split.validate()?;
        if m.is_empty() || m.len() != n.len() {
            return Err(Error::Params("m and n must be nonempty lists of equal length".into()));
        }
        if let Some(j) = m.iter().position(|&v| v == 0) {
            return Err(Error::Params(format!("m_{j} must be positive")));
        }
        if let Some(j) = m.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::Params(format!("m must be nondecreasing (m_{} < m_{j})", j + 1)));
        }
        let violations = growth_violations(&m, &n);
        Ok(ParameterSystem {
            m,
            n,
            split,
            strict: false,
            violations,
        })
    }

    /// Configuration that rebuilds this system.
    pub fn config(&self) -> ParamsConfig {
        if self.strict {
            ParamsConfig::Strict {
                levels: self.levels(),
                split: self.split.clone(),
            }
        } else {
            ParamsConfig::Toy {
                m: self.m.clone(),
                n: self.n.clone(),
                split: self.split.clone(),
            }
        }
    }

    pub fn levels(&self) -> usize {
        self.m.len()
    }

    pub fn m(&self, j: usize) -> Result<u128> {
        self.m
            .get(j)
            .copied()
            .ok_or_else(|| Error::Params(format!("m_{j} is beyond the parameter list")))
    }

    pub fn n(&self, j: usize) -> Result<u64> {
        self.n
            .get(j)
            .copied()
            .ok_or_else(|| Error::Params(format!("n_{j} is beyond the parameter list")))
    }

    pub fn ell(&self, j: usize) -> Result<f64> {
        self.m(j).map(ell)
    }

    pub fn m_list(&self) -> &[u128] {
        &self.m
    }

    pub fn n_list(&self) -> &[u64] {
        &self.n
    }

    /// Schreier level `n_j` as a `u32`, saturated; levels above the size of
    /// any finite set behave identically.
    pub fn level(&self, j: usize) -> Result<u32> {
        self.n(j).map(|v| v.min(u32::MAX as u64) as u32)
    }

    /// Even weight indices `2i ≤ 2 j_max` present in the list, `i ≥ 1`.
    pub fn even_indices(&self, j_max: usize) -> Vec<usize> {
        (1..=j_max).map(|i| 2 * i).filter(|&w| w < self.levels()).collect()
    }
}

fn growth_violations(m: &[u128], n: &[u64]) -> Vec<GrowthViolation> {
    let mut out = Vec::new();
    if m[0] != 2 || m.get(1).is_some_and(|&v| v != 2) || n[0] != 1 {
        out.push(GrowthViolation::Base);
    }
    for j in 2..m.len() {
        if j + 1 < m.len() {
            let cube = m[j].checked_mul(m[j]).and_then(|v| v.checked_mul(m[j]));
            if cube.is_none_or(|c| m[j + 1] < c) {
                out.push(GrowthViolation::MGrowth { j });
            }
        }
        if (n[j] as f64) <= ell(m[j]) * (n[j - 1] as f64 + 1.0) {
            out.push(GrowthViolation::NGrowth { j });
        }
    }
    out
}

/// A finite sequence `((E_1, 2j_1), …, (E_k, 2j_k))`; `j_i` stored as half indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct SpecialSequence {
    pub pairs: Vec<(FiniteSet, u32)>,
    /// Odd level `j` for which the sequence is meant to be `S_{n_{2j+1}}`-qualified.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_j: Option<u32>,
}

impl SpecialSequence {
    pub fn new(pairs: Vec<(FiniteSet, u32)>) -> Self {
        SpecialSequence { pairs, target_j: None }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn prefix(&self, k: usize) -> &[(FiniteSet, u32)] {
        &self.pairs[..k]
    }

    /// `{min E_i} ∈ S_{n_{2j+1}}` and `2j_1 > 2j + 2`.
    pub fn qualifies(&self, params: &ParameterSystem, j: u32) -> Result<bool> {
        let Some((_, j1)) = self.pairs.first() else {
            return Ok(true);
        };
        let level = params.level(2 * j as usize + 1)?;
        let mins = minima(self.pairs.iter().map(|(e, _)| e));
        Ok(*j1 > j + 1 && is_member(&mins, level, Variant::Standard))
    }
}

/// Checks the membership conditions of `Σ`.
pub fn check_sigma_domain(split: &Split, seq: &[(FiniteSet, u32)]) -> std::result::Result<(), String> {
    if seq.is_empty() {
        return Err("empty sequence".into());
    }
    for (i, (e, j)) in seq.iter().enumerate() {
        if e.is_empty() {
            return Err(format!("E_{} is empty", i + 1));
        }
        if i == 0 && !split.in_n1(*j) {
            return Err(format!("j_1 = {j} is not in N1"));
        }
        if i > 0 && !split.in_n2(*j) {
            return Err(format!("j_{} = {j} is not in N2", i + 1));
        }
        if i > 0 && seq[i - 1].1 >= *j {
            return Err(format!("j_{} = {} is not below j_{} = {j}", i, seq[i - 1].1, i + 1));
        }
        for (l, (f, _)) in seq[..i].iter().enumerate() {
            if !e.is_disjoint(f) {
                return Err(format!("E_{} and E_{} intersect", l + 1, i + 1));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub sequence: Vec<(FiniteSet, u32)>,
    pub value: u32,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub quarantine: bool,
}

/// The injective coding `σ`, realised as an append-only table.
///
/// A new sequence `s = ((E_1,2j_1),…,(E_k,2j_k))` receives the smallest unused
/// `j ∈ N2` with `j > j_k`, `m_{2j} > m_{2j_k}·(maxsupp E_k)²` and, for
/// `k ≥ 2`, `m_{2j} > m_{2σ(s_{k-1})}·(maxsupp E_{k-1})²`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SigmaRegistry {
    entries: Vec<Assignment>,
    #[serde(skip)]
    index: HashMap<Vec<(FiniteSet, u32)>, u32>,
    #[serde(skip)]
    used: BTreeSet<u32>,
}

impl PartialEq for SigmaRegistry {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

fn checked_threshold(params: &ParameterSystem, half: u32, maxsupp: u32) -> Result<u128> {
    let m = params.m(2 * half as usize)?;
    let s = maxsupp as u128;
    m.checked_mul(s * s)
        .ok_or_else(|| Error::Sigma(format!("growth threshold m_{}·{maxsupp}² overflows", 2 * half)))
}

impl SigmaRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[Assignment] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lookup(&self, seq: &[(FiniteSet, u32)]) -> Option<u32> {
        self.index.get(seq).copied()
    }

    /// Lowest admissible value for `seq` under the growth rule.
    fn threshold(&self, params: &ParameterSystem, seq: &[(FiniteSet, u32)]) -> Result<u128> {
        let k = seq.len();
        let (e_k, j_k) = &seq[k - 1];
        let mut t = checked_threshold(params, *j_k, e_k.max_elem().unwrap_or(0))?;
        if k >= 2 {
            let prev = self.lookup(&seq[..k - 1]).ok_or_else(|| {
                Error::Sigma(format!("prefix of length {} is not assigned", k - 1))
            })?;
            let e_prev = seq[k - 2].0.max_elem().unwrap_or(0);
            t = t.max(checked_threshold(params, prev, e_prev)?);
        }
        Ok(t)
    }

    /// `σ(seq)`, assigning a fresh value if needed.
    pub fn sigma_assign(&mut self, params: &ParameterSystem, seq: &[(FiniteSet, u32)]) -> Result<u32> {
        check_sigma_domain(&params.split, seq).map_err(Error::Sigma)?;
        for k in 1..seq.len() {
            if self.lookup(&seq[..k]).is_none() {
                return Err(Error::Sigma(format!("prefix of length {k} is not assigned")));
            }
        }
        if let Some(v) = self.lookup(seq) {
            return Ok(v);
        }
        let t = self.threshold(params, seq)?;
        let j_k = seq[seq.len() - 1].1;
        let mut j = j_k + 1;
        loop {
            let w = 2 * j as usize;
            if w >= params.levels() {
                return Err(Error::Sigma(format!(
                    "parameter list too short: no free j in N2 with m_2j > {t}"
                )));
            }
            if params.split.in_n2(j) && !self.used.contains(&j) && params.m(w)? > t {
                break;
            }
            j += 1;
        }
        self.insert(seq.to_vec(), j, false);
        Ok(j)
    }

    /// Records an externally supplied value (for foreign certificates).
    pub fn quarantine_assign(
        &mut self,
        params: &ParameterSystem,
        seq: &[(FiniteSet, u32)],
        value: u32,
    ) -> Result<()> {
        check_sigma_domain(&params.split, seq).map_err(Error::Sigma)?;
        match self.lookup(seq) {
            Some(v) if v == value => return Ok(()),
            Some(v) => {
                return Err(Error::Sigma(format!("sequence already coded as {v}, not {value}")))
            }
            None => {}
        }
        if self.used.contains(&value) || !params.split.in_n2(value) {
            return Err(Error::Sigma(format!("value {value} is taken or not in N2")));
        }
        let t = self.threshold(params, seq)?;
        if params.m(2 * value as usize)? <= t || value <= seq[seq.len() - 1].1 {
            return Err(Error::Sigma(format!("value {value} violates the growth condition")));
        }
        self.insert(seq.to_vec(), value, true);
        Ok(())
    }

    fn insert(&mut self, sequence: Vec<(FiniteSet, u32)>, value: u32, quarantine: bool) {
        self.index.insert(sequence.clone(), value);
        self.used.insert(value);
        self.entries.push(Assignment {
            sequence,
            value,
            quarantine,
        });
    }

    /// Re-checks injectivity, domain membership and growth for every entry.
    pub fn verify(&self, params: &ParameterSystem) -> Result<()> {
        let mut rebuilt = SigmaRegistry::new();
        for (i, a) in self.entries.iter().enumerate() {
            check_sigma_domain(&params.split, &a.sequence)
                .map_err(|e| Error::Sigma(format!("entry {i}: {e}")))?;
            if rebuilt.lookup(&a.sequence).is_some() {
                return Err(Error::Sigma(format!("entry {i}: duplicate sequence")));
            }
            if rebuilt.used.contains(&a.value) {
                return Err(Error::Sigma(format!("entry {i}: value {} reused", a.value)));
            }
            if !params.split.in_n2(a.value) || a.value <= a.sequence[a.sequence.len() - 1].1 {
                return Err(Error::Sigma(format!("entry {i}: value {} not admissible", a.value)));
            }
            let t = rebuilt.threshold(params, &a.sequence)?;
            if params.m(2 * a.value as usize)? <= t {
                return Err(Error::Sigma(format!("entry {i}: growth condition fails")));
            }
            rebuilt.insert(a.sequence.clone(), a.value, a.quarantine);
        }
        Ok(())
    }

    fn reindex(&mut self) {
        self.index.clear();
        self.used.clear();
        for a in &self.entries {
            self.index.insert(a.sequence.clone(), a.value);
            self.used.insert(a.value);
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str, params: &ParameterSystem) -> Result<Self> {
        let mut reg: SigmaRegistry = serde_json::from_str(s)?;
        reg.reindex();
        reg.verify(params)?;
        Ok(reg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path, params: &ParameterSystem) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?, params)
    }

    /// Whether `s` is σ-special: `j_1 ∈ N1` and `σ(s_i) = j_{i+1}`.
    pub fn check_special(&self, params: &ParameterSystem, s: &SpecialSequence) -> std::result::Result<(), String> {
        if s.is_empty() {
            return Ok(());
        }
        check_sigma_domain(&params.split, &s.pairs)?;
        for i in 1..s.len() {
            match self.lookup(s.prefix(i)) {
                Some(v) if v == s.pairs[i].1 => {}
                Some(v) => return Err(format!("σ of prefix {i} is {v}, not j_{} = {}", i + 1, s.pairs[i].1)),
                None => return Err(format!("prefix of length {i} is not registered")),
            }
        }
        Ok(())
    }

    /// `s ⌢ (E, 2σ(s))`.
    pub fn extend_special(
        &mut self,
        params: &ParameterSystem,
        s: &SpecialSequence,
        e: FiniteSet,
    ) -> Result<SpecialSequence> {
        if s.is_empty() {
            return Err(Error::Sigma("the first pair must be chosen with start_special".into()));
        }
        self.check_special(params, s).map_err(Error::Sigma)?;
        if let Some(i) = s.pairs.iter().position(|(f, _)| !f.is_disjoint(&e)) {
            return Err(Error::Sigma(format!("E meets E_{}", i + 1)));
        }
        if e.is_empty() {
            return Err(Error::Sigma("E is empty".into()));
        }
        let j = self.sigma_assign(params, &s.pairs)?;
        let mut out = s.clone();
        out.pairs.push((e, j));
        Ok(out)
    }

    /// Tree-like comparison of two σ-special sequences.
    pub fn check_treelike(
        &self,
        params: &ParameterSystem,
        s: &SpecialSequence,
        t: &SpecialSequence,
    ) -> Result<TreeVerdict> {
        for seq in [s, t] {
            self.check_special(params, seq).map_err(Error::Sigma)?;
        }
        Ok(treelike(&s.pairs, &t.pairs))
    }
}

/// Length-1 special sequence `((E, 2j_1))`.
pub fn start_special(params: &ParameterSystem, e: FiniteSet, j1: u32) -> Result<SpecialSequence> {
    let pairs = vec![(e, j1)];
    check_sigma_domain(&params.split, &pairs).map_err(Error::Sigma)?;
    Ok(SpecialSequence::new(pairs))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum TreeVerdict {
    /// `j_i ≠ k_l` for all `i, l`.
    DisjointWeights,
    /// Agreement below `d`, `j_d = k_d`, `E_d ≠ F_d`, disjoint weights beyond `d` (1-based).
    Branch { d: usize },
    /// One sequence is an initial segment of the other (equal when `shorter == longer`).
    Prefix { shorter: usize, longer: usize },
    /// Neither alternative holds.
    Violation { reason: String },
}

fn treelike(s: &[(FiniteSet, u32)], t: &[(FiniteSet, u32)]) -> TreeVerdict {
    let common = s.len().min(t.len());
    let Some(d0) = (0..common).find(|&i| s[i] != t[i]) else {
        return TreeVerdict::Prefix {
            shorter: common,
            longer: s.len().max(t.len()),
        };
    };
    let tail_disjoint = |from: usize| {
        let a: BTreeSet<u32> = s[from..].iter().map(|p| p.1).collect();
        t[from..].iter().all(|p| !a.contains(&p.1))
    };
    if s[d0].1 == t[d0].1 {
        if tail_disjoint(d0 + 1) {
            TreeVerdict::Branch { d: d0 + 1 }
        } else {
            TreeVerdict::Violation {
                reason: format!("shared weight after branching at {}", d0 + 1),
            }
        }
    } else if d0 == 0 && tail_disjoint(0) {
        TreeVerdict::DisjointWeights
    } else {
        TreeVerdict::Violation {
            reason: format!("weights differ at {} after a common prefix", d0 + 1),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[u32]) -> FiniteSet {
        FiniteSet::new(v.to_vec()).unwrap()
    }

    fn toy() -> ParameterSystem {
        let m: Vec<u128> = (0..40).map(|j| if j < 2 { 2 } else { 1u128 << (3 * j) }).collect();
        ParameterSystem::toy(m, vec![1; 40], Split::default()).unwrap()
    }

    #[test]
    fn strict_parameters() {
        let p = ParameterSystem::strict(4, Split::default()).unwrap();
        assert_eq!(p.m_list(), &[2, 2, 8, 512]);
        assert_eq!(p.n_list(), &[1, 9, 101, 2857]);
        assert!(p.violations.is_empty());
        assert_eq!(ParameterSystem::strict(6, Split::default()).unwrap().m(5).unwrap(), 1 << 81);
        assert!(ParameterSystem::strict(7, Split::default()).is_err());
    }

    #[test]
    fn toy_parameters() {
        let p = ParameterSystem::toy(vec![2; 4], vec![1; 4], Split::default()).unwrap();
        assert!(p.violations.contains(&GrowthViolation::MGrowth { j: 2 }));
        assert!(p.violations.contains(&GrowthViolation::NGrowth { j: 2 }));
        assert!(ParameterSystem::toy(vec![2, 0], vec![1, 1], Split::default()).is_err());
        assert!(ParameterSystem::toy(vec![4, 2], vec![1, 1], Split::default()).is_err());
    }

    #[test]
    fn first_assignment_is_pinned() {
        let p = toy();
        let mut reg = SigmaRegistry::new();
        // threshold m_2·5² = 64·25 = 1600; m_4 = 4096 exceeds it and 2 ∈ N2
        let seq = vec![(s(&[4, 5]), 1)];
        assert_eq!(reg.sigma_assign(&p, &seq).unwrap(), 2);
        assert_eq!(reg.sigma_assign(&p, &seq).unwrap(), 2);
        let bad = vec![(s(&[4, 5]), 1), (s(&[5, 9]), 2)];
        assert!(reg.sigma_assign(&p, &bad).is_err());
    }

    #[test]
    fn extension_and_treelike() {
        let p = toy();
        let mut reg = SigmaRegistry::new();
        let a = start_special(&p, s(&[2, 3]), 1).unwrap();
        let a2 = reg.extend_special(&p, &a, s(&[5])).unwrap();
        let a3 = reg.extend_special(&p, &a2, s(&[7])).unwrap();
        let b3 = reg.extend_special(&p, &a2, s(&[8])).unwrap();
        assert_eq!(a3.len(), 3);
        assert!(reg.check_special(&p, &a3).is_ok());
        assert_eq!(reg.check_treelike(&p, &a3, &b3).unwrap(), TreeVerdict::Branch { d: 3 });
        let a4 = reg.extend_special(&p, &a3, s(&[10])).unwrap();
        let b4 = reg.extend_special(&p, &b3, s(&[10])).unwrap();
        assert_eq!(reg.check_treelike(&p, &a4, &b4).unwrap(), TreeVerdict::Branch { d: 3 });
        let c = start_special(&p, s(&[2, 3]), 3).unwrap();
        let c2 = reg.extend_special(&p, &c, s(&[5])).unwrap();
        assert_eq!(reg.check_treelike(&p, &a3, &c2).unwrap(), TreeVerdict::DisjointWeights);
        assert_eq!(
            reg.check_treelike(&p, &a3, &a3).unwrap(),
            TreeVerdict::Prefix { shorter: 3, longer: 3 }
        );
        assert!(reg.extend_special(&p, &a3, s(&[3, 11])).is_err());
        let json = reg.to_json().unwrap();
        let back = SigmaRegistry::from_json(&json, &p).unwrap();
        assert_eq!(back, reg);
        assert_eq!(back.to_json().unwrap(), json);
    }
}
