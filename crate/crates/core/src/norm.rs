//! Certified lower and upper bounds for the norm of finitely supported vectors.
//!
//! All three computations work on the subsets `E ⊆ supp x`, indexed by bit
//! masks over the support positions and processed in increasing mask order,
//! so every proper subset is finished before its supersets.
//!
//! A family search for a set `E` runs over families of pairwise disjoint
//! pieces inside `E` whose minima lie in `S_n`. Pieces are chosen in order of
//! their minimum, which lets the minima be fed to the incremental
//! [`GreedyState`] and memoised on `(remaining elements, state)`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::caps::{Caps, ORACLE_DEPTH_LIMIT, ORACLE_SUPPORT_LIMIT};
use crate::error::{Error, Result};
use crate::functionals::{Functional, Scalar};
use crate::params::{ParameterSystem, SigmaRegistry, SpecialSequence};
use crate::schreier::{effective_level, oracle, FiniteSet, GreedyState};
use crate::vector::RealVector;

/// Relative tolerance for comparing norm values.
pub const TOLERANCE: f64 = 1e-9;

pub fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

pub fn le(a: f64, b: f64) -> bool {
    a <= b + TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpperMethod {
    /// Attained by the even fragment, so the bound is the norm itself.
    EvenOnly,
    /// Odd operations admitted without the coding constraint.
    RelaxedOdd,
    /// Attained by `‖x‖_∞`.
    Linf,
    /// `max(‖x‖_∞, ‖x‖_2 / min m)` for supports beyond the subset DP.
    Envelope,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormBounds {
    pub lower: f64,
    pub lower_certificate: Functional,
    pub lower_source: String,
    pub upper: f64,
    pub upper_method: UpperMethod,
    pub exact: bool,
    /// Smallest even weight index skipped at the top level by the envelope test.
    pub truncated_at: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvenNorm {
    pub value: f64,
    pub certificate: Functional,
    pub truncated_at: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct NormOptions {
    pub j_max: usize,
    pub caps: Caps,
    /// Depth of the oracle search for odd certificates (0 disables it).
    pub oracle_depth: usize,
    pub certificates: Vec<Functional>,
}

impl NormOptions {
    pub fn new(j_max: usize) -> Self {
        NormOptions {
            j_max,
            caps: Caps::default(),
            oracle_depth: 0,
            certificates: Vec::new(),
        }
    }
}

struct Subsets {
    idx: Vec<u32>,
    coef: Vec<f64>,
    linf: Vec<f64>,
    argmax: Vec<usize>,
    l2: Vec<f64>,
}

impl Subsets {
    fn new(x: &RealVector) -> Self {
        let idx: Vec<u32> = x.coeffs().iter().map(|c| c.0).collect();
        let coef: Vec<f64> = x.coeffs().iter().map(|c| c.1).collect();
        let size = 1usize << idx.len();
        let mut linf = vec![0.0; size];
        let mut argmax = vec![0; size];
        let mut l2sq = vec![0.0; size];
        for mask in 1..size {
            let low = mask.trailing_zeros() as usize;
            let rest = mask & (mask - 1);
            let a = coef[low].abs();
            l2sq[mask] = l2sq[rest] + a * a;
            if rest == 0 || a >= linf[rest] {
                linf[mask] = a;
                argmax[mask] = low;
            } else {
                linf[mask] = linf[rest];
                argmax[mask] = argmax[rest];
            }
        }
        Subsets {
            idx,
            coef,
            linf,
            argmax,
            l2: l2sq.into_iter().map(f64::sqrt).collect(),
        }
    }

    fn len(&self) -> usize {
        self.idx.len()
    }

    fn full(&self) -> usize {
        (1usize << self.len()) - 1
    }

    fn leaf(&self, mask: usize) -> Functional {
        let p = self.argmax[mask];
        Functional::leaf(if self.coef[p] < 0.0 { -1 } else { 1 }, self.idx[p])
    }
}

#[derive(Debug, Clone, Copy)]
enum Step {
    Skip,
    Piece(usize),
}

/// Best `Σ g(B)²` over families of disjoint pieces with minima in `S_level`.
struct FamilyTable {
    level: u32,
    memo: HashMap<(usize, GreedyState), (f64, Step)>,
}

impl FamilyTable {
    fn new(level: u32, support: usize) -> Self {
        FamilyTable {
            level: effective_level(support + 1, level),
            memo: HashMap::new(),
        }
    }

    fn init(&self) -> GreedyState {
        GreedyState::new(self.level)
    }

    fn best(&mut self, r: usize, s: &GreedyState, idx: &[u32], g: &[f64]) -> f64 {
        if r == 0 {
            return 0.0;
        }
        if let Some(v) = self.memo.get(&(r, s.clone())) {
            return v.0;
        }
        let out = self.step(r, s, idx, g, None);
        self.memo.insert((r, s.clone()), out);
        out.0
    }

    /// One level of the recursion; `exclude` forbids a single piece equal to it.
    fn step(
        &mut self,
        r: usize,
        s: &GreedyState,
        idx: &[u32],
        g: &[f64],
        exclude: Option<usize>,
    ) -> (f64, Step) {
        let low = r & r.wrapping_neg();
        let mut best = (self.best(r ^ low, s, idx, g), Step::Skip);
        if let Some(next) = s.clone().push(idx[low.trailing_zeros() as usize]) {
            let rest = r ^ low;
            let mut sub = rest;
            loop {
                let piece = sub | low;
                if Some(piece) != exclude {
                    let v = g[piece] + self.best(rest ^ sub, &next, idx, g);
                    if v > best.0 {
                        best = (v, Step::Piece(piece));
                    }
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & rest;
            }
        }
        best
    }

    /// Best family inside `e` other than the single piece `{e}`.
    fn best_excluding_whole(&mut self, e: usize, idx: &[u32], g: &[f64]) -> (f64, Step) {
        let s = self.init();
        self.step(e, &s, idx, g, Some(e))
    }

    /// Pieces of the optimal family recorded for `e`.
    fn pieces(&mut self, e: usize, first: Step, idx: &[u32], g: &[f64]) -> Vec<usize> {
        let mut out = Vec::new();
        let mut r = e;
        let mut s = self.init();
        let mut step = first;
        loop {
            let low = r & r.wrapping_neg();
            match step {
                Step::Skip => r ^= low,
                Step::Piece(p) => {
                    out.push(p);
                    r ^= p;
                    s = s.push(idx[low.trailing_zeros() as usize]).expect("recorded step");
                }
            }
            if r == 0 {
                return out;
            }
            self.best(r, &s, idx, g);
            step = self.memo[&(r, s.clone())].1;
        }
    }
}

fn check_support(x: &RealVector, caps: &Caps) -> Result<()> {
    if x.len() > caps.dp_support {
        return Err(Error::Cap(format!(
            "support of size {} exceeds the subset DP cap {}",
            x.len(),
            caps.dp_support
        )));
    }
    Ok(())
}

fn check_weights(params: &ParameterSystem) -> Result<()> {
    if params.m_list().iter().skip(1).any(|&m| m < 2) {
        return Err(Error::Params("the norm engine needs every weight m_j (j ≥ 1) to be at least 2".into()));
    }
    Ok(())
}

/// Even weights grouped by Schreier level, keeping the smallest weight per level.
fn even_groups(params: &ParameterSystem, j_max: usize) -> Result<Vec<(u32, usize, f64)>> {
    let mut groups: Vec<(u32, usize, f64)> = Vec::new();
    for w in params.even_indices(j_max) {
        let level = params.level(w)?;
        let m = params.m(w)? as f64;
        match groups.iter_mut().find(|g| g.0 == level) {
            Some(g) if m < g.2 => *g = (level, w, m),
            Some(_) => {}
            None => groups.push((level, w, m)),
        }
    }
    Ok(groups)
}

#[derive(Debug, Clone, Copy)]
enum EvenChoice {
    Leaf,
    Node { group: usize, step: Step },
}

/// Exact norm of `x` for the fragment generated by `±e_n*` and the even
/// operations of weights `m_2, …, m_{2 j_max}`, with an optimal functional.
pub fn norm_even(x: &RealVector, params: &ParameterSystem, j_max: usize, caps: &Caps) -> Result<EvenNorm> {
    check_support(x, caps)?;
    check_weights(params)?;
    if x.is_empty() {
        return Ok(EvenNorm {
            value: 0.0,
            certificate: Functional::leaf(1, 1),
            truncated_at: None,
        });
    }
    let sub = Subsets::new(x);
    let groups = even_groups(params, j_max)?;
    let mut tables: Vec<FamilyTable> = groups.iter().map(|g| FamilyTable::new(g.0, sub.len())).collect();
    let size = sub.full() + 1;
    let mut val = vec![0.0; size];
    let mut g = vec![0.0; size];
    let mut choice = vec![EvenChoice::Leaf; size];
    let mut truncated_at = None;
    for e in 1..size {
        let mut best = sub.linf[e];
        for (t, &(_, w, m)) in groups.iter().enumerate() {
            if sub.l2[e] / m <= best {
                if e == sub.full() {
                    truncated_at = Some(truncated_at.map_or(w, |v: usize| v.min(w)));
                }
                continue;
            }
            let (v, step) = tables[t].best_excluding_whole(e, &sub.idx, &g);
            let cand = v.sqrt() / m;
            if cand > best {
                best = cand;
                choice[e] = EvenChoice::Node { group: t, step };
            }
        }
        val[e] = best;
        g[e] = best * best;
    }
    let certificate = build_even(params, &sub, &groups, &mut tables, &choice, &val, &g, sub.full())?;
    Ok(EvenNorm {
        value: val[sub.full()],
        certificate,
        truncated_at,
    })
}

#[allow(clippy::too_many_arguments)]
fn build_even(
    params: &ParameterSystem,
    sub: &Subsets,
    groups: &[(u32, usize, f64)],
    tables: &mut [FamilyTable],
    choice: &[EvenChoice],
    val: &[f64],
    g: &[f64],
    e: usize,
) -> Result<Functional> {
    match choice[e] {
        EvenChoice::Leaf => Ok(sub.leaf(e)),
        EvenChoice::Node { group, step } => {
            let pieces = tables[group].pieces(e, step, &sub.idx, g);
            let norm = pieces.iter().map(|&p| g[p]).sum::<f64>().sqrt();
            let mut children = Vec::with_capacity(pieces.len());
            for p in pieces {
                let child = build_even(params, sub, groups, tables, choice, val, g, p)?;
                children.push((Scalar::from_f64(val[p] / norm), child));
            }
            Functional::node(params, groups[group].1 as u32, children, None)
        }
    }
}

/// Smallest weight among indices from `from` on (weights beyond the list are
/// taken to be at least the last one).
fn m_from(params: &ParameterSystem, from: usize) -> Result<f64> {
    Ok(params.m(from.min(params.levels() - 1))? as f64)
}

/// Upper bound for the norm: odd operations admitted with any even children
/// of weight index above `2j + 2`, without the coding constraint, and every
/// weight outside the explicit range bounded through `f(x) ≤ ‖x‖_2 / ω(f)`.
pub fn norm_upper(x: &RealVector, params: &ParameterSystem, j_max: usize, caps: &Caps) -> Result<f64> {
    check_support(x, caps)?;
    check_weights(params)?;
    if x.is_empty() {
        return Ok(0.0);
    }
    let sub = Subsets::new(x);
    let size = sub.full() + 1;
    let levels = params.levels();
    let m_env = m_from(params, 2 * j_max + 2)?;

    let even_ws = params.even_indices(j_max);
    let mut level_of = Vec::new();
    let mut even_levels: Vec<u32> = Vec::new();
    for &w in &even_ws {
        let l = params.level(w)?;
        let t = match even_levels.iter().position(|&v| v == l) {
            Some(t) => t,
            None => {
                even_levels.push(l);
                even_levels.len() - 1
            }
        };
        level_of.push(t);
    }
    let mut even_tables: Vec<FamilyTable> = even_levels.iter().map(|&l| FamilyTable::new(l, sub.len())).collect();
    let mut even_best = vec![vec![0.0; size]; even_levels.len()];

    struct OddWeight {
        m: f64,
        /// Positions in `even_ws` of admissible child weights.
        children: Vec<usize>,
        m_child_env: f64,
        m_child_min: f64,
        table: FamilyTable,
        c: Vec<f64>,
    }
    let mut odd: Vec<OddWeight> = Vec::new();
    for j in 0..=j_max {
        let w = 2 * j + 1;
        if w >= levels {
            break;
        }
        let children: Vec<usize> = (0..even_ws.len()).filter(|&i| even_ws[i] > 2 * j + 2).collect();
        let m_child_env = m_from(params, (2 * j + 4).max(2 * j_max + 2))?;
        let m_child_min = children
            .iter()
            .map(|&i| params.m(even_ws[i]).map(|m| m as f64))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(m_child_env, f64::min);
        odd.push(OddWeight {
            m: params.m(w)? as f64,
            children,
            m_child_env,
            m_child_min,
            table: FamilyTable::new(params.level(w)?, sub.len()),
            c: vec![0.0; size],
        });
    }
    let even_m: Vec<f64> = even_ws
        .iter()
        .map(|&w| params.m(w).map(|m| m as f64))
        .collect::<Result<_>>()?;

    let mut up = vec![0.0; size];
    let mut g = vec![0.0; size];
    for e in 1..size {
        let l2 = sub.l2[e];
        let mut best = sub.linf[e].max(l2 / m_env);
        for (t, table) in even_tables.iter_mut().enumerate() {
            let (v, _) = table.best_excluding_whole(e, &sub.idx, &g);
            even_best[t][e] = v.sqrt();
        }
        for (i, &m) in even_m.iter().enumerate() {
            best = best.max(even_best[level_of[i]][e] / m);
        }
        let mut c_noself = Vec::with_capacity(odd.len());
        for o in odd.iter_mut() {
            let mut c = l2 / o.m_child_env;
            for &i in &o.children {
                c = c.max(even_best[level_of[i]][e] / even_m[i]);
            }
            let (v, _) = o.table.best_excluding_whole(e, &sub.idx, &o.c);
            best = best.max(v.max(c * c).sqrt() / o.m);
            c_noself.push(c);
        }
        up[e] = best;
        g[e] = best * best;
        for (o, c) in odd.iter_mut().zip(c_noself) {
            let c = c.max(best / o.m_child_min);
            o.c[e] = c * c;
        }
    }
    Ok(up[sub.full()])
}

/// `max(‖x‖_∞, ‖x‖_2 / min_{j≥1} m_j)`, valid for any support size.
pub fn envelope_upper(x: &RealVector, params: &ParameterSystem) -> Result<f64> {
    check_weights(params)?;
    let m_min = params.m_list().iter().skip(1).copied().min().unwrap_or(params.m(0)?) as f64;
    Ok(x.linf().max(x.l2() / m_min))
}

/// Exhaustive search over functionals of bounded depth supported in `supp x`.
///
/// Scalars at every node are chosen optimally (proportional to the child
/// values). Odd nodes use sequences whose coding is already in the registry.
pub fn norm_oracle(
    x: &RealVector,
    params: &ParameterSystem,
    reg: &SigmaRegistry,
    depth: usize,
    with_odd: bool,
) -> Result<(f64, Functional)> {
    if x.len() > ORACLE_SUPPORT_LIMIT || depth > ORACLE_DEPTH_LIMIT {
        return Err(Error::Cap(format!(
            "oracle caps: support ≤ {ORACLE_SUPPORT_LIMIT}, depth ≤ {ORACLE_DEPTH_LIMIT}"
        )));
    }
    check_weights(params)?;
    if x.is_empty() {
        return Ok((0.0, Functional::leaf(1, 1)));
    }
    let mut o = Oracle {
        x,
        params,
        reg,
        with_odd,
        idx: x.coeffs().iter().map(|c| c.0).collect(),
        memo: HashMap::new(),
        memo_w: HashMap::new(),
    };
    let full = (1usize << x.len()) - 1;
    Ok(o.best(full, depth))
}

struct Oracle<'a> {
    x: &'a RealVector,
    params: &'a ParameterSystem,
    reg: &'a SigmaRegistry,
    with_odd: bool,
    idx: Vec<u32>,
    memo: HashMap<(usize, usize), (f64, Functional)>,
    memo_w: HashMap<(usize, usize, usize), Option<(f64, Functional)>>,
}

/// All families of pairwise disjoint nonempty subsets of `mask`.
fn families(mask: usize) -> Vec<Vec<usize>> {
    let elems: Vec<usize> = (0..usize::BITS as usize).filter(|b| mask >> b & 1 == 1).collect();
    let mut out = Vec::new();
    let mut labels = vec![0usize; elems.len()];
    fn rec(i: usize, used: usize, elems: &[usize], labels: &mut [usize], out: &mut Vec<Vec<usize>>) {
        if i == elems.len() {
            let mut pieces = vec![0usize; used];
            for (k, &l) in labels.iter().enumerate() {
                if l > 0 {
                    pieces[l - 1] |= 1 << elems[k];
                }
            }
            if used > 0 {
                out.push(pieces);
            }
            return;
        }
        for l in 0..=used + 1 {
            labels[i] = l;
            rec(i + 1, if l == used + 1 { used + 1 } else { used }, elems, labels, out);
        }
    }
    rec(0, 0, &elems, &mut labels, &mut out);
    out
}

impl Oracle<'_> {
    fn set_of(&self, mask: usize) -> Vec<u32> {
        (0..self.idx.len()).filter(|b| mask >> b & 1 == 1).map(|b| self.idx[b]).collect()
    }

    fn min_of(&self, mask: usize) -> u32 {
        self.idx[mask.trailing_zeros() as usize]
    }

    fn best(&mut self, mask: usize, depth: usize) -> (f64, Functional) {
        if let Some(v) = self.memo.get(&(mask, depth)) {
            return v.clone();
        }
        let mut best = {
            let (p, v) = self
                .set_of(mask)
                .iter()
                .map(|&k| (k, self.x.get(k)))
                .fold((0, -1.0f64), |acc, (k, v)| if v.abs() > acc.1 { (k, v.abs()) } else { acc });
            let sign = if self.x.get(p) < 0.0 { -1 } else { 1 };
            (v, Functional::leaf(sign, p))
        };
        if depth > 0 {
            for w in 1..self.params.levels() {
                let cand = if w % 2 == 0 {
                    self.even_node(mask, w, depth)
                } else if self.with_odd {
                    self.odd_node(mask, w, depth)
                } else {
                    None
                };
                if let Some(c) = cand {
                    if c.0 > best.0 {
                        best = c;
                    }
                }
            }
        }
        self.memo.insert((mask, depth), best.clone());
        best
    }

    /// Best node of weight index `w` (even) supported in `mask`, depth ≤ `depth`.
    fn even_node(&mut self, mask: usize, w: usize, depth: usize) -> Option<(f64, Functional)> {
        if depth == 0 {
            return None;
        }
        if let Some(v) = self.memo_w.get(&(mask, w, depth)) {
            return v.clone();
        }
        let level = self.params.level(w).ok()?;
        let m = self.params.m(w).ok()? as f64;
        let mut best: Option<(f64, Vec<usize>)> = None;
        for fam in families(mask) {
            let mut mins: Vec<u32> = fam.iter().map(|&p| self.min_of(p)).collect();
            mins.sort_unstable();
            if !oracle::standard_member(&mins, level) {
                continue;
            }
            let s: f64 = fam.iter().map(|&p| self.best(p, depth - 1).0.powi(2)).sum();
            if best.as_ref().is_none_or(|b| s > b.0) {
                best = Some((s, fam));
            }
        }
        let out = best.map(|(s, fam)| {
            let norm = s.sqrt();
            let children = fam
                .iter()
                .map(|&p| {
                    let (v, f) = self.best(p, depth - 1);
                    (Scalar::from_f64(if norm > 0.0 { v / norm } else { 0.0 }), f)
                })
                .collect();
            let f = Functional::node(self.params, w as u32, children, None).expect("weight in list");
            (norm / m, f)
        });
        self.memo_w.insert((mask, w, depth), out.clone());
        out
    }

    fn odd_node(&mut self, mask: usize, w: usize, depth: usize) -> Option<(f64, Functional)> {
        if depth < 2 {
            return None;
        }
        let j = (w - 1) / 2;
        let _level = self.params.level(w).ok()?;
        let m = self.params.m(w).ok()? as f64;
        let supp = FiniteSet::from_unsorted(self.set_of(mask));
        // candidate prefixes: the empty one and every registered σ-special sequence
        let mut prefixes: Vec<(SpecialSequence, u32)> = Vec::new();
        for j1 in (j as u32 + 2)..=(self.params.levels() as u32 / 2) {
            if self.params.split.in_n1(j1) && (2 * j1 as usize) < self.params.levels() {
                prefixes.push((SpecialSequence::default(), j1));
            }
        }
        for a in self.reg.entries() {
            let s = SpecialSequence::new(a.sequence.clone());
            if s.pairs[0].1 > j as u32 + 1
                && (2 * a.value as usize) < self.params.levels()
                && self.reg.check_special(self.params, &s).is_ok()
            {
                prefixes.push((s, a.value));
            }
        }
        let mut best: Option<(f64, Functional)> = None;
        for (prefix, j_last) in prefixes {
            let mut used = 0usize;
            let mut children = Vec::new();
            let mut ok = true;
            for (e, ji) in &prefix.pairs {
                let part = self.mask_of(&supp, e);
                if part == 0 || part & used != 0 {
                    ok = false;
                    break;
                }
                used |= part;
                match self.even_node(part, 2 * *ji as usize, depth - 1) {
                    Some(c) => children.push(c),
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                continue;
            }
            let outside: Vec<u32> = prefix
                .pairs
                .iter()
                .flat_map(|(e, _)| e.elems().iter().copied())
                .collect();
            let free = mask
                & !used
                & !(0..self.idx.len())
                    .filter(|&b| outside.contains(&self.idx[b]))
                    .fold(0, |acc, b| acc | 1 << b);
            let mut last = free;
            while last != 0 {
                let mut pairs = prefix.pairs.clone();
                pairs.push((FiniteSet::from_unsorted(self.set_of(last)), j_last));
                let seq = SpecialSequence::new(pairs);
                if seq.qualifies(self.params, j as u32).unwrap_or(false) {
                    if let Some(c) = self.even_node(last, 2 * j_last as usize, depth - 1) {
                        let mut kids = children.clone();
                        kids.push(c);
                        let s: f64 = kids.iter().map(|k| k.0 * k.0).sum();
                        if best.as_ref().is_none_or(|b| s.sqrt() / m > b.0) {
                            let norm = s.sqrt();
                            let f = Functional::node(
                                self.params,
                                w as u32,
                                kids.into_iter()
                                    .map(|(v, f)| (Scalar::from_f64(if norm > 0.0 { v / norm } else { 0.0 }), f))
                                    .collect(),
                                Some(seq),
                            )
                            .expect("weight in list");
                            best = Some((norm / m, f));
                        }
                    }
                }
                last = (last - 1) & free;
            }
        }
        best
    }

    fn mask_of(&self, supp: &FiniteSet, e: &FiniteSet) -> usize {
        (0..self.idx.len())
            .filter(|&b| e.contains(self.idx[b]) && supp.contains(self.idx[b]))
            .fold(0, |acc, b| acc | 1 << b)
    }
}

/// The `k` largest coordinates of `x` in absolute value.
fn top_coordinates(x: &RealVector, k: usize) -> RealVector {
    let mut c: Vec<(u32, f64)> = x.coeffs().to_vec();
    c.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0)));
    c.truncate(k);
    RealVector::new(c)
}

/// Largest `j` with `2j` in the weight list.
pub fn full_j_max(params: &ParameterSystem) -> usize {
    params.levels().saturating_sub(1) / 2
}

/// Upper bound over every weight in the list, falling back to the envelope
/// for supports beyond the DP cap.
pub fn upper_bound(x: &RealVector, params: &ParameterSystem, caps: &Caps) -> Result<(f64, UpperMethod)> {
    if x.len() <= caps.dp_support {
        Ok((norm_upper(x, params, full_j_max(params), caps)?, UpperMethod::RelaxedOdd))
    } else {
        Ok((envelope_upper(x, params)?, UpperMethod::Envelope))
    }
}

/// Even-fragment lower bound, restricted to the largest coordinates when the
/// support exceeds the DP cap.
pub fn lower_bound(x: &RealVector, params: &ParameterSystem, caps: &Caps) -> Result<EvenNorm> {
    let base = if x.len() <= caps.dp_support { x.clone() } else { top_coordinates(x, caps.dp_support) };
    norm_even(&base, params, full_j_max(params), caps)
}

/// Lower and upper bounds with a certificate for the lower one.
pub fn norm_bounds(
    x: &RealVector,
    params: &ParameterSystem,
    reg: &SigmaRegistry,
    opts: &NormOptions,
) -> Result<NormBounds> {
    let caps = &opts.caps;
    let fits = x.len() <= caps.dp_support;
    let base = if fits { x.clone() } else { top_coordinates(x, caps.dp_support) };
    let even = norm_even(&base, params, opts.j_max, caps)?;
    let mut lower = even.certificate.evaluate(x);
    let mut certificate = even.certificate.clone();
    let mut source = if fits { "even_dp" } else { "even_dp_restricted" }.to_string();
    if opts.oracle_depth > 0 && x.len() <= caps.oracle_support.min(ORACLE_SUPPORT_LIMIT) {
        let depth = opts.oracle_depth.min(caps.oracle_depth).min(ORACLE_DEPTH_LIMIT);
        let (_, f) = norm_oracle(x, params, reg, depth, true)?;
        let v = f.evaluate(x);
        if v > lower && f.validate(params, reg).is_ok() {
            lower = v;
            certificate = f;
            source = "oracle".into();
        }
    }
    for (i, f) in opts.certificates.iter().enumerate() {
        if f.validate(params, reg).is_ok() {
            let v = f.evaluate(x);
            if v > lower {
                lower = v;
                certificate = f.clone();
                source = format!("certificate {i}");
            }
        }
    }
    let (upper, method) = if fits {
        let u = norm_upper(x, params, opts.j_max, caps)?;
        let method = if close(u, x.linf()) {
            UpperMethod::Linf
        } else if close(u, even.value) {
            UpperMethod::EvenOnly
        } else {
            UpperMethod::RelaxedOdd
        };
        (u, method)
    } else {
        (envelope_upper(x, params)?, UpperMethod::Envelope)
    };
    if !le(x.linf(), lower) || !le(lower, upper) {
        return Err(Error::Construction(format!(
            "inconsistent bounds: linf {} lower {lower} upper {upper}",
            x.linf()
        )));
    }
    Ok(NormBounds {
        lower,
        lower_certificate: certificate,
        lower_source: source,
        upper: upper.max(lower),
        upper_method: method,
        exact: close(lower, upper),
        truncated_at: even.truncated_at,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Split;

    fn toy() -> ParameterSystem {
        ParameterSystem::toy(vec![2, 2, 2, 3, 4], vec![1, 1, 1, 1, 2], Split::default()).unwrap()
    }

    fn ones(ks: &[u32]) -> RealVector {
        RealVector::new(ks.iter().map(|&k| (k, 1.0)))
    }

    #[test]
    fn even_examples() {
        let p = toy();
        let caps = Caps::default();
        let r = norm_even(&RealVector::unit(7), &p, 2, &caps).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(r.certificate, Functional::leaf(1, 7));
        let r = norm_even(&ones(&[2, 3]), &p, 1, &caps).unwrap();
        assert_eq!(r.value, 1.0);
        let x = ones(&[4, 5, 6, 7]);
        let r = norm_even(&x, &p, 1, &caps).unwrap();
        assert!(close(r.value, 1.0));
        let (v, _) = norm_oracle(&x, &p, &SigmaRegistry::new(), 2, false).unwrap();
        assert!(close(v, 1.0));
    }

    #[test]
    fn certificates_replay() {
        let p = toy();
        let caps = Caps::default();
        let x = RealVector::new((3..=11).map(|k| (k, if k % 3 == 0 { -1.0 } else { 0.9 })));
        let r = norm_even(&x, &p, 2, &caps).unwrap();
        assert!(close(r.certificate.evaluate(&x), r.value));
        assert!(r.certificate.validate(&p, &SigmaRegistry::new()).is_ok());
        assert!(r.value > x.linf());
    }

    #[test]
    fn upper_examples() {
        let p = toy();
        let caps = Caps::default();
        assert_eq!(norm_upper(&RealVector::unit(7), &p, 2, &caps).unwrap(), 1.0);
        let x = ones(&[2, 3]);
        let u = norm_upper(&x, &p, 2, &caps).unwrap();
        assert!(u >= norm_even(&x, &p, 2, &caps).unwrap().value);
    }

    #[test]
    fn bounds_are_ordered() {
        let p = toy();
        let reg = SigmaRegistry::new();
        let mut opts = NormOptions::new(2);
        opts.oracle_depth = 2;
        let x = RealVector::new([(5, 1.0), (6, -0.5), (8, 0.75), (9, 1.0)]);
        let b = norm_bounds(&x, &p, &reg, &opts).unwrap();
        assert!(b.lower <= b.upper);
        assert!(close(b.lower_certificate.evaluate(&x), b.lower));
        let e = norm_bounds(&RealVector::unit(4), &p, &reg, &opts).unwrap();
        assert!(e.exact && e.lower == 1.0 && e.upper == 1.0);
    }
}
