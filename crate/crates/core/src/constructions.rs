//! Builders for seminormalized scc's, rapidly increasing sequences, exact
//! vectors, 0-dependent sequences, and the small-scale gap demonstration.
//!
//! Every witness carries enough data to be re-verified after a JSON round
//! trip; the `verify` methods never trust the builder.

use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::averages::{is_bscc_powers, make_scc, repeated_average, Scc};
use crate::caps::Caps;
use crate::error::{pre, Error, Result};
use crate::functionals::{Functional, Scalar};
use crate::norm::{le, lower_bound, upper_bound, UpperMethod};
use crate::params::{ParameterSystem, SigmaRegistry, Split, SpecialSequence};
use crate::rational::{q_u128, Q};
use crate::schreier::{minima, FiniteSet};
use crate::vector::RealVector;

fn fail(msg: impl Into<String>) -> Error {
    Error::Construction(msg.into())
}

/// `1/m³` as an exact rational.
fn inv_cube(m: u128) -> Q {
    let m = q_u128(m);
    Q::one() / (&m * &m * &m)
}

fn check_successive(blocks: &[RealVector]) -> Result<()> {
    for (i, w) in blocks.windows(2).enumerate() {
        if w[0].is_empty() || w[1].is_empty() {
            return Err(pre(format!("block {} is zero", if w[0].is_empty() { i } else { i + 1 })));
        }
        if w[0].max_supp() >= w[1].min_supp() {
            return Err(pre(format!("blocks {i} and {} are not successive", i + 1)));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeminormalizedScc {
    pub vector: RealVector,
    pub scc: Scc,
    pub lower: f64,
}

/// Searches windows of `blocks` for an `(eps, n)`-scc whose certified lower
/// bound is at least `1/2`.
pub fn build_seminormalized_scc(
    params: &ParameterSystem,
    blocks: &[RealVector],
    eps: &Q,
    n: u32,
    caps: &Caps,
) -> Result<SeminormalizedScc> {
    if blocks.is_empty() {
        return Err(Error::Exhausted("no blocks".into()));
    }
    check_successive(blocks)?;
    for (i, b) in blocks.iter().enumerate() {
        let lower = lower_bound(b, params, caps)?.value;
        if !le(1.0, lower) {
            return Err(pre(format!("block {i} has lower bound {lower} < 1")));
        }
    }
    let mut last = None;
    for start in 0..blocks.len() {
        let mut scc = match make_scc(&blocks[start..], eps, n, caps) {
            Ok(s) => s,
            Err(e @ Error::Exhausted(_)) => {
                last = Some(e);
                continue;
            }
            Err(e) => return Err(e),
        };
        scc.start += start;
        scc.end += start;
        let vector = scc.combine(blocks);
        let lower = lower_bound(&vector, params, caps)?.value;
        if le(0.5, lower) {
            return Ok(SeminormalizedScc { vector, scc, lower });
        }
    }
    Err(Error::Exhausted(format!(
        "no window of {} blocks yields a seminormalized scc{}",
        blocks.len(),
        last.map(|e| format!(" ({e})")).unwrap_or_default()
    )))
}

/// A `(C, (2j_k))`-RIS together with the scc data of each block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RisWitness {
    /// Building blocks the RIS vectors are combined from.
    pub base: Vec<RealVector>,
    pub sccs: Vec<Scc>,
    pub blocks: Vec<RealVector>,
    #[serde(rename = "C")]
    pub c: f64,
    /// Even weight indices `2j_k`.
    pub weights: Vec<u32>,
    pub seminormalized: bool,
}

/// `m_{w_next} > m_w · t²` in exact integer arithmetic.
fn growth_ok(params: &ParameterSystem, w: u32, t: u32, w_next: u32) -> Result<bool> {
    let lhs = params.m(w_next as usize)?;
    let t = t as u128;
    Ok(params.m(w as usize)?.checked_mul(t * t).is_some_and(|rhs| lhs > rhs))
}

impl RisWitness {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Half index `j_k`.
    pub fn half(&self, k: usize) -> u32 {
        self.weights[k] / 2
    }

    pub fn verify(&self, params: &ParameterSystem, caps: &Caps) -> Result<()> {
        let k = self.blocks.len();
        if self.sccs.len() != k || self.weights.len() != k {
            return Err(fail("blocks, sccs and weights differ in length"));
        }
        check_successive(&self.blocks)?;
        for i in 0..k {
            let w = self.weights[i];
            if !w.is_multiple_of(2) || w == 0 || w as usize >= params.levels() {
                return Err(fail(format!("weight index {w} of block {i} is not an even index in the list")));
            }
            if i > 0 && self.weights[i - 1] >= w {
                return Err(fail(format!("weights not increasing at block {i}")));
            }
            let s = &self.sccs[i];
            if s.end >= self.base.len() || s.start > s.end {
                return Err(fail(format!("block {i} refers to missing base blocks")));
            }
            let m = params.m(w as usize)?;
            if s.witness.eps != inv_cube(m) || s.witness.n != params.level(w as usize)? || s.witness.p != 2 {
                return Err(fail(format!("block {i} is not a (1/m³, n) scc for weight {w}")));
            }
            if s.witness.anchors.len() != s.end - s.start + 1
                || s.witness
                    .anchors
                    .iter()
                    .zip(&self.base[s.start..=s.end])
                    .any(|(t, y)| y.max_supp() != Some(*t))
            {
                return Err(fail(format!("anchors of block {i} are not the base maxima")));
            }
            if !s.witness.verify(caps)? {
                return Err(fail(format!("block {i} fails the scc conditions")));
            }
            let combined = s.combine(&self.base);
            if combined.support() != self.blocks[i].support()
                || combined
                    .coeffs()
                    .iter()
                    .any(|&(n, v)| !crate::norm::close(v, self.blocks[i].get(n)))
            {
                return Err(fail(format!("block {i} differs from its scc combination")));
            }
            let (upper, _) = upper_bound(&self.blocks[i], params, caps)?;
            if !le(upper, self.c) {
                return Err(fail(format!("upper bound {upper} of block {i} exceeds C = {}", self.c)));
            }
            if self.seminormalized {
                let lower = lower_bound(&self.blocks[i], params, caps)?.value;
                if !le(1.0, lower) {
                    return Err(fail(format!("block {i} has lower bound {lower} < 1")));
                }
            }
            if i + 1 < k {
                let t = self.blocks[i].max_supp().unwrap_or(0);
                if !growth_ok(params, w, t, self.weights[i + 1])? {
                    return Err(fail(format!(
                        "(maxsupp x_{i})²/m_{} < 1/m_{w} fails",
                        self.weights[i + 1]
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Builds a RIS from `base`, starting at weight index `start_weight` and taking
/// each later weight minimal with `m_{2j_{k+1}} > m_{2j_k}(maxsupp x_k)²`.
///
/// With `count = None` blocks are added until the base or the weight list
/// runs out (at least one block is required).
pub fn build_ris(
    params: &ParameterSystem,
    base: &[RealVector],
    c: f64,
    start_weight: u32,
    count: Option<usize>,
    caps: &Caps,
) -> Result<RisWitness> {
    check_successive(base)?;
    if !start_weight.is_multiple_of(2) || start_weight == 0 || start_weight as usize >= params.levels() {
        return Err(pre(format!("start weight {start_weight} is not an even index in the list")));
    }
    let mut out = RisWitness {
        base: base.to_vec(),
        sccs: Vec::new(),
        blocks: Vec::new(),
        c,
        weights: Vec::new(),
        seminormalized: true,
    };
    let mut cursor = 0;
    let mut w = start_weight;
    while count.is_none_or(|k| out.len() < k) {
        if !out.is_empty() {
            let prev = *out.weights.last().unwrap();
            let t = out.blocks.last().unwrap().max_supp().unwrap_or(0);
            let mut next = prev + 2;
            loop {
                if next as usize >= params.levels() {
                    if count.is_none() {
                        return finish(out, params, caps);
                    }
                    return Err(Error::Params(format!(
                        "parameter list too short: no weight index after {prev} with m > m_{prev}·{t}²"
                    )));
                }
                if growth_ok(params, prev, t, next)? {
                    break;
                }
                next += 2;
            }
            w = next;
        }
        if cursor >= base.len() {
            if count.is_none() && !out.is_empty() {
                break;
            }
            return Err(Error::Exhausted(format!("base blocks run out after {} RIS vectors", out.len())));
        }
        let m = params.m(w as usize)?;
        let mut scc = make_scc(&base[cursor..], &inv_cube(m), params.level(w as usize)?, caps)?;
        scc.start += cursor;
        scc.end += cursor;
        let x = scc.combine(base);
        let (upper, _) = upper_bound(&x, params, caps)?;
        if !le(upper, c) {
            return Err(pre(format!("C = {c} is below the upper bound {upper} of RIS vector {}", out.len())));
        }
        cursor = scc.end + 1;
        out.sccs.push(scc);
        out.blocks.push(x);
        out.weights.push(w);
    }
    finish(out, params, caps)
}

fn finish(mut out: RisWitness, params: &ParameterSystem, caps: &Caps) -> Result<RisWitness> {
    if out.is_empty() {
        return Err(Error::Exhausted("no RIS vector could be built".into()));
    }
    for x in &out.blocks {
        if !le(1.0, lower_bound(x, params, caps)?.value) {
            out.seminormalized = false;
        }
    }
    out.verify(params, caps)?;
    Ok(out)
}

/// `x = m_{2j} Σ_{k∈E} b_k x_k` over a RIS, `E` the block range `start..=end`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactVectorWitness {
    /// Weight index `2j`.
    pub weight: u32,
    pub scc: Scc,
    pub vector: RealVector,
}

impl ExactVectorWitness {
    pub fn half(&self) -> u32 {
        self.weight / 2
    }

    pub fn range(&self) -> std::ops::RangeInclusive<usize> {
        self.scc.start..=self.scc.end
    }

    pub fn verify(&self, params: &ParameterSystem, ris: &RisWitness, caps: &Caps) -> Result<()> {
        let w = self.weight;
        if !w.is_multiple_of(2) || w == 0 || w as usize >= params.levels() {
            return Err(fail(format!("scaling index {w} is not an even index in the list")));
        }
        if self.scc.end >= ris.len() {
            return Err(fail("exact vector refers to missing RIS blocks"));
        }
        if self.half() >= ris.half(self.scc.start) {
            return Err(fail(format!(
                "j = {} is not below j_min E = {}",
                self.half(),
                ris.half(self.scc.start)
            )));
        }
        let m = params.m(w as usize)?;
        let wit = &self.scc.witness;
        if wit.eps != inv_cube(m) || wit.n != params.level(w as usize)? || wit.p != 2 {
            return Err(fail("coefficients are not a (1/m³, n) scc for the scaling index"));
        }
        if wit
            .anchors
            .iter()
            .zip(&ris.blocks[self.scc.start..=self.scc.end])
            .any(|(t, y)| y.max_supp() != Some(*t))
            || wit.anchors.len() != self.scc.end - self.scc.start + 1
        {
            return Err(fail("anchors are not the RIS maxima"));
        }
        if !wit.verify(caps)? {
            return Err(fail("coefficients fail the scc conditions"));
        }
        let expect = self.scc.combine(&ris.blocks).scale(m as f64);
        if expect.support() != self.vector.support()
            || expect
                .coeffs()
                .iter()
                .any(|&(n, v)| !crate::norm::close(v, self.vector.get(n)))
        {
            return Err(fail("vector differs from m_{2j} Σ b_k x_k"));
        }
        Ok(())
    }
}

/// Exact vector of weight index `weight` over the RIS blocks from `from` on.
pub fn build_exact(
    params: &ParameterSystem,
    ris: &RisWitness,
    weight: u32,
    from: usize,
    caps: &Caps,
) -> Result<ExactVectorWitness> {
    if !weight.is_multiple_of(2) || weight == 0 || weight as usize >= params.levels() {
        return Err(pre(format!("scaling index {weight} is not an even index in the list")));
    }
    let j = weight / 2;
    let start = (from..ris.len())
        .find(|&s| ris.half(s) > j)
        .ok_or_else(|| Error::Exhausted(format!("no RIS block after {from} has j > {j}")))?;
    let m = params.m(weight as usize)?;
    let mut scc = make_scc(&ris.blocks[start..], &inv_cube(m), params.level(weight as usize)?, caps)?;
    scc.start += start;
    scc.end += start;
    if ris.half(scc.start) <= j {
        return Err(fail("scc starts below the scaling index"));
    }
    let vector = scc.combine(&ris.blocks).scale(m as f64);
    let out = ExactVectorWitness { weight, scc, vector };
    out.verify(params, ris, caps)?;
    Ok(out)
}

/// A `(C, (2j_k))` exact sequence with respect to a seminormalized RIS.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactSequence {
    pub ris: RisWitness,
    pub vectors: Vec<ExactVectorWitness>,
}

impl ExactSequence {
    pub fn verify(&self, params: &ParameterSystem, caps: &Caps) -> Result<()> {
        check_exact_sequence(params, &self.ris, &self.vectors, caps)
    }

    pub fn weights(&self) -> Vec<u32> {
        self.vectors.iter().map(|e| e.weight).collect()
    }
}

/// Exact sequence conditions: every `x_k` exact over the RIS `(y_s)`,
/// `minsupp x_k ≤ minsupp y_s ⇒ j_k < i_s` and `maxsupp y_s < minsupp x_k ⇒ j_k > i_s`.
pub fn check_exact_sequence(
    params: &ParameterSystem,
    ris: &RisWitness,
    exact: &[ExactVectorWitness],
    caps: &Caps,
) -> Result<()> {
    ris.verify(params, caps)?;
    if !ris.seminormalized {
        return Err(fail("the underlying RIS is not seminormalized"));
    }
    for e in exact {
        e.verify(params, ris, caps)?;
    }
    let zs: Vec<RealVector> = exact.iter().map(|e| e.vector.clone()).collect();
    check_successive(&zs).map_err(|e| fail(format!("exact vectors: {e}")))?;
    for (k, z) in zs.iter().enumerate() {
        let lo = z.min_supp().unwrap();
        let jk = exact[k].half();
        for (s, y) in ris.blocks.iter().enumerate() {
            let is = ris.half(s);
            if lo <= y.min_supp().unwrap() && jk >= is {
                return Err(fail(format!("minsupp x_{} ≤ minsupp y_{} but j_k = {jk} ≥ i_s = {is}", k + 1, s + 1)));
            }
            if y.max_supp().unwrap() < lo && jk <= is {
                return Err(fail(format!("maxsupp y_{} < minsupp x_{} but j_k = {jk} ≤ i_s = {is}", s + 1, k + 1)));
            }
        }
    }
    Ok(())
}

/// Exact vectors of the given weight indices over consecutive parts of the RIS.
pub fn build_exact_sequence(
    params: &ParameterSystem,
    ris: &RisWitness,
    weights: &[u32],
    caps: &Caps,
) -> Result<ExactSequence> {
    let mut from = 0;
    let mut vectors = Vec::with_capacity(weights.len());
    for &w in weights {
        let e = build_exact(params, ris, w, from, caps)?;
        from = e.scc.end + 1;
        vectors.push(e);
    }
    let out = ExactSequence {
        ris: ris.clone(),
        vectors,
    };
    out.verify(params, caps)?;
    Ok(out)
}

/// A `(0, C, 2j+1)` dependent sequence with its σ-special sequence and the
/// paired functionals `g_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependentWitness {
    pub ris: RisWitness,
    pub exact: Vec<ExactVectorWitness>,
    pub special: SpecialSequence,
    pub target_j: u32,
    pub g: Vec<Functional>,
    /// `(1/m_{2j+1}) Σ b_i g_i`.
    pub functional: Functional,
    /// Squares of the scalars `b_i` used in `functional`.
    #[serde(with = "crate::rational::serde_q_vec")]
    pub b_squares: Vec<Q>,
}

impl DependentWitness {
    pub fn vectors(&self) -> Vec<RealVector> {
        self.exact.iter().map(|e| e.vector.clone()).collect()
    }

    /// `(1/m_{2j_k}) z_k` as a RIS over the original RIS blocks.
    pub fn scaled_ris(&self, params: &ParameterSystem) -> Result<RisWitness> {
        let mut blocks = Vec::with_capacity(self.exact.len());
        for e in &self.exact {
            blocks.push(e.vector.scale(1.0 / params.m(e.weight as usize)? as f64));
        }
        Ok(RisWitness {
            base: self.ris.blocks.clone(),
            sccs: self.exact.iter().map(|e| e.scc.clone()).collect(),
            blocks,
            c: self.ris.c,
            weights: self.exact.iter().map(|e| e.weight).collect(),
            seminormalized: false,
        })
    }

    pub fn verify(&self, params: &ParameterSystem, reg: &SigmaRegistry, caps: &Caps) -> Result<()> {
        let j = self.target_j;
        let d = self.exact.len();
        if d == 0 || self.special.len() != d || self.g.len() != d || self.b_squares.len() != d {
            return Err(fail("dependent sequence parts differ in length"));
        }
        check_exact_sequence(params, &self.ris, &self.exact, caps)?;
        for (i, e) in self.exact.iter().enumerate() {
            if e.half() != self.special.pairs[i].1 {
                return Err(fail(format!("z_{} has weight {} but 2j_{} = {}", i + 1, e.weight, i + 1, 2 * self.special.pairs[i].1)));
            }
        }
        let zs = self.vectors();
        for (k, z) in zs.iter().enumerate() {
            let hi = z.max_supp().unwrap();
            let e = &self.special.pairs[k].0;
            if e.max_elem().is_none_or(|m| hi >= m) {
                return Err(fail(format!("maxsupp z_{} is not below maxsupp E_{}", k + 1, k + 1)));
            }
        }
        let j1 = self.special.pairs[0].1;
        if !(j + 1 < j1 && params.split.in_n1(j1)) {
            return Err(fail(format!("j_1 = {j1} does not satisfy j + 1 < j_1 ∈ N1")));
        }
        reg.check_special(params, &self.special).map_err(fail)?;
        let all: Vec<u32> = zs.iter().flat_map(|z| z.coeffs().iter().map(|c| c.0)).collect();
        for (i, (e, _)) in self.special.pairs.iter().enumerate() {
            if all.iter().any(|&n| e.contains(n)) {
                return Err(fail(format!("E_{} meets the dependent vectors", i + 1)));
            }
        }
        for (i, g) in self.g.iter().enumerate() {
            let (e, ji) = &self.special.pairs[i];
            if g.weight_index() != Some(2 * ji) || !g.support().is_subset(e) {
                return Err(fail(format!("g_{} is not an even functional of weight 2j_{} on E_{}", i + 1, i + 1, i + 1)));
            }
        }
        self.functional.validate(params, reg).map_err(Error::from)?;
        self.scaled_ris(params)?
            .verify(params, caps)
            .map_err(|e| fail(format!("scaled sequence is not a RIS: {e}")))?;
        Ok(())
    }
}

/// Builds a `(0, C, 2j+1)` dependent sequence from a seminormalized RIS.
///
/// `fns[n]` is the functional paired with `ris.blocks[n]`; its support must
/// avoid that block. With `len = None` pieces are added until `{min E_i}` is a
/// maximal member of `S_{n_{2j+1}}`.
pub fn build_dependent(
    params: &ParameterSystem,
    reg: &mut SigmaRegistry,
    ris: &RisWitness,
    j: u32,
    fns: &[Functional],
    len: Option<usize>,
    caps: &Caps,
) -> Result<DependentWitness> {
    if fns.len() != ris.len() {
        return Err(pre(format!("{} functionals for {} RIS vectors", fns.len(), ris.len())));
    }
    for (n, (f, x)) in fns.iter().zip(&ris.blocks).enumerate() {
        if !f.support().is_disjoint(&x.support()) {
            return Err(pre(format!("supp f_{n} meets supp x_{n}")));
        }
    }
    if !ris.seminormalized {
        return Err(pre("the RIS is not seminormalized"));
    }
    let odd = 2 * j as usize + 1;
    let level = params.level(odd)?;
    let mut j_next = (j + 2..)
        .take_while(|&k| (2 * k as usize) < params.levels())
        .find(|&k| params.split.in_n1(k))
        .ok_or_else(|| Error::Params(format!("no j_1 ∈ N1 above {} in the list", j + 1)))?;

    let mut special = SpecialSequence::new(Vec::new());
    let mut exact: Vec<ExactVectorWitness> = Vec::new();
    let mut g = Vec::new();
    let mut from = 0;
    loop {
        let weight = 2 * j_next;
        let z = build_exact(params, ris, weight, from, caps)?;
        let m = params.m(weight as usize)?;
        let children: Vec<(Scalar, Functional)> = z
            .range()
            .zip(&z.scc.witness.powers)
            .map(|(n, a2)| (Scalar::exact(1, a2.clone()), fns[n].clone()))
            .collect();
        let gi = Functional::node(params, weight, children, None)?;
        gi.validate(params, reg)
            .map_err(|e| fail(format!("g_{} is not in the norming set: {e}", exact.len() + 1)))?;
        debug_assert_eq!(gi.weight(), Some(m));
        let top = z.vector.max_supp().unwrap();
        let e = gi.support().with(top + 1);
        from = z.scc.end + 1;
        special.pairs.push((e, j_next));
        exact.push(z);
        g.push(gi);
        let mins = minima(special.pairs.iter().map(|(e, _)| e));
        let member = crate::schreier::is_member(&mins, level, crate::schreier::Variant::Standard);
        if !member {
            return Err(fail(format!("{{min E_i}} = {mins} left S_{level}")));
        }
        let done = match len {
            Some(k) => exact.len() >= k,
            None => crate::schreier::is_maximal(&mins, level)?,
        };
        if done {
            break;
        }
        j_next = reg.sigma_assign(params, &special.pairs)?;
    }
    special.target_j = Some(j);

    let mins: Vec<u32> = special.pairs.iter().map(|(e, _)| e.min_elem().unwrap()).collect();
    let b_squares = if crate::schreier::is_maximal(&FiniteSet::new(mins.clone())?, level)? {
        repeated_average(level, &mins)?.coeffs().iter().map(|(_, v)| v.clone()).collect()
    } else {
        vec![Q::new(1.into(), (mins.len() as u64).into()); mins.len()]
    };
    let functional = Functional::node(
        params,
        odd as u32,
        b_squares
            .iter()
            .zip(&g)
            .map(|(b, gi)| (Scalar::exact(1, b.clone()), gi.clone()))
            .collect(),
        Some(special.clone()),
    )?;
    let out = DependentWitness {
        ris: ris.clone(),
        exact,
        special,
        target_j: j,
        g,
        functional,
        b_squares,
    };
    out.verify(params, reg, caps)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub j: u32,
    pub d: usize,
    #[serde(rename = "C")]
    pub c: f64,
    /// Upper bound for `‖Σ b_k z_k‖`.
    pub upper: f64,
    pub upper_method: UpperMethod,
    /// `f(Σ b_k u_k)` for the special functional `f` and vectors `u_k` supported in `E_k`.
    pub lower: f64,
    /// Upper bound for `‖Σ b_k (z_k + u_k)‖`, the vector `lower` is a lower bound for.
    pub upper_combined: f64,
    pub theta: f64,
    /// `lower · m_{2j+1} / upper`.
    pub ratio: f64,
    /// `C / m²_{2j+1}`.
    pub bound: f64,
    pub bound_holds: bool,
    /// `lower ≤ upper`, reported only.
    pub cross_holds: bool,
    pub witness: DependentWitness,
}

/// Toy parameters for which [`gap_demo`] at level `j` needs one piece.
///
/// `m_w = 2^⌈w/2⌉` (at least 2); `n_w = 0` at the odd target, at the first
/// admissible `j_1` and at the RIS weight, and 1 elsewhere.
pub fn gap_toy_params(j: u32) -> Result<ParameterSystem> {
    let split = Split::default();
    let j1 = (j + 2..).find(|&k| split.in_n1(k)).unwrap();
    let levels = 2 * (j1 + 1) as usize + 1;
    let m = (0..levels).map(|w| 1u128 << (w as u32).div_ceil(2).max(1)).collect();
    let n = (0..levels)
        .map(|w| u64::from(!(w == 2 * j as usize + 1 || w == 2 * j1 as usize || w == 2 * (j1 + 1) as usize)))
        .collect();
    ParameterSystem::toy(m, n, split)
}

/// Dependent sequence at odd level `2j+1` built from unit vectors, the scc
/// over it, and the two sides of the basic evaluation.
///
/// RIS blocks are `e_{3k+2}`, paired with `e*_{3k+1}`; the image vectors
/// `u_k = m_{2j_k} Σ a_{k,n} e_{3n+1}` are supported in `E_k`. `scale` bounds
/// the total support of every vector handed to the norm engine.
pub fn gap_demo(
    params: &ParameterSystem,
    reg: &mut SigmaRegistry,
    j: u32,
    scale: usize,
    caps: &Caps,
) -> Result<GapReport> {
    let count = scale.clamp(1, caps.dp_support);
    let base: Vec<RealVector> = (0..count as u32).map(|k| RealVector::unit(3 * k + 2)).collect();
    let j1 = (j + 2..)
        .find(|&k| params.split.in_n1(k))
        .ok_or_else(|| Error::Params("no j_1".into()))?;
    let c = 2.0;
    let ris = build_ris(params, &base, c, 2 * (j1 + 1), None, caps)?;
    let fns: Vec<Functional> = ris
        .blocks
        .iter()
        .map(|x| Functional::leaf(1, x.min_supp().unwrap() - 1))
        .collect();
    let dep = build_dependent(params, reg, &ris, j, &fns, None, caps)?;
    let d = dep.exact.len();
    let odd = 2 * j as usize + 1;
    let powers: Vec<(u32, Q)> = dep
        .exact
        .iter()
        .zip(&dep.b_squares)
        .map(|(e, b)| (e.vector.max_supp().unwrap(), b.clone()))
        .collect();
    let eps = Q::one() / q_u128(params.m(odd + 1)?.pow(2));
    if !is_bscc_powers(&powers, 2, &eps, params.level(odd)?, caps)? {
        return Err(fail("Σ b_k z_k is not a (1/m²_{2j+2}, n_{2j+1}) scc"));
    }
    let b: Vec<f64> = dep.b_squares.iter().map(crate::rational::sqrt_f64).collect();
    let combo = RealVector::sum(
        dep.exact
            .iter()
            .zip(&b)
            .map(|(e, bk)| e.vector.scale(*bk))
            .collect::<Vec<_>>()
            .iter(),
    );
    let mut images = Vec::with_capacity(d);
    for (e, bk) in dep.exact.iter().zip(&b) {
        let m = params.m(e.weight as usize)? as f64;
        let coeffs = e.scc.witness.coefficients();
        let u = RealVector::new(
            e.range()
                .zip(coeffs)
                .map(|(n, a)| (fns[n].support().min_elem().unwrap(), m * a * bk)),
        );
        images.push(u);
    }
    let image = RealVector::sum(images.iter());
    let both = combo.add(&image);
    if both.len() > scale {
        return Err(Error::Cap(format!("demo vector has support {} > scale {scale}", both.len())));
    }
    let (upper, upper_method) = upper_bound(&combo, params, caps)?;
    let (upper_combined, _) = upper_bound(&both, params, caps)?;
    let lower = dep.functional.evaluate(&image);
    if (dep.functional.evaluate(&both) - lower).abs() > 1e-12 {
        return Err(fail("special functional sees the dependent vectors"));
    }
    if !le(lower, upper_combined) {
        return Err(fail(format!("sandwich fails: lower {lower} > upper {upper_combined}")));
    }
    let m_odd = params.m(odd)? as f64;
    let bound = c / (m_odd * m_odd);
    Ok(GapReport {
        j,
        d,
        c,
        upper,
        upper_method,
        lower,
        upper_combined,
        theta: lower * m_odd,
        ratio: lower * m_odd / upper,
        bound,
        bound_holds: le(upper, bound),
        cross_holds: le(lower, upper),
        witness: dep,
    })
}

/// Outcome of the single-term case under strict parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrictSingleTerm {
    pub j: u32,
    pub n_odd: u64,
    /// Whether one-term sums can be `(1/m²_{2j+2}, n_{2j+1})`-scc's at all.
    pub hypothesis_satisfiable: bool,
    pub reason: String,
}

/// With one term the scc condition of order 0 reads `b_1² = 1 < 1/m⁴_{2j+2}`,
/// which fails whenever `n_{2j+1} ≥ 1`; the bound then holds vacuously.
pub fn strict_single_term(j: u32) -> Result<StrictSingleTerm> {
    let params = ParameterSystem::strict(6, Split::default())?;
    let odd = 2 * j as usize + 1;
    let n_odd = params.n(odd)?;
    let eps = Q::one() / q_u128(params.m(odd + 1)?.pow(2));
    let sat = is_bscc_powers(&[(u32::MAX, Q::one())], 2, &eps, params.level(odd)?, &Caps::default())?;
    Ok(StrictSingleTerm {
        j,
        n_odd,
        hypothesis_satisfiable: sat,
        reason: if sat {
            "single-term scc admissible".into()
        } else {
            format!("b_1 = 1 violates the order-0 condition 1 < {eps}² for n = {n_odd}")
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_ris_params() -> ParameterSystem {
        // n = 0 at every even index, weights growing fast enough for condition (3)
        let m: Vec<u128> = (0..12).map(|w| if w < 2 { 2 } else { 1u128 << (4 * w) }).collect();
        let n: Vec<u64> = (0..12).map(|w| u64::from(w % 2 == 1)).collect();
        ParameterSystem::toy(m, n, Split::default()).unwrap()
    }

    #[test]
    fn seminormalized_scc() {
        let p = ParameterSystem::toy(vec![2, 2, 2, 3], vec![1, 1, 1, 1], Split::default()).unwrap();
        let caps = Caps::default();
        let blocks = [RealVector::unit(2), RealVector::unit(3)];
        let s = build_seminormalized_scc(&p, &blocks, &Q::one(), 1, &caps).unwrap();
        assert!(s.lower >= 0.5);
        assert_eq!(s.vector.len(), 2);
        let one = build_seminormalized_scc(&p, &[RealVector::unit(5)], &Q::one(), 0, &caps).unwrap();
        assert_eq!(one.vector, RealVector::unit(5));
        assert_eq!(one.lower, 1.0);
        assert!(build_seminormalized_scc(&p, &[], &Q::one(), 0, &caps).is_err());
    }

    #[test]
    fn ris_from_singletons() {
        let p = toy_ris_params();
        let caps = Caps::default();
        let base: Vec<RealVector> = [2, 5, 8].iter().map(|&k| RealVector::unit(k)).collect();
        let ris = build_ris(&p, &base, 1.0, 2, Some(2), &caps).unwrap();
        assert_eq!(ris.len(), 2);
        assert!(ris.seminormalized);
        let back: RisWitness = serde_json::from_str(&serde_json::to_string(&ris).unwrap()).unwrap();
        back.verify(&p, &caps).unwrap();
        let mut bad = ris.clone();
        bad.weights[1] = bad.weights[0];
        assert!(bad.verify(&p, &caps).is_err());
        assert!(build_ris(&p, &base, 0.5, 2, Some(1), &caps).is_err());
    }

    #[test]
    fn gap_demo_smallest() {
        let p = gap_toy_params(1).unwrap();
        let mut reg = SigmaRegistry::new();
        let r = gap_demo(&p, &mut reg, 1, 8, &Caps::default()).unwrap();
        assert_eq!(r.d, 1);
        assert!(r.lower <= r.upper_combined);
        let strict = strict_single_term(1).unwrap();
        assert!(!strict.hypothesis_satisfiable);
    }
}
