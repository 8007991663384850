//! Instance checkers for the basic estimates and the counting identity.
//!
//! Each kind has a hypothesis predicate; [`check_estimate`] refuses instances
//! whose hypotheses fail and otherwise compares the evaluated left side with
//! the stated bound. Norm hypotheses `‖x‖ ≤ C` are certified through upper
//! bounds, so an accepted instance satisfies them for the true norm.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::averages::is_bscc_powers;
use crate::caps::Caps;
use crate::constructions::{DependentWitness, ExactSequence};
use crate::error::{Error, Result};
use crate::functionals::Functional;
use crate::gen::{self, Rand};
use crate::norm::{close, le, upper_bound};
use crate::params::{ParameterSystem, ParamsConfig, SigmaRegistry, Split};
use crate::rational::{self, q_u128, serde_q_vec, Q};
use crate::schreier::{check_family, FamilyMode, FiniteSet, SetFamily};
use crate::vector::RealVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Kind {
    /// Disjoint functionals starting outside the ranges of bounded blocks.
    #[serde(rename = "MFE")]
    Mfe,
    /// Allowable functionals against a special convex combination.
    #[serde(rename = "SAE")]
    Sae,
    /// Functionals small on rapidly increasing blocks.
    #[serde(rename = "RISE")]
    Rise,
    /// Whole-sum version of SAE with constant `5C`.
    #[serde(rename = "L7_2")]
    L72,
    /// Blocks that are themselves scc's of increasing weight.
    #[serde(rename = "L7_3")]
    L73,
    /// Exact sequences against light functionals.
    #[serde(rename = "P7_4")]
    P74,
    /// Exact sequences against functionals avoiding the matching weight.
    #[serde(rename = "P7_8")]
    P78,
    /// One functional against a dependent sequence.
    #[serde(rename = "P7_10")]
    P710,
    /// Norm of the scc over a dependent sequence.
    #[serde(rename = "PNORM")]
    Pnorm,
}

impl Kind {
    pub const ALL: [Kind; 9] = [
        Kind::Mfe,
        Kind::Sae,
        Kind::Rise,
        Kind::L72,
        Kind::L73,
        Kind::P74,
        Kind::P78,
        Kind::P710,
        Kind::Pnorm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Mfe => "MFE",
            Kind::Sae => "SAE",
            Kind::Rise => "RISE",
            Kind::L72 => "L7_2",
            Kind::L73 => "L7_3",
            Kind::P74 => "P7_4",
            Kind::P78 => "P7_8",
            Kind::P710 => "P7_10",
            Kind::Pnorm => "PNORM",
        }
    }

    /// Kinds whose estimate depends on the growth conditions of the parameters.
    pub fn needs_growth(self) -> bool {
        matches!(self, Kind::L73 | Kind::P74 | Kind::P78 | Kind::P710 | Kind::Pnorm)
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Kind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Precondition(format!("unknown estimate kind {s}")))
    }
}

/// A block `x_k = Σ_i b_{k,i} x_{k,i}` with its inner blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnerScc {
    pub blocks: Vec<RealVector>,
    #[serde(with = "serde_q_vec")]
    pub b_squares: Vec<Q>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateInstance {
    pub kind: Kind,
    #[serde(default)]
    pub functionals: Vec<Functional>,
    /// `λ_ℓ`; empty means all ones.
    #[serde(default)]
    pub lambdas: Vec<f64>,
    #[serde(default)]
    pub vectors: Vec<RealVector>,
    /// `b_k` (the `c_k` of the RIS estimate).
    #[serde(default)]
    pub b: Vec<f64>,
    /// Exact `b_k²` when an scc condition on `Σ b_k x_k` is part of the hypothesis.
    #[serde(default, with = "serde_q_vec")]
    pub b_squares: Vec<Q>,
    #[serde(rename = "C")]
    pub c: f64,
    /// `j_0` (SAE), `j` (L7_2) or the odd level `j` (P7_10, PNORM).
    #[serde(default)]
    pub j: Option<u32>,
    /// Allowability: `S_q` (SAE, L7_2) or `S_{n_q}` (L7_3, P7_4, P7_8).
    #[serde(default)]
    pub q: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<String>,
    /// Weight indices `2j_k` (RISE: `k = 1..d+1`; L7_3: one per vector).
    #[serde(default)]
    pub weights: Vec<u32>,
    #[serde(default)]
    pub inner: Vec<InnerScc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<ExactSequence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dependent: Option<DependentWitness>,
}

impl EstimateInstance {
    pub fn new(kind: Kind, c: f64) -> Self {
        EstimateInstance {
            kind,
            functionals: Vec::new(),
            lambdas: Vec::new(),
            vectors: Vec::new(),
            b: Vec::new(),
            b_squares: Vec::new(),
            c,
            j: None,
            q: None,
            eps: None,
            weights: Vec::new(),
            inner: Vec::new(),
            exact: None,
            dependent: None,
        }
    }

    fn lambda(&self, l: usize) -> f64 {
        self.lambdas.get(l).copied().unwrap_or(1.0)
    }

    fn combination(&self, keep: impl Fn(usize) -> bool) -> RealVector {
        let parts: Vec<RealVector> = self
            .vectors
            .iter()
            .zip(&self.b)
            .enumerate()
            .filter(|(k, _)| keep(*k))
            .map(|(_, (x, b))| x.scale(*b))
            .collect();
        RealVector::sum(parts.iter())
    }

    fn apply(&self, y: &RealVector) -> f64 {
        self.functionals
            .iter()
            .enumerate()
            .map(|(l, f)| self.lambda(l) * f.evaluate(y))
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    /// The upper bound used for the left side exceeds the bound (PNORM only).
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub kind: Kind,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    pub verdict: Verdict,
    pub margin: f64,
}

/// Self-contained reproduction data for one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bundle {
    pub params: ParamsConfig,
    pub registry: SigmaRegistry,
    pub instance: EstimateInstance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<EstimateReport>,
}

impl Bundle {
    pub fn check(&self, caps: &Caps) -> Result<EstimateReport> {
        let params = ParameterSystem::build(&self.params)?;
        let reg = SigmaRegistry::from_json(&self.registry.to_json()?, &params)?;
        check_estimate(&self.instance, &params, &reg, caps)
    }
}

fn hyp(msg: impl Into<String>) -> Error {
    Error::Hypothesis(msg.into())
}

fn need<T: Copy>(v: Option<T>, what: &str) -> Result<T> {
    v.ok_or_else(|| hyp(format!("{what} is required")))
}

fn m_of(params: &ParameterSystem, w: u32) -> Result<f64> {
    Ok(params.m(w as usize)? as f64)
}

fn eps_of(inst: &EstimateInstance) -> Result<Q> {
    let s = inst.eps.as_deref().ok_or_else(|| hyp("eps is required"))?;
    rational::parse(s).map_err(|e| hyp(format!("eps: {e}")))
}

fn valid_functionals(fs: &[Functional], params: &ParameterSystem, reg: &SigmaRegistry) -> Result<()> {
    for (l, f) in fs.iter().enumerate() {
        f.validate(params, reg)
            .map_err(|e| hyp(format!("f_{} is not in the norming set ({e})", l + 1)))?;
    }
    Ok(())
}

fn disjoint(fs: &[Functional]) -> Result<()> {
    let supports: Vec<FiniteSet> = fs.iter().map(Functional::support).collect();
    for i in 0..supports.len() {
        for j in i + 1..supports.len() {
            if !supports[i].is_disjoint(&supports[j]) {
                return Err(hyp(format!("f_{} and f_{} are not disjoint", i + 1, j + 1)));
            }
        }
    }
    Ok(())
}

fn allowable(fs: &[Functional], level: u32) -> Result<()> {
    let fam = SetFamily {
        members: fs.iter().map(Functional::support).collect(),
        mode: FamilyMode::Allowable,
    };
    check_family(&fam, level).map_err(|e| hyp(format!("functionals are not S_{level} allowable: {e}")))
}

fn in_ball(v: &[f64], what: &str) -> Result<()> {
    let s: f64 = v.iter().map(|x| x * x).sum();
    if s > 1.0 + 1e-12 {
        return Err(hyp(format!("({what}) is not in the unit ball of ℓ2 (Σ² = {s})")));
    }
    Ok(())
}

fn block_sequence(xs: &[RealVector]) -> Result<()> {
    if xs.iter().any(RealVector::is_empty) {
        return Err(hyp("a vector is zero"));
    }
    for (k, w) in xs.windows(2).enumerate() {
        if w[0].max_supp() >= w[1].min_supp() {
            return Err(hyp(format!("x_{} and x_{} are not successive", k + 1, k + 2)));
        }
    }
    Ok(())
}

fn norms_at_most(xs: &[RealVector], c: f64, params: &ParameterSystem, caps: &Caps) -> Result<()> {
    for (k, x) in xs.iter().enumerate() {
        let (u, _) = upper_bound(x, params, caps)?;
        if !le(u, c) {
            return Err(hyp(format!("‖x_{}‖ ≤ C not certified (upper bound {u} > {c})", k + 1)));
        }
    }
    Ok(())
}

fn ranges(xs: &[RealVector]) -> Vec<(u32, u32)> {
    xs.iter().map(|x| (x.min_supp().unwrap(), x.max_supp().unwrap())).collect()
}

/// `Σ b_k x_k` is an `(eps, n)`-scc: `b` matches `b_squares` and the exact
/// squares form a `(2, eps, n)`-bscc on the anchors `maxsupp x_k`.
fn scc_condition(
    xs: &[RealVector],
    b: &[f64],
    b_squares: &[Q],
    eps: &Q,
    n: u32,
    caps: &Caps,
) -> Result<()> {
    if b.len() != xs.len() || b_squares.len() != xs.len() {
        return Err(hyp("coefficients and vectors differ in length"));
    }
    for (k, (v, s)) in b.iter().zip(b_squares).enumerate() {
        if *v < 0.0 || !close(*v, rational::sqrt_f64(s)) {
            return Err(hyp(format!("b_{} does not match its exact square", k + 1)));
        }
    }
    let powers: Vec<(u32, Q)> = xs
        .iter()
        .map(|x| x.max_supp().unwrap())
        .zip(b_squares.iter().cloned())
        .collect();
    if !is_bscc_powers(&powers, 2, eps, n, caps)? {
        return Err(hyp(format!("Σ b_k x_k is not a ({}, {n})-scc", rational::format(eps))));
    }
    Ok(())
}

fn min_weight(fs: &[Functional]) -> Result<f64> {
    fs.iter()
        .map(|f| f.weight().map(|m| m as f64).ok_or_else(|| hyp("every f_ℓ must have a weight (no ±e_n*)")))
        .try_fold(f64::INFINITY, |acc, w| w.map(|w| acc.min(w)))
}

fn growth(params: &ParameterSystem, kind: Kind) -> Result<()> {
    if let Some(v) = params.violations.first() {
        return Err(hyp(format!("{kind} relies on the growth conditions; the parameters violate {v}")));
    }
    Ok(())
}

/// `j_1 = j` for even `j`, `j + 1` for odd `j`.
fn even_up(j: u32) -> u32 {
    j + j % 2
}

/// Coefficient of `e_n` in `f`.
fn coefficient_at(f: &Functional, n: u32) -> f64 {
    f.evaluate(&RealVector::unit(n))
}

/// Checks the hypotheses of `inst.kind` and evaluates both sides.
pub fn check_estimate(
    inst: &EstimateInstance,
    params: &ParameterSystem,
    reg: &SigmaRegistry,
    caps: &Caps,
) -> Result<EstimateReport> {
    let xs = &inst.vectors;
    let fs = &inst.functionals;
    if inst.kind.needs_growth() {
        growth(params, inst.kind)?;
    }
    if !inst.lambdas.is_empty() && inst.lambdas.len() != fs.len() {
        return Err(hyp("one λ per functional is required"));
    }
    if inst.b.len() != xs.len() {
        return Err(hyp("one coefficient per vector is required"));
    }
    valid_functionals(fs, params, reg)?;
    block_sequence(xs)?;
    let c = inst.c;
    let (lhs, rhs) = match inst.kind {
        Kind::Mfe => {
            disjoint(fs)?;
            in_ball(&inst.lambdas, "λ_ℓ")?;
            norms_at_most(xs, c, params, caps)?;
            let ran = ranges(xs);
            for (l, f) in fs.iter().enumerate() {
                let m = f.support().min_elem().ok_or_else(|| hyp("empty functional"))?;
                if let Some(k) = ran.iter().position(|&(lo, hi)| lo <= m && m <= hi) {
                    return Err(hyp(format!("minsupp f_{} lies in ran x_{}", l + 1, k + 1)));
                }
            }
            if params.m(2)? != 2 || params.n(2)? < 1 || params.m(1)? != 2 {
                return Err(hyp("the ℓ2 estimates need m_1 = m_2 = 2 and n_2 ≥ 1"));
            }
            let b2: f64 = inst.b.iter().map(|v| v * v).sum();
            (inst.apply(&inst.combination(|_| true)), 4.0 * c * b2.sqrt())
        }
        Kind::Sae | Kind::L72 => {
            let j0 = need(inst.j, "j")?;
            let q = need(inst.q, "q")?;
            let j1 = even_up(j0);
            let n_j0 = params.n(j0 as usize)?;
            let n_j1 = params.n(j1 as usize)?;
            if n_j0 <= q as u64 {
                return Err(hyp(format!("n_{j0} = {n_j0} is not above q = {q}")));
            }
            if n_j1 < q as u64 {
                return Err(hyp(format!("S_{q} is not contained in S_{{n_{j1}}} (n_{j1} = {n_j1})")));
            }
            allowable(fs, q)?;
            in_ball(&inst.lambdas, "λ_ℓ")?;
            norms_at_most(xs, c, params, caps)?;
            let eps = eps_of(inst)?;
            let m1 = q_u128(params.m(j1 as usize)?);
            if eps > Q::one() / (&m1 * &m1) {
                return Err(hyp(format!("eps = {} exceeds 1/m_{j1}²", rational::format(&eps))));
            }
            scc_condition(xs, &inst.b, &inst.b_squares, &eps, params.level(j0 as usize)?, caps)?;
            if inst.kind == Kind::Sae {
                let ran = ranges(xs);
                let mins: Vec<u32> = fs.iter().filter_map(|f| f.support().min_elem()).collect();
                let phi = |k: usize| mins.iter().any(|&m| ran[k].0 <= m && m <= ran[k].1);
                (inst.apply(&inst.combination(phi)), c / m_of(params, j0)?)
            } else {
                if c < 1.0 {
                    return Err(hyp("C ≥ 1 is required"));
                }
                (inst.apply(&inst.combination(|_| true)), 5.0 * c)
            }
        }
        Kind::Rise => {
            let d = xs.len();
            if inst.weights.len() != d + 1 {
                return Err(hyp("RISE needs d + 1 weight indices"));
            }
            let ms: Vec<u128> = inst
                .weights
                .iter()
                .map(|&w| {
                    if w % 2 != 0 || w == 0 {
                        Err(hyp(format!("weight index {w} is not a positive even index")))
                    } else {
                        Ok(params.m(w as usize)?)
                    }
                })
                .collect::<Result<_>>()?;
            disjoint(fs)?;
            for (k, x) in xs.iter().enumerate() {
                let lo = x.min_supp().unwrap() as u128;
                let ok = ms[k]
                    .checked_mul(ms[k])
                    .and_then(|v| v.checked_mul(lo * lo))
                    .is_some_and(|v| v <= ms[k + 1]);
                if !ok {
                    return Err(hyp(format!("(minsupp x_{})²/m_{} ≤ 1/m_{}² fails", k + 1, inst.weights[k + 1], inst.weights[k])));
                }
                let l1: f64 = x.coeffs().iter().map(|c| c.1.abs()).sum();
                if !le(l1, (lo * lo) as f64) {
                    return Err(hyp(format!("‖x_{}‖_1 = {l1} exceeds (minsupp x_{})²", k + 1, k + 1)));
                }
                let cap = 1.0 / ms[k + 1] as f64;
                for (l, f) in fs.iter().enumerate() {
                    for &(n, _) in x.coeffs() {
                        let v = coefficient_at(f, n).abs();
                        if !le(v, cap) {
                            return Err(hyp(format!("‖f_{}|supp x_{}‖_∞ = {v} exceeds 1/m_{}", l + 1, k + 1, inst.weights[k + 1])));
                        }
                    }
                }
                let ck = inst.b[k];
                if ck < 0.0 || !le(ck, ms[k] as f64) {
                    return Err(hyp(format!("c_{} = {ck} is not in [0, m_{}]", k + 1, inst.weights[k])));
                }
            }
            let y = inst.combination(|_| true);
            (fs.iter().map(|f| f.evaluate(&y)).sum(), 2.0 / ms[0] as f64)
        }
        Kind::L73 => {
            let q = need(inst.q, "q")?;
            if c < 1.0 {
                return Err(hyp("C ≥ 1 is required"));
            }
            if inst.weights.len() != xs.len() || inst.inner.len() != xs.len() || xs.is_empty() {
                return Err(hyp("one weight index and one inner scc per vector are required"));
            }
            if inst.weights.windows(2).any(|w| w[0] > w[1]) {
                return Err(hyp("j_1 ≤ … ≤ j_d fails"));
            }
            norms_at_most(xs, c, params, caps)?;
            for (k, (x, inner)) in xs.iter().zip(&inst.inner).enumerate() {
                let w = inst.weights[k];
                block_sequence(&inner.blocks)?;
                norms_at_most(&inner.blocks, c, params, caps)?;
                let b: Vec<f64> = inner.b_squares.iter().map(rational::sqrt_f64).collect();
                let m = q_u128(params.m(w as usize)?);
                scc_condition(&inner.blocks, &b, &inner.b_squares, &(Q::one() / (&m * &m)), params.level(w as usize)?, caps)?;
                let sum = RealVector::sum(inner.blocks.iter().zip(&b).map(|(y, c)| y.scale(*c)).collect::<Vec<_>>().iter());
                if sum.support() != x.support() || x.coeffs().iter().any(|&(n, v)| !close(v, sum.get(n))) {
                    return Err(hyp(format!("x_{} differs from its inner combination", k + 1)));
                }
            }
            if q >= inst.weights[0] {
                return Err(hyp(format!("q = {q} is not below 2j_1 = {}", inst.weights[0])));
            }
            allowable(fs, params.level(q as usize)?)?;
            let mw = min_weight(fs)?;
            let m1 = params.m(inst.weights[0] as usize)?;
            if fs.iter().any(|f| f.weight().is_some_and(|w| w >= m1)) {
                return Err(hyp("ω(f_ℓ) < m_{2j_1} fails"));
            }
            in_ball(&inst.lambdas, "λ_ℓ")?;
            let b2: f64 = inst.b.iter().map(|v| v * v).sum();
            (inst.apply(&inst.combination(|_| true)), 5.0 * c / mw * b2.sqrt())
        }
        Kind::P74 | Kind::P78 => {
            let q = need(inst.q, "q")?;
            let ex = inst.exact.as_ref().ok_or_else(|| hyp("an exact sequence witness is required"))?;
            ex.verify(params, caps).map_err(|e| hyp(format!("not an exact sequence: {e}")))?;
            if !le(ex.ris.c, c) {
                return Err(hyp("the RIS constant exceeds C"));
            }
            let zs: Vec<RealVector> = ex.vectors.iter().map(|e| e.vector.clone()).collect();
            if zs != *xs {
                return Err(hyp("vectors differ from the exact sequence"));
            }
            let ws = ex.weights();
            if q >= ws[0] {
                return Err(hyp(format!("q = {q} is not below 2j_1 = {}", ws[0])));
            }
            allowable(fs, params.level(q as usize)?)?;
            let mw = min_weight(fs)?;
            for (k, x) in xs.iter().enumerate() {
                let mk = params.m(ws[k] as usize)?;
                for (l, f) in fs.iter().enumerate() {
                    if f.support().is_disjoint(&x.support()) {
                        continue;
                    }
                    let w = f.weight().unwrap();
                    if inst.kind == Kind::P74 && w >= mk {
                        return Err(hyp(format!("ω(f_{}) = {w} is not below m_{} on x_{}", l + 1, ws[k], k + 1)));
                    }
                    if inst.kind == Kind::P78 && w == mk {
                        return Err(hyp(format!("ω(f_{}) = m_{} on x_{}", l + 1, ws[k], k + 1)));
                    }
                }
            }
            in_ball(&inst.lambdas, "λ_ℓ")?;
            in_ball(&inst.b, "b_k")?;
            let factor = if inst.kind == Kind::P74 { 16.0 } else { 40.0 };
            (inst.apply(&inst.combination(|_| true)), factor * c / mw)
        }
        Kind::P710 | Kind::Pnorm => {
            let j = need(inst.j, "j")?;
            let dep = inst.dependent.as_ref().ok_or_else(|| hyp("a dependent sequence witness is required"))?;
            dep.verify(params, reg, caps).map_err(|e| hyp(format!("not a dependent sequence: {e}")))?;
            if dep.target_j != j || !le(dep.ris.c, c) || c <= 1.0 {
                return Err(hyp("witness level or constant does not match"));
            }
            if dep.vectors() != *xs {
                return Err(hyp("vectors differ from the dependent sequence"));
            }
            let odd = 2 * j as usize + 1;
            let m = q_u128(params.m(odd + 1)?);
            scc_condition(xs, &inst.b, &inst.b_squares, &(Q::one() / (&m * &m)), params.level(odd)?, caps)?;
            let m_odd = params.m(odd)?;
            let rhs = c / (m_odd as f64 * m_odd as f64);
            if inst.kind == Kind::P710 {
                if fs.len() != 1 {
                    return Err(hyp("exactly one functional f is required"));
                }
                if fs[0].weight().is_some_and(|w| w >= m_odd) {
                    return Err(hyp(format!("w(f) is not below m_{odd}")));
                }
                (fs[0].evaluate(&inst.combination(|_| true)), rhs)
            } else {
                let (u, _) = upper_bound(&inst.combination(|_| true), params, caps)?;
                (u, rhs)
            }
        }
    };
    let holds = le(lhs, rhs);
    let verdict = match (holds, inst.kind) {
        (true, _) => Verdict::Holds,
        (false, Kind::Pnorm) => Verdict::Inconclusive,
        (false, _) => Verdict::Fails,
    };
    Ok(EstimateReport {
        kind: inst.kind,
        lhs,
        rhs,
        holds,
        verdict,
        margin: rhs - lhs,
    })
}

/// Parameters used by the MFE, SAE and L7_2 generators.
pub fn basic_params() -> ParameterSystem {
    ParameterSystem::toy(vec![2, 2, 2, 4, 4, 8, 8], vec![1, 1, 1, 1, 2, 2, 3], Split::default())
        .expect("valid toy parameters")
}

/// Parameters used by the RIS estimate generator: `m_w = 2^{4w}` for `w ≥ 2`.
pub fn rise_params() -> ParameterSystem {
    let m: Vec<u128> = (0..32).map(|w| if w < 2 { 2 } else { 1u128 << (4 * w) }).collect();
    let mut n = vec![3u64; 32];
    n[0] = 1;
    ParameterSystem::toy(m, n, Split::default()).expect("valid toy parameters")
}

pub fn generator_params(kind: Kind) -> Result<ParameterSystem> {
    match kind {
        Kind::Mfe | Kind::Sae | Kind::L72 => Ok(basic_params()),
        Kind::Rise => Ok(rise_params()),
        other => Err(Error::Precondition(format!(
            "no generator for {other}: its hypotheses need parameters with the growth conditions, whose scc's exceed every support cap"
        ))),
    }
}

fn gen_mfe(rng: &mut Rand, params: &ParameterSystem, caps: &Caps) -> Result<EstimateInstance> {
    let d = rng.gen_range(1..=4);
    let start = rng.gen_range(1..=4);
    let xs = gen::blocks(rng, start, d, 3, 2);
    let top = xs.last().unwrap().max_supp().unwrap() + 3;
    let ran = ranges(&xs);
    let free: Vec<u32> = (1..=top).filter(|&n| !ran.iter().any(|&(lo, hi)| lo <= n && n <= hi)).collect();
    let p = rng.gen_range(1..=3.min(free.len()));
    let mut used: Vec<u32> = Vec::new();
    let mut fs = Vec::with_capacity(p);
    for _ in 0..p {
        let open: Vec<u32> = free.iter().copied().filter(|n| !used.contains(n)).collect();
        if open.is_empty() {
            break;
        }
        let m = open[rng.gen_range(0..open.len())];
        let mut support = vec![m];
        for n in m + 1..=top {
            if !used.contains(&n) && rng.gen_bool(0.3) {
                support.push(n);
            }
        }
        let f = gen::even_functional(rng, params, &support, 2, &[2, 4, 6]);
        used.extend(f.support().elems());
        fs.push(f);
    }
    let mut c: f64 = 1.0;
    for x in &xs {
        c = c.max(upper_bound(x, params, caps)?.0);
    }
    let mut inst = EstimateInstance::new(Kind::Mfe, c);
    inst.lambdas = gen::ball_scalars(rng, fs.len());
    inst.functionals = fs;
    inst.b = (0..d).map(|_| gen::coefficient(rng)).collect();
    inst.vectors = xs;
    Ok(inst)
}

fn gen_scc_family(rng: &mut Rand, params: &ParameterSystem, kind: Kind, caps: &Caps) -> Result<EstimateInstance> {
    // uniform ℓ2 coefficients over d ≥ 17 anchors form a (1/4, 1)-scc once the anchors are in S_1
    let j0: u32 = rng.gen_range(1..=2);
    let d = rng.gen_range(17..=24);
    let start = d as u32 + rng.gen_range(0..=5);
    let gap = rng.gen_range(0..=1);
    let xs = gen::blocks(rng, start, d, 2, gap);
    let top = xs.last().unwrap().max_supp().unwrap();
    let support: Vec<u32> = (start..=top).filter(|_| rng.gen_bool(0.4)).collect();
    let support = if support.is_empty() { vec![start] } else { support };
    let f = gen::even_functional(rng, params, &support, 2, &[2, 4, 6]);
    let mut c: f64 = 1.0;
    for x in &xs {
        c = c.max(upper_bound(x, params, caps)?.0);
    }
    let sq = Q::new(BigInt::one(), BigInt::from(d));
    let mut inst = EstimateInstance::new(kind, c);
    inst.functionals = vec![f];
    inst.lambdas = vec![if rng.gen_bool(0.5) { 1.0 } else { -1.0 } * rng.gen_range(0.5..=1.0)];
    inst.b = vec![rational::sqrt_f64(&sq); d];
    inst.b_squares = vec![sq; d];
    inst.vectors = xs;
    inst.j = Some(j0);
    inst.q = Some(0);
    inst.eps = Some("1/4".into());
    Ok(inst)
}

fn gen_rise(rng: &mut Rand, params: &ParameterSystem) -> Result<EstimateInstance> {
    let d_target = rng.gen_range(1..=3);
    let start = rng.gen_range(2..=5);
    let xs_all = gen::blocks(rng, start, d_target, 3, 2);
    let mut weights = vec![if rng.gen_bool(0.5) { 2u32 } else { 4 }];
    let mut xs = Vec::new();
    for x in xs_all {
        let k = weights.len() - 1;
        let mk = params.m(weights[k] as usize)?;
        let lo = x.min_supp().unwrap() as u128;
        let need = mk.checked_mul(mk).and_then(|v| v.checked_mul(lo * lo));
        let next = need.and_then(|need| {
            (weights[k] + 2..params.levels() as u32)
                .step_by(2)
                .find(|&w| params.m(w as usize).is_ok_and(|m| m >= need))
        });
        match next {
            Some(w) => {
                weights.push(w);
                xs.push(x);
            }
            None => break,
        }
    }
    if xs.is_empty() {
        return Err(Error::Exhausted("weights run out".into()));
    }
    let mut fs = Vec::new();
    let mut used: Vec<u32> = Vec::new();
    let top = xs.last().unwrap().max_supp().unwrap() + 2;
    for (k, x) in xs.iter().enumerate() {
        for _ in 0..rng.gen_range(0..=2) {
            let mut support: Vec<u32> = x
                .coeffs()
                .iter()
                .map(|c| c.0)
                .filter(|n| !used.contains(n) && rng.gen_bool(0.6))
                .collect();
            let outside: Vec<u32> = (1..=top)
                .filter(|n| !used.contains(n) && !xs.iter().any(|y| y.get(*n) != 0.0 || y.support().contains(*n)))
                .filter(|_| rng.gen_bool(0.2))
                .collect();
            support.extend(outside);
            support.sort_unstable();
            if support.is_empty() {
                continue;
            }
            let lo = weights[k + 1] as usize;
            let choices: Vec<usize> = (lo..params.levels()).filter(|w| w % 2 == 0).collect();
            let w = choices[rng.gen_range(0..choices.len())];
            let f = gen::even_functional(rng, params, &support, 2, &[w]);
            let f = if f.is_leaf() {
                Functional::node(params, w as u32, vec![(crate::functionals::Scalar::one(), f)], None)?
            } else {
                f
            };
            used.extend(f.support().elems());
            fs.push(f);
        }
    }
    let mut inst = EstimateInstance::new(Kind::Rise, 1.0);
    inst.b = weights[..xs.len()]
        .iter()
        .map(|&w| rng.gen_range(0.0..=1.0) * params.m(w as usize).unwrap() as f64)
        .collect();
    inst.functionals = fs;
    inst.vectors = xs;
    inst.weights = weights;
    Ok(inst)
}

/// One hypothesis-valid random instance of `kind`.
pub fn generate(rng: &mut Rand, kind: Kind, params: &ParameterSystem, caps: &Caps) -> Result<EstimateInstance> {
    let reg = SigmaRegistry::new();
    for _ in 0..100 {
        let inst = match kind {
            Kind::Mfe => gen_mfe(rng, params, caps),
            Kind::Sae | Kind::L72 => gen_scc_family(rng, params, kind, caps),
            Kind::Rise => gen_rise(rng, params),
            other => return Err(generator_params(other).unwrap_err()),
        };
        let Ok(inst) = inst else { continue };
        match check_estimate(&inst, params, &reg, caps) {
            Ok(_) => return Ok(inst),
            Err(Error::Hypothesis(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Exhausted(format!("no valid {kind} instance in 100 attempts")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzSummary {
    pub kind: Kind,
    pub seed: u64,
    pub count: usize,
    pub holds: usize,
    pub max_ratio: f64,
    pub counterexamples: Vec<Bundle>,
}

/// Checks `count` generated instances; failures are returned as bundles.
pub fn fuzz(kind: Kind, count: usize, seed: u64, caps: &Caps) -> Result<FuzzSummary> {
    let params = generator_params(kind)?;
    let reg = SigmaRegistry::new();
    let mut rng = gen::rng(seed);
    let mut out = FuzzSummary {
        kind,
        seed,
        count,
        holds: 0,
        max_ratio: 0.0,
        counterexamples: Vec::new(),
    };
    for _ in 0..count {
        let inst = generate(&mut rng, kind, &params, caps)?;
        let report = check_estimate(&inst, &params, &reg, caps)?;
        if report.rhs > 0.0 {
            out.max_ratio = out.max_ratio.max(report.lhs / report.rhs);
        }
        if report.holds {
            out.holds += 1;
        } else {
            out.counterexamples.push(Bundle {
                params: params.config(),
                registry: reg.clone(),
                instance: inst,
                report: Some(report),
            });
        }
    }
    Ok(out)
}

/// `A`, a zero-diagonal matrix `T` indexed by `A`, and coefficients on `A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountingInstance {
    pub a: FiniteSet,
    pub t: Vec<Vec<String>>,
    pub x: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountingReport {
    pub size: usize,
    pub even: bool,
    pub partitions: u64,
    #[serde(with = "crate::rational::serde_q")]
    pub stated_constant: Q,
    #[serde(with = "crate::rational::serde_q")]
    pub empirical_constant: Q,
    /// Componentwise equality with the stated constant.
    pub stated_holds: bool,
    /// Componentwise equality with the empirical constant.
    pub empirical_holds: bool,
}

pub const COUNTING_CAP: usize = 10;

fn parse_matrix(inst: &CountingInstance) -> Result<(Vec<Vec<Q>>, Vec<Q>)> {
    let s = inst.a.len();
    if s == 0 || s > COUNTING_CAP {
        return Err(Error::Cap(format!("|A| must lie in 1..={COUNTING_CAP}")));
    }
    if inst.t.len() != s || inst.t.iter().any(|r| r.len() != s) || inst.x.len() != s {
        return Err(Error::Precondition("T must be |A|×|A| and x of length |A|".into()));
    }
    let p = |v: &String| rational::parse(v).map_err(Error::Precondition);
    let t: Vec<Vec<Q>> = inst.t.iter().map(|r| r.iter().map(p).collect()).collect::<Result<_>>()?;
    let x: Vec<Q> = inst.x.iter().map(p).collect::<Result<_>>()?;
    if let Some(i) = (0..s).find(|&i| !t[i][i].is_zero()) {
        return Err(Error::Hypothesis(format!("T has a nonzero diagonal entry at {i}")));
    }
    Ok((t, x))
}

/// Compares `A T x` with `c/#P Σ_{(B,C)∈P} B T C x` in exact arithmetic.
pub fn check_counting(inst: &CountingInstance) -> Result<CountingReport> {
    let (t, x) = parse_matrix(inst)?;
    let s = inst.a.len();
    let even = s.is_multiple_of(2);
    let l = (s / 2) as i64;
    let big = |v: i64| BigInt::from(v);
    let stated = if even {
        Q::new(big(2 * l * (2 * l - 1)), big(l * l))
    } else {
        Q::new(
            big(2 * l * (2 * l + 1) * ((l + 1) * (l + 1) + 1)),
            big((l * l + 1) * (l + 1) * (l + 1)),
        )
    };
    let lhs: Vec<Q> = (0..s)
        .map(|i| (0..s).filter(|&k| k != i).map(|k| &t[i][k] * &x[k]).sum())
        .collect();
    let mut sum = vec![Q::zero(); s];
    let mut partitions = 0u64;
    let mut pair_hits = 0u64;
    for b in 0u32..(1 << s) {
        let nb = b.count_ones() as usize;
        let ok = if even { nb == s / 2 } else { nb == s / 2 || nb == s / 2 + 1 };
        if !ok {
            continue;
        }
        partitions += 1;
        if s >= 2 && b & 1 == 1 && b & 2 == 0 {
            pair_hits += 1;
        }
        for i in (0..s).filter(|i| b >> i & 1 == 1) {
            for k in (0..s).filter(|k| b >> k & 1 == 0) {
                sum[i] += &t[i][k] * &x[k];
            }
        }
    }
    let empirical = if pair_hits == 0 {
        Q::zero()
    } else {
        Q::new(big(partitions as i64), big(pair_hits as i64))
    };
    let scaled = |c: &Q| -> Vec<Q> {
        sum.iter()
            .map(|v| c * v / Q::from_integer(big(partitions as i64)))
            .collect()
    };
    let stated_holds = scaled(&stated) == lhs;
    let empirical_holds = s < 2 || scaled(&empirical) == lhs;
    Ok(CountingReport {
        size: s,
        even,
        partitions,
        stated_constant: stated,
        empirical_constant: empirical,
        stated_holds,
        empirical_holds,
    })
}

/// Random zero-diagonal instance with small rational entries.
pub fn random_counting(rng: &mut Rand, size: usize) -> CountingInstance {
    let entry = |rng: &mut Rand| -> String {
        let num: i64 = rng.gen_range(-9..=9);
        let den: i64 = rng.gen_range(1..=7);
        rational::format(&Q::new(num.into(), den.into()))
    };
    let t = (0..size)
        .map(|i| (0..size).map(|k| if i == k { "0".to_string() } else { entry(rng) }).collect())
        .collect();
    let x = (0..size).map(|_| entry(rng)).collect();
    CountingInstance {
        a: FiniteSet::interval(1, size as u32),
        t,
        x,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mfe_single_leaf() {
        let p = basic_params();
        let mut inst = EstimateInstance::new(Kind::Mfe, 1.0);
        inst.functionals = vec![Functional::leaf(1, 3)];
        inst.lambdas = vec![1.0];
        inst.vectors = vec![RealVector::unit(5)];
        inst.b = vec![1.0];
        let r = check_estimate(&inst, &p, &SigmaRegistry::new(), &Caps::default()).unwrap();
        assert!(r.holds && r.lhs <= 1.0 && r.rhs == 4.0);
        inst.functionals = vec![Functional::leaf(1, 5)];
        assert!(matches!(
            check_estimate(&inst, &p, &SigmaRegistry::new(), &Caps::default()),
            Err(Error::Hypothesis(_))
        ));
    }

    #[test]
    fn sae_rejects_large_q() {
        let p = basic_params();
        let caps = Caps::default();
        let mut rng = gen::rng(5);
        let mut inst = generate(&mut rng, Kind::Sae, &p, &caps).unwrap();
        assert!(check_estimate(&inst, &p, &SigmaRegistry::new(), &caps).unwrap().holds);
        inst.q = Some(1);
        let e = check_estimate(&inst, &p, &SigmaRegistry::new(), &caps).unwrap_err();
        assert!(e.to_string().contains("not above q"));
    }

    #[test]
    fn counting_small_cases() {
        let inst = CountingInstance {
            a: FiniteSet::interval(1, 2),
            t: vec![vec!["0".into(), "3".into()], vec!["-2/5".into(), "0".into()]],
            x: vec!["7".into(), "1/2".into()],
        };
        let r = check_counting(&inst).unwrap();
        assert!(r.stated_holds && r.empirical_holds);
        assert_eq!(r.stated_constant, Q::from_integer(2.into()));
        let mut rng = gen::rng(9);
        let odd = check_counting(&random_counting(&mut rng, 3)).unwrap();
        assert!(odd.empirical_holds);
        assert_eq!(odd.empirical_constant, Q::from_integer(3.into()));
        let mut bad = inst.clone();
        bad.t[0][0] = "1".into();
        assert!(check_counting(&bad).is_err());
    }

    #[test]
    fn short_fuzz_runs() {
        let caps = Caps::default();
        for kind in [Kind::Mfe, Kind::Sae, Kind::Rise, Kind::L72] {
            let s = fuzz(kind, 30, 11, &caps).unwrap();
            assert_eq!(s.holds, 30, "{kind}: {:?}", s.counterexamples.first());
        }
        assert!(fuzz(Kind::P74, 1, 0, &caps).is_err());
    }
}
