//! Elements of the norming set as explicit trees.
//!
//! A node `(1/m_w) Σ λ_β f_β` stores its weight index `w` (even or odd) and
//! the weight `m_w` itself, so evaluation needs no parameter table. Scalars
//! keep `λ²` as an exact rational whenever possible.

use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{ParameterSystem, SigmaRegistry, SpecialSequence};
use crate::rational::{self, Q};
use crate::schreier::{check_family, minima, FamilyMode, FiniteSet, SetFamily};
use crate::vector::RealVector;

/// Slack allowed on `Σ λ² ≤ 1` when some scalar is only known in binary64.
pub const LAMBDA_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Square {
    Exact(Q),
    Approx(f64),
}

/// `λ = sign · sqrt(square)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scalar {
    pub sign: i8,
    pub square: Square,
}

impl Scalar {
    pub fn one() -> Self {
        Scalar {
            sign: 1,
            square: Square::Exact(Q::one()),
        }
    }

    pub fn exact(sign: i8, square: Q) -> Self {
        Scalar {
            sign,
            square: Square::Exact(square),
        }
    }

    pub fn from_f64(v: f64) -> Self {
        Scalar {
            sign: if v < 0.0 { -1 } else { 1 },
            square: Square::Approx(v * v),
        }
    }

    pub fn square_f64(&self) -> f64 {
        match &self.square {
            Square::Exact(q) => rational::to_f64(q),
            Square::Approx(v) => *v,
        }
    }

    pub fn value(&self) -> f64 {
        self.sign as f64 * self.square_f64().max(0.0).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Repr", into = "Repr")]
pub enum Functional {
    Leaf {
        sign: i8,
        index: u32,
    },
    Node {
        /// Weight index `w`; the node divides by `m_w`.
        weight_index: u32,
        m: u128,
        children: Vec<(Scalar, Functional)>,
        witness: Option<SpecialSequence>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Repr {
    Leaf((i8, u32)),
    Node(NodeRepr),
}

#[derive(Serialize, Deserialize)]
struct NodeRepr {
    parity: Parity,
    j: u32,
    m: u128,
    children: Vec<(serde_json::Value, i8, Functional)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    witness: Option<SpecialSequence>,
}

impl TryFrom<Repr> for Functional {
    type Error = String;

    fn try_from(r: Repr) -> std::result::Result<Self, String> {
        match r {
            Repr::Leaf((sign, index)) => Ok(Functional::Leaf { sign, index }),
            Repr::Node(n) => {
                let parity = if n.j % 2 == 0 { Parity::Even } else { Parity::Odd };
                if parity != n.parity {
                    return Err(format!("weight index {} does not have parity {:?}", n.j, n.parity));
                }
                let mut children = Vec::with_capacity(n.children.len());
                for (sq, sign, child) in n.children {
                    let square = match &sq {
                        serde_json::Value::String(s) => Square::Exact(rational::parse(s)?),
                        serde_json::Value::Number(v) => {
                            Square::Approx(v.as_f64().ok_or("bad scalar")?)
                        }
                        other => return Err(format!("bad scalar {other}")),
                    };
                    children.push((Scalar { sign, square }, child));
                }
                Ok(Functional::Node {
                    weight_index: n.j,
                    m: n.m,
                    children,
                    witness: n.witness,
                })
            }
        }
    }
}

impl From<Functional> for Repr {
    fn from(f: Functional) -> Self {
        match f {
            Functional::Leaf { sign, index } => Repr::Leaf((sign, index)),
            Functional::Node {
                weight_index,
                m,
                children,
                witness,
            } => Repr::Node(NodeRepr {
                parity: if weight_index % 2 == 0 { Parity::Even } else { Parity::Odd },
                j: weight_index,
                m,
                children: children
                    .into_iter()
                    .map(|(s, c)| {
                        let sq = match s.square {
                            Square::Exact(q) => serde_json::Value::String(rational::format(&q)),
                            Square::Approx(v) => serde_json::json!(v),
                        };
                        (sq, s.sign, c)
                    })
                    .collect(),
                witness,
            }),
        }
    }
}

/// First violated condition, with the path of child positions from the root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Invalid {
    pub path: String,
    pub reason: String,
}

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.reason)
    }
}

impl From<Invalid> for Error {
    fn from(e: Invalid) -> Self {
        Error::Functional {
            path: e.path,
            reason: e.reason,
        }
    }
}

fn child_path(path: &str, i: usize) -> String {
    format!("{path}.{i}")
}

impl Functional {
    pub fn leaf(sign: i8, index: u32) -> Self {
        Functional::Leaf { sign, index }
    }

    /// Node with weight `m_w` taken from `params`.
    pub fn node(
        params: &ParameterSystem,
        weight_index: u32,
        children: Vec<(Scalar, Functional)>,
        witness: Option<SpecialSequence>,
    ) -> Result<Self> {
        Ok(Functional::Node {
            weight_index,
            m: params.m(weight_index as usize)?,
            children,
            witness,
        })
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Functional::Leaf { .. })
    }

    pub fn parity(&self) -> Option<Parity> {
        match self {
            Functional::Leaf { .. } => None,
            Functional::Node { weight_index, .. } => {
                Some(if weight_index % 2 == 0 { Parity::Even } else { Parity::Odd })
            }
        }
    }

    /// `ω(f) = m_w`; `None` for `±e_n*`.
    pub fn weight(&self) -> Option<u128> {
        match self {
            Functional::Leaf { .. } => None,
            Functional::Node { m, .. } => Some(*m),
        }
    }

    pub fn weight_index(&self) -> Option<u32> {
        match self {
            Functional::Leaf { .. } => None,
            Functional::Node { weight_index, .. } => Some(*weight_index),
        }
    }

    pub fn support(&self) -> FiniteSet {
        let mut out = Vec::new();
        self.collect_support(&mut out);
        FiniteSet::from_unsorted(out)
    }

    fn collect_support(&self, out: &mut Vec<u32>) {
        match self {
            Functional::Leaf { index, .. } => out.push(*index),
            Functional::Node { children, .. } => {
                for (_, c) in children {
                    c.collect_support(out);
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Functional::Leaf { .. } => 0,
            Functional::Node { children, .. } => {
                1 + children.iter().map(|(_, c)| c.depth()).max().unwrap_or(0)
            }
        }
    }

    /// `f(x)` in binary64, bottom-up.
    pub fn evaluate(&self, x: &RealVector) -> f64 {
        match self {
            Functional::Leaf { sign, index } => *sign as f64 * x.get(*index),
            Functional::Node { m, children, .. } => {
                let s: f64 = children.iter().map(|(l, c)| l.value() * c.evaluate(x)).sum();
                s / *m as f64
            }
        }
    }

    /// Certifies membership in the norming set.
    pub fn validate(
        &self,
        params: &ParameterSystem,
        reg: &SigmaRegistry,
    ) -> std::result::Result<(), Invalid> {
        self.validate_at(params, reg, "$")
    }

    fn validate_at(
        &self,
        params: &ParameterSystem,
        reg: &SigmaRegistry,
        path: &str,
    ) -> std::result::Result<(), Invalid> {
        let fail = |reason: String| Invalid {
            path: path.to_string(),
            reason,
        };
        match self {
            Functional::Leaf { sign, index } => {
                if !matches!(sign, 1 | -1) {
                    return Err(fail(format!("leaf sign {sign} is not ±1")));
                }
                if *index == 0 {
                    return Err(fail("leaf index must be positive".into()));
                }
                Ok(())
            }
            Functional::Node {
                weight_index,
                m,
                children,
                witness,
            } => {
                let w = *weight_index;
                if w == 0 {
                    return Err(fail("weight index must be positive".into()));
                }
                let expected = params.m(w as usize).map_err(|e| fail(e.to_string()))?;
                if expected != *m {
                    return Err(fail(format!("m = {m} but m_{w} = {expected}")));
                }
                if children.is_empty() {
                    return Err(fail("node without children".into()));
                }
                check_lambda(children.iter().map(|(l, _)| l)).map_err(fail)?;
                for (i, (l, c)) in children.iter().enumerate() {
                    if !matches!(l.sign, 1 | -1) {
                        return Err(fail(format!("scalar {i} has sign {}", l.sign)));
                    }
                    c.validate_at(params, reg, &child_path(path, i))?;
                }
                let supports: Vec<FiniteSet> = children.iter().map(|(_, c)| c.support()).collect();
                for i in 0..supports.len() {
                    for k in i + 1..supports.len() {
                        if !supports[i].is_disjoint(&supports[k]) {
                            return Err(fail(format!("children {i} and {k} overlap")));
                        }
                    }
                }
                if w % 2 == 0 {
                    if witness.is_some() {
                        return Err(fail("even node carries a witness".into()));
                    }
                    let level = params.level(w as usize).map_err(|e| fail(e.to_string()))?;
                    let fam = SetFamily {
                        members: supports,
                        mode: FamilyMode::Allowable,
                    };
                    check_family(&fam, level)
                        .map_err(|e| fail(format!("children not S_{level} allowable: {e}")))?;
                    Ok(())
                } else {
                    let j = (w - 1) / 2;
                    let s = witness
                        .as_ref()
                        .ok_or_else(|| fail("odd node without witness".into()))?;
                    if s.len() != children.len() {
                        return Err(fail("witness length differs from child count".into()));
                    }
                    reg.check_special(params, s)
                        .map_err(|e| fail(format!("witness is not σ-special: {e}")))?;
                    if !s.qualifies(params, j).map_err(|e| fail(e.to_string()))? {
                        return Err(fail(format!("witness is not S_n_{w} qualified for j = {j}")));
                    }
                    for (i, ((e, ji), (_, c))) in s.pairs.iter().zip(children).enumerate() {
                        match c {
                            Functional::Node { weight_index, .. } if *weight_index == 2 * ji => {}
                            _ => return Err(fail(format!("child {i} does not have weight m_{}", 2 * ji))),
                        }
                        if !supports[i].is_subset(e) {
                            return Err(fail(format!("child {i} is not supported in E_{}", i + 1)));
                        }
                    }
                    Ok(())
                }
            }
        }
    }

    /// Registers unknown odd-node witnesses in the quarantine namespace.
    pub fn import_witnesses(&self, params: &ParameterSystem, reg: &mut SigmaRegistry) -> Result<()> {
        if let Functional::Node { children, witness, .. } = self {
            if let Some(s) = witness {
                for i in 1..s.len() {
                    reg.quarantine_assign(params, s.prefix(i), s.pairs[i].1)?;
                }
            }
            for (_, c) in children {
                c.import_witnesses(params, reg)?;
            }
        }
        Ok(())
    }

    /// Re-weights an even node so that it evaluates to `(1/m) (Σ f_i(x)²)^{1/2}` at `x`.
    pub fn collapse_lambda(&self, x: &RealVector) -> Result<Functional> {
        let Functional::Node {
            weight_index,
            m,
            children,
            witness,
        } = self
        else {
            return Err(Error::Precondition("collapse_lambda needs a node".into()));
        };
        if weight_index % 2 == 1 {
            return Err(Error::Precondition("collapse_lambda is restricted to even nodes".into()));
        }
        let values: Vec<f64> = children.iter().map(|(_, c)| c.evaluate(x)).collect();
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Ok(self.clone());
        }
        Ok(Functional::Node {
            weight_index: *weight_index,
            m: *m,
            children: children
                .iter()
                .zip(&values)
                .map(|((_, c), v)| (Scalar::from_f64(v / norm), c.clone()))
                .collect(),
            witness: witness.clone(),
        })
    }
}

/// `Σ λ² ≤ 1`, exactly when every scalar is exact.
pub fn check_lambda<'a>(scalars: impl IntoIterator<Item = &'a Scalar>) -> std::result::Result<(), String> {
    let mut exact = Q::zero();
    let mut approx = 0.0;
    let mut all_exact = true;
    for s in scalars {
        match &s.square {
            Square::Exact(q) => {
                if *q < Q::zero() {
                    return Err("negative λ²".into());
                }
                exact += q;
            }
            Square::Approx(v) => {
                if !(v.is_finite() && *v >= 0.0) {
                    return Err("invalid λ²".into());
                }
                approx += v;
                all_exact = false;
            }
        }
    }
    if all_exact {
        if exact > Q::one() {
            return Err(format!("Σλ² = {} > 1", rational::format(&exact)));
        }
    } else {
        let total = approx + rational::to_f64(&exact);
        if total > 1.0 + LAMBDA_SLACK {
            return Err(format!("Σλ² = {total} > 1"));
        }
    }
    Ok(())
}

/// Per-node data of a tree analysis or tree representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeInfo {
    pub parent: Option<usize>,
    pub depth: usize,
    /// `m(α) = Π_{β≺α} ω(f_β)`.
    pub m: f64,
    /// `λ(α) = Π_{β⪯α} λ_β`.
    pub lambda: f64,
    pub weight: Option<u128>,
    pub weight_index: Option<u32>,
    pub support: FiniteSet,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeAnnotations {
    pub nodes: Vec<NodeInfo>,
    #[serde(skip)]
    functionals: Vec<Functional>,
}

impl TreeAnnotations {
    /// Annotations of a single functional (root `m = 1`, `λ = 1`).
    pub fn of(f: &Functional) -> Self {
        Self::of_sum(&[(Scalar::one(), f.clone())])
    }

    /// Tree representation of `Σ_ℓ λ_ℓ f_ℓ`; the roots carry `λ_ℓ`.
    pub fn of_sum(parts: &[(Scalar, Functional)]) -> Self {
        let mut t = TreeAnnotations {
            nodes: Vec::new(),
            functionals: Vec::new(),
        };
        for (l, f) in parts {
            t.push(f, None, 0, 1.0, l.value());
        }
        t
    }

    fn push(&mut self, f: &Functional, parent: Option<usize>, depth: usize, m: f64, lambda: f64) {
        let id = self.nodes.len();
        let (weight, weight_index) = match f {
            Functional::Leaf { .. } => (None, None),
            Functional::Node { weight_index, m, .. } => (Some(*m), Some(*weight_index)),
        };
        self.nodes.push(NodeInfo {
            parent,
            depth,
            m,
            lambda,
            weight,
            weight_index,
            support: f.support(),
        });
        self.functionals.push(f.clone());
        if let Functional::Node { m: w, children, .. } = f {
            for (l, c) in children {
                self.push(c, Some(id), depth + 1, m * *w as f64, lambda * l.value());
            }
        }
    }

    pub fn functional(&self, id: usize) -> &Functional {
        &self.functionals[id]
    }

    pub fn children(&self, id: usize) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&k| self.nodes[k].parent == Some(id)).collect()
    }

    pub fn ancestors(&self, id: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut cur = self.nodes[id].parent;
        while let Some(p) = cur {
            out.push(p);
            cur = self.nodes[p].parent;
        }
        out
    }

    pub fn is_ancestor(&self, a: usize, b: usize) -> bool {
        self.ancestors(b).contains(&a)
    }

    pub fn is_antichain(&self, set: &[usize]) -> bool {
        set.iter().enumerate().all(|(i, &a)| {
            set.iter()
                .enumerate()
                .all(|(k, &b)| i == k || (a != b && !self.is_ancestor(a, b)))
        })
    }

    /// Every root-to-leaf path meets the set exactly once.
    pub fn is_maximal_antichain(&self, set: &[usize]) -> bool {
        self.is_antichain(set)
            && (0..self.nodes.len())
                .filter(|&k| self.functionals[k].is_leaf())
                .all(|leaf| {
                    set.contains(&leaf) || self.ancestors(leaf).iter().any(|a| set.contains(a))
                })
    }

    pub fn lambda_sq_sum(&self, set: &[usize]) -> f64 {
        set.iter().map(|&a| self.nodes[a].lambda.powi(2)).sum()
    }

    pub fn leaves(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&k| self.functionals[k].is_leaf()).collect()
    }

    /// `Σ_{γ∈D} (λ(γ)/m(γ)) f_γ(x)`.
    pub fn reconstruct(&self, set: &[usize], x: &RealVector) -> f64 {
        set.iter()
            .map(|&a| self.nodes[a].lambda / self.nodes[a].m * self.functionals[a].evaluate(x))
            .sum()
    }

    /// Nodes `a` whose strict ancestors all have weight `≤ m_{j-1}` and
    /// `Π_{β≺a} 1/ω(f_β) > 1/m_j³`.
    pub fn lem6_filter(&self, params: &ParameterSystem, j: usize) -> Result<Vec<usize>> {
        if j == 0 {
            return Err(Error::Precondition("j must be positive".into()));
        }
        let m_prev = params.m(j - 1)? as f64;
        let mj3 = (params.m(j)? as f64).powi(3);
        Ok((0..self.nodes.len())
            .filter(|&a| {
                let anc = self.ancestors(a);
                anc.iter().all(|&b| self.nodes[b].weight.is_some_and(|w| w as f64 <= m_prev))
                    && self.nodes[a].m < mj3
            })
            .collect())
    }

    /// Whether the supports indexed by `set` form an `S_{n_j - 1}`-allowable family.
    pub fn lem6_allowable(&self, params: &ParameterSystem, j: usize, set: &[usize]) -> Result<bool> {
        let level = params.n(j)?.saturating_sub(1).min(u32::MAX as u64) as u32;
        let fam = SetFamily {
            members: set.iter().map(|&a| self.nodes[a].support.clone()).collect(),
            mode: FamilyMode::Allowable,
        };
        Ok(check_family(&fam, level).is_ok())
    }

    /// Strict-ancestor counts of filtered nodes are below `3 log₂ m_j`.
    pub fn lem6_depth_bound(&self, params: &ParameterSystem, j: usize, filtered: &[usize]) -> Result<bool> {
        let bound = 3.0 * (params.m(j)? as f64).log2();
        Ok(filtered.iter().all(|&a| (self.ancestors(a).len() as f64) < bound))
    }

    pub fn minima_of(&self, set: &[usize]) -> FiniteSet {
        minima(set.iter().map(|&a| &self.nodes[a].support))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Split;
    use crate::rational::q;

    fn toy() -> ParameterSystem {
        ParameterSystem::toy(vec![2, 2, 2, 4, 8], vec![1, 1, 1, 1, 1], Split::default()).unwrap()
    }

    fn even(params: &ParameterSystem, w: u32, kids: Vec<(Scalar, Functional)>) -> Functional {
        Functional::node(params, w, kids, None).unwrap()
    }

    #[test]
    fn validation_examples() {
        let p = toy();
        let reg = SigmaRegistry::new();
        assert!(Functional::leaf(1, 7).validate(&p, &reg).is_ok());
        let f = even(
            &p,
            2,
            vec![
                (Scalar::exact(1, q(9, 25)), Functional::leaf(1, 4)),
                (Scalar::exact(1, q(16, 25)), Functional::leaf(1, 6)),
            ],
        );
        assert!(f.validate(&p, &reg).is_ok());
        let g = even(
            &p,
            2,
            vec![
                (Scalar::exact(1, q(1, 1)), Functional::leaf(1, 4)),
                (Scalar::exact(1, q(1, 1)), Functional::leaf(1, 6)),
            ],
        );
        let err = g.validate(&p, &reg).unwrap_err();
        assert!(err.reason.contains("Σλ²"), "{err}");
        let crowded = even(
            &p,
            2,
            vec![
                (Scalar::exact(1, q(1, 3)), Functional::leaf(1, 1)),
                (Scalar::exact(1, q(1, 3)), Functional::leaf(1, 2)),
            ],
        );
        assert!(crowded.validate(&p, &reg).is_err());
    }

    #[test]
    fn evaluation_and_weight() {
        let p = toy();
        let x = RealVector::new([(4, 1.0), (6, 1.0)]);
        assert_eq!(Functional::leaf(1, 5).evaluate(&RealVector::unit(5)), 1.0);
        let f = even(
            &p,
            2,
            vec![
                (Scalar::exact(1, q(1, 2)), Functional::leaf(1, 4)),
                (Scalar::exact(1, q(1, 2)), Functional::leaf(1, 6)),
            ],
        );
        assert!((f.evaluate(&x) - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(Functional::leaf(1, 3).weight(), None);
        let strict = ParameterSystem::strict(4, Split::default()).unwrap();
        assert_eq!(
            Functional::node(&strict, 2, vec![(Scalar::one(), Functional::leaf(1, 3))], None)
                .unwrap()
                .weight(),
            Some(8)
        );
        assert_eq!(
            Functional::node(&strict, 3, vec![], None).unwrap().weight(),
            Some(512)
        );
    }

    #[test]
    fn collapse_examples() {
        let p = toy();
        let x = RealVector::new([(4, 3.0), (6, 4.0)]);
        let f = even(
            &p,
            2,
            vec![
                (Scalar::exact(1, q(1, 2)), Functional::leaf(1, 4)),
                (Scalar::exact(-1, q(1, 2)), Functional::leaf(1, 6)),
            ],
        );
        let g = f.collapse_lambda(&x).unwrap();
        assert!((g.evaluate(&x) - 2.5).abs() < 1e-12);
        assert!(g.validate(&p, &SigmaRegistry::new()).is_ok());
        assert_eq!(f.collapse_lambda(&RealVector::unit(9)).unwrap(), f);
        let single = even(&p, 2, vec![(Scalar::exact(1, q(1, 4)), Functional::leaf(-1, 4))]);
        assert!((single.collapse_lambda(&x).unwrap().evaluate(&x) - 1.5).abs() < 1e-12);
        assert!(Functional::leaf(1, 2).collapse_lambda(&x).is_err());
    }

    #[test]
    fn json_round_trip() {
        let p = toy();
        let f = even(
            &p,
            2,
            vec![
                (Scalar::exact(1, q(9, 25)), Functional::leaf(1, 4)),
                (Scalar::from_f64(-0.5), Functional::leaf(-1, 6)),
            ],
        );
        let s = serde_json::to_string(&f).unwrap();
        assert!(s.starts_with(r#"{"node":{"parity":"even","j":2"#), "{s}");
        let back: Functional = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
        let bad = s.replace(r#""parity":"even""#, r#""parity":"odd""#);
        assert!(serde_json::from_str::<Functional>(&bad).is_err());
    }

    #[test]
    fn annotations_depth_one() {
        let p = toy();
        let f = even(
            &p,
            2,
            vec![
                (Scalar::exact(1, q(9, 25)), Functional::leaf(1, 4)),
                (Scalar::exact(1, q(16, 25)), Functional::leaf(1, 6)),
            ],
        );
        let t = TreeAnnotations::of(&f);
        assert_eq!(t.nodes[1].m, 2.0);
        assert!((t.nodes[1].lambda - 0.6).abs() < 1e-15);
        let leaves = t.leaves();
        assert!(t.is_maximal_antichain(&leaves));
        let x = RealVector::new([(4, 2.0), (6, -1.0)]);
        assert!((t.reconstruct(&leaves, &x) - f.evaluate(&x)).abs() < 1e-15);
        assert!(t.lambda_sq_sum(&leaves) <= 1.0 + 1e-12);
    }
}
