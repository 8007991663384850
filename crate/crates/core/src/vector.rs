//! Finitely supported vectors on the unit vector basis `(e_n)`.
//!
//! [`Vector`] holds exact rational coefficients. [`RealVector`] holds binary64
//! coefficients and is what the norm engine consumes, since ℓ2-normalised
//! combinations carry square roots.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::rational::{self, Q};
use crate::schreier::FiniteSet;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vector {
    coeffs: Vec<(u32, Q)>,
}

impl Vector {
    pub fn new(pairs: impl IntoIterator<Item = (u32, Q)>) -> Self {
        let mut map: BTreeMap<u32, Q> = BTreeMap::new();
        for (k, v) in pairs {
            assert!(k >= 1, "basis indices start at 1");
            *map.entry(k).or_insert_with(Q::zero) += v;
        }
        Vector {
            coeffs: map.into_iter().filter(|(_, v)| !v.is_zero()).collect(),
        }
    }

    pub fn unit(k: u32) -> Self {
        Vector::new([(k, rational::qi(1))])
    }

    pub fn coeffs(&self) -> &[(u32, Q)] {
        &self.coeffs
    }

    pub fn get(&self, k: u32) -> Q {
        self.coeffs
            .binary_search_by_key(&k, |(i, _)| *i)
            .map(|p| self.coeffs[p].1.clone())
            .unwrap_or_else(|_| Q::zero())
    }

    pub fn support(&self) -> FiniteSet {
        FiniteSet::from_unsorted(self.coeffs.iter().map(|(k, _)| *k).collect())
    }

    pub fn l1(&self) -> Q {
        self.coeffs.iter().map(|(_, v)| v.abs()).sum()
    }

    pub fn scale(&self, c: &Q) -> Vector {
        Vector::new(self.coeffs.iter().map(|(k, v)| (*k, v * c)))
    }

    pub fn to_real(&self) -> RealVector {
        RealVector::new(self.coeffs.iter().map(|(k, v)| (*k, rational::to_f64(v))))
    }
}

impl Serialize for Vector {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let coeffs: Vec<(u32, String)> = self
            .coeffs
            .iter()
            .map(|(k, v)| (*k, rational::format(v)))
            .collect();
        #[derive(Serialize)]
        struct Repr {
            coeffs: Vec<(u32, String)>,
        }
        Repr { coeffs }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Vector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            coeffs: Vec<(u32, serde_json::Value)>,
        }
        let r = Repr::deserialize(d)?;
        let mut pairs = Vec::with_capacity(r.coeffs.len());
        for (k, v) in r.coeffs {
            if k == 0 {
                return Err(D::Error::custom("basis indices start at 1"));
            }
            pairs.push((k, rational::serde_q::from_json(&v).map_err(D::Error::custom)?));
        }
        Ok(Vector::new(pairs))
    }
}

/// Binary64 counterpart of [`Vector`]; support sorted, no zero entries.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RealVector {
    coeffs: Vec<(u32, f64)>,
}

impl RealVector {
    pub fn new(pairs: impl IntoIterator<Item = (u32, f64)>) -> Self {
        let mut map: BTreeMap<u32, f64> = BTreeMap::new();
        for (k, v) in pairs {
            assert!(k >= 1, "basis indices start at 1");
            *map.entry(k).or_insert(0.0) += v;
        }
        RealVector {
            coeffs: map.into_iter().filter(|(_, v)| *v != 0.0).collect(),
        }
    }

    pub fn unit(k: u32) -> Self {
        RealVector::new([(k, 1.0)])
    }

    pub fn coeffs(&self) -> &[(u32, f64)] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn get(&self, k: u32) -> f64 {
        self.coeffs
            .binary_search_by_key(&k, |(i, _)| *i)
            .map(|p| self.coeffs[p].1)
            .unwrap_or(0.0)
    }

    pub fn support(&self) -> FiniteSet {
        FiniteSet::from_unsorted(self.coeffs.iter().map(|(k, _)| *k).collect())
    }

    pub fn min_supp(&self) -> Option<u32> {
        self.coeffs.first().map(|(k, _)| *k)
    }

    pub fn max_supp(&self) -> Option<u32> {
        self.coeffs.last().map(|(k, _)| *k)
    }

    pub fn linf(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, (_, v)| m.max(v.abs()))
    }

    pub fn l2(&self) -> f64 {
        self.coeffs.iter().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub fn scale(&self, c: f64) -> RealVector {
        RealVector::new(self.coeffs.iter().map(|(k, v)| (*k, v * c)))
    }

    pub fn add(&self, other: &RealVector) -> RealVector {
        RealVector::new(self.coeffs.iter().chain(other.coeffs.iter()).copied())
    }

    pub fn sum<'a>(parts: impl IntoIterator<Item = &'a RealVector>) -> RealVector {
        RealVector::new(parts.into_iter().flat_map(|v| v.coeffs.iter().copied()))
    }

    /// The restriction `E x`.
    pub fn restrict(&self, e: &FiniteSet) -> RealVector {
        RealVector {
            coeffs: self.coeffs.iter().filter(|(k, _)| e.contains(*k)).copied().collect(),
        }
    }

    /// Restriction to the positions of `mask` within the support order.
    pub fn restrict_mask(&self, mask: u64) -> RealVector {
        RealVector {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, c)| *c)
                .collect(),
        }
    }
}

impl From<&Vector> for RealVector {
    fn from(v: &Vector) -> Self {
        v.to_real()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn json_round_trip() {
        let v = Vector::new([(5, q(1, 2)), (2, q(-3, 4)), (9, q(0, 1))]);
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"{"coeffs":[[2,"-3/4"],[5,"1/2"]]}"#);
        let back: Vector = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
        let dec: Vector = serde_json::from_str(r#"{"coeffs":[[3,0.5],[4,"1"]]}"#).unwrap();
        assert_eq!(dec.get(3), q(1, 2));
        assert!(serde_json::from_str::<Vector>(r#"{"coeffs":[[0,"1"]]}"#).is_err());
    }

    #[test]
    fn real_vector_basics() {
        let x = RealVector::new([(4, 3.0), (2, -4.0)]);
        assert_eq!(x.linf(), 4.0);
        assert_eq!(x.l2(), 5.0);
        assert_eq!(x.min_supp(), Some(2));
        assert_eq!(x.restrict(&FiniteSet::singleton(4)).coeffs(), &[(4, 3.0)]);
        assert_eq!(x.restrict_mask(0b01).coeffs(), &[(2, -4.0)]);
        assert!(x.add(&x.scale(-1.0)).is_empty());
    }
}
