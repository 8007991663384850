//! Exact rational helpers and their string form (`"p/q"`).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serializer};

pub type Q = BigRational;

pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_u128(n: u128) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn to_f64(x: &Q) -> f64 {
    match x.to_f64() {
        Some(v) if v.is_finite() => v,
        _ => {
            // numerator/denominator too large for a direct conversion
            let n = x.numer().to_f64().unwrap_or(f64::INFINITY);
            let d = x.denom().to_f64().unwrap_or(f64::INFINITY);
            if n.is_finite() && d.is_finite() {
                n / d
            } else {
                let shift = x.denom().bits().max(x.numer().bits()) as i64 - 900;
                let shift = shift.max(0) as usize;
                let n = (x.numer() >> shift).to_f64().unwrap_or(0.0);
                let d = (x.denom() >> shift).to_f64().unwrap_or(1.0);
                n / d
            }
        }
    }
}

pub fn sqrt_f64(x: &Q) -> f64 {
    to_f64(x).max(0.0).sqrt()
}

/// Parses `"p/q"`, `"p"` or a finite decimal such as `"0.8"` exactly.
pub fn parse(s: &str) -> Result<Q, String> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| format!("bad numerator in {s:?}"))?;
        let d: BigInt = d.trim().parse().map_err(|_| format!("bad denominator in {s:?}"))?;
        if d.is_zero() {
            return Err(format!("zero denominator in {s:?}"));
        }
        return Ok(Q::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches('-'), frac);
        let n: BigInt = digits.parse().map_err(|_| format!("bad decimal {s:?}"))?;
        let d = num_traits::pow(BigInt::from(10), frac.len());
        let v = Q::new(n, d);
        return Ok(if neg { -v } else { v });
    }
    let n: BigInt = s.parse().map_err(|_| format!("bad rational {s:?}"))?;
    Ok(Q::from_integer(n))
}

pub fn format(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Compares `sqrt(a)` against the rational `b` exactly (`a >= 0`).
pub fn sqrt_lt(a: &Q, b: &Q) -> bool {
    if b.is_negative() || b.is_zero() {
        return false;
    }
    a < &(b * b)
}

pub fn lcm_of_denominators<'a>(xs: impl IntoIterator<Item = &'a Q>) -> BigInt {
    use num_integer::Integer;
    xs.into_iter()
        .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
}

pub mod serde_q {
    use super::*;

    pub fn serialize<S: Serializer>(x: &Q, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Q, D::Error> {
        let raw = serde_json::Value::deserialize(d)?;
        from_json(&raw).map_err(serde::de::Error::custom)
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Q, String> {
        match v {
            serde_json::Value::String(s) => parse(s),
            serde_json::Value::Number(n) => parse(&n.to_string()),
            other => Err(format!("expected rational, found {other}")),
        }
    }
}

pub mod serde_q_vec {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(xs: &[Q], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(xs.len()))?;
        for x in xs {
            seq.serialize_element(&format(x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Q>, D::Error> {
        let raw = Vec::<serde_json::Value>::deserialize(d)?;
        raw.iter()
            .map(serde_q::from_json)
            .collect::<Result<_, _>>()
            .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse("3/6").unwrap(), q(1, 2));
        assert_eq!(parse("0.8").unwrap(), q(4, 5));
        assert_eq!(parse("-1.25").unwrap(), q(-5, 4));
        assert_eq!(parse("7").unwrap(), qi(7));
        assert!(parse("1/0").is_err());
        assert_eq!(format(&q(6, 4)), "3/2");
    }

    #[test]
    fn sqrt_comparison_is_exact() {
        assert!(sqrt_lt(&q(1, 2), &q(4, 5)));
        assert!(!sqrt_lt(&q(16, 25), &q(4, 5)));
    }

    #[test]
    fn huge_rationals_convert() {
        let big = Q::new(BigInt::from(1) << 2000usize, (BigInt::from(1) << 1999usize) + 1);
        assert!((to_f64(&big) - 2.0).abs() < 1e-9);
    }
}
