//! Integral and rational coordinate vectors.
//!
//! Both serialize as JSON arrays. Integral entries are JSON numbers when they
//! fit in an `i64` and decimal strings otherwise; rational entries that are not
//! integers are written as `"p/q"` strings.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::arith::{common_denominator, content, format_rational, parse_rational};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticeVector(Vec<BigInt>);

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RationalVector(Vec<BigRational>);

impl LatticeVector {
    pub fn new(coords: Vec<BigInt>) -> Self {
        LatticeVector(coords)
    }

    pub fn from_i64s(coords: &[i64]) -> Self {
        LatticeVector(coords.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn zero(rank: usize) -> Self {
        LatticeVector(vec![BigInt::zero(); rank])
    }

    pub fn basis(rank: usize, i: usize) -> Self {
        let mut v = Self::zero(rank);
        v.0[i] = BigInt::one();
        v
    }

    pub fn coords(&self) -> &[BigInt] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<BigInt> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn content(&self) -> BigInt {
        content(&self.0)
    }

    pub fn is_primitive(&self) -> bool {
        self.content().is_one()
    }

    /// Divides by the content; the zero vector is returned unchanged.
    pub fn primitive(&self) -> Self {
        let c = self.content();
        if c.is_zero() || c.is_one() {
            return self.clone();
        }
        LatticeVector(self.0.iter().map(|x| x / &c).collect())
    }

    /// True when the first nonzero coordinate is positive (or the vector is zero).
    pub fn is_sign_normalized(&self) -> bool {
        self.0
            .iter()
            .find(|c| !c.is_zero())
            .is_none_or(|c| c.is_positive())
    }

    pub fn sign_normalized(&self) -> Self {
        if self.is_sign_normalized() {
            self.clone()
        } else {
            -self
        }
    }

    /// Primitive part with positive leading coordinate: the representative of
    /// the class up to nonzero scalar.
    pub fn canonical(&self) -> Self {
        self.primitive().sign_normalized()
    }

    pub fn scale(&self, k: &BigInt) -> Self {
        LatticeVector(self.0.iter().map(|x| x * k).collect())
    }

    pub fn max_abs(&self) -> BigInt {
        self.0.iter().map(|x| x.abs()).max().unwrap_or_default()
    }

    pub fn to_rational(&self) -> RationalVector {
        RationalVector(self.0.iter().cloned().map(BigRational::from_integer).collect())
    }

    pub fn to_i64s(&self) -> Option<Vec<i64>> {
        self.0.iter().map(ToPrimitive::to_i64).collect()
    }

    /// Parses `"1,-2,3"`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim().trim_start_matches(['[', '(']).trim_end_matches([']', ')']);
        if s.trim().is_empty() {
            return Err(Error::Parse("empty vector".into()));
        }
        s.split(',')
            .map(|t| {
                t.trim()
                    .parse::<BigInt>()
                    .map_err(|_| Error::Parse(format!("not an integer: {t:?}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(LatticeVector)
    }
}

impl RationalVector {
    pub fn new(coords: Vec<BigRational>) -> Self {
        RationalVector(coords)
    }

    pub fn zero(rank: usize) -> Self {
        RationalVector(vec![BigRational::zero(); rank])
    }

    pub fn coords(&self) -> &[BigRational] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn is_integral(&self) -> bool {
        self.0.iter().all(|c| c.is_integer())
    }

    pub fn scale(&self, k: &BigRational) -> Self {
        RationalVector(self.0.iter().map(|x| x * k).collect())
    }

    /// Integral vector on the same open ray: multiply by the common
    /// denominator, then divide by the content. Direction is preserved.
    pub fn ray_primitive(&self) -> LatticeVector {
        let den = common_denominator(&self.0);
        let v = LatticeVector(self.0.iter().map(|x| (x * &den).to_integer()).collect());
        v.primitive()
    }

    /// Integral vector if every coordinate is an integer.
    pub fn to_lattice(&self) -> Option<LatticeVector> {
        self.is_integral()
            .then(|| LatticeVector(self.0.iter().map(|x| x.to_integer()).collect()))
    }

    /// Parses `"1,1/2,-3"`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim().trim_start_matches(['[', '(']).trim_end_matches([']', ')']);
        if s.trim().is_empty() {
            return Err(Error::Parse("empty vector".into()));
        }
        s.split(',')
            .map(|t| parse_rational(t).ok_or_else(|| Error::Parse(format!("not a rational: {t:?}"))))
            .collect::<Result<Vec<_>>>()
            .map(RationalVector)
    }
}

impl From<LatticeVector> for RationalVector {
    fn from(v: LatticeVector) -> Self {
        v.to_rational()
    }
}

impl From<&LatticeVector> for RationalVector {
    fn from(v: &LatticeVector) -> Self {
        v.to_rational()
    }
}

impl Neg for &LatticeVector {
    type Output = LatticeVector;
    fn neg(self) -> LatticeVector {
        LatticeVector(self.0.iter().map(|x| -x).collect())
    }
}

impl Neg for LatticeVector {
    type Output = LatticeVector;
    fn neg(self) -> LatticeVector {
        -&self
    }
}

impl Add for &LatticeVector {
    type Output = LatticeVector;
    fn add(self, rhs: &LatticeVector) -> LatticeVector {
        assert_eq!(self.len(), rhs.len());
        LatticeVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &LatticeVector {
    type Output = LatticeVector;
    fn sub(self, rhs: &LatticeVector) -> LatticeVector {
        assert_eq!(self.len(), rhs.len());
        LatticeVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &RationalVector {
    type Output = RationalVector;
    fn neg(self) -> RationalVector {
        RationalVector(self.0.iter().map(|x| -x).collect())
    }
}

impl Add for &RationalVector {
    type Output = RationalVector;
    fn add(self, rhs: &RationalVector) -> RationalVector {
        assert_eq!(self.len(), rhs.len());
        RationalVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &RationalVector {
    type Output = RationalVector;
    fn sub(self, rhs: &RationalVector) -> RationalVector {
        assert_eq!(self.len(), rhs.len());
        RationalVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl fmt::Display for LatticeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for RationalVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", format_rational(c))?;
        }
        write!(f, ")")
    }
}

/// JSON encoding of one integer: a number when it fits in `i64`, else a string.
pub(crate) fn int_to_json(x: &BigInt) -> serde_json::Value {
    match x.to_i64() {
        Some(v) => serde_json::Value::from(v),
        None => serde_json::Value::String(x.to_string()),
    }
}

pub(crate) fn rational_to_json(x: &BigRational) -> serde_json::Value {
    if x.is_integer() {
        int_to_json(x.numer())
    } else {
        serde_json::Value::String(format_rational(x))
    }
}

pub(crate) fn int_from_json(v: &serde_json::Value) -> Option<BigInt> {
    match v {
        serde_json::Value::Number(n) => n.as_i64().map(BigInt::from),
        serde_json::Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

pub(crate) fn rational_from_json(v: &serde_json::Value) -> Option<BigRational> {
    match v {
        serde_json::Value::Number(n) => n.as_i64().map(|x| BigRational::from_integer(x.into())),
        serde_json::Value::String(s) => parse_rational(s),
        _ => None,
    }
}

impl Serialize for LatticeVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let vals: Vec<_> = self.0.iter().map(int_to_json).collect();
        vals.serialize(s)
    }
}

impl<'de> Deserialize<'de> for LatticeVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let vals = Vec::<serde_json::Value>::deserialize(d)?;
        vals.iter()
            .map(|v| int_from_json(v).ok_or_else(|| D::Error::custom(format!("not an integer: {v}"))))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(LatticeVector)
    }
}

impl Serialize for RationalVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let vals: Vec<_> = self.0.iter().map(rational_to_json).collect();
        vals.serialize(s)
    }
}

impl<'de> Deserialize<'de> for RationalVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let vals = Vec::<serde_json::Value>::deserialize(d)?;
        vals.iter()
            .map(|v| rational_from_json(v).ok_or_else(|| D::Error::custom(format!("not a rational: {v}"))))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(RationalVector)
    }
}
