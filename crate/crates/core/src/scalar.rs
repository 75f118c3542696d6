//! Scalar fields used throughout the crate.
//!
//! Identity suites run over exact [`BigRational`] values; analytic and
//! Monte-Carlo suites run over `f64`. `Complex64` covers point evaluations
//! such as delta functionals at complex points.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// Tag recorded in every serialized object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarKind {
    Rational,
    Float,
    Complex,
}

impl ScalarKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScalarKind::Rational => "rational",
            ScalarKind::Float => "float",
            ScalarKind::Complex => "complex",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "rational" => Ok(ScalarKind::Rational),
            "float" => Ok(ScalarKind::Float),
            "complex" => Ok(ScalarKind::Complex),
            other => Err(Error::Parse(format!("unknown scalar kind `{other}`"))),
        }
    }
}

pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    const KIND: ScalarKind;

    fn from_rational(r: &BigRational) -> Self;

    fn from_i64(v: i64) -> Self {
        Self::from_rational(&BigRational::from_integer(BigInt::from(v)))
    }

    fn from_bigint(v: &BigInt) -> Self {
        Self::from_rational(&BigRational::from_integer(v.clone()))
    }

    /// Absolute value (modulus) as a float, used by norms and reports.
    fn modulus(&self) -> f64;

    /// Real part as a float.
    fn real_f64(&self) -> f64;

    /// Sign of the real part; exact for rationals.
    fn signum_real(&self) -> i32;

    /// Equality used by verification suites: exact for rationals, relative
    /// tolerance otherwise.
    fn close_to(&self, other: &Self, tol: f64) -> bool;

    fn to_json(&self) -> Value;

    fn from_json(v: &Value) -> Result<Self>;

    /// Short human-readable form (CSV cells, log lines).
    fn to_plain(&self) -> String;
}

fn rel_close(diff: f64, a: f64, b: f64, tol: f64) -> bool {
    diff <= tol * (1.0 + a.max(b))
}

pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("cannot parse `{s}` as a rational"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    if let Ok(n) = s.parse::<BigInt>() {
        return Ok(BigRational::from_integer(n));
    }
    // Finite decimal literal, e.g. "0.25" or "-1.5e-3".
    let f: f64 = s.parse().map_err(|_| bad())?;
    BigRational::from_float(f).ok_or_else(bad)
}

impl Scalar for BigRational {
    const KIND: ScalarKind = ScalarKind::Rational;

    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }

    fn modulus(&self) -> f64 {
        self.abs().to_f64().unwrap_or(f64::INFINITY)
    }

    fn real_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn signum_real(&self) -> i32 {
        if self.is_positive() {
            1
        } else if self.is_negative() {
            -1
        } else {
            0
        }
    }

    fn close_to(&self, other: &Self, _tol: f64) -> bool {
        self == other
    }

    fn to_json(&self) -> Value {
        Value::String(format!("{}/{}", self.numer(), self.denom()))
    }

    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::String(s) => parse_rational(s),
            Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Ok(BigRational::from_integer(BigInt::from(i)))
                } else {
                    parse_rational(&n.to_string())
                }
            }
            other => Err(Error::Parse(format!("expected rational, got {other}"))),
        }
    }

    fn to_plain(&self) -> String {
        self.to_string()
    }
}

impl Scalar for f64 {
    const KIND: ScalarKind = ScalarKind::Float;

    fn from_rational(r: &BigRational) -> Self {
        r.to_f64().unwrap_or(f64::NAN)
    }

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn modulus(&self) -> f64 {
        self.abs()
    }

    fn real_f64(&self) -> f64 {
        *self
    }

    fn signum_real(&self) -> i32 {
        if *self > 0.0 {
            1
        } else if *self < 0.0 {
            -1
        } else {
            0
        }
    }

    fn close_to(&self, other: &Self, tol: f64) -> bool {
        rel_close((self - other).abs(), self.abs(), other.abs(), tol)
    }

    fn to_json(&self) -> Value {
        serde_json::Number::from_f64(*self)
            .map(Value::Number)
            .unwrap_or(Value::Null)
    }

    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::Number(n) => n
                .as_f64()
                .ok_or_else(|| Error::Parse(format!("bad float {n}"))),
            Value::String(s) => Ok(parse_rational(s)?.to_f64().unwrap_or(f64::NAN)),
            other => Err(Error::Parse(format!("expected float, got {other}"))),
        }
    }

    fn to_plain(&self) -> String {
        format!("{self:e}")
    }
}

impl Scalar for Complex64 {
    const KIND: ScalarKind = ScalarKind::Complex;

    fn from_rational(r: &BigRational) -> Self {
        Complex64::new(r.to_f64().unwrap_or(f64::NAN), 0.0)
    }

    fn from_i64(v: i64) -> Self {
        Complex64::new(v as f64, 0.0)
    }

    fn modulus(&self) -> f64 {
        self.norm()
    }

    fn real_f64(&self) -> f64 {
        self.re
    }

    fn signum_real(&self) -> i32 {
        self.re.signum_real()
    }

    fn close_to(&self, other: &Self, tol: f64) -> bool {
        rel_close((self - other).norm(), self.norm(), other.norm(), tol)
    }

    fn to_json(&self) -> Value {
        Value::Array(vec![self.re.to_json(), self.im.to_json()])
    }

    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::Array(parts) if parts.len() == 2 => Ok(Complex64::new(
                f64::from_json(&parts[0])?,
                f64::from_json(&parts[1])?,
            )),
            other => Ok(Complex64::new(f64::from_json(other)?, 0.0)),
        }
    }

    fn to_plain(&self) -> String {
        format!("{:e}{:+e}i", self.re, self.im)
    }
}

/// Exact `n!` as a big integer.
pub fn factorial_big(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

pub fn factorial<S: Scalar>(n: usize) -> S {
    S::from_bigint(&factorial_big(n))
}

pub fn binomial<S: Scalar>(n: usize, k: usize) -> S {
    if k > n {
        return S::zero();
    }
    let v = factorial_big(n) / (factorial_big(k) * factorial_big(n - k));
    S::from_bigint(&v)
}

/// `num/den` as a scalar, computed exactly before conversion.
pub fn ratio<S: Scalar>(num: &BigInt, den: &BigInt) -> S {
    S::from_rational(&BigRational::new(num.clone(), den.clone()))
}

pub fn pow<S: Scalar>(x: &S, e: u32) -> S {
    let mut acc = S::one();
    for _ in 0..e {
        acc = acc * x.clone();
    }
    acc
}
