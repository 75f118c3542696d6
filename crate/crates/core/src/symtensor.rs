//! Symmetric tensors over a `d`-dimensional coordinate space.
//!
//! A rank-`n` tensor `T` is stored by its polynomial coefficients: `T`
//! represents `p_T(θ) = ⟨T, θ^⊗n⟩ = Σ_{|α|=n} t_α θ^α`. Every combinatorial
//! weight (`α!/n!`, `n!/α!`) lives in [`SymTensor::pairing`],
//! [`SymTensor::pure_power`] and [`SymTensor::contract`]; nothing else
//! touches them.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::One;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::scalar::{factorial_big, ratio, Scalar, ScalarKind};

/// Exponent vector `α = (α₁..α_d)`.
///
/// Ordering is graded-lexicographic: lower degree first, then within a
/// degree the lexicographically larger exponent vector first, so degree 2
/// in two variables enumerates as `(2,0), (1,1), (0,2)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        MultiIndex(entries)
    }

    pub fn zeros(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    pub fn unit(dim: usize, i: usize) -> Self {
        let mut e = vec![0; dim];
        e[i] = 1;
        MultiIndex(e)
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&a| a as usize).sum()
    }

    pub fn factorial(&self) -> BigInt {
        self.0
            .iter()
            .fold(BigInt::one(), |acc, &a| acc * factorial_big(a as usize))
    }

    pub fn plus(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self - other` when `other ≤ self` componentwise.
    pub fn checked_minus(&self, other: &MultiIndex) -> Option<MultiIndex> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex)
    }

    /// `x^α`.
    pub fn monomial<S: Scalar>(&self, x: &[S]) -> S {
        let mut acc = S::one();
        for (xi, &a) in x.iter().zip(&self.0) {
            for _ in 0..a {
                acc = acc * xi.clone();
            }
        }
        acc
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|a| a.to_string()).collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// All multi-indices of degree `n` in `d` variables, graded-lex order.
pub fn multi_indices(d: usize, n: usize) -> Vec<MultiIndex> {
    fn rec(d: usize, n: usize, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if d == 1 {
            prefix.push(n as u32);
            out.push(MultiIndex(prefix.clone()));
            prefix.pop();
            return;
        }
        for first in (0..=n).rev() {
            prefix.push(first as u32);
            rec(d - 1, n - first, prefix, out);
            prefix.pop();
        }
    }
    assert!(d >= 1, "dimension must be positive");
    let mut out = Vec::new();
    rec(d, n, &mut Vec::with_capacity(d), &mut out);
    out
}

/// Diagonal stand-in for a Hilbert scale: `|x|_p = |diag(aᵖ) x|`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleVector(Vec<f64>);

impl ScaleVector {
    pub fn new(a: Vec<f64>) -> Result<Self> {
        if a.is_empty() || a.iter().any(|&x| !(x >= 1.0) || !x.is_finite()) {
            return Err(Error::Invalid(
                "scale vector entries must be finite and ≥ 1".into(),
            ));
        }
        Ok(ScaleVector(a))
    }

    /// `aᵢ = i + 1` for `i = 1..d`, i.e. `(2, 3, …, d+1)`.
    pub fn default_for(dim: usize) -> Self {
        ScaleVector((1..=dim).map(|i| (i + 1) as f64).collect())
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `a^{pα} = Π aᵢ^{p αᵢ}`.
    pub fn weight(&self, alpha: &MultiIndex, p: i32) -> f64 {
        self.0
            .iter()
            .zip(alpha.entries())
            .map(|(a, &k)| a.powi(p * k as i32))
            .product()
    }
}

#[derive(Clone, PartialEq)]
pub struct SymTensor<S> {
    dim: usize,
    rank: usize,
    coeffs: BTreeMap<MultiIndex, S>,
}

impl<S: fmt::Debug> fmt::Debug for SymTensor<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymTensor")
            .field("dim", &self.dim)
            .field("rank", &self.rank)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl<S: Scalar> SymTensor<S> {
    pub fn zero(dim: usize, rank: usize) -> Self {
        SymTensor {
            dim,
            rank,
            coeffs: BTreeMap::new(),
        }
    }

    /// Rank-0 tensor holding `c`.
    pub fn scalar(dim: usize, c: S) -> Self {
        let mut t = Self::zero(dim, 0);
        t.set(MultiIndex::zeros(dim), c);
        t
    }

    pub fn one(dim: usize) -> Self {
        Self::scalar(dim, S::one())
    }

    pub fn from_coeffs(
        dim: usize,
        rank: usize,
        entries: impl IntoIterator<Item = (MultiIndex, S)>,
    ) -> Result<Self> {
        let mut t = Self::zero(dim, rank);
        for (alpha, c) in entries {
            if alpha.dim() != dim {
                return Err(Error::DimensionMismatch(alpha.dim(), dim));
            }
            if alpha.degree() != rank {
                return Err(Error::RankMismatch(alpha.degree(), rank));
            }
            let acc = t.get(&alpha) + c;
            t.set(alpha, acc);
        }
        Ok(t)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn get(&self, alpha: &MultiIndex) -> S {
        self.coeffs.get(alpha).cloned().unwrap_or_else(S::zero)
    }

    /// Sets `t_α`; zero values are dropped so that equality is structural.
    pub fn set(&mut self, alpha: MultiIndex, c: S) {
        debug_assert_eq!(alpha.degree(), self.rank);
        debug_assert_eq!(alpha.dim(), self.dim);
        if c.is_zero() {
            self.coeffs.remove(&alpha);
        } else {
            self.coeffs.insert(alpha, c);
        }
    }

    fn accumulate(&mut self, alpha: MultiIndex, c: S) {
        let acc = self.get(&alpha) + c;
        self.set(alpha, acc);
    }

    /// Non-zero coefficients in graded-lex order.
    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &S)> {
        self.coeffs.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> SymTensor<T> {
        let mut out = SymTensor::zero(self.dim, self.rank);
        for (a, c) in &self.coeffs {
            out.set(a.clone(), f(c));
        }
        out
    }

    pub fn scale(&self, c: &S) -> Self {
        self.map(|x| x.clone() * c.clone())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        for (a, c) in &other.coeffs {
            out.accumulate(a.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(&-S::one()))
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        if self.rank != other.rank {
            return Err(Error::RankMismatch(self.rank, other.rank));
        }
        Ok(())
    }

    /// `z^⊗n`, with `t_α = (n!/α!) z^α`.
    pub fn pure_power(z: &[S], n: usize) -> Self {
        let dim = z.len();
        let nf = factorial_big(n);
        let mut t = Self::zero(dim, n);
        for alpha in multi_indices(dim, n) {
            let w: S = ratio(&nf, &alpha.factorial());
            let c = w * alpha.monomial(z);
            t.set(alpha, c);
        }
        t
    }

    /// Symmetric tensor product: `p_{A⊗̂B} = p_A · p_B`.
    pub fn sym_product(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        let mut out = Self::zero(self.dim, self.rank + other.rank);
        for (a, x) in &self.coeffs {
            for (b, y) in &other.coeffs {
                out.accumulate(a.plus(b), x.clone() * y.clone());
            }
        }
        Ok(out)
    }

    /// Full pairing `Σ_α (α!/n!) a_α b_α`; on pure powers
    /// `⟨z^⊗n, w^⊗n⟩ = ⟨z, w⟩ⁿ`.
    pub fn pairing(&self, other: &Self) -> Result<S> {
        self.check_same_shape(other)?;
        let nf = factorial_big(self.rank);
        let mut acc = S::zero();
        for (a, x) in &self.coeffs {
            if let Some(y) = other.coeffs.get(a) {
                let w: S = ratio(&a.factorial(), &nf);
                acc = acc + w * x.clone() * y.clone();
            }
        }
        Ok(acc)
    }

    /// Partial contraction of `self` (rank `M`) by `g` (rank `k ≤ M`): the
    /// rank-`(M−k)` tensor `C` with `⟨A, C⟩ = ⟨A ⊗̂ g, self⟩` for every
    /// rank-`(M−k)` tensor `A`.
    pub fn contract(&self, g: &Self) -> Result<Self> {
        if self.dim != g.dim {
            return Err(Error::DimensionMismatch(self.dim, g.dim));
        }
        if g.rank > self.rank {
            return Err(Error::ContractionRank {
                outer: self.rank,
                inner: g.rank,
            });
        }
        let out_rank = self.rank - g.rank;
        let mf = factorial_big(self.rank);
        let rf = factorial_big(out_rank);
        let mut out = Self::zero(self.dim, out_rank);
        // c_δ = ((M−k)!/δ!) Σ_ε ((δ+ε)!/M!) g_ε φ_{δ+ε}
        for (alpha, phi) in &self.coeffs {
            for (eps, gv) in &g.coeffs {
                let Some(delta) = alpha.checked_minus(eps) else {
                    continue;
                };
                let num = &rf * alpha.factorial();
                let den = delta.factorial() * &mf;
                let w: S = ratio(&num, &den);
                out.accumulate(delta, w * gv.clone() * phi.clone());
            }
        }
        Ok(out)
    }

    /// `p_T(θ) = Σ t_α θ^α`.
    pub fn evaluate(&self, theta: &[S]) -> S {
        assert_eq!(theta.len(), self.dim, "evaluation point has wrong dimension");
        self.coeffs
            .iter()
            .fold(S::zero(), |acc, (a, c)| acc + c.clone() * a.monomial(theta))
    }

    /// `|T|_p = sqrt(Σ_α (α!/n!) (a^{pα} |t_α|)²)`.
    pub fn scaled_norm(&self, a: &ScaleVector, p: i32) -> f64 {
        assert_eq!(a.dim(), self.dim, "scale vector has wrong dimension");
        let nf = factorial_big(self.rank);
        let sum: f64 = self
            .coeffs
            .iter()
            .map(|(alpha, c)| {
                let w: f64 = ratio(&alpha.factorial(), &nf);
                let v = a.weight(alpha, p) * c.modulus();
                w * v * v
            })
            .sum();
        sum.sqrt()
    }

    pub fn to_json(&self) -> Value {
        let coeffs: Vec<Value> = self
            .coeffs
            .iter()
            .map(|(a, c)| json!([a.entries(), c.to_json()]))
            .collect();
        json!({
            "dim": self.dim,
            "rank": self.rank,
            "scalar": S::KIND.as_str(),
            "coeffs": coeffs,
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let dim = json_usize(v, "dim")?;
        let rank = json_usize(v, "rank")?;
        if let Some(kind) = v.get("scalar").and_then(Value::as_str) {
            let kind = ScalarKind::parse(kind)?;
            if kind == ScalarKind::Complex && S::KIND != ScalarKind::Complex {
                return Err(Error::Parse("complex tensor for real scalar kind".into()));
            }
        }
        let raw = v
            .get("coeffs")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("tensor: missing `coeffs` array".into()))?;
        let mut entries = Vec::with_capacity(raw.len());
        for item in raw {
            let pair = item
                .as_array()
                .filter(|p| p.len() == 2)
                .ok_or_else(|| Error::Parse("tensor: coefficient must be [index, value]".into()))?;
            let alpha = pair[0]
                .as_array()
                .ok_or_else(|| Error::Parse("tensor: multi-index must be an array".into()))?
                .iter()
                .map(|x| {
                    x.as_u64()
                        .map(|x| x as u32)
                        .ok_or_else(|| Error::Parse("tensor: bad multi-index entry".into()))
                })
                .collect::<Result<Vec<_>>>()?;
            entries.push((MultiIndex::new(alpha), S::from_json(&pair[1])?));
        }
        Self::from_coeffs(dim, rank, entries)
    }
}

pub(crate) fn json_usize(v: &Value, key: &str) -> Result<usize> {
    v.get(key)
        .and_then(Value::as_u64)
        .map(|x| x as usize)
        .ok_or_else(|| Error::Parse(format!("missing or invalid `{key}`")))
}

/// Checks that a tensor has the expected shape; used at module boundaries.
pub(crate) fn expect_shape<S: Scalar>(t: &SymTensor<S>, dim: usize, rank: usize) -> Result<()> {
    if t.dim() != dim {
        return Err(Error::DimensionMismatch(t.dim(), dim));
    }
    if t.rank() != rank {
        return Err(Error::RankMismatch(t.rank(), rank));
    }
    Ok(())
}
