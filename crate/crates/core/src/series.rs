//! Lacunary scalar functions `χ` and truncated multivariate germs `γ`.
//!
//! Both carry data only at degrees divisible by `n1`; index `n` below always
//! refers to the degree `ñ = n·n1`.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::scalar::{binomial, factorial, factorial_big, Scalar};
use crate::symtensor::{expect_shape, json_usize, MultiIndex, SymTensor};

/// Taylor data `χ(s) = Σ_n χ_ñ s^ñ / ñ!` with every stored `χ_ñ ≠ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiFunction<S> {
    n1: usize,
    coeffs: Vec<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChiName {
    Exp,
    Cos,
    /// Kingman's `Λ_s`, parameter `s ≥ −1/2`.
    Kingman(BigRational),
}

impl ChiName {
    pub fn parse(name: &str, s: Option<&BigRational>) -> Result<Self> {
        match name {
            "exp" => Ok(ChiName::Exp),
            "cos" => Ok(ChiName::Cos),
            "kingman" => s
                .cloned()
                .map(ChiName::Kingman)
                .ok_or_else(|| Error::Invalid("kingman chi needs parameter `s`".into())),
            other => Err(Error::Invalid(format!("unknown chi `{other}`"))),
        }
    }

    pub fn natural_n1(&self) -> usize {
        match self {
            ChiName::Exp => 1,
            _ => 2,
        }
    }
}

/// `Γ(s+1) / Γ(s+m+1) = 1 / Π_{j=1}^m (s+j)`, exact for rational `s`.
pub(crate) fn gamma_ratio(s: &BigRational, m: usize) -> BigRational {
    let mut den = BigRational::one();
    for j in 1..=m {
        den *= s + BigRational::from_integer(j.into());
    }
    den.recip()
}

/// Kingman coefficient `(−1/4)^m Γ(s+1)/(m! Γ(s+m+1))` of `u^{2m}`.
pub(crate) fn kingman_lambda_coeff(s: &BigRational, m: usize) -> BigRational {
    let quarter = BigRational::new((-1).into(), 4.into());
    let mut p = BigRational::one();
    for _ in 0..m {
        p *= &quarter;
    }
    p * gamma_ratio(s, m) / BigRational::from_integer(factorial_big(m))
}

impl<S: Scalar> ChiFunction<S> {
    pub fn new(n1: usize, coeffs: Vec<S>) -> Result<Self> {
        if n1 == 0 {
            return Err(Error::Invalid("n1 must be positive".into()));
        }
        if coeffs.is_empty() {
            return Err(Error::Invalid("chi needs at least one coefficient".into()));
        }
        if let Some(n) = coeffs.iter().position(|c| c.is_zero()) {
            return Err(Error::ZeroChiCoefficient(n * n1));
        }
        Ok(ChiFunction { n1, coeffs })
    }

    pub fn named(name: &ChiName, n1: usize, n_max: usize) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::Invalid("N_max must be positive".into()));
        }
        if n1 != name.natural_n1() {
            return Err(Error::Invalid(format!(
                "{name:?} requires n1 = {}, got {n1}",
                name.natural_n1()
            )));
        }
        let coeffs = match name {
            ChiName::Exp => vec![S::one(); n_max + 1],
            ChiName::Cos => (0..=n_max)
                .map(|m| if m % 2 == 0 { S::one() } else { -S::one() })
                .collect(),
            ChiName::Kingman(s) => {
                if *s < BigRational::new((-1).into(), 2.into()) {
                    return Err(Error::Invalid("kingman requires s ≥ -1/2".into()));
                }
                (0..=n_max)
                    .map(|m| {
                        let c = BigRational::from_integer(factorial_big(2 * m))
                            * kingman_lambda_coeff(s, m);
                        S::from_rational(&c)
                    })
                    .collect()
            }
        };
        Self::new(n1, coeffs)
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    /// Largest stored `n`.
    pub fn n_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `χ_ñ`.
    pub fn coeff(&self, n: usize) -> Result<&S> {
        self.coeffs.get(n).ok_or(Error::Truncation {
            what: "chi",
            needed: n,
            available: self.n_max(),
        })
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn truncated(&self, n_max: usize) -> Result<Self> {
        self.coeff(n_max)?;
        Ok(ChiFunction {
            n1: self.n1,
            coeffs: self.coeffs[..=n_max].to_vec(),
        })
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Result<ChiFunction<T>> {
        ChiFunction::new(self.n1, self.coeffs.iter().map(f).collect())
    }

    /// Truncated `χ(s)`.
    pub fn evaluate(&self, s: &S) -> S {
        let mut acc = S::zero();
        for (n, c) in self.coeffs.iter().enumerate() {
            let deg = n * self.n1;
            let mut term = c.clone() / factorial::<S>(deg);
            for _ in 0..deg {
                term = term * s.clone();
            }
            acc = acc + term;
        }
        acc
    }

    pub fn to_json(&self) -> Value {
        json!({
            "n1": self.n1,
            "scalar": S::KIND.as_str(),
            "coeffs": self.coeffs.iter().map(Scalar::to_json).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let n1 = json_usize(v, "n1")?;
        let coeffs = v
            .get("coeffs")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("chi: missing `coeffs`".into()))?
            .iter()
            .map(S::from_json)
            .collect::<Result<Vec<_>>>()?;
        Self::new(n1, coeffs)
    }
}

/// Truncated germ `γ(θ) = Σ_n (1/ñ!) ⟨γ_ñ, θ^⊗ñ⟩` with `γ₀ ≠ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Germ<S> {
    dim: usize,
    n1: usize,
    kernels: Vec<SymTensor<S>>,
}

impl<S: Scalar> Germ<S> {
    pub fn new(dim: usize, n1: usize, kernels: Vec<SymTensor<S>>) -> Result<Self> {
        if n1 == 0 || dim == 0 {
            return Err(Error::Invalid("dim and n1 must be positive".into()));
        }
        if kernels.is_empty() {
            return Err(Error::Invalid("germ needs a constant kernel".into()));
        }
        for (n, k) in kernels.iter().enumerate() {
            expect_shape(k, dim, n * n1)?;
        }
        if kernels[0].is_zero() {
            return Err(Error::ZeroConstantTerm);
        }
        Ok(Germ { dim, n1, kernels })
    }

    /// The constant germ `1`, stored to `k_max`.
    pub fn unit(dim: usize, n1: usize, k_max: usize) -> Self {
        Self::constant(dim, n1, k_max, S::one()).expect("unit germ is valid")
    }

    pub fn constant(dim: usize, n1: usize, k_max: usize, c: S) -> Result<Self> {
        let mut kernels = vec![SymTensor::scalar(dim, c)];
        kernels.extend((1..=k_max).map(|n| SymTensor::zero(dim, n * n1)));
        Self::new(dim, n1, kernels)
    }

    /// `e^{−|θ|²/2}` for `n1 ∈ {1, 2}`, kernels up to index `k_max`.
    pub fn gaussian(dim: usize, n1: usize, k_max: usize) -> Result<Self> {
        if n1 != 1 && n1 != 2 {
            return Err(Error::Invalid("gaussian germ needs n1 ∈ {1, 2}".into()));
        }
        let mut sq = SymTensor::zero(dim, 2);
        for i in 0..dim {
            let mut e = vec![0; dim];
            e[i] = 2;
            sq.set(MultiIndex::new(e), S::one());
        }
        let half = S::one() / S::from_i64(-2);
        // term_k = (−|θ|²/2)^k / k! as a polynomial
        let mut term = SymTensor::one(dim);
        let mut kernels = Vec::with_capacity(k_max + 1);
        for n in 0..=k_max {
            let deg = n * n1;
            if deg % 2 == 1 {
                kernels.push(SymTensor::zero(dim, deg));
                continue;
            }
            let k = deg / 2;
            while term.rank() < deg {
                let next = term.rank() / 2 + 1;
                term = term
                    .sym_product(&sq)?
                    .scale(&(half.clone() / S::from_i64(next as i64)));
            }
            debug_assert_eq!(term.rank(), 2 * k);
            kernels.push(term.scale(&factorial::<S>(deg)));
        }
        Self::new(dim, n1, kernels)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn k_max(&self) -> usize {
        self.kernels.len() - 1
    }

    /// `γ_ñ`.
    pub fn kernel(&self, n: usize) -> Result<&SymTensor<S>> {
        self.kernels.get(n).ok_or(Error::Truncation {
            what: "germ",
            needed: n,
            available: self.k_max(),
        })
    }

    pub fn kernels(&self) -> &[SymTensor<S>] {
        &self.kernels
    }

    pub fn constant_term(&self) -> S {
        self.kernels[0].get(&MultiIndex::zeros(self.dim))
    }

    pub fn is_unit(&self) -> bool {
        self.constant_term() == S::one() && self.kernels[1..].iter().all(SymTensor::is_zero)
    }

    pub fn truncated(&self, k_max: usize) -> Result<Self> {
        self.kernel(k_max)?;
        Self::new(self.dim, self.n1, self.kernels[..=k_max].to_vec())
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Result<Germ<T>> {
        Germ::new(
            self.dim,
            self.n1,
            self.kernels.iter().map(|k| k.map(&f)).collect(),
        )
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        if self.n1 != other.n1 {
            return Err(Error::N1Mismatch(self.n1, other.n1));
        }
        Ok(())
    }

    /// Pointwise product, truncated to the shorter of the two.
    pub fn product(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let k_max = self.k_max().min(other.k_max());
        let mut kernels = Vec::with_capacity(k_max + 1);
        for n in 0..=k_max {
            let deg = n * self.n1;
            let mut acc = SymTensor::zero(self.dim, deg);
            for j in 0..=n {
                let term = self.kernels[j].sym_product(&other.kernels[n - j])?;
                acc = acc.add(&term.scale(&binomial(deg, j * self.n1)))?;
            }
            kernels.push(acc);
        }
        Self::new(self.dim, self.n1, kernels)
    }

    /// `1/γ`, solved degree by degree.
    pub fn reciprocal(&self) -> Result<Self> {
        let unit = Self::unit(self.dim, self.n1, self.k_max());
        unit.quotient(self)
    }

    /// `self / other`: the germ `q` with `q · other = self` at every stored
    /// degree.
    pub fn quotient(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let c0 = other.constant_term();
        if c0.is_zero() {
            return Err(Error::ZeroConstantTerm);
        }
        let k_max = self.k_max().min(other.k_max());
        let mut out: Vec<SymTensor<S>> = Vec::with_capacity(k_max + 1);
        for n in 0..=k_max {
            let deg = n * self.n1;
            let mut rhs = self.kernels[n].clone();
            for k in 1..=n {
                let term = out[n - k].sym_product(&other.kernels[k])?;
                rhs = rhs.sub(&term.scale(&binomial(deg, k * self.n1)))?;
            }
            out.push(rhs.scale(&(S::one() / c0.clone())));
        }
        Self::new(self.dim, self.n1, out)
    }

    /// Truncated `γ(θ)`.
    pub fn evaluate(&self, theta: &[S]) -> S {
        self.kernels.iter().fold(S::zero(), |acc, k| {
            acc + k.evaluate(theta) / factorial::<S>(k.rank())
        })
    }

    pub fn to_json(&self) -> Value {
        json!({
            "n1": self.n1,
            "d": self.dim,
            "scalar": S::KIND.as_str(),
            "kernels": self.kernels.iter().map(SymTensor::to_json).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let n1 = json_usize(v, "n1")?;
        let dim = json_usize(v, "d")?;
        let kernels = v
            .get("kernels")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("germ: missing `kernels`".into()))?
            .iter()
            .map(SymTensor::from_json)
            .collect::<Result<Vec<_>>>()?;
        Self::new(dim, n1, kernels)
    }
}

/// Non-zero check on every stored Kingman coefficient.
pub fn kingman_coefficients_nonzero(s: &BigRational, n_max: usize) -> bool {
    (0..=n_max).all(|m| !kingman_lambda_coeff(s, m).is_zero())
}

/// Sign pattern of Kingman coefficients: `(−1)^m`.
pub fn kingman_signs_alternate(s: &BigRational, n_max: usize) -> bool {
    (0..=n_max).all(|m| {
        let c = kingman_lambda_coeff(s, m);
        if m % 2 == 0 {
            c.is_positive()
        } else {
            c.is_negative()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    type Q = BigRational;

    fn q(n: i64) -> Q {
        Q::from_integer(n.into())
    }

    fn qr(n: i64, d: i64) -> Q {
        Q::new(n.into(), d.into())
    }

    fn germ1(coeffs: &[Q]) -> Germ<Q> {
        let kernels = coeffs
            .iter()
            .enumerate()
            .map(|(n, c)| SymTensor::from_coeffs(1, n, [(MultiIndex::new(vec![n as u32]), c.clone())]).unwrap())
            .collect();
        Germ::new(1, 1, kernels).unwrap()
    }

    #[test]
    fn named_chi_values() {
        let e: ChiFunction<Q> = ChiFunction::named(&ChiName::Exp, 1, 6).unwrap();
        assert_eq!(e.coeff(5).unwrap(), &q(1));
        let k: ChiFunction<Q> = ChiFunction::named(&ChiName::Kingman(qr(-1, 2)), 2, 5).unwrap();
        assert_eq!(k.coeff(3).unwrap(), &q(-1));
        assert_eq!(k.coeff(0).unwrap(), &q(1));
        let k: ChiFunction<Q> = ChiFunction::named(&ChiName::Kingman(qr(1, 2)), 2, 3).unwrap();
        assert_eq!(k.coeff(1).unwrap(), &qr(-1, 3));
        let c: ChiFunction<Q> = ChiFunction::named(&ChiName::Cos, 2, 4).unwrap();
        assert_eq!(c.coeffs(), &[q(1), q(-1), q(1), q(-1), q(1)]);
    }

    #[test]
    fn named_chi_errors() {
        assert!(ChiFunction::<Q>::named(&ChiName::Exp, 1, 0).is_err());
        assert!(ChiFunction::<Q>::named(&ChiName::Kingman(q(1)), 1, 3).is_err());
        assert!(ChiFunction::<Q>::named(&ChiName::Kingman(q(-1)), 2, 3).is_err());
        assert!(matches!(
            ChiFunction::new(2, vec![q(1), q(0)]),
            Err(Error::ZeroChiCoefficient(2))
        ));
    }

    #[test]
    fn kingman_coefficients_are_nonzero_and_alternate() {
        for s in [qr(-1, 2), q(0), qr(1, 2), q(1), q(5), qr(7, 3)] {
            assert!(kingman_coefficients_nonzero(&s, 30));
            assert!(kingman_signs_alternate(&s, 30));
        }
    }

    #[test]
    fn reciprocal_of_one_minus_half_square() {
        let g = germ1(&[q(1), q(0), q(-1), q(0), q(0)]);
        let r = g.reciprocal().unwrap();
        assert_eq!(r.kernel(2).unwrap().get(&MultiIndex::new(vec![2])), q(1));
        assert_eq!(r.kernel(4).unwrap().get(&MultiIndex::new(vec![4])), q(6));
        assert!(g.product(&r).unwrap().is_unit());
    }

    #[test]
    fn reciprocal_of_constant() {
        let g = Germ::constant(2, 2, 3, q(4)).unwrap();
        let r = g.reciprocal().unwrap();
        assert_eq!(r.constant_term(), qr(1, 4));
        assert!(r.kernels()[1..].iter().all(SymTensor::is_zero));
    }

    #[test]
    fn zero_constant_rejected() {
        let k = vec![SymTensor::<Q>::zero(1, 0), SymTensor::zero(1, 1)];
        assert!(matches!(Germ::new(1, 1, k), Err(Error::ZeroConstantTerm)));
    }

    #[test]
    fn product_example() {
        // (1+θ²)(1−θ²) = 1−θ⁴; kernels carry ñ! factors.
        let a = germ1(&[q(1), q(0), q(2), q(0), q(0)]);
        let b = germ1(&[q(1), q(0), q(-2), q(0), q(0)]);
        let p = a.product(&b).unwrap();
        let expect = germ1(&[q(1), q(0), q(0), q(0), q(-24)]);
        assert_eq!(p, expect);
        let c = Germ::constant(1, 1, 4, qr(3, 2)).unwrap();
        let scaled = c.product(&a).unwrap();
        for (x, y) in scaled.kernels().iter().zip(a.kernels()) {
            assert_eq!(x, &y.scale(&qr(3, 2)));
        }
    }

    #[test]
    fn quotient_identities() {
        let g = Germ::gaussian(2, 2, 3).unwrap().map(|x: &Q| x.clone()).unwrap();
        let unit = Germ::unit(2, 2, 3);
        assert!(g.quotient(&g).unwrap().is_unit());
        assert_eq!(g.quotient(&unit).unwrap(), g);
    }

    #[test]
    fn evaluate_examples() {
        let g = germ1(&[q(1), q(0), q(-1)]);
        assert_eq!(g.evaluate(&[q(1)]), qr(1, 2));
        assert_eq!(g.evaluate(&[q(0)]), q(1));
        assert_eq!(Germ::<Q>::unit(2, 1, 3).evaluate(&[q(5), q(-2)]), q(1));
    }

    #[test]
    fn gaussian_germ_kernels() {
        let g: Germ<Q> = Germ::gaussian(1, 1, 6).unwrap();
        let vals: Vec<Q> = (0..=6)
            .map(|n| g.kernel(n).unwrap().get(&MultiIndex::new(vec![n as u32])))
            .collect();
        assert_eq!(vals, vec![q(1), q(0), q(-1), q(0), q(3), q(0), q(-15)]);
        let g2: Germ<f64> = Germ::gaussian(2, 2, 6).unwrap();
        let th = [0.3, -0.4];
        assert!((g2.evaluate(&th) - (-0.125f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn json_round_trip() {
        let g: Germ<Q> = Germ::gaussian(2, 1, 3).unwrap();
        assert_eq!(Germ::<Q>::from_json(&g.to_json()).unwrap(), g);
        let c: ChiFunction<Q> = ChiFunction::named(&ChiName::Kingman(qr(1, 2)), 2, 4).unwrap();
        assert_eq!(ChiFunction::<Q>::from_json(&c.to_json()).unwrap(), c);
        assert_eq!(c.to_json()["scalar"], "rational");
    }

    #[test]
    fn chi_evaluate_cos() {
        let c: ChiFunction<f64> = ChiFunction::named(&ChiName::Cos, 2, 12).unwrap();
        assert!((c.evaluate(&1.3) - 1.3f64.cos()).abs() < 1e-14);
    }
}
