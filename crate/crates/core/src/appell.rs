//! The `n1`-Appell-like polynomial system `P^{χ,γ}`.
//!
//! `P_ñ(z)` is the degree-`ñ` Taylor kernel (in `θ`) of the generating
//! function `γ(θ) χ(⟨z, θ⟩)`. Elements of the truncated polynomial space
//! carry either monomial coordinates `f^(m̃)` (meaning `Σ ⟨x^⊗m̃, f^(m̃)⟩`) or
//! Appell coordinates `φ^(ñ)` (meaning `Σ ⟨P_ñ(x), φ^(ñ)⟩`).

use std::collections::BTreeMap;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::scalar::{binomial, factorial, factorial_big, ratio, Scalar};
use crate::series::{ChiFunction, Germ};
use crate::symtensor::{expect_shape, json_usize, multi_indices, MultiIndex, ScaleVector, SymTensor};

#[derive(Debug, Clone, PartialEq)]
pub struct AppellSystem<S> {
    chi: ChiFunction<S>,
    gamma: Germ<S>,
    n_cap: usize,
}

impl<S: Scalar> AppellSystem<S> {
    pub fn new(chi: ChiFunction<S>, gamma: Germ<S>, n_cap: usize) -> Result<Self> {
        if chi.n1() != gamma.n1() {
            return Err(Error::N1Mismatch(chi.n1(), gamma.n1()));
        }
        chi.coeff(n_cap)?;
        gamma.kernel(n_cap)?;
        Ok(AppellSystem { chi, gamma, n_cap })
    }

    pub fn chi(&self) -> &ChiFunction<S> {
        &self.chi
    }

    pub fn gamma(&self) -> &Germ<S> {
        &self.gamma
    }

    pub fn dim(&self) -> usize {
        self.gamma.dim()
    }

    pub fn n1(&self) -> usize {
        self.chi.n1()
    }

    /// Degree cap `N`: blocks `0..=N` are available.
    pub fn n_cap(&self) -> usize {
        self.n_cap
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T + Copy) -> Result<AppellSystem<T>> {
        AppellSystem::new(self.chi.map(f)?, self.gamma.map(f)?, self.n_cap)
    }

    fn check_point(&self, z: &[S]) -> Result<()> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch(z.len(), self.dim()));
        }
        Ok(())
    }

    /// `P_ñ(z) = Σ_{m≤n} C(ñ, m̃) χ_m̃ z^⊗m̃ ⊗̂ γ_{ñ−m̃}`.
    pub fn p_kernel(&self, n: usize, z: &[S]) -> Result<SymTensor<S>> {
        if n > self.n_cap {
            return Err(Error::Truncation {
                what: "appell system",
                needed: n,
                available: self.n_cap,
            });
        }
        self.check_point(z)?;
        let n1 = self.n1();
        let deg = n * n1;
        let mut acc = SymTensor::zero(self.dim(), deg);
        for m in 0..=n {
            let c = binomial::<S>(deg, m * n1) * self.chi.coeff(m)?.clone();
            let term = SymTensor::pure_power(z, m * n1).sym_product(self.gamma.kernel(n - m)?)?;
            acc = acc.add(&term.scale(&c))?;
        }
        Ok(acc)
    }

    /// `P_ñ(x)` as a tensor of polynomials in `x`: component `α` maps to
    /// its monomial coefficients `x^δ ↦ c`, zero entries omitted.
    pub fn p_kernel_polynomial(&self, n: usize) -> Result<BTreeMap<MultiIndex, BTreeMap<MultiIndex, S>>> {
        if n > self.n_cap {
            return Err(Error::Truncation {
                what: "appell system",
                needed: n,
                available: self.n_cap,
            });
        }
        let n1 = self.n1();
        let deg = n * n1;
        let mut out: BTreeMap<MultiIndex, BTreeMap<MultiIndex, S>> = BTreeMap::new();
        for m in 0..=n {
            let c = binomial::<S>(deg, m * n1) * self.chi.coeff(m)?.clone();
            let mf = factorial_big(m * n1);
            for (eps, g) in self.gamma.kernel(n - m)?.iter() {
                for delta in multi_indices(self.dim(), m * n1) {
                    let w: S = ratio(&mf, &delta.factorial());
                    let alpha = delta.plus(eps);
                    let entry = out.entry(alpha).or_default().entry(delta).or_insert_with(S::zero);
                    *entry = entry.clone() + c.clone() * w * g.clone();
                }
            }
        }
        for poly in out.values_mut() {
            poly.retain(|_, v| !v.is_zero());
        }
        out.retain(|_, poly| !poly.is_empty());
        Ok(out)
    }

    /// Appell coordinates → monomial coordinates:
    /// `f^(m̃) = Σ_{n≥m} C(ñ, m̃) χ_m̃ contract(φ^(ñ), γ_{ñ−m̃})`.
    pub fn appell_to_monomial(&self, e: &PolyElement<S>) -> Result<PolyElement<S>> {
        self.check_element(e, Basis::Appell)?;
        let n1 = self.n1();
        let top = e.top();
        let mut blocks = Vec::with_capacity(top + 1);
        for m in 0..=top {
            let mut acc = SymTensor::zero(self.dim(), m * n1);
            let chi_m = self.chi.coeff(m)?.clone();
            for n in m..=top {
                let phi = &e.blocks[n];
                if phi.is_zero() {
                    continue;
                }
                let c = binomial::<S>(n * n1, m * n1) * chi_m.clone();
                let term = phi.contract(self.gamma.kernel(n - m)?)?;
                acc = acc.add(&term.scale(&c))?;
            }
            blocks.push(acc);
        }
        PolyElement::new(self.dim(), n1, Basis::Monomial, blocks)
    }

    /// Exact inverse of [`Self::appell_to_monomial`]: block-triangular
    /// elimination from the top degree down, diagonal factor `χ_m̃ γ₀`.
    pub fn monomial_to_appell(&self, e: &PolyElement<S>) -> Result<PolyElement<S>> {
        self.check_element(e, Basis::Monomial)?;
        let n1 = self.n1();
        let top = e.top();
        let g0 = self.gamma.constant_term();
        let mut phi: Vec<SymTensor<S>> = vec![SymTensor::zero(self.dim(), 0); top + 1];
        for m in (0..=top).rev() {
            let chi_m = self.chi.coeff(m)?.clone();
            let mut rhs = e.blocks[m].clone();
            for n in m + 1..=top {
                if phi[n].is_zero() {
                    continue;
                }
                let c = binomial::<S>(n * n1, m * n1) * chi_m.clone();
                let term = phi[n].contract(self.gamma.kernel(n - m)?)?;
                rhs = rhs.sub(&term.scale(&c))?;
            }
            phi[m] = rhs.scale(&(S::one() / (chi_m * g0.clone())));
        }
        PolyElement::new(self.dim(), n1, Basis::Appell, phi)
    }

    /// Value of `e` at `x`, in whichever coordinates `e` carries.
    pub fn evaluate_poly(&self, e: &PolyElement<S>, x: &[S]) -> Result<S> {
        if e.dim != self.dim() {
            return Err(Error::DimensionMismatch(e.dim, self.dim()));
        }
        if e.n1 != self.n1() {
            return Err(Error::N1Mismatch(e.n1, self.n1()));
        }
        self.check_point(x)?;
        match e.basis {
            Basis::Monomial => Ok(e.evaluate_monomial(x)),
            Basis::Appell => {
                let mut acc = S::zero();
                for (n, phi) in e.blocks.iter().enumerate() {
                    if phi.is_zero() {
                        continue;
                    }
                    acc = acc + self.p_kernel(n, x)?.pairing(phi)?;
                }
                Ok(acc)
            }
        }
    }

    /// Converts to monomial coordinates if needed.
    pub fn to_monomial(&self, e: &PolyElement<S>) -> Result<PolyElement<S>> {
        match e.basis {
            Basis::Monomial => Ok(e.clone()),
            Basis::Appell => self.appell_to_monomial(e),
        }
    }

    fn check_element(&self, e: &PolyElement<S>, basis: Basis) -> Result<()> {
        if e.basis != basis {
            return Err(Error::BasisMismatch {
                expected: basis.as_str(),
                found: e.basis.as_str(),
            });
        }
        if e.dim != self.dim() {
            return Err(Error::DimensionMismatch(e.dim, self.dim()));
        }
        if e.n1 != self.n1() {
            return Err(Error::N1Mismatch(e.n1, self.n1()));
        }
        if e.top() > self.n_cap {
            return Err(Error::Truncation {
                what: "appell system",
                needed: e.top(),
                available: self.n_cap,
            });
        }
        Ok(())
    }
}

/// Right-hand side of the γ-change identity:
/// `Σ_{m≤n} C(ñ, m̃) P^{χ,γ₂}_m̃(z) ⊗̂ γ̂_{ñ−m̃}` with `γ̂ = γ₁/γ₂`.
pub fn gamma_change_rhs<S: Scalar>(
    sys1: &AppellSystem<S>,
    sys2: &AppellSystem<S>,
    n: usize,
    z: &[S],
) -> Result<SymTensor<S>> {
    if sys1.chi != sys2.chi {
        return Err(Error::ChiMismatch);
    }
    if sys1.dim() != sys2.dim() {
        return Err(Error::DimensionMismatch(sys1.dim(), sys2.dim()));
    }
    let hat = sys1.gamma.quotient(&sys2.gamma)?;
    let n1 = sys1.n1();
    let deg = n * n1;
    let mut acc = SymTensor::zero(sys1.dim(), deg);
    for m in 0..=n {
        let term = sys2.p_kernel(m, z)?.sym_product(hat.kernel(n - m)?)?;
        acc = acc.add(&term.scale(&binomial(deg, m * n1)))?;
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    Monomial,
    Appell,
}

impl Basis {
    pub fn as_str(self) -> &'static str {
        match self {
            Basis::Monomial => "monomial",
            Basis::Appell => "appell",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "monomial" => Ok(Basis::Monomial),
            "appell" => Ok(Basis::Appell),
            other => Err(Error::Parse(format!("unknown basis `{other}`"))),
        }
    }
}

/// Element of the truncated space: block `m` is a rank-`m·n1` tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyElement<S> {
    dim: usize,
    n1: usize,
    basis: Basis,
    blocks: Vec<SymTensor<S>>,
}

impl<S: Scalar> PolyElement<S> {
    pub fn new(dim: usize, n1: usize, basis: Basis, blocks: Vec<SymTensor<S>>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::Invalid("element needs at least one block".into()));
        }
        for (m, b) in blocks.iter().enumerate() {
            expect_shape(b, dim, m * n1)?;
        }
        Ok(PolyElement {
            dim,
            n1,
            basis,
            blocks,
        })
    }

    pub fn zero(dim: usize, n1: usize, basis: Basis, top: usize) -> Self {
        let blocks = (0..=top).map(|m| SymTensor::zero(dim, m * n1)).collect();
        PolyElement {
            dim,
            n1,
            basis,
            blocks,
        }
    }

    /// Element whose only non-zero block is `t` at block `n` (blocks run to `top`).
    pub fn single(n1: usize, basis: Basis, n: usize, t: SymTensor<S>, top: usize) -> Result<Self> {
        let dim = t.dim();
        let mut e = Self::zero(dim, n1, basis, top.max(n));
        expect_shape(&t, dim, n * n1)?;
        e.blocks[n] = t;
        Ok(e)
    }

    pub fn constant(dim: usize, n1: usize, basis: Basis, c: S) -> Self {
        PolyElement {
            dim,
            n1,
            basis,
            blocks: vec![SymTensor::scalar(dim, c)],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn blocks(&self) -> &[SymTensor<S>] {
        &self.blocks
    }

    /// Index of the last stored block.
    pub fn top(&self) -> usize {
        self.blocks.len() - 1
    }

    pub fn block(&self, m: usize) -> Option<&SymTensor<S>> {
        self.blocks.get(m)
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.iter().all(SymTensor::is_zero)
    }

    /// Pads with zero blocks up to `top` (never truncates).
    pub fn padded(&self, top: usize) -> Self {
        let mut out = self.clone();
        while out.top() < top {
            let m = out.blocks.len();
            out.blocks.push(SymTensor::zero(self.dim, m * self.n1));
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.basis != other.basis {
            return Err(Error::BasisMismatch {
                expected: self.basis.as_str(),
                found: other.basis.as_str(),
            });
        }
        if self.n1 != other.n1 {
            return Err(Error::N1Mismatch(self.n1, other.n1));
        }
        let top = self.top().max(other.top());
        let a = self.padded(top);
        let b = other.padded(top);
        let blocks = a
            .blocks
            .iter()
            .zip(&b.blocks)
            .map(|(x, y)| x.add(y))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.dim, self.n1, self.basis, blocks)
    }

    pub fn scale(&self, c: &S) -> Self {
        PolyElement {
            blocks: self.blocks.iter().map(|b| b.scale(c)).collect(),
            ..self.clone()
        }
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> PolyElement<T> {
        PolyElement {
            dim: self.dim,
            n1: self.n1,
            basis: self.basis,
            blocks: self.blocks.iter().map(|b| b.map(&f)).collect(),
        }
    }

    /// `Σ_m ⟨x^⊗m̃, f^(m̃)⟩`, reading the blocks as monomial coordinates.
    pub fn evaluate_monomial(&self, x: &[S]) -> S {
        self.blocks
            .iter()
            .fold(S::zero(), |acc, b| acc + b.evaluate(x))
    }

    /// `‖φ‖_{p,q} = sqrt(Σ_n (ñ!)² 2^{qñ} |φ^(ñ)|_p²)` over the stored blocks.
    pub fn pq_norm(&self, p: i32, q: i32, a: &ScaleVector) -> f64 {
        let sum: f64 = self
            .blocks
            .iter()
            .map(|b| {
                let deg = b.rank();
                let f: f64 = factorial(deg);
                let w = f * f * 2f64.powi(q * deg as i32);
                let nb = b.scaled_norm(a, p);
                w * nb * nb
            })
            .sum();
        sum.sqrt()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "basis": self.basis.as_str(),
            "n1": self.n1,
            "d": self.dim,
            "blocks": self.blocks.iter().map(SymTensor::to_json).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let basis = Basis::parse(
            v.get("basis")
                .and_then(Value::as_str)
                .ok_or_else(|| Error::Parse("element: missing `basis`".into()))?,
        )?;
        let (dim, n1, blocks) = blocks_from_json(v)?;
        Self::new(dim, n1, basis, blocks)
    }
}

pub(crate) fn blocks_from_json<S: Scalar>(v: &Value) -> Result<(usize, usize, Vec<SymTensor<S>>)> {
    let n1 = json_usize(v, "n1")?;
    let dim = json_usize(v, "d")?;
    let blocks = v
        .get("blocks")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Parse("missing `blocks`".into()))?
        .iter()
        .map(SymTensor::from_json)
        .collect::<Result<Vec<_>>>()?;
    Ok((dim, n1, blocks))
}

/// Per-block gain of the Appell → monomial conversion measured in the
/// `(p, q)` norm: for block `n`, the largest ratio
/// `‖appell_to_monomial(e)‖ / ‖e‖` over unit coordinate tensors `e`.
pub fn conversion_gains<S: Scalar>(
    sys: &AppellSystem<S>,
    p: i32,
    q: i32,
    a: &ScaleVector,
) -> Result<Vec<f64>> {
    let n1 = sys.n1();
    let mut out = Vec::with_capacity(sys.n_cap() + 1);
    for n in 0..=sys.n_cap() {
        let mut best = 0f64;
        for alpha in multi_indices(sys.dim(), n * n1) {
            let t = SymTensor::from_coeffs(sys.dim(), n * n1, [(alpha, S::one())])?;
            let e = PolyElement::single(n1, Basis::Appell, n, t, n)?;
            let image = sys.appell_to_monomial(&e)?;
            best = best.max(image.pq_norm(p, q, a) / e.pq_norm(p, q, a));
        }
        out.push(best);
    }
    Ok(out)
}
