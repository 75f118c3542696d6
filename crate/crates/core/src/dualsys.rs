//! Generalized functions on the truncated polynomial space and the dual
//! Q-system.
//!
//! A functional is stored by its monomial-block action tensors `U^(m̃)`:
//! `⟨⟨F, f⟩⟩ = Σ_m ⟨U^(m̃), f^(m̃)⟩` for `f` in monomial coordinates. The
//! Q-functionals have the closed form
//!
//! ```text
//! U^(j̃) = 1_{j≥m} · j̃! χ₀ / ((j−m)~! χ_j̃) · Φ ⊗̂ γ̃_{(j−m)~},   γ̃ = kernels of 1/γ
//! ```
//!
//! and pair against the P-system as `δ_{mn} · χ₀ · ñ! · ⟨Φ, φ⟩`.

use serde_json::{json, Value};

use crate::appell::{blocks_from_json, AppellSystem, Basis, PolyElement};
use crate::dchi::DOperator;
use crate::error::{Error, Result};
use crate::scalar::{binomial, factorial, Scalar};
use crate::symtensor::{expect_shape, SymTensor};

#[derive(Debug, Clone, PartialEq)]
pub struct DualFunctional<S> {
    dim: usize,
    n1: usize,
    blocks: Vec<SymTensor<S>>,
}

impl<S: Scalar> DualFunctional<S> {
    pub fn new(dim: usize, n1: usize, blocks: Vec<SymTensor<S>>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::Invalid("functional needs at least one block".into()));
        }
        for (m, b) in blocks.iter().enumerate() {
            expect_shape(b, dim, m * n1)?;
        }
        Ok(DualFunctional { dim, n1, blocks })
    }

    pub fn zero(dim: usize, n1: usize, top: usize) -> Self {
        DualFunctional {
            dim,
            n1,
            blocks: (0..=top).map(|m| SymTensor::zero(dim, m * n1)).collect(),
        }
    }

    /// `δ_z`: `U^(m̃) = z^⊗m̃`, so pairing evaluates at `z`.
    pub fn delta(z: &[S], n1: usize, top: usize) -> Self {
        DualFunctional {
            dim: z.len(),
            n1,
            blocks: (0..=top).map(|m| SymTensor::pure_power(z, m * n1)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn top(&self) -> usize {
        self.blocks.len() - 1
    }

    pub fn blocks(&self) -> &[SymTensor<S>] {
        &self.blocks
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.iter().all(SymTensor::is_zero)
    }

    /// Pads with zero blocks, or drops blocks above `top`.
    pub fn resized(&self, top: usize) -> Self {
        let blocks = (0..=top)
            .map(|m| {
                self.blocks
                    .get(m)
                    .cloned()
                    .unwrap_or_else(|| SymTensor::zero(self.dim, m * self.n1))
            })
            .collect();
        DualFunctional {
            blocks,
            ..self.clone()
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.n1 != other.n1 {
            return Err(Error::N1Mismatch(self.n1, other.n1));
        }
        let top = self.top().max(other.top());
        let (a, b) = (self.resized(top), other.resized(top));
        let blocks = a
            .blocks
            .iter()
            .zip(&b.blocks)
            .map(|(x, y)| x.add(y))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.dim, self.n1, blocks)
    }

    pub fn scale(&self, c: &S) -> Self {
        DualFunctional {
            blocks: self.blocks.iter().map(|b| b.scale(c)).collect(),
            ..self.clone()
        }
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> DualFunctional<T> {
        DualFunctional {
            dim: self.dim,
            n1: self.n1,
            blocks: self.blocks.iter().map(|b| b.map(&f)).collect(),
        }
    }

    /// `⟨⟨F, e⟩⟩` for `e` in monomial coordinates.
    pub fn pair(&self, e: &PolyElement<S>) -> Result<S> {
        if e.basis() != Basis::Monomial {
            return Err(Error::BasisMismatch {
                expected: "monomial",
                found: e.basis().as_str(),
            });
        }
        if e.dim() != self.dim {
            return Err(Error::DimensionMismatch(e.dim(), self.dim));
        }
        if e.n1() != self.n1 {
            return Err(Error::N1Mismatch(e.n1(), self.n1));
        }
        let mut acc = S::zero();
        for (m, f) in e.blocks().iter().enumerate() {
            if f.is_zero() {
                continue;
            }
            let u = self.blocks.get(m).ok_or(Error::Truncation {
                what: "functional",
                needed: m,
                available: self.top(),
            })?;
            acc = acc + u.pairing(f)?;
        }
        Ok(acc)
    }

    /// Pairing with an element in either basis (Appell coordinates are
    /// converted through `sys` first).
    pub fn pair_in(&self, sys: &AppellSystem<S>, e: &PolyElement<S>) -> Result<S> {
        self.pair(&sys.to_monomial(e)?)
    }

    /// Dual operator: `⟨⟨D* F, f⟩⟩ = ⟨⟨F, D f⟩⟩`. The result acts on blocks up
    /// to `top + n`.
    pub fn adjoint_apply(&self, op: &DOperator<S>) -> Result<Self> {
        if op.symbol().dim() != self.dim {
            return Err(Error::DimensionMismatch(op.symbol().dim(), self.dim));
        }
        if op.n1() != self.n1 {
            return Err(Error::N1Mismatch(op.n1(), self.n1));
        }
        let n = op.order();
        let top = self.top() + n;
        let mut blocks = Vec::with_capacity(top + 1);
        for j in 0..=top {
            if j < n || self.blocks[j - n].is_zero() {
                blocks.push(SymTensor::zero(self.dim, j * self.n1));
                continue;
            }
            let b = self.blocks[j - n].sym_product(op.symbol())?;
            blocks.push(b.scale(&op.monomial_factor(j)?));
        }
        Self::new(self.dim, self.n1, blocks)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "dual": true,
            "n1": self.n1,
            "d": self.dim,
            "blocks": self.blocks.iter().map(SymTensor::to_json).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        if v.get("dual").and_then(Value::as_bool) != Some(true) {
            return Err(Error::Parse("functional: expected `\"dual\": true`".into()));
        }
        let (dim, n1, blocks) = blocks_from_json(v)?;
        Self::new(dim, n1, blocks)
    }
}

fn check_kernel<S: Scalar>(sys: &AppellSystem<S>, m: usize, phi: &SymTensor<S>) -> Result<()> {
    expect_shape(phi, sys.dim(), m * sys.n1())
}

/// `Q_m̃(Φ; ·)` truncated to blocks `0..=top`, closed form.
pub fn q_functional<S: Scalar>(
    sys: &AppellSystem<S>,
    m: usize,
    phi: &SymTensor<S>,
    top: usize,
) -> Result<DualFunctional<S>> {
    check_kernel(sys, m, phi)?;
    if m > top {
        return Err(Error::Invalid(format!("Q index {m} above truncation {top}")));
    }
    let n1 = sys.n1();
    let inv = sys.gamma().reciprocal()?;
    let chi = sys.chi();
    let chi0 = chi.coeff(0)?.clone();
    let mut out = DualFunctional::zero(sys.dim(), n1, top);
    for j in m..=top {
        let c = factorial::<S>(j * n1) * chi0.clone()
            / (factorial::<S>((j - m) * n1) * chi.coeff(j)?.clone());
        out.blocks[j] = phi.sym_product(inv.kernel(j - m)?)?.scale(&c);
    }
    Ok(out)
}

/// `Q_m̃(Φ; ·)` from its defining sum
/// `Σ_k (1/k̃!) ⟨Φ ⊗̂ γ̃_k̃, D_χ^⊗(m̃+k̃)⟩* δ₀`, truncated at `k = top − m`.
pub fn q_functional_summed<S: Scalar>(
    sys: &AppellSystem<S>,
    m: usize,
    phi: &SymTensor<S>,
    top: usize,
) -> Result<DualFunctional<S>> {
    check_kernel(sys, m, phi)?;
    if m > top {
        return Err(Error::Invalid(format!("Q index {m} above truncation {top}")));
    }
    let n1 = sys.n1();
    let inv = sys.gamma().reciprocal()?;
    let origin = vec![S::zero(); sys.dim()];
    let delta0 = DualFunctional::delta(&origin, n1, 0);
    let mut acc = DualFunctional::zero(sys.dim(), n1, top);
    for k in 0..=top - m {
        let symbol = phi.sym_product(inv.kernel(k)?)?;
        let op = DOperator::new(m + k, symbol, sys.chi().clone())?;
        let term = delta0
            .adjoint_apply(&op)?
            .scale(&(S::one() / factorial::<S>(k * n1)));
        acc = acc.add(&term.resized(top))?;
    }
    Ok(acc)
}

/// Both sides of the biorthogonality relation
/// `⟨⟨Q_m̃(Φ), ⟨P_ñ, φ⟩⟩⟩ = δ_{mn} χ₀ ñ! ⟨Φ, φ⟩`, which is
/// `δ_{mn} ñ! ⟨Φ, φ⟩` for the usual normalization `χ₀ = 1`.
pub fn biorthogonality_check<S: Scalar>(
    sys: &AppellSystem<S>,
    m: usize,
    phi_dual: &SymTensor<S>,
    n: usize,
    phi: &SymTensor<S>,
) -> Result<(S, S)> {
    let top = m.max(n);
    let q = q_functional(sys, m, phi_dual, top)?;
    let e = PolyElement::single(sys.n1(), Basis::Appell, n, phi.clone(), n)?;
    let lhs = q.pair_in(sys, &e)?;
    let rhs = if m == n {
        sys.chi().coeff(0)?.clone() * factorial::<S>(n * sys.n1()) * phi_dual.pairing(phi)?
    } else {
        S::zero()
    };
    Ok((lhs, rhs))
}

/// Kernel `n` of the Q-expansion of `F`, for any `n` (blocks of `F` above its
/// truncation count as zero):
/// `Φ^(ñ) = (1/(χ₀ ñ!)) Σ_{j≤n} C(ñ, j̃) χ_j̃ U^(j̃) ⊗̂ γ_{(n−j)~}`.
pub fn expansion_kernel<S: Scalar>(
    f: &DualFunctional<S>,
    sys: &AppellSystem<S>,
    n: usize,
) -> Result<SymTensor<S>> {
    expansion_kernel_impl(f, sys, n, false)
}

/// With `lenient`, germ kernels beyond storage count as zero, matching the
/// truncated `γ(θ)` used by [`s_transform`].
fn expansion_kernel_impl<S: Scalar>(
    f: &DualFunctional<S>,
    sys: &AppellSystem<S>,
    n: usize,
    lenient: bool,
) -> Result<SymTensor<S>> {
    let n1 = sys.n1();
    let deg = n * n1;
    let chi = sys.chi();
    let mut acc = SymTensor::zero(sys.dim(), deg);
    for j in 0..=n.min(f.top()) {
        let u = &f.blocks[j];
        if u.is_zero() || (lenient && n - j > sys.gamma().k_max()) {
            continue;
        }
        let c = binomial::<S>(deg, j * n1) * chi.coeff(j)?.clone();
        acc = acc.add(&u.sym_product(sys.gamma().kernel(n - j)?)?.scale(&c))?;
    }
    let norm = chi.coeff(0)?.clone() * factorial::<S>(deg);
    Ok(acc.scale(&(S::one() / norm)))
}

fn check_functional<S: Scalar>(f: &DualFunctional<S>, sys: &AppellSystem<S>) -> Result<()> {
    if f.dim != sys.dim() {
        return Err(Error::DimensionMismatch(f.dim, sys.dim()));
    }
    if f.n1 != sys.n1() {
        return Err(Error::N1Mismatch(f.n1, sys.n1()));
    }
    if f.top() > sys.n_cap() {
        return Err(Error::Truncation {
            what: "appell system",
            needed: f.top(),
            available: sys.n_cap(),
        });
    }
    Ok(())
}

/// Kernels `Φ^(m̃)`, `m = 0..=top(F)`, with `F = Σ_m Q_m̃(Φ^(m̃))` on the
/// truncation.
pub fn decompose<S: Scalar>(f: &DualFunctional<S>, sys: &AppellSystem<S>) -> Result<Vec<SymTensor<S>>> {
    check_functional(f, sys)?;
    (0..=f.top()).map(|n| expansion_kernel(f, sys, n)).collect()
}

/// `Σ_m Q_m̃(Φ^(m̃); ·)` truncated to blocks `0..=top`.
pub fn reconstruct<S: Scalar>(
    kernels: &[SymTensor<S>],
    sys: &AppellSystem<S>,
    top: usize,
) -> Result<DualFunctional<S>> {
    let mut acc = DualFunctional::zero(sys.dim(), sys.n1(), top);
    for (m, phi) in kernels.iter().enumerate().take(top + 1) {
        if phi.is_zero() {
            check_kernel(sys, m, phi)?;
            continue;
        }
        acc = acc.add(&q_functional(sys, m, phi, top)?)?;
    }
    Ok(acc)
}

/// The S-transform's kernel sequence; identical to [`decompose`].
pub fn s_kernels<S: Scalar>(f: &DualFunctional<S>, sys: &AppellSystem<S>) -> Result<Vec<SymTensor<S>>> {
    decompose(f, sys)
}

#[derive(Debug, Clone)]
pub struct STransform<S> {
    /// `⟨⟨F, χ^γ(θ; ·)⟩⟩` with the generating function expanded in monomials.
    pub path_a: S,
    /// `χ₀ Σ_{n ≤ top} ⟨Φ^(ñ), θ^⊗ñ⟩` from the kernel sequence.
    pub path_b: S,
    /// Bound on `|path_a − path_b|`: `|χ₀| Σ_{n>top} |Φ^(ñ)|₀ |θ|^ñ`.
    pub tail_bound: f64,
}

/// S-transform of `F` at `θ`, evaluated along two independent routes.
pub fn s_transform<S: Scalar>(
    f: &DualFunctional<S>,
    sys: &AppellSystem<S>,
    theta: &[S],
) -> Result<STransform<S>> {
    check_functional(f, sys)?;
    if theta.len() != sys.dim() {
        return Err(Error::DimensionMismatch(theta.len(), sys.dim()));
    }
    let n1 = sys.n1();
    let chi = sys.chi();
    let g_theta = sys.gamma().evaluate(theta);

    // Path A: monomial blocks of γ(θ) χ(⟨x, θ⟩) are γ(θ) χ_m̃/m̃! θ^⊗m̃.
    let blocks = (0..=f.top())
        .map(|m| {
            let c = g_theta.clone() * chi.coeff(m)?.clone() / factorial::<S>(m * n1);
            Ok(SymTensor::pure_power(theta, m * n1).scale(&c))
        })
        .collect::<Result<Vec<_>>>()?;
    let gen = PolyElement::new(sys.dim(), n1, Basis::Monomial, blocks)?;
    let path_a = f.pair(&gen)?;

    let chi0 = chi.coeff(0)?.clone();
    let kernels = decompose(f, sys)?;
    let path_b = kernels
        .iter()
        .fold(S::zero(), |acc, k| acc + k.evaluate(theta))
        * chi0.clone();

    let radius = theta.iter().map(|t| t.modulus().powi(2)).sum::<f64>().sqrt();
    let unit = crate::symtensor::ScaleVector::default_for(sys.dim());
    let mut tail = 0f64;
    for n in f.top() + 1..=f.top() + sys.gamma().k_max() {
        let k = expansion_kernel_impl(f, sys, n, true)?;
        tail += k.scaled_norm(&unit, 0) * radius.powi((n * n1) as i32);
    }
    Ok(STransform {
        path_a,
        path_b,
        tail_bound: chi0.modulus() * tail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{ChiFunction, ChiName, Germ};
    use crate::symtensor::MultiIndex;
    use num_complex::Complex64;
    use num_rational::BigRational;

    type Q = BigRational;

    fn q(n: i64) -> Q {
        Q::from_integer(n.into())
    }

    fn qr(n: i64, d: i64) -> Q {
        Q::new(n.into(), d.into())
    }

    fn hermite() -> AppellSystem<Q> {
        let chi = ChiFunction::named(&ChiName::Exp, 1, 6).unwrap();
        AppellSystem::new(chi, Germ::gaussian(1, 1, 6).unwrap(), 6).unwrap()
    }

    fn exp_unit(dim: usize, cap: usize) -> AppellSystem<Q> {
        let chi = ChiFunction::named(&ChiName::Exp, 1, cap).unwrap();
        AppellSystem::new(chi, Germ::unit(dim, 1, cap), cap).unwrap()
    }

    #[test]
    fn delta_at_origin() {
        let d0: DualFunctional<Q> = DualFunctional::delta(&[q(0), q(0)], 2, 3);
        assert_eq!(d0.blocks()[0], SymTensor::one(2));
        assert!(d0.blocks()[1..].iter().all(SymTensor::is_zero));
    }

    #[test]
    fn delta_evaluates_hermite() {
        let sys = hermite();
        let t = SymTensor::from_coeffs(1, 3, [(MultiIndex::new(vec![3]), q(1))]).unwrap();
        let e = PolyElement::single(1, Basis::Appell, 3, t, 3).unwrap();
        let d = DualFunctional::delta(&[q(2)], 1, 3);
        assert_eq!(d.pair_in(&sys, &e).unwrap(), q(2));
        let c = PolyElement::constant(1, 1, Basis::Monomial, qr(5, 3));
        assert_eq!(d.pair(&c).unwrap(), qr(5, 3));
    }

    #[test]
    fn delta_at_complex_point() {
        let sys = hermite().map(Complex64::from_rational).unwrap();
        let t = SymTensor::from_coeffs(1, 3, [(MultiIndex::new(vec![3]), Complex64::new(1.0, 0.0))]).unwrap();
        let e = PolyElement::single(1, Basis::Appell, 3, t, 3).unwrap();
        let z = Complex64::new(0.5, 1.5);
        let d = DualFunctional::delta(&[z], 1, 3);
        let expect = z * z * z - z * 3.0;
        assert!((d.pair_in(&sys, &e).unwrap() - expect).norm() < 1e-12);
        assert!((sys.evaluate_poly(&e, &[z]).unwrap() - expect).norm() < 1e-12);
    }

    #[test]
    fn pairing_errors_beyond_truncation() {
        let d: DualFunctional<Q> = DualFunctional::delta(&[q(1)], 1, 1);
        let e = PolyElement::single(1, Basis::Monomial, 2, SymTensor::pure_power(&[q(1)], 2), 2).unwrap();
        assert!(matches!(d.pair(&e), Err(Error::Truncation { .. })));
        assert_eq!(DualFunctional::<Q>::zero(1, 1, 2).pair(&e).unwrap(), q(0));
    }

    #[test]
    fn adjoint_of_delta0() {
        let chi = ChiFunction::named(&ChiName::Exp, 1, 3).unwrap();
        let symbol = SymTensor::pure_power(&[q(3), q(-2)], 1);
        let op = DOperator::new(1, symbol.clone(), chi).unwrap();
        let d0 = DualFunctional::delta(&[q(0), q(0)], 1, 0);
        let out = d0.adjoint_apply(&op).unwrap();
        assert_eq!(out.top(), 1);
        assert!(out.blocks()[0].is_zero());
        assert_eq!(out.blocks()[1], symbol);
    }

    #[test]
    fn order_zero_adjoint_is_identity() {
        let chi = ChiFunction::named(&ChiName::Cos, 2, 3).unwrap();
        let op = DOperator::new(0, SymTensor::one(2), chi).unwrap();
        let f: DualFunctional<Q> = DualFunctional::delta(&[q(1), qr(1, 2)], 2, 3);
        assert_eq!(f.adjoint_apply(&op).unwrap(), f);
    }

    #[test]
    fn q_for_exp_unit() {
        let sys = exp_unit(1, 4);
        let phi = SymTensor::pure_power(&[qr(3, 2)], 2);
        let qf = q_functional(&sys, 2, &phi, 4).unwrap();
        for (j, b) in qf.blocks().iter().enumerate() {
            if j == 2 {
                assert_eq!(b, &phi.scale(&q(2)));
            } else {
                assert!(b.is_zero());
            }
        }
        let q0 = q_functional(&sys, 0, &SymTensor::one(1), 3).unwrap();
        assert_eq!(q0, DualFunctional::delta(&[q(0)], 1, 3));
    }

    #[test]
    fn q_closed_form_matches_sum_hermite() {
        let sys = hermite();
        for m in 0..=3 {
            let phi = SymTensor::pure_power(&[qr(2, 3)], m);
            assert_eq!(
                q_functional(&sys, m, &phi, 5).unwrap(),
                q_functional_summed(&sys, m, &phi, 5).unwrap()
            );
        }
    }

    #[test]
    fn biorthogonality_exp_unit_example() {
        let sys = exp_unit(1, 4);
        let one2 = SymTensor::from_coeffs(1, 2, [(MultiIndex::new(vec![2]), q(1))]).unwrap();
        let (l, r) = biorthogonality_check(&sys, 2, &one2, 2, &one2).unwrap();
        assert_eq!(l, q(2));
        assert_eq!(r, q(2));
        let (l, r) = biorthogonality_check(&sys, 1, &SymTensor::pure_power(&[q(1)], 1), 2, &one2).unwrap();
        assert_eq!((l, r), (q(0), q(0)));
    }

    #[test]
    fn decompose_examples() {
        let sys = hermite();
        let phi = SymTensor::pure_power(&[qr(-1, 2)], 2);
        let qf = q_functional(&sys, 2, &phi, 4).unwrap();
        let k = decompose(&qf, &sys).unwrap();
        for (n, kn) in k.iter().enumerate() {
            if n == 2 {
                assert_eq!(kn, &phi);
            } else {
                assert!(kn.is_zero());
            }
        }
        let d0 = DualFunctional::delta(&[q(0)], 1, 4);
        let k = decompose(&d0, &sys).unwrap();
        assert_eq!(reconstruct(&k, &sys, 4).unwrap(), d0);
        let z = DualFunctional::<Q>::zero(1, 1, 4);
        assert!(decompose(&z, &sys).unwrap().iter().all(SymTensor::is_zero));
    }

    #[test]
    fn s_transform_of_delta0_at_zero() {
        let sys = exp_unit(2, 3);
        let d0 = DualFunctional::delta(&[q(0), q(0)], 1, 3);
        let s = s_transform(&d0, &sys, &[q(0), q(0)]).unwrap();
        assert_eq!(s.path_a, q(1));
        assert_eq!(s.path_b, q(1));
    }

    #[test]
    fn s_transform_of_q_functional() {
        let chi = ChiFunction::named(&ChiName::Cos, 2, 4).unwrap();
        let sys: AppellSystem<Q> = AppellSystem::new(chi, Germ::gaussian(2, 2, 4).unwrap(), 4).unwrap();
        let phi = SymTensor::pure_power(&[q(1), q(2)], 2);
        let qf = q_functional(&sys, 1, &phi, 2).unwrap();
        let th = [qr(1, 3), qr(-1, 5)];
        let s = s_transform(&qf, &sys, &th).unwrap();
        assert_eq!(s.path_b, phi.evaluate(&th));
    }

    #[test]
    fn json_round_trip() {
        let d: DualFunctional<Q> = DualFunctional::delta(&[q(1), qr(2, 3)], 2, 2);
        let v = d.to_json();
        assert_eq!(v["dual"], json!(true));
        assert_eq!(DualFunctional::<Q>::from_json(&v).unwrap(), d);
    }
}
