//! The lowering operator `⟨Φ^(ñ), D_χ^⊗ñ⟩` on the truncated polynomial space.
//!
//! On monomials it maps block `m` to block `m − n`:
//!
//! ```text
//! ⟨x^⊗m̃, f⟩ ↦ 1_{m≥n} · m̃! χ_{(m−n)~} / ((m−n)~! χ_m̃) · ⟨x^⊗(m−n)~, contract(f, Φ)⟩
//! ```
//!
//! On Appell coordinates the same operator acts with the plain factor
//! `m̃!/(m−n)~!`, which is what makes the P-system a family of generalized
//! powers.

use crate::appell::{AppellSystem, Basis, PolyElement};
use crate::error::{Error, Result};
use crate::scalar::{factorial, Scalar};
use crate::series::ChiFunction;
use crate::symtensor::{expect_shape, SymTensor};

#[derive(Debug, Clone, PartialEq)]
pub struct DOperator<S> {
    order: usize,
    symbol: SymTensor<S>,
    chi: ChiFunction<S>,
}

impl<S: Scalar> DOperator<S> {
    pub fn new(order: usize, symbol: SymTensor<S>, chi: ChiFunction<S>) -> Result<Self> {
        expect_shape(&symbol, symbol.dim(), order * chi.n1())?;
        chi.coeff(order)?;
        Ok(DOperator { order, symbol, chi })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn symbol(&self) -> &SymTensor<S> {
        &self.symbol
    }

    pub fn chi(&self) -> &ChiFunction<S> {
        &self.chi
    }

    pub fn n1(&self) -> usize {
        self.chi.n1()
    }

    /// `m̃! χ_{(m−n)~} / ((m−n)~! χ_m̃)` for `m ≥ n`.
    pub fn monomial_factor(&self, m: usize) -> Result<S> {
        let n1 = self.n1();
        let lo = m - self.order;
        let num = factorial::<S>(m * n1) * self.chi.coeff(lo)?.clone();
        let den = factorial::<S>(lo * n1) * self.chi.coeff(m)?.clone();
        Ok(num / den)
    }

    /// Product operator: order `n + k`, symbol `Φ ⊗̂ Ψ`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.chi != other.chi {
            return Err(Error::ChiMismatch);
        }
        Self::new(
            self.order + other.order,
            self.symbol.sym_product(&other.symbol)?,
            self.chi.clone(),
        )
    }

    fn check_element(&self, e: &PolyElement<S>) -> Result<()> {
        if e.dim() != self.symbol.dim() {
            return Err(Error::DimensionMismatch(e.dim(), self.symbol.dim()));
        }
        if e.n1() != self.n1() {
            return Err(Error::N1Mismatch(e.n1(), self.n1()));
        }
        Ok(())
    }

    fn lower(
        &self,
        e: &PolyElement<S>,
        factor: impl Fn(usize) -> Result<S>,
    ) -> Result<PolyElement<S>> {
        self.check_element(e)?;
        let n1 = self.n1();
        let top = e.top().saturating_sub(self.order);
        let mut blocks: Vec<SymTensor<S>> = (0..=top)
            .map(|j| SymTensor::zero(e.dim(), j * n1))
            .collect();
        for (m, f) in e.blocks().iter().enumerate().skip(self.order) {
            if f.is_zero() {
                continue;
            }
            blocks[m - self.order] = f.contract(&self.symbol)?.scale(&factor(m)?);
        }
        PolyElement::new(e.dim(), n1, e.basis(), blocks)
    }

    /// Action on monomial coordinates.
    pub fn apply_monomial(&self, e: &PolyElement<S>) -> Result<PolyElement<S>> {
        if e.basis() != Basis::Monomial {
            return Err(Error::BasisMismatch {
                expected: "monomial",
                found: e.basis().as_str(),
            });
        }
        self.lower(e, |m| self.monomial_factor(m))
    }

    /// Action on Appell coordinates of `sys`.
    pub fn apply_appell(&self, sys: &AppellSystem<S>, e: &PolyElement<S>) -> Result<PolyElement<S>> {
        if e.basis() != Basis::Appell {
            return Err(Error::BasisMismatch {
                expected: "appell",
                found: e.basis().as_str(),
            });
        }
        if sys.chi() != &self.chi {
            return Err(Error::ChiMismatch);
        }
        let n1 = self.n1();
        self.lower(e, |m| {
            Ok(factorial::<S>(m * n1) / factorial::<S>((m - self.order) * n1))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{ChiName, Germ};
    use crate::symtensor::MultiIndex;
    use num_rational::BigRational;

    type Q = BigRational;

    fn q(n: i64) -> Q {
        Q::from_integer(n.into())
    }

    #[test]
    fn order_zero_unit_symbol_is_identity() {
        let chi: ChiFunction<Q> = ChiFunction::named(&ChiName::Cos, 2, 3).unwrap();
        let op = DOperator::new(0, SymTensor::one(2), chi).unwrap();
        let t = SymTensor::pure_power(&[q(1), q(2)], 4);
        let e = PolyElement::single(2, Basis::Monomial, 2, t, 3).unwrap();
        let out = op.apply_monomial(&e).unwrap();
        assert_eq!(out, e);
    }

    #[test]
    fn classical_derivative() {
        let chi: ChiFunction<Q> = ChiFunction::named(&ChiName::Exp, 1, 3).unwrap();
        let op = DOperator::new(1, SymTensor::pure_power(&[q(1)], 1), chi).unwrap();
        let x2 = SymTensor::from_coeffs(1, 2, [(MultiIndex::new(vec![2]), q(1))]).unwrap();
        let e = PolyElement::single(1, Basis::Monomial, 2, x2, 2).unwrap();
        let out = op.apply_monomial(&e).unwrap();
        assert_eq!(out.top(), 1);
        assert_eq!(out.block(1).unwrap().get(&MultiIndex::new(vec![1])), q(2));
        assert!(out.block(0).unwrap().is_zero());
    }

    #[test]
    fn cos_factor_at_block_two() {
        let chi: ChiFunction<Q> = ChiFunction::named(&ChiName::Cos, 2, 3).unwrap();
        let op = DOperator::new(1, SymTensor::pure_power(&[q(1), q(1)], 2), chi).unwrap();
        assert_eq!(op.monomial_factor(2).unwrap(), q(-12));
        assert_eq!(op.monomial_factor(1).unwrap(), q(-2));
    }

    #[test]
    fn low_blocks_vanish() {
        let chi: ChiFunction<Q> = ChiFunction::named(&ChiName::Exp, 1, 4).unwrap();
        let op = DOperator::new(3, SymTensor::pure_power(&[q(1)], 3), chi).unwrap();
        let e = PolyElement::single(1, Basis::Monomial, 2, SymTensor::pure_power(&[q(5)], 2), 2).unwrap();
        assert!(op.apply_monomial(&e).unwrap().is_zero());
    }

    #[test]
    fn full_contraction_gives_scalar_block() {
        let chi: ChiFunction<Q> = ChiFunction::named(&ChiName::Cos, 2, 3).unwrap();
        let gamma = Germ::gaussian(2, 2, 3).unwrap();
        let sys = AppellSystem::new(chi.clone(), gamma, 3).unwrap();
        let phi_sym = SymTensor::pure_power(&[q(1), q(-1)], 4);
        let op = DOperator::new(2, phi_sym.clone(), chi).unwrap();
        let phi = SymTensor::pure_power(&[q(2), q(3)], 4);
        let e = PolyElement::single(2, Basis::Appell, 2, phi.clone(), 2).unwrap();
        let out = op.apply_appell(&sys, &e).unwrap();
        let expect = q(24) * phi.pairing(&phi_sym).unwrap();
        assert_eq!(out.block(0).unwrap().get(&MultiIndex::zeros(2)), expect);
    }

    #[test]
    fn wrong_rank_symbol_rejected() {
        let chi: ChiFunction<Q> = ChiFunction::named(&ChiName::Cos, 2, 3).unwrap();
        assert!(DOperator::new(1, SymTensor::pure_power(&[q(1)], 1), chi).is_err());
    }
}
