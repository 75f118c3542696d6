//! Seeded random rational data for verification suites.
//!
//! Everything is drawn as small rationals `a/b` with `|a| ≤ 9`, `1 ≤ b ≤ 4`
//! and converted into the target scalar, so rational and float runs of the
//! same seed see the same numbers.

use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::appell::{Basis, PolyElement};
use crate::dualsys::DualFunctional;
use crate::error::Result;
use crate::scalar::Scalar;
use crate::series::{ChiFunction, Germ};
use crate::symtensor::{multi_indices, SymTensor};

pub type SampleRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rational(rng: &mut impl Rng) -> BigRational {
    let num: i64 = rng.random_range(-9..=9);
    let den: i64 = rng.random_range(1..=4);
    BigRational::new(num.into(), den.into())
}

pub fn nonzero_rational(rng: &mut impl Rng) -> BigRational {
    loop {
        let r = rational(rng);
        if !r.is_zero() {
            return r;
        }
    }
}

pub fn scalar<S: Scalar>(rng: &mut impl Rng) -> S {
    S::from_rational(&rational(rng))
}

pub fn point<S: Scalar>(rng: &mut impl Rng, dim: usize) -> Vec<S> {
    (0..dim).map(|_| scalar(rng)).collect()
}

pub fn tensor<S: Scalar>(rng: &mut impl Rng, dim: usize, rank: usize) -> SymTensor<S> {
    let mut t = SymTensor::zero(dim, rank);
    for a in multi_indices(dim, rank) {
        t.set(a, scalar(rng));
    }
    t
}

/// Random `χ` with `χ₀ = 1` and every other coefficient nonzero.
pub fn chi<S: Scalar>(rng: &mut impl Rng, n1: usize, n_max: usize) -> Result<ChiFunction<S>> {
    let coeffs = (0..=n_max)
        .map(|n| {
            if n == 0 {
                S::one()
            } else {
                S::from_rational(&nonzero_rational(rng))
            }
        })
        .collect();
    ChiFunction::new(n1, coeffs)
}

/// Random germ with nonzero constant term.
pub fn germ<S: Scalar>(rng: &mut impl Rng, dim: usize, n1: usize, k_max: usize) -> Result<Germ<S>> {
    let kernels = (0..=k_max)
        .map(|k| {
            if k == 0 {
                SymTensor::scalar(dim, S::from_rational(&nonzero_rational(rng)))
            } else {
                tensor(rng, dim, k * n1)
            }
        })
        .collect();
    Germ::new(dim, n1, kernels)
}

pub fn element<S: Scalar>(rng: &mut impl Rng, dim: usize, n1: usize, basis: Basis, top: usize) -> Result<PolyElement<S>> {
    let blocks = (0..=top).map(|m| tensor(rng, dim, m * n1)).collect();
    PolyElement::new(dim, n1, basis, blocks)
}

pub fn functional<S: Scalar>(rng: &mut impl Rng, dim: usize, n1: usize, top: usize) -> Result<DualFunctional<S>> {
    let blocks = (0..=top).map(|m| tensor(rng, dim, m * n1)).collect();
    DualFunctional::new(dim, n1, blocks)
}
