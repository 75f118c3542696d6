//! Independent reference implementations used by the integration tests.
//! Nothing here calls into the algebra under test except to read or build
//! coefficient maps.

#![allow(dead_code)]

use std::collections::BTreeMap;

use dualappell::series::{ChiFunction, Germ};
use dualappell::symtensor::{MultiIndex, SymTensor};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(n.into())
}

pub fn qr(n: i64, d: i64) -> Q {
    Q::new(n.into(), d.into())
}

fn fact(n: u32) -> Q {
    Q::from_integer((1..=n).fold(BigInt::one(), |a, k| a * BigInt::from(k)))
}

fn multi_fact(a: &[u32]) -> Q {
    a.iter().fold(Q::one(), |acc, &k| acc * fact(k))
}

/// Fully indexed tensor: `d^n` entries, index tuple `(i₁..iₙ)` in base `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub dim: usize,
    pub rank: usize,
    pub data: Vec<Q>,
}

impl Dense {
    pub fn zeros(dim: usize, rank: usize) -> Self {
        Dense {
            dim,
            rank,
            data: vec![Q::zero(); dim.pow(rank as u32)],
        }
    }

    fn tuple(&self, mut flat: usize) -> Vec<usize> {
        let mut t = vec![0; self.rank];
        for slot in t.iter_mut().rev() {
            *slot = flat % self.dim;
            flat /= self.dim;
        }
        t
    }

    fn flat(&self, t: &[usize]) -> usize {
        t.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    fn counts(&self, t: &[usize]) -> Vec<u32> {
        let mut c = vec![0u32; self.dim];
        for &i in t {
            c[i] += 1;
        }
        c
    }

    /// Symmetric dense tensor with the same polynomial as `t`:
    /// `T_{i} = t_α α!/n!` where `α` counts the entries of `i`.
    pub fn from_sym(t: &SymTensor<Q>) -> Self {
        let mut out = Dense::zeros(t.dim(), t.rank());
        let nf = fact(t.rank() as u32);
        for flat in 0..out.data.len() {
            let tuple = out.tuple(flat);
            let c = out.counts(&tuple);
            let coeff = t.get(&MultiIndex::new(c.clone()));
            out.data[flat] = coeff * multi_fact(&c) / nf.clone();
        }
        out
    }

    /// Inverse of [`Dense::from_sym`] for symmetric input.
    pub fn to_sym(&self) -> SymTensor<Q> {
        let nf = fact(self.rank as u32);
        let mut seen: BTreeMap<Vec<u32>, Q> = BTreeMap::new();
        for flat in 0..self.data.len() {
            let c = self.counts(&self.tuple(flat));
            seen.entry(c).or_insert_with(|| self.data[flat].clone());
        }
        let entries = seen
            .into_iter()
            .map(|(c, v)| {
                let w = nf.clone() / multi_fact(&c);
                (MultiIndex::new(c), v * w)
            })
            .collect::<Vec<_>>();
        SymTensor::from_coeffs(self.dim, self.rank, entries).unwrap()
    }

    /// Orbit average over index permutations.
    pub fn symmetrize(&self) -> Self {
        let mut sums: BTreeMap<Vec<u32>, (Q, usize)> = BTreeMap::new();
        for flat in 0..self.data.len() {
            let c = self.counts(&self.tuple(flat));
            let e = sums.entry(c).or_insert((Q::zero(), 0));
            e.0 += &self.data[flat];
            e.1 += 1;
        }
        let mut out = self.clone();
        for flat in 0..out.data.len() {
            let c = out.counts(&out.tuple(flat));
            let (s, n) = &sums[&c];
            out.data[flat] = s.clone() / q(*n as i64);
        }
        out
    }

    pub fn outer(&self, other: &Dense) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut out = Dense::zeros(self.dim, self.rank + other.rank);
        for (i, a) in self.data.iter().enumerate() {
            for (j, b) in other.data.iter().enumerate() {
                out.data[i * other.data.len() + j] = a * b;
            }
        }
        out
    }

    pub fn full_pairing(&self, other: &Dense) -> Q {
        assert_eq!((self.dim, self.rank), (other.dim, other.rank));
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    /// `C_{j} = Σ_{i} G_{i} φ_{i j}` (first `k` slots contracted).
    pub fn contract(&self, g: &Dense) -> Self {
        assert!(g.rank <= self.rank);
        let mut out = Dense::zeros(self.dim, self.rank - g.rank);
        let inner = g.data.len();
        let outer = out.data.len();
        for j in 0..outer {
            let mut acc = Q::zero();
            for i in 0..inner {
                let tuple: Vec<usize> = g.tuple(i).into_iter().chain(out.tuple(j)).collect();
                acc += &g.data[i] * &self.data[self.flat(&tuple)];
            }
            out.data[j] = acc;
        }
        out
    }
}

/// Polynomials in `θ` as exponent-vector → coefficient maps.
pub type Poly = BTreeMap<Vec<u32>, Q>;

pub fn poly_mul(a: &Poly, b: &Poly, max_deg: usize) -> Poly {
    let mut out = Poly::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            let e: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
            if e.iter().sum::<u32>() as usize > max_deg {
                continue;
            }
            *out.entry(e).or_insert_with(Q::zero) += ca * cb;
        }
    }
    out.retain(|_, v| !v.is_zero());
    out
}

pub fn poly_add(a: &mut Poly, b: &Poly, scale: &Q) {
    for (e, c) in b {
        *a.entry(e.clone()).or_insert_with(Q::zero) += c * scale;
    }
    a.retain(|_, v| !v.is_zero());
}

fn tensor_poly(t: &SymTensor<Q>) -> Poly {
    t.iter().map(|(a, c)| (a.entries().to_vec(), c.clone())).collect()
}

/// Taylor coefficients of `γ(θ) χ(⟨z, θ⟩)` by direct series multiplication;
/// entry `n` is `ñ!` times the degree-`ñ` part, i.e. the coefficient map of
/// the kernel `P_ñ(z)`.
pub fn p_kernels_by_series(chi: &ChiFunction<Q>, gamma: &Germ<Q>, z: &[Q], n_max: usize) -> Vec<Poly> {
    let d = z.len();
    let n1 = chi.n1();
    let max_deg = n_max * n1;
    let mut g = Poly::new();
    for n in 0..=n_max {
        let k = gamma.kernel(n).unwrap();
        poly_add(&mut g, &tensor_poly(k), &(Q::one() / fact((n * n1) as u32)));
    }
    let linear: Poly = (0..d)
        .map(|i| {
            let mut e = vec![0u32; d];
            e[i] = 1;
            (e, z[i].clone())
        })
        .filter(|(_, c)| !c.is_zero())
        .collect();
    let mut power: Poly = [(vec![0u32; d], Q::one())].into_iter().collect();
    let mut c = Poly::new();
    for deg in 0..=max_deg {
        if deg % n1 == 0 {
            let m = deg / n1;
            poly_add(&mut c, &power, &(chi.coeff(m).unwrap().clone() / fact(deg as u32)));
        }
        power = poly_mul(&power, &linear, max_deg);
    }
    let prod = poly_mul(&g, &c, max_deg);
    (0..=n_max)
        .map(|n| {
            let deg = n * n1;
            prod.iter()
                .filter(|(e, _)| e.iter().sum::<u32>() as usize == deg)
                .map(|(e, v)| (e.clone(), v * fact(deg as u32)))
                .collect()
        })
        .collect()
}

pub fn sym_as_poly(t: &SymTensor<Q>) -> Poly {
    tensor_poly(t)
}

/// Probabilists' Hermite polynomials `He_n` as coefficient vectors (index =
/// power), from `He_{n+1} = x He_n − n He_{n−1}`.
pub fn hermite(n_max: usize) -> Vec<Vec<Q>> {
    let mut out: Vec<Vec<Q>> = vec![vec![q(1)], vec![q(0), q(1)]];
    for n in 1..n_max {
        let mut next = vec![q(0); n + 2];
        for (k, c) in out[n].iter().enumerate() {
            next[k + 1] += c;
        }
        for (k, c) in out[n - 1].iter().enumerate() {
            next[k] -= c * q(n as i64);
        }
        out.push(next);
    }
    out.truncate(n_max + 1);
    out
}

/// Germ whose kernels come from a coefficient list in `d = 1`.
pub fn germ_1d(n1: usize, coeffs: &[Q]) -> Germ<Q> {
    let kernels = coeffs
        .iter()
        .enumerate()
        .map(|(n, c)| SymTensor::from_coeffs(1, n * n1, [(MultiIndex::new(vec![(n * n1) as u32]), c.clone())]).unwrap())
        .collect();
    Germ::new(1, n1, kernels).unwrap()
}
