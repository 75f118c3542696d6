//! Inner-product backends: moment functionals, Gram forms on the truncated
//! `n1`-divisible polynomial span, and the growth condition on the P-system.
//!
//! The Gram form only ever sees `n1`-divisible blocks, i.e. the inner
//! product space is the closure of the polynomial span itself, not a full
//! `L²` space.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use serde_json::Value;

use crate::appell::{AppellSystem, Basis, PolyElement};
use crate::dualsys::DualFunctional;
use crate::error::{Error, Result};
use crate::scalar::{factorial, factorial_big, parse_rational, ratio, Scalar};
use crate::symtensor::{json_usize, multi_indices, MultiIndex, ScaleVector, SymTensor};

#[derive(Debug, Clone, PartialEq)]
pub enum MeasureKind<S> {
    /// Standard Gaussian on `ℝ^d`.
    Gaussian,
    /// Uniform probability on the sphere of radius `r` in `ℝ^d`.
    Sphere { radius: BigRational },
    /// Explicit moments; absent multi-indices mean 0.
    Table(BTreeMap<MultiIndex, S>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentFunctional<S> {
    dim: usize,
    kind: MeasureKind<S>,
    max_degree: usize,
}

/// `(k−1)!!` for even `k` (with `(−1)!! = 1`).
fn odd_double_factorial(k: u32) -> BigInt {
    let mut acc = BigInt::one();
    let mut j = 1u32;
    while j < k {
        acc *= BigInt::from(j);
        j += 2;
    }
    acc
}

impl<S: Scalar> MomentFunctional<S> {
    pub fn gaussian(dim: usize, max_degree: usize) -> Self {
        MomentFunctional {
            dim,
            kind: MeasureKind::Gaussian,
            max_degree,
        }
    }

    pub fn sphere(dim: usize, radius: BigRational, max_degree: usize) -> Result<Self> {
        if dim < 1 || radius <= BigRational::from_integer(0.into()) {
            return Err(Error::Invalid("sphere needs d ≥ 1 and r > 0".into()));
        }
        Ok(MomentFunctional {
            dim,
            kind: MeasureKind::Sphere { radius },
            max_degree,
        })
    }

    pub fn table(dim: usize, moments: BTreeMap<MultiIndex, S>, max_degree: usize) -> Result<Self> {
        for a in moments.keys() {
            if a.dim() != dim {
                return Err(Error::DimensionMismatch(a.dim(), dim));
            }
        }
        Ok(MomentFunctional {
            dim,
            kind: MeasureKind::Table(moments),
            max_degree,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn kind(&self) -> &MeasureKind<S> {
        &self.kind
    }

    /// `E[x^α]`.
    pub fn moment(&self, alpha: &MultiIndex) -> Result<S> {
        if alpha.dim() != self.dim {
            return Err(Error::DimensionMismatch(alpha.dim(), self.dim));
        }
        let deg = alpha.degree();
        if deg > self.max_degree {
            return Err(Error::Truncation {
                what: "moments",
                needed: deg,
                available: self.max_degree,
            });
        }
        let all_even = alpha.entries().iter().all(|a| a % 2 == 0);
        match &self.kind {
            MeasureKind::Table(t) => Ok(t.get(alpha).cloned().unwrap_or_else(S::zero)),
            _ if !all_even => Ok(S::zero()),
            MeasureKind::Gaussian => {
                let v = alpha
                    .entries()
                    .iter()
                    .fold(BigInt::one(), |acc, &a| acc * odd_double_factorial(a));
                Ok(S::from_bigint(&v))
            }
            MeasureKind::Sphere { radius } => {
                let num = alpha
                    .entries()
                    .iter()
                    .fold(BigInt::one(), |acc, &a| acc * odd_double_factorial(a));
                let den = (0..deg / 2).fold(BigInt::one(), |acc, j| {
                    acc * BigInt::from(self.dim + 2 * j)
                });
                let mut r = BigRational::one();
                for _ in 0..deg {
                    r *= radius;
                }
                Ok(S::from_rational(&(r * BigRational::new(num, den))))
            }
        }
    }

    /// `{kind, d, r?, moments?, max_degree?}`. Closed-form kinds use
    /// `max_degree`; tables use their declared or largest stored degree.
    pub fn from_json(v: &Value, max_degree: usize) -> Result<Self> {
        let dim = json_usize(v, "d")?;
        let kind = v
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Parse("measure: missing `kind`".into()))?;
        match kind {
            "gaussian" => Ok(Self::gaussian(dim, max_degree)),
            "sphere" => {
                let r = match v.get("r") {
                    None => BigRational::one(),
                    Some(Value::String(s)) => parse_rational(s)?,
                    Some(Value::Number(n)) => parse_rational(&n.to_string())?,
                    Some(other) => return Err(Error::Parse(format!("measure: bad r {other}"))),
                };
                Self::sphere(dim, r, max_degree)
            }
            "table" => {
                let raw = v
                    .get("moments")
                    .and_then(Value::as_array)
                    .ok_or_else(|| Error::Parse("measure: table needs `moments`".into()))?;
                let mut map = BTreeMap::new();
                let mut top = 0;
                for item in raw {
                    let tensor_like = serde_json::json!({
                        "dim": dim,
                        "rank": item[0].as_array().map(|a| a.iter().filter_map(Value::as_u64).sum::<u64>()).unwrap_or(0),
                        "coeffs": [item],
                    });
                    let t: SymTensor<S> = SymTensor::from_json(&tensor_like)?;
                    top = top.max(t.rank());
                    for (a, c) in t.iter() {
                        map.insert(a.clone(), c.clone());
                    }
                }
                let declared = v.get("max_degree").and_then(Value::as_u64).map(|m| m as usize);
                Self::table(dim, map, declared.unwrap_or(top))
            }
            other => Err(Error::Parse(format!("unknown measure kind `{other}`"))),
        }
    }
}

/// Bilinear form `(f, g) ↦ E[f g]` on the truncated span, blocks `0..=top`.
#[derive(Debug, Clone)]
pub struct GramForm<S> {
    measure: MomentFunctional<S>,
    n1: usize,
    top: usize,
    basis: Vec<(usize, MultiIndex)>,
    matrix: Vec<Vec<S>>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct PdReport {
    pub positive_definite: bool,
    /// `true` when the verdict comes from exact leading principal minors.
    pub exact: bool,
    pub size: usize,
    /// Smallest pivot (exact path) or eigenvalue (float path).
    pub min_value: f64,
    /// First leading minor that fails to be positive, if any.
    pub first_failure: Option<usize>,
}

/// Largest problem handled by exact rational elimination.
pub const EXACT_PD_MAX_DIM: usize = 3;
pub const EXACT_PD_MAX_DEGREE: usize = 8;

impl<S: Scalar> GramForm<S> {
    pub fn new(measure: MomentFunctional<S>, n1: usize, top: usize) -> Result<Self> {
        let need = 2 * top * n1;
        if measure.max_degree() < need {
            return Err(Error::Truncation {
                what: "moments",
                needed: need,
                available: measure.max_degree(),
            });
        }
        let basis: Vec<(usize, MultiIndex)> = (0..=top)
            .flat_map(|m| {
                multi_indices(measure.dim(), m * n1)
                    .into_iter()
                    .map(move |a| (m, a))
            })
            .collect();
        let mut matrix = Vec::with_capacity(basis.len());
        for (_, a) in &basis {
            let row = basis
                .iter()
                .map(|(_, b)| measure.moment(&a.plus(b)))
                .collect::<Result<Vec<_>>>()?;
            matrix.push(row);
        }
        Ok(GramForm {
            measure,
            n1,
            top,
            basis,
            matrix,
        })
    }

    pub fn measure(&self) -> &MomentFunctional<S> {
        &self.measure
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn top(&self) -> usize {
        self.top
    }

    pub fn basis(&self) -> &[(usize, MultiIndex)] {
        &self.basis
    }

    pub fn matrix(&self) -> &[Vec<S>] {
        &self.matrix
    }

    fn check(&self, e: &PolyElement<S>) -> Result<()> {
        if e.basis() != Basis::Monomial {
            return Err(Error::BasisMismatch {
                expected: "monomial",
                found: e.basis().as_str(),
            });
        }
        if e.dim() != self.measure.dim() {
            return Err(Error::DimensionMismatch(e.dim(), self.measure.dim()));
        }
        if e.n1() != self.n1 {
            return Err(Error::N1Mismatch(e.n1(), self.n1));
        }
        if let Some(m) = e.blocks().iter().rposition(|b| !b.is_zero()) {
            if m > self.top {
                return Err(Error::Truncation {
                    what: "gram form",
                    needed: m,
                    available: self.top,
                });
            }
        }
        Ok(())
    }

    /// `E[e1 · e2]` for monomial-coordinate elements.
    pub fn inner(&self, e1: &PolyElement<S>, e2: &PolyElement<S>) -> Result<S> {
        self.check(e1)?;
        self.check(e2)?;
        let mut acc = S::zero();
        for b1 in e1.blocks() {
            for (a, x) in b1.iter() {
                for b2 in e2.blocks() {
                    for (b, y) in b2.iter() {
                        acc = acc + x.clone() * y.clone() * self.measure.moment(&a.plus(b))?;
                    }
                }
            }
        }
        Ok(acc)
    }

    /// `E[e]`, i.e. `inner(e, 1)`.
    pub fn expectation(&self, e: &PolyElement<S>) -> Result<S> {
        let one = PolyElement::constant(self.measure.dim(), self.n1, Basis::Monomial, S::one());
        self.inner(e, &one)
    }

    /// Positive-definiteness verdict. Exact leading-minor test for rational
    /// scalars within the exact budget, eigenvalue estimate otherwise.
    pub fn nondegeneracy(&self) -> PdReport {
        let size = self.basis.len();
        let within = self.measure.dim() <= EXACT_PD_MAX_DIM && self.top * self.n1 <= EXACT_PD_MAX_DEGREE;
        if S::KIND == crate::scalar::ScalarKind::Rational && within {
            self.pd_exact()
        } else {
            let m = DMatrix::from_fn(size, size, |i, j| self.matrix[i][j].real_f64());
            let eig = m.symmetric_eigenvalues();
            let max = eig.iter().fold(0f64, |a, &x| a.max(x.abs()));
            let min = eig.iter().fold(f64::INFINITY, |a, &x| a.min(x));
            let pd = min > 1e-12 * max.max(1.0);
            PdReport {
                positive_definite: pd,
                exact: false,
                size,
                min_value: min,
                first_failure: None,
            }
        }
    }

    /// Gaussian elimination without pivoting: the `k`-th pivot is
    /// `D_k / D_{k−1}`, so all pivots positive ⟺ all leading minors positive.
    fn pd_exact(&self) -> PdReport {
        let size = self.basis.len();
        let mut a: Vec<Vec<S>> = self.matrix.clone();
        let mut min_value = f64::INFINITY;
        for k in 0..size {
            let pivot = a[k][k].clone();
            min_value = min_value.min(pivot.real_f64());
            if pivot.signum_real() <= 0 {
                return PdReport {
                    positive_definite: false,
                    exact: true,
                    size,
                    min_value,
                    first_failure: Some(k + 1),
                };
            }
            for i in k + 1..size {
                if a[i][k].is_zero() {
                    continue;
                }
                let f = a[i][k].clone() / pivot.clone();
                for j in k..size {
                    let v = a[i][j].clone() - f.clone() * a[k][j].clone();
                    a[i][j] = v;
                }
            }
        }
        PdReport {
            positive_definite: true,
            exact: true,
            size,
            min_value,
            first_failure: None,
        }
    }

    /// Functional `U` with `⟨⟨U, g⟩⟩ = inner(f, g)` for all `g` in the
    /// truncation: `U^(k̃)_β = (k̃!/β!) Σ_α f_α E[x^{α+β}]`.
    pub fn embed_regular(&self, f: &PolyElement<S>) -> Result<DualFunctional<S>> {
        self.check(f)?;
        let dim = self.measure.dim();
        let mut blocks = Vec::with_capacity(self.top + 1);
        for k in 0..=self.top {
            let deg = k * self.n1;
            let kf = factorial_big(deg);
            let mut u = SymTensor::zero(dim, deg);
            for beta in multi_indices(dim, deg) {
                let mut w = S::zero();
                for b in f.blocks() {
                    for (a, x) in b.iter() {
                        w = w + x.clone() * self.measure.moment(&a.plus(&beta))?;
                    }
                }
                let c: S = ratio(&kf, &beta.factorial());
                let beta_c = c * w;
                u.set(beta, beta_c);
            }
            blocks.push(u);
        }
        DualFunctional::new(dim, self.n1, blocks)
    }

    pub fn to_json(&self, report: &PdReport) -> Value {
        serde_json::json!({
            "n1": self.n1,
            "top": self.top,
            "d": self.measure.dim(),
            "scalar": S::KIND.as_str(),
            "basis": self.basis.iter().map(|(m, a)| serde_json::json!([m, a.entries()])).collect::<Vec<_>>(),
            "matrix": self.matrix.iter().map(|r| r.iter().map(Scalar::to_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "verdict": report,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthBound {
    /// `‖|P_ñ(·)|_{−p}‖_H` for `n = 0..=N`.
    pub norms: Vec<f64>,
    /// `c_n = (‖|P_ñ|_{−p}‖_H / ñ!)^{1/ñ}` for `n = 1..=N`.
    pub c: Vec<f64>,
    pub c_star: f64,
    pub k: f64,
}

/// Fits the growth condition `‖|P_ñ(·)|_{−p}‖_H ≤ ñ! C^ñ K`.
///
/// `‖|P_ñ(·)|_{−p}‖²_H = Σ_α (α!/ñ!) a^{−2pα} E[(P_ñ(x)_α)²]`, where each
/// coefficient `P_ñ(x)_α` is a polynomial in `x`; expectations are taken
/// exactly in `S` and the scale weights in floating point.
pub fn growth_bound_fit<S: Scalar>(
    sys: &AppellSystem<S>,
    measure: &MomentFunctional<S>,
    p: i32,
    a: &ScaleVector,
    n_top: usize,
) -> Result<GrowthBound> {
    let dim = sys.dim();
    let n1 = sys.n1();
    if measure.dim() != dim {
        return Err(Error::DimensionMismatch(measure.dim(), dim));
    }
    let mut norms = Vec::with_capacity(n_top + 1);
    for n in 0..=n_top {
        let deg = n * n1;
        let nf = factorial_big(deg);
        let polys = sys.p_kernel_polynomial(n)?;
        let mut sq = 0f64;
        for alpha in multi_indices(dim, deg) {
            let poly = polys.get(&alpha).cloned().unwrap_or_default();
            let mut e2 = S::zero();
            for (d1, c1) in &poly {
                for (d2, c2) in &poly {
                    e2 = e2 + c1.clone() * c2.clone() * measure.moment(&d1.plus(d2))?;
                }
            }
            let w: f64 = ratio(&alpha.factorial(), &nf);
            let scale = a.weight(&alpha, -p);
            sq += w * scale * scale * e2.real_f64();
        }
        norms.push(sq.max(0.0).sqrt());
    }
    let c: Vec<f64> = norms
        .iter()
        .enumerate()
        .skip(1)
        .map(|(n, &v)| {
            let deg = (n * n1) as f64;
            let f: f64 = factorial(n * n1);
            (v / f).powf(1.0 / deg)
        })
        .collect();
    let c_star = c.iter().cloned().fold(0f64, f64::max);
    let k = norms[0].max(1.0);
    Ok(GrowthBound {
        norms,
        c,
        c_star,
        k,
    })
}

/// Largest observed `‖φ‖_H / ‖φ‖_{p,q}` over random Appell-coordinate
/// elements with blocks `0..=top`.
#[allow(clippy::too_many_arguments)]
pub fn embedding_constant_fit<S: Scalar>(
    gf: &GramForm<S>,
    sys: &AppellSystem<S>,
    p: i32,
    q: i32,
    a: &ScaleVector,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeff = Uniform::new_inclusive(-8i64, 8).expect("valid range");
    let top = gf.top().min(sys.n_cap());
    let mut best = 0f64;
    for _ in 0..samples {
        let blocks = (0..=top)
            .map(|m| {
                let entries = multi_indices(sys.dim(), m * sys.n1())
                    .into_iter()
                    .map(|al| (al, S::from_rational(&BigRational::new(coeff.sample(&mut rng).into(), 8.into()))));
                SymTensor::from_coeffs(sys.dim(), m * sys.n1(), entries)
            })
            .collect::<Result<Vec<_>>>()?;
        let e = PolyElement::new(sys.dim(), sys.n1(), Basis::Appell, blocks)?;
        if e.is_zero() {
            continue;
        }
        let mono = sys.appell_to_monomial(&e)?;
        let h = gf.inner(&mono, &mono)?.real_f64().max(0.0).sqrt();
        best = best.max(h / e.pq_norm(p, q, a));
    }
    Ok(best)
}

/// Monte-Carlo estimate of `E[x^α]` with its standard error.
pub fn mc_moment(
    kind: &MeasureKind<f64>,
    dim: usize,
    alpha: &MultiIndex,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0f64; dim];
    let (mut sum, mut sum2) = (0f64, 0f64);
    for _ in 0..samples {
        for xi in x.iter_mut() {
            *xi = StandardNormal.sample(&mut rng);
        }
        match kind {
            MeasureKind::Gaussian => {}
            MeasureKind::Sphere { radius } => {
                let r: f64 = Scalar::from_rational(radius);
                let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                x.iter_mut().for_each(|v| *v *= r / norm);
            }
            MeasureKind::Table(_) => {
                return Err(Error::Invalid("cannot sample a moment table".into()));
            }
        }
        let v = alpha.monomial(&x);
        sum += v;
        sum2 += v * v;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sum2 / n - mean * mean).max(0.0);
    Ok((mean, (var / n).sqrt()))
}
