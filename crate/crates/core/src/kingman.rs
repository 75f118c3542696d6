//! Kingman's `Λ_s(u) = Σ_m (−1/4)^m Γ(s+1)/(m! Γ(s+m+1)) u^{2m}`, the
//! characteristic function of a uniformly distributed step on a sphere in
//! dimension `d = 2s + 2`.

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{factorial_big, Scalar};
use crate::series::{kingman_lambda_coeff, ChiFunction};

/// Tail tolerance used by [`LambdaFunction::eval`].
pub const DEFAULT_TAIL_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaFunction {
    s: BigRational,
    exact: Vec<BigRational>,
    coeffs: Vec<f64>,
    tail_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaValue {
    pub re: f64,
    pub im: f64,
    pub tail_bound: f64,
}

impl LambdaValue {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

impl LambdaFunction {
    /// Coefficients `λ_{2m}` for `m = 0..terms`.
    pub fn new(s: BigRational, terms: usize) -> Result<Self> {
        if s < BigRational::new((-1).into(), 2.into()) {
            return Err(Error::Invalid("Λ_s requires s ≥ -1/2".into()));
        }
        if terms == 0 {
            return Err(Error::Invalid("Λ_s needs at least one term".into()));
        }
        let exact: Vec<BigRational> = (0..terms).map(|m| kingman_lambda_coeff(&s, m)).collect();
        let coeffs = exact.iter().map(|c| c.to_f64().unwrap_or(0.0)).collect();
        Ok(LambdaFunction {
            s,
            exact,
            coeffs,
            tail_tol: DEFAULT_TAIL_TOL,
        })
    }

    pub fn with_tail_tol(mut self, tol: f64) -> Self {
        self.tail_tol = tol;
        self
    }

    pub fn s(&self) -> &BigRational {
        &self.s
    }

    pub fn s_f64(&self) -> f64 {
        self.s.to_f64().unwrap_or(f64::NAN)
    }

    pub fn terms(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn exact_coeffs(&self) -> &[BigRational] {
        &self.exact
    }

    pub fn tail_tol(&self) -> f64 {
        self.tail_tol
    }

    /// Bound on `Σ_{m ≥ M} |λ_{2m}| r^{2m}` where `M = terms`. Successive
    /// term ratios `r² / (4(m+1)(s+m+1))` decrease in `m`, so once the first
    /// omitted ratio is below one the tail is dominated by a geometric series.
    pub fn tail_bound(&self, r: f64) -> f64 {
        let m = self.terms();
        let s = self.s_f64();
        let r2 = r * r;
        let last = self.coeffs[m - 1].abs() * r2.powi((m - 1) as i32);
        let ratio_at = |k: usize| r2 / (4.0 * (k as f64 + 1.0) * (s + k as f64 + 1.0));
        let first = last * ratio_at(m - 1);
        let q = ratio_at(m);
        if q >= 1.0 {
            f64::INFINITY
        } else {
            first / (1.0 - q)
        }
    }

    /// Largest radius whose tail bound stays below `tol`.
    pub fn accuracy_radius(&self, tol: f64) -> f64 {
        let mut lo = 0.0;
        let mut hi = 1.0;
        while self.tail_bound(hi) <= tol && hi < 1e6 {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if self.tail_bound(mid) <= tol {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Horner evaluation in `u²`, refusing points outside the envelope.
    pub fn eval(&self, u: Complex64) -> Result<LambdaValue> {
        let r = u.norm();
        let tail = self.tail_bound(r);
        if !(tail <= self.tail_tol) {
            return Err(Error::Envelope {
                radius: r,
                tail,
                tol: self.tail_tol,
            });
        }
        let u2 = u * u;
        let v = self
            .coeffs
            .iter()
            .rev()
            .fold(Complex64::zero(), |acc, &c| acc * u2 + c);
        Ok(LambdaValue {
            re: v.re,
            im: v.im,
            tail_bound: tail,
        })
    }

    pub fn eval_real(&self, u: f64) -> Result<f64> {
        Ok(self.eval(Complex64::new(u, 0.0))?.re)
    }

    /// `χ_{2m} = (2m)! λ_{2m}` with `n₁ = 2`.
    pub fn chi<S: Scalar>(&self) -> Result<ChiFunction<S>> {
        let coeffs = self
            .exact
            .iter()
            .enumerate()
            .map(|(m, c)| S::from_rational(&(c * BigRational::from_integer(factorial_big(2 * m)))))
            .collect();
        ChiFunction::new(2, coeffs)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub points: usize,
    pub max_ratio: f64,
    pub argmax: [f64; 2],
    pub max_real_abs: f64,
    pub real_points: usize,
    pub ratio_ok: bool,
    pub real_ok: bool,
}

/// Polar grid: `n_r` radii in `(0, radius]` times `n_phi` angles.
pub fn polar_grid(radius: f64, n_r: usize, n_phi: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(n_r * n_phi);
    for i in 1..=n_r {
        let r = radius * i as f64 / n_r as f64;
        for j in 0..n_phi {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / n_phi as f64;
            out.push(Complex64::from_polar(r, phi));
        }
    }
    out
}

/// `n + 1` equispaced points of `[−radius, radius]`.
pub fn real_grid(radius: f64, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|i| -radius + 2.0 * radius * i as f64 / n as f64)
        .collect()
}

/// `max |Λ_s(z)| / e^{|z|}` over `complex` and `max |Λ_s(u)|` over `real`.
pub fn bound_check(l: &LambdaFunction, complex: &[Complex64], real: &[f64]) -> Result<BoundReport> {
    let mut max_ratio = 0f64;
    let mut argmax = [0.0, 0.0];
    for &z in complex {
        let v = l.eval(z)?.value();
        let ratio = v.norm() / z.norm().exp();
        if ratio > max_ratio {
            max_ratio = ratio;
            argmax = [z.re, z.im];
        }
    }
    let mut max_real_abs = 0f64;
    for &u in real {
        max_real_abs = max_real_abs.max(l.eval_real(u)?.abs());
    }
    Ok(BoundReport {
        points: complex.len(),
        max_ratio,
        argmax,
        max_real_abs,
        real_points: real.len(),
        ratio_ok: max_ratio <= 1.0,
        real_ok: max_real_abs <= 1.0 + 1e-12,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CfEntry {
    pub theta_norm: f64,
    pub empirical: f64,
    pub target: f64,
    pub stderr: f64,
    pub z_score: f64,
    pub within: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CfReport {
    pub d: usize,
    pub r: f64,
    pub s: String,
    pub samples: usize,
    pub seed: u64,
    pub chunk: usize,
    pub entries: Vec<CfEntry>,
    pub all_within: bool,
}

pub const CF_CHUNK: usize = 8192;
pub const CF_SIGMAS: f64 = 4.0;

/// Empirical `E[cos⟨θ, X⟩]` for `X` uniform on the radius-`r` sphere in
/// `ℝ^d`, against `Λ_{(d−2)/2}(r|θ|)`. `θ` points along `(1, …, 1)/√d`.
pub fn sphere_cf_check(d: usize, r: f64, theta_norms: &[f64], samples: usize, seed: u64) -> Result<CfReport> {
    if d < 2 {
        return Err(Error::Invalid("sphere_cf_check needs d ≥ 2".into()));
    }
    if samples < 10_000 {
        return Err(Error::Invalid("sphere_cf_check needs at least 10^4 samples".into()));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Invalid("radius must be positive".into()));
    }
    let s = BigRational::new((d as i64 - 2).into(), 2.into());
    let lambda = LambdaFunction::new(s.clone(), 60)?;
    let dir = 1.0 / (d as f64).sqrt();
    let k = theta_norms.len();
    let chunks = samples.div_ceil(CF_CHUNK);
    let partial: Vec<Vec<(f64, f64)>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let n = CF_CHUNK.min(samples - c * CF_CHUNK);
            let mut acc = vec![(0f64, 0f64); k];
            let mut x = vec![0f64; d];
            for _ in 0..n {
                for xi in x.iter_mut() {
                    *xi = StandardNormal.sample(&mut rng);
                }
                let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                let proj = x.iter().sum::<f64>() * dir * r / norm;
                for (slot, &t) in acc.iter_mut().zip(theta_norms) {
                    let v = (t * proj).cos();
                    slot.0 += v;
                    slot.1 += v * v;
                }
            }
            acc
        })
        .collect();
    let mut sums = vec![(0f64, 0f64); k];
    for chunk in &partial {
        for (tot, p) in sums.iter_mut().zip(chunk) {
            tot.0 += p.0;
            tot.1 += p.1;
        }
    }
    let n = samples as f64;
    let mut entries = Vec::with_capacity(k);
    for (&t, &(s1, s2)) in theta_norms.iter().zip(&sums) {
        let mean = s1 / n;
        let var = (s2 / n - mean * mean).max(0.0) * n / (n - 1.0);
        let stderr = (var / n).sqrt();
        let target = lambda.eval_real(r * t)?;
        let diff = (mean - target).abs();
        let z_score = if stderr > 0.0 { diff / stderr } else { 0.0 };
        entries.push(CfEntry {
            theta_norm: t,
            empirical: mean,
            target,
            stderr,
            z_score,
            within: diff <= CF_SIGMAS * stderr + 1e-12,
        });
    }
    let all_within = entries.iter().all(|e| e.within);
    Ok(CfReport {
        d,
        r,
        s: format!("{}", s),
        samples,
        seed,
        chunk: CF_CHUNK,
        entries,
        all_within,
    })
}
