//! Verification suites driven by a [`RunConfig`].

use std::time::Instant;

use num_rational::BigRational;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::appell::{gamma_change_rhs, AppellSystem, Basis, PolyElement};
use crate::config::{RunConfig, Setup};
use crate::dchi::DOperator;
use crate::dualsys::{
    biorthogonality_check, decompose, q_functional, q_functional_summed, reconstruct, s_kernels,
    s_transform,
};
use crate::error::{Error, Result};
use crate::hspace::{embedding_constant_fit, growth_bound_fit, GramForm};
use crate::kingman::{bound_check, polar_grid, real_grid, LambdaFunction};
use crate::sample;
use crate::scalar::{Scalar, ScalarKind};
use crate::series::{kingman_coefficients_nonzero, kingman_signs_alternate, ChiName, Germ};
use crate::symtensor::{multi_indices, SymTensor};

pub const SCHEMA: u32 = 1;
const TRIALS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub status: Status,
    pub witnesses: Value,
    pub residuals: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: u32,
    pub config_hash: String,
    pub scalar: ScalarKind,
    pub seed: u64,
    pub suites: Vec<SuiteResult>,
    pub all_pass: bool,
}

impl Report {
    pub fn to_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Largest entrywise deviation between two tensors, and whether every
/// entry is within tolerance.
pub fn tensor_close<S: Scalar>(a: &SymTensor<S>, b: &SymTensor<S>, tol: f64) -> (bool, f64) {
    if a.dim() != b.dim() || a.rank() != b.rank() {
        return (false, f64::INFINITY);
    }
    let mut ok = true;
    let mut worst = 0f64;
    for alpha in multi_indices(a.dim(), a.rank()) {
        let (x, y) = (a.get(&alpha), b.get(&alpha));
        ok &= x.close_to(&y, tol);
        worst = worst.max((x - y).modulus());
    }
    (ok, worst)
}

fn blocks_close<S: Scalar>(a: &[SymTensor<S>], b: &[SymTensor<S>], tol: f64) -> (bool, f64) {
    let n = a.len().max(b.len());
    let mut ok = true;
    let mut worst = 0f64;
    for m in 0..n {
        let (x, y) = match (a.get(m), b.get(m)) {
            (Some(x), Some(y)) => (x.clone(), y.clone()),
            (Some(x), None) => (x.clone(), SymTensor::zero(x.dim(), x.rank())),
            (None, Some(y)) => (SymTensor::zero(y.dim(), y.rank()), y.clone()),
            (None, None) => unreachable!(),
        };
        let (o, w) = tensor_close(&x, &y, tol);
        ok &= o;
        worst = worst.max(w);
    }
    (ok, worst)
}

struct Ctx<'a, S> {
    cfg: &'a RunConfig,
    setup: &'a Setup<S>,
    tol: f64,
}

impl<S: Scalar> Ctx<'_, S> {
    fn sys(&self) -> &AppellSystem<S> {
        &self.setup.system
    }

    fn rng(&self, salt: u64) -> sample::SampleRng {
        sample::rng(self.cfg.seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15))
    }

    fn dim(&self) -> usize {
        self.cfg.d
    }

    fn n1(&self) -> usize {
        self.cfg.n1
    }

    fn top(&self) -> usize {
        self.cfg.n_cap
    }
}

type Outcome = Result<(bool, Value, Value)>;

fn gamma_change<S: Scalar>(c: &Ctx<S>) -> Outcome {
    let mut rng = c.rng(1);
    let mut ok = true;
    let mut worst = 0f64;
    let mut checked = 0usize;
    for _ in 0..TRIALS {
        let g2: Germ<S> = sample::germ(&mut rng, c.dim(), c.n1(), c.top())?;
        let sys2 = AppellSystem::new(c.setup.chi.clone(), g2, c.top())?;
        let z = sample::point::<S>(&mut rng, c.dim());
        for n in 0..=c.top() {
            let lhs = c.sys().p_kernel(n, &z)?;
            let rhs = gamma_change_rhs(c.sys(), &sys2, n, &z)?;
            let (o, w) = tensor_close(&lhs, &rhs, c.tol);
            ok &= o;
            worst = worst.max(w);
            checked += 1;
        }
    }
    Ok((ok, json!({ "comparisons": checked }), json!({ "max_abs": worst })))
}

fn lowering<S: Scalar>(c: &Ctx<S>) -> Outcome {
    let mut rng = c.rng(2);
    let sys = c.sys();
    let mut ok = true;
    let mut worst = 0f64;
    for _ in 0..TRIALS {
        let e = sample::element::<S>(&mut rng, c.dim(), c.n1(), Basis::Appell, c.top())?;
        for n in 0..=c.top() {
            let symbol = sample::tensor(&mut rng, c.dim(), n * c.n1());
            let op = DOperator::new(n, symbol, c.setup.chi.clone())?;
            let direct = op.apply_appell(sys, &e)?;
            let conj = sys.monomial_to_appell(&op.apply_monomial(&sys.appell_to_monomial(&e)?)?)?;
            let (o, w) = blocks_close(direct.blocks(), conj.blocks(), c.tol);
            ok &= o;
            worst = worst.max(w);
        }
    }
    Ok((ok, json!({ "orders": c.top() + 1, "trials": TRIALS }), json!({ "max_abs": worst })))
}

fn q_forms<S: Scalar>(c: &Ctx<S>) -> Outcome {
    let mut rng = c.rng(3);
    let mut ok = true;
    let mut worst = 0f64;
    for m in 0..=c.top() {
        let phi = sample::tensor(&mut rng, c.dim(), m * c.n1());
        let closed = q_functional(c.sys(), m, &phi, c.top())?;
        let summed = q_functional_summed(c.sys(), m, &phi, c.top())?;
        let (o, w) = blocks_close(closed.blocks(), summed.blocks(), c.tol);
        ok &= o;
        worst = worst.max(w);
    }
    Ok((ok, json!({ "indices": c.top() + 1 }), json!({ "max_abs": worst })))
}

fn biorthogonality<S: Scalar>(c: &Ctx<S>) -> Outcome {
    let mut rng = c.rng(4);
    let mut ok = true;
    let mut worst = 0f64;
    let mut diagonal = Vec::new();
    for m in 0..=c.top() {
        for n in 0..=c.top() {
            let big = sample::tensor(&mut rng, c.dim(), m * c.n1());
            let small = sample::tensor(&mut rng, c.dim(), n * c.n1());
            let (lhs, rhs) = biorthogonality_check(c.sys(), m, &big, n, &small)?;
            ok &= lhs.close_to(&rhs, c.tol);
            worst = worst.max((lhs.clone() - rhs).modulus());
            if m == n {
                diagonal.push(lhs.to_json());
            }
        }
    }
    Ok((ok, json!({ "diagonal_lhs": diagonal }), json!({ "max_abs": worst })))
}

fn decomposition<S: Scalar>(c: &Ctx<S>) -> Outcome {
    let mut rng = c.rng(5);
    let mut ok = true;
    let mut worst = 0f64;
    for _ in 0..TRIALS {
        let f = sample::functional::<S>(&mut rng, c.dim(), c.n1(), c.top())?;
        let back = reconstruct(&decompose(&f, c.sys())?, c.sys(), c.top())?;
        let (o, w) = blocks_close(f.blocks(), back.blocks(), c.tol);
        ok &= o;
        worst = worst.max(w);
        let kernels: Vec<SymTensor<S>> = (0..=c.top())
            .map(|m| sample::tensor(&mut rng, c.dim(), m * c.n1()))
            .collect();
        let again = decompose(&reconstruct(&kernels, c.sys(), c.top())?, c.sys())?;
        let (o, w) = blocks_close(&kernels, &again, c.tol);
        ok &= o;
        worst = worst.max(w);
    }
    Ok((ok, json!({ "trials": TRIALS }), json!({ "max_abs": worst })))
}

fn stransform_paths<S: Scalar>(c: &Ctx<S>) -> Outcome {
    let mut rng = c.rng(6);
    let mut ok = true;
    let mut worst_excess = 0f64;
    let mut rows = Vec::new();
    let shrink = S::from_rational(&BigRational::new(1.into(), (18 * c.dim() as i64).into()));
    for _ in 0..TRIALS {
        let f = sample::functional::<S>(&mut rng, c.dim(), c.n1(), c.top())?;
        let theta: Vec<S> = sample::point::<S>(&mut rng, c.dim())
            .into_iter()
            .map(|t| t * shrink.clone())
            .collect();
        let st = s_transform(&f, c.sys(), &theta)?;
        let gap = (st.path_a.clone() - st.path_b.clone()).modulus();
        let allowed = st.tail_bound * (1.0 + 1e-9) + c.tol * (1.0 + st.path_a.modulus());
        ok &= gap <= allowed;
        worst_excess = worst_excess.max(gap - st.tail_bound);
        let (o, _) = blocks_close(&s_kernels(&f, c.sys())?, &decompose(&f, c.sys())?, 0.0);
        ok &= o;
        rows.push(json!({
            "path_a": st.path_a.to_json(),
            "path_b": st.path_b.to_json(),
            "tail_bound": st.tail_bound,
        }));
    }
    Ok((ok, json!({ "evaluations": rows }), json!({ "excess_over_tail": worst_excess })))
}

fn chi_invariants<S: Scalar>(c: &Ctx<S>) -> Outcome {
    let nonzero = c.setup.chi.coeffs().iter().all(|x| !x.is_zero());
    let mut ok = nonzero;
    let mut w = json!({ "nonzero": nonzero, "chi0": c.setup.chi.coeff(0)?.to_json() });
    if let Some(ChiName::Kingman(s)) = c.cfg.chi_name()? {
        let alt = kingman_signs_alternate(&s, c.top()) && kingman_coefficients_nonzero(&s, c.top());
        let bridge = LambdaFunction::new(s.clone(), c.top() + 1)?.chi::<S>()? == c.setup.chi;
        ok &= alt && bridge;
        w["kingman_alternating"] = json!(alt);
        w["lambda_bridge"] = json!(bridge);
    }
    Ok((ok, w, json!({})))
}

fn lambda_family(_: &RunConfig) -> Outcome {
    let half = |n: i64| BigRational::new(n.into(), 2.into());
    let lc = LambdaFunction::new(half(-1), 40)?;
    let ls = LambdaFunction::new(half(1), 40)?;
    let mut err = 0f64;
    for u in real_grid(5.0, 200) {
        err = err.max((lc.eval_real(u)? - u.cos()).abs());
        let sinc = if u == 0.0 { 1.0 } else { u.sin() / u };
        err = err.max((ls.eval_real(u)? - sinc).abs());
    }
    let mut ok = err <= 1e-12;
    let mut ratios = Vec::new();
    for s in [half(-1), half(0), half(1), half(2), half(10)] {
        let l = LambdaFunction::new(s.clone(), 40)?;
        let rep = bound_check(&l, &polar_grid(5.0, 20, 20), &real_grid(5.0, 100))?;
        ok &= rep.ratio_ok && rep.real_ok;
        ratios.push(json!({ "s": s.to_string(), "max_ratio": rep.max_ratio, "max_real_abs": rep.max_real_abs }));
    }
    Ok((ok, json!({ "bounds": ratios }), json!({ "closed_form_max_abs": err })))
}

fn gram<S: Scalar>(c: &Ctx<S>) -> Outcome {
    let gf = GramForm::new(c.setup.measure.clone(), c.n1(), c.top())?;
    let pd = gf.nondegeneracy();
    let mut rng = c.rng(7);
    let mut consistent = true;
    for _ in 0..TRIALS {
        let f = sample::element::<S>(&mut rng, c.dim(), c.n1(), Basis::Monomial, c.top())?;
        let g = sample::element::<S>(&mut rng, c.dim(), c.n1(), Basis::Monomial, c.top())?;
        let u = gf.embed_regular(&f)?;
        consistent &= u.pair(&g)?.close_to(&gf.inner(&f, &g)?, c.tol);
    }
    let witness = mean_violation_witness(&gf, c.sys())?;
    let needs_witness = c.n1() >= 2;
    let ok = pd.positive_definite && consistent && (witness.is_some() || !needs_witness);
    Ok((
        ok,
        json!({
            "positive_definite": pd,
            "embed_consistent": consistent,
            "mean_violation": witness,
        }),
        json!({ "min_value": pd.min_value }),
    ))
}

/// First unit `φ` with `E[⟨P₁(x), φ⟩] ≠ 0`, as `(component, value)`.
pub fn mean_violation_witness<S: Scalar>(gf: &GramForm<S>, sys: &AppellSystem<S>) -> Result<Option<Value>> {
    if sys.n_cap() < 1 || gf.top() < 1 {
        return Ok(None);
    }
    for alpha in multi_indices(sys.dim(), sys.n1()) {
        let t = SymTensor::from_coeffs(sys.dim(), sys.n1(), [(alpha.clone(), S::one())])?;
        let e = PolyElement::single(sys.n1(), Basis::Appell, 1, t, 1)?;
        let mean = gf.expectation(&sys.appell_to_monomial(&e)?)?;
        if !mean.is_zero() {
            return Ok(Some(json!({ "phi": alpha.entries(), "expectation": mean.to_json() })));
        }
    }
    Ok(None)
}

fn growth<S: Scalar>(c: &Ctx<S>) -> Outcome {
    let unit = AppellSystem::new(c.setup.chi.clone(), Germ::unit(c.dim(), c.n1(), c.top()), c.top())?;
    let gb = growth_bound_fit(&unit, &c.setup.measure, c.cfg.p, &c.setup.scale, c.top())?;
    let ok = gb.norms.iter().chain(&gb.c).all(|v| v.is_finite()) && gb.c_star.is_finite();
    Ok((ok, serde_json::to_value(&gb)?, json!({})))
}

fn embedding<S: Scalar>(c: &Ctx<S>) -> Outcome {
    let gf = GramForm::new(c.setup.measure.clone(), c.n1(), c.top())?;
    let fit = embedding_constant_fit(&gf, c.sys(), c.cfg.p, c.cfg.q, &c.setup.scale, 64, c.cfg.seed)?;
    Ok((fit.is_finite(), json!({ "ratio": fit, "samples": 64 }), json!({})))
}

type SuiteFn<'a> = Box<dyn Fn() -> Outcome + Send + Sync + 'a>;

fn run_suites<S: Scalar>(cfg: &RunConfig, setup: &Setup<S>) -> Vec<SuiteResult> {
    let c = Ctx {
        cfg,
        setup,
        tol: cfg.tolerances.float_rel,
    };
    let c = &c;
    let suites: Vec<(&'static str, SuiteFn)> = vec![
        ("chi_invariants", Box::new(move || chi_invariants(c))),
        ("gamma_change", Box::new(move || gamma_change(c))),
        ("dchi_lowering", Box::new(move || lowering(c))),
        ("q_closed_form", Box::new(move || q_forms(c))),
        ("biorthogonality", Box::new(move || biorthogonality(c))),
        ("decomposition", Box::new(move || decomposition(c))),
        ("stransform", Box::new(move || stransform_paths(c))),
        ("lambda_family", Box::new(move || lambda_family(cfg))),
        ("gram", Box::new(move || gram(c))),
        ("growth_bound", Box::new(move || growth(c))),
        ("embedding", Box::new(move || embedding(c))),
    ];
    suites
        .par_iter()
        .map(|(name, f)| {
            let start = Instant::now();
            let outcome = f();
            let wall = cfg.timing.then(|| start.elapsed().as_secs_f64() * 1e3);
            match outcome {
                Ok((ok, witnesses, residuals)) => SuiteResult {
                    name,
                    status: if ok { Status::Pass } else { Status::Fail },
                    witnesses,
                    residuals,
                    wall_time_ms: wall,
                },
                Err(e) => SuiteResult {
                    name,
                    status: Status::Fail,
                    witnesses: json!({ "error": e.to_string() }),
                    residuals: json!({}),
                    wall_time_ms: wall,
                },
            }
        })
        .collect()
}

/// Validates `cfg` and runs every suite. Configuration problems come back
/// as `Err`; suite failures are recorded in the report.
pub fn run_verify(cfg: &RunConfig) -> Result<Report> {
    let suites = match cfg.scalar {
        ScalarKind::Rational => run_suites(cfg, &cfg.build::<BigRational>()?),
        ScalarKind::Float => run_suites(cfg, &cfg.build::<f64>()?),
        ScalarKind::Complex => return Err(Error::Invalid("runs support rational or float scalars".into())),
    };
    let all_pass = suites.iter().all(|s| s.status == Status::Pass);
    Ok(Report {
        schema: SCHEMA,
        config_hash: cfg.hash(),
        scalar: cfg.scalar,
        seed: cfg.seed,
        suites,
        all_pass,
    })
}
