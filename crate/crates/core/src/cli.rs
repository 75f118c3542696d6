//! Command-line front end. Exit codes: 0 success, 1 a check failed,
//! 2 usage, configuration or I/O error.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_rational::BigRational;
use serde_json::{json, Value};

use crate::appell::Basis;
use crate::config::RunConfig;
use crate::dchi::DOperator;
use crate::dualsys::{biorthogonality_check, q_functional, q_functional_summed, s_transform, DualFunctional};
use crate::error::{Error, Result};
use crate::hspace::GramForm;
use crate::kingman::{bound_check, polar_grid, real_grid, sphere_cf_check, LambdaFunction};
use crate::sample;
use crate::scalar::{parse_rational, Scalar, ScalarKind};
use crate::symtensor::SymTensor;
use crate::verify::{run_verify, tensor_close};
use crate::appell::PolyElement;

/// Environment variable naming a default output directory.
pub const OUT_DIR_ENV: &str = "DUALAPPELL_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "dualappell", version, about = "Dual n1-Appell-like systems: kernels, operators, checks")]
pub struct Cli {
    /// JSON run configuration (defaults are used when absent).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the configured scalar kind.
    #[arg(long, global = true, value_parser = ["rational", "float"])]
    pub scalar: Option<String>,
    /// Record wall time per suite (reports are then no longer reproducible byte for byte).
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every verification suite and write a JSON report.
    Verify,
    /// P-kernels as CSV: n,component,monomial,coefficient.
    Kernels,
    /// Apply a lowering operator in both coordinate systems.
    Dchi(DchiArgs),
    /// Q-functionals and the biorthogonality table.
    Qsystem,
    /// Two-path S-transform of a functional.
    Stransform(StransformArgs),
    /// Gram matrix of the configured measure and its definiteness verdict.
    Gram,
    /// Kingman's Λ_s: coefficients, growth bounds and sphere Monte-Carlo.
    Kingman(KingmanArgs),
}

#[derive(Debug, Args)]
pub struct DchiArgs {
    #[arg(long, default_value_t = 1)]
    pub order: usize,
    /// Symbol tensor JSON; random when absent.
    #[arg(long)]
    pub symbol: Option<PathBuf>,
    /// Appell-coordinate element JSON; random when absent.
    #[arg(long)]
    pub element: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StransformArgs {
    /// Comma-separated point, e.g. `0.1,-0.2`; random small point when absent.
    #[arg(long)]
    pub theta: Option<String>,
    /// Dual functional JSON; random when absent.
    #[arg(long)]
    pub functional: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct KingmanArgs {
    #[arg(long, default_value = "1/2")]
    pub s: String,
    #[arg(long, default_value_t = 40)]
    pub terms: usize,
    /// Radii and angles of the polar bound grid.
    #[arg(long, default_value_t = 20)]
    pub grid: usize,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
}

struct Output {
    body: String,
    ext: &'static str,
    code: i32,
}

fn config_from(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(k) = &cli.scalar {
        cfg.scalar = ScalarKind::parse(k)?;
    }
    if cli.timing {
        cfg.timing = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn read_json(path: &Path) -> Result<Value> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json serializes");
    s.push('\n');
    s
}

fn header(cfg: &RunConfig, command: &str) -> Value {
    json!({
        "schema": crate::verify::SCHEMA,
        "command": command,
        "config_hash": cfg.hash(),
        "scalar": cfg.scalar,
    })
}

fn kernels_csv<S: Scalar>(cfg: &RunConfig) -> Result<Output> {
    let setup = cfg.build::<S>()?;
    let mut body = String::from("n,component,monomial,coefficient\n");
    for n in 0..=cfg.n_cap {
        for (component, poly) in setup.system.p_kernel_polynomial(n)? {
            for (mono, c) in poly {
                writeln!(body, "{n},{component},{mono},{}", c.to_plain()).expect("string write");
            }
        }
    }
    Ok(Output { body, ext: "csv", code: 0 })
}

fn dchi<S: Scalar>(cfg: &RunConfig, args: &DchiArgs) -> Result<Output> {
    let setup = cfg.build::<S>()?;
    let sys = &setup.system;
    let mut rng = sample::rng(cfg.seed);
    let symbol = match &args.symbol {
        Some(p) => SymTensor::from_json(&read_json(p)?)?,
        None => sample::tensor(&mut rng, cfg.d, args.order * cfg.n1),
    };
    let element = match &args.element {
        Some(p) => PolyElement::from_json(&read_json(p)?)?,
        None => sample::element(&mut rng, cfg.d, cfg.n1, Basis::Appell, cfg.n_cap)?,
    };
    let element = match element.basis() {
        Basis::Appell => element,
        Basis::Monomial => sys.monomial_to_appell(&element)?,
    };
    let op = DOperator::new(args.order, symbol, setup.chi.clone())?;
    let appell = op.apply_appell(sys, &element)?;
    let mono_in = sys.appell_to_monomial(&element)?;
    let mono_out = op.apply_monomial(&mono_in)?;
    let back = sys.monomial_to_appell(&mono_out)?;
    let consistent = appell
        .blocks()
        .iter()
        .zip(back.blocks())
        .all(|(a, b)| tensor_close(a, b, cfg.tolerances.float_rel).0);
    let mut v = header(cfg, "dchi");
    v["order"] = json!(args.order);
    v["symbol"] = op.symbol().to_json();
    v["input_appell"] = element.to_json();
    v["input_monomial"] = mono_in.to_json();
    v["result_appell"] = appell.to_json();
    v["result_monomial"] = mono_out.to_json();
    v["consistent"] = json!(consistent);
    Ok(Output {
        body: pretty(&v),
        ext: "json",
        code: if consistent { 0 } else { 1 },
    })
}

fn qsystem<S: Scalar>(cfg: &RunConfig) -> Result<Output> {
    let setup = cfg.build::<S>()?;
    let sys = &setup.system;
    let mut rng = sample::rng(cfg.seed);
    let mut functionals = Vec::new();
    let mut ok = true;
    for m in 0..=cfg.n_cap {
        let phi = sample::tensor::<S>(&mut rng, cfg.d, m * cfg.n1);
        let q = q_functional(sys, m, &phi, cfg.n_cap)?;
        let summed = q_functional_summed(sys, m, &phi, cfg.n_cap)?;
        let agree = q
            .blocks()
            .iter()
            .zip(summed.blocks())
            .all(|(a, b)| tensor_close(a, b, cfg.tolerances.float_rel).0);
        ok &= agree;
        functionals.push(json!({ "m": m, "phi": phi.to_json(), "q": q.to_json(), "matches_sum": agree }));
    }
    let mut table = Vec::new();
    for m in 0..=cfg.n_cap {
        let mut row = Vec::new();
        for n in 0..=cfg.n_cap {
            let a = sample::tensor::<S>(&mut rng, cfg.d, m * cfg.n1);
            let b = sample::tensor::<S>(&mut rng, cfg.d, n * cfg.n1);
            let (lhs, rhs) = biorthogonality_check(sys, m, &a, n, &b)?;
            ok &= lhs.close_to(&rhs, cfg.tolerances.float_rel);
            row.push(json!({ "lhs": lhs.to_json(), "rhs": rhs.to_json() }));
        }
        table.push(row);
    }
    let mut v = header(cfg, "qsystem");
    v["functionals"] = json!(functionals);
    v["biorthogonality"] = json!(table);
    v["ok"] = json!(ok);
    Ok(Output {
        body: pretty(&v),
        ext: "json",
        code: if ok { 0 } else { 1 },
    })
}

fn parse_point<S: Scalar>(s: &str, dim: usize) -> Result<Vec<S>> {
    let pts = s
        .split(',')
        .map(|t| parse_rational(t).map(|r| S::from_rational(&r)))
        .collect::<Result<Vec<S>>>()?;
    if pts.len() != dim {
        return Err(Error::DimensionMismatch(pts.len(), dim));
    }
    Ok(pts)
}

fn stransform<S: Scalar>(cfg: &RunConfig, args: &StransformArgs) -> Result<Output> {
    let setup = cfg.build::<S>()?;
    let mut rng = sample::rng(cfg.seed);
    let f = match &args.functional {
        Some(p) => DualFunctional::from_json(&read_json(p)?)?,
        None => sample::functional(&mut rng, cfg.d, cfg.n1, cfg.n_cap)?,
    };
    let theta: Vec<S> = match &args.theta {
        Some(t) => parse_point(t, cfg.d)?,
        None => {
            let shrink = S::from_rational(&BigRational::new(1.into(), (18 * cfg.d as i64).into()));
            sample::point::<S>(&mut rng, cfg.d)
                .into_iter()
                .map(|x| x * shrink.clone())
                .collect()
        }
    };
    let st = s_transform(&f, &setup.system, &theta)?;
    let gap = (st.path_a.clone() - st.path_b.clone()).modulus();
    let ok = gap <= st.tail_bound * (1.0 + 1e-9) + cfg.tolerances.float_rel * (1.0 + st.path_a.modulus());
    let kernels = crate::dualsys::s_kernels(&f, &setup.system)?;
    let mut v = header(cfg, "stransform");
    v["theta"] = json!(theta.iter().map(Scalar::to_json).collect::<Vec<_>>());
    v["path_a"] = st.path_a.to_json();
    v["path_b"] = st.path_b.to_json();
    v["gap"] = json!(gap);
    v["tail_bound"] = json!(st.tail_bound);
    v["kernels"] = json!(kernels.iter().map(SymTensor::to_json).collect::<Vec<_>>());
    v["within_tail"] = json!(ok);
    Ok(Output {
        body: pretty(&v),
        ext: "json",
        code: if ok { 0 } else { 1 },
    })
}

fn gram<S: Scalar>(cfg: &RunConfig) -> Result<Output> {
    let setup = cfg.build::<S>()?;
    let gf = GramForm::new(setup.measure, cfg.n1, cfg.n_cap)?;
    let report = gf.nondegeneracy();
    let mut v = header(cfg, "gram");
    v["gram"] = gf.to_json(&report);
    Ok(Output {
        body: pretty(&v),
        ext: "json",
        code: 0,
    })
}

fn kingman(cfg: &RunConfig, args: &KingmanArgs) -> Result<Output> {
    let s = parse_rational(&args.s)?;
    let l = LambdaFunction::new(s.clone(), args.terms)?;
    let bounds = bound_check(&l, &polar_grid(5.0, args.grid, args.grid), &real_grid(5.0, 10 * args.grid))?;
    let two_s = &s * BigRational::from_integer(2.into());
    let d = if two_s.is_integer() {
        two_s.to_integer().try_into().ok().map(|k: i64| k + 2).filter(|&k| k >= 2)
    } else {
        None
    };
    let thetas = [0.0, 0.5, 1.0, std::f64::consts::PI, 5.0];
    let cf = match d {
        Some(d) => json!(sphere_cf_check(d as usize, 1.0, &thetas, args.samples, cfg.seed)?),
        None => json!({ "skipped": "2s + 2 is not an integer dimension" }),
    };
    let cf_ok = cf.get("all_within").and_then(Value::as_bool).unwrap_or(true);
    let ok = bounds.ratio_ok && bounds.real_ok && cf_ok;
    let mut v = header(cfg, "kingman");
    v["s"] = json!(s.to_string());
    v["terms"] = json!(args.terms);
    v["coefficients"] = json!(l.exact_coeffs().iter().map(Scalar::to_json).collect::<Vec<_>>());
    v["accuracy_radius"] = json!(l.accuracy_radius(l.tail_tol()));
    v["bound_check"] = json!(bounds);
    v["sphere_cf"] = cf;
    v["ok"] = json!(ok);
    Ok(Output {
        body: pretty(&v),
        ext: "json",
        code: if ok { 0 } else { 1 },
    })
}

macro_rules! by_scalar {
    ($cfg:expr, $f:ident $(, $arg:expr)*) => {
        match $cfg.scalar {
            ScalarKind::Rational => $f::<BigRational>($cfg $(, $arg)*),
            _ => $f::<f64>($cfg $(, $arg)*),
        }
    };
}

fn dispatch(cli: &Cli) -> Result<(Output, RunConfig, &'static str)> {
    let cfg = config_from(cli)?;
    let (out, name) = match &cli.command {
        Command::Verify => {
            let report = run_verify(&cfg)?;
            let code = if report.all_pass { 0 } else { 1 };
            (
                Output {
                    body: report.to_pretty(),
                    ext: "json",
                    code,
                },
                "verify",
            )
        }
        Command::Kernels => (by_scalar!(&cfg, kernels_csv)?, "kernels"),
        Command::Dchi(a) => (by_scalar!(&cfg, dchi, a)?, "dchi"),
        Command::Qsystem => (by_scalar!(&cfg, qsystem)?, "qsystem"),
        Command::Stransform(a) => (by_scalar!(&cfg, stransform, a)?, "stransform"),
        Command::Gram => (by_scalar!(&cfg, gram)?, "gram"),
        Command::Kingman(a) => (kingman(&cfg, a)?, "kingman"),
    };
    Ok((out, cfg, name))
}

fn destination(cli: &Cli, cfg: &RunConfig, name: &str, ext: &str) -> Option<PathBuf> {
    cli.out
        .clone()
        .or_else(|| cfg.output.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(|d| PathBuf::from(d).join(format!("{name}.{ext}"))))
}

/// Runs the CLI on `args` and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let (out, cfg, name) = match dispatch(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    match destination(&cli, &cfg, name, out.ext) {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, &out.body) {
                eprintln!("error: writing {}: {e}", path.display());
                return 2;
            }
        }
        None => print!("{}", out.body),
    }
    out.code
}
