use std::path::{Path, PathBuf};

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::appell::AppellSystem;
use crate::error::{Error, Result};
use crate::hspace::MomentFunctional;
use crate::scalar::{Scalar, ScalarKind};
use crate::series::{ChiFunction, ChiName, Germ};
use crate::symtensor::{ScaleVector, SymTensor};

/// Largest total degree `N·n₁` a run may request.
pub const MAX_TOTAL_DEGREE: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChiSpec {
    Named {
        name: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        s: Option<Value>,
    },
    Coeffs {
        coeffs: Vec<Value>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaSpec {
    Kernels { kernels: Vec<Value> },
    Kind { kind: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moments: Option<Vec<Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_degree: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Relative tolerance for float comparisons; exact suites ignore it.
    #[serde(default = "default_float_rel")]
    pub float_rel: f64,
    /// Monte-Carlo acceptance band in standard errors.
    #[serde(default = "default_mc_sigmas")]
    pub mc_sigmas: f64,
}

fn default_float_rel() -> f64 {
    1e-10
}

fn default_mc_sigmas() -> f64 {
    4.0
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            float_rel: default_float_rel(),
            mc_sigmas: default_mc_sigmas(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub d: usize,
    pub n1: usize,
    #[serde(rename = "N")]
    pub n_cap: usize,
    pub scalar: ScalarKind,
    pub chi: ChiSpec,
    pub gamma: GammaSpec,
    pub measure: MeasureSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<Vec<f64>>,
    #[serde(default = "default_p")]
    pub p: i32,
    #[serde(default)]
    pub q: i32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Record per-suite wall time in reports (breaks byte-identical output).
    #[serde(default)]
    pub timing: bool,
}

fn default_p() -> i32 {
    1
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            d: 2,
            n1: 2,
            n_cap: 3,
            scalar: ScalarKind::Rational,
            chi: ChiSpec::Named {
                name: "kingman".into(),
                s: Some(Value::String("1/2".into())),
            },
            gamma: GammaSpec::Kind {
                kind: "gaussian".into(),
            },
            measure: MeasureSpec {
                kind: "gaussian".into(),
                r: None,
                moments: None,
                max_degree: None,
            },
            scale: None,
            p: 1,
            q: 0,
            seed: 20240601,
            tolerances: Tolerances::default(),
            output: None,
            timing: false,
        }
    }
}

/// Typed objects built from a validated configuration.
#[derive(Debug, Clone)]
pub struct Setup<S> {
    pub chi: ChiFunction<S>,
    pub gamma: Germ<S>,
    pub system: AppellSystem<S>,
    pub measure: MomentFunctional<S>,
    pub scale: ScaleVector,
}

impl RunConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    /// SHA-256 of the canonical (key-sorted) JSON, excluding `output` and
    /// `timing`.
    pub fn hash(&self) -> String {
        let mut v = self.to_json();
        if let Value::Object(map) = &mut v {
            map.remove("output");
            map.remove("timing");
        }
        let bytes = serde_json::to_vec(&v).expect("config serializes");
        Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn chi_name(&self) -> Result<Option<ChiName>> {
        match &self.chi {
            ChiSpec::Named { name, s } => {
                let s = s.as_ref().map(BigRational::from_json).transpose()?;
                Ok(Some(ChiName::parse(name, s.as_ref())?))
            }
            ChiSpec::Coeffs { .. } => Ok(None),
        }
    }

    /// Rejects any configuration that cannot produce a consistent setup.
    pub fn validate(&self) -> Result<()> {
        match self.scalar {
            ScalarKind::Rational => self.build::<BigRational>().map(|_| ()),
            ScalarKind::Float => self.build::<f64>().map(|_| ()),
            ScalarKind::Complex => Err(Error::Invalid("runs support rational or float scalars".into())),
        }
    }

    pub fn build<S: Scalar>(&self) -> Result<Setup<S>> {
        if self.d == 0 || self.n1 == 0 || self.n_cap == 0 {
            return Err(Error::Invalid("d, n1 and N must be positive".into()));
        }
        if self.n_cap * self.n1 > MAX_TOTAL_DEGREE {
            return Err(Error::Invalid(format!(
                "total degree N·n1 = {} exceeds {MAX_TOTAL_DEGREE}",
                self.n_cap * self.n1
            )));
        }
        if !(self.tolerances.float_rel >= 0.0) || !(self.tolerances.mc_sigmas > 0.0) {
            return Err(Error::Invalid("tolerances must be nonnegative".into()));
        }
        let chi = match &self.chi {
            ChiSpec::Named { .. } => {
                let name = self.chi_name()?.expect("named chi");
                ChiFunction::named(&name, self.n1, self.n_cap)?
            }
            ChiSpec::Coeffs { coeffs } => {
                if coeffs.len() < self.n_cap + 1 {
                    return Err(Error::Truncation {
                        what: "chi coefficients",
                        needed: self.n_cap + 1,
                        available: coeffs.len(),
                    });
                }
                let c = coeffs.iter().map(S::from_json).collect::<Result<Vec<_>>>()?;
                ChiFunction::new(self.n1, c)?
            }
        };
        let gamma = match &self.gamma {
            GammaSpec::Kind { kind } => match kind.as_str() {
                "unit" => Germ::unit(self.d, self.n1, self.n_cap),
                "gaussian" => Germ::gaussian(self.d, self.n1, self.n_cap)?,
                other => return Err(Error::Invalid(format!("unknown gamma kind `{other}`"))),
            },
            GammaSpec::Kernels { kernels } => {
                let k = kernels
                    .iter()
                    .map(SymTensor::from_json)
                    .collect::<Result<Vec<_>>>()?;
                Germ::new(self.d, self.n1, k)?
            }
        };
        let system = AppellSystem::new(chi.clone(), gamma.clone(), self.n_cap)?;
        let mut mv = serde_json::to_value(&self.measure)?;
        mv["d"] = Value::from(self.d);
        let measure = MomentFunctional::from_json(&mv, 2 * self.n_cap * self.n1)?;
        if measure.max_degree() < 2 * self.n_cap * self.n1 {
            return Err(Error::Truncation {
                what: "moments",
                needed: 2 * self.n_cap * self.n1,
                available: measure.max_degree(),
            });
        }
        let scale = match &self.scale {
            None => ScaleVector::default_for(self.d),
            Some(a) => {
                if a.len() != self.d {
                    return Err(Error::DimensionMismatch(a.len(), self.d));
                }
                ScaleVector::new(a.clone())?
            }
        };
        Ok(Setup {
            chi,
            gamma,
            system,
            measure,
            scale,
        })
    }
}
