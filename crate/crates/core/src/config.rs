//! JSON descriptions of settings, for files and the command line.
//!
//! ```
//! use delegation::config::SettingSpec;
//!
//! let spec: SettingSpec = serde_json::from_str(r#"{
//!     "distribution": {"kind": "power", "k": 2},
//!     "kernel": {"kind": "quadratic_loss"},
//!     "bias": {"kind": "affine", "intercept": 0.1, "slope": 0.2}
//! }"#).unwrap();
//! let setting = spec.build().unwrap();
//! assert!((setting.mean_state() - 2.0 / 3.0).abs() < 1e-12);
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BiasFunction, DecisionSetting, PayoffKernel, StateDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionSpec {
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// `F(θ) = θ^k` on `[0, 1]`.
    Power {
        k: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    /// `-(y - θ)²`, reported in loss units.
    QuadraticLoss,
    /// `θy - y²/2`, generic units.
    Quadratic,
    /// `θy - |y|^p/p`, generic units.
    Power { p: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BiasSpec {
    Constant { beta: f64 },
    Affine { intercept: f64, slope: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SettingSpec {
    pub distribution: DistributionSpec,
    pub kernel: KernelSpec,
    pub bias: BiasSpec,
}

impl SettingSpec {
    /// Uniform states, quadratic loss, constant bias.
    pub fn uqc(beta: f64) -> Self {
        Self {
            distribution: DistributionSpec::Uniform { lo: 0.0, hi: 1.0 },
            kernel: KernelSpec::QuadraticLoss,
            bias: BiasSpec::Constant { beta },
        }
    }

    /// Named preset; `beta` sets the bias.
    pub fn preset(name: &str, beta: f64) -> Result<Self> {
        match name {
            "uqc" => Ok(Self::uqc(beta)),
            "uqc-generic" => Ok(Self {
                kernel: KernelSpec::Quadratic,
                ..Self::uqc(beta)
            }),
            other => Err(Error::Config(format!(
                "unknown preset '{other}' (expected uqc or uqc-generic)"
            ))),
        }
    }

    pub fn build(&self) -> Result<DecisionSetting> {
        let dist = match self.distribution {
            DistributionSpec::Uniform { lo, hi } => StateDistribution::uniform(lo, hi)?,
            DistributionSpec::Power { k } => StateDistribution::power(k)?,
        };
        let kernel = match self.kernel {
            KernelSpec::QuadraticLoss => PayoffKernel::quadratic_loss(),
            KernelSpec::Quadratic => PayoffKernel::quadratic(),
            KernelSpec::Power { p } => PayoffKernel::power(p)?,
        };
        let bias = match self.bias {
            BiasSpec::Constant { beta } => BiasFunction::constant(beta),
            BiasSpec::Affine { intercept, slope } => BiasFunction::affine(intercept, slope),
        };
        DecisionSetting::new(dist, kernel, bias)
    }

    /// Same setting with a new constant bias.
    pub fn with_beta(mut self, beta: f64) -> Self {
        self.bias = BiasSpec::Constant { beta };
        self
    }
}
