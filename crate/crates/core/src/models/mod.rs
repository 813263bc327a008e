//! Forward models mapping an experiment configuration and a parameter vector
//! to a scalar output.

mod camelback;
mod clutch;
mod profile;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use camelback::{camelback, CamelbackExperimentModel, CamelbackModel, CAMELBACK_DOMAIN};
pub use clutch::{
    ClutchModel, Phase, SimulationTrace, SimulatorOptions, TorqueMap,
    TracePoint, WetClutchParams,
};
pub use profile::FeedforwardProfile;

/// Brake load selector of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoadLevel {
    Low,
    High,
}

impl fmt::Display for LoadLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LoadLevel::Low => "low",
            LoadLevel::High => "high",
        })
    }
}

impl FromStr for LoadLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "low" => Ok(LoadLevel::Low),
            "high" => Ok(LoadLevel::High),
            other => Err(Error::Parse(format!("unknown load level {other:?}"))),
        }
    }
}

/// Control settings of one engagement experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub id: u32,
    /// First pulse duration (s).
    pub dt: f64,
    /// Post-pulse current level (A).
    pub u0: f64,
    /// Second pulse height above `u0` (A).
    pub du: f64,
    pub omega_m_rpm: f64,
    pub load: LoadLevel,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::ParameterDomain(format!("experiment {}: dt must be positive", self.id)));
        }
        if !(self.omega_m_rpm > 0.0 && self.omega_m_rpm.is_finite()) {
            return Err(Error::ParameterDomain(format!(
                "experiment {}: motor speed must be positive",
                self.id
            )));
        }
        if !(self.u0.is_finite() && self.du.is_finite()) {
            return Err(Error::ParameterDomain(format!("experiment {}: currents must be finite", self.id)));
        }
        Ok(())
    }
}

/// Deterministic scalar forward map `(l, x) ↦ y`.
pub trait ForwardModel: Send + Sync {
    fn input_dimension(&self) -> usize;

    /// Whether concurrent evaluation is safe.
    fn is_pure(&self) -> bool {
        true
    }

    fn evaluate(&self, config: &ExperimentConfig, x: &[f64]) -> Result<f64>;
}
