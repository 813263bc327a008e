//! Run configuration: a JSON file with `model`, `gpc`, `density`, `optimizer`
//! and `io` sections. Relative paths resolve against the file's directory.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use gpcid_core::mle::{GpcSettings, OptimizerConfig, PropagationMethod};
use gpcid_core::models::{CamelbackExperimentModel, ClutchModel, ForwardModel, SimulatorOptions, WetClutchParams};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliResult, Failure};

/// Overrides `io.cache_dir`.
pub const CACHE_DIR_ENV: &str = "GPCID_CACHE_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Camelback,
    Clutch,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Camelback => "camelback",
            ModelKind::Clutch => "clutch",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Failure;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "camelback" => Ok(ModelKind::Camelback),
            "clutch" => Ok(ModelKind::Clutch),
            _ => Err(Failure::usage(format!("unknown model {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MethodKind {
    GpcGauss,
    GpcMaxent,
    Mc,
    Qmc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub name: ModelKind,
    /// JSON file with wet-clutch parameters; defaults are used when absent.
    pub params: Option<PathBuf>,
    pub simulator: SimulatorOptions,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            name: ModelKind::Camelback,
            params: None,
            simulator: SimulatorOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GpcSection {
    pub degree: usize,
    /// Quadrature points per input; `degree + 1` when absent.
    pub nodes: Option<usize>,
    /// Highest raw moment passed to the MaxEnt fit.
    pub max_moment: u32,
    pub family: String,
}

impl Default for GpcSection {
    fn default() -> Self {
        Self {
            degree: 4,
            nodes: None,
            max_moment: 4,
            family: "hermite".into(),
        }
    }
}

impl GpcSection {
    pub fn settings(&self) -> GpcSettings {
        GpcSettings {
            degree: self.degree,
            nodes: self.nodes.unwrap_or(self.degree + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensitySection {
    pub method: MethodKind,
    /// Sample count of the MC and qMC methods.
    pub samples: usize,
    pub seed: u64,
    pub reference_samples: usize,
    pub reference_seed: u64,
    pub emd_grid: usize,
    pub curve_points: usize,
}

impl Default for DensitySection {
    fn default() -> Self {
        Self {
            method: MethodKind::GpcMaxent,
            samples: 25,
            seed: 1,
            reference_samples: 200_000,
            reference_seed: 20_000,
            emd_grid: gpcid_core::density::DEFAULT_EMD_GRID,
            curve_points: 401,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IoSection {
    pub out_dir: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub gpc: GpcSection,
    pub density: DensitySection,
    pub optimizer: OptimizerConfig,
    pub io: IoSection,
}

impl RunConfig {
    /// Parses `path`, resolves relative paths and validates the result.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
        let mut config: RunConfig =
            serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut config.model.params, &mut config.io.out_dir, &mut config.io.cache_dir]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> CliResult<()> {
        if let Some(p) = &self.model.params {
            if !p.is_file() {
                return Err(Failure::usage(format!("parameter file {} does not exist", p.display())));
            }
        }
        let s = self.gpc.settings();
        if s.nodes == 0 {
            return Err(Failure::usage("gpc.nodes must be positive"));
        }
        if !(2..=5).contains(&self.gpc.max_moment) {
            return Err(Failure::usage(format!("gpc.max_moment {} outside 2..=5", self.gpc.max_moment)));
        }
        self.gpc
            .family
            .parse::<gpcid_core::basis::PolynomialFamily>()
            .map_err(|e| Failure::usage(format!("gpc.family: {e}")))?;
        self.method().validate()?;
        self.optimizer.validate()?;
        if self.density.emd_grid < 2 || self.density.curve_points < 2 {
            return Err(Failure::usage("density.emd_grid and density.curve_points must be at least 2"));
        }
        Ok(())
    }

    pub fn method(&self) -> PropagationMethod {
        match self.density.method {
            MethodKind::GpcGauss => PropagationMethod::GpcGaussian,
            MethodKind::GpcMaxent => PropagationMethod::GpcMaxEnt {
                order: self.gpc.max_moment,
            },
            MethodKind::Mc => PropagationMethod::Mc {
                samples: self.density.samples,
                seed: self.density.seed,
            },
            MethodKind::Qmc => PropagationMethod::Qmc {
                samples: self.density.samples,
            },
        }
    }

    /// `$GPCID_CACHE_DIR` if set, else `io.cache_dir`.
    pub fn cache_dir(&self) -> Option<PathBuf> {
        match std::env::var_os(CACHE_DIR_ENV) {
            Some(dir) if !dir.is_empty() => Some(PathBuf::from(dir)),
            _ => self.io.cache_dir.clone(),
        }
    }

    pub fn clutch_params(&self) -> CliResult<WetClutchParams> {
        match &self.model.params {
            None => Ok(WetClutchParams::default()),
            Some(p) => read_json(p),
        }
    }

    pub fn forward_model(&self) -> CliResult<Arc<dyn ForwardModel>> {
        Ok(match self.model.name {
            ModelKind::Camelback => Arc::new(CamelbackExperimentModel),
            ModelKind::Clutch => Arc::new(ClutchModel::new(self.clutch_params()?, self.model.simulator)?),
        })
    }

    /// SHA-256 over the command name, this configuration and the command's
    /// own arguments.
    pub fn hash(&self, command: &str, args: &impl Serialize) -> String {
        let mut h = Sha256::new();
        h.update(command.as_bytes());
        h.update(b"\n");
        h.update(serde_json::to_vec(self).expect("config serializes"));
        h.update(b"\n");
        h.update(serde_json::to_vec(args).expect("arguments serialize"));
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::numeric(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Failure::io(path, e))
}
