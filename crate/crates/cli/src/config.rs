//! Experiment files: TOML with a `schema_version` key and one section per
//! subcommand. Unknown keys are rejected everywhere.

use std::fs;
use std::path::{Path, PathBuf};

use muskat_core::evolution::SimConfig;
use muskat_core::stability::EquilibriumConfig;
use muskat_core::{MuskatError, PhysicalParams};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("{path}: unsupported schema_version {found}, expected {SCHEMA_VERSION}")]
    Schema { path: PathBuf, found: u32 },
    #[error("{path}: missing [{section}] section")]
    MissingSection {
        path: PathBuf,
        section: &'static str,
    },
    #[error("{path}: {source}")]
    Invalid { path: PathBuf, source: MuskatError },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    pub params: PhysicalParams,
    pub equilibrium: EquilibriumConfig,
    pub n_per_circle: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// Default output directory; `--out` overrides it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumSection>,
}

impl ExperimentConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::Schema {
                path: path.to_path_buf(),
                found: cfg.schema_version,
            });
        }
        cfg.validate().map_err(|source| ConfigError::Invalid {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment configs contain only TOML-representable values")
    }

    fn validate(&self) -> muskat_core::Result<()> {
        if let Some(sim) = &self.simulate {
            sim.validate()?;
        }
        if let Some(sp) = &self.spectrum {
            sp.params.validate()?;
            sp.equilibrium.validate()?;
            if sp.params.model != sp.equilibrium.model {
                return Err(MuskatError::ModelMismatch {
                    expected: sp.equilibrium.model.name(),
                    found: sp.params.model.name(),
                });
            }
            if sp.n_per_circle < 8 || sp.n_per_circle % 2 != 0 {
                return Err(MuskatError::Params(format!(
                    "n_per_circle must be even and at least 8, got {}",
                    sp.n_per_circle
                )));
            }
        }
        Ok(())
    }

    pub fn simulate_section(&self, path: &Path) -> Result<&SimConfig, ConfigError> {
        self.simulate
            .as_ref()
            .ok_or_else(|| ConfigError::MissingSection {
                path: path.to_path_buf(),
                section: "simulate",
            })
    }

    pub fn spectrum_section(&self, path: &Path) -> Result<&SpectrumSection, ConfigError> {
        self.spectrum
            .as_ref()
            .ok_or_else(|| ConfigError::MissingSection {
                path: path.to_path_buf(),
                section: "spectrum",
            })
    }
}
