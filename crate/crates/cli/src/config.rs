//! The run configuration file: `key = value` lines under `[physics]`,
//! `[model]` and `[train]`. Every key is optional; unknown keys are errors.

use std::path::Path;

use idriftnet_core::model::ModelConfig;
use idriftnet_core::physics::PhysicsConfig;
use idriftnet_core::train::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub physics: PhysicsConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path`, or returns the defaults when no file is given.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                Self::parse(&text).map_err(|e| match e {
                    CliError::Config(msg) => CliError::Config(format!("{}: {msg}", p.display())),
                    other => other,
                })
            }
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.physics.validate()?;
        self.model.validate()?;
        self.train.validate()?;
        Ok(())
    }

    /// The fully resolved configuration in file syntax.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Every configuration key with its default, for `--help`.
pub fn config_help() -> String {
    format!(
        "Configuration file keys and defaults (all optional, unknown keys are rejected):\n\n{}",
        RunConfig::default().to_toml()
    )
}
