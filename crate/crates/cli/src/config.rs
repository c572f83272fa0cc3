use std::fs;
use std::path::{Path, PathBuf};

use bodyshape::shape_model::DEFAULT_COMPONENTS;
use bodyshape::tailor::TailorConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Default file locations; explicit command-line paths take precedence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub map: Option<PathBuf>,
    pub regressor: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: Paths,
    pub tailor: TailorConfig,
    /// Tailor settings file, used when `tailor` is not given inline.
    pub tailor_file: Option<PathBuf>,
    pub components: usize,
    pub map_ridge: f64,
    pub regressor_ridge: f64,
    pub spread: f64,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            paths: Paths::default(),
            tailor: TailorConfig::default(),
            tailor_file: None,
            components: DEFAULT_COMPONENTS,
            map_ridge: 1e-6,
            regressor_ridge: 100.0,
            spread: 0.05,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        if let Some(file) = &cfg.tailor_file {
            let file = path.parent().map_or(file.clone(), |dir| dir.join(file));
            cfg.tailor = TailorConfig::load(&file)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.components == 0 {
            return Err(CliError::Usage("components must be at least 1".into()));
        }
        if !(self.map_ridge >= 0.0) || !(self.regressor_ridge > 0.0) {
            return Err(CliError::Usage("ridge values must be non-negative (regressor: positive)".into()));
        }
        if !(self.spread >= 0.0) {
            return Err(CliError::Usage(format!("spread {} must be non-negative", self.spread)));
        }
        self.tailor.validate()?;
        Ok(())
    }
}

/// The explicit path, else the configured one.
pub fn pick(explicit: &Option<PathBuf>, configured: &Option<PathBuf>, what: &str) -> Result<PathBuf, CliError> {
    explicit
        .clone()
        .or_else(|| configured.clone())
        .ok_or_else(|| CliError::Usage(format!("no {what} path given")))
}
