//! TOML configuration for the pipeline.
//!
//! ```toml
//! [gnn]
//! d = 8
//! k = 2
//! activation = "tanh"
//! # w (row-major d×d) and b are optional; the default is w = 0.5·I, b = 0
//!
//! [score]
//! w_t = [...]    # 8 weights
//! w_i = [...]    # 6 weights
//! w_g = [...]    # 2·d + 3 weights
//! lambda = 1.5
//! theta_high = 0.7
//! theta_low = 0.4
//! version = "..."
//!
//! [image]
//! conf_threshold = 0.5
//!
//! [kb]
//! dim = 256
//! k = 3
//!
//! [paths]        # optional, relative to the config file
//! lexicon = "lexicon.toml"
//! taxonomy = "taxonomy.toml"
//! rules = "rules.toml"
//! corpus = "corpus/"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph_features::{Activation, GnnParams};
use crate::image_features::DEFAULT_CONF_THRESHOLD;
use crate::knowledge_base::{DEFAULT_DIM, DEFAULT_K};
use crate::scoring::ScoringModel;

const DEFAULT_CONFIG: &str = include_str!("../assets/config.toml");

/// Scale of the default identity propagation matrix.
pub const DEFAULT_GNN_SCALE: f64 = 0.5;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GnnSection {
    pub d: usize,
    pub k: usize,
    #[serde(default = "default_activation")]
    pub activation: Activation,
    #[serde(default)]
    pub w: Option<Vec<f64>>,
    #[serde(default)]
    pub b: Option<Vec<f64>>,
}

fn default_activation() -> Activation {
    Activation::Tanh
}

impl GnnSection {
    pub fn params(&self) -> GnnParams {
        let mut p = GnnParams::scaled_identity(self.d, self.k, DEFAULT_GNN_SCALE, self.activation);
        if let Some(w) = &self.w {
            p.weight = w.clone();
        }
        if let Some(b) = &self.b {
            p.bias = b.clone();
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageSection {
    #[serde(default = "default_conf")]
    pub conf_threshold: f64,
}

fn default_conf() -> f64 {
    DEFAULT_CONF_THRESHOLD
}

impl Default for ImageSection {
    fn default() -> Self {
        Self {
            conf_threshold: DEFAULT_CONF_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KbSection {
    #[serde(default = "default_kb_dim")]
    pub dim: usize,
    #[serde(default = "default_kb_k")]
    pub k: usize,
}

fn default_kb_dim() -> usize {
    DEFAULT_DIM
}

fn default_kb_k() -> usize {
    DEFAULT_K
}

impl Default for KbSection {
    fn default() -> Self {
        Self {
            dim: DEFAULT_DIM,
            k: DEFAULT_K,
        }
    }
}

/// Optional asset overrides; unset entries use the built-in assets.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsSection {
    pub lexicon: Option<PathBuf>,
    pub taxonomy: Option<PathBuf>,
    pub rules: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub gnn: GnnSection,
    pub score: ScoringModel,
    #[serde(default)]
    pub image: ImageSection,
    #[serde(default)]
    pub kb: KbSection,
    #[serde(default)]
    pub paths: PathsSection,
}

impl Config {
    pub fn from_toml(src: &str) -> Result<Self, ConfigError> {
        let cfg: Config = toml::from_str(src)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative asset paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let src = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_toml(&src)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut cfg.paths.lexicon,
            &mut cfg.paths.taxonomy,
            &mut cfg.paths.rules,
            &mut cfg.paths.corpus,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let params = self.gnn.params();
        params
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("[gnn] {e}")))?;
        self.score
            .validate(params.readout_dim())
            .map_err(|e| ConfigError::Invalid(format!("[score] {e}")))?;
        if !(0.0..=1.0).contains(&self.image.conf_threshold) {
            return Err(ConfigError::Invalid(format!(
                "[image] conf_threshold {} outside [0, 1]",
                self.image.conf_threshold
            )));
        }
        if self.kb.dim < 2 || !self.kb.dim.is_power_of_two() {
            return Err(ConfigError::Invalid(format!(
                "[kb] dim {} must be a power of two",
                self.kb.dim
            )));
        }
        if self.kb.k == 0 {
            return Err(ConfigError::Invalid("[kb] k must be positive".into()));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

impl Default for Config {
    fn default() -> Self {
        Self::from_toml(DEFAULT_CONFIG).expect("built-in config is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_config_is_valid() {
        let c = Config::default();
        assert_eq!(c.gnn.params(), GnnParams::default());
        assert_eq!(c.score.w_g.len(), 19);
        assert_eq!(c.kb.dim, 256);
        assert_eq!(c.kb.k, 3);
        assert_eq!(c.image.conf_threshold, 0.5);
    }

    #[test]
    fn round_trips_through_toml() {
        let c = Config::default();
        assert_eq!(Config::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn weight_length_must_match_gnn_dim() {
        let mut c = Config::default();
        c.gnn.d = 4;
        assert!(matches!(
            Config::from_toml(&c.to_toml()),
            Err(ConfigError::Invalid(m)) if m.contains("w_g")
        ));
    }

    #[test]
    fn explicit_matrix_is_used() {
        let mut c = Config::default();
        c.gnn.d = 3;
        c.gnn.w = Some(vec![1.0; 9]);
        c.score.w_g = vec![0.0; 9];
        let c = Config::from_toml(&c.to_toml()).unwrap();
        assert_eq!(c.gnn.params().weight, vec![1.0; 9]);
        c.gnn.w.as_ref().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let mut c = Config::default();
        c.kb.dim = 100;
        assert!(c.validate().is_err());
        let mut c = Config::default();
        c.image.conf_threshold = 1.5;
        assert!(c.validate().is_err());
        let mut c = Config::default();
        c.score.theta_low = 0.9;
        assert!(c.validate().is_err());
        assert!(matches!(
            Config::from_toml("[gnn]\nd = 8\nk = 2\nextra = 1\n"),
            Err(ConfigError::Parse(_))
        ));
    }

    #[test]
    fn load_resolves_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = Config::default();
        c.paths.rules = Some("rules.toml".into());
        let path = dir.path().join("cfg.toml");
        std::fs::write(&path, c.to_toml()).unwrap();
        let loaded = Config::load(&path).unwrap();
        assert_eq!(loaded.paths.rules, Some(dir.path().join("rules.toml")));
    }
}
