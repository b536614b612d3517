//! Run configuration, read from JSON.

use super::dataset::{load_attributes, load_log, load_matrix, DataError, Dataset};
use crate::languages::abac::Attributes;
use crate::languages::starbac::StarbacConfig;
use crate::miner::AnnealSchedule;
use crate::objectives::Weights;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Language {
    Rbac,
    RbacReg,
    Abac,
    AbacLog,
    BmRbac,
    Xacml,
    Starbac,
}

impl Language {
    pub const ALL: [Language; 7] = [
        Language::Rbac,
        Language::RbacReg,
        Language::Abac,
        Language::AbacLog,
        Language::BmRbac,
        Language::Xacml,
        Language::Starbac,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Language::Rbac => "rbac",
            Language::RbacReg => "rbac-reg",
            Language::Abac => "abac",
            Language::AbacLog => "abac-log",
            Language::BmRbac => "bm-rbac",
            Language::Xacml => "xacml",
            Language::Starbac => "starbac",
        }
    }
}

impl std::str::FromStr for Language {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Language::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| ConfigError::Invalid(format!("unknown language `{s}`")))
    }
}

/// Input files. Relative paths are resolved against the configuration file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSources {
    pub matrix: Option<PathBuf>,
    pub log: Option<PathBuf>,
    pub user_attributes: Option<PathBuf>,
    pub perm_attributes: Option<PathBuf>,
}

impl DataSources {
    pub fn resolve(&self, base: &Path) -> DataSources {
        let r = |p: &Option<PathBuf>| p.as_ref().map(|p| base.join(p));
        DataSources {
            matrix: r(&self.matrix),
            log: r(&self.log),
            user_attributes: r(&self.user_attributes),
            perm_attributes: r(&self.perm_attributes),
        }
    }

    pub fn load(&self) -> Result<Dataset, DataError> {
        let attrs = |p: &Option<PathBuf>| -> Result<Attributes, DataError> {
            p.as_deref().map_or(Ok(Attributes::new()), load_attributes)
        };
        let ua = attrs(&self.user_attributes)?;
        let pa = attrs(&self.perm_attributes)?;
        match (&self.matrix, &self.log) {
            (Some(m), None) => Ok(Dataset::from_matrix(load_matrix(m)?, ua, pa)),
            (None, Some(l)) => Dataset::from_log(load_log(l)?, ua, pa),
            _ => Err(DataError::Invalid(
                "exactly one of `matrix` and `log` must be given".into(),
            )),
        }
    }
}

fn default_size() -> usize {
    5
}
fn default_two() -> usize {
    2
}
fn default_restarts() -> usize {
    3
}
fn default_folds() -> usize {
    5
}
fn default_fpr_cap() -> f64 {
    0.05
}
fn default_checkpoint_every() -> usize {
    25
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub language: Language,
    #[serde(default)]
    pub data: DataSources,
    /// Roles of RBAC and BM-RBAC, rules of ABAC.
    #[serde(default = "default_size")]
    pub size: usize,
    #[serde(default = "default_two")]
    pub depth: usize,
    #[serde(default = "default_two")]
    pub breadth: usize,
    #[serde(default)]
    pub starbac: StarbacConfig,
    #[serde(default)]
    pub weights: Weights,
    #[serde(default)]
    pub schedule: AnnealSchedule,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_folds")]
    pub folds: usize,
    /// Candidate values per parameter name; see [`RunConfig::with`].
    #[serde(default)]
    pub grid: BTreeMap<String, Vec<f64>>,
    /// Largest number of grid cells evaluated; larger grids are subsampled.
    #[serde(default)]
    pub grid_budget: Option<usize>,
    #[serde(default = "default_fpr_cap")]
    pub fpr_cap: f64,
    #[serde(default = "default_checkpoint_every")]
    pub checkpoint_every: usize,
}

impl RunConfig {
    pub fn new(language: Language) -> RunConfig {
        serde_json::from_value(serde_json::json!({ "language": language }))
            .expect("defaults deserialize")
    }

    /// Reads a configuration file and resolves its data paths.
    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut c: RunConfig = serde_json::from_str(&text)?;
        c.data = c.data.resolve(path.parent().unwrap_or(Path::new(".")));
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        self.weights
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.schedule
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.size == 0 {
            return bad("size must be at least 1".into());
        }
        if self.restarts == 0 {
            return bad("restarts must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.fpr_cap) {
            return bad(format!("fpr_cap must lie in [0, 1], got {}", self.fpr_cap));
        }
        for (k, vs) in &self.grid {
            if vs.is_empty() {
                return bad(format!("grid parameter `{k}` has no candidates"));
            }
            for v in vs {
                self.with(&BTreeMap::from([(k.clone(), *v)]))?;
            }
        }
        Ok(())
    }

    /// Copy with the named parameters replaced. Known names are the weight
    /// names, `size`, `depth`, `breadth`, `restarts`, the schedule fields
    /// `beta0`, `alpha`, `iterations` and the STARBAC fields `roles`,
    /// `user_spatial`, `perm_spatial`, `user_temporal`, `perm_temporal`,
    /// `max_distance`, `window`.
    pub fn with(&self, params: &BTreeMap<String, f64>) -> Result<RunConfig, ConfigError> {
        let mut c = self.clone();
        for (k, &v) in params {
            let int = || -> Result<usize, ConfigError> {
                if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                    Ok(v as usize)
                } else {
                    Err(ConfigError::Invalid(format!("`{k}` must be a non-negative integer, got {v}")))
                }
            };
            match k.as_str() {
                "lambda" => c.weights.lambda = v,
                "lambda0" => c.weights.lambda0 = v,
                "lambda11" => c.weights.lambda11 = v,
                "lambda12" => c.weights.lambda12 = v,
                "lambda2" => c.weights.lambda2 = v,
                "size" => c.size = int()?,
                "depth" => c.depth = int()?,
                "breadth" => c.breadth = int()?,
                "restarts" => c.restarts = int()?,
                "beta0" => c.schedule.beta0 = v,
                "alpha" => c.schedule.alpha = v,
                "iterations" => c.schedule.iterations = int()?,
                "roles" => c.starbac.roles = int()?,
                "user_spatial" => c.starbac.user_spatial = int()?,
                "perm_spatial" => c.starbac.perm_spatial = int()?,
                "user_temporal" => c.starbac.user_temporal = int()?,
                "perm_temporal" => c.starbac.perm_temporal = int()?,
                "max_distance" => c.starbac.max_distance = int()? as u32,
                "window" => c.starbac.window = int()? as u32,
                _ => return Err(ConfigError::Invalid(format!("unknown parameter `{k}`"))),
            }
        }
        c.weights
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        c.schedule
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn language_is_required() {
        assert!(serde_json::from_str::<RunConfig>("{}").is_err());
    }

    #[test]
    fn defaults_fill_in() {
        let c: RunConfig = serde_json::from_str(r#"{"language":"rbac-reg","size":2}"#).unwrap();
        assert_eq!(c.language, Language::RbacReg);
        assert_eq!(c.size, 2);
        assert_eq!(c.schedule, AnnealSchedule::default());
        assert_eq!(c.fpr_cap, 0.05);
        assert_eq!(c.checkpoint_every, 25);
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"language":"rbac","sise":2}"#).is_err());
    }

    #[test]
    fn overrides() {
        let c = RunConfig::new(Language::Rbac);
        let p = BTreeMap::from([("lambda".to_string(), 0.5), ("size".to_string(), 3.0)]);
        let d = c.with(&p).unwrap();
        assert_eq!((d.weights.lambda, d.size), (0.5, 3));
        assert!(c.with(&BTreeMap::from([("size".to_string(), 1.5)])).is_err());
        assert!(c.with(&BTreeMap::from([("nope".to_string(), 1.0)])).is_err());
    }
}
