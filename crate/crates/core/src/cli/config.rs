//! Run configuration files.
//!
//! ```toml
//! variant = "mcrnn_mla"
//! layers = 2
//! widths = [50, 30]
//! branches = 3
//! seed = 0
//!
//! [cluster]
//! n = 10
//! p = 0.1
//! r = 0.001
//! lambda = 0.01          # or lambda_plus / lambda_minus
//!
//! [fista]
//! l1_weight = 1.0
//! max_iter = 200
//! rel_tol = 1e-6
//! ```
//!
//! Every key is optional except `variant` (which `--variant` may supply).

use std::path::Path;

use anyhow::{anyhow, Context};
use serde::{Deserialize, Serialize};

use super::UsageError;
use crate::model::{TrainConfig, Variant};
use crate::nucleus::ClusterParams;
use crate::numerics::FistaConfig;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub variant: Option<String>,
    pub layers: Option<usize>,
    pub widths: Option<Vec<usize>>,
    pub branches: Option<usize>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub cluster: RawCluster,
    #[serde(default)]
    pub fista: FistaConfig,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawCluster {
    pub n: Option<u32>,
    pub p: Option<f64>,
    pub r: Option<f64>,
    pub lambda: Option<f64>,
    pub lambda_plus: Option<f64>,
    pub lambda_minus: Option<f64>,
}

/// A fully resolved configuration: defaults filled in, overrides applied.
/// Its serialized form is itself a valid config file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub variant: Variant,
    pub layers: usize,
    pub widths: Vec<usize>,
    pub branches: usize,
    pub seed: u64,
    pub cluster: ClusterParams,
    pub fista: FistaConfig,
}

impl RawConfig {
    pub fn from_path(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("config {}", path.display()))
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        toml::from_str(text).map_err(|e| anyhow!(UsageError(e.to_string())))
    }

    /// Fill defaults and validate. `variant` and `seed` override the file.
    pub fn resolve(&self, variant: Option<&str>, seed: Option<u64>) -> anyhow::Result<RunConfig> {
        let name = variant
            .or(self.variant.as_deref())
            .ok_or_else(|| UsageError("no variant given (config key `variant` or --variant)".into()))?;
        let variant: Variant = name.parse().map_err(|e: crate::Error| UsageError(e.to_string()))?;

        let defaults = TrainConfig::default();
        let (layers, widths) = match (self.layers, &self.widths) {
            (Some(l), Some(w)) => (l, w.clone()),
            (None, Some(w)) => (w.len(), w.clone()),
            (Some(l), None) if l == defaults.layers => (l, defaults.widths.clone()),
            (Some(l), None) => return Err(UsageError(format!("layers = {l} needs explicit widths")).into()),
            (None, None) => (defaults.layers, defaults.widths.clone()),
        };

        let c = &self.cluster;
        let base = ClusterParams::default();
        if c.lambda.is_some() && (c.lambda_plus.is_some() || c.lambda_minus.is_some()) {
            return Err(UsageError("cluster: give `lambda` or `lambda_plus`/`lambda_minus`, not both".into()).into());
        }
        let cluster = ClusterParams::new(
            c.n.unwrap_or(base.n()),
            c.p.unwrap_or(base.p()),
            c.r.unwrap_or(base.r()),
            c.lambda_plus.or(c.lambda).unwrap_or(base.lambda_plus()),
            c.lambda_minus.or(c.lambda).unwrap_or(base.lambda_minus()),
        )
        .context("cluster parameters")?;

        let cfg = RunConfig {
            variant,
            layers,
            widths,
            branches: self.branches.unwrap_or(defaults.branches),
            seed: seed.or(self.seed).unwrap_or(defaults.master_seed),
            cluster,
            fista: self.fista,
        };
        cfg.train_config().validate().context("config")?;
        Ok(cfg)
    }
}

impl RunConfig {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            layers: self.layers,
            widths: self.widths.clone(),
            branches: self.branches,
            cluster: self.cluster,
            fista: self.fista,
            master_seed: self.seed,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}
