//! Service and CLI configuration: a TOML file, then `SOSKIT_PORT`, then
//! command-line flags.

use std::net::{IpAddr, Ipv4Addr};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use soskit_core::bvh::{AxisRemap, BvhOptions};
use soskit_core::optimizer::OptimizerSettings;

pub const DEFAULT_PORT: u16 = 7878;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub port: u16,
    pub bind: IpAddr,
    /// Relative saliency threshold used when a request names none.
    pub theta: f64,
    /// Longest motion the service accepts, in frames.
    pub max_frames: usize,
    /// Hard cap on optimizer iterations per request.
    pub max_iters_cap: usize,
    /// Root of server-local motion files; file references are refused
    /// when unset.
    pub data_dir: Option<PathBuf>,
    pub bvh_scale: f64,
    pub bvh_remap: String,
    /// Optimizer defaults; `optimizer.beta` also serves soft quantization.
    pub optimizer: OptimizerSettings,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            port: DEFAULT_PORT,
            bind: IpAddr::V4(Ipv4Addr::LOCALHOST),
            theta: 0.9,
            max_frames: 2000,
            max_iters_cap: 1000,
            data_dir: None,
            bvh_scale: 1.0,
            bvh_remap: "-x,z,y".into(),
            optimizer: OptimizerSettings::default(),
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let cfg: Config = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path` when given, otherwise starts from the defaults.
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                Self::from_toml(&text).with_context(|| format!("in config {}", p.display()))
            }
            None => Ok(Self::default()),
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.port == 0 {
            bail!("port must lie in [1, 65535]");
        }
        if !(0.0..=1.0).contains(&self.theta) {
            bail!("theta must lie in [0, 1], got {}", self.theta);
        }
        if self.max_frames < 2 {
            bail!("max_frames must be at least 2");
        }
        if !(self.bvh_scale.is_finite() && self.bvh_scale > 0.0) {
            bail!("bvh_scale must be positive, got {}", self.bvh_scale);
        }
        self.bvh_options()?;
        self.optimizer.validate()?;
        Ok(())
    }

    pub fn bvh_options(&self) -> anyhow::Result<BvhOptions> {
        Ok(BvhOptions {
            scale: self.bvh_scale,
            remap: self.bvh_remap.parse::<AxisRemap>()?,
            infer_roles: true,
        })
    }
}
