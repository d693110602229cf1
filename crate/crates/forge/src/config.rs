//! Pipeline configuration from a TOML file.
//!
//! ```toml
//! resolution = 256
//! run_seed = 0
//!
//! [level]              # level generator settings
//! width = 32
//! height = 12
//! monsters = 3
//! coins = 3
//! gems = 1
//!
//! [split]
//! train = 0.8
//! val = 0.1
//! test = 0.1
//!
//! [[presets]]          # replaces a standard preset or adds a new one
//! name = "cautious"
//! coin_greed = 0.9
//! risk_tolerance = 0.0
//! jump_propensity = 0.2
//! climb_preference = 0.5
//! dither = 0.05
//!
//! [palette.space]      # optional; any palette field may be overridden
//! sky_top = [0, 0, 0]
//! # ...
//! ```
//!
//! The asset directory (`assets_dir`, or the `MUGENFORGE_ASSETS` environment
//! variable, which wins) may hold a `palette.toml` in the same format as the
//! `[palette]` table. An inline `[palette]` table wins over the asset file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use mugenforge_core::dataset::SplitRatios;
use mugenforge_core::render::{Palette, RenderConfig};
use mugenforge_core::{GenConfig, PolicyProfile, PresetRegistry};
use serde::Deserialize;

pub const ASSETS_ENV: &str = "MUGENFORGE_ASSETS";
pub const PALETTE_FILE: &str = "palette.toml";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub resolution: u32,
    /// Mixed into every per-episode policy seed.
    pub run_seed: u64,
    pub level: GenConfig,
    pub split: SplitConfig,
    pub presets: Vec<PolicyProfile>,
    pub palette: Option<Palette>,
    pub assets_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { train: 0.8, val: 0.1, test: 0.1 }
    }
}

impl Default for Config {
    fn default() -> Self {
        Config {
            resolution: 256,
            run_seed: 0,
            level: GenConfig::default(),
            split: SplitConfig::default(),
            presets: Vec::new(),
            palette: None,
            assets_dir: None,
        }
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let cfg: Config = toml::from_str(text)?;
        cfg.level.check().context("[level]")?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Config::parse(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Standard presets with this config's additions and replacements.
    pub fn registry(&self) -> Result<PresetRegistry> {
        let mut reg = PresetRegistry::standard();
        for p in &self.presets {
            reg.insert(p.clone()).with_context(|| format!("preset {:?}", p.name))?;
        }
        Ok(reg)
    }

    pub fn ratios(&self) -> SplitRatios {
        SplitRatios { train: self.split.train, val: self.split.val, test: self.split.test }
    }

    /// Asset directory, from the environment first.
    pub fn assets(&self) -> Option<PathBuf> {
        std::env::var_os(ASSETS_ENV).map(PathBuf::from).or_else(|| self.assets_dir.clone())
    }

    pub fn palette_with_assets(&self, assets: Option<&Path>) -> Result<Palette> {
        if let Some(p) = &self.palette {
            return Ok(p.clone());
        }
        if let Some(dir) = assets {
            let file = dir.join(PALETTE_FILE);
            if file.exists() {
                let text = std::fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
                return toml::from_str(&text).with_context(|| format!("parsing {}", file.display()));
            } else if !dir.is_dir() {
                bail!("asset directory {} does not exist", dir.display());
            }
        }
        Ok(Palette::default())
    }

    pub fn render_config(&self, resolution: Option<u32>) -> Result<RenderConfig> {
        let mut cfg = RenderConfig::new(resolution.unwrap_or(self.resolution))?;
        cfg.palette = self.palette_with_assets(self.assets().as_deref())?;
        Ok(cfg)
    }
}
