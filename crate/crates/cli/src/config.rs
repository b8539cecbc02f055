use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use lungfield::datasets::{Preprocess, ScanOptions, SplitSpec};
use lungfield::imaging::{AugmentConfig, ClaheConfig};
use lungfield::model::{FitOptions, InferenceMode, ModelConfig};
use serde::{Deserialize, Serialize};

/// A configuration problem: bad file, unknown key, invalid value.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn config_error(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    /// 256×256, depth 8, base 64.
    Full,
    /// 64×64, depth 6, base 16.
    Desk,
}

/// Every setting of a run, flat so it reads and writes as plain `key = value` lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,

    pub image_size: usize,
    pub in_channels: usize,
    pub base_channels: usize,
    pub depth: usize,
    pub lambda_l1: f64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    pub dropout_up_blocks: usize,
    pub dropout_rate: f64,
    pub bn_momentum: f64,
    pub bn_epsilon: f64,
    pub init_std: f64,
    pub inference_mode: InferenceMode,

    pub augment: bool,
    pub rotation_range_deg: f64,
    pub width_shift_frac: f64,
    pub height_shift_frac: f64,
    pub shear_range: f64,
    pub zoom_low: f64,
    pub zoom_high: f64,
    pub isotropic_zoom: bool,
    pub horizontal_flip: bool,
    pub vertical_flip: bool,

    pub train_fraction: f64,

    pub clahe: bool,
    pub clahe_clip: f64,
    pub clahe_tiles: usize,

    pub images: String,
    pub masks: Vec<String>,
    pub mask_suffix: String,
    pub dataset_tag: String,

    pub steps: u64,
    pub batch_size: usize,
    pub eval_interval: u64,
    /// Pairs scored per side at each accuracy evaluation; 0 scores all.
    pub eval_limit: usize,
    /// Periodic checkpoint spacing in steps; 0 keeps only the initial and final ones.
    pub checkpoint_interval: u64,
    pub prefetch: usize,

    pub output_dir: String,
    /// Defaults to `<output_dir>/checkpoints` when empty.
    pub checkpoint_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        let m = ModelConfig::default();
        let a = AugmentConfig::default();
        let c = ClaheConfig::default();
        let f = FitOptions::default();
        RunConfig {
            seed: m.seed,
            image_size: m.image_size,
            in_channels: m.in_channels,
            base_channels: m.base_channels,
            depth: m.depth,
            lambda_l1: m.lambda_l1,
            lr: m.lr,
            beta1: m.beta1,
            beta2: m.beta2,
            adam_epsilon: m.adam_epsilon,
            dropout_up_blocks: m.dropout_up_blocks,
            dropout_rate: m.dropout_rate,
            bn_momentum: m.bn_momentum,
            bn_epsilon: m.bn_epsilon,
            init_std: m.init_std,
            inference_mode: m.inference_mode,
            augment: true,
            rotation_range_deg: a.rotation_range_deg,
            width_shift_frac: a.width_shift_frac,
            height_shift_frac: a.height_shift_frac,
            shear_range: a.shear_range,
            zoom_low: a.zoom_low,
            zoom_high: a.zoom_high,
            isotropic_zoom: a.isotropic_zoom,
            horizontal_flip: a.horizontal_flip,
            vertical_flip: a.vertical_flip,
            train_fraction: SplitSpec::default().train_fraction,
            clahe: false,
            clahe_clip: c.clip_limit,
            clahe_tiles: c.tiles_x,
            images: String::new(),
            masks: Vec::new(),
            mask_suffix: "_mask".into(),
            dataset_tag: String::new(),
            steps: f.steps,
            batch_size: 1,
            eval_interval: f.eval_interval,
            eval_limit: f.eval_limit.unwrap_or(0),
            checkpoint_interval: 1000,
            prefetch: f.prefetch,
            output_dir: String::new(),
            checkpoint_dir: String::new(),
        }
    }
}

impl RunConfig {
    pub fn preset(p: Preset) -> Self {
        match p {
            Preset::Full => Self::default(),
            Preset::Desk => {
                let d = ModelConfig::desk();
                RunConfig {
                    image_size: d.image_size,
                    base_channels: d.base_channels,
                    depth: d.depth,
                    ..Self::default()
                }
            }
        }
    }

    /// Layers, lowest priority first: preset, config file, `key=value` overrides.
    pub fn resolve(preset: Option<Preset>, file: Option<&Path>, overrides: &[(String, toml::Value)]) -> Result<Self> {
        let base = Self::preset(preset.unwrap_or(Preset::Full));
        let mut table = toml::Table::try_from(&base).context("serializing preset")?;
        if let Some(path) = file {
            let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
            let file_table: toml::Table = text
                .parse()
                .map_err(|e| config_error(format!("{}: {e}", path.display())))?;
            table.extend(file_table);
        }
        for (k, v) in overrides {
            table.insert(k.clone(), v.clone());
        }
        let cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| config_error(e.to_string().trim().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |r: lungfield::Result<()>| r.map_err(|e| config_error(e.to_string()));
        wrap(self.model().validate())?;
        wrap(self.augment_config().validate())?;
        if self.batch_size == 0 {
            return Err(config_error("batch_size must be >= 1"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(config_error(format!("train_fraction must be in (0, 1), got {}", self.train_fraction)));
        }
        if self.clahe && (self.clahe_tiles == 0 || !(self.clahe_clip > 0.0)) {
            return Err(config_error("clahe needs clahe_tiles >= 1 and clahe_clip > 0"));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn model(&self) -> ModelConfig {
        ModelConfig {
            image_size: self.image_size,
            in_channels: self.in_channels,
            base_channels: self.base_channels,
            depth: self.depth,
            lambda_l1: self.lambda_l1,
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            adam_epsilon: self.adam_epsilon,
            dropout_up_blocks: self.dropout_up_blocks,
            dropout_rate: self.dropout_rate,
            bn_momentum: self.bn_momentum,
            bn_epsilon: self.bn_epsilon,
            init_std: self.init_std,
            inference_mode: self.inference_mode,
            seed: self.seed,
        }
    }

    pub fn augment_config(&self) -> AugmentConfig {
        AugmentConfig {
            rotation_range_deg: self.rotation_range_deg,
            width_shift_frac: self.width_shift_frac,
            height_shift_frac: self.height_shift_frac,
            shear_range: self.shear_range,
            zoom_low: self.zoom_low,
            zoom_high: self.zoom_high,
            isotropic_zoom: self.isotropic_zoom,
            horizontal_flip: self.horizontal_flip,
            vertical_flip: self.vertical_flip,
        }
    }

    pub fn split(&self) -> SplitSpec {
        SplitSpec {
            train_fraction: self.train_fraction,
            seed: self.seed,
        }
    }

    pub fn preprocess(&self) -> Preprocess {
        Preprocess {
            size: self.image_size,
            clahe: self.clahe.then_some(ClaheConfig {
                clip_limit: self.clahe_clip,
                tiles_x: self.clahe_tiles,
                tiles_y: self.clahe_tiles,
            }),
        }
    }

    pub fn fit_options(&self, steps: u64) -> FitOptions {
        FitOptions {
            steps,
            eval_interval: self.eval_interval,
            eval_limit: (self.eval_limit > 0).then_some(self.eval_limit),
            prefetch: self.prefetch,
        }
    }

    pub fn scan_options(&self) -> Result<ScanOptions> {
        if self.images.is_empty() || self.masks.is_empty() {
            return Err(config_error("no dataset given: set `images` and `masks` (or pass --data)"));
        }
        // Without an explicit tag, name the dataset after the folder holding the images.
        let tag = if self.dataset_tag.is_empty() {
            Path::new(&self.images)
                .parent()
                .and_then(|p| p.file_name())
                .map_or("dataset".to_string(), |n| n.to_string_lossy().into_owned())
        } else {
            self.dataset_tag.clone()
        };
        let mut opts = ScanOptions::new(&self.images, self.masks.iter().map(PathBuf::from).collect(), tag);
        opts.mask_suffix = (!self.mask_suffix.is_empty()).then(|| self.mask_suffix.clone());
        Ok(opts)
    }

    pub fn output_dir(&self) -> Result<PathBuf> {
        if self.output_dir.is_empty() {
            return Err(config_error("no output directory given (--out)"));
        }
        Ok(PathBuf::from(&self.output_dir))
    }

    pub fn checkpoint_dir(&self) -> Result<PathBuf> {
        Ok(if self.checkpoint_dir.is_empty() {
            self.output_dir()?.join("checkpoints")
        } else {
            PathBuf::from(&self.checkpoint_dir)
        })
    }
}

/// Parses `key=value`; the value is read as a TOML literal, falling back to a bare string.
pub fn parse_override(s: &str) -> Result<(String, toml::Value), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    let v = v.trim();
    let value = format!("v = {v}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(v.to_string()));
    Ok((k.trim().to_string(), value))
}
