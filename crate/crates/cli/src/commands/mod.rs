pub mod eval;
pub mod inspect;
pub mod predict;
pub mod synth;
pub mod train;

use std::fs;
use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use lungfield::datasets::{scan_dataset, SamplePair, SynthManifest};
use lungfield::model::InferenceMode;

use crate::config::{parse_override, Preset, RunConfig};
use crate::Common;

/// Run-config flags shared by `train`, `eval` and `predict`.
#[derive(Args, Debug, Clone, Default)]
pub struct RunFlags {
    /// Starting profile before the config file and flags are applied.
    #[arg(long, value_enum)]
    preset: Option<Preset>,

    /// Dataset root holding `images/` and `masks/` (the `synth` layout).
    #[arg(long, conflicts_with_all = ["images", "masks"])]
    data: Option<PathBuf>,

    #[arg(long)]
    images: Option<PathBuf>,

    /// Mask directory; repeat for left/right lung masks that are merged by union.
    #[arg(long)]
    masks: Vec<PathBuf>,

    /// Stripped from mask file stems before matching; pass "" to disable.
    #[arg(long)]
    mask_suffix: Option<String>,

    /// Dataset label stored in reports.
    #[arg(long)]
    tag: Option<String>,

    #[arg(long, value_enum)]
    inference_mode: Option<InferenceModeArg>,

    /// Any config key, e.g. `--set lr=1e-4`; repeatable.
    #[arg(long = "set", value_parser = parse_override)]
    overrides: Vec<(String, toml::Value)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum InferenceModeArg {
    Eval,
    Train,
}

impl From<InferenceModeArg> for InferenceMode {
    fn from(m: InferenceModeArg) -> Self {
        match m {
            InferenceModeArg::Eval => InferenceMode::Eval,
            InferenceModeArg::Train => InferenceMode::Train,
        }
    }
}

impl RunFlags {
    fn has_dataset(&self) -> bool {
        self.data.is_some() || self.images.is_some()
    }

    /// Merges preset, `--config`, shared flags and these flags, in that order.
    fn resolve(&self, common: &Common, extra: Vec<(String, toml::Value)>) -> Result<RunConfig> {
        let path = |p: &PathBuf| toml::Value::String(p.display().to_string());
        let mut o = Vec::new();
        if let Some(seed) = common.seed {
            o.push(("seed".into(), toml::Value::Integer(seed as i64)));
        }
        if let Some(root) = &self.data {
            o.push(("images".into(), path(&root.join("images"))));
            o.push(("masks".into(), toml::Value::Array(vec![path(&root.join("masks"))])));
            let manifest = fs::read(root.join("manifest.json"))
                .ok()
                .and_then(|b| serde_json::from_slice::<SynthManifest>(&b).ok());
            if let Some(m) = manifest {
                o.push(("dataset_tag".into(), toml::Value::String(m.config.tag)));
            }
        }
        if let Some(images) = &self.images {
            o.push(("images".into(), path(images)));
        }
        if !self.masks.is_empty() {
            o.push(("masks".into(), toml::Value::Array(self.masks.iter().map(path).collect())));
        }
        if let Some(s) = &self.mask_suffix {
            o.push(("mask_suffix".into(), toml::Value::String(s.clone())));
        }
        if let Some(t) = &self.tag {
            o.push(("dataset_tag".into(), toml::Value::String(t.clone())));
        }
        if let Some(m) = self.inference_mode {
            let name = match m {
                InferenceModeArg::Eval => "eval",
                InferenceModeArg::Train => "train",
            };
            o.push(("inference_mode".into(), toml::Value::String(name.into())));
        }
        o.extend(extra);
        o.extend(self.overrides.iter().cloned());
        RunConfig::resolve(self.preset, common.config.as_deref(), &o)
    }
}

/// Scans the configured dataset and preprocesses every pair to model resolution.
fn load_pairs(cfg: &RunConfig) -> Result<Vec<SamplePair>> {
    let opts = cfg.scan_options()?;
    let report = scan_dataset(&opts)?;
    if !report.unpaired_images.is_empty() {
        eprintln!(
            "note: {} image(s) without a complete mask set were skipped",
            report.unpaired_images.len()
        );
    }
    if !report.unpaired_masks.is_empty() {
        eprintln!("note: {} mask file(s) match no image", report.unpaired_masks.len());
    }
    Ok(cfg.preprocess().pairs(&report.pairs)?)
}
