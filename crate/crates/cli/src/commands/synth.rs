use std::fs;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use lungfield::datasets::{write_synth, SynthConfig};

use crate::config::config_error;
use crate::Common;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Profile {
    Default,
    /// Different geometry, contrast and noise; a stand-in second dataset.
    Shifted,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long)]
    count: Option<usize>,

    #[arg(long)]
    size: Option<usize>,

    /// Noise standard deviation as a fraction of full scale.
    #[arg(long)]
    noise: Option<f64>,

    #[arg(long, value_enum, default_value = "default")]
    profile: Profile,
}

pub fn run(args: SynthArgs, common: &Common) -> Result<()> {
    let mut cfg = match args.profile {
        Profile::Default => SynthConfig::default(),
        Profile::Shifted => SynthConfig::shifted(),
    };
    if let Some(path) = &common.config {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        cfg = toml::from_str(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
    }
    if let Some(v) = args.count {
        cfg.count = v;
    }
    if let Some(v) = args.size {
        cfg.size = v;
    }
    if let Some(v) = args.noise {
        cfg.noise_level = v;
    }
    if let Some(v) = common.seed {
        cfg.seed = v;
    }
    cfg.validate().map_err(|e| config_error(e.to_string()))?;
    let out = common.out.clone().ok_or_else(|| config_error("synth needs --out"))?;
    let pairs = write_synth(&out, &cfg)?;
    println!("wrote {} pairs ({}x{}) to {}", pairs.len(), cfg.size, cfg.size, out.display());
    Ok(())
}
