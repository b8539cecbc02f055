use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::nn::AdamConfig;
use crate::{Error, Result};

/// How normalization and dropout behave at prediction time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum InferenceMode {
    /// Moving statistics, dropout off.
    #[default]
    Eval,
    /// Per-image batch statistics and active dropout (with a fixed seed).
    Train,
}

/// Architecture and optimization settings for the generator/discriminator pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub image_size: usize,
    pub in_channels: usize,
    pub base_channels: usize,
    /// Number of stride-2 encoder stages.
    pub depth: usize,
    pub lambda_l1: f64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    /// Leading decoder blocks that apply dropout.
    pub dropout_up_blocks: usize,
    pub dropout_rate: f64,
    pub bn_momentum: f64,
    pub bn_epsilon: f64,
    pub init_std: f64,
    pub inference_mode: InferenceMode,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            image_size: 256,
            in_channels: 1,
            base_channels: 64,
            depth: 8,
            lambda_l1: 100.0,
            lr: 2e-4,
            beta1: 0.5,
            beta2: 0.999,
            adam_epsilon: 1e-7,
            dropout_up_blocks: 3,
            dropout_rate: 0.5,
            bn_momentum: 0.99,
            bn_epsilon: 1e-3,
            init_std: 0.02,
            inference_mode: InferenceMode::Eval,
            seed: 0,
        }
    }
}

impl ModelConfig {
    /// The 64×64, depth-6, 16-channel profile used for desk-scale runs.
    pub fn desk() -> Self {
        ModelConfig {
            image_size: 64,
            base_channels: 16,
            depth: 6,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth < 2 {
            return Err(Error::Config(format!("depth must be >= 2, got {}", self.depth)));
        }
        let stride = 1usize
            .checked_shl(self.depth as u32)
            .ok_or_else(|| Error::Config("depth too large".into()))?;
        if self.image_size == 0 || self.image_size % stride != 0 {
            return Err(Error::Config(format!(
                "image_size {} is not a multiple of 2^depth = {stride}",
                self.image_size
            )));
        }
        if self.image_size < 24 {
            return Err(Error::Config(format!(
                "image_size {} leaves no discriminator output (need >= 24)",
                self.image_size
            )));
        }
        if self.base_channels == 0 || self.in_channels == 0 {
            return Err(Error::Config("channel counts must be >= 1".into()));
        }
        if !(self.lambda_l1 >= 0.0) {
            return Err(Error::Config(format!("lambda_l1 must be >= 0, got {}", self.lambda_l1)));
        }
        if self.dropout_up_blocks > self.depth - 1 {
            return Err(Error::Config(format!(
                "dropout_up_blocks {} exceeds the {} decoder blocks",
                self.dropout_up_blocks,
                self.depth - 1
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config("dropout_rate must be in [0, 1)".into()));
        }
        Ok(())
    }

    /// Channel width of encoder stage `i`: `base · min(2^i, 8)`.
    pub fn encoder_channels(&self, i: usize) -> usize {
        self.base_channels * (1usize << i.min(3))
    }

    /// Spatial extent of the innermost encoder output.
    pub fn bottleneck_extent(&self) -> usize {
        self.image_size >> self.depth
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.adam_epsilon,
        }
    }

    /// Hash of the fields that determine tensor names and shapes.
    pub fn fingerprint(&self) -> u64 {
        let canonical = format!(
            "pix2pix-v1;image_size={};in_channels={};base_channels={};depth={};dropout_up_blocks={}",
            self.image_size, self.in_channels, self.base_channels, self.depth, self.dropout_up_blocks
        );
        let digest = Sha256::digest(canonical.as_bytes());
        u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_and_desk_configs_are_valid() {
        let full = ModelConfig::default();
        full.validate().unwrap();
        assert_eq!(full.bottleneck_extent(), 1);
        let ladder: Vec<_> = (0..8).map(|i| full.encoder_channels(i)).collect();
        assert_eq!(ladder, [64, 128, 256, 512, 512, 512, 512, 512]);
        let desk = ModelConfig::desk();
        desk.validate().unwrap();
        assert_eq!(desk.bottleneck_extent(), 1);
    }

    #[test]
    fn power_of_two_constraint() {
        let cfg = ModelConfig {
            image_size: 96,
            depth: 6,
            ..ModelConfig::desk()
        };
        assert!(cfg.validate().is_err());
        let cfg = ModelConfig {
            image_size: 128,
            depth: 6,
            ..ModelConfig::desk()
        };
        cfg.validate().unwrap();
        assert_eq!(cfg.bottleneck_extent(), 2);
    }

    #[test]
    fn fingerprint_tracks_architecture_only() {
        let a = ModelConfig::desk();
        let b = ModelConfig {
            lr: 1e-3,
            seed: 99,
            ..a.clone()
        };
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_ne!(a.fingerprint(), ModelConfig::default().fingerprint());
    }
}
