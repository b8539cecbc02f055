use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::SamplePair;
use crate::imaging::{write_png, Image2D};
use crate::{derive_seed, Error, Result};

const STREAM_SYNTH: u64 = 3;

/// Parameters of the synthetic two-ellipse "chest" generator.
///
/// Geometry ranges are fractions of the image side; intensity ranges are 8-bit
/// levels. Every pair `[lo, hi]` is sampled uniformly per image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub count: usize,
    pub size: usize,
    /// Gaussian noise standard deviation as a fraction of 255.
    pub noise_level: f64,
    pub seed: u64,
    pub half_width: [f64; 2],
    pub half_height: [f64; 2],
    /// Horizontal gap between the two ellipses.
    pub gap: [f64; 2],
    /// Vertical jitter of the shared ellipse center around mid-height.
    pub center_jitter: f64,
    pub lung_level: [f64; 2],
    /// Top-to-bottom brightening inside the ellipses.
    pub lung_gradient: [f64; 2],
    pub background_level: [f64; 2],
    pub band_level: [f64; 2],
    pub tag: String,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            count: 200,
            size: 64,
            noise_level: 0.04,
            seed: 0,
            half_width: [0.15, 0.21],
            half_height: [0.26, 0.34],
            gap: [0.04, 0.10],
            center_jitter: 0.04,
            lung_level: [120.0, 160.0],
            lung_gradient: [10.0, 40.0],
            background_level: [35.0, 70.0],
            band_level: [205.0, 235.0],
            tag: "synth".into(),
        }
    }
}

impl SynthConfig {
    /// A second population with different geometry, contrast and noise, for cross-dataset runs.
    pub fn shifted() -> Self {
        SynthConfig {
            noise_level: 0.07,
            half_width: [0.16, 0.22],
            half_height: [0.24, 0.30],
            gap: [0.03, 0.08],
            lung_level: [105.0, 140.0],
            lung_gradient: [0.0, 25.0],
            background_level: [50.0, 80.0],
            band_level: [170.0, 210.0],
            tag: "synth-shifted".into(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::Config("synthetic count must be >= 1".into()));
        }
        if self.size < 32 {
            return Err(Error::Config(format!("synthetic size must be >= 32, got {}", self.size)));
        }
        let ranges = [
            ("half_width", self.half_width),
            ("half_height", self.half_height),
            ("gap", self.gap),
            ("lung_level", self.lung_level),
            ("lung_gradient", self.lung_gradient),
            ("background_level", self.background_level),
            ("band_level", self.band_level),
        ];
        for (name, [lo, hi]) in ranges {
            if !(lo <= hi) {
                return Err(Error::Config(format!("{name}: low {lo} exceeds high {hi}")));
            }
        }
        // Both ellipses plus the gap must fit across, and each must fit vertically.
        if 4.0 * self.half_width[1] + self.gap[1] > 0.98 {
            return Err(Error::Config("ellipses too wide for the image".into()));
        }
        if 2.0 * (self.half_height[1] + self.center_jitter) > 0.98 {
            return Err(Error::Config("ellipses too tall for the image".into()));
        }
        if !(self.noise_level >= 0.0) {
            return Err(Error::Config("noise_level must be >= 0".into()));
        }
        Ok(())
    }
}

struct Ellipse {
    cx: f64,
    cy: f64,
    a: f64,
    b: f64,
}

impl Ellipse {
    /// Normalized radius at pixel center `(x, y)`; inside when `<= 1`.
    fn radius(&self, x: usize, y: usize) -> f64 {
        let dx = (x as f64 + 0.5 - self.cx) / self.a;
        let dy = (y as f64 + 0.5 - self.cy) / self.b;
        dx * dx + dy * dy
    }
}

fn uniform<R: Rng>(rng: &mut R, [lo, hi]: [f64; 2]) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// Renders sample `index`; fully determined by `(cfg.seed, index)`.
pub fn synth_sample(cfg: &SynthConfig, index: u64) -> SamplePair {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_SYNTH, index));
    let s = cfg.size as f64;
    let gap = uniform(&mut rng, cfg.gap) * s;
    let cy = s * (0.5 + uniform(&mut rng, [-cfg.center_jitter, cfg.center_jitter]));
    let mut lungs = Vec::with_capacity(2);
    for side in [-1.0, 1.0] {
        let a = uniform(&mut rng, cfg.half_width) * s;
        let b = uniform(&mut rng, cfg.half_height) * s;
        lungs.push(Ellipse {
            cx: s / 2.0 + side * (gap / 2.0 + a),
            cy,
            a,
            b,
        });
    }
    let lung_level = uniform(&mut rng, cfg.lung_level);
    let gradient = uniform(&mut rng, cfg.lung_gradient);
    let background = uniform(&mut rng, cfg.background_level);
    let band = uniform(&mut rng, cfg.band_level);
    let band_half = gap / 2.0 + 0.03 * s;
    let noise = Normal::new(0.0, cfg.noise_level * 255.0).expect("finite std");

    let n = cfg.size;
    let mut image = Vec::with_capacity(n * n);
    let mut mask = Vec::with_capacity(n * n);
    for y in 0..n {
        for x in 0..n {
            let inside = lungs.iter().find(|e| e.radius(x, y) <= 1.0);
            let base = match inside {
                Some(e) => {
                    let t = ((y as f64 + 0.5 - (e.cy - e.b)) / (2.0 * e.b)).clamp(0.0, 1.0);
                    lung_level + gradient * t
                }
                None if (x as f64 + 0.5 - s / 2.0).abs() < band_half => band,
                None => background,
            };
            let value = if cfg.noise_level > 0.0 {
                base + noise.sample(&mut rng)
            } else {
                base
            };
            image.push(value.round().clamp(0.0, 255.0) as u8);
            mask.push(if inside.is_some() { 255 } else { 0 });
        }
    }
    SamplePair {
        id: format!("{index:04}"),
        image: Image2D::new(n, n, image).expect("n*n pixels"),
        mask: Image2D::new(n, n, mask).expect("n*n pixels"),
        source: cfg.tag.clone(),
    }
}

pub fn synth_generate(cfg: &SynthConfig) -> Result<Vec<SamplePair>> {
    cfg.validate()?;
    Ok((0..cfg.count as u64).map(|i| synth_sample(cfg, i)).collect())
}

/// Contents of `manifest.json` in a synthetic dataset directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthManifest {
    pub config: SynthConfig,
    pub ids: Vec<String>,
}

/// Writes `images/NNNN.png`, `masks/NNNN.png` and `manifest.json` under `dir`.
///
/// The config is validated before anything touches the filesystem.
pub fn write_synth(dir: &Path, cfg: &SynthConfig) -> Result<Vec<SamplePair>> {
    let pairs = synth_generate(cfg)?;
    let images = dir.join("images");
    let masks = dir.join("masks");
    fs::create_dir_all(&images)?;
    fs::create_dir_all(&masks)?;
    for p in &pairs {
        write_png(&images.join(format!("{}.png", p.id)), &p.image)?;
        write_png(&masks.join(format!("{}.png", p.id)), &p.mask)?;
    }
    let manifest = SynthManifest {
        config: cfg.clone(),
        ids: pairs.iter().map(|p| p.id.clone()).collect(),
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed_and_index() {
        let cfg = SynthConfig {
            count: 5,
            ..Default::default()
        };
        assert_eq!(synth_generate(&cfg).unwrap(), synth_generate(&cfg).unwrap());
        assert_eq!(synth_sample(&cfg, 3), synth_generate(&cfg).unwrap()[3]);
        let other = SynthConfig { seed: 9, ..cfg.clone() };
        assert_ne!(synth_sample(&other, 0).image, synth_sample(&cfg, 0).image);
    }

    #[test]
    fn coverage_stays_in_constructed_range() {
        for cfg in [SynthConfig::default(), SynthConfig::shifted()] {
            for size in [32, 64, 128] {
                let cfg = SynthConfig {
                    size,
                    count: 60,
                    ..cfg.clone()
                };
                for p in synth_generate(&cfg).unwrap() {
                    assert!(p.mask.is_binary());
                    let on = p.mask.pixels().iter().filter(|&&v| v == 255).count();
                    let frac = on as f64 / (size * size) as f64;
                    assert!((0.15..=0.60).contains(&frac), "coverage {frac} at size {size}");
                }
            }
        }
    }

    #[test]
    fn mask_is_the_ellipse_union() {
        // With no noise, lung pixels lie in [lung_level, lung_level + gradient]
        // and everything else sits at the background or band level.
        let cfg = SynthConfig {
            noise_level: 0.0,
            count: 10,
            ..Default::default()
        };
        for p in synth_generate(&cfg).unwrap() {
            for (&v, &m) in p.image.pixels().iter().zip(p.mask.pixels()) {
                let lung = (120..=200).contains(&v);
                assert_eq!(m == 255, lung, "pixel {v} with mask {m}");
            }
        }
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(synth_generate(&SynthConfig { count: 0, ..Default::default() }).is_err());
        assert!(synth_generate(&SynthConfig { size: 16, ..Default::default() }).is_err());
        let wide = SynthConfig {
            half_width: [0.2, 0.3],
            ..Default::default()
        };
        assert!(wide.validate().is_err());
    }
}
