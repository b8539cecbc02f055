//! Dataset discovery and pairing, deterministic splits, the synthetic
//! generator and the training batch stream.

mod batch;
mod scan;
mod split;
mod synth;

pub use batch::{Batch, Batcher, Prefetch};
pub use scan::{load_mask, scan_dataset, ScanOptions, ScanReport};
pub use split::{split, split_ids, SplitSpec};
pub use synth::{synth_generate, synth_sample, write_synth, SynthConfig, SynthManifest};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::imaging::{clahe, resize, ClaheConfig, Image2D, Interpolation};
use crate::Result;

/// One image with its binary lung mask.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePair {
    /// Filename stem.
    pub id: String,
    pub image: Image2D,
    pub mask: Image2D,
    /// Dataset tag, e.g. `montgomery` or `synth`.
    pub source: String,
}

/// Model-input preparation: resize, then optional CLAHE on the image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocess {
    pub size: usize,
    pub clahe: Option<ClaheConfig>,
}

impl Preprocess {
    pub fn new(size: usize) -> Self {
        Preprocess { size, clahe: None }
    }

    pub fn image(&self, img: &Image2D) -> Result<Image2D> {
        let sized = if img.width() == self.size && img.height() == self.size {
            img.clone()
        } else {
            resize(img, self.size, self.size, Interpolation::Bilinear)?
        };
        match &self.clahe {
            Some(cfg) => clahe(&sized, cfg),
            None => Ok(sized),
        }
    }

    pub fn mask(&self, mask: &Image2D) -> Result<Image2D> {
        if mask.width() == self.size && mask.height() == self.size {
            return Ok(mask.clone());
        }
        resize(mask, self.size, self.size, Interpolation::Nearest)
    }

    pub fn pair(&self, pair: &SamplePair) -> Result<SamplePair> {
        Ok(SamplePair {
            id: pair.id.clone(),
            image: self.image(&pair.image)?,
            mask: self.mask(&pair.mask)?,
            source: pair.source.clone(),
        })
    }

    /// [`Preprocess::pair`] over a whole set, in parallel; order is kept.
    pub fn pairs(&self, pairs: &[SamplePair]) -> Result<Vec<SamplePair>> {
        pairs.par_iter().map(|p| self.pair(p)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preprocess_resizes_and_keeps_masks_binary() {
        let img = Image2D::from_fn(40, 30, |x, y| (x * 6 + y) as u8);
        let mask = Image2D::from_fn(40, 30, |x, _| if x < 20 { 255 } else { 0 });
        let pair = SamplePair {
            id: "a".into(),
            image: img,
            mask,
            source: "t".into(),
        };
        let pre = Preprocess {
            size: 32,
            clahe: Some(ClaheConfig::default()),
        };
        let out = pre.pair(&pair).unwrap();
        assert_eq!((out.image.width(), out.image.height()), (32, 32));
        assert_eq!((out.mask.width(), out.mask.height()), (32, 32));
        assert!(out.mask.is_binary());

        let same = Preprocess::new(32).pair(&out).unwrap();
        assert_eq!(same.image, out.image);
    }
}
