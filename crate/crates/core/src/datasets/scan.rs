use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::SamplePair;
use crate::imaging::{read_png, Image2D};
use crate::{Error, Result};

/// Where to find images and masks and how to match their names.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanOptions {
    pub image_dir: PathBuf,
    /// One or more mask directories; masks for the same stem are merged by union.
    pub mask_dirs: Vec<PathBuf>,
    /// Stripped from mask stems before matching (default `_mask`).
    pub mask_suffix: Option<String>,
    /// Tag stored on every pair.
    pub source: String,
}

impl ScanOptions {
    pub fn new(image_dir: impl Into<PathBuf>, mask_dirs: Vec<PathBuf>, source: impl Into<String>) -> Self {
        ScanOptions {
            image_dir: image_dir.into(),
            mask_dirs,
            mask_suffix: Some("_mask".into()),
            source: source.into(),
        }
    }
}

/// Paired samples plus every file that could not be paired.
#[derive(Debug, Clone)]
pub struct ScanReport {
    /// Sorted by id.
    pub pairs: Vec<SamplePair>,
    /// Image stems lacking a mask in at least one mask directory.
    pub unpaired_images: Vec<String>,
    /// Mask files whose stem matches no image.
    pub unpaired_masks: Vec<PathBuf>,
}

fn png_stems(dir: &Path, strip: Option<&str>) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::Decode {
        path: Some(dir.to_path_buf()),
        reason: format!("cannot read directory: {e}"),
    })? {
        let path = entry?.path();
        let is_png = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("png"));
        if !is_png || !path.is_file() {
            continue;
        }
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        let stem = strip
            .and_then(|suffix| stem.strip_suffix(suffix))
            .unwrap_or(stem)
            .to_string();
        if out.insert(stem.clone(), path).is_some() {
            return Err(Error::DuplicateStem {
                stem,
                dir: dir.to_path_buf(),
            });
        }
    }
    Ok(out)
}

/// Reads a mask and maps it to {0, 255}.
///
/// Masks stored as 0/1 keep every nonzero pixel; otherwise the cut is at 128.
pub fn load_mask(path: &Path) -> Result<Image2D> {
    let raw = read_png(path)?;
    let max = raw.pixels().iter().copied().max().unwrap_or(0);
    let cut = if max <= 1 { 1 } else { 128 };
    let pixels = raw.pixels().iter().map(|&p| if p >= cut { 255 } else { 0 }).collect();
    Image2D::new(raw.width(), raw.height(), pixels)
}

/// Pairs every image with the masks sharing its stem.
///
/// An image is paired only when every mask directory has its mask. Images
/// and masks are loaded in parallel at their stored resolution.
pub fn scan_dataset(opts: &ScanOptions) -> Result<ScanReport> {
    let images = png_stems(&opts.image_dir, None)?;
    let mask_maps = opts
        .mask_dirs
        .iter()
        .map(|d| png_stems(d, opts.mask_suffix.as_deref()))
        .collect::<Result<Vec<_>>>()?;

    let mut paired = Vec::new();
    let mut unpaired_images = Vec::new();
    for (stem, path) in &images {
        let masks: Option<Vec<&PathBuf>> = mask_maps.iter().map(|m| m.get(stem)).collect();
        match masks {
            Some(masks) if !masks.is_empty() => paired.push((stem, path, masks)),
            _ => unpaired_images.push(stem.clone()),
        }
    }
    let unpaired_masks = mask_maps
        .iter()
        .flat_map(|m| m.iter())
        .filter(|(stem, _)| !images.contains_key(*stem))
        .map(|(_, p)| p.clone())
        .collect();
    if paired.is_empty() {
        return Err(Error::NoPairs { unpaired_images });
    }

    let pairs = paired
        .par_iter()
        .map(|(stem, image_path, mask_paths)| {
            let image = read_png(image_path)?;
            let mut mask = load_mask(mask_paths[0])?;
            for p in &mask_paths[1..] {
                let other = load_mask(p)?;
                mask = mask.union(&other).map_err(|_| Error::Decode {
                    path: Some((*p).clone()),
                    reason: "mask extents differ from the other masks of this sample".into(),
                })?;
            }
            if image.same_extents(&mask).is_err() {
                return Err(Error::Decode {
                    path: Some(mask_paths[0].clone()),
                    reason: format!(
                        "mask is {}x{} but image is {}x{}",
                        mask.width(),
                        mask.height(),
                        image.width(),
                        image.height()
                    ),
                });
            }
            Ok(SamplePair {
                id: (*stem).clone(),
                image,
                mask,
                source: opts.source.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ScanReport {
        pairs,
        unpaired_images,
        unpaired_masks,
    })
}
