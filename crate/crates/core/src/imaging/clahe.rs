use super::{histogram, Image2D};
use crate::{Error, Result};

/// Contrast-limited adaptive histogram equalization settings.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ClaheConfig {
    /// Bin ceiling as a multiple of the mean bin height (`tile_pixels / 256`).
    pub clip_limit: f64,
    pub tiles_x: usize,
    pub tiles_y: usize,
}

impl Default for ClaheConfig {
    fn default() -> Self {
        ClaheConfig {
            clip_limit: 2.0,
            tiles_x: 8,
            tiles_y: 8,
        }
    }
}

/// Equalization lookup table for one tile.
///
/// A tile whose pixels all share one gray level maps to itself, which keeps
/// constant images (and constant regions) fixed.
fn tile_lut(hist: &mut [u64; 256], pixels: u64, clip_limit: f64) -> [u8; 256] {
    let mut lut = [0u8; 256];
    if hist.iter().filter(|&&c| c > 0).count() <= 1 {
        for (v, l) in lut.iter_mut().enumerate() {
            *l = v as u8;
        }
        return lut;
    }
    let limit = (clip_limit * pixels as f64 / 256.0).max(1.0);
    if limit < pixels as f64 {
        let limit = limit as u64;
        let mut excess = 0u64;
        for c in hist.iter_mut() {
            if *c > limit {
                excess += *c - limit;
                *c = limit;
            }
        }
        let batch = excess / 256;
        let mut residual = excess % 256;
        hist.iter_mut().for_each(|c| *c += batch);
        if residual > 0 {
            let step = (256 / residual).max(1) as usize;
            let mut i = 0;
            while i < 256 && residual > 0 {
                hist[i] += 1;
                residual -= 1;
                i += step;
            }
        }
    }
    let scale = 255.0 / pixels as f64;
    let mut cdf = 0u64;
    for (v, l) in lut.iter_mut().enumerate() {
        cdf += hist[v];
        *l = (cdf as f64 * scale).round().min(255.0) as u8;
    }
    lut
}

/// Per-tile clipped histogram equalization with bilinear blending of the
/// tile mappings between tile centers.
pub fn clahe(img: &Image2D, cfg: &ClaheConfig) -> Result<Image2D> {
    let (tx, ty) = (cfg.tiles_x, cfg.tiles_y);
    if tx == 0 || ty == 0 {
        return Err(Error::Config("CLAHE tile grid must be at least 1x1".into()));
    }
    if !(cfg.clip_limit > 0.0) {
        return Err(Error::Config(format!(
            "CLAHE clip limit must be positive, got {}",
            cfg.clip_limit
        )));
    }
    let (w, h) = (img.width(), img.height());
    if w < tx || h < ty {
        return Err(Error::InvalidShape(format!(
            "{w}x{h} image is smaller than the {tx}x{ty} CLAHE tile grid"
        )));
    }
    let xb: Vec<usize> = (0..=tx).map(|i| i * w / tx).collect();
    let yb: Vec<usize> = (0..=ty).map(|j| j * h / ty).collect();

    let mut luts = Vec::with_capacity(tx * ty);
    for j in 0..ty {
        for i in 0..tx {
            let (tw, th) = (xb[i + 1] - xb[i], yb[j + 1] - yb[j]);
            let tile = Image2D::from_fn(tw, th, |x, y| img.get(xb[i] + x, yb[j] + y));
            let mut hist = histogram(&tile);
            luts.push(tile_lut(&mut hist, (tw * th) as u64, cfg.clip_limit));
        }
    }

    let tile_w = w as f64 / tx as f64;
    let tile_h = h as f64 / ty as f64;
    let blend = |pos: usize, size: f64, count: usize| {
        let f = (pos as f64 + 0.5) / size - 0.5;
        if f <= 0.0 {
            return (0, 0, 0.0);
        }
        let i0 = (f.floor() as usize).min(count - 1);
        let i1 = (i0 + 1).min(count - 1);
        (i0, i1, if i0 == i1 { 0.0 } else { f - i0 as f64 })
    };
    let cols: Vec<_> = (0..w).map(|x| blend(x, tile_w, tx)).collect();
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let (j0, j1, fy) = blend(y, tile_h, ty);
        for (x, &(i0, i1, fx)) in cols.iter().enumerate() {
            let v = img.get(x, y) as usize;
            let at = |i: usize, j: usize| luts[j * tx + i][v] as f64;
            let top = at(i0, j0) * (1.0 - fx) + at(i1, j0) * fx;
            let bottom = at(i0, j1) * (1.0 - fx) + at(i1, j1) * fx;
            out.push((top * (1.0 - fy) + bottom * fy).round().clamp(0.0, 255.0) as u8);
        }
    }
    Image2D::new(w, h, out)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn random_image(seed: u64, w: usize, h: usize) -> Image2D {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let px = (0..w * h).map(|_| rng.random_range(40..200u8)).collect();
        Image2D::new(w, h, px).unwrap()
    }

    #[test]
    fn constant_image_is_unchanged_and_idempotent() {
        for v in [0u8, 17, 128, 255] {
            let img = Image2D::filled(40, 33, v);
            let once = clahe(&img, &ClaheConfig::default()).unwrap();
            assert_eq!(once, img);
            assert_eq!(clahe(&once, &ClaheConfig::default()).unwrap(), img);
        }
    }

    #[test]
    fn single_tile_without_clipping_is_global_equalization() {
        // Independent oracle: s_k = round(255 · cdf(k) / n) over the whole image.
        for seed in 0..5 {
            let img = random_image(seed, 37, 29);
            let n = (37 * 29) as f64;
            let mut counts = [0u64; 256];
            for y in 0..29 {
                for x in 0..37 {
                    counts[img.get(x, y) as usize] += 1;
                }
            }
            let mut cdf = [0u64; 256];
            let mut run = 0;
            for k in 0..256 {
                run += counts[k];
                cdf[k] = run;
            }
            let cfg = ClaheConfig {
                clip_limit: 1e12,
                tiles_x: 1,
                tiles_y: 1,
            };
            let out = clahe(&img, &cfg).unwrap();
            for (&src, &dst) in img.pixels().iter().zip(out.pixels()) {
                let expected = (255.0 * cdf[src as usize] as f64 / n).round() as i32;
                assert!((dst as i32 - expected).abs() <= 1);
            }
        }
    }

    #[test]
    fn clipping_limits_contrast_stretch() {
        let img = random_image(9, 64, 64);
        let strong = clahe(&img, &ClaheConfig { clip_limit: 40.0, ..Default::default() }).unwrap();
        let mild = clahe(&img, &ClaheConfig { clip_limit: 1.0, ..Default::default() }).unwrap();
        let spread = |im: &Image2D| {
            let p = im.pixels();
            *p.iter().max().unwrap() as i32 - *p.iter().min().unwrap() as i32
        };
        assert!(spread(&strong) >= spread(&mild));
    }

    #[test]
    fn rejects_grid_larger_than_image() {
        let img = Image2D::filled(4, 4, 3);
        assert!(clahe(&img, &ClaheConfig::default()).is_err());
        let bad = ClaheConfig { clip_limit: 0.0, ..Default::default() };
        assert!(clahe(&Image2D::filled(64, 64, 0), &bad).is_err());
    }
}
