use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Image2D;
use crate::{Error, Result};

/// Sampling ranges for random geometric augmentation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    /// Rotation drawn from `±rotation_range_deg` degrees.
    pub rotation_range_deg: f64,
    /// Horizontal shift drawn from `±width_shift_frac` of the width.
    pub width_shift_frac: f64,
    pub height_shift_frac: f64,
    /// Shear angle drawn from `±shear_range` radians.
    pub shear_range: f64,
    pub zoom_low: f64,
    pub zoom_high: f64,
    /// One zoom factor for both axes per draw.
    pub isotropic_zoom: bool,
    pub horizontal_flip: bool,
    pub vertical_flip: bool,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            rotation_range_deg: 5.0,
            width_shift_frac: 0.05,
            height_shift_frac: 0.05,
            shear_range: 0.01,
            zoom_low: 0.8,
            zoom_high: 1.2,
            isotropic_zoom: true,
            horizontal_flip: true,
            vertical_flip: false,
        }
    }
}

impl AugmentConfig {
    /// No-op configuration: every draw is the identity transform.
    pub fn identity() -> Self {
        AugmentConfig {
            rotation_range_deg: 0.0,
            width_shift_frac: 0.0,
            height_shift_frac: 0.0,
            shear_range: 0.0,
            zoom_low: 1.0,
            zoom_high: 1.0,
            isotropic_zoom: true,
            horizontal_flip: false,
            vertical_flip: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ranges = [
            self.rotation_range_deg,
            self.width_shift_frac,
            self.height_shift_frac,
            self.shear_range,
        ];
        if ranges.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
            return Err(Error::Config("augmentation ranges must be finite and >= 0".into()));
        }
        if !(self.zoom_low > 0.0 && self.zoom_low <= self.zoom_high && self.zoom_high.is_finite()) {
            return Err(Error::Config(format!(
                "zoom range must satisfy 0 < low <= high, got [{}, {}]",
                self.zoom_low, self.zoom_high
            )));
        }
        Ok(())
    }

    /// Whether `p` is a draw this configuration can produce.
    pub fn contains(&self, p: &AffineParams) -> bool {
        p.rotation_deg.abs() <= self.rotation_range_deg
            && p.shift_x_frac.abs() <= self.width_shift_frac
            && p.shift_y_frac.abs() <= self.height_shift_frac
            && p.shear.abs() <= self.shear_range
            && (self.zoom_low..=self.zoom_high).contains(&p.zoom_x)
            && (self.zoom_low..=self.zoom_high).contains(&p.zoom_y)
            && (!self.isotropic_zoom || p.zoom_x == p.zoom_y)
            && (self.horizontal_flip || !p.flip_h)
            && (self.vertical_flip || !p.flip_v)
    }
}

/// One concrete geometric transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineParams {
    pub rotation_deg: f64,
    pub shift_x_frac: f64,
    pub shift_y_frac: f64,
    pub shear: f64,
    pub zoom_x: f64,
    pub zoom_y: f64,
    pub flip_h: bool,
    pub flip_v: bool,
}

impl AffineParams {
    pub fn identity() -> Self {
        AffineParams {
            rotation_deg: 0.0,
            shift_x_frac: 0.0,
            shift_y_frac: 0.0,
            shear: 0.0,
            zoom_x: 1.0,
            zoom_y: 1.0,
            flip_h: false,
            flip_v: false,
        }
    }

    pub fn translation(shift_x_frac: f64, shift_y_frac: f64) -> Self {
        AffineParams {
            shift_x_frac,
            shift_y_frac,
            ..Self::identity()
        }
    }

    /// Forward linear part `zoom·flip · shear · rotation` (row-major 2×2):
    /// points are rotated first, then sheared, then scaled.
    fn linear(&self) -> [[f64; 2]; 2] {
        let (s, c) = self.rotation_deg.to_radians().sin_cos();
        let rot = [[c, -s], [s, c]];
        let shear = [[1.0, -self.shear.sin()], [0.0, self.shear.cos()]];
        let fx = if self.flip_h { -self.zoom_x } else { self.zoom_x };
        let fy = if self.flip_v { -self.zoom_y } else { self.zoom_y };
        let zoom = [[fx, 0.0], [0.0, fy]];
        mul(zoom, mul(shear, rot))
    }
}

fn mul(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if lo >= hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

/// Draws one transform from the configured ranges.
pub fn sample_affine<R: Rng + ?Sized>(rng: &mut R, cfg: &AugmentConfig) -> AffineParams {
    let rotation_deg = uniform(rng, -cfg.rotation_range_deg, cfg.rotation_range_deg);
    let shift_x_frac = uniform(rng, -cfg.width_shift_frac, cfg.width_shift_frac);
    let shift_y_frac = uniform(rng, -cfg.height_shift_frac, cfg.height_shift_frac);
    let shear = uniform(rng, -cfg.shear_range, cfg.shear_range);
    let zoom_x = uniform(rng, cfg.zoom_low, cfg.zoom_high);
    let zoom_y = if cfg.isotropic_zoom {
        zoom_x
    } else {
        uniform(rng, cfg.zoom_low, cfg.zoom_high)
    };
    let flip_h = cfg.horizontal_flip && rng.random_bool(0.5);
    let flip_v = cfg.vertical_flip && rng.random_bool(0.5);
    AffineParams {
        rotation_deg,
        shift_x_frac,
        shift_y_frac,
        shear,
        zoom_x,
        zoom_y,
        flip_h,
        flip_v,
    }
}

/// Applies one center-anchored transform to an image (bilinear) and its mask
/// (nearest), inverse-mapping every output pixel; samples outside the source
/// take the nearest edge pixel.
pub fn apply_affine(img: &Image2D, mask: &Image2D, p: &AffineParams) -> Result<(Image2D, Image2D)> {
    img.same_extents(mask)?;
    let (w, h) = (img.width(), img.height());
    let a = p.linear();
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if det.abs() < 1e-12 {
        return Err(Error::Config("degenerate affine transform".into()));
    }
    let inv = [[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]];
    let cx = w as f64 / 2.0;
    let cy = h as f64 / 2.0;
    let tx = p.shift_x_frac * w as f64;
    let ty = p.shift_y_frac * h as f64;
    let (max_x, max_y) = ((w - 1) as f64, (h - 1) as f64);

    let mut out_img = Vec::with_capacity(w * h);
    let mut out_mask = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let dx = x as f64 + 0.5 - cx - tx;
            let dy = y as f64 + 0.5 - cy - ty;
            // Source position in pixel-index space (pixel centers at integers).
            let sx = (inv[0][0] * dx + inv[0][1] * dy + cx - 0.5).clamp(0.0, max_x);
            let sy = (inv[1][0] * dx + inv[1][1] * dy + cy - 0.5).clamp(0.0, max_y);

            let (nx, ny) = ((sx + 0.5).floor() as usize, (sy + 0.5).floor() as usize);
            out_mask.push(mask.get(nx.min(w - 1), ny.min(h - 1)));

            let (x0, y0) = (sx.floor() as usize, sy.floor() as usize);
            let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
            let (fx, fy) = (sx - x0 as f64, sy - y0 as f64);
            let top = img.get(x0, y0) as f64 * (1.0 - fx) + img.get(x1, y0) as f64 * fx;
            let bottom = img.get(x0, y1) as f64 * (1.0 - fx) + img.get(x1, y1) as f64 * fx;
            out_img.push((top * (1.0 - fy) + bottom * fy).round().clamp(0.0, 255.0) as u8);
        }
    }
    Ok((Image2D::new(w, h, out_img)?, Image2D::new(w, h, out_mask)?))
}
