use super::Image2D;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    Bilinear,
    Nearest,
}

/// Resamples with half-pixel centers: output pixel `x` samples source
/// coordinate `(x + 0.5) · sw / w − 0.5`. Bilinear rounds half away from zero;
/// out-of-range neighbours clamp to the edge.
pub fn resize(img: &Image2D, w: usize, h: usize, method: Interpolation) -> Result<Image2D> {
    if w == 0 || h == 0 {
        return Err(Error::InvalidShape(format!("resize target {w}x{h}")));
    }
    if (w, h) == (img.width(), img.height()) {
        return Ok(img.clone());
    }
    let sx = img.width() as f64 / w as f64;
    let sy = img.height() as f64 / h as f64;
    let max_x = img.width() - 1;
    let max_y = img.height() - 1;
    let mut out = Vec::with_capacity(w * h);
    match method {
        Interpolation::Nearest => {
            let cols: Vec<usize> = (0..w)
                .map(|x| (((x as f64 + 0.5) * sx) as usize).min(max_x))
                .collect();
            for y in 0..h {
                let src_y = (((y as f64 + 0.5) * sy) as usize).min(max_y);
                out.extend(cols.iter().map(|&src_x| img.get(src_x, src_y)));
            }
        }
        Interpolation::Bilinear => {
            let taps = |dst: usize, scale: f64, max: usize| {
                let s = ((dst as f64 + 0.5) * scale - 0.5).max(0.0);
                let i0 = (s.floor() as usize).min(max);
                let i1 = (i0 + 1).min(max);
                (i0, i1, s - i0 as f64)
            };
            let cols: Vec<_> = (0..w).map(|x| taps(x, sx, max_x)).collect();
            for y in 0..h {
                let (y0, y1, fy) = taps(y, sy, max_y);
                for &(x0, x1, fx) in &cols {
                    let top = img.get(x0, y0) as f64 * (1.0 - fx) + img.get(x1, y0) as f64 * fx;
                    let bottom = img.get(x0, y1) as f64 * (1.0 - fx) + img.get(x1, y1) as f64 * fx;
                    out.push((top * (1.0 - fy) + bottom * fy).round().clamp(0.0, 255.0) as u8);
                }
            }
        }
    }
    Image2D::new(w, h, out)
}
