//! 8-bit grayscale image handling: PNG I/O, resizing, CLAHE, tanh-range
//! normalization, histograms, affine augmentation and difference maps.

mod augment;
mod clahe;
mod io;
mod resize;

pub use augment::{apply_affine, sample_affine, AffineParams, AugmentConfig};
pub use clahe::{clahe, ClaheConfig};
pub use io::{decode_png, encode_png, read_png, write_png};
pub use resize::{resize, Interpolation};

use crate::nn::{Shape, Tensor};
use crate::{Error, Result, Scalar};

/// Row-major 8-bit grayscale image.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Image2D {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl Image2D {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidShape(format!("image extents {width}x{height}")));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidShape(format!(
                "{width}x{height} image needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        Ok(Image2D {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Image2D {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> u8) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Image2D {
            width,
            height,
            pixels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn same_extents(&self, other: &Image2D) -> Result<()> {
        if (self.width, self.height) != (other.width, other.height) {
            return Err(Error::ExtentMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ));
        }
        Ok(())
    }

    /// True when every pixel is 0 or 255.
    pub fn is_binary(&self) -> bool {
        self.pixels.iter().all(|&p| p == 0 || p == 255)
    }

    /// Maps any nonzero pixel to 255.
    pub fn binarized(&self) -> Image2D {
        Image2D {
            pixels: self.pixels.iter().map(|&p| if p > 0 { 255 } else { 0 }).collect(),
            ..*self
        }
    }

    /// Pixelwise maximum; the union of two binary masks.
    pub fn union(&self, other: &Image2D) -> Result<Image2D> {
        self.same_extents(other)?;
        Ok(Image2D {
            pixels: self
                .pixels
                .iter()
                .zip(&other.pixels)
                .map(|(&a, &b)| a.max(b))
                .collect(),
            ..*self
        })
    }

    pub fn complement(&self) -> Image2D {
        Image2D {
            pixels: self.pixels.iter().map(|&p| 255 - p).collect(),
            ..*self
        }
    }
}

/// 256-bin intensity histogram.
pub fn histogram(img: &Image2D) -> [u64; 256] {
    let mut bins = [0u64; 256];
    for &p in img.pixels() {
        bins[p as usize] += 1;
    }
    bins
}

/// Maps `p ↦ p / 127.5 − 1` into a `(1, h, w, 1)` tensor.
pub fn normalize<T: Scalar>(img: &Image2D) -> Tensor<T> {
    let shape = Shape::new(1, img.height, img.width, 1);
    let k = T::lit(127.5);
    Tensor::from_fn(shape, |i| T::from_u8(img.pixels[i]).expect("u8 fits") / k - T::one())
}

/// Inverse of [`normalize`] for the first batch item: clamps to `[-1, 1]` then
/// rounds `(t + 1) · 127.5` half away from zero.
pub fn denormalize<T: Scalar>(t: &Tensor<T>) -> Result<Image2D> {
    let s = t.shape();
    if s.c != 1 {
        return Err(Error::ChannelMismatch {
            op: "denormalize",
            expected: 1,
            got: s.c,
        });
    }
    let pixels = t.data()[..s.h * s.w]
        .iter()
        .map(|&v| {
            let v = v.to_f64().unwrap_or(-1.0).clamp(-1.0, 1.0);
            ((v + 1.0) * 127.5).round() as u8
        })
        .collect();
    Image2D::new(s.w, s.h, pixels)
}

/// Per-pixel absolute difference.
pub fn diff_image(gt: &Image2D, pred: &Image2D) -> Result<Image2D> {
    gt.same_extents(pred)?;
    Ok(Image2D {
        pixels: gt
            .pixels
            .iter()
            .zip(&pred.pixels)
            .map(|(&a, &b)| a.abs_diff(b))
            .collect(),
        ..*gt
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_counts() {
        let zero = Image2D::filled(7, 3, 0);
        let h = histogram(&zero);
        assert_eq!(h[0], 21);
        assert_eq!(h.iter().sum::<u64>(), 21);
        let mask = Image2D::from_fn(8, 8, |x, y| if x > y { 255 } else { 0 });
        let h = histogram(&mask);
        assert_eq!(h[0] + h[255], 64);
        assert!(h[1..255].iter().all(|&c| c == 0));
    }

    #[test]
    fn normalize_endpoints() {
        let img = Image2D::new(3, 1, vec![0, 255, 128]).unwrap();
        let t: Tensor<f64> = normalize(&img);
        assert_eq!(t.data()[0], -1.0);
        assert_eq!(t.data()[1], 1.0);
        assert!((127.5 / 127.5 - 1.0f64).abs() == 0.0);
        let mask = Image2D::new(2, 1, vec![0, 255]).unwrap();
        let m: Tensor<f32> = normalize(&mask);
        assert_eq!(m.data(), &[-1.0, 1.0]);
    }

    #[test]
    fn denormalize_inverts_all_levels() {
        let img = Image2D::from_fn(256, 1, |x, _| x as u8);
        let t32: Tensor<f32> = normalize(&img);
        assert_eq!(denormalize(&t32).unwrap(), img);
        let t64: Tensor<f64> = normalize(&img);
        assert_eq!(denormalize(&t64).unwrap(), img);
    }

    #[test]
    fn denormalize_clamps() {
        let t = Tensor::<f32>::from_vec(Shape::new(1, 1, 2, 1), vec![-3.0, 7.0]).unwrap();
        assert_eq!(denormalize(&t).unwrap().pixels(), &[0, 255]);
    }

    #[test]
    fn diff_properties() {
        let a = Image2D::from_fn(6, 5, |x, y| if (x + y) % 3 == 0 { 255 } else { 0 });
        let b = Image2D::from_fn(6, 5, |x, _| if x < 3 { 255 } else { 0 });
        assert!(diff_image(&a, &a).unwrap().pixels().iter().all(|&p| p == 0));
        assert!(diff_image(&a, &a.complement())
            .unwrap()
            .pixels()
            .iter()
            .all(|&p| p == 255));
        assert_eq!(diff_image(&a, &b).unwrap(), diff_image(&b, &a).unwrap());
        assert!(diff_image(&a, &b).unwrap().is_binary());
        assert!(diff_image(&a, &Image2D::filled(5, 5, 0)).is_err());
    }
}
