use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, GrayImage, ImageFormat};

use super::Image2D;
use crate::{Error, Result};

/// ITU-R BT.601 luma, rounded to nearest.
fn luma601(r: u8, g: u8, b: u8) -> u8 {
    (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64).round() as u8
}

fn from_dynamic(img: DynamicImage) -> Result<Image2D> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let pixels = match img {
        DynamicImage::ImageLuma8(g) => g.into_raw(),
        DynamicImage::ImageLuma16(g) => g.into_raw().into_iter().map(|v| (v >> 8) as u8).collect(),
        DynamicImage::ImageLumaA8(_) | DynamicImage::ImageLumaA16(_) => {
            img.to_luma8().into_raw()
        }
        other => other
            .to_rgb8()
            .pixels()
            .map(|p| luma601(p[0], p[1], p[2]))
            .collect(),
    };
    Image2D::new(w, h, pixels)
}

/// Decodes PNG bytes; color images are reduced to BT.601 luminance.
pub fn decode_png(bytes: &[u8]) -> Result<Image2D> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Png).map_err(|e| Error::Decode {
        path: None,
        reason: e.to_string(),
    })?;
    from_dynamic(img)
}

/// Encodes an 8-bit grayscale PNG.
pub fn encode_png(img: &Image2D) -> Result<Vec<u8>> {
    let gray = GrayImage::from_raw(img.width() as u32, img.height() as u32, img.pixels().to_vec())
        .expect("pixel count checked at construction");
    let mut out = Cursor::new(Vec::new());
    gray.write_to(&mut out, ImageFormat::Png)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    Ok(out.into_inner())
}

pub fn read_png(path: &Path) -> Result<Image2D> {
    let bytes = std::fs::read(path)?;
    decode_png(&bytes).map_err(|e| match e {
        Error::Decode { reason, .. } => Error::Decode {
            path: Some(path.to_path_buf()),
            reason,
        },
        other => other,
    })
}

pub fn write_png(path: &Path, img: &Image2D) -> Result<()> {
    std::fs::write(path, encode_png(img)?)?;
    Ok(())
}
