use super::{Generator, InferenceMode};
use crate::imaging::{denormalize, Image2D};
use crate::nn::{Ctx, Tensor};
use crate::{Result, Scalar};

/// Generator output for one image.
#[derive(Debug, Clone)]
pub struct Prediction<T> {
    /// Binary {0, 255} mask: raw output above 0.
    pub mask: Image2D,
    /// Raw tanh map in `[-1, 1]`.
    pub raw: Tensor<T>,
}

impl<T: Scalar> Prediction<T> {
    /// Raw map rescaled to 8-bit for viewing.
    pub fn raw_image(&self) -> Result<Image2D> {
        denormalize(&self.raw)
    }
}

/// Thresholds a single-channel map: pixels strictly above `threshold` become 255.
pub fn binarize<T: Scalar>(raw: &Tensor<T>, threshold: T) -> Result<Image2D> {
    let s = raw.shape();
    let pixels = raw.data()[..s.h * s.w]
        .iter()
        .map(|&v| if v > threshold { 255 } else { 0 })
        .collect();
    Image2D::new(s.w, s.h, pixels)
}

/// Runs the generator on one normalized image `(1, n, n, 1)` and thresholds at 0.
///
/// In [`InferenceMode::Train`] normalization uses the image's own statistics
/// and dropout draws from a fixed seed; normalization buffers are restored
/// afterwards so prediction never alters the model.
pub fn predict_mask<T: Scalar>(
    gen: &mut Generator<T>,
    image: &Tensor<T>,
    mode: InferenceMode,
) -> Result<Prediction<T>> {
    let raw = match mode {
        InferenceMode::Eval => gen.forward(image, &mut Ctx::eval())?,
        InferenceMode::Train => {
            use super::Network;
            let saved: Vec<Vec<T>> = gen
                .layers()
                .iter()
                .flat_map(|(_, l)| l.buffers())
                .map(|(_, b)| b.to_vec())
                .collect();
            let out = gen.forward(image, &mut Ctx::train(0));
            let mut layers = gen.layers_mut();
            let bufs = layers.iter_mut().flat_map(|(_, l)| l.buffers_mut());
            for ((_, dst), src) in bufs.zip(&saved) {
                dst.copy_from_slice(src);
            }
            out?
        }
    };
    Ok(Prediction {
        mask: binarize(&raw, T::zero())?,
        raw,
    })
}
