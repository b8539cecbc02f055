//! Conditional-GAN (pix2pix) engine for binary lung-field segmentation of
//! grayscale chest radiographs.
//!
//! The numeric core is generic over the scalar type: training runs in `f32`,
//! gradient verification runs the same layer code in `f64`. The aliases at
//! the bottom of this file name the concrete instantiations used elsewhere.

pub mod datasets;
pub mod error;
pub mod imaging;
pub mod metrics;
pub mod model;
pub mod nn;

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

pub use error::{Error, Result};

/// Derives an independent 64-bit seed for `(stream, index)` from a base seed
/// (splitmix64 finalizer over the mixed inputs).
pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    let mut z = seed
        ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03).rotate_left(17);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Real scalar usable by every layer, loss and optimizer.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Lossless-enough conversion from an `f64` constant.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("scalar conversion from f64")
    }

    /// Conversion from a count.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("scalar conversion from usize")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

pub type Tensor32 = nn::Tensor<f32>;
pub type Tensor64 = nn::Tensor<f64>;
pub type Param32 = nn::Param<f32>;




pub type Adam32 = nn::Adam<f32>;
pub type Generator32 = model::Generator<f32>;
pub type Generator64 = model::Generator<f64>;
pub type Discriminator32 = model::Discriminator<f32>;
pub type Discriminator64 = model::Discriminator<f64>;
pub type Pix2Pix32 = model::Pix2Pix<f32>;
