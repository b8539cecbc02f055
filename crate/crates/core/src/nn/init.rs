use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{Shape, Tensor};
use crate::Scalar;

/// Zero-mean normal initialization with standard deviation `std`.
pub fn normal_init<T: Scalar, R: Rng + ?Sized>(shape: Shape, std: f64, rng: &mut R) -> Tensor<T> {
    let dist = Normal::new(0.0, std).expect("finite std");
    Tensor::from_fn(shape, |_| T::lit(dist.sample(rng)))
}
