use super::activation::sigmoid;
use super::Tensor;
use crate::{Result, Scalar};

/// Mean binary cross-entropy on logits, in the overflow-free form
/// `max(z, 0) - z·t + ln(1 + e^{-|z|})`.
pub fn bce_with_logits<T: Scalar>(logits: &Tensor<T>, targets: &Tensor<T>) -> Result<T> {
    logits.check_same("bce_with_logits", targets)?;
    let total: T = logits
        .data()
        .iter()
        .zip(targets.data())
        .map(|(&z, &t)| z.max(T::zero()) - z * t + (-z.abs()).exp().ln_1p())
        .sum();
    Ok(total / T::from_count(logits.len()))
}

/// Gradient of [`bce_with_logits`] with respect to the logits.
pub fn bce_with_logits_grad<T: Scalar>(logits: &Tensor<T>, targets: &Tensor<T>) -> Result<Tensor<T>> {
    logits.check_same("bce_with_logits", targets)?;
    let m = T::from_count(logits.len());
    let data = logits
        .data()
        .iter()
        .zip(targets.data())
        .map(|(&z, &t)| (sigmoid(z) - t) / m)
        .collect();
    Tensor::from_vec(logits.shape(), data)
}

/// Mean absolute difference.
pub fn l1<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<T> {
    a.check_same("l1", b)?;
    let total: T = a.data().iter().zip(b.data()).map(|(&x, &y)| (x - y).abs()).sum();
    Ok(total / T::from_count(a.len()))
}

/// Gradient of [`l1`] with respect to `a` (subgradient 0 where `a == b`).
pub fn l1_grad<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    a.check_same("l1", b)?;
    let m = T::from_count(a.len());
    let data = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let d = x - y;
            if d > T::zero() {
                m.recip()
            } else if d < T::zero() {
                -m.recip()
            } else {
                T::zero()
            }
        })
        .collect();
    Tensor::from_vec(a.shape(), data)
}
