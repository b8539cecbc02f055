use crate::nn::{bce_with_logits, l1, Tensor};
use crate::{Error, Result, Scalar};

/// Generator objective split into its adversarial and reconstruction terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenLoss<T> {
    pub total: T,
    pub adv: T,
    pub l1: T,
}

/// `bce(d_fake, 1) + λ · mean|fake − real|`.
pub fn gen_loss<T: Scalar>(
    d_fake_logits: &Tensor<T>,
    fake: &Tensor<T>,
    real: &Tensor<T>,
    lambda_l1: f64,
) -> Result<GenLoss<T>> {
    let adv = bce_with_logits(d_fake_logits, &Tensor::full(d_fake_logits.shape(), T::one()))?;
    let l1 = l1(fake, real)?;
    Ok(GenLoss {
        total: adv + T::lit(lambda_l1) * l1,
        adv,
        l1,
    })
}

/// `bce(d_real, 1) + bce(d_fake, 0)`.
pub fn disc_loss<T: Scalar>(d_real_logits: &Tensor<T>, d_fake_logits: &Tensor<T>) -> Result<T> {
    if d_real_logits.shape() != d_fake_logits.shape() {
        return Err(Error::ShapeMismatch {
            op: "disc_loss",
            left: d_real_logits.shape(),
            right: d_fake_logits.shape(),
        });
    }
    let real = bce_with_logits(d_real_logits, &Tensor::full(d_real_logits.shape(), T::one()))?;
    let fake = bce_with_logits(d_fake_logits, &Tensor::zeros(d_fake_logits.shape()))?;
    Ok(real + fake)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::LN_2;

    use super::*;
    use crate::nn::Shape;

    const PATCH: Shape = Shape::new(1, 6, 6, 1);
    const IMG: Shape = Shape::new(1, 8, 8, 1);

    #[test]
    fn generator_objective_values() {
        let logits = Tensor::<f64>::zeros(PATCH);
        let real = Tensor::from_fn(IMG, |i| (i as f64 * 0.1).sin());
        let exact = gen_loss(&logits, &real, &real, 100.0).unwrap();
        assert!((exact.total - LN_2).abs() < 1e-12);
        assert_eq!(exact.l1, 0.0);

        let fake = Tensor::from_fn(IMG, |i| (i as f64).cos());
        let no_l1 = gen_loss(&logits, &fake, &real, 0.0).unwrap();
        assert_eq!(no_l1.total, no_l1.adv);

        let minus = Tensor::full(IMG, -1.0);
        let plus = Tensor::full(IMG, 1.0);
        let far = gen_loss(&logits, &minus, &plus, 100.0).unwrap();
        assert!((far.total - (LN_2 + 200.0)).abs() < 1e-9);
    }

    #[test]
    fn discriminator_objective_values() {
        let zero = Tensor::<f64>::zeros(PATCH);
        assert!((disc_loss(&zero, &zero).unwrap() - 2.0 * LN_2).abs() < 1e-12);

        let confident = disc_loss(&Tensor::full(PATCH, 50.0), &Tensor::full(PATCH, -50.0)).unwrap();
        assert!(confident < 1e-20);

        // Each wrong-side logit of magnitude 40 costs 40 + ln(1 + e^-40).
        let wrong: f64 = disc_loss(&Tensor::full(PATCH, -40.0), &Tensor::full(PATCH, 40.0)).unwrap();
        assert!(wrong.is_finite());
        assert!((wrong - 2.0 * (40.0 + (-40.0f64).exp().ln_1p())).abs() < 1e-9);

        assert!(disc_loss(&zero, &Tensor::zeros(IMG)).is_err());
    }
}
