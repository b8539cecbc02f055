//! Finite-difference verification of layer gradients.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{Ctx, Layer, Mode, Tensor};
use crate::Result;

/// Relative error with an absolute floor so vanishing gradients compare absolutely.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Largest relative error between analytic and central-difference gradients of
/// the scalar probe loss `Σ r ⊙ layer(x)` with respect to the input and every
/// parameter of `layer`.
///
/// Every forward pass uses a context seeded with the same value, so stochastic
/// layers see the same dropout mask throughout the check.
pub fn grad_check<L: Layer<f64>>(layer: &mut L, input: &Tensor<f64>, epsilon: f64, mode: Mode) -> Result<f64> {
    const CTX_SEED: u64 = 0x5eed;
    let ctx = || Ctx::new(mode, CTX_SEED);

    let out = layer.forward(input, &mut ctx())?;
    let mut rng = ChaCha8Rng::seed_from_u64(out.len() as u64);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let probe = Tensor::from_fn(out.shape(), |_| normal.sample(&mut rng));

    for p in layer.params_mut() {
        p.zero_grad();
    }
    let grad_in = layer.backward(&probe, true)?;
    let analytic_params: Vec<Vec<f64>> = layer
        .params()
        .iter()
        .map(|p| p.grad.data().to_vec())
        .collect();

    let loss = |layer: &mut L, x: &Tensor<f64>| -> Result<f64> {
        let y = layer.forward(x, &mut ctx())?;
        y.dot(&probe)
    };

    let mut worst: f64 = 0.0;
    let mut x = input.clone();
    for i in 0..x.len() {
        let orig = x.data()[i];
        x.data_mut()[i] = orig + epsilon;
        let plus = loss(layer, &x)?;
        x.data_mut()[i] = orig - epsilon;
        let minus = loss(layer, &x)?;
        x.data_mut()[i] = orig;
        worst = worst.max(relative_error(grad_in.data()[i], (plus - minus) / (2.0 * epsilon)));
    }

    for (pi, analytic) in analytic_params.iter().enumerate() {
        for j in 0..analytic.len() {
            let orig = layer.params()[pi].value.data()[j];
            layer.params_mut()[pi].value.data_mut()[j] = orig + epsilon;
            let plus = loss(layer, input)?;
            layer.params_mut()[pi].value.data_mut()[j] = orig - epsilon;
            let minus = loss(layer, input)?;
            layer.params_mut()[pi].value.data_mut()[j] = orig;
            worst = worst.max(relative_error(analytic[j], (plus - minus) / (2.0 * epsilon)));
        }
    }
    Ok(worst)
}
