use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Param, Shape, Tensor};
use crate::{Result, Scalar};

/// Whether normalization uses batch statistics and dropout is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Train,
    Eval,
}

/// Per-call forward context: mode plus the randomness source for dropout.
pub struct Ctx {
    pub mode: Mode,
    pub rng: ChaCha8Rng,
}

impl Ctx {
    pub fn new(mode: Mode, seed: u64) -> Self {
        Ctx {
            mode,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn train(seed: u64) -> Self {
        Self::new(Mode::Train, seed)
    }

    pub fn eval() -> Self {
        Self::new(Mode::Eval, 0)
    }
}

/// A single-input layer with a cached forward pass and a reverse-mode backward pass.
///
/// `backward` must follow the matching `forward`; it returns the gradient with
/// respect to the layer input and, when `param_grads` is set, accumulates into
/// each parameter's `grad`.
pub trait Layer<T: Scalar> {
    fn forward(&mut self, x: &Tensor<T>, ctx: &mut Ctx) -> Result<Tensor<T>>;

    fn backward(&mut self, grad: &Tensor<T>, param_grads: bool) -> Result<Tensor<T>>;

    fn output_shape(&self, input: Shape) -> Result<Shape>;

    fn params(&self) -> Vec<&Param<T>> {
        Vec::new()
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        Vec::new()
    }

    /// Non-trainable per-layer buffers (e.g. moving statistics) as mutable slices.
    fn buffers_mut(&mut self) -> Vec<(&'static str, &mut [T])> {
        Vec::new()
    }

    fn buffers(&self) -> Vec<(&'static str, &[T])> {
        Vec::new()
    }

    /// Stored scalar count, counting trainable parameters and non-trainable buffers.
    fn stored_param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }
}
