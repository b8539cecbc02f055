use super::{Ctx, Layer, Mode, Param, Shape, Tensor};
use crate::{Error, Result, Scalar};

struct Cache<T> {
    xhat: Vec<T>,
    inv_std: Vec<T>,
    mode: Mode,
    shape: Shape,
}

/// Per-channel batch normalization over batch × height × width.
///
/// Train mode normalizes with batch statistics (biased variance) and folds
/// them into the moving statistics with `momentum`; eval mode normalizes with
/// the moving statistics. Before any training step the moving statistics are
/// mean 0 and variance 1, so eval mode starts out as a scaled identity.
pub struct BatchNorm<T> {
    pub gamma: Param<T>,
    pub beta: Param<T>,
    pub moving_mean: Vec<T>,
    pub moving_var: Vec<T>,
    pub momentum: T,
    pub epsilon: T,
    cache: Option<Cache<T>>,
}

impl<T: Scalar> BatchNorm<T> {
    pub fn new(channels: usize, momentum: f64, epsilon: f64) -> Self {
        let shape = Shape::new(1, 1, 1, channels);
        BatchNorm {
            gamma: Param::new(Tensor::full(shape, T::one())),
            beta: Param::zeros(shape),
            moving_mean: vec![T::zero(); channels],
            moving_var: vec![T::one(); channels],
            momentum: T::lit(momentum),
            epsilon: T::lit(epsilon),
            cache: None,
        }
    }

    pub fn channels(&self) -> usize {
        self.moving_mean.len()
    }

    fn check(&self, s: Shape) -> Result<()> {
        if s.c != self.channels() {
            return Err(Error::ChannelMismatch {
                op: "batchnorm2d",
                expected: self.channels(),
                got: s.c,
            });
        }
        Ok(())
    }
}

impl<T: Scalar> Layer<T> for BatchNorm<T> {
    fn forward(&mut self, x: &Tensor<T>, ctx: &mut Ctx) -> Result<Tensor<T>> {
        let shape = x.shape();
        self.check(shape)?;
        let c = shape.c;
        let (mean, var) = match ctx.mode {
            Mode::Train => {
                let count = T::from_count(shape.len() / c);
                let mut mean = vec![T::zero(); c];
                for px in x.data().chunks_exact(c) {
                    for (m, &v) in mean.iter_mut().zip(px) {
                        *m += v;
                    }
                }
                mean.iter_mut().for_each(|m| *m /= count);
                let mut var = vec![T::zero(); c];
                for px in x.data().chunks_exact(c) {
                    for ((s, &v), &m) in var.iter_mut().zip(px).zip(&mean) {
                        *s += (v - m) * (v - m);
                    }
                }
                var.iter_mut().for_each(|s| *s /= count);
                let keep = self.momentum;
                for ch in 0..c {
                    self.moving_mean[ch] = keep * self.moving_mean[ch] + (T::one() - keep) * mean[ch];
                    self.moving_var[ch] = keep * self.moving_var[ch] + (T::one() - keep) * var[ch];
                }
                (mean, var)
            }
            Mode::Eval => (self.moving_mean.clone(), self.moving_var.clone()),
        };
        let inv_std: Vec<T> = var.iter().map(|&v| (v + self.epsilon).sqrt().recip()).collect();
        let gamma = self.gamma.value.data();
        let beta = self.beta.value.data();
        let mut xhat = x.data().to_vec();
        let mut out = vec![T::zero(); x.len()];
        for (hp, op) in xhat.chunks_exact_mut(c).zip(out.chunks_exact_mut(c)) {
            for ch in 0..c {
                hp[ch] = (hp[ch] - mean[ch]) * inv_std[ch];
                op[ch] = gamma[ch] * hp[ch] + beta[ch];
            }
        }
        self.cache = Some(Cache {
            xhat,
            inv_std,
            mode: ctx.mode,
            shape,
        });
        Tensor::from_vec(shape, out)
    }

    fn backward(&mut self, grad: &Tensor<T>, param_grads: bool) -> Result<Tensor<T>> {
        let cache = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::InvalidShape("batchnorm2d: backward before forward".into()))?;
        if grad.shape() != cache.shape {
            return Err(Error::ShapeMismatch {
                op: "batchnorm2d backward",
                left: cache.shape,
                right: grad.shape(),
            });
        }
        let c = cache.shape.c;
        let count = T::from_count(cache.shape.len() / c);
        let mut sum_dy = vec![T::zero(); c];
        let mut sum_dy_xhat = vec![T::zero(); c];
        for (gp, hp) in grad.data().chunks_exact(c).zip(cache.xhat.chunks_exact(c)) {
            for ch in 0..c {
                sum_dy[ch] += gp[ch];
                sum_dy_xhat[ch] += gp[ch] * hp[ch];
            }
        }
        if param_grads {
            for ch in 0..c {
                self.gamma.grad.data_mut()[ch] += sum_dy_xhat[ch];
                self.beta.grad.data_mut()[ch] += sum_dy[ch];
            }
        }
        let gamma = self.gamma.value.data();
        let mut dx = vec![T::zero(); grad.len()];
        match cache.mode {
            Mode::Train => {
                for ((dp, gp), hp) in dx
                    .chunks_exact_mut(c)
                    .zip(grad.data().chunks_exact(c))
                    .zip(cache.xhat.chunks_exact(c))
                {
                    for ch in 0..c {
                        let k = gamma[ch] * cache.inv_std[ch] / count;
                        dp[ch] = k * (count * gp[ch] - sum_dy[ch] - hp[ch] * sum_dy_xhat[ch]);
                    }
                }
            }
            Mode::Eval => {
                for (dp, gp) in dx.chunks_exact_mut(c).zip(grad.data().chunks_exact(c)) {
                    for ch in 0..c {
                        dp[ch] = gp[ch] * gamma[ch] * cache.inv_std[ch];
                    }
                }
            }
        }
        Tensor::from_vec(cache.shape, dx)
    }

    fn output_shape(&self, input: Shape) -> Result<Shape> {
        self.check(input)?;
        Ok(input)
    }

    fn params(&self) -> Vec<&Param<T>> {
        vec![&self.gamma, &self.beta]
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        vec![&mut self.gamma, &mut self.beta]
    }

    fn buffers_mut(&mut self) -> Vec<(&'static str, &mut [T])> {
        vec![
            ("moving_mean", &mut self.moving_mean[..]),
            ("moving_var", &mut self.moving_var[..]),
        ]
    }

    fn buffers(&self) -> Vec<(&'static str, &[T])> {
        vec![("moving_mean", &self.moving_mean[..]), ("moving_var", &self.moving_var[..])]
    }

    /// gamma, beta, moving mean and moving variance: four scalars per channel.
    fn stored_param_count(&self) -> usize {
        4 * self.channels()
    }
}
