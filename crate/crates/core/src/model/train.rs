use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{gen_loss, Discriminator, Generator, ModelConfig, Network};
use crate::nn::{bce_with_logits, bce_with_logits_grad, l1_grad, Adam, Ctx, Tensor};
use crate::{derive_seed, Error, Result, Scalar};

const STREAM_DROPOUT: u64 = 1;

/// Loss values from one training step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLosses {
    pub g_total: f64,
    pub g_adv: f64,
    pub g_l1: f64,
    pub d_loss: f64,
}

/// Generator, discriminator and their optimizers, plus the completed-step count.
pub struct Pix2Pix<T> {
    pub config: ModelConfig,
    pub generator: Generator<T>,
    pub discriminator: Discriminator<T>,
    pub gen_opt: Adam<T>,
    pub disc_opt: Adam<T>,
    pub step: u64,
}

impl<T: Scalar> Pix2Pix<T> {
    /// Builds both networks from one RNG stream seeded by `cfg.seed`.
    pub fn new(cfg: &ModelConfig) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let generator = Generator::new(cfg, &mut rng)?;
        let discriminator = Discriminator::new(cfg, &mut rng)?;
        Ok(Pix2Pix {
            config: cfg.clone(),
            generator,
            discriminator,
            gen_opt: Adam::new(cfg.adam()),
            disc_opt: Adam::new(cfg.adam()),
            step: 0,
        })
    }

    /// One discriminator update followed by one generator update.
    ///
    /// `image` and `mask` are normalized to `[-1, 1]`. A non-finite loss
    /// aborts before the corresponding parameters are touched.
    pub fn train_step(&mut self, image: &Tensor<T>, mask: &Tensor<T>) -> Result<StepLosses> {
        let step = self.step + 1;
        let mut ctx = Ctx::train(derive_seed(self.config.seed, STREAM_DROPOUT, step));
        let fake = self.generator.forward(image, &mut ctx)?;
        let d_loss = self.update_discriminator(image, mask, &fake, &mut ctx)?;
        let g = self.update_generator(image, mask, &fake, &mut ctx, d_loss)?;
        self.step = step;
        Ok(StepLosses { d_loss, ..g })
    }

    /// Discriminator update on the real pair and on `fake` treated as a constant.
    pub fn update_discriminator(
        &mut self,
        image: &Tensor<T>,
        mask: &Tensor<T>,
        fake: &Tensor<T>,
        ctx: &mut Ctx,
    ) -> Result<f64> {
        let disc = &mut self.discriminator;
        let real_logits = disc.forward(image, mask, ctx)?;
        let ones = Tensor::full(real_logits.shape(), T::one());
        let zeros = Tensor::zeros(real_logits.shape());
        let real_loss = bce_with_logits(&real_logits, &ones)?;
        disc.backward(&bce_with_logits_grad(&real_logits, &ones)?, true)?;

        let fake_logits = disc.forward(image, fake, ctx)?;
        let fake_loss = bce_with_logits(&fake_logits, &zeros)?;
        disc.backward(&bce_with_logits_grad(&fake_logits, &zeros)?, true)?;

        let d_loss = (real_loss + fake_loss).to_f64().unwrap_or(f64::NAN);
        if !d_loss.is_finite() {
            for p in disc.params_mut() {
                p.zero_grad();
            }
            return Err(self.diverged(f64::NAN, f64::NAN, f64::NAN, d_loss));
        }
        self.disc_opt.step(&mut self.discriminator.params_mut())?;
        Ok(d_loss)
    }

    /// Generator update through the discriminator, whose parameters stay fixed.
    ///
    /// Must follow the generator forward pass that produced `fake`.
    pub fn update_generator(
        &mut self,
        image: &Tensor<T>,
        mask: &Tensor<T>,
        fake: &Tensor<T>,
        ctx: &mut Ctx,
        d_loss: f64,
    ) -> Result<StepLosses> {
        let logits = self.discriminator.forward(image, fake, ctx)?;
        let loss = gen_loss(&logits, fake, mask, self.config.lambda_l1)?;
        let as_f64 = |v: T| v.to_f64().unwrap_or(f64::NAN);
        let losses = StepLosses {
            g_total: as_f64(loss.total),
            g_adv: as_f64(loss.adv),
            g_l1: as_f64(loss.l1),
            d_loss,
        };
        if !losses.g_total.is_finite() {
            return Err(self.diverged(losses.g_total, losses.g_adv, losses.g_l1, d_loss));
        }
        let ones = Tensor::full(logits.shape(), T::one());
        let (_, mut g_fake) = self
            .discriminator
            .backward(&bce_with_logits_grad(&logits, &ones)?, false)?;
        let mut g_l1 = l1_grad(fake, mask)?;
        g_l1.scale(T::lit(self.config.lambda_l1));
        g_fake.add_assign(&g_l1)?;
        self.generator.backward(&g_fake, true)?;
        self.gen_opt.step(&mut self.generator.params_mut())?;
        Ok(losses)
    }

    fn diverged(&self, g_total: f64, g_adv: f64, g_l1: f64, d_loss: f64) -> Error {
        Error::Diverged {
            step: self.step + 1,
            g_total,
            g_adv,
            g_l1,
            d_loss,
        }
    }
}
