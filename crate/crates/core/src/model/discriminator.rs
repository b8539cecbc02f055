use rand::Rng;

use super::summary::LayerRow;
use super::{DownBlock, ModelConfig, Network};
use crate::nn::{
    concat_channels, split_channels, Activation, ActivationKind, BatchNorm, Conv2d, Ctx, Layer,
    Padding, Shape, Tensor, ZeroPad2d,
};
use crate::{Error, Result, Scalar};

/// PatchGAN discriminator over the channel-concatenated (image, mask) pair.
///
/// Three stride-2 blocks (`base`, `2·base`, `4·base`; the first without batch
/// norm), zero-pad, 4×4 stride-1 conv to `8·base` + batch norm + LeakyReLU,
/// zero-pad, and a 4×4 stride-1 conv to one logit per patch.
pub struct Discriminator<T> {
    config: ModelConfig,
    pub down: Vec<DownBlock<T>>,
    pad1: ZeroPad2d,
    pub conv: Conv2d<T>,
    pub norm: BatchNorm<T>,
    act: Activation<T>,
    pad2: ZeroPad2d,
    pub last: Conv2d<T>,
}

impl<T: Scalar> Discriminator<T> {
    pub fn new<R: Rng + ?Sized>(cfg: &ModelConfig, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let b = cfg.base_channels;
        let widths = [b, 2 * b, 4 * b];
        let mut cin = 2 * cfg.in_channels;
        let mut down = Vec::with_capacity(3);
        for (i, &cout) in widths.iter().enumerate() {
            down.push(DownBlock::new(cin, cout, i > 0, cfg, rng));
            cin = cout;
        }
        let conv = Conv2d::new(4, cin, 8 * b, 1, Padding::Valid, false, cfg.init_std, rng);
        let last = Conv2d::new(4, 8 * b, 1, 1, Padding::Valid, true, cfg.init_std, rng);
        Ok(Discriminator {
            config: cfg.clone(),
            down,
            pad1: ZeroPad2d::new(1),
            conv,
            norm: BatchNorm::new(8 * b, cfg.bn_momentum, cfg.bn_epsilon),
            act: Activation::new(ActivationKind::LeakyRelu(0.2)),
            pad2: ZeroPad2d::new(1),
            last,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// Patch logits for the pair `(image, target)`.
    pub fn forward(&mut self, image: &Tensor<T>, target: &Tensor<T>, ctx: &mut Ctx) -> Result<Tensor<T>> {
        let (si, st) = (image.shape(), target.shape());
        if si.c != self.config.in_channels || st.c != self.config.in_channels {
            return Err(Error::ChannelMismatch {
                op: "discriminator input",
                expected: self.config.in_channels,
                got: if si.c != self.config.in_channels { si.c } else { st.c },
            });
        }
        let mut h = concat_channels(image, target)?;
        for blk in &mut self.down {
            h = blk.forward(&h, ctx)?;
        }
        h = self.pad1.forward(&h, ctx)?;
        h = self.conv.forward(&h, ctx)?;
        h = self.norm.forward(&h, ctx)?;
        h = self.act.forward(&h, ctx)?;
        h = self.pad2.forward(&h, ctx)?;
        self.last.forward(&h, ctx)
    }

    /// Returns gradients with respect to the image and the target.
    pub fn backward(&mut self, grad: &Tensor<T>, param_grads: bool) -> Result<(Tensor<T>, Tensor<T>)> {
        let mut g = self.last.backward(grad, param_grads)?;
        g = Layer::<T>::backward(&mut self.pad2, &g, param_grads)?;
        g = self.act.backward(&g, param_grads)?;
        g = self.norm.backward(&g, param_grads)?;
        g = self.conv.backward(&g, param_grads)?;
        g = Layer::<T>::backward(&mut self.pad1, &g, param_grads)?;
        for blk in self.down.iter_mut().rev() {
            g = blk.backward(&g, param_grads)?;
        }
        split_channels(&g, self.config.in_channels)
    }

    pub fn output_shape(&self) -> Result<Shape> {
        Ok(self.param_table()?.last().expect("rows").shape())
    }

    pub fn param_table(&self) -> Result<Vec<LayerRow>> {
        let n = self.config.image_size;
        let c = self.config.in_channels;
        let input = Shape::new(1, n, n, c);
        let mut rows = vec![
            LayerRow::new("input_image", input, 0, &[]),
            LayerRow::new("target_image", input, 0, &[]),
        ];
        let mut shape = input.with_channels(2 * c);
        rows.push(LayerRow::new("concat", shape, 0, &["input_image", "target_image"]));
        let mut prev = "concat".to_string();
        for (i, blk) in self.down.iter().enumerate() {
            shape = blk.output_shape(shape)?;
            let name = format!("down_{}", i + 1);
            rows.push(LayerRow::new(&name, shape, blk.stored_param_count(), &[&prev]));
            prev = name;
        }
        shape = Layer::<T>::output_shape(&self.pad1, shape)?;
        rows.push(LayerRow::new("zero_pad_1", shape, 0, &[&prev]));
        shape = self.conv.output_shape(shape)?;
        rows.push(LayerRow::new("conv", shape, self.conv.stored_param_count(), &["zero_pad_1"]));
        rows.push(LayerRow::new("batch_norm", shape, self.norm.stored_param_count(), &["conv"]));
        rows.push(LayerRow::new("leaky_relu", shape, 0, &["batch_norm"]));
        shape = Layer::<T>::output_shape(&self.pad2, shape)?;
        rows.push(LayerRow::new("zero_pad_2", shape, 0, &["leaky_relu"]));
        shape = self.last.output_shape(shape)?;
        rows.push(LayerRow::new("patch_logits", shape, self.last.stored_param_count(), &["zero_pad_2"]));
        Ok(rows)
    }
}

impl<T: Scalar> Network<T> for Discriminator<T> {
    fn layers(&self) -> Vec<(String, &dyn Layer<T>)> {
        let mut out = Vec::new();
        for (i, blk) in self.down.iter().enumerate() {
            blk.named_layers(&format!("down{i}"), &mut out);
        }
        out.push(("head.conv".to_string(), &self.conv));
        out.push(("head.bn".to_string(), &self.norm));
        out.push(("logits.conv".to_string(), &self.last));
        out
    }

    fn layers_mut(&mut self) -> Vec<(String, &mut dyn Layer<T>)> {
        let mut out = Vec::new();
        for (i, blk) in self.down.iter_mut().enumerate() {
            blk.named_layers_mut(&format!("down{i}"), &mut out);
        }
        out.push(("head.conv".to_string(), &mut self.conv));
        out.push(("head.bn".to_string(), &mut self.norm));
        out.push(("logits.conv".to_string(), &mut self.last));
        out
    }
}
