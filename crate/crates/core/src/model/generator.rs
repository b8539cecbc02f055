use rand::Rng;

use super::summary::LayerRow;
use super::{DownBlock, ModelConfig, Network, UpBlock};
use crate::nn::{
    concat_channels, split_channels, Activation, ActivationKind, ConvTranspose2d, Ctx, Layer, Shape,
    Tensor,
};
use crate::{Error, Result, Scalar};

/// U-Net generator: `depth` stride-2 encoder blocks down to the bottleneck,
/// `depth − 1` transposed-conv decoder blocks, each concatenated with the
/// mirror-image encoder output, then a transposed conv to one tanh channel.
///
/// Decoder block `k` (0-based) concatenates with encoder block `depth − 2 − k`.
pub struct Generator<T> {
    config: ModelConfig,
    pub encoder: Vec<DownBlock<T>>,
    pub decoder: Vec<UpBlock<T>>,
    pub last: ConvTranspose2d<T>,
    out_act: Activation<T>,
}

impl<T: Scalar> Generator<T> {
    pub fn new<R: Rng + ?Sized>(cfg: &ModelConfig, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let d = cfg.depth;
        let mut encoder = Vec::with_capacity(d);
        let mut cin = cfg.in_channels;
        for i in 0..d {
            let cout = cfg.encoder_channels(i);
            encoder.push(DownBlock::new(cin, cout, i > 0, cfg, rng));
            cin = cout;
        }
        let mut decoder = Vec::with_capacity(d - 1);
        for k in 0..d - 1 {
            let cout = cfg.encoder_channels(d - 2 - k);
            decoder.push(UpBlock::new(cin, cout, k < cfg.dropout_up_blocks, cfg, rng));
            cin = 2 * cout;
        }
        let last = ConvTranspose2d::new(4, cin, 1, 2, true, cfg.init_std, rng);
        Ok(Generator {
            config: cfg.clone(),
            encoder,
            decoder,
            last,
            out_act: Activation::new(ActivationKind::Tanh),
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// Index of the encoder block whose output decoder block `k` consumes.
    pub fn skip_source(&self, k: usize) -> usize {
        self.config.depth - 2 - k
    }

    fn check_input(&self, s: Shape) -> Result<()> {
        let n = self.config.image_size;
        if s.h != n || s.w != n || s.c != self.config.in_channels {
            return Err(Error::InvalidShape(format!(
                "generator expects (_, {n}, {n}, {}), got {s}",
                self.config.in_channels
            )));
        }
        Ok(())
    }

    /// Forward pass producing a tanh map in `[-1, 1]` with one channel.
    pub fn forward(&mut self, x: &Tensor<T>, ctx: &mut Ctx) -> Result<Tensor<T>> {
        self.check_input(x.shape())?;
        let mut skips = Vec::with_capacity(self.encoder.len());
        let mut h = x.clone();
        for blk in &mut self.encoder {
            h = blk.forward(&h, ctx)?;
            skips.push(h.clone());
        }
        for k in 0..self.decoder.len() {
            let up = self.decoder[k].forward(&h, ctx)?;
            h = concat_channels(&up, &skips[self.config.depth - 2 - k])?;
        }
        let logits = self.last.forward(&h, ctx)?;
        self.out_act.forward(&logits, ctx)
    }

    /// Backpropagates `grad` (w.r.t. the tanh output) and returns the input gradient.
    pub fn backward(&mut self, grad: &Tensor<T>, param_grads: bool) -> Result<Tensor<T>> {
        let d = self.config.depth;
        let g = self.out_act.backward(grad, param_grads)?;
        let mut g = self.last.backward(&g, param_grads)?;
        let mut skip_grads: Vec<Option<Tensor<T>>> = (0..d).map(|_| None).collect();
        for k in (0..self.decoder.len()).rev() {
            let (g_up, g_skip) = split_channels(&g, self.decoder[k].out_channels())?;
            skip_grads[d - 2 - k] = Some(g_skip);
            g = self.decoder[k].backward(&g_up, param_grads)?;
        }
        for i in (0..d).rev() {
            if let Some(s) = skip_grads[i].take() {
                g.add_assign(&s)?;
            }
            g = self.encoder[i].backward(&g, param_grads)?;
        }
        Ok(g)
    }

    /// Per-block output shapes and stored parameter counts, in graph order.
    pub fn param_table(&self) -> Result<Vec<LayerRow>> {
        let n = self.config.image_size;
        let mut rows = vec![LayerRow::new("input", Shape::new(1, n, n, self.config.in_channels), 0, &[])];
        let mut shape = rows[0].shape();
        let mut enc_names = Vec::new();
        let mut prev = "input".to_string();
        for (i, blk) in self.encoder.iter().enumerate() {
            shape = blk.output_shape(shape)?;
            let name = format!("down_{}", i + 1);
            rows.push(LayerRow::new(&name, shape, blk.stored_param_count(), &[&prev]));
            enc_names.push((name.clone(), shape));
            prev = name;
        }
        for (k, blk) in self.decoder.iter().enumerate() {
            shape = blk.output_shape(shape)?;
            let name = format!("up_{}", k + 1);
            rows.push(LayerRow::new(&name, shape, blk.stored_param_count(), &[&prev]));
            let (skip_name, skip_shape) = &enc_names[self.skip_source(k)];
            shape = shape.with_channels(shape.c + skip_shape.c);
            let cat = format!("concat_{}", k + 1);
            rows.push(LayerRow::new(&cat, shape, 0, &[&name, skip_name]));
            prev = cat;
        }
        shape = self.last.output_shape(shape)?;
        rows.push(LayerRow::new("output_conv_transpose", shape, self.last.stored_param_count(), &[&prev]));
        Ok(rows)
    }
}

impl<T: Scalar> Network<T> for Generator<T> {
    fn layers(&self) -> Vec<(String, &dyn Layer<T>)> {
        let mut out = Vec::new();
        for (i, blk) in self.encoder.iter().enumerate() {
            blk.named_layers(&format!("enc{i}"), &mut out);
        }
        for (k, blk) in self.decoder.iter().enumerate() {
            blk.named_layers(&format!("dec{k}"), &mut out);
        }
        out.push(("out.conv".to_string(), &self.last));
        out
    }

    fn layers_mut(&mut self) -> Vec<(String, &mut dyn Layer<T>)> {
        let mut out = Vec::new();
        for (i, blk) in self.encoder.iter_mut().enumerate() {
            blk.named_layers_mut(&format!("enc{i}"), &mut out);
        }
        for (k, blk) in self.decoder.iter_mut().enumerate() {
            blk.named_layers_mut(&format!("dec{k}"), &mut out);
        }
        out.push(("out.conv".to_string(), &mut self.last));
        out
    }
}
