use rand::Rng;

use crate::nn::{
    Activation, ActivationKind, BatchNorm, Conv2d, ConvTranspose2d, Ctx, Dropout, Layer, Padding,
    Param, Shape, Tensor,
};
use crate::{Result, Scalar};

/// Stride-2 4×4 conv → optional batch norm → LeakyReLU(0.2).
///
/// The conv carries no bias: either batch norm follows it, or (for the first
/// block) the reference architecture omits it.
pub struct DownBlock<T> {
    pub conv: Conv2d<T>,
    pub norm: Option<BatchNorm<T>>,
    pub act: Activation<T>,
}

impl<T: Scalar> DownBlock<T> {
    pub fn new<R: Rng + ?Sized>(
        cin: usize,
        cout: usize,
        batch_norm: bool,
        cfg: &super::ModelConfig,
        rng: &mut R,
    ) -> Self {
        DownBlock {
            conv: Conv2d::new(4, cin, cout, 2, Padding::Same, false, cfg.init_std, rng),
            norm: batch_norm.then(|| BatchNorm::new(cout, cfg.bn_momentum, cfg.bn_epsilon)),
            act: Activation::new(ActivationKind::LeakyRelu(0.2)),
        }
    }

    pub(crate) fn named_layers<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a dyn Layer<T>)>) {
        out.push((format!("{prefix}.conv"), &self.conv));
        if let Some(bn) = &self.norm {
            out.push((format!("{prefix}.bn"), bn));
        }
    }

    pub(crate) fn named_layers_mut<'a>(
        &'a mut self,
        prefix: &str,
        out: &mut Vec<(String, &'a mut dyn Layer<T>)>,
    ) {
        out.push((format!("{prefix}.conv"), &mut self.conv));
        if let Some(bn) = &mut self.norm {
            out.push((format!("{prefix}.bn"), bn));
        }
    }
}

impl<T: Scalar> Layer<T> for DownBlock<T> {
    fn forward(&mut self, x: &Tensor<T>, ctx: &mut Ctx) -> Result<Tensor<T>> {
        let mut h = self.conv.forward(x, ctx)?;
        if let Some(bn) = &mut self.norm {
            h = bn.forward(&h, ctx)?;
        }
        self.act.forward(&h, ctx)
    }

    fn backward(&mut self, grad: &Tensor<T>, param_grads: bool) -> Result<Tensor<T>> {
        let mut g = self.act.backward(grad, param_grads)?;
        if let Some(bn) = &mut self.norm {
            g = bn.backward(&g, param_grads)?;
        }
        self.conv.backward(&g, param_grads)
    }

    fn output_shape(&self, input: Shape) -> Result<Shape> {
        self.conv.output_shape(input)
    }

    fn params(&self) -> Vec<&Param<T>> {
        let mut p = self.conv.params();
        if let Some(bn) = &self.norm {
            p.extend(bn.params());
        }
        p
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        let mut p = self.conv.params_mut();
        if let Some(bn) = &mut self.norm {
            p.extend(bn.params_mut());
        }
        p
    }

    fn stored_param_count(&self) -> usize {
        self.conv.stored_param_count() + self.norm.as_ref().map_or(0, |bn| bn.stored_param_count())
    }
}

/// Stride-2 4×4 transposed conv → batch norm → optional dropout → ReLU.
pub struct UpBlock<T> {
    pub conv: ConvTranspose2d<T>,
    pub norm: BatchNorm<T>,
    pub dropout: Option<Dropout<T>>,
    pub act: Activation<T>,
}

impl<T: Scalar> UpBlock<T> {
    pub fn new<R: Rng + ?Sized>(
        cin: usize,
        cout: usize,
        dropout: bool,
        cfg: &super::ModelConfig,
        rng: &mut R,
    ) -> Self {
        UpBlock {
            conv: ConvTranspose2d::new(4, cin, cout, 2, false, cfg.init_std, rng),
            norm: BatchNorm::new(cout, cfg.bn_momentum, cfg.bn_epsilon),
            dropout: dropout.then(|| Dropout::new(cfg.dropout_rate)),
            act: Activation::new(ActivationKind::Relu),
        }
    }

    pub fn out_channels(&self) -> usize {
        self.conv.out_channels()
    }

    pub(crate) fn named_layers<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a dyn Layer<T>)>) {
        out.push((format!("{prefix}.conv"), &self.conv));
        out.push((format!("{prefix}.bn"), &self.norm));
    }

    pub(crate) fn named_layers_mut<'a>(
        &'a mut self,
        prefix: &str,
        out: &mut Vec<(String, &'a mut dyn Layer<T>)>,
    ) {
        out.push((format!("{prefix}.conv"), &mut self.conv));
        out.push((format!("{prefix}.bn"), &mut self.norm));
    }
}

impl<T: Scalar> Layer<T> for UpBlock<T> {
    fn forward(&mut self, x: &Tensor<T>, ctx: &mut Ctx) -> Result<Tensor<T>> {
        let mut h = self.conv.forward(x, ctx)?;
        h = self.norm.forward(&h, ctx)?;
        if let Some(d) = &mut self.dropout {
            h = d.forward(&h, ctx)?;
        }
        self.act.forward(&h, ctx)
    }

    fn backward(&mut self, grad: &Tensor<T>, param_grads: bool) -> Result<Tensor<T>> {
        let mut g = self.act.backward(grad, param_grads)?;
        if let Some(d) = &mut self.dropout {
            g = d.backward(&g, param_grads)?;
        }
        g = self.norm.backward(&g, param_grads)?;
        self.conv.backward(&g, param_grads)
    }

    fn output_shape(&self, input: Shape) -> Result<Shape> {
        self.conv.output_shape(input)
    }

    fn params(&self) -> Vec<&Param<T>> {
        let mut p = self.conv.params();
        p.extend(self.norm.params());
        p
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        let mut p = self.conv.params_mut();
        p.extend(self.norm.params_mut());
        p
    }

    fn stored_param_count(&self) -> usize {
        self.conv.stored_param_count() + self.norm.stored_param_count()
    }
}
