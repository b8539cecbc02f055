use rand::Rng;

use super::{Ctx, Layer, Mode, Shape, Tensor};
use crate::{Error, Result, Scalar};

/// Concatenates two tensors along the channel axis.
pub fn concat_channels<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    let (sa, sb) = (a.shape(), b.shape());
    if (sa.n, sa.h, sa.w) != (sb.n, sb.h, sb.w) {
        return Err(Error::ShapeMismatch {
            op: "concat_channels",
            left: sa,
            right: sb,
        });
    }
    let mut data = Vec::with_capacity(a.len() + b.len());
    for (pa, pb) in a.data().chunks_exact(sa.c).zip(b.data().chunks_exact(sb.c)) {
        data.extend_from_slice(pa);
        data.extend_from_slice(pb);
    }
    Tensor::from_vec(sa.with_channels(sa.c + sb.c), data)
}

/// Inverse of [`concat_channels`]: the first `first` channels and the rest.
pub fn split_channels<T: Scalar>(x: &Tensor<T>, first: usize) -> Result<(Tensor<T>, Tensor<T>)> {
    let s = x.shape();
    if first == 0 || first >= s.c {
        return Err(Error::InvalidShape(format!(
            "cannot split {first} channels from {s}"
        )));
    }
    let mut a = Vec::with_capacity(s.n * s.h * s.w * first);
    let mut b = Vec::with_capacity(s.n * s.h * s.w * (s.c - first));
    for px in x.data().chunks_exact(s.c) {
        a.extend_from_slice(&px[..first]);
        b.extend_from_slice(&px[first..]);
    }
    Ok((
        Tensor::from_vec(s.with_channels(first), a)?,
        Tensor::from_vec(s.with_channels(s.c - first), b)?,
    ))
}

/// Zero padding of `pad` pixels on each spatial side.
#[derive(Debug, Clone)]
pub struct ZeroPad2d {
    pub pad: usize,
    input: Option<Shape>,
}

impl ZeroPad2d {
    pub fn new(pad: usize) -> Self {
        ZeroPad2d { pad, input: None }
    }
}

impl<T: Scalar> Layer<T> for ZeroPad2d {
    fn forward(&mut self, x: &Tensor<T>, _ctx: &mut Ctx) -> Result<Tensor<T>> {
        let s = x.shape();
        let out_shape = self.output_shape_of(s);
        let mut out = Tensor::zeros(out_shape);
        let row = s.w * s.c;
        for n in 0..s.n {
            for y in 0..s.h {
                let src = &x.data()[s.offset(n, y, 0, 0)..][..row];
                let dst = out_shape.offset(n, y + self.pad, self.pad, 0);
                out.data_mut()[dst..dst + row].copy_from_slice(src);
            }
        }
        self.input = Some(s);
        Ok(out)
    }

    fn backward(&mut self, grad: &Tensor<T>, _param_grads: bool) -> Result<Tensor<T>> {
        let s = self
            .input
            .ok_or_else(|| Error::InvalidShape("zero_pad2d: backward before forward".into()))?;
        let gs = grad.shape();
        if gs != self.output_shape_of(s) {
            return Err(Error::ShapeMismatch {
                op: "zero_pad2d backward",
                left: self.output_shape_of(s),
                right: gs,
            });
        }
        let row = s.w * s.c;
        let mut data = Vec::with_capacity(s.len());
        for n in 0..s.n {
            for y in 0..s.h {
                let src = gs.offset(n, y + self.pad, self.pad, 0);
                data.extend_from_slice(&grad.data()[src..src + row]);
            }
        }
        Tensor::from_vec(s, data)
    }

    fn output_shape(&self, input: Shape) -> Result<Shape> {
        Ok(self.output_shape_of(input))
    }
}

impl ZeroPad2d {
    fn output_shape_of(&self, s: Shape) -> Shape {
        Shape::new(s.n, s.h + 2 * self.pad, s.w + 2 * self.pad, s.c)
    }
}

/// Inverted dropout: survivors are scaled by `1 / (1 - rate)`; identity in eval mode.
#[derive(Debug, Clone)]
pub struct Dropout<T> {
    pub rate: f64,
    mask: Option<Vec<T>>,
}

impl<T: Scalar> Dropout<T> {
    pub fn new(rate: f64) -> Self {
        assert!((0.0..1.0).contains(&rate), "dropout rate must be in [0, 1)");
        Dropout { rate, mask: None }
    }
}

impl<T: Scalar> Layer<T> for Dropout<T> {
    fn forward(&mut self, x: &Tensor<T>, ctx: &mut Ctx) -> Result<Tensor<T>> {
        match ctx.mode {
            Mode::Eval => {
                self.mask = None;
                Ok(x.clone())
            }
            Mode::Train => {
                let scale = T::lit(1.0 / (1.0 - self.rate));
                let mask: Vec<T> = (0..x.len())
                    .map(|_| {
                        if ctx.rng.random::<f64>() < self.rate {
                            T::zero()
                        } else {
                            scale
                        }
                    })
                    .collect();
                let data = x.data().iter().zip(&mask).map(|(&v, &m)| v * m).collect();
                self.mask = Some(mask);
                Tensor::from_vec(x.shape(), data)
            }
        }
    }

    fn backward(&mut self, grad: &Tensor<T>, _param_grads: bool) -> Result<Tensor<T>> {
        match &self.mask {
            None => Ok(grad.clone()),
            Some(mask) => {
                if mask.len() != grad.len() {
                    return Err(Error::InvalidShape("dropout mask/grad length".into()));
                }
                let data = grad.data().iter().zip(mask).map(|(&g, &m)| g * m).collect();
                Tensor::from_vec(grad.shape(), data)
            }
        }
    }

    fn output_shape(&self, input: Shape) -> Result<Shape> {
        Ok(input)
    }
}
