//! Strided 2-D convolution and its transpose.
//!
//! Both layers are built from three kernels over one geometry: a "large"
//! spatial grid (the strided conv's input) and a "small" grid (its output).
//! The conv runs `correlate` forward and `scatter_back` for its input
//! gradient; the transposed conv swaps them. Weights are laid out
//! `[kh][kw][large_channels][small_channels]` for both, so a transposed conv
//! sharing a conv's weight tensor is exactly that conv's adjoint.

use rand::Rng;
use rayon::prelude::*;

use super::{normal_init, Ctx, Layer, Param, Shape, Tensor};
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Padding {
    /// Output extent `ceil(in / stride)`, padding split with the extra row/column at the bottom/right.
    Same,
    Valid,
}

#[derive(Debug, Clone, Copy)]
struct Geom {
    n: usize,
    ih: usize,
    iw: usize,
    ci: usize,
    oh: usize,
    ow: usize,
    co: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    pad_top: isize,
    pad_left: isize,
}

impl Geom {
    fn new(
        large: Shape,
        small_channels: usize,
        kh: usize,
        kw: usize,
        stride: usize,
        padding: Padding,
    ) -> Result<Self> {
        if stride == 0 {
            return Err(Error::InvalidShape("stride must be >= 1".into()));
        }
        let (oh, pad_top) = extent(large.h, kh, stride, padding)?;
        let (ow, pad_left) = extent(large.w, kw, stride, padding)?;
        Ok(Geom {
            n: large.n,
            ih: large.h,
            iw: large.w,
            ci: large.c,
            oh,
            ow,
            co: small_channels,
            kh,
            kw,
            stride,
            pad_top,
            pad_left,
        })
    }

    fn large_shape(&self) -> Shape {
        Shape::new(self.n, self.ih, self.iw, self.ci)
    }

    fn small_shape(&self) -> Shape {
        Shape::new(self.n, self.oh, self.ow, self.co)
    }

    #[inline]
    fn large_row(&self, small: usize, k: usize, pad: isize, limit: usize) -> Option<usize> {
        let i = (small * self.stride + k) as isize - pad;
        (i >= 0 && (i as usize) < limit).then_some(i as usize)
    }

    #[inline]
    fn small_row(&self, large: usize, k: usize, pad: isize, limit: usize) -> Option<usize> {
        let t = large as isize + pad - k as isize;
        if t < 0 || t as usize % self.stride != 0 {
            return None;
        }
        let o = t as usize / self.stride;
        (o < limit).then_some(o)
    }
}

fn extent(input: usize, k: usize, stride: usize, padding: Padding) -> Result<(usize, isize)> {
    match padding {
        Padding::Same => {
            let out = input.div_ceil(stride);
            let total = ((out - 1) * stride + k).saturating_sub(input);
            Ok((out, (total / 2) as isize))
        }
        Padding::Valid => {
            if input < k {
                return Err(Error::InvalidShape(format!(
                    "valid convolution with kernel {k} on extent {input}"
                )));
            }
            Ok(((input - k) / stride + 1, 0))
        }
    }
}

/// Strided correlation, large grid to small grid.
fn correlate<T: Scalar>(x: &[T], w: &[T], g: &Geom) -> Vec<T> {
    let row = g.ow * g.co;
    let mut out = vec![T::zero(); g.n * g.oh * row];
    let (ci, co) = (g.ci, g.co);
    out.par_chunks_mut(row).enumerate().for_each(|(r, orow)| {
        let (n, oy) = (r / g.oh, r % g.oh);
        for ky in 0..g.kh {
            let Some(iy) = g.large_row(oy, ky, g.pad_top, g.ih) else {
                continue;
            };
            for ox in 0..g.ow {
                let o = &mut orow[ox * co..(ox + 1) * co];
                for kx in 0..g.kw {
                    let Some(ix) = g.large_row(ox, kx, g.pad_left, g.iw) else {
                        continue;
                    };
                    let xin = &x[((n * g.ih + iy) * g.iw + ix) * ci..][..ci];
                    let wk = &w[(ky * g.kw + kx) * ci * co..][..ci * co];
                    for (&xv, wrow) in xin.iter().zip(wk.chunks_exact(co)) {
                        if xv == T::zero() {
                            continue;
                        }
                        for (acc, &wv) in o.iter_mut().zip(wrow) {
                            *acc += xv * wv;
                        }
                    }
                }
            }
        }
    });
    out
}

/// Adjoint of [`correlate`]: small grid back onto the large grid.
fn scatter_back<T: Scalar>(gs: &[T], w: &[T], g: &Geom) -> Vec<T> {
    let (ci, co) = (g.ci, g.co);
    // [kh][kw][co][ci] so the inner loop runs over contiguous large channels.
    let mut wt = vec![T::zero(); w.len()];
    for k in 0..g.kh * g.kw {
        for c in 0..ci {
            for o in 0..co {
                wt[(k * co + o) * ci + c] = w[(k * ci + c) * co + o];
            }
        }
    }
    let row = g.iw * ci;
    let mut out = vec![T::zero(); g.n * g.ih * row];
    out.par_chunks_mut(row).enumerate().for_each(|(r, xrow)| {
        let (n, iy) = (r / g.ih, r % g.ih);
        for ky in 0..g.kh {
            let Some(oy) = g.small_row(iy, ky, g.pad_top, g.oh) else {
                continue;
            };
            for ix in 0..g.iw {
                let gx = &mut xrow[ix * ci..(ix + 1) * ci];
                for kx in 0..g.kw {
                    let Some(ox) = g.small_row(ix, kx, g.pad_left, g.ow) else {
                        continue;
                    };
                    let grow = &gs[((n * g.oh + oy) * g.ow + ox) * co..][..co];
                    let wk = &wt[(ky * g.kw + kx) * co * ci..][..co * ci];
                    for (&gv, wcol) in grow.iter().zip(wk.chunks_exact(ci)) {
                        if gv == T::zero() {
                            continue;
                        }
                        for (acc, &wv) in gx.iter_mut().zip(wcol) {
                            *acc += gv * wv;
                        }
                    }
                }
            }
        }
    });
    out
}

/// Weight gradient: `dw[ky,kx,c,o] = sum large[.., c] * small[.., o]` over matching positions.
fn filter_grad<T: Scalar>(x: &[T], gs: &[T], g: &Geom) -> Vec<T> {
    let (ci, co) = (g.ci, g.co);
    let per_ky = g.kw * ci * co;
    let mut dw = vec![T::zero(); g.kh * per_ky];
    dw.par_chunks_mut(per_ky).enumerate().for_each(|(ky, dwk)| {
        for n in 0..g.n {
            for oy in 0..g.oh {
                let Some(iy) = g.large_row(oy, ky, g.pad_top, g.ih) else {
                    continue;
                };
                for ox in 0..g.ow {
                    let grow = &gs[((n * g.oh + oy) * g.ow + ox) * co..][..co];
                    for kx in 0..g.kw {
                        let Some(ix) = g.large_row(ox, kx, g.pad_left, g.iw) else {
                            continue;
                        };
                        let xin = &x[((n * g.ih + iy) * g.iw + ix) * ci..][..ci];
                        let dwx = &mut dwk[kx * ci * co..][..ci * co];
                        for (&xv, drow) in xin.iter().zip(dwx.chunks_exact_mut(co)) {
                            if xv == T::zero() {
                                continue;
                            }
                            for (acc, &gv) in drow.iter_mut().zip(grow) {
                                *acc += xv * gv;
                            }
                        }
                    }
                }
            }
        }
    });
    dw
}

fn add_bias<T: Scalar>(out: &mut [T], bias: &[T]) {
    for px in out.chunks_exact_mut(bias.len()) {
        for (v, &b) in px.iter_mut().zip(bias) {
            *v += b;
        }
    }
}

fn accumulate_bias_grad<T: Scalar>(grad: &[T], db: &mut [T]) {
    for px in grad.chunks_exact(db.len()) {
        for (acc, &g) in db.iter_mut().zip(px) {
            *acc += g;
        }
    }
}

fn accumulate<T: Scalar>(dst: &mut Param<T>, src: Vec<T>) {
    for (acc, v) in dst.grad.data_mut().iter_mut().zip(src) {
        *acc += v;
    }
}

fn expect_grad_shape<T: Scalar>(op: &'static str, grad: &Tensor<T>, expected: Shape) -> Result<()> {
    if grad.shape() != expected {
        return Err(Error::ShapeMismatch {
            op,
            left: expected,
            right: grad.shape(),
        });
    }
    Ok(())
}

fn missing_forward(op: &str) -> Error {
    Error::InvalidShape(format!("{op}: backward called before forward"))
}

/// 2-D convolution (cross-correlation) with weights `[kh, kw, cin, cout]`.
#[derive(Debug, Clone)]
pub struct Conv2d<T> {
    pub weight: Param<T>,
    pub bias: Option<Param<T>>,
    pub stride: usize,
    pub padding: Padding,
    input: Option<Tensor<T>>,
}

impl<T: Scalar> Conv2d<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new<R: Rng + ?Sized>(
        kernel: usize,
        cin: usize,
        cout: usize,
        stride: usize,
        padding: Padding,
        bias: bool,
        init_std: f64,
        rng: &mut R,
    ) -> Self {
        let weight = normal_init(Shape::new(kernel, kernel, cin, cout), init_std, rng);
        let bias = bias.then(|| Param::zeros(Shape::new(1, 1, 1, cout)));
        Conv2d {
            weight: Param::new(weight),
            bias,
            stride,
            padding,
            input: None,
        }
    }

    /// Builds a layer from explicit weights (`[kh, kw, cin, cout]`) and optional bias.
    pub fn from_weights(
        weight: Tensor<T>,
        bias: Option<Tensor<T>>,
        stride: usize,
        padding: Padding,
    ) -> Result<Self> {
        if let Some(b) = &bias {
            if b.len() != weight.shape().c {
                return Err(Error::ChannelMismatch {
                    op: "conv2d bias",
                    expected: weight.shape().c,
                    got: b.len(),
                });
            }
        }
        Ok(Conv2d {
            weight: Param::new(weight),
            bias: bias.map(Param::new),
            stride,
            padding,
            input: None,
        })
    }

    pub fn in_channels(&self) -> usize {
        self.weight.value.shape().w
    }

    pub fn out_channels(&self) -> usize {
        self.weight.value.shape().c
    }

    fn geom(&self, input: Shape) -> Result<Geom> {
        let ws = self.weight.value.shape();
        if input.c != ws.w {
            return Err(Error::ChannelMismatch {
                op: "conv2d",
                expected: ws.w,
                got: input.c,
            });
        }
        Geom::new(input, ws.c, ws.n, ws.h, self.stride, self.padding)
    }
}

impl<T: Scalar> Layer<T> for Conv2d<T> {
    fn forward(&mut self, x: &Tensor<T>, _ctx: &mut Ctx) -> Result<Tensor<T>> {
        let g = self.geom(x.shape())?;
        let mut out = correlate(x.data(), self.weight.value.data(), &g);
        if let Some(b) = &self.bias {
            add_bias(&mut out, b.value.data());
        }
        self.input = Some(x.clone());
        Tensor::from_vec(g.small_shape(), out)
    }

    fn backward(&mut self, grad: &Tensor<T>, param_grads: bool) -> Result<Tensor<T>> {
        let x = self.input.as_ref().ok_or_else(|| missing_forward("conv2d"))?;
        let g = self.geom(x.shape())?;
        expect_grad_shape("conv2d backward", grad, g.small_shape())?;
        if param_grads {
            accumulate(&mut self.weight, filter_grad(x.data(), grad.data(), &g));
            if let Some(b) = &mut self.bias {
                accumulate_bias_grad(grad.data(), b.grad.data_mut());
            }
        }
        Tensor::from_vec(
            g.large_shape(),
            scatter_back(grad.data(), self.weight.value.data(), &g),
        )
    }

    fn output_shape(&self, input: Shape) -> Result<Shape> {
        Ok(self.geom(input)?.small_shape())
    }

    fn params(&self) -> Vec<&Param<T>> {
        std::iter::once(&self.weight).chain(self.bias.as_ref()).collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        std::iter::once(&mut self.weight)
            .chain(self.bias.as_mut())
            .collect()
    }
}

/// Transposed convolution with "same" padding: output extents are `stride ×` input.
///
/// Weights are `[kh, kw, cout, cin]`, the layout of the strided conv whose
/// adjoint this layer computes.
#[derive(Debug, Clone)]
pub struct ConvTranspose2d<T> {
    pub weight: Param<T>,
    pub bias: Option<Param<T>>,
    pub stride: usize,
    input: Option<Tensor<T>>,
}

impl<T: Scalar> ConvTranspose2d<T> {
    pub fn new<R: Rng + ?Sized>(
        kernel: usize,
        cin: usize,
        cout: usize,
        stride: usize,
        bias: bool,
        init_std: f64,
        rng: &mut R,
    ) -> Self {
        let weight = normal_init(Shape::new(kernel, kernel, cout, cin), init_std, rng);
        let bias = bias.then(|| Param::zeros(Shape::new(1, 1, 1, cout)));
        ConvTranspose2d {
            weight: Param::new(weight),
            bias,
            stride,
            input: None,
        }
    }

    pub fn from_weights(weight: Tensor<T>, bias: Option<Tensor<T>>, stride: usize) -> Result<Self> {
        if let Some(b) = &bias {
            if b.len() != weight.shape().w {
                return Err(Error::ChannelMismatch {
                    op: "conv2d_transpose bias",
                    expected: weight.shape().w,
                    got: b.len(),
                });
            }
        }
        Ok(ConvTranspose2d {
            weight: Param::new(weight),
            bias: bias.map(Param::new),
            stride,
            input: None,
        })
    }

    pub fn in_channels(&self) -> usize {
        self.weight.value.shape().c
    }

    pub fn out_channels(&self) -> usize {
        self.weight.value.shape().w
    }

    fn geom(&self, input: Shape) -> Result<Geom> {
        let ws = self.weight.value.shape();
        if input.c != ws.c {
            return Err(Error::ChannelMismatch {
                op: "conv2d_transpose",
                expected: ws.c,
                got: input.c,
            });
        }
        let large = Shape::new(input.n, input.h * self.stride, input.w * self.stride, ws.w);
        let g = Geom::new(large, ws.c, ws.n, ws.h, self.stride, Padding::Same)?;
        debug_assert_eq!(g.small_shape(), input);
        Ok(g)
    }
}

impl<T: Scalar> Layer<T> for ConvTranspose2d<T> {
    fn forward(&mut self, x: &Tensor<T>, _ctx: &mut Ctx) -> Result<Tensor<T>> {
        let g = self.geom(x.shape())?;
        let mut out = scatter_back(x.data(), self.weight.value.data(), &g);
        if let Some(b) = &self.bias {
            add_bias(&mut out, b.value.data());
        }
        self.input = Some(x.clone());
        Tensor::from_vec(g.large_shape(), out)
    }

    fn backward(&mut self, grad: &Tensor<T>, param_grads: bool) -> Result<Tensor<T>> {
        let x = self
            .input
            .as_ref()
            .ok_or_else(|| missing_forward("conv2d_transpose"))?;
        let g = self.geom(x.shape())?;
        expect_grad_shape("conv2d_transpose backward", grad, g.large_shape())?;
        if param_grads {
            accumulate(&mut self.weight, filter_grad(grad.data(), x.data(), &g));
            if let Some(b) = &mut self.bias {
                accumulate_bias_grad(grad.data(), b.grad.data_mut());
            }
        }
        Tensor::from_vec(
            g.small_shape(),
            correlate(grad.data(), self.weight.value.data(), &g),
        )
    }

    fn output_shape(&self, input: Shape) -> Result<Shape> {
        Ok(self.geom(input)?.large_shape())
    }

    fn params(&self) -> Vec<&Param<T>> {
        std::iter::once(&self.weight).chain(self.bias.as_ref()).collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        std::iter::once(&mut self.weight)
            .chain(self.bias.as_mut())
            .collect()
    }
}
