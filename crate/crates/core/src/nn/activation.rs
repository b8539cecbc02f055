use super::{Ctx, Layer, Shape, Tensor};
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActivationKind {
    Relu,
    LeakyRelu(f64),
    Tanh,
    Sigmoid,
}

impl ActivationKind {
    pub fn apply<T: Scalar>(self, v: T) -> T {
        match self {
            ActivationKind::Relu => v.max(T::zero()),
            ActivationKind::LeakyRelu(a) => {
                if v > T::zero() {
                    v
                } else {
                    v * T::lit(a)
                }
            }
            ActivationKind::Tanh => v.tanh(),
            ActivationKind::Sigmoid => sigmoid(v),
        }
    }

    /// Derivative expressed through the input `x` and output `y`.
    fn derivative<T: Scalar>(self, x: T, y: T) -> T {
        match self {
            ActivationKind::Relu => {
                if x > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            ActivationKind::LeakyRelu(a) => {
                if x > T::zero() {
                    T::one()
                } else {
                    T::lit(a)
                }
            }
            ActivationKind::Tanh => T::one() - y * y,
            ActivationKind::Sigmoid => y * (T::one() - y),
        }
    }
}

pub(crate) fn sigmoid<T: Scalar>(v: T) -> T {
    if v >= T::zero() {
        (T::one() + (-v).exp()).recip()
    } else {
        let e = v.exp();
        e / (T::one() + e)
    }
}

/// Elementwise nonlinearity.
#[derive(Debug, Clone)]
pub struct Activation<T> {
    pub kind: ActivationKind,
    cache: Option<(Tensor<T>, Tensor<T>)>,
}

impl<T: Scalar> Activation<T> {
    pub fn new(kind: ActivationKind) -> Self {
        Activation { kind, cache: None }
    }
}

impl<T: Scalar> Layer<T> for Activation<T> {
    fn forward(&mut self, x: &Tensor<T>, _ctx: &mut Ctx) -> Result<Tensor<T>> {
        let kind = self.kind;
        let y = x.map(|v| kind.apply(v));
        self.cache = Some((x.clone(), y.clone()));
        Ok(y)
    }

    fn backward(&mut self, grad: &Tensor<T>, _param_grads: bool) -> Result<Tensor<T>> {
        let (x, y) = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::InvalidShape("activation: backward before forward".into()))?;
        grad.check_same("activation backward", x)?;
        let kind = self.kind;
        let data = grad
            .data()
            .iter()
            .zip(x.data().iter().zip(y.data()))
            .map(|(&g, (&xv, &yv))| g * kind.derivative(xv, yv))
            .collect();
        Tensor::from_vec(grad.shape(), data)
    }

    fn output_shape(&self, input: Shape) -> Result<Shape> {
        Ok(input)
    }
}
