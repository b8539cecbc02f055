use super::Param;
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 2e-4,
            beta1: 0.5,
            beta2: 0.999,
            epsilon: 1e-7,
        }
    }
}

/// Adam with bias correction. Moments are matched to parameters by position.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    pub config: AdamConfig,
    /// Number of completed steps.
    pub t: u64,
    pub m: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(config: AdamConfig) -> Self {
        Adam {
            config,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    /// Applies one update to every trainable parameter and zeroes all gradients.
    pub fn step(&mut self, params: &mut [&mut Param<T>]) -> Result<()> {
        if self.m.is_empty() {
            self.m = params.iter().map(|p| vec![T::zero(); p.len()]).collect();
            self.v = self.m.clone();
        }
        if self.m.len() != params.len() {
            return Err(Error::InvalidShape(format!(
                "adam: state tracks {} parameters, got {}",
                self.m.len(),
                params.len()
            )));
        }
        for (i, p) in params.iter().enumerate() {
            if self.m[i].len() != p.len() || self.v[i].len() != p.len() {
                return Err(Error::ShapeMismatch {
                    op: "adam moments",
                    left: p.value.shape(),
                    right: p.value.shape(),
                });
            }
        }
        self.t += 1;
        let c = self.config;
        let t = self.t as i32;
        let b1 = T::lit(c.beta1);
        let b2 = T::lit(c.beta2);
        let lr = T::lit(c.lr);
        let eps = T::lit(c.epsilon);
        let corr1 = T::one() - b1.powi(t);
        let corr2 = T::one() - b2.powi(t);
        for ((p, m), v) in params.iter_mut().zip(&mut self.m).zip(&mut self.v) {
            if p.trainable {
                let Param { value, grad, .. } = &mut **p;
                for (((w, &g), m), v) in value
                    .data_mut()
                    .iter_mut()
                    .zip(grad.data())
                    .zip(m.iter_mut())
                    .zip(v.iter_mut())
                {
                    *m = b1 * *m + (T::one() - b1) * g;
                    *v = b2 * *v + (T::one() - b2) * g * g;
                    let m_hat = *m / corr1;
                    let v_hat = *v / corr2;
                    *w -= lr * m_hat / (v_hat.sqrt() + eps);
                }
            }
            p.zero_grad();
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Shape, Tensor};

    fn scalar_param(w: f64, g: f64) -> Param<f64> {
        let mut p = Param::new(Tensor::full(Shape::new(1, 1, 1, 1), w));
        p.grad.fill(g);
        p
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        // m = 0.5, v = 0.001; bias-corrected m̂ = 1, v̂ = 1 -> Δw = -lr / (1 + eps)
        let mut p = scalar_param(0.0, 1.0);
        let mut adam = Adam::new(AdamConfig::default());
        adam.step(&mut [&mut p]).unwrap();
        let expected = -2e-4 / (1.0 + 1e-7);
        assert!((p.value.data()[0] - expected).abs() < 1e-15);
        assert_eq!(p.grad.data()[0], 0.0);
        assert_eq!(adam.t, 1);
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut p = scalar_param(0.75, 0.0);
        let mut adam = Adam::new(AdamConfig::default());
        adam.step(&mut [&mut p]).unwrap();
        assert_eq!(p.value.data()[0], 0.75);
    }

    #[test]
    fn constant_positive_gradient_decreases_monotonically() {
        // Two-step recursion with g = 1: m2 = 0.75, v2 = 0.001999; corrections
        // 0.75 and 0.001999 give m̂ = v̂ = 1 again, so each step is -lr/(1+eps).
        let mut p = scalar_param(1.0, 1.0);
        let mut adam = Adam::new(AdamConfig::default());
        adam.step(&mut [&mut p]).unwrap();
        let after_one = p.value.data()[0];
        p.grad.fill(1.0);
        adam.step(&mut [&mut p]).unwrap();
        let after_two = p.value.data()[0];
        assert!(after_one < 1.0 && after_two < after_one);
        let step = 2e-4 / (1.0 + 1e-7);
        assert!((after_two - (1.0 - 2.0 * step)).abs() < 1e-12);
        assert!(adam.v[0][0] >= 0.0);
    }

    #[test]
    fn frozen_parameters_are_skipped_but_zeroed() {
        let mut p = scalar_param(0.5, 3.0);
        p.trainable = false;
        let mut adam = Adam::new(AdamConfig::default());
        adam.step(&mut [&mut p]).unwrap();
        assert_eq!(p.value.data()[0], 0.5);
        assert_eq!(p.grad.data()[0], 0.0);
    }

    #[test]
    fn mismatched_state_is_an_error() {
        let mut a = scalar_param(0.0, 1.0);
        let mut b = scalar_param(0.0, 1.0);
        let mut adam = Adam::new(AdamConfig::default());
        adam.step(&mut [&mut a]).unwrap();
        assert!(adam.step(&mut [&mut a, &mut b]).is_err());
        let mut big = Param::<f64>::zeros(Shape::new(1, 1, 2, 1));
        assert!(adam.step(&mut [&mut big]).is_err());
    }
}
