use thiserror::Error;

use super::params::Params;
use crate::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum OptimError {
    #[error("non-finite gradient in {tensor}")]
    NonFiniteGradient { tensor: &'static str },
}

/// Adam, applied as gradient *ascent* on the objective.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam<F> {
    pub lr: F,
    pub beta1: F,
    pub beta2: F,
    pub eps: F,
    pub m: Params<F>,
    pub v: Params<F>,
    pub step: u64,
}

impl<F: Scalar> Adam<F> {
    pub fn new(params: &Params<F>, lr: F) -> Self {
        Adam {
            lr,
            beta1: F::of(0.9),
            beta2: F::of(0.999),
            eps: F::of(1e-8),
            m: params.zeros_like(),
            v: params.zeros_like(),
            step: 0,
        }
    }

    /// One ascent step. An all-zero gradient leaves parameters, moments and
    /// the step counter untouched and returns `Ok(false)`.
    pub fn step(&mut self, params: &mut Params<F>, grad: &Params<F>) -> Result<bool, OptimError> {
        if let Some((name, _)) = grad.tensors().into_iter().find(|(_, m)| !m.is_finite()) {
            return Err(OptimError::NonFiniteGradient { tensor: name });
        }
        if grad.is_zero() {
            return Ok(false);
        }
        self.step += 1;
        let t = self.step as i32;
        let one = F::one();
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = one - b1.powi(t);
        let c2 = one - b2.powi(t);
        let grads = grad.tensors();
        let (lr, eps) = (self.lr, self.eps);
        let (ms, vs) = (&mut self.m, &mut self.v);
        let mut i = 0;
        params.for_each_mut(|name, p| {
            let g = grads[i].1.data();
            let m = ms.tensor_mut(name).expect("moment shape").data_mut();
            let v = vs.tensor_mut(name).expect("moment shape").data_mut();
            for (k, x) in p.data_mut().iter_mut().enumerate() {
                m[k] = b1 * m[k] + (one - b1) * g[k];
                v[k] = b2 * v[k] + (one - b2) * g[k] * g[k];
                *x += lr * (m[k] / c1) / ((v[k] / c2).sqrt() + eps);
            }
            i += 1;
        });
        Ok(true)
    }
}
