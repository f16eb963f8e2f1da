use serde::{Deserialize, Serialize};

/// Element-wise (or row-wise, for softmax) output nonlinearity of a dense layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
    Sigmoid,
    Softmax,
}

impl Activation {
    pub(crate) fn tag(self) -> u8 {
        match self {
            Activation::Identity => 0,
            Activation::Relu => 1,
            Activation::Tanh => 2,
            Activation::Sigmoid => 3,
            Activation::Softmax => 4,
        }
    }

    /// Applies the activation in place to one row of pre-activations.
    pub fn apply(self, row: &mut [f64]) {
        match self {
            Activation::Identity => {}
            Activation::Relu => row.iter_mut().for_each(|v| *v = v.max(0.0)),
            Activation::Tanh => row.iter_mut().for_each(|v| *v = v.tanh()),
            Activation::Sigmoid => row.iter_mut().for_each(|v| *v = sigmoid(*v)),
            Activation::Softmax => {
                let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut sum = 0.0;
                for v in row.iter_mut() {
                    *v = (*v - max).exp();
                    sum += *v;
                }
                row.iter_mut().for_each(|v| *v /= sum);
            }
        }
    }

    /// Maps the gradient at one row of outputs onto the pre-activations, given the
    /// activated outputs of that row.
    pub(crate) fn backprop(self, out: &[f64], grad: &[f64], pre_grad: &mut [f64]) {
        match self {
            Activation::Identity => pre_grad.copy_from_slice(grad),
            Activation::Relu => {
                for ((p, &y), &g) in pre_grad.iter_mut().zip(out).zip(grad) {
                    *p = if y > 0.0 { g } else { 0.0 };
                }
            }
            Activation::Tanh => {
                for ((p, &y), &g) in pre_grad.iter_mut().zip(out).zip(grad) {
                    *p = g * (1.0 - y * y);
                }
            }
            Activation::Sigmoid => {
                for ((p, &y), &g) in pre_grad.iter_mut().zip(out).zip(grad) {
                    *p = g * y * (1.0 - y);
                }
            }
            Activation::Softmax => {
                let dot: f64 = out.iter().zip(grad).map(|(y, g)| y * g).sum();
                for ((p, &y), &g) in pre_grad.iter_mut().zip(out).zip(grad) {
                    *p = y * (g - dot);
                }
            }
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
