//! Gradient-descent updates for [`Mlp`] parameters.

use alloc::vec::Vec;

use super::net::{Gradients, Mlp};
use crate::math::{powf, sqrt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OptimizerKind {
    #[default]
    Sgd,
    Adam,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Optimizer {
    Sgd { lr: f64 },
    Adam { lr: f64, beta1: f64, beta2: f64, eps: f64, t: u64, m: Gradients, v: Gradients },
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, net: &Mlp) -> Self {
        match kind {
            OptimizerKind::Sgd => Optimizer::Sgd { lr },
            OptimizerKind::Adam => Optimizer::Adam {
                lr,
                beta1: 0.9,
                beta2: 0.999,
                eps: 1e-8,
                t: 0,
                m: Gradients::zeros_like(net),
                v: Gradients::zeros_like(net),
            },
        }
    }

    /// Moves `net` against `grads` (a descent step on the loss).
    pub fn step(&mut self, net: &mut Mlp, grads: &Gradients) {
        match self {
            Optimizer::Sgd { lr } => {
                for (i, layer) in net.layers_mut().iter_mut().enumerate() {
                    for (p, g) in layer.weights.iter_mut().zip(&grads.weights[i]) {
                        *p -= *lr * g;
                    }
                    for (p, g) in layer.biases.iter_mut().zip(&grads.biases[i]) {
                        *p -= *lr * g;
                    }
                }
            }
            Optimizer::Adam { lr, beta1, beta2, eps, t, m, v } => {
                *t += 1;
                let c1 = 1.0 - powf(*beta1, *t as f64);
                let c2 = 1.0 - powf(*beta2, *t as f64);
                let (b1, b2, lr, eps) = (*beta1, *beta2, *lr, *eps);
                let update = |p: &mut [f64], g: &[f64], m: &mut Vec<f64>, v: &mut Vec<f64>| {
                    for k in 0..p.len() {
                        m[k] = b1 * m[k] + (1.0 - b1) * g[k];
                        v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
                        p[k] -= lr * (m[k] / c1) / (sqrt(v[k] / c2) + eps);
                    }
                };
                for (i, layer) in net.layers_mut().iter_mut().enumerate() {
                    update(&mut layer.weights, &grads.weights[i], &mut m.weights[i], &mut v.weights[i]);
                    update(&mut layer.biases, &grads.biases[i], &mut m.biases[i], &mut v.biases[i]);
                }
            }
        }
    }
}
