//! Dense feed-forward networks with hand-written backpropagation.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::math::{sqrt, tanh};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => tanh(z),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activation output `y`.
    fn derivative(self, z: f64, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Tanh => 1,
            Activation::Identity => 2,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(Activation::Relu),
            1 => Ok(Activation::Tanh),
            2 => Ok(Activation::Identity),
            c => Err(Error::Format(alloc::format!("unknown activation code {c}"))),
        }
    }
}

/// `y = act(W·x + b)` with `W` stored row-major as `outputs × inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Layer { inputs, outputs, weights: vec![0.0; inputs * outputs], biases: vec![0.0; outputs], activation }
    }

    fn check(&self) -> Result<()> {
        if self.inputs == 0 || self.outputs == 0 {
            return Err(Error::config("layer widths must be positive"));
        }
        if self.weights.len() != self.inputs * self.outputs {
            return Err(Error::ShapeMismatch { expected: self.inputs * self.outputs, got: self.weights.len() });
        }
        if self.biases.len() != self.outputs {
            return Err(Error::ShapeMismatch { expected: self.outputs, got: self.biases.len() });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Layer>,
}

/// Pre-activations and outputs of every layer from one forward pass.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    input: Vec<f64>,
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.post.last().map_or(&[], |v| v.as_slice())
    }

    /// Output-layer values before the activation.
    pub fn output_pre_activation(&self) -> &[f64] {
        self.pre.last().map_or(&[], |v| v.as_slice())
    }
}

/// Parameter-shaped accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Gradients {
            weights: net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            biases: net.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
        }
    }

    pub fn clear(&mut self) {
        self.weights.iter_mut().chain(self.biases.iter_mut()).for_each(|v| v.fill(0.0));
    }
}

impl Mlp {
    /// Chains `sizes.len() − 1` layers; the last uses `output`, the rest `hidden`.
    pub fn zeros(sizes: &[usize], hidden: Activation, output: Activation) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::config("a network needs at least an input and an output width"));
        }
        let n = sizes.len() - 1;
        let layers = (0..n)
            .map(|i| Layer::zeros(sizes[i], sizes[i + 1], if i + 1 == n { output } else { hidden }))
            .collect();
        Self::from_layers(layers)
    }

    /// Uniform `±1/√fan_in` initialization; the output layer uses `±final_scale`.
    pub fn random<R: Rng + ?Sized>(
        sizes: &[usize],
        hidden: Activation,
        output: Activation,
        final_scale: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let mut net = Self::zeros(sizes, hidden, output)?;
        let n = net.layers.len();
        for (i, layer) in net.layers.iter_mut().enumerate() {
            let bound = if i + 1 == n { final_scale } else { 1.0 / sqrt(layer.inputs as f64) };
            for w in layer.weights.iter_mut().chain(layer.biases.iter_mut()) {
                *w = (rng.random::<f64>() * 2.0 - 1.0) * bound;
            }
        }
        Ok(net)
    }

    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::config("a network needs at least one layer"));
        }
        for l in &layers {
            l.check()?;
        }
        for w in layers.windows(2) {
            if w[0].outputs != w[1].inputs {
                return Err(Error::ShapeMismatch { expected: w[0].outputs, got: w[1].inputs });
            }
        }
        Ok(Mlp { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.input_dim()];
        s.extend(self.layers.iter().map(|l| l.outputs));
        s
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_dim() {
            return Err(Error::ShapeMismatch { expected: self.input_dim(), got: input.len() });
        }
        let mut x = input.to_vec();
        for l in &self.layers {
            let mut y = vec![0.0; l.outputs];
            affine(l, &x, &mut y);
            for v in &mut y {
                *v = l.activation.apply(*v);
            }
            x = y;
        }
        Ok(x)
    }

    /// Forward pass that keeps what [`Mlp::backward`] needs.
    pub fn forward_trace(&self, input: &[f64], trace: &mut Trace) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::ShapeMismatch { expected: self.input_dim(), got: input.len() });
        }
        let n = self.layers.len();
        trace.input.clear();
        trace.input.extend_from_slice(input);
        trace.pre.resize(n, Vec::new());
        trace.post.resize(n, Vec::new());
        for (i, l) in self.layers.iter().enumerate() {
            let (before, rest) = trace.post.split_at_mut(i);
            let x = if i == 0 { trace.input.as_slice() } else { before[i - 1].as_slice() };
            let pre = &mut trace.pre[i];
            pre.clear();
            pre.resize(l.outputs, 0.0);
            affine(l, x, pre);
            let post = &mut rest[0];
            post.clear();
            post.extend(pre.iter().map(|&z| l.activation.apply(z)));
        }
        Ok(())
    }

    /// Backpropagates `grad_out` (dL/d output) through the traced pass.
    ///
    /// Parameter gradients are added into `grads` when given; dL/d input is
    /// written to `grad_input` when given.
    pub fn backward(
        &self,
        trace: &Trace,
        grad_out: &[f64],
        grads: Option<&mut Gradients>,
        grad_input: Option<&mut [f64]>,
    ) -> Result<()> {
        self.backward_with_pre(trace, grad_out, None, grads, grad_input)
    }

    /// As [`Mlp::backward`], with `grad_pre` (dL/d output pre-activation)
    /// added on top of what flows through the output activation.
    pub fn backward_with_pre(
        &self,
        trace: &Trace,
        grad_out: &[f64],
        grad_pre: Option<&[f64]>,
        mut grads: Option<&mut Gradients>,
        grad_input: Option<&mut [f64]>,
    ) -> Result<()> {
        if grad_out.len() != self.output_dim() {
            return Err(Error::ShapeMismatch { expected: self.output_dim(), got: grad_out.len() });
        }
        if let Some(g) = grad_pre {
            if g.len() != self.output_dim() {
                return Err(Error::ShapeMismatch { expected: self.output_dim(), got: g.len() });
            }
        }
        let top = self.layers.len() - 1;
        let mut delta: Vec<f64> = grad_out.to_vec();
        let mut next = Vec::new();
        for i in (0..self.layers.len()).rev() {
            let l = &self.layers[i];
            for (d, (&z, &y)) in delta.iter_mut().zip(trace.pre[i].iter().zip(&trace.post[i])) {
                *d *= l.activation.derivative(z, y);
            }
            if i == top {
                if let Some(g) = grad_pre {
                    for (d, &e) in delta.iter_mut().zip(g) {
                        *d += e;
                    }
                }
            }
            let x = if i == 0 { trace.input.as_slice() } else { trace.post[i - 1].as_slice() };
            if let Some(g) = grads.as_deref_mut() {
                let gw = &mut g.weights[i];
                for (o, &d) in delta.iter().enumerate() {
                    if d != 0.0 {
                        let row = &mut gw[o * l.inputs..(o + 1) * l.inputs];
                        for (w, &xv) in row.iter_mut().zip(x) {
                            *w += d * xv;
                        }
                    }
                }
                for (b, &d) in g.biases[i].iter_mut().zip(&delta) {
                    *b += d;
                }
            }
            if i > 0 || grad_input.is_some() {
                next.clear();
                next.resize(l.inputs, 0.0);
                for (o, &d) in delta.iter().enumerate() {
                    if d != 0.0 {
                        let row = &l.weights[o * l.inputs..(o + 1) * l.inputs];
                        for (n, &w) in next.iter_mut().zip(row) {
                            *n += d * w;
                        }
                    }
                }
                core::mem::swap(&mut delta, &mut next);
            }
        }
        if let Some(gi) = grad_input {
            if gi.len() != self.input_dim() {
                return Err(Error::ShapeMismatch { expected: self.input_dim(), got: gi.len() });
            }
            gi.copy_from_slice(&delta);
        }
        Ok(())
    }

    /// `θ ← τ·θ_online + (1 − τ)·θ`.
    pub fn soft_update_from(&mut self, online: &Mlp, tau: f64) -> Result<()> {
        if self.sizes() != online.sizes() {
            return Err(Error::ShapeMismatch { expected: self.param_count(), got: online.param_count() });
        }
        for (t, o) in self.layers.iter_mut().zip(&online.layers) {
            for (tw, &ow) in t.weights.iter_mut().zip(&o.weights).chain(t.biases.iter_mut().zip(&o.biases)) {
                *tw = if tau == 1.0 { ow } else { tau * ow + (1.0 - tau) * *tw };
            }
        }
        Ok(())
    }
}

fn affine(l: &Layer, x: &[f64], out: &mut [f64]) {
    for (o, y) in out.iter_mut().enumerate() {
        let row = &l.weights[o * l.inputs..(o + 1) * l.inputs];
        let mut acc = l.biases[o];
        for (&w, &xv) in row.iter().zip(x) {
            acc += w * xv;
        }
        *y = acc;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::SimRng;
    use rand::SeedableRng;

    #[test]
    fn zero_network_outputs_zero() {
        let net = Mlp::zeros(&[8, 64, 64, 4], Activation::Relu, Activation::Tanh).unwrap();
        assert_eq!(net.forward(&[0.3; 8]).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn single_affine_layer() {
        let layer = Layer {
            inputs: 2,
            outputs: 2,
            weights: vec![1.0, 2.0, -3.0, 0.5],
            biases: vec![0.25, -1.0],
            activation: Activation::Identity,
        };
        let net = Mlp::from_layers(vec![layer]).unwrap();
        assert_eq!(net.forward(&[2.0, 4.0]).unwrap(), vec![10.25, -5.0]);
    }

    #[test]
    fn shape_errors() {
        let net = Mlp::zeros(&[3, 2], Activation::Relu, Activation::Identity).unwrap();
        assert!(net.forward(&[1.0; 4]).is_err());
        let bad = vec![Layer::zeros(3, 2, Activation::Relu), Layer::zeros(3, 1, Activation::Identity)];
        assert!(Mlp::from_layers(bad).is_err());
    }

    #[test]
    fn tanh_output_stays_open_interval() {
        let mut rng = SimRng::seed_from_u64(2);
        let net = Mlp::random(&[8, 16, 4], Activation::Relu, Activation::Tanh, 3.0, &mut rng).unwrap();
        for k in 0..50 {
            let x: Vec<f64> = (0..8).map(|i| ((i * 7 + k) as f64).sin() * 5.0).collect();
            assert!(net.forward(&x).unwrap().iter().all(|v| v.abs() <= 1.0));
        }
    }
}
