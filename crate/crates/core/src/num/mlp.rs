//! Fully connected networks with hand-written reverse mode.

use serde::{Deserialize, Serialize};

use super::{Matrix, NumError, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
    Identity,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// One affine layer: `y = act(x·W + b)` with `W` stored `in × out`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weight: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub layers: Vec<Layer>,
}

/// Per-layer inputs, pre-activations and outputs from a forward pass.
#[derive(Clone, Debug)]
pub struct MlpCache {
    inputs: Vec<Matrix>,
    pre: Vec<Matrix>,
    outputs: Vec<Matrix>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpGrads {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
    pub input: Matrix,
}

impl MlpParams {
    /// Glorot-uniform weights, zero biases. Hidden layers use `hidden_act`,
    /// the last layer is linear.
    pub fn glorot(sizes: &[usize], hidden_act: Activation, rng: &mut Rng) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs input and output sizes");
        let n_layers = sizes.len() - 1;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let weight = Matrix::from_fn(fan_in, fan_out, |_, _| rng.uniform_range(-bound, bound));
                Layer {
                    weight,
                    bias: vec![0.0; fan_out],
                    activation: if i + 1 == n_layers {
                        Activation::Identity
                    } else {
                        hidden_act
                    },
                }
            })
            .collect();
        MlpParams { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.weight.rows())
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.weight.cols())
    }

    pub fn validate(&self) -> Result<(), NumError> {
        for (i, l) in self.layers.iter().enumerate() {
            if l.bias.len() != l.weight.cols() {
                return Err(NumError::ShapeMismatch(format!("layer {i} bias length")));
            }
            if i > 0 && self.layers[i - 1].weight.cols() != l.weight.rows() {
                return Err(NumError::ShapeMismatch(format!("layer {i} input width")));
            }
        }
        Ok(())
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.as_slice().len() + l.bias.len())
            .sum()
    }

    /// Weights then bias for each layer, in layer order.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend_from_slice(l.weight.as_slice());
            out.extend_from_slice(&l.bias);
        }
        out
    }

    /// Inverse of [`MlpParams::to_flat`]; returns the unread tail.
    pub fn load_flat<'a>(&mut self, mut flat: &'a [f64]) -> &'a [f64] {
        for l in &mut self.layers {
            let nw = l.weight.as_slice().len();
            l.weight.as_mut_slice().copy_from_slice(&flat[..nw]);
            flat = &flat[nw..];
            let nb = l.bias.len();
            l.bias.copy_from_slice(&flat[..nb]);
            flat = &flat[nb..];
        }
        flat
    }

    pub fn forward(&self, x: &Matrix) -> Result<(Matrix, MlpCache), NumError> {
        if x.cols() != self.input_dim() {
            return Err(NumError::ShapeMismatch(format!(
                "input has {} columns, network expects {}",
                x.cols(),
                self.input_dim()
            )));
        }
        let mut cache = MlpCache {
            inputs: Vec::with_capacity(self.layers.len()),
            pre: Vec::with_capacity(self.layers.len()),
            outputs: Vec::with_capacity(self.layers.len()),
        };
        let mut current = x.clone();
        for layer in &self.layers {
            let mut z = current.matmul(&layer.weight)?;
            for i in 0..z.rows() {
                for (v, b) in z.row_mut(i).iter_mut().zip(&layer.bias) {
                    *v += b;
                }
            }
            let mut a = z.clone();
            a.as_mut_slice()
                .iter_mut()
                .for_each(|v| *v = layer.activation.apply(*v));
            cache.inputs.push(current);
            cache.pre.push(z);
            cache.outputs.push(a.clone());
            current = a;
        }
        Ok((current, cache))
    }

    /// Output only.
    pub fn predict(&self, x: &Matrix) -> Result<Matrix, NumError> {
        self.forward(x).map(|(out, _)| out)
    }

    pub fn backward(&self, cache: &MlpCache, grad_out: &Matrix) -> Result<MlpGrads, NumError> {
        let last = cache
            .outputs
            .last()
            .ok_or_else(|| NumError::ShapeMismatch("empty cache".into()))?;
        if cache.outputs.len() != self.layers.len() || grad_out.shape() != last.shape() {
            return Err(NumError::ShapeMismatch(format!(
                "gradient shape {:?} does not match output {:?}",
                grad_out.shape(),
                last.shape()
            )));
        }
        let n = self.layers.len();
        let mut weights = vec![Matrix::zeros(0, 0); n];
        let mut biases = vec![Vec::new(); n];
        let mut delta = grad_out.clone();
        for (k, layer) in self.layers.iter().enumerate().rev() {
            let z = &cache.pre[k];
            let a = &cache.outputs[k];
            for ((d, &zv), &av) in delta
                .as_mut_slice()
                .iter_mut()
                .zip(z.as_slice())
                .zip(a.as_slice())
            {
                *d *= layer.activation.derivative(zv, av);
            }
            weights[k] = cache.inputs[k].t_matmul(&delta)?;
            let mut gb = vec![0.0; delta.cols()];
            for i in 0..delta.rows() {
                for (g, d) in gb.iter_mut().zip(delta.row(i)) {
                    *g += d;
                }
            }
            biases[k] = gb;
            delta = delta.matmul_t(&layer.weight)?;
        }
        Ok(MlpGrads {
            weights,
            biases,
            input: delta,
        })
    }
}

impl MlpGrads {
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w.as_slice());
            out.extend_from_slice(b);
        }
        out
    }
}
