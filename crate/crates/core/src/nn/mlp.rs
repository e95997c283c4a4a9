//! Dense feed-forward networks with tanh hidden layers and explicit gradients.

use rand::Rng;

use super::NnError;

/// Output nonlinearity applied after the last affine layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Head {
    Linear,
    Tanh,
    Softmax,
}

impl Head {
    pub fn as_str(self) -> &'static str {
        match self {
            Head::Linear => "linear",
            Head::Tanh => "tanh",
            Head::Softmax => "softmax",
        }
    }

    pub fn parse(s: &str) -> Option<Head> {
        match s {
            "linear" => Some(Head::Linear),
            "tanh" => Some(Head::Tanh),
            "softmax" => Some(Head::Softmax),
            _ => None,
        }
    }
}

/// Multi-layer perceptron. Hidden layers always use tanh.
///
/// Layer `k` maps `layer_sizes[k]` inputs to `layer_sizes[k + 1]` outputs; its
/// weight matrix is stored row-major with one row per output unit.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    layer_sizes: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    head: Head,
}

/// Cached activations of one forward pass, consumed by the backward pass.
#[derive(Clone, Debug)]
pub struct Trace {
    /// `acts[0]` is the input, `acts[k]` the tanh output of hidden layer `k`.
    acts: Vec<Vec<f64>>,
    logits: Vec<f64>,
    output: Vec<f64>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        &self.output
    }

    /// Pre-head activations of the final layer.
    pub fn logits(&self) -> &[f64] {
        &self.logits
    }
}

/// Parameter gradients laid out exactly like the network's parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpGrads {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl MlpGrads {
    pub fn zeros_like(net: &Mlp) -> Self {
        MlpGrads {
            weights: net.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    /// Tensors in the same order as [`Mlp::tensors`].
    pub fn tensors(&self) -> Vec<&[f64]> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| [w.as_slice(), b.as_slice()])
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| [w.as_mut_slice(), b.as_mut_slice()])
            .collect()
    }

    pub fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|g| *g *= factor);
        }
    }

    pub fn squared_norm(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|t| t.iter())
            .map(|g| g * g)
            .sum()
    }
}

impl Mlp {
    /// Builds a network with every parameter set to zero.
    pub fn zeros(layer_sizes: &[usize], head: Head) -> Result<Self, NnError> {
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
            return Err(NnError::InvalidArchitecture(layer_sizes.to_vec()));
        }
        let weights = layer_sizes
            .windows(2)
            .map(|w| vec![0.0; w[0] * w[1]])
            .collect();
        let biases = layer_sizes[1..].iter().map(|&n| vec![0.0; n]).collect();
        Ok(Mlp {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
            head,
        })
    }

    /// Scaled-uniform initialization: each weight is drawn from
    /// `U(-a, a)` with `a = gain * sqrt(3 / fan_in)`, so its variance is
    /// `gain^2 / fan_in`. The last layer uses `output_gain`. Biases start at zero.
    pub fn init<R: Rng + ?Sized>(
        layer_sizes: &[usize],
        head: Head,
        hidden_gain: f64,
        output_gain: f64,
        rng: &mut R,
    ) -> Result<Self, NnError> {
        let mut net = Self::zeros(layer_sizes, head)?;
        let last = net.weights.len() - 1;
        for (k, w) in net.weights.iter_mut().enumerate() {
            let fan_in = layer_sizes[k] as f64;
            let gain = if k == last { output_gain } else { hidden_gain };
            let bound = gain * (3.0 / fan_in).sqrt();
            for x in w.iter_mut() {
                *x = (2.0 * rng.random::<f64>() - 1.0) * bound;
            }
        }
        Ok(net)
    }

    /// The fixed two-hidden-layer shape used for every actor and critic.
    pub fn two_hidden<R: Rng + ?Sized>(
        input: usize,
        hidden: usize,
        output: usize,
        head: Head,
        output_gain: f64,
        rng: &mut R,
    ) -> Result<Self, NnError> {
        Self::init(&[input, hidden, hidden, output], head, 1.0, output_gain, rng)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn head(&self) -> Head {
        self.head
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self, layer: usize) -> &[f64] {
        &self.weights[layer]
    }

    pub fn biases(&self, layer: usize) -> &[f64] {
        &self.biases[layer]
    }

    pub fn weights_mut(&mut self, layer: usize) -> &mut [f64] {
        &mut self.weights[layer]
    }

    pub fn biases_mut(&mut self, layer: usize) -> &mut [f64] {
        &mut self.biases[layer]
    }

    /// Parameter tensors in the order `w0, b0, w1, b1, ...`.
    pub fn tensors(&self) -> Vec<&[f64]> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| [w.as_slice(), b.as_slice()])
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| [w.as_mut_slice(), b.as_mut_slice()])
            .collect()
    }

    /// Names matching [`Mlp::tensors`], with the `(rows, cols)` shape of each.
    pub fn tensor_shapes(&self) -> Vec<(String, usize, usize)> {
        let mut out = Vec::with_capacity(2 * self.weights.len());
        for k in 0..self.weights.len() {
            let (fan_in, fan_out) = (self.layer_sizes[k], self.layer_sizes[k + 1]);
            out.push((format!("w{k}"), fan_out, fan_in));
            out.push((format!("b{k}"), fan_out, 1));
        }
        out
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, NnError> {
        Ok(self.forward_trace(input)?.output)
    }

    pub fn forward_trace(&self, input: &[f64]) -> Result<Trace, NnError> {
        if input.len() != self.input_dim() {
            return Err(NnError::DimensionMismatch {
                expected: self.input_dim(),
                actual: input.len(),
            });
        }
        let last = self.weights.len() - 1;
        let mut acts = Vec::with_capacity(self.weights.len());
        acts.push(input.to_vec());
        let mut logits = Vec::new();
        for k in 0..=last {
            let z = affine(&self.weights[k], &self.biases[k], &acts[k]);
            if k == last {
                logits = z;
            } else {
                acts.push(z.into_iter().map(f64::tanh).collect());
            }
        }
        let output = match self.head {
            Head::Linear => logits.clone(),
            Head::Tanh => logits.iter().map(|z| z.tanh()).collect(),
            Head::Softmax => softmax(&logits),
        };
        Ok(Trace {
            acts,
            logits,
            output,
        })
    }

    /// Gradient of `upstream . output` with respect to every parameter and the input.
    pub fn backward(
        &self,
        input: &[f64],
        upstream: &[f64],
    ) -> Result<(MlpGrads, Vec<f64>), NnError> {
        let trace = self.forward_trace(input)?;
        let mut grads = MlpGrads::zeros_like(self);
        let input_grad = self.backward_trace(&trace, upstream, &mut grads)?;
        Ok((grads, input_grad))
    }

    /// Like [`Mlp::backward`] but reuses a trace and accumulates into `grads`.
    pub fn backward_trace(
        &self,
        trace: &Trace,
        upstream: &[f64],
        grads: &mut MlpGrads,
    ) -> Result<Vec<f64>, NnError> {
        if upstream.len() != self.output_dim() {
            return Err(NnError::DimensionMismatch {
                expected: self.output_dim(),
                actual: upstream.len(),
            });
        }
        let dlogits: Vec<f64> = match self.head {
            Head::Linear => upstream.to_vec(),
            Head::Tanh => upstream
                .iter()
                .zip(&trace.output)
                .map(|(g, y)| g * (1.0 - y * y))
                .collect(),
            Head::Softmax => {
                let dot: f64 = upstream.iter().zip(&trace.output).map(|(g, p)| g * p).sum();
                upstream
                    .iter()
                    .zip(&trace.output)
                    .map(|(g, p)| p * (g - dot))
                    .collect()
            }
        };
        self.backward_logits(trace, &dlogits, grads)
    }

    /// Backpropagates a gradient given directly on the final pre-head activations.
    pub fn backward_logits(
        &self,
        trace: &Trace,
        dlogits: &[f64],
        grads: &mut MlpGrads,
    ) -> Result<Vec<f64>, NnError> {
        if dlogits.len() != self.output_dim() {
            return Err(NnError::DimensionMismatch {
                expected: self.output_dim(),
                actual: dlogits.len(),
            });
        }
        let mut delta = dlogits.to_vec();
        for k in (0..self.weights.len()).rev() {
            let a = &trace.acts[k];
            let n_in = a.len();
            let w = &self.weights[k];
            let gw = &mut grads.weights[k];
            let gb = &mut grads.biases[k];
            let mut dprev = vec![0.0; n_in];
            for (o, &d) in delta.iter().enumerate() {
                gb[o] += d;
                if d == 0.0 {
                    continue;
                }
                let row = &w[o * n_in..(o + 1) * n_in];
                let grow = &mut gw[o * n_in..(o + 1) * n_in];
                for i in 0..n_in {
                    grow[i] += d * a[i];
                    dprev[i] += d * row[i];
                }
            }
            if k > 0 {
                // acts[k] = tanh(z) for hidden layers
                for (dp, y) in dprev.iter_mut().zip(a) {
                    *dp *= 1.0 - y * y;
                }
            }
            delta = dprev;
        }
        Ok(delta)
    }
}

fn affine(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    let n_in = x.len();
    b.iter()
        .enumerate()
        .map(|(o, &bias)| {
            let row = &w[o * n_in..(o + 1) * n_in];
            bias + row.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>()
        })
        .collect()
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}
