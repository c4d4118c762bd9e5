use super::{Prng, Tensor};
use crate::{Error, Result};

/// Element-wise activation applied after the affine transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
    Linear,
}

impl Activation {
    #[inline]
    fn apply(self, z: f32) -> f32 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Linear => z,
        }
    }

    /// Derivative as a function of the pre-activation.
    ///
    /// ReLU uses the subgradient 0 at exactly z = 0.
    #[inline]
    fn derivative(self, z: f32) -> f32 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => {
                let s = 1.0 / (1.0 + (-z).exp());
                s * (1.0 - s)
            }
            Activation::Linear => 1.0,
        }
    }
}

/// A dense layer `y = activation(x W + b)`.
///
/// Weights are stored row-major with shape `(fan_in, fan_out)`, so
/// `y_j = Σ_i x_i · W[i][j] + b_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    fan_in: usize,
    fan_out: usize,
    weights: Vec<f32>,
    bias: Vec<f32>,
    activation: Activation,
}

impl DenseLayer {
    /// Fresh layer with Glorot-uniform weights and zero bias.
    pub fn new(fan_in: usize, fan_out: usize, activation: Activation, prng: &mut Prng) -> Self {
        DenseLayer {
            fan_in,
            fan_out,
            weights: init_glorot(fan_in, fan_out, prng),
            bias: vec![0.0; fan_out],
            activation,
        }
    }

    /// Layer from existing parameters (checkpoint loading, tests).
    pub fn from_parts(
        fan_in: usize,
        fan_out: usize,
        activation: Activation,
        weights: Vec<f32>,
        bias: Vec<f32>,
    ) -> Result<Self> {
        if weights.len() != fan_in * fan_out {
            return Err(Error::Dimension {
                context: "dense layer weights",
                expected: fan_in * fan_out,
                got: weights.len(),
            });
        }
        if bias.len() != fan_out {
            return Err(Error::Dimension {
                context: "dense layer bias",
                expected: fan_out,
                got: bias.len(),
            });
        }
        Ok(DenseLayer {
            fan_in,
            fan_out,
            weights,
            bias,
            activation,
        })
    }

    pub fn fan_in(&self) -> usize {
        self.fan_in
    }

    pub fn fan_out(&self) -> usize {
        self.fan_out
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weights(&self) -> &[f32] {
        &self.weights
    }

    pub fn bias(&self) -> &[f32] {
        &self.bias
    }

    pub fn weights_mut(&mut self) -> &mut [f32] {
        &mut self.weights
    }

    pub fn bias_mut(&mut self) -> &mut [f32] {
        &mut self.bias
    }

    /// Mutable views of the weight and bias tensors together.
    pub fn params_mut(&mut self) -> (&mut [f32], &mut [f32]) {
        (&mut self.weights, &mut self.bias)
    }
}

/// Glorot-uniform weight matrix: entries uniform in
/// `±sqrt(6 / (fan_in + fan_out))`, row-major `(fan_in, fan_out)`.
pub fn init_glorot(fan_in: usize, fan_out: usize, prng: &mut Prng) -> Vec<f32> {
    assert!(fan_in >= 1 && fan_out >= 1, "layer dims must be >= 1");
    let limit = (6.0 / (fan_in + fan_out) as f32).sqrt();
    (0..fan_in * fan_out)
        .map(|_| prng.uniform(-limit, limit))
        .collect()
}

/// Per-layer values retained by [`forward_pass`] for the backward pass.
#[derive(Debug, Clone)]
pub struct LayerCache {
    /// The layer's input batch.
    pub input: Tensor,
    /// Pre-activation values `x W + b`.
    pub preact: Tensor,
}

/// Parameter gradients for one layer, same shapes as the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads {
    pub weights: Vec<f32>,
    pub bias: Vec<f32>,
}

/// `c (m×n) += alpha · a (m×k) · b (k×n)`, all row-major with the given
/// row/column strides. `c` must be zeroed by the caller when accumulation is
/// not wanted.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    alpha: f32,
    a: &[f32],
    rsa: isize,
    csa: isize,
    b: &[f32],
    rsb: isize,
    csb: isize,
    c: &mut [f32],
) {
    debug_assert!(c.len() >= m * n);
    unsafe {
        matrixmultiply::sgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            1.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Run `input` through a chain of layers.
///
/// Returns the final activation batch together with per-layer caches
/// sufficient for [`backward_pass`].
pub fn forward_pass(network: &[DenseLayer], input: &Tensor) -> Result<(Tensor, Vec<LayerCache>)> {
    assert!(!network.is_empty(), "network must have at least one layer");
    if input.shape().len() != 2 {
        return Err(Error::Dimension {
            context: "forward input rank",
            expected: 2,
            got: input.shape().len(),
        });
    }
    let batch = input.rows();
    let mut current = input.clone();
    let mut caches = Vec::with_capacity(network.len());

    for layer in network {
        if current.cols() != layer.fan_in {
            return Err(Error::Dimension {
                context: "forward input width",
                expected: layer.fan_in,
                got: current.cols(),
            });
        }
        let mut preact = Tensor::zeros(&[batch, layer.fan_out]);
        for row in 0..batch {
            let start = row * layer.fan_out;
            preact.data_mut()[start..start + layer.fan_out].copy_from_slice(&layer.bias);
        }
        gemm(
            batch,
            layer.fan_in,
            layer.fan_out,
            1.0,
            current.data(),
            layer.fan_in as isize,
            1,
            &layer.weights,
            layer.fan_out as isize,
            1,
            preact.data_mut(),
        );
        let mut out = preact.clone();
        for v in out.data_mut() {
            *v = layer.activation.apply(*v);
        }
        caches.push(LayerCache {
            input: current,
            preact,
        });
        current = out;
    }
    Ok((current, caches))
}

/// Backpropagate `output_grad` (gradient w.r.t. the final activations)
/// through the chain, returning per-layer parameter gradients (same order as
/// `network`) and the gradient w.r.t. the chain's input.
pub fn backward_pass(
    network: &[DenseLayer],
    caches: &[LayerCache],
    output_grad: &Tensor,
) -> Result<(Vec<LayerGrads>, Tensor)> {
    if caches.len() != network.len() {
        return Err(Error::Dimension {
            context: "backward cache count",
            expected: network.len(),
            got: caches.len(),
        });
    }
    let last = network.len() - 1;
    if output_grad.shape() != caches[last].preact.shape() {
        return Err(Error::Dimension {
            context: "backward output gradient width",
            expected: caches[last].preact.cols(),
            got: output_grad.cols(),
        });
    }

    let mut grads = vec![
        LayerGrads {
            weights: Vec::new(),
            bias: Vec::new(),
        };
        network.len()
    ];
    let mut upstream = output_grad.clone();

    for (idx, layer) in network.iter().enumerate().rev() {
        let cache = &caches[idx];
        let batch = cache.input.rows();

        // dz = upstream ⊙ activation'(preact)
        let mut dz = upstream;
        for (g, &z) in dz.data_mut().iter_mut().zip(cache.preact.data()) {
            *g *= layer.activation.derivative(z);
        }

        // dW (fan_in × fan_out) = inputᵀ · dz
        let mut d_weights = vec![0.0; layer.fan_in * layer.fan_out];
        gemm(
            layer.fan_in,
            batch,
            layer.fan_out,
            1.0,
            cache.input.data(),
            1,
            layer.fan_in as isize,
            dz.data(),
            layer.fan_out as isize,
            1,
            &mut d_weights,
        );

        // db = column sums of dz
        let mut d_bias = vec![0.0; layer.fan_out];
        for row in 0..batch {
            let row = dz.row(row);
            for (b, &g) in d_bias.iter_mut().zip(row) {
                *b += g;
            }
        }

        // d_input (batch × fan_in) = dz · Wᵀ
        let mut d_input = Tensor::zeros(&[batch, layer.fan_in]);
        gemm(
            batch,
            layer.fan_out,
            layer.fan_in,
            1.0,
            dz.data(),
            layer.fan_out as isize,
            1,
            &layer.weights,
            1,
            layer.fan_out as isize,
            d_input.data_mut(),
        );

        grads[idx] = LayerGrads {
            weights: d_weights,
            bias: d_bias,
        };
        upstream = d_input;
    }
    Ok((grads, upstream))
}
