//! The integration network: a small feed-forward map from fused inputs to
//! the representation space the categorizers measure distances in.
//!
//! Hidden layers use a rectifier, the output layer is affine. Gradients
//! are computed by hand-written reverse mode over a recorded [`Tape`].

use std::fmt;

use ndarray::{Array1, Array2, Axis, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum NetError {
    #[error("input contains non-finite values")]
    NonFiniteInput,
    #[error("gradient for layer {layer} contains non-finite values")]
    NonFiniteGradient { layer: usize },
    #[error("backward called without a recorded forward pass")]
    MissingForwardCache,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid optimizer setting: {0}")]
    InvalidConfig(String),
}

/// Input width and per-layer output widths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkShape {
    pub input: usize,
    pub outputs: Vec<usize>,
}

impl Default for NetworkShape {
    fn default() -> Self {
        Self {
            input: 300,
            outputs: vec![300, 200, 100],
        }
    }
}

impl NetworkShape {
    pub fn new(input: usize, outputs: &[usize]) -> Self {
        Self {
            input,
            outputs: outputs.to_vec(),
        }
    }

    pub fn output(&self) -> usize {
        *self.outputs.last().unwrap_or(&self.input)
    }

    pub fn parameter_count(&self) -> usize {
        let mut fan_in = self.input;
        let mut n = 0;
        for &o in &self.outputs {
            n += fan_in * o + o;
            fan_in = o;
        }
        n
    }
}

impl fmt::Display for NetworkShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dims: Vec<String> = self.outputs.iter().map(|d| d.to_string()).collect();
        write!(f, "{}->{}", self.input, dims.join(","))
    }
}

/// One affine map; `weights` is `outputs x inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub weights: Array2<T>,
    pub bias: Array1<T>,
}

impl<T: Scalar> Dense<T> {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weights: Array2::zeros((outputs, inputs)),
            bias: Array1::zeros(outputs),
        }
    }

    fn is_finite(&self) -> bool {
        self.weights
            .iter()
            .chain(self.bias.iter())
            .all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationNetwork<T> {
    layers: Vec<Dense<T>>,
    seed: u64,
}

/// Half-width of the uniform initialization range for a layer.
pub fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

impl<T: Scalar> IntegrationNetwork<T> {
    /// Weights uniform on `[-b, b]` with `b = sqrt(6 / (fan_in + fan_out))`,
    /// biases zero.
    pub fn init(shape: &NetworkShape, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(shape.outputs.len());
        let mut fan_in = shape.input;
        for &fan_out in &shape.outputs {
            let b = glorot_bound(fan_in, fan_out);
            let weights = Array2::from_shape_simple_fn((fan_out, fan_in), || {
                T::lit(rng.random_range(-b..=b))
            });
            layers.push(Dense {
                weights,
                bias: Array1::zeros(fan_out),
            });
            fan_in = fan_out;
        }
        Self { layers, seed }
    }

    pub fn zeros(shape: &NetworkShape) -> Self {
        let mut fan_in = shape.input;
        let layers = shape
            .outputs
            .iter()
            .map(|&o| {
                let l = Dense::zeros(fan_in, o);
                fan_in = o;
                l
            })
            .collect();
        Self { layers, seed: 0 }
    }

    pub fn from_layers(layers: Vec<Dense<T>>, seed: u64) -> Result<Self, NetError> {
        if layers.is_empty() {
            return Err(NetError::Shape("network needs at least one layer".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.bias.len() != l.weights.nrows() {
                return Err(NetError::Shape(format!(
                    "layer {i}: bias length differs from weight rows"
                )));
            }
            if i > 0 && layers[i - 1].weights.nrows() != l.weights.ncols() {
                return Err(NetError::Shape(format!(
                    "layer {i}: input width differs from previous output"
                )));
            }
        }
        Ok(Self { layers, seed })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn layers(&self) -> &[Dense<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense<T>] {
        &mut self.layers
    }

    pub fn shape(&self) -> NetworkShape {
        NetworkShape {
            input: self.layers[0].weights.ncols(),
            outputs: self.layers.iter().map(|l| l.weights.nrows()).collect(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().weights.nrows()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(Dense::is_finite)
    }

    pub fn forward(&self, x: &[T]) -> Result<Vec<T>, NetError> {
        let batch = Array2::from_shape_vec((1, x.len()), x.to_vec()).expect("row vector");
        Ok(self.forward_batch(&batch)?.row(0).to_vec())
    }

    /// Maps every row of `x`.
    pub fn forward_batch(&self, x: &Array2<T>) -> Result<Array2<T>, NetError> {
        self.run(x, None)
    }

    /// Forward pass that keeps the intermediate values `backward` needs.
    pub fn forward_recorded(
        &self,
        x: &Array2<T>,
        tape: &mut Tape<T>,
    ) -> Result<Array2<T>, NetError> {
        tape.clear();
        self.run(x, Some(tape))
    }

    fn run(&self, x: &Array2<T>, mut tape: Option<&mut Tape<T>>) -> Result<Array2<T>, NetError> {
        if x.ncols() != self.input_dim() {
            return Err(NetError::Shape(format!(
                "input width {} but network expects {}",
                x.ncols(),
                self.input_dim()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(NetError::NonFiniteInput);
        }
        let last = self.layers.len() - 1;
        let mut a = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = a.dot(&layer.weights.t());
            z += &layer.bias;
            let next = if i < last {
                z.mapv(|v| v.max(T::zero()))
            } else {
                z.clone()
            };
            if let Some(t) = tape.as_deref_mut() {
                t.inputs.push(a);
                t.pre_activations.push(z);
            }
            a = next;
        }
        Ok(a)
    }

    /// Reverse-mode gradients given `dL/dH` for the rows of the recorded
    /// forward pass.
    pub fn backward(
        &self,
        tape: &Tape<T>,
        grad_output: &Array2<T>,
    ) -> Result<Gradients<T>, NetError> {
        if tape.inputs.is_empty() {
            return Err(NetError::MissingForwardCache);
        }
        if tape.inputs.len() != self.layers.len() {
            return Err(NetError::Shape(
                "tape was recorded by a different network".into(),
            ));
        }
        let z_last = tape.pre_activations.last().unwrap();
        if grad_output.dim() != z_last.dim() {
            return Err(NetError::Shape(format!(
                "output gradient {:?} does not match recorded output {:?}",
                grad_output.dim(),
                z_last.dim()
            )));
        }
        let last = self.layers.len() - 1;
        let mut grads: Vec<Dense<T>> = Vec::with_capacity(self.layers.len());
        let mut g = grad_output.clone();
        for i in (0..self.layers.len()).rev() {
            if i < last {
                Zip::from(&mut g)
                    .and(&tape.pre_activations[i])
                    .for_each(|gv, &zv| {
                        if zv <= T::zero() {
                            *gv = T::zero();
                        }
                    });
            }
            let weights = g.t().dot(&tape.inputs[i]);
            let bias = g.sum_axis(Axis(0));
            if i > 0 {
                g = g.dot(&self.layers[i].weights);
            }
            grads.push(Dense { weights, bias });
        }
        grads.reverse();
        Ok(Gradients { layers: grads })
    }

    /// `theta <- theta - learning_rate * grad`; refuses non-finite gradients
    /// and leaves the network untouched in that case.
    pub fn apply_sgd(&mut self, grads: &Gradients<T>, learning_rate: T) -> Result<(), NetError> {
        if grads.layers.len() != self.layers.len() {
            return Err(NetError::Shape(
                "gradient layer count differs from network".into(),
            ));
        }
        for (i, (l, g)) in self.layers.iter().zip(&grads.layers).enumerate() {
            if l.weights.dim() != g.weights.dim() || l.bias.dim() != g.bias.dim() {
                return Err(NetError::Shape(format!("layer {i} gradient shape differs")));
            }
            if !g.is_finite() {
                return Err(NetError::NonFiniteGradient { layer: i });
            }
        }
        for (l, g) in self.layers.iter_mut().zip(&grads.layers) {
            l.weights.scaled_add(-learning_rate, &g.weights);
            l.bias.scaled_add(-learning_rate, &g.bias);
        }
        Ok(())
    }
}

/// Values recorded by a forward pass for the matching backward pass.
#[derive(Debug, Clone, Default)]
pub struct Tape<T> {
    inputs: Vec<Array2<T>>,
    pre_activations: Vec<Array2<T>>,
}

impl<T> Tape<T> {
    pub fn new() -> Self {
        Self {
            inputs: Vec::new(),
            pre_activations: Vec::new(),
        }
    }

    pub fn clear(&mut self) {
        self.inputs.clear();
        self.pre_activations.clear();
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// Partial derivatives of a scalar loss, shaped like the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub layers: Vec<Dense<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn scaled(&self, k: T) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| Dense {
                    weights: l.weights.mapv(|x| x * k),
                    bias: l.bias.mapv(|x| x * k),
                })
                .collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(Dense::is_finite)
    }

    pub fn max_abs(&self) -> T {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()))
            .fold(T::zero(), |m, &x| m.max(x.abs()))
    }
}

/// Plain SGD settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_frames: usize,
    pub seed: u64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 200,
            batch_frames: 64,
            seed: 0,
        }
    }
}

impl SgdConfig {
    pub fn validate(&self) -> Result<(), NetError> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(NetError::InvalidConfig(
                "learning rate must be positive".into(),
            ));
        }
        if self.epochs == 0 {
            return Err(NetError::InvalidConfig("epochs must be at least 1".into()));
        }
        if self.batch_frames == 0 {
            return Err(NetError::InvalidConfig(
                "batch size must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

pub fn sgd_step<T: Scalar>(
    net: &mut IntegrationNetwork<T>,
    grads: &Gradients<T>,
    config: &SgdConfig,
) -> Result<(), NetError> {
    config.validate()?;
    net.apply_sgd(grads, T::lit(config.learning_rate))
}
