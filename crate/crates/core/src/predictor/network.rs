use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::{loss_gradient, LossKind};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// A dense layer. `weights` is row-major `inputs x outputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer<T> {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<T>,
    pub biases: Vec<T>,
}

impl<T: Real> Layer<T> {
    fn weight(&self, i: usize, j: usize) -> T {
        self.weights[i * self.outputs + j]
    }

    fn affine(&self, x: &[T]) -> Vec<T> {
        let mut z = self.biases.clone();
        for (i, &xi) in x.iter().enumerate() {
            if xi == T::zero() {
                continue;
            }
            let row = &self.weights[i * self.outputs..(i + 1) * self.outputs];
            for (zj, &w) in z.iter_mut().zip(row) {
                *zj = *zj + xi * w;
            }
        }
        z
    }
}

/// Feed-forward classifier: ReLU on every hidden layer, softmax on the output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network<T> {
    layers: Vec<Layer<T>>,
}

/// Parameter gradients with the same layout as the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub weights: Vec<Vec<T>>,
    pub biases: Vec<Vec<T>>,
}

impl<T: Real> Gradients<T> {
    pub fn zeros_like(net: &Network<T>) -> Self {
        Gradients {
            weights: net.layers.iter().map(|l| vec![T::zero(); l.weights.len()]).collect(),
            biases: net.layers.iter().map(|l| vec![T::zero(); l.biases.len()]).collect(),
        }
    }

    pub fn accumulate(&mut self, other: &Gradients<T>) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            a.iter_mut().zip(b).for_each(|(x, &y)| *x = *x + y);
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            a.iter_mut().zip(b).for_each(|(x, &y)| *x = *x + y);
        }
    }
}

/// Numerically stable softmax.
pub fn softmax<T: Real>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum = exps.iter().copied().fold(T::zero(), |a, b| a + b);
    exps.into_iter().map(|e| e / sum).collect()
}

struct Trace<T> {
    // activations[0] is the input; activations[l + 1] is layer l's output
    // (post-ReLU for hidden layers, logits for the last).
    activations: Vec<Vec<T>>,
    pre: Vec<Vec<T>>,
}

impl<T: Real> Network<T> {
    /// He-uniform weights (`U(-sqrt(6 / fan_in), sqrt(6 / fan_in))`), zero biases.
    pub fn init(layer_dims: &[usize], seed: u64) -> Result<Self> {
        if layer_dims.len() < 2 {
            return Err(Error::invalid("a network needs at least input and output dims"));
        }
        if layer_dims.contains(&0) {
            return Err(Error::invalid("layer dims must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = layer_dims
            .windows(2)
            .map(|w| {
                let (inputs, outputs) = (w[0], w[1]);
                let limit = (6.0 / inputs as f64).sqrt();
                let weights = (0..inputs * outputs)
                    .map(|_| T::lit(rng.random_range(-limit..limit)))
                    .collect();
                Layer {
                    inputs,
                    outputs,
                    weights,
                    biases: vec![T::zero(); outputs],
                }
            })
            .collect();
        Ok(Network { layers })
    }

    /// Assembles a network from per-layer row-major weights and biases.
    pub fn from_parts(layer_dims: &[usize], weights: Vec<Vec<T>>, biases: Vec<Vec<T>>) -> Result<Self> {
        if layer_dims.len() < 2 {
            return Err(Error::integrity("layer_dims", "needs at least two entries"));
        }
        let expected = layer_dims.len() - 1;
        if weights.len() != expected {
            return Err(Error::integrity(
                "weights",
                format!("{} layers, expected {expected}", weights.len()),
            ));
        }
        if biases.len() != expected {
            return Err(Error::integrity(
                "biases",
                format!("{} layers, expected {expected}", biases.len()),
            ));
        }
        let mut layers = Vec::with_capacity(expected);
        for (l, (w, b)) in weights.into_iter().zip(biases).enumerate() {
            let (inputs, outputs) = (layer_dims[l], layer_dims[l + 1]);
            if w.len() != inputs * outputs {
                return Err(Error::integrity(
                    format!("weights[{l}]"),
                    format!("{} entries, expected {}", w.len(), inputs * outputs),
                ));
            }
            if b.len() != outputs {
                return Err(Error::integrity(
                    format!("biases[{l}]"),
                    format!("{} entries, expected {outputs}", b.len()),
                ));
            }
            if w.iter().chain(&b).any(|v| !v.is_finite()) {
                return Err(Error::integrity(format!("weights[{l}]"), "non-finite parameter"));
            }
            layers.push(Layer {
                inputs,
                outputs,
                weights: w,
                biases: b,
            });
        }
        Ok(Network { layers })
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.layers[0].inputs];
        dims.extend(self.layers.iter().map(|l| l.outputs));
        dims
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").outputs
    }

    fn check_input(&self, x: &[T]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::invalid(format!(
                "expected {} features, got {}",
                self.input_dim(),
                x.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("features must be finite"));
        }
        Ok(())
    }

    fn run(&self, x: &[T]) -> Trace<T> {
        let mut activations = vec![x.to_vec()];
        let mut pre = Vec::with_capacity(self.layers.len());
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let z = layer.affine(&activations[l]);
            let a = if l == last {
                z.clone()
            } else {
                z.iter().map(|&v| v.max(T::zero())).collect()
            };
            pre.push(z);
            activations.push(a);
        }
        Trace { activations, pre }
    }

    /// Raw output-layer values before softmax.
    pub fn logits(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_input(x)?;
        Ok(self.run(x).activations.pop().expect("output layer"))
    }

    /// Class probabilities.
    pub fn forward(&self, x: &[T]) -> Result<Vec<T>> {
        Ok(softmax(&self.logits(x)?))
    }

    /// Gradient of the selected loss at `(x, target)` with respect to every
    /// weight and bias.
    pub fn backward(&self, x: &[T], target: &[T], kind: LossKind) -> Result<Gradients<T>> {
        self.check_input(x)?;
        if target.len() != self.output_dim() {
            return Err(Error::invalid("target length does not match output dim"));
        }
        let trace = self.run(x);
        let probs = softmax(trace.activations.last().expect("output"));
        let dp = loss_gradient(&probs, target, kind)?;
        // Softmax Jacobian-vector product.
        let dot = probs.iter().zip(&dp).fold(T::zero(), |a, (&p, &g)| a + p * g);
        let mut delta: Vec<T> = probs.iter().zip(&dp).map(|(&p, &g)| p * (g - dot)).collect();

        let mut grads = Gradients::zeros_like(self);
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let input = &trace.activations[l];
            let gw = &mut grads.weights[l];
            for (i, &a) in input.iter().enumerate() {
                if a == T::zero() {
                    continue;
                }
                for (j, &d) in delta.iter().enumerate() {
                    gw[i * layer.outputs + j] = a * d;
                }
            }
            grads.biases[l].clone_from(&delta);
            if l > 0 {
                let below = &trace.pre[l - 1];
                delta = (0..layer.inputs)
                    .map(|i| {
                        if below[i] > T::zero() {
                            (0..layer.outputs).fold(T::zero(), |acc, j| acc + layer.weight(i, j) * delta[j])
                        } else {
                            T::zero()
                        }
                    })
                    .collect();
            }
        }
        Ok(grads)
    }

    /// `params -= step * grads`.
    pub fn apply(&mut self, grads: &Gradients<T>, step: T) {
        for (l, layer) in self.layers.iter_mut().enumerate() {
            layer
                .weights
                .iter_mut()
                .zip(&grads.weights[l])
                .for_each(|(w, &g)| *w = *w - step * g);
            layer
                .biases
                .iter_mut()
                .zip(&grads.biases[l])
                .for_each(|(b, &g)| *b = *b - step * g);
        }
    }

    /// Mutable flat view of every parameter, layer by layer, weights first.
    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.biases.iter_mut()))
    }
}

impl<T: Real> Gradients<T> {
    /// Flat view matching [`Network::params_mut`] order.
    pub fn flat(&self) -> Vec<T> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| w.iter().chain(b.iter()).copied())
            .collect()
    }
}
