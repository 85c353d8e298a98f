//! Dense feed-forward towers.

use crate::activation::Activation;
use crate::linalg::{axpy, Matrix};
use crate::params::{join, Parameters};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MlpError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    /// out × in
    pub weight: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub layers: Vec<DenseLayer>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub hidden_activation: Activation,
    pub output_dim: usize,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden: vec![128],
            hidden_activation: Activation::Relu,
            output_dim: 32,
        }
    }
}

impl MlpParams {
    /// Glorot-uniform weights, zero biases, identity output layer.
    pub fn init<R: Rng + ?Sized>(input_dim: usize, cfg: &MlpConfig, rng: &mut R) -> Self {
        let mut layers = Vec::with_capacity(cfg.hidden.len() + 1);
        let mut width = input_dim;
        for &h in &cfg.hidden {
            layers.push(DenseLayer {
                weight: Matrix::glorot(h, width, rng),
                bias: vec![0.0; h],
                activation: cfg.hidden_activation,
            });
            width = h;
        }
        layers.push(DenseLayer {
            weight: Matrix::glorot(cfg.output_dim, width, rng),
            bias: vec![0.0; cfg.output_dim],
            activation: Activation::Identity,
        });
        MlpParams { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.weight.cols())
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.weight.rows())
    }

    pub fn validate(&self) -> Result<(), MlpError> {
        let Some(last) = self.layers.last() else {
            return Err(MlpError::ShapeMismatch("MLP has no layers".into()));
        };
        if last.activation != Activation::Identity {
            return Err(MlpError::ShapeMismatch(
                "final MLP layer must use identity activation".into(),
            ));
        }
        let mut width = self.input_dim();
        for (k, layer) in self.layers.iter().enumerate() {
            if layer.weight.cols() != width || layer.bias.len() != layer.weight.rows() {
                return Err(MlpError::ShapeMismatch(format!(
                    "layer {k} has shape {:?} with bias {}, expected input width {width}",
                    layer.weight.shape(),
                    layer.bias.len()
                )));
            }
            width = layer.weight.rows();
        }
        Ok(())
    }
}

impl Parameters for MlpParams {
    fn visit_blocks(&self, prefix: &str, f: &mut dyn FnMut(String, &[f64])) {
        for (k, layer) in self.layers.iter().enumerate() {
            let p = join(prefix, &format!("layer{k}"));
            f(join(&p, "weight"), layer.weight.as_slice());
            f(join(&p, "bias"), &layer.bias);
        }
    }

    fn visit_blocks_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut [f64])) {
        for (k, layer) in self.layers.iter_mut().enumerate() {
            let p = join(prefix, &format!("layer{k}"));
            f(join(&p, "weight"), layer.weight.as_mut_slice());
            f(join(&p, "bias"), &mut layer.bias);
        }
    }
}

#[derive(Debug, Clone)]
pub struct MlpTape {
    /// Input to each layer, followed by the final output.
    pub activations: Vec<Vec<f64>>,
    pub pre_activations: Vec<Vec<f64>>,
}

impl MlpTape {
    pub fn output(&self) -> &[f64] {
        self.activations
            .last()
            .expect("tape holds the input at least")
    }
}

pub fn mlp_forward(params: &MlpParams, input: &[f64]) -> Result<MlpTape, MlpError> {
    if input.len() != params.input_dim() {
        return Err(MlpError::ShapeMismatch(format!(
            "input has {} entries, MLP expects {}",
            input.len(),
            params.input_dim()
        )));
    }
    let mut activations = Vec::with_capacity(params.layers.len() + 1);
    let mut pre_activations = Vec::with_capacity(params.layers.len());
    activations.push(input.to_vec());
    for layer in &params.layers {
        let mut z = layer.bias.clone();
        layer.weight.gemv_acc(activations.last().unwrap(), &mut z);
        let y = z.iter().map(|&x| layer.activation.apply(x)).collect();
        pre_activations.push(z);
        activations.push(y);
    }
    Ok(MlpTape {
        activations,
        pre_activations,
    })
}

/// Accumulates parameter gradients of `upstreamᵀ · output` into `grads`
/// and returns the gradient with respect to the input.
pub fn mlp_backward(
    params: &MlpParams,
    tape: &MlpTape,
    upstream: &[f64],
    grads: &mut MlpParams,
) -> Result<Vec<f64>, MlpError> {
    if upstream.len() != params.output_dim() || tape.pre_activations.len() != params.layers.len() {
        return Err(MlpError::ShapeMismatch(
            "tape or upstream does not match the MLP".into(),
        ));
    }
    let mut delta = upstream.to_vec();
    for (k, layer) in params.layers.iter().enumerate().rev() {
        let pre = &tape.pre_activations[k];
        let out = &tape.activations[k + 1];
        for ((d, &x), &y) in delta.iter_mut().zip(pre).zip(out) {
            *d *= layer.activation.derivative(x, y);
        }
        let g = &mut grads.layers[k];
        g.weight.outer_acc(&delta, &tape.activations[k]);
        axpy(1.0, &delta, &mut g.bias);
        let mut below = vec![0.0; layer.weight.cols()];
        layer.weight.gemv_t_acc(&delta, &mut below);
        delta = below;
    }
    Ok(delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::zeros_like;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_layer_passes_input_through() {
        let params = MlpParams {
            layers: vec![DenseLayer {
                weight: Matrix::identity(3),
                bias: vec![0.0; 3],
                activation: Activation::Identity,
            }],
        };
        let tape = mlp_forward(&params, &[1.5, -2.0, 0.25]).unwrap();
        assert_eq!(tape.output(), &[1.5, -2.0, 0.25]);
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let params = MlpParams::init(4, &MlpConfig::default(), &mut rng);
        let tape = mlp_forward(&params, &[1.0, 0.0, -1.0, 2.0]).unwrap();
        let mut grads = zeros_like(&params);
        let d_in = mlp_backward(&params, &tape, &vec![0.0; 32], &mut grads).unwrap();
        assert!(grads.flatten().iter().all(|&v| v == 0.0));
        assert!(d_in.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn input_width_is_checked() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let params = MlpParams::init(4, &MlpConfig::default(), &mut rng);
        assert!(mlp_forward(&params, &[1.0; 3]).is_err());
    }

    #[test]
    fn final_layer_must_be_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut params = MlpParams::init(4, &MlpConfig::default(), &mut rng);
        assert!(params.validate().is_ok());
        params.layers.last_mut().unwrap().activation = Activation::Tanh;
        assert!(params.validate().is_err());
    }
}
