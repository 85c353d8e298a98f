//! Learnable neural fingerprint.
//!
//! Each atom-convolution layer computes, for atom `m` with neighbor set
//! `N(m)` of size `d`,
//!
//! ```text
//! a'_m = σ(W a_m + H_d Σ_{i ∈ N(m)} a_i + b)
//! ```
//!
//! where the neighbor matrix `H_d` is selected by the degree of `m` itself
//! (one matrix per degree 1..=5). Degree-0 atoms only see `W a_m + b`.
//! After the last layer every atom is mapped through `softmax(V a_m + c)`
//! and the results are summed, so the fingerprint entries add up to the
//! number of atoms.
//!
//! The backward pass is written out by hand against a recorded [`FpTape`].

use crate::activation::{softmax_into, Activation};
use crate::linalg::{axpy, Matrix};
use crate::molgraph::{encode_features, MolGraph, FEATURE_WIDTH, MAX_DEGREE};
use crate::params::{join, Parameters};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NeuralFpError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("tape does not match parameters: {0}")]
    TapeMismatch(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuralFpConfig {
    pub input_width: usize,
    pub layer_widths: Vec<usize>,
    pub fingerprint_size: usize,
    pub activation: Activation,
    /// Sum a softmax readout of every layer instead of the last one only.
    #[serde(default)]
    pub per_layer_pooling: bool,
}

impl Default for NeuralFpConfig {
    fn default() -> Self {
        NeuralFpConfig {
            input_width: FEATURE_WIDTH,
            layer_widths: vec![64, 64],
            fingerprint_size: 128,
            activation: Activation::Relu,
            per_layer_pooling: false,
        }
    }
}

/// One atom-convolution layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvLayer {
    /// `W`, out × in.
    pub self_weight: Matrix,
    /// `H_1..H_5`, each out × in, indexed by the center atom's degree.
    pub neighbor_weights: Vec<Matrix>,
    pub bias: Vec<f64>,
}

impl ConvLayer {
    pub fn zeros(in_width: usize, out_width: usize) -> Self {
        ConvLayer {
            self_weight: Matrix::zeros(out_width, in_width),
            neighbor_weights: vec![Matrix::zeros(out_width, in_width); MAX_DEGREE],
            bias: vec![0.0; out_width],
        }
    }

    pub fn in_width(&self) -> usize {
        self.self_weight.cols()
    }

    pub fn out_width(&self) -> usize {
        self.self_weight.rows()
    }
}

/// Softmax readout `softmax(V a + c)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pooling {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuralFpParams {
    pub layers: Vec<ConvLayer>,
    /// One readout, or one per layer when `per_layer_pooling` is set.
    pub pooling: Vec<Pooling>,
    pub activation: Activation,
    #[serde(default)]
    pub per_layer_pooling: bool,
}

impl NeuralFpParams {
    /// Glorot-uniform weights, zero biases.
    pub fn init<R: Rng + ?Sized>(cfg: &NeuralFpConfig, rng: &mut R) -> Self {
        let mut layers = Vec::with_capacity(cfg.layer_widths.len());
        let mut in_width = cfg.input_width;
        for &out in &cfg.layer_widths {
            layers.push(ConvLayer {
                self_weight: Matrix::glorot(out, in_width, rng),
                neighbor_weights: (0..MAX_DEGREE)
                    .map(|_| Matrix::glorot(out, in_width, rng))
                    .collect(),
                bias: vec![0.0; out],
            });
            in_width = out;
        }
        let readout_inputs: Vec<usize> = if cfg.per_layer_pooling {
            cfg.layer_widths.clone()
        } else {
            vec![in_width]
        };
        let pooling = readout_inputs
            .into_iter()
            .map(|w| Pooling {
                weight: Matrix::glorot(cfg.fingerprint_size, w, rng),
                bias: vec![0.0; cfg.fingerprint_size],
            })
            .collect();
        NeuralFpParams {
            layers,
            pooling,
            activation: cfg.activation,
            per_layer_pooling: cfg.per_layer_pooling,
        }
    }

    pub fn input_width(&self) -> usize {
        self.layers
            .first()
            .map_or_else(|| self.pooling[0].weight.cols(), ConvLayer::in_width)
    }

    pub fn fingerprint_size(&self) -> usize {
        self.pooling[0].weight.rows()
    }

    pub fn config(&self) -> NeuralFpConfig {
        NeuralFpConfig {
            input_width: self.input_width(),
            layer_widths: self.layers.iter().map(ConvLayer::out_width).collect(),
            fingerprint_size: self.fingerprint_size(),
            activation: self.activation,
            per_layer_pooling: self.per_layer_pooling,
        }
    }

    /// Checks the width chain and readout shapes.
    pub fn validate(&self) -> Result<(), NeuralFpError> {
        let mut width = self.input_width();
        for (k, layer) in self.layers.iter().enumerate() {
            if layer.in_width() != width {
                return Err(shape(format!(
                    "layer {k} expects width {}, chain gives {width}",
                    layer.in_width()
                )));
            }
            if layer.neighbor_weights.len() != MAX_DEGREE {
                return Err(shape(format!(
                    "layer {k} has {} neighbor matrices",
                    layer.neighbor_weights.len()
                )));
            }
            for h in &layer.neighbor_weights {
                if h.shape() != layer.self_weight.shape() {
                    return Err(shape(format!(
                        "layer {k} neighbor matrix shape {:?}",
                        h.shape()
                    )));
                }
            }
            if layer.bias.len() != layer.out_width() {
                return Err(shape(format!("layer {k} bias length {}", layer.bias.len())));
            }
            width = layer.out_width();
        }
        let expected_readouts = if self.per_layer_pooling {
            self.layers.len()
        } else {
            1
        };
        if self.pooling.len() != expected_readouts {
            return Err(shape(format!(
                "expected {expected_readouts} readouts, found {}",
                self.pooling.len()
            )));
        }
        let s = self.fingerprint_size();
        for (j, pool) in self.pooling.iter().enumerate() {
            let source = if self.per_layer_pooling {
                self.layers[j].out_width()
            } else {
                width
            };
            if pool.weight.shape() != (s, source) || pool.bias.len() != s {
                return Err(shape(format!(
                    "readout {j} has shape {:?}",
                    pool.weight.shape()
                )));
            }
        }
        Ok(())
    }
}

fn shape(msg: String) -> NeuralFpError {
    NeuralFpError::ShapeMismatch(msg)
}

impl Parameters for NeuralFpParams {
    fn visit_blocks(&self, prefix: &str, f: &mut dyn FnMut(String, &[f64])) {
        for (k, layer) in self.layers.iter().enumerate() {
            let p = join(prefix, &format!("layer{k}"));
            f(join(&p, "W"), layer.self_weight.as_slice());
            for (d, h) in layer.neighbor_weights.iter().enumerate() {
                f(join(&p, &format!("H{}", d + 1)), h.as_slice());
            }
            f(join(&p, "b"), &layer.bias);
        }
        for (j, pool) in self.pooling.iter().enumerate() {
            let p = join(prefix, &format!("pool{j}"));
            f(join(&p, "V"), pool.weight.as_slice());
            f(join(&p, "c"), &pool.bias);
        }
    }

    fn visit_blocks_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut [f64])) {
        for (k, layer) in self.layers.iter_mut().enumerate() {
            let p = join(prefix, &format!("layer{k}"));
            f(join(&p, "W"), layer.self_weight.as_mut_slice());
            for (d, h) in layer.neighbor_weights.iter_mut().enumerate() {
                f(join(&p, &format!("H{}", d + 1)), h.as_mut_slice());
            }
            f(join(&p, "b"), &mut layer.bias);
        }
        for (j, pool) in self.pooling.iter_mut().enumerate() {
            let p = join(prefix, &format!("pool{j}"));
            f(join(&p, "V"), pool.weight.as_mut_slice());
            f(join(&p, "c"), &mut pool.bias);
        }
    }
}

/// Values recorded by one convolution layer.
#[derive(Debug, Clone)]
pub struct LayerTape {
    /// Sum of neighbor input rows per atom (M × in).
    pub neighbor_sums: Matrix,
    pub pre_activations: Matrix,
    pub outputs: Matrix,
}

#[derive(Debug, Clone)]
pub struct FpTape {
    pub inputs: Matrix,
    pub neighbors: Vec<Vec<usize>>,
    pub layers: Vec<LayerTape>,
    /// Per readout, the softmax output of every atom (M × S).
    pub softmax: Vec<Matrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeuralFingerprint {
    pub values: Vec<f64>,
    pub atom_count: usize,
}

/// One atom-convolution layer applied to all atoms.
pub fn atom_convolution_layer(
    features: &Matrix,
    neighbors: &[Vec<usize>],
    layer: &ConvLayer,
    activation: Activation,
) -> Result<LayerTape, NeuralFpError> {
    if features.cols() != layer.in_width() {
        return Err(shape(format!(
            "features have width {}, layer expects {}",
            features.cols(),
            layer.in_width()
        )));
    }
    if features.rows() != neighbors.len() {
        return Err(shape(format!(
            "{} feature rows for {} atoms",
            features.rows(),
            neighbors.len()
        )));
    }
    let m_atoms = features.rows();
    let (in_w, out_w) = (layer.in_width(), layer.out_width());
    let mut neighbor_sums = Matrix::zeros(m_atoms, in_w);
    let mut pre = Matrix::zeros(m_atoms, out_w);
    let mut out = Matrix::zeros(m_atoms, out_w);
    for (m, nbrs) in neighbors.iter().enumerate() {
        if nbrs.len() > MAX_DEGREE {
            return Err(shape(format!("atom {m} has degree {}", nbrs.len())));
        }
        let sum = &mut neighbor_sums.as_mut_slice()[m * in_w..(m + 1) * in_w];
        for &i in nbrs {
            axpy(1.0, features.row(i), sum);
        }
        let z = &mut pre.as_mut_slice()[m * out_w..(m + 1) * out_w];
        z.copy_from_slice(&layer.bias);
        layer.self_weight.gemv_acc(features.row(m), z);
        if let Some(d) = nbrs.len().checked_sub(1) {
            layer.neighbor_weights[d].gemv_acc(neighbor_sums.row(m), z);
        }
        for (o, &x) in out.as_mut_slice()[m * out_w..(m + 1) * out_w]
            .iter_mut()
            .zip(z.iter())
        {
            *o = activation.apply(x);
        }
    }
    Ok(LayerTape {
        neighbor_sums,
        pre_activations: pre,
        outputs: out,
    })
}

fn to_matrix(g: &MolGraph) -> Matrix {
    let f = encode_features(g);
    Matrix::from_vec(f.rows(), f.width(), f.as_slice().to_vec())
}

/// Forward pass over the graph's encoded features.
pub fn neural_fingerprint(
    g: &MolGraph,
    params: &NeuralFpParams,
) -> Result<(NeuralFingerprint, FpTape), NeuralFpError> {
    neural_fingerprint_from_features(to_matrix(g), g.adjacency().to_vec(), params)
}

pub fn neural_fingerprint_from_features(
    inputs: Matrix,
    neighbors: Vec<Vec<usize>>,
    params: &NeuralFpParams,
) -> Result<(NeuralFingerprint, FpTape), NeuralFpError> {
    params.validate()?;
    if inputs.cols() != params.input_width() {
        return Err(shape(format!(
            "features have width {}, parameters expect {}",
            inputs.cols(),
            params.input_width()
        )));
    }
    let mut layers: Vec<LayerTape> = Vec::with_capacity(params.layers.len());
    for layer in &params.layers {
        let input = layers.last().map_or(&inputs, |t| &t.outputs);
        let tape = atom_convolution_layer(input, &neighbors, layer, params.activation)?;
        layers.push(tape);
    }

    let m_atoms = inputs.rows();
    let s = params.fingerprint_size();
    let mut values = vec![0.0; s];
    let mut softmax = Vec::with_capacity(params.pooling.len());
    let mut logits = vec![0.0; s];
    for (j, pool) in params.pooling.iter().enumerate() {
        let source = readout_source(params, &inputs, &layers, j);
        let mut probs = Matrix::zeros(m_atoms, s);
        for m in 0..m_atoms {
            logits.copy_from_slice(&pool.bias);
            pool.weight.gemv_acc(source.row(m), &mut logits);
            let p = &mut probs.as_mut_slice()[m * s..(m + 1) * s];
            softmax_into(&logits, p);
            axpy(1.0, p, &mut values);
        }
        softmax.push(probs);
    }
    Ok((
        NeuralFingerprint {
            values,
            atom_count: m_atoms,
        },
        FpTape {
            inputs,
            neighbors,
            layers,
            softmax,
        },
    ))
}

fn readout_source<'a>(
    params: &NeuralFpParams,
    inputs: &'a Matrix,
    layers: &'a [LayerTape],
    readout: usize,
) -> &'a Matrix {
    if params.per_layer_pooling {
        &layers[readout].outputs
    } else {
        layers.last().map_or(inputs, |t| &t.outputs)
    }
}

fn check_tape(
    params: &NeuralFpParams,
    tape: &FpTape,
    upstream: &[f64],
) -> Result<(), NeuralFpError> {
    let mismatch = |m: String| Err(NeuralFpError::TapeMismatch(m));
    if upstream.len() != params.fingerprint_size() {
        return mismatch(format!(
            "upstream has {} entries, fingerprint has {}",
            upstream.len(),
            params.fingerprint_size()
        ));
    }
    if tape.layers.len() != params.layers.len() || tape.softmax.len() != params.pooling.len() {
        return mismatch("layer or readout count differs".into());
    }
    let m_atoms = tape.inputs.rows();
    if tape.inputs.cols() != params.input_width() || tape.neighbors.len() != m_atoms {
        return mismatch("input shape differs".into());
    }
    for (k, (lt, layer)) in tape.layers.iter().zip(&params.layers).enumerate() {
        if lt.outputs.shape() != (m_atoms, layer.out_width())
            || lt.neighbor_sums.shape() != (m_atoms, layer.in_width())
        {
            return mismatch(format!("layer {k} shape differs"));
        }
    }
    for sm in &tape.softmax {
        if sm.shape() != (m_atoms, params.fingerprint_size()) {
            return mismatch("softmax shape differs".into());
        }
    }
    Ok(())
}

/// Reverse pass for `upstreamᵀ · n`.
///
/// Parameter gradients are accumulated into `grads` (same shapes as
/// `params`); the gradient with respect to the input features is returned.
/// Accumulation runs atoms ascending within each layer, layers descending.
pub fn neural_fingerprint_backward(
    params: &NeuralFpParams,
    tape: &FpTape,
    upstream: &[f64],
    grads: &mut NeuralFpParams,
) -> Result<Matrix, NeuralFpError> {
    check_tape(params, tape, upstream)?;
    let m_atoms = tape.inputs.rows();
    let s = params.fingerprint_size();
    let n_layers = params.layers.len();

    // d/d(outputs) for every layer; index n_layers-1 is the last layer,
    // and the inputs are handled separately.
    let mut d_out: Vec<Matrix> = params
        .layers
        .iter()
        .map(|l| Matrix::zeros(m_atoms, l.out_width()))
        .collect();
    let mut d_inputs = Matrix::zeros(m_atoms, tape.inputs.cols());

    let mut d_logits = vec![0.0; s];
    for (j, pool) in params.pooling.iter().enumerate() {
        let source = readout_source(params, &tape.inputs, &tape.layers, j);
        let probs = &tape.softmax[j];
        let target = if params.per_layer_pooling {
            Some(j)
        } else {
            n_layers.checked_sub(1)
        };
        for m in 0..m_atoms {
            let p = probs.row(m);
            let mean: f64 = p.iter().zip(upstream).map(|(pi, gi)| pi * gi).sum();
            for ((dl, &pi), &gi) in d_logits.iter_mut().zip(p).zip(upstream) {
                *dl = pi * (gi - mean);
            }
            let gp = &mut grads.pooling[j];
            gp.weight.outer_acc(&d_logits, source.row(m));
            axpy(1.0, &d_logits, &mut gp.bias);
            let dst = match target {
                Some(k) => &mut d_out[k],
                None => &mut d_inputs,
            };
            let w = dst.cols();
            pool.weight
                .gemv_t_acc(&d_logits, &mut dst.as_mut_slice()[m * w..(m + 1) * w]);
        }
    }

    for k in (0..n_layers).rev() {
        let layer = &params.layers[k];
        let lt = &tape.layers[k];
        let (in_w, out_w) = (layer.in_width(), layer.out_width());
        let mut d_pre = vec![0.0; out_w];
        let mut d_in = Matrix::zeros(m_atoms, in_w);
        for m in 0..m_atoms {
            let dy = d_out[k].row(m);
            let x = lt.pre_activations.row(m);
            let y = lt.outputs.row(m);
            for c in 0..out_w {
                d_pre[c] = dy[c] * params.activation.derivative(x[c], y[c]);
            }
            let input_row = if k == 0 {
                tape.inputs.row(m)
            } else {
                tape.layers[k - 1].outputs.row(m)
            };
            let g = &mut grads.layers[k];
            g.self_weight.outer_acc(&d_pre, input_row);
            axpy(1.0, &d_pre, &mut g.bias);
            layer
                .self_weight
                .gemv_t_acc(&d_pre, &mut d_in.as_mut_slice()[m * in_w..(m + 1) * in_w]);
            let nbrs = &tape.neighbors[m];
            if let Some(d) = nbrs.len().checked_sub(1) {
                g.neighbor_weights[d].outer_acc(&d_pre, lt.neighbor_sums.row(m));
                let mut d_sum = vec![0.0; in_w];
                layer.neighbor_weights[d].gemv_t_acc(&d_pre, &mut d_sum);
                for &i in nbrs {
                    axpy(
                        1.0,
                        &d_sum,
                        &mut d_in.as_mut_slice()[i * in_w..(i + 1) * in_w],
                    );
                }
            }
        }
        if k == 0 {
            d_inputs.add_assign(&d_in);
        } else {
            d_out[k - 1].add_assign(&d_in);
        }
    }
    Ok(d_inputs)
}
