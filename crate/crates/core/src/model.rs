//! Dual-tower binding predictor and its noise-contrastive objective.
//!
//! A ligand and a pocket are fingerprinted separately, each fingerprint is
//! passed through its own MLP, and the binding probability is the sigmoid
//! of the inner product of the two embeddings.
//!
//! The training objective rewards observed positive pairs and penalizes
//! randomly drawn pairs:
//!
//! ```text
//! L = 1/N Σ_pos log σ(z) + λ · 1/M Σ_neg log(1 − σ(z))
//! ```
//!
//! `L` is maximized; the gradients returned by [`nce_loss`] are those of
//! `−L`. Log terms go through `softplus` so that very large logits stay finite.

use crate::activation::{sigmoid, softplus, Activation};
use crate::ecfp::{ecfp, EcfpConfig};
use crate::linalg::{dot, Matrix};
use crate::mlp::{mlp_backward, mlp_forward, MlpConfig, MlpError, MlpParams, MlpTape};
use crate::molgraph::{MolGraph, FEATURE_WIDTH};
use crate::neural::{
    neural_fingerprint, neural_fingerprint_backward, FpTape, NeuralFpConfig, NeuralFpError,
    NeuralFpParams,
};
use crate::par;
use crate::params::{join, zeros_like, Parameters};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::Path;
use thiserror::Error;

/// Graphs processed per parallel task when accumulating gradients.
const GRAD_CHUNK: usize = 8;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("empty batch: {0}")]
    EmptyBatch(&'static str),
    #[error(transparent)]
    Fingerprint(#[from] NeuralFpError),
    #[error(transparent)]
    Mlp(#[from] MlpError),
    #[error("parameter file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parameter file {path}: {source}")]
    Format {
        path: String,
        source: serde_json::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum TowerFingerprint {
    Neural(NeuralFpParams),
    /// Fixed fingerprint: contributes no trainable parameters.
    Ecfp(EcfpConfig),
}

impl TowerFingerprint {
    pub fn output_dim(&self) -> usize {
        match self {
            TowerFingerprint::Neural(p) => p.fingerprint_size(),
            TowerFingerprint::Ecfp(c) => c.width,
        }
    }

    pub fn method_name(&self) -> &'static str {
        match self {
            TowerFingerprint::Neural(_) => "neural",
            TowerFingerprint::Ecfp(_) => "ecfp",
        }
    }

    /// Fingerprint vector of `g` under this tower.
    pub fn values(&self, g: &MolGraph) -> Result<Vec<f64>, ModelError> {
        Ok(self.forward(g)?.0)
    }

    fn forward(&self, g: &MolGraph) -> Result<(Vec<f64>, Option<FpTape>), ModelError> {
        match self {
            TowerFingerprint::Neural(p) => {
                let (fp, tape) = neural_fingerprint(g, p)?;
                Ok((fp.values, Some(tape)))
            }
            TowerFingerprint::Ecfp(cfg) => Ok((ecfp(g, cfg).to_f64(), None)),
        }
    }
}

impl Parameters for TowerFingerprint {
    fn visit_blocks(&self, prefix: &str, f: &mut dyn FnMut(String, &[f64])) {
        if let TowerFingerprint::Neural(p) = self {
            p.visit_blocks(prefix, f);
        }
    }

    fn visit_blocks_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut [f64])) {
        if let TowerFingerprint::Neural(p) = self {
            p.visit_blocks_mut(prefix, f);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum FingerprintConfig {
    Neural(NeuralFpConfig),
    Ecfp(EcfpConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub fingerprint: FingerprintConfig,
    pub mlp: MlpConfig,
    /// One fingerprint parameter set for both towers.
    #[serde(default)]
    pub shared_fingerprint: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            fingerprint: FingerprintConfig::Neural(NeuralFpConfig::default()),
            mlp: MlpConfig::default(),
            shared_fingerprint: false,
        }
    }
}

impl ModelConfig {
    /// Smallest useful model; handy for tests and gradient checks.
    pub fn tiny(activation: Activation) -> Self {
        ModelConfig {
            fingerprint: FingerprintConfig::Neural(NeuralFpConfig {
                input_width: FEATURE_WIDTH,
                layer_widths: vec![6, 5],
                fingerprint_size: 6,
                activation,
                per_layer_pooling: false,
            }),
            mlp: MlpConfig {
                hidden: vec![5],
                hidden_activation: activation,
                output_dim: 4,
            },
            shared_fingerprint: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub ligand_fp: TowerFingerprint,
    /// `None` when the pocket tower shares `ligand_fp`.
    pub pocket_fp: Option<TowerFingerprint>,
    pub ligand_mlp: MlpParams,
    pub pocket_mlp: MlpParams,
}

impl ModelParams {
    pub fn init<R: Rng + ?Sized>(cfg: &ModelConfig, rng: &mut R) -> Self {
        let make_fp = |rng: &mut R| match &cfg.fingerprint {
            FingerprintConfig::Neural(c) => TowerFingerprint::Neural(NeuralFpParams::init(c, rng)),
            FingerprintConfig::Ecfp(c) => TowerFingerprint::Ecfp(*c),
        };
        let ligand_fp = make_fp(rng);
        let pocket_fp = if cfg.shared_fingerprint {
            None
        } else {
            Some(make_fp(rng))
        };
        let ligand_mlp = MlpParams::init(ligand_fp.output_dim(), &cfg.mlp, rng);
        let pocket_in = pocket_fp.as_ref().unwrap_or(&ligand_fp).output_dim();
        let pocket_mlp = MlpParams::init(pocket_in, &cfg.mlp, rng);
        ModelParams {
            ligand_fp,
            pocket_fp,
            ligand_mlp,
            pocket_mlp,
        }
    }

    pub fn pocket_fingerprint(&self) -> &TowerFingerprint {
        self.pocket_fp.as_ref().unwrap_or(&self.ligand_fp)
    }

    pub fn embedding_dim(&self) -> usize {
        self.ligand_mlp.output_dim()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for fp in [&self.ligand_fp, self.pocket_fingerprint()] {
            if let TowerFingerprint::Neural(p) = fp {
                p.validate()?;
            }
        }
        self.ligand_mlp.validate()?;
        self.pocket_mlp.validate()?;
        if self.ligand_mlp.input_dim() != self.ligand_fp.output_dim()
            || self.pocket_mlp.input_dim() != self.pocket_fingerprint().output_dim()
        {
            return Err(ModelError::ShapeMismatch(
                "MLP input does not match fingerprint size".into(),
            ));
        }
        if self.ligand_mlp.output_dim() != self.pocket_mlp.output_dim() {
            return Err(ModelError::ShapeMismatch(format!(
                "embedding sizes differ: ligand {} vs pocket {}",
                self.ligand_mlp.output_dim(),
                self.pocket_mlp.output_dim()
            )));
        }
        Ok(())
    }

    /// Ligand and pocket towers exchanged.
    pub fn mirrored(&self) -> ModelParams {
        let pocket_fp = self.pocket_fingerprint().clone();
        ModelParams {
            pocket_fp: self.pocket_fp.as_ref().map(|_| self.ligand_fp.clone()),
            ligand_fp: pocket_fp,
            ligand_mlp: self.pocket_mlp.clone(),
            pocket_mlp: self.ligand_mlp.clone(),
        }
    }
}

impl Parameters for ModelParams {
    fn visit_blocks(&self, prefix: &str, f: &mut dyn FnMut(String, &[f64])) {
        self.ligand_fp.visit_blocks(&join(prefix, "ligand_fp"), f);
        if let Some(p) = &self.pocket_fp {
            p.visit_blocks(&join(prefix, "pocket_fp"), f);
        }
        self.ligand_mlp.visit_blocks(&join(prefix, "ligand_mlp"), f);
        self.pocket_mlp.visit_blocks(&join(prefix, "pocket_mlp"), f);
    }

    fn visit_blocks_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut [f64])) {
        self.ligand_fp
            .visit_blocks_mut(&join(prefix, "ligand_fp"), f);
        if let Some(p) = &mut self.pocket_fp {
            p.visit_blocks_mut(&join(prefix, "pocket_fp"), f);
        }
        self.ligand_mlp
            .visit_blocks_mut(&join(prefix, "ligand_mlp"), f);
        self.pocket_mlp
            .visit_blocks_mut(&join(prefix, "pocket_mlp"), f);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub logit: f64,
    pub probability: f64,
}

impl Prediction {
    pub fn from_logit(logit: f64) -> Self {
        Prediction {
            logit,
            probability: sigmoid(logit),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Ligand,
    Pocket,
}

/// Forward record for one graph passed through one tower.
#[derive(Debug, Clone)]
pub struct TowerTape {
    pub fingerprint: Vec<f64>,
    pub fp_tape: Option<FpTape>,
    pub mlp_tape: MlpTape,
}

impl TowerTape {
    pub fn embedding(&self) -> &[f64] {
        self.mlp_tape.output()
    }
}

#[derive(Debug, Clone)]
pub struct PairTape {
    pub ligand: TowerTape,
    pub pocket: TowerTape,
}

pub fn tower_forward(
    params: &ModelParams,
    side: Side,
    g: &MolGraph,
) -> Result<TowerTape, ModelError> {
    let (fp, mlp) = match side {
        Side::Ligand => (&params.ligand_fp, &params.ligand_mlp),
        Side::Pocket => (params.pocket_fingerprint(), &params.pocket_mlp),
    };
    let (fingerprint, fp_tape) = fp.forward(g)?;
    let mlp_tape = mlp_forward(mlp, &fingerprint)?;
    Ok(TowerTape {
        fingerprint,
        fp_tape,
        mlp_tape,
    })
}

/// Embedding only.
pub fn embed(params: &ModelParams, side: Side, g: &MolGraph) -> Result<Vec<f64>, ModelError> {
    Ok(tower_forward(params, side, g)?.embedding().to_vec())
}

/// Accumulates gradients of `upstreamᵀ · embedding` for one tower.
pub fn tower_backward(
    params: &ModelParams,
    side: Side,
    tape: &TowerTape,
    upstream: &[f64],
    grads: &mut ModelParams,
) -> Result<(), ModelError> {
    let (fp, mlp) = match side {
        Side::Ligand => (&params.ligand_fp, &params.ligand_mlp),
        Side::Pocket => (params.pocket_fingerprint(), &params.pocket_mlp),
    };
    let mlp_grads = match side {
        Side::Ligand => &mut grads.ligand_mlp,
        Side::Pocket => &mut grads.pocket_mlp,
    };
    let d_fp = mlp_backward(mlp, &tape.mlp_tape, upstream, mlp_grads)?;
    if let (TowerFingerprint::Neural(p), Some(fp_tape)) = (fp, &tape.fp_tape) {
        let fp_grads = match (side, &mut grads.pocket_fp) {
            (Side::Pocket, Some(g)) => g,
            _ => &mut grads.ligand_fp,
        };
        if let TowerFingerprint::Neural(g) = fp_grads {
            neural_fingerprint_backward(p, fp_tape, &d_fp, g)?;
        }
    }
    Ok(())
}

pub fn predict_with_tape(
    l: &MolGraph,
    p: &MolGraph,
    params: &ModelParams,
) -> Result<(Prediction, PairTape), ModelError> {
    params.validate()?;
    let ligand = tower_forward(params, Side::Ligand, l)?;
    let pocket = tower_forward(params, Side::Pocket, p)?;
    let z = dot(ligand.embedding(), pocket.embedding());
    Ok((Prediction::from_logit(z), PairTape { ligand, pocket }))
}

pub fn predict(l: &MolGraph, p: &MolGraph, params: &ModelParams) -> Result<Prediction, ModelError> {
    Ok(predict_with_tape(l, p, params)?.0)
}

/// A (ligand, pocket) pair of borrowed graphs.
pub type GraphPair<'a> = (&'a MolGraph, &'a MolGraph);

#[derive(Debug, Clone)]
pub struct LossOutput {
    /// The maximized objective `L` (always ≤ 0).
    pub objective: f64,
    /// Gradient of `−L`.
    pub grads: ModelParams,
}

/// Assigns dense indices to distinct graphs in first-appearance order.
struct Interner<'a> {
    index: HashMap<*const MolGraph, usize>,
    graphs: Vec<&'a MolGraph>,
}

impl<'a> Interner<'a> {
    fn new() -> Self {
        Interner {
            index: HashMap::new(),
            graphs: Vec::new(),
        }
    }

    fn intern(&mut self, g: &'a MolGraph) -> usize {
        let next = self.graphs.len();
        *self.index.entry(g as *const MolGraph).or_insert_with(|| {
            self.graphs.push(g);
            next
        })
    }
}

fn check_batch(positives: &[GraphPair<'_>], negatives: &[GraphPair<'_>]) -> Result<(), ModelError> {
    if positives.is_empty() {
        return Err(ModelError::EmptyBatch("no positive pairs"));
    }
    if negatives.is_empty() {
        return Err(ModelError::EmptyBatch("no negative pairs"));
    }
    Ok(())
}

fn objective_terms(z: f64, positive: bool) -> f64 {
    if positive {
        -softplus(-z)
    } else {
        -softplus(z)
    }
}

/// Objective value only, from forward passes.
pub fn nce_objective(
    params: &ModelParams,
    positives: &[GraphPair<'_>],
    negatives: &[GraphPair<'_>],
    neg_weight: f64,
) -> Result<f64, ModelError> {
    check_batch(positives, negatives)?;
    params.validate()?;
    let logits = pair_logits(
        params,
        positives
            .iter()
            .chain(negatives)
            .copied()
            .collect::<Vec<_>>()
            .as_slice(),
    )?;
    let (pos, neg) = logits.split_at(positives.len());
    let pos_term: f64 =
        pos.iter().map(|&z| objective_terms(z, true)).sum::<f64>() / pos.len() as f64;
    let neg_term: f64 =
        neg.iter().map(|&z| objective_terms(z, false)).sum::<f64>() / neg.len() as f64;
    Ok(pos_term + neg_weight * neg_term)
}

/// Logits for many pairs, embedding each distinct graph once.
pub fn pair_logits(params: &ModelParams, pairs: &[GraphPair<'_>]) -> Result<Vec<f64>, ModelError> {
    let mut ligands = Interner::new();
    let mut pockets = Interner::new();
    let idx: Vec<(usize, usize)> = pairs
        .iter()
        .map(|&(l, p)| (ligands.intern(l), pockets.intern(p)))
        .collect();
    let lig_emb = par::map(&ligands.graphs, |g| embed(params, Side::Ligand, g))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let poc_emb = par::map(&pockets.graphs, |g| embed(params, Side::Pocket, g))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    Ok(idx
        .iter()
        .map(|&(l, p)| dot(&lig_emb[l], &poc_emb[p]))
        .collect())
}

/// Objective and exact gradients of `−L` for one batch.
///
/// Each distinct graph is run forward and backward exactly once; upstream
/// gradients are summed in pair order and per-graph parameter gradients are
/// reduced in a fixed chunk order, so the result does not depend on the
/// number of worker threads.
pub fn nce_loss(
    params: &ModelParams,
    positives: &[GraphPair<'_>],
    negatives: &[GraphPair<'_>],
    neg_weight: f64,
) -> Result<LossOutput, ModelError> {
    check_batch(positives, negatives)?;
    params.validate()?;

    let mut ligands = Interner::new();
    let mut pockets = Interner::new();
    let mut pairs: Vec<(usize, usize, bool)> =
        Vec::with_capacity(positives.len() + negatives.len());
    for (batch, positive) in [(positives, true), (negatives, false)] {
        for &(l, p) in batch {
            pairs.push((ligands.intern(l), pockets.intern(p), positive));
        }
    }

    let jobs: Vec<(Side, &MolGraph)> = ligands
        .graphs
        .iter()
        .map(|&g| (Side::Ligand, g))
        .chain(pockets.graphs.iter().map(|&g| (Side::Pocket, g)))
        .collect();
    let tapes = par::map(&jobs, |&(side, g)| tower_forward(params, side, g))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let n_lig = ligands.graphs.len();
    let dim = params.embedding_dim();

    let n_pos = positives.len() as f64;
    let n_neg = negatives.len() as f64;
    let mut pos_sum = 0.0;
    let mut neg_sum = 0.0;
    let mut upstream = vec![vec![0.0; dim]; tapes.len()];
    for &(l, p, positive) in &pairs {
        let (w, v) = (tapes[l].embedding(), tapes[n_lig + p].embedding());
        let z = dot(w, v);
        // d(−L)/dz
        let dz = if positive {
            pos_sum += objective_terms(z, true);
            -sigmoid(-z) / n_pos
        } else {
            neg_sum += objective_terms(z, false);
            neg_weight * sigmoid(z) / n_neg
        };
        for d in 0..dim {
            upstream[l][d] += dz * v[d];
            upstream[n_lig + p][d] += dz * w[d];
        }
    }
    let objective = pos_sum / n_pos + neg_weight * neg_sum / n_neg;

    let work: Vec<usize> = (0..tapes.len()).collect();
    let partials = par::map_chunks(
        &work,
        GRAD_CHUNK,
        |chunk| -> Result<ModelParams, ModelError> {
            let mut g = zeros_like(params);
            for &j in chunk {
                tower_backward(params, jobs[j].0, &tapes[j], &upstream[j], &mut g)?;
            }
            Ok(g)
        },
    );
    let mut grads = zeros_like(params);
    for partial in partials {
        grads.add_from(&partial?);
    }
    Ok(LossOutput { objective, grads })
}

/// Header written ahead of the parameter blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsHeader {
    pub format_version: u32,
    pub fingerprint_method: String,
    pub dims: ModelDims,
    pub activation: Activation,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDims {
    pub feature_width: usize,
    pub layer_widths: Vec<usize>,
    pub fingerprint_size: usize,
    pub mlp_hidden: Vec<usize>,
    pub embedding_dim: usize,
    pub shared_fingerprint: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsFile {
    pub header: ParamsHeader,
    pub params: ModelParams,
}

impl ParamsFile {
    pub fn new(params: ModelParams, seed: u64) -> Self {
        let (feature_width, layer_widths, activation) = match &params.ligand_fp {
            TowerFingerprint::Neural(p) => (
                p.input_width(),
                p.layers.iter().map(|l| l.out_width()).collect(),
                p.activation,
            ),
            TowerFingerprint::Ecfp(_) => (0, Vec::new(), Activation::Identity),
        };
        let header = ParamsHeader {
            format_version: FORMAT_VERSION,
            fingerprint_method: params.ligand_fp.method_name().to_string(),
            dims: ModelDims {
                feature_width,
                layer_widths,
                fingerprint_size: params.ligand_fp.output_dim(),
                mlp_hidden: params.ligand_mlp.layers[..params.ligand_mlp.layers.len() - 1]
                    .iter()
                    .map(|l| l.weight.rows())
                    .collect(),
                embedding_dim: params.embedding_dim(),
                shared_fingerprint: params.pocket_fp.is_none(),
            },
            activation,
            seed,
        };
        ParamsFile { header, params }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("parameters serialize");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        std::fs::write(path, self.to_json()).map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let file: ParamsFile =
            serde_json::from_str(&text).map_err(|source| ModelError::Format {
                path: path.display().to_string(),
                source,
            })?;
        file.params.validate()?;
        if !file.params.all_finite() {
            return Err(ModelError::ShapeMismatch(
                "parameter file contains non-finite values".into(),
            ));
        }
        Ok(file)
    }
}

/// Convenience for building a one-layer identity MLP (tests, fixtures).
pub fn identity_mlp(dim: usize) -> MlpParams {
    MlpParams {
        layers: vec![crate::mlp::DenseLayer {
            weight: Matrix::identity(dim),
            bias: vec![0.0; dim],
            activation: Activation::Identity,
        }],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::{AtomRecord, Bond, BondOrder, Element, MolKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn graph(id: &str, elements: &[Element]) -> MolGraph {
        let atoms = elements.iter().map(|&e| AtomRecord::new(e)).collect();
        let bonds = (1..elements.len())
            .map(|i| Bond::new(i - 1, i, BondOrder::Single))
            .collect();
        MolGraph::new(id, MolKind::Compound, atoms, bonds).unwrap()
    }

    fn tiny_model(seed: u64) -> ModelParams {
        ModelParams::init(
            &ModelConfig::tiny(Activation::Tanh),
            &mut ChaCha8Rng::seed_from_u64(seed),
        )
    }

    #[test]
    fn zero_ligand_embedding_gives_half() {
        let mut params = tiny_model(1);
        let last = params.ligand_mlp.layers.last_mut().unwrap();
        last.weight.as_mut_slice().fill(0.0);
        let l = graph("l", &[Element::C, Element::O]);
        let p = graph("p", &[Element::N, Element::C, Element::C]);
        let pred = predict(&l, &p, &params).unwrap();
        assert_eq!(pred.logit, 0.0);
        assert_eq!(pred.probability, 0.5);
    }

    #[test]
    fn equal_embeddings_closed_form() {
        // ECFP towers with identity MLPs over a width-3 bit vector.
        let cfg = EcfpConfig::new(0, 3).unwrap();
        let params = ModelParams {
            ligand_fp: TowerFingerprint::Ecfp(cfg),
            pocket_fp: Some(TowerFingerprint::Ecfp(cfg)),
            ligand_mlp: identity_mlp(3),
            pocket_mlp: identity_mlp(3),
        };
        let l = graph("l", &[Element::C]);
        let fp = ecfp(&l, &cfg).to_f64();
        let norm2 = dot(&fp, &fp);
        let pred = predict(&l, &l, &params).unwrap();
        assert_eq!(pred.logit, norm2);
        // scale the ligand side so that w = v with ‖w‖² = 3 on a single bit
        let mut scaled = params.clone();
        scaled.ligand_mlp.layers[0].weight = Matrix::from_vec(
            3,
            3,
            vec![
                3f64.sqrt(),
                0.0,
                0.0,
                0.0,
                3f64.sqrt(),
                0.0,
                0.0,
                0.0,
                3f64.sqrt(),
            ],
        );
        scaled.pocket_mlp = scaled.ligand_mlp.clone();
        let pred = predict(&l, &l, &scaled).unwrap();
        assert!((pred.logit - 3.0).abs() < 1e-12);
        assert!((pred.probability - 0.952_574_126_822_433_4).abs() < 1e-9);
    }

    #[test]
    fn mirrored_towers_give_identical_scores() {
        let params = tiny_model(2);
        let l = graph("l", &[Element::C, Element::O, Element::N]);
        let p = graph("p", &[Element::S, Element::C]);
        let a = predict(&l, &p, &params).unwrap();
        let b = predict(&p, &l, &params.mirrored()).unwrap();
        assert_eq!(a.logit, b.logit);
    }

    #[test]
    fn zero_logits_give_two_log_half() {
        let mut params = tiny_model(3);
        params
            .ligand_mlp
            .layers
            .last_mut()
            .unwrap()
            .weight
            .as_mut_slice()
            .fill(0.0);
        let l = graph("l", &[Element::C]);
        let p = graph("p", &[Element::O]);
        let out = nce_loss(&params, &[(&l, &p)], &[(&p, &l)], 1.0).unwrap();
        assert!((out.objective - 2.0 * 0.5f64.ln()).abs() < 1e-12);
        assert!((out.objective + 1.386_294_361_119_890_6).abs() < 1e-12);
    }

    #[test]
    fn empty_batches_are_rejected() {
        let params = tiny_model(4);
        let l = graph("l", &[Element::C]);
        assert!(matches!(
            nce_loss(&params, &[], &[(&l, &l)], 1.0),
            Err(ModelError::EmptyBatch(_))
        ));
        assert!(matches!(
            nce_loss(&params, &[(&l, &l)], &[], 1.0),
            Err(ModelError::EmptyBatch(_))
        ));
    }

    #[test]
    fn huge_logits_stay_finite() {
        for z in [700.0, -700.0] {
            assert!(objective_terms(z, true).is_finite());
            assert!(objective_terms(z, false).is_finite());
            assert!(sigmoid(-z).is_finite());
        }
    }

    #[test]
    fn objective_matches_loss_value() {
        let params = tiny_model(5);
        let a = graph("a", &[Element::C, Element::O]);
        let b = graph("b", &[Element::N, Element::N, Element::C]);
        let c = graph("c", &[Element::S]);
        let pos = [(&a, &b), (&c, &b)];
        let neg = [(&a, &c), (&b, &b), (&a, &b)];
        let loss = nce_loss(&params, &pos, &neg, 0.7).unwrap();
        let value = nce_objective(&params, &pos, &neg, 0.7).unwrap();
        assert!((loss.objective - value).abs() < 1e-14);
        assert!(loss.objective < 0.0);
    }

    #[test]
    fn shared_fingerprint_has_fewer_params() {
        let mut cfg = ModelConfig::tiny(Activation::Tanh);
        let separate = ModelParams::init(&cfg, &mut ChaCha8Rng::seed_from_u64(6));
        cfg.shared_fingerprint = true;
        let shared = ModelParams::init(&cfg, &mut ChaCha8Rng::seed_from_u64(6));
        assert!(shared.num_params() < separate.num_params());
        assert!(shared.validate().is_ok());
    }
}
