use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::path::PathBuf;
use vscreen_core::activation::Activation;
use vscreen_core::synth::DecoySharing;

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "vscreen",
    version,
    about = "Structure-based virtual screening with learnable graph fingerprints"
)]
#[serde(rename_all = "kebab-case")]
pub struct Cli {
    /// Seed for every random choice of the run.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (0 = all cores). Results do not depend on this.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// JSON object of flag values; flags given on the command line win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    #[serde(flatten)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Fingerprint graphs, one `id<TAB>values` line each.
    Fingerprint(FingerprintArgs),
    /// Train a dual-tower model on a dataset manifest.
    Train(TrainArgs),
    /// Per-target ROC AUC report for a trained model.
    Eval(EvalArgs),
    /// Compare analytic gradients with central finite differences.
    GradCheck(GradCheckArgs),
    /// Write a synthetic benchmark with a planted binding rule.
    GenSynthetic(GenSyntheticArgs),
    /// Compound-only ECFP + logistic regression on held-out targets.
    Baseline(BaselineArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FpMethod {
    Ecfp,
    Neural,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Subset {
    All,
    Train,
    Heldout,
}

/// Comma-separated layer widths; `none` or an empty string for no layers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(into = "String")]
pub struct Widths(pub Vec<usize>);

impl From<Widths> for String {
    fn from(w: Widths) -> String {
        if w.0.is_empty() {
            "none".into()
        } else {
            w.0.iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(",")
        }
    }
}

pub fn parse_widths(s: &str) -> Result<Widths, String> {
    let s = s.trim();
    if s.is_empty() || s == "none" {
        return Ok(Widths(Vec::new()));
    }
    s.split(',')
        .map(|t| match t.trim().parse::<usize>() {
            Ok(0) | Err(_) => Err(format!("'{t}' is not a positive width")),
            Ok(v) => Ok(v),
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Widths)
}

#[derive(Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct FingerprintArgs {
    /// Graph files (.jsonl, or .sdf/.mol for V2000 records).
    #[arg(long = "input", required = true, value_delimiter = ',')]
    pub input: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = FpMethod::Ecfp)]
    pub method: FpMethod,
    /// Trained parameter file; required for the neural method.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub radius: u32,
    #[arg(long, default_value_t = 4096)]
    pub width: usize,
    /// Counts per bit instead of presence.
    #[arg(long)]
    pub counted: bool,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value_t = FpMethod::Neural)]
    pub fingerprint: FpMethod,
    /// Hidden widths of the graph convolution layers.
    #[arg(long, default_value = "64,64", value_parser = parse_widths)]
    pub layers: Widths,
    #[arg(long, default_value_t = 128)]
    pub fp_size: usize,
    #[arg(long, default_value_t = Activation::Relu)]
    pub activation: Activation,
    /// One readout per convolution layer, summed.
    #[arg(long)]
    pub per_layer_pooling: bool,
    /// Hidden widths of each tower's MLP.
    #[arg(long, default_value = "128", value_parser = parse_widths)]
    pub mlp_hidden: Widths,
    #[arg(long, default_value_t = 32)]
    pub embedding_dim: usize,
    /// One fingerprint parameter set for both towers.
    #[arg(long)]
    pub shared_fingerprint: bool,
    #[arg(long, default_value_t = 2)]
    pub ecfp_radius: u32,
    #[arg(long, default_value_t = 4096)]
    pub ecfp_width: usize,
}

#[derive(Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Where to write the trained parameters.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-epoch CSV log.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Start from these parameters instead of a fresh seeded init.
    #[arg(long)]
    pub init_params: Option<PathBuf>,
    /// Exclude the last N pockets (file order) from training.
    #[arg(long, default_value_t = 0)]
    pub holdout_targets: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, visible_alias = "lr", default_value_t = 1e-3)]
    pub learning_rate: f64,
    #[arg(long, value_enum, default_value_t = OptimizerKind::Adam)]
    pub optimizer: OptimizerKind,
    #[arg(long, default_value_t = 0.9)]
    pub beta1: f64,
    #[arg(long, default_value_t = 0.999)]
    pub beta2: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub eps: f64,
    #[arg(long, default_value_t = 1)]
    pub negative_ratio: usize,
    /// Weight of the negative term.
    #[arg(long, default_value_t = 1.0)]
    pub neg_weight: f64,
    #[arg(long, default_value_t = 5)]
    pub patience: usize,
    #[arg(long, default_value_t = 0.1)]
    pub heldout_fraction: f64,
    #[arg(long)]
    pub exclude_known_positives: bool,
}

#[derive(Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct EvalArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub params: PathBuf,
    /// Write the report as JSON here.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Write the rendered table here as well as to stdout.
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub holdout_targets: usize,
    #[arg(long, value_enum, default_value_t = Subset::All)]
    pub subset: Subset,
    /// Fail on targets lacking a positive or a negative instead of skipping them.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct GradCheckArgs {
    #[arg(long, default_value_t = 20)]
    pub instances: usize,
    #[arg(long, default_value_t = 3)]
    pub min_atoms: usize,
    #[arg(long, default_value_t = 15)]
    pub max_atoms: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub step: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
    #[arg(long, default_value_t = Activation::Tanh)]
    pub activation: Activation,
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Negate analytic gradients of matching blocks (mutation testing).
    #[arg(long, hide = true)]
    pub inject_sign_flip: Option<String>,
}

#[derive(Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct GenSyntheticArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 12)]
    pub targets: usize,
    #[arg(long, default_value_t = 2000)]
    pub compounds: usize,
    #[arg(long, default_value_t = 50)]
    pub actives_per_target: usize,
    #[arg(long)]
    pub decoys_per_target: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub motif_length: usize,
    #[arg(long)]
    pub motif_types: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub heldout_targets: usize,
    #[arg(long, default_value_t = DecoySharing::PerTarget)]
    pub decoy_sharing: DecoySharing,
    #[arg(long, default_value_t = 12)]
    pub min_compound_atoms: usize,
    #[arg(long, default_value_t = 24)]
    pub max_compound_atoms: usize,
    #[arg(long, default_value_t = 24)]
    pub min_pocket_atoms: usize,
    #[arg(long, default_value_t = 36)]
    pub max_pocket_atoms: usize,
}

#[derive(Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct BaselineArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Train on all but the last N pockets, report on those N.
    #[arg(long)]
    pub holdout_targets: usize,
    #[arg(long, default_value_t = 2)]
    pub radius: u32,
    #[arg(long, default_value_t = 4096)]
    pub width: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub l2: f64,
    #[arg(long, default_value_t = 0.5)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    #[arg(long)]
    pub json: Option<PathBuf>,
}
