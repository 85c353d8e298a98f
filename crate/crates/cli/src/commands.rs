use crate::args::*;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use vscreen_core::ecfp::{ecfp, EcfpConfig};
use vscreen_core::experiment::{logreg_baseline, split_targets, ExperimentError};
use vscreen_core::gradcheck::{run_grad_check, GradCheckConfig};
use vscreen_core::ingest::{load_manifest, read_graphs, Dataset, IngestError};
use vscreen_core::logreg::{LogRegConfig, LogRegError};
use vscreen_core::metrics::{evaluate, EvalReport, MetricsError};
use vscreen_core::mlp::MlpConfig;
use vscreen_core::model::{FingerprintConfig, ModelConfig, ModelError, ModelParams, ParamsFile};
use vscreen_core::molgraph::MolKind;
use vscreen_core::neural::NeuralFpConfig;
use vscreen_core::optim::OptimizerConfig;
use vscreen_core::synth::{generate_synthetic, SynthError, SynthSpec};
use vscreen_core::train::{train, write_epoch_csv, TrainConfig, TrainError};

/// Failure classes, each with its own exit status.
#[derive(Debug)]
pub enum CliError {
    /// Requested check did not pass.
    Check(String),
    /// Unreadable or invalid input, infeasible request.
    Input(String),
    /// Training diverged.
    Numeric(String),
    /// Flag combination that cannot run.
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Check(_) => 1,
            CliError::Input(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Usage(_) => 64,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Check(m) | CliError::Input(m) | CliError::Numeric(m) | CliError::Usage(m) => {
                m
            }
        }
    }
}

fn input(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        input(e)
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        input(e)
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        input(e)
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        input(e)
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::BadSplit { .. } => CliError::Usage(e.to_string()),
            ExperimentError::LogReg(LogRegError::Config(_)) => CliError::Usage(e.to_string()),
            other => input(other),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::NonFiniteLoss { .. } => CliError::Numeric(e.to_string()),
            TrainError::Config(_) => CliError::Usage(e.to_string()),
            other => input(other),
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| input(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn join<T: ToString>(values: impl Iterator<Item = T>) -> String {
    values.map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

pub fn fingerprint(args: &FingerprintArgs) -> Result<(), CliError> {
    let params = match (args.method, &args.params) {
        (FpMethod::Neural, None) => {
            return Err(CliError::Usage("--method neural needs --params".into()))
        }
        (FpMethod::Neural, Some(p)) => Some(ParamsFile::load(p)?.params),
        (FpMethod::Ecfp, _) => None,
    };
    let cfg = EcfpConfig::new(args.radius, args.width)
        .map_err(|e| CliError::Usage(e.to_string()))?
        .counted(args.counted);
    let mut graphs = Vec::new();
    for path in &args.input {
        graphs.extend(read_graphs(path)?);
    }
    let lines = vscreen_core::par::map(&graphs, |g| -> Result<String, ModelError> {
        let values = match &params {
            None => {
                let fp = ecfp(g, &cfg);
                if cfg.counted {
                    join(fp.values().iter())
                } else {
                    fp.to_hex()
                }
            }
            Some(p) => {
                let tower = match g.kind() {
                    MolKind::Compound => &p.ligand_fp,
                    MolKind::Pocket => p.pocket_fingerprint(),
                };
                join(tower.values(g)?.iter())
            }
        };
        Ok(format!("{}\t{values}\n", g.id()))
    });
    let mut out: Box<dyn Write> = match &args.output {
        Some(path) => Box::new(create(path)?),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    };
    for line in lines {
        out.write_all(line?.as_bytes()).map_err(input)?;
    }
    out.flush().map_err(input)
}

fn model_config(m: &ModelArgs) -> Result<ModelConfig, CliError> {
    let fingerprint = match m.fingerprint {
        FpMethod::Neural => {
            if m.fp_size == 0 {
                return Err(CliError::Usage("--fp-size must be positive".into()));
            }
            FingerprintConfig::Neural(NeuralFpConfig {
                layer_widths: m.layers.0.clone(),
                fingerprint_size: m.fp_size,
                activation: m.activation,
                per_layer_pooling: m.per_layer_pooling,
                ..NeuralFpConfig::default()
            })
        }
        FpMethod::Ecfp => FingerprintConfig::Ecfp(
            EcfpConfig::new(m.ecfp_radius, m.ecfp_width)
                .map_err(|e| CliError::Usage(e.to_string()))?,
        ),
    };
    if m.embedding_dim == 0 {
        return Err(CliError::Usage("--embedding-dim must be positive".into()));
    }
    Ok(ModelConfig {
        fingerprint,
        mlp: MlpConfig {
            hidden: m.mlp_hidden.0.clone(),
            hidden_activation: m.activation,
            output_dim: m.embedding_dim,
        },
        shared_fingerprint: m.shared_fingerprint,
    })
}

/// Keeps the pockets selected by a last-N split.
fn split_dataset(dataset: &Dataset, holdout: usize, subset: Subset) -> Result<Dataset, CliError> {
    if subset == Subset::All {
        return Ok(dataset.clone());
    }
    if holdout == 0 {
        return Err(CliError::Usage(
            "--subset train|heldout needs --holdout-targets".into(),
        ));
    }
    let (train_idx, _) = split_targets(dataset.pockets.len(), holdout)?;
    let cut = train_idx.len();
    Ok(match subset {
        Subset::Train => dataset.filter_pockets(|p| p < cut),
        _ => dataset.filter_pockets(|p| p >= cut),
    })
}

pub fn train_cmd(args: &TrainArgs, seed: u64) -> Result<(), CliError> {
    let (_, dataset) = load_manifest(&args.manifest)?;
    let dataset = if args.holdout_targets > 0 {
        split_dataset(&dataset, args.holdout_targets, Subset::Train)?
    } else {
        dataset
    };
    let init = match &args.init_params {
        Some(path) => ParamsFile::load(path)?.params,
        None => ModelParams::init(
            &model_config(&args.model)?,
            &mut ChaCha8Rng::seed_from_u64(seed),
        ),
    };
    let cfg = TrainConfig {
        epochs: args.epochs,
        batch_size: args.batch_size,
        learning_rate: args.learning_rate,
        optimizer: match args.optimizer {
            OptimizerKind::Sgd => OptimizerConfig::Sgd,
            OptimizerKind::Adam => OptimizerConfig::Adam {
                beta1: args.beta1,
                beta2: args.beta2,
                eps: args.eps,
            },
        },
        seed,
        negative_ratio: args.negative_ratio,
        neg_weight: args.neg_weight,
        patience: args.patience,
        heldout_fraction: args.heldout_fraction,
        exclude_known_positives: args.exclude_known_positives,
    };
    let result = train(&dataset, &init, &cfg)?;
    for e in &result.epochs {
        let heldout = e
            .heldout_objective
            .map(|h| format!(" heldout {h:.6}"))
            .unwrap_or_default();
        eprintln!(
            "epoch {:>3} objective {:.6}{heldout} ({} ms)",
            e.epoch, e.objective, e.wall_ms
        );
    }
    if result.stopped_early {
        eprintln!("stopped early after {} epochs", result.epochs.len());
    }
    if let Some(path) = &args.log {
        let mut out = create(path)?;
        write_epoch_csv(&mut out, &result.epochs).map_err(input)?;
        out.flush().map_err(input)?;
    }
    ParamsFile::new(result.params, seed).save(&args.out)?;
    Ok(())
}

fn emit_report(
    report: &EvalReport,
    json: Option<&Path>,
    table: Option<&Path>,
) -> Result<(), CliError> {
    for s in &report.skipped {
        eprintln!(
            "warning: skipped target '{}' ({} positives, {} negatives)",
            s.target, s.n_pos, s.n_neg
        );
    }
    let rendered = report.render();
    print!("{rendered}");
    if let Some(path) = table {
        write_file(path, &rendered)?;
    }
    if let Some(path) = json {
        let mut text = serde_json::to_string_pretty(report).map_err(input)?;
        text.push('\n');
        write_file(path, &text)?;
    }
    Ok(())
}

pub fn eval(args: &EvalArgs) -> Result<(), CliError> {
    let params = ParamsFile::load(&args.params)?.params;
    let (_, dataset) = load_manifest(&args.manifest)?;
    let dataset = split_dataset(&dataset, args.holdout_targets, args.subset)?;
    let report = evaluate(&params, &dataset, args.strict)?;
    emit_report(&report, args.json.as_deref(), args.table.as_deref())
}

pub fn grad_check(args: &GradCheckArgs, seed: u64) -> Result<(), CliError> {
    let activation = if args.activation.is_smooth() {
        args.activation
    } else {
        eprintln!(
            "warning: {} has a kink at 0; the gradient check uses tanh instead",
            args.activation
        );
        vscreen_core::activation::Activation::Tanh
    };
    if args.instances == 0 || args.min_atoms == 0 || args.min_atoms > args.max_atoms {
        return Err(CliError::Usage(
            "need instances > 0 and 0 < min-atoms <= max-atoms".into(),
        ));
    }
    if !(args.step > 0.0 && args.tolerance > 0.0) {
        return Err(CliError::Usage(
            "--step and --tolerance must be positive".into(),
        ));
    }
    let cfg = GradCheckConfig {
        instances: args.instances,
        min_atoms: args.min_atoms,
        max_atoms: args.max_atoms,
        step: args.step,
        tolerance: args.tolerance,
        activation,
        seed,
        sign_flip: args.inject_sign_flip.clone(),
        ..GradCheckConfig::default()
    };
    let report = run_grad_check(&cfg).map_err(input)?;
    for b in &report.blocks {
        println!(
            "{:<40} {:>6} params  max rel err {:.3e}  max abs err {:.3e}",
            b.block, b.params, b.max_rel_err, b.max_abs_err
        );
    }
    println!(
        "max relative error {:.3e} over {} instances (tolerance {:.0e}): {}",
        report.max_rel_err,
        report.instances,
        cfg.tolerance,
        if report.passed { "PASS" } else { "FAIL" }
    );
    if let Some(path) = &args.json {
        let mut text = serde_json::to_string_pretty(&report).map_err(input)?;
        text.push('\n');
        write_file(path, &text)?;
    }
    if report.passed {
        Ok(())
    } else {
        Err(CliError::Check(format!(
            "gradient check failed: max relative error {:.3e} exceeds {:.0e}",
            report.max_rel_err, cfg.tolerance
        )))
    }
}

pub fn gen_synthetic(args: &GenSyntheticArgs, seed: u64) -> Result<(), CliError> {
    let spec = SynthSpec {
        n_targets: args.targets,
        n_compounds: args.compounds,
        actives_per_target: args.actives_per_target,
        decoys_per_target: args.decoys_per_target,
        motif_length: args.motif_length,
        decoy_sharing: args.decoy_sharing,
        heldout_targets: args.heldout_targets,
        motif_types: args.motif_types,
        compound_atoms: (args.min_compound_atoms, args.max_compound_atoms),
        pocket_atoms: (args.min_pocket_atoms, args.max_pocket_atoms),
        seed,
    };
    let ds = generate_synthetic(&spec)?;
    ds.write_to(&args.out_dir)?;
    eprintln!(
        "wrote {} compounds, {} pockets, {} positives to {}",
        ds.compounds.len(),
        ds.pockets.len(),
        ds.positives.len(),
        args.out_dir.display()
    );
    Ok(())
}

pub fn baseline(args: &BaselineArgs, seed: u64) -> Result<(), CliError> {
    let (_, dataset) = load_manifest(&args.manifest)?;
    let (train_idx, test_idx) = split_targets(dataset.pockets.len(), args.holdout_targets)?;
    let fp =
        EcfpConfig::new(args.radius, args.width).map_err(|e| CliError::Usage(e.to_string()))?;
    let cfg = LogRegConfig {
        l2: args.l2,
        learning_rate: args.learning_rate,
        epochs: args.epochs,
        batch_size: args.batch_size,
        seed,
    };
    let report = logreg_baseline(&dataset, &train_idx, &test_idx, &fp, &cfg)?;
    emit_report(&report, args.json.as_deref(), None)
}
