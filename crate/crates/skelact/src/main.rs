use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use skelact::dataset::{load_clips, load_dataset, save_dataset};
use skelact::experiment::{format_table, run_ablation};
use skelact::model::{load_model, save_model, SavedModel};
use skelact::report::{stream_line, video_line, write_history, write_metrics};
use skelact::synth::{generate_synthetic, SynthConfig};
use skelact_core::inference::{
    aggregate_video_with, predict_clip, Aggregation, ClipPredictionConfig, StaticSet, StreamClassifier,
};
use skelact_core::optim::OptimizerKind;
use skelact_core::trainer::{evaluate, split_dataset, train, TrainConfig};
use skelact_core::{Dataset, IntervalConfig, LabelMap, Normalization, StreamWindow};

/// Skeleton-sequence action recognition: synthetic data, training, evaluation,
/// and streaming inference.
///
/// Every flag can also be set through the environment variable
/// SKELACT_<FLAG> (upper case, dashes as underscores); a flag on the command
/// line wins over the environment, which wins over the built-in default.
#[derive(Debug, Parser)]
#[command(name = "skelact", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a seeded synthetic dataset file.
    Synth(SynthArgs),
    /// Train a classifier and write the model file and per-epoch history.
    Train(TrainArgs),
    /// Score a model on a dataset and write the confusion matrix as CSV and JSON.
    Eval(EvalArgs),
    /// Print the aggregated action label of a clip.
    Infer(InferArgs),
    /// Replay a clip frame by frame through the streaming window, one JSON record per prediction.
    Stream(StreamArgs),
    /// Train the dense-baseline, sampling-only, and sampling+norm configurations on one split and print their test accuracy.
    Ablate(AblateArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Output dataset file.
    #[arg(long, env = "SKELACT_OUT")]
    out: PathBuf,
    /// Comma-separated classes (wave, fall, walk, stand, kick, sit).
    #[arg(long, env = "SKELACT_CLASSES", value_delimiter = ',', default_value = "wave,fall,walk,stand")]
    classes: Vec<String>,
    #[arg(long, env = "SKELACT_CLIPS_PER_CLASS", default_value_t = 50)]
    clips_per_class: usize,
    /// Frames per clip.
    #[arg(long, env = "SKELACT_FRAMES", default_value_t = 40)]
    frames: usize,
    /// Standard deviation of the per-coordinate jitter, in pixels.
    #[arg(long, env = "SKELACT_NOISE", default_value_t = 2.0)]
    noise: f64,
    #[arg(long, env = "SKELACT_SEED", default_value_t = 7)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OptimizerArg {
    Adam,
    Sgd,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AggregationArg {
    /// Longest consecutive run of a dynamic label.
    LongestRun,
    /// Most frequent dynamic label.
    MostFrequent,
    /// Highest mean probability among dynamic labels that were predicted.
    MeanProbability,
}

impl From<AggregationArg> for Aggregation {
    fn from(a: AggregationArg) -> Self {
        match a {
            AggregationArg::LongestRun => Aggregation::LongestRun,
            AggregationArg::MostFrequent => Aggregation::MostFrequent,
            AggregationArg::MeanProbability => Aggregation::MeanProbability,
        }
    }
}

#[derive(Debug, Args)]
struct HyperArgs {
    #[arg(long, env = "SKELACT_EPOCHS", default_value_t = 60)]
    epochs: usize,
    /// Learning rate.
    #[arg(long, env = "SKELACT_LR", default_value_t = 1e-3)]
    lr: f64,
    /// Mini-batch size.
    #[arg(long, env = "SKELACT_BATCH", default_value_t = 16)]
    batch: usize,
    /// Seed for the split, initialization, shuffling, and dropout.
    #[arg(long, env = "SKELACT_SEED", default_value_t = 7)]
    seed: u64,
    /// GRU hidden size.
    #[arg(long, env = "SKELACT_HIDDEN", default_value_t = 64)]
    hidden: usize,
    /// Dropout rate at every dropout site.
    #[arg(long, env = "SKELACT_DROPOUT", default_value_t = 0.2)]
    dropout: f64,
    #[arg(long, env = "SKELACT_OPTIMIZER", value_enum, default_value_t = OptimizerArg::Adam)]
    optimizer: OptimizerArg,
    /// Train, validation, and test fractions of each class's clips.
    #[arg(long, env = "SKELACT_FRACTIONS", value_delimiter = ',', default_values_t = [0.7, 0.15, 0.15])]
    fractions: Vec<f64>,
    /// Weight the loss by inverse class frequency.
    #[arg(long, env = "SKELACT_CLASS_WEIGHTED")]
    class_weighted: bool,
    /// Shortest sampled sequence kept, in frames.
    #[arg(long, env = "SKELACT_MIN_LEN", default_value_t = 2)]
    min_len: usize,
}

impl HyperArgs {
    fn config(&self, interval: usize, normalization: Normalization) -> anyhow::Result<TrainConfig> {
        let cfg = TrainConfig {
            epochs: self.epochs,
            learning_rate: self.lr,
            optimizer: match self.optimizer {
                OptimizerArg::Adam => OptimizerKind::ADAM,
                OptimizerArg::Sgd => OptimizerKind::Sgd,
            },
            batch_size: self.batch,
            interval: IntervalConfig::new(interval, self.min_len)?,
            normalization,
            hidden_dim: self.hidden,
            dropout_rates: [self.dropout; 4],
            seed: self.seed,
            fractions: three_fractions(&self.fractions)?,
            class_weighted: self.class_weighted,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Dataset file.
    #[arg(long, env = "SKELACT_DATA")]
    data: PathBuf,
    /// Model file to write.
    #[arg(long, env = "SKELACT_OUT_MODEL")]
    out_model: PathBuf,
    /// History file (JSON lines) [default: the model path with extension .history.jsonl]
    #[arg(long, env = "SKELACT_HISTORY")]
    history: Option<PathBuf>,
    /// Sampling interval k [default: 4, or 1 with --dense-baseline]
    #[arg(long, env = "SKELACT_INTERVAL")]
    interval: Option<usize>,
    /// Divide by image size only, without moving the origin to the keypoint centroid.
    #[arg(long, env = "SKELACT_NO_NORM")]
    no_norm: bool,
    /// Train on whole clips (interval 1).
    #[arg(long, env = "SKELACT_DENSE_BASELINE")]
    dense_baseline: bool,
    #[command(flatten)]
    hyper: HyperArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SplitArg {
    All,
    Train,
    Val,
    Test,
}

#[derive(Debug, Args)]
struct AggregateArgs {
    /// Video-level aggregation of window predictions.
    #[arg(long, env = "SKELACT_AGGREGATION", value_enum, default_value_t = AggregationArg::LongestRun)]
    aggregation: AggregationArg,
    /// Comma-separated static classes, ignored while any dynamic class is predicted [default: stand,sit,others, restricted to the model's classes]
    #[arg(long = "static", env = "SKELACT_STATIC", value_delimiter = ',')]
    static_set: Option<Vec<String>>,
}

impl AggregateArgs {
    fn static_set(&self, label_map: &LabelMap) -> anyhow::Result<StaticSet> {
        Ok(match &self.static_set {
            None => StaticSet::default_for(label_map),
            Some(names) => {
                let names: Vec<&str> = names.iter().map(|s| s.trim()).filter(|s| !s.is_empty()).collect();
                StaticSet::new(&names, label_map)?
            }
        })
    }
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long, env = "SKELACT_DATA")]
    data: PathBuf,
    #[arg(long, env = "SKELACT_MODEL")]
    model: PathBuf,
    /// Sampling interval k [default: the model's]
    #[arg(long, env = "SKELACT_INTERVAL")]
    interval: Option<usize>,
    /// Report path; the extension is replaced by .csv and .json.
    #[arg(long, env = "SKELACT_OUT_REPORT")]
    out_report: PathBuf,
    /// Which clips to score, using the same split as `train` with equal --seed and --fractions.
    #[arg(long, env = "SKELACT_SPLIT", value_enum, default_value_t = SplitArg::All)]
    split: SplitArg,
    #[arg(long, env = "SKELACT_SEED", default_value_t = 7)]
    seed: u64,
    #[arg(long, env = "SKELACT_FRACTIONS", value_delimiter = ',', default_values_t = [0.7, 0.15, 0.15])]
    fractions: Vec<f64>,
    #[command(flatten)]
    aggregate: AggregateArgs,
}

#[derive(Debug, Args)]
struct InferArgs {
    #[arg(long, env = "SKELACT_MODEL")]
    model: PathBuf,
    /// Clip file, or a dataset file to label every clip in it.
    #[arg(long, env = "SKELACT_CLIP")]
    clip: PathBuf,
    /// Sampling interval k [default: the model's]
    #[arg(long, env = "SKELACT_INTERVAL")]
    interval: Option<usize>,
    #[command(flatten)]
    aggregate: AggregateArgs,
}

#[derive(Debug, Args)]
struct StreamArgs {
    #[arg(long, env = "SKELACT_MODEL")]
    model: PathBuf,
    /// Clip file or dataset file.
    #[arg(long, env = "SKELACT_DATA")]
    data: PathBuf,
    /// Clip to replay from a dataset file [default: the first clip]
    #[arg(long, env = "SKELACT_CLIP_ID")]
    clip_id: Option<String>,
    /// Window capacity in frames.
    #[arg(long, env = "SKELACT_CAPACITY", default_value_t = 50)]
    capacity: usize,
    /// Stride used to sample the window.
    #[arg(long, env = "SKELACT_INTERVAL", default_value_t = 10)]
    interval: usize,
    /// Frames between predictions once the window is full.
    #[arg(long, env = "SKELACT_EMIT_STRIDE", default_value_t = 1)]
    emit_stride: usize,
    #[command(flatten)]
    aggregate: AggregateArgs,
}

#[derive(Debug, Args)]
struct AblateArgs {
    #[arg(long, env = "SKELACT_DATA")]
    data: PathBuf,
    /// Sampling interval of the two sampled configurations.
    #[arg(long, env = "SKELACT_INTERVAL", default_value_t = 4)]
    interval: usize,
    #[command(flatten)]
    hyper: HyperArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Train(a) => train_cmd(a),
        Command::Eval(a) => eval(a),
        Command::Infer(a) => infer(a),
        Command::Stream(a) => stream(a),
        Command::Ablate(a) => ablate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn synth(a: SynthArgs) -> anyhow::Result<()> {
    let cfg = SynthConfig {
        classes: a.classes.iter().map(|s| s.trim().to_string()).collect(),
        clips_per_class: a.clips_per_class,
        frames_per_clip: a.frames,
        noise_sigma: a.noise,
        seed: a.seed,
    };
    let dataset = generate_synthetic(&cfg)?;
    save_dataset(&dataset, &a.out)?;
    println!("{} clips written to {}", dataset.clips.len(), a.out.display());
    Ok(())
}

fn train_cmd(a: TrainArgs) -> anyhow::Result<()> {
    let interval = match (a.dense_baseline, a.interval) {
        (true, Some(k)) if k != 1 => Cli::command()
            .error(
                ErrorKind::ArgumentConflict,
                format!("--dense-baseline trains with interval 1 and cannot be combined with --interval {k}"),
            )
            .exit(),
        (true, _) => 1,
        (false, k) => k.unwrap_or(4),
    };
    let normalization = if a.no_norm {
        Normalization::ScaleOnly
    } else {
        Normalization::Full
    };
    let cfg = a.hyper.config(interval, normalization)?;
    let dataset = load_dataset(&a.data)?;
    let outcome = train(&dataset, &cfg)?;
    for r in &outcome.history.epochs {
        let val = r.val_accuracy.map_or("-".to_string(), |v| format!("{v:.4}"));
        eprintln!(
            "epoch {:>3}  loss {:.4}  train acc {:.4}  val acc {val}",
            r.epoch, r.train_loss, r.train_accuracy
        );
    }
    let model = SavedModel {
        net: outcome.net,
        label_map: dataset.label_map.clone(),
        normalization,
        interval: cfg.interval,
    };
    save_model(&model, &a.out_model)?;
    let history_path = a
        .history
        .unwrap_or_else(|| a.out_model.with_extension("history.jsonl"));
    write_history(&outcome.history, &history_path)?;

    let val = outcome
        .history
        .best_epoch
        .and_then(|e| outcome.history.epochs[e].val_accuracy);
    match (outcome.history.best_epoch, val) {
        (Some(e), Some(v)) => println!("best epoch {e}, validation accuracy {v:.4}"),
        (Some(e), None) => println!("kept epoch {e} (no validation clips)"),
        (None, _) => println!("no epochs run; initial parameters saved"),
    }
    println!("model: {}", a.out_model.display());
    println!("history: {}", history_path.display());
    Ok(())
}

fn three_fractions(values: &[f64]) -> anyhow::Result<[f64; 3]> {
    match values {
        &[train, val, test] => Ok([train, val, test]),
        _ => bail!("--fractions takes three comma-separated values (train,val,test), got {}", values.len()),
    }
}

fn prediction_config(
    model: &SavedModel,
    interval: Option<usize>,
    aggregate: &AggregateArgs,
) -> anyhow::Result<ClipPredictionConfig> {
    let interval = match interval {
        Some(k) => IntervalConfig::new(k, model.interval.min_len)?,
        None => model.interval,
    };
    Ok(ClipPredictionConfig {
        interval,
        normalization: model.normalization,
        static_set: aggregate.static_set(&model.label_map)?,
        aggregation: aggregate.aggregation.into(),
    })
}

fn eval(a: EvalArgs) -> anyhow::Result<()> {
    let model = load_model(&a.model)?;
    let dataset = load_dataset(&a.data)?;
    if dataset.label_map != model.label_map {
        bail!(
            "dataset classes {:?} differ from model classes {:?}",
            dataset.label_map.names(),
            model.label_map.names()
        );
    }
    let subset: Dataset = match a.split {
        SplitArg::All => dataset,
        part => {
            let fractions = three_fractions(&a.fractions)?;
            let split = split_dataset(&dataset, fractions, a.seed)?;
            let idx = match part {
                SplitArg::Train => &split.train,
                SplitArg::Val => &split.val,
                _ => &split.test,
            };
            dataset.subset(idx)
        }
    };
    let cfg = prediction_config(&model, a.interval, &a.aggregate)?;
    let report = evaluate(&model.net, &subset, &cfg)?;
    let [csv, json] = write_metrics(&report, &a.out_report)?;
    match report.accuracy {
        Some(acc) => println!("accuracy {acc:.4} on {} clips", report.confusion.total()),
        None => println!("no labeled clips to score"),
    }
    println!("report: {} {}", csv.display(), json.display());
    Ok(())
}

fn infer(a: InferArgs) -> anyhow::Result<()> {
    let model = load_model(&a.model)?;
    let clips = load_clips(&a.clip)?;
    let cfg = prediction_config(&model, a.interval, &a.aggregate)?;
    let single = clips.len() == 1;
    for clip in clips {
        let (label, _) = predict_clip(&model.net, &model.label_map, &clip.frames, &cfg)
            .with_context(|| format!("clip `{}`", clip.id))?;
        if single {
            println!("{}", label.name);
        } else {
            println!("{} {}", clip.id, label.name);
        }
    }
    Ok(())
}

fn stream(a: StreamArgs) -> anyhow::Result<()> {
    let model = load_model(&a.model)?;
    let clips = load_clips(&a.data)?;
    let clip = match &a.clip_id {
        None => clips.into_iter().next(),
        Some(id) => clips.into_iter().find(|c| &c.id == id),
    }
    .with_context(|| match &a.clip_id {
        Some(id) => format!("no clip `{id}` in {}", a.data.display()),
        None => format!("no clips in {}", a.data.display()),
    })?;
    let static_set = a.aggregate.static_set(&model.label_map)?;
    let window = StreamWindow::new(a.capacity, a.interval)?;
    let mut classifier = StreamClassifier::new(&model.net, &model.label_map, window, model.normalization, a.emit_stride)?;

    let stdout = io::stdout();
    let mut out = stdout.lock();
    let mut predictions = Vec::new();
    for frame in &clip.frames {
        if let Some(p) = classifier.step(frame)? {
            writeln!(out, "{}", stream_line(&p))?;
            predictions.push(p);
        }
    }
    let video = aggregate_video_with(&predictions, &static_set, a.aggregate.aggregation.into());
    writeln!(out, "{}", video_line(video.as_ref(), predictions.len()))?;
    Ok(())
}

fn ablate(a: AblateArgs) -> anyhow::Result<()> {
    let base = a.hyper.config(a.interval, Normalization::Full)?;
    let dataset = load_dataset(&a.data)?;
    let rows = run_ablation(&dataset, &base)?;
    print!("{}", format_table(&rows));
    Ok(())
}
