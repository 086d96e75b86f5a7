//! `icgan` command line: one subcommand per pipeline stage, each writing a
//! config echo and a manifest next to its outputs.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::ablation::{ablation_grid, GridOptions, ScoreReduction, SCORE_SAMPLES};
use crate::checkpoint::CheckpointBundle;
use crate::colormnist::{
    build_dataset_with, export_png_dir, load_dataset, save_dataset, DatasetFile, Hue, MnistSource, SplitTargets,
    MNIST_DIR_ENV,
};
use crate::error::{Error, Result};
use crate::losses::LossWeights;
use crate::metrics::{
    discrete_accuracy, generated_color_ring, hue_mse_best_alignment, hue_mse_report, linearity_report, ImageGenerator,
    MetricKind, MetricReport, TrainedGenerator, RING_STEPS,
};
use crate::models::{sample_noise, GeneratorConfig, LatentCode, TrunkConfig, Variant};
use crate::optim::AdamConfig;
use crate::plot::{image_grid, line_chart, Series, BLUE, ORANGE};
use crate::seed;
use crate::trainer::{
    classifier_bundle, classifier_from_bundle, generator_from_bundle, train_classifier, train_run, ClassifierConfig,
    FidProbe, RunLog, RunOptions, TrainConfig,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "icgan", version, about = "ICGAN on ColorMNIST: data, training, evaluation and ablation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build the ColorMNIST train and test files.
    MakeDataset(MakeDatasetArgs),
    /// Adversarial training of ICGAN or the no-IC variant.
    Train(TrainArgs),
    /// Train the 12-way evaluation classifier.
    TrainClassifier(ClassifierArgs),
    /// Feature-space FID of generated against real digits.
    EvalFid(EvalFidArgs),
    /// Accuracy of the classifier on digits generated from known codes.
    EvalDiscrete(EvalDiscreteArgs),
    /// Color-ring Hue MSE and hue linearity.
    EvalContinuous(EvalContinuousArgs),
    /// Gradient-score channel ablation grid.
    Ablate(AblateArgs),
    /// Figures: FID curve, interpolation grid, hue-linearity curve.
    Plot(PlotArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct MakeDatasetArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory (train.cmnist, test.cmnist).
    #[arg(long)]
    pub out: PathBuf,
    /// Directory with the MNIST IDX files; procedural glyphs when absent.
    #[arg(long, env = MNIST_DIR_ENV)]
    pub mnist_dir: Option<PathBuf>,
    /// Build 1/N of the published split sizes.
    #[arg(long, default_value_t = 1)]
    pub scale: usize,
    /// Also export this many records per split as PNG + labels.csv.
    #[arg(long)]
    pub png_limit: Option<usize>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Dataset directory from make-dataset.
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Classifier checkpoint enabling periodic FID logging.
    #[arg(long)]
    pub classifier: Option<PathBuf>,
    /// Continue from this GAN checkpoint.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Take every training setting from a config echo (other settings ignored).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub settings: TrainSettings,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum VariantArg {
    Icgan,
    NoIc,
}

#[derive(Args, Debug)]
pub struct TrainSettings {
    #[arg(long, value_enum, default_value = "icgan")]
    pub variant: VariantArg,
    /// Small widths for smoke runs.
    #[arg(long)]
    pub tiny: bool,
    #[arg(long, default_value_t = TrainConfig::default().batch_size)]
    pub batch_size: usize,
    #[arg(long, default_value_t = TrainConfig::default().g_lr0)]
    pub g_lr0: f64,
    #[arg(long, default_value_t = TrainConfig::default().d_lr0)]
    pub d_lr0: f64,
    #[arg(long, default_value_t = TrainConfig::default().lr_decay)]
    pub lr_decay: f64,
    #[arg(long, default_value_t = TrainConfig::default().decay_every)]
    pub decay_every: u64,
    #[arg(long, default_value_t = TrainConfig::default().epochs)]
    pub epochs: u64,
    #[arg(long, default_value_t = TrainConfig::default().n_critic)]
    pub n_critic: usize,
    #[arg(long, default_value_t = AdamConfig::default().beta1)]
    pub adam_beta1: f64,
    #[arg(long, default_value_t = AdamConfig::default().beta2)]
    pub adam_beta2: f64,
    #[arg(long, default_value_t = AdamConfig::default().eps)]
    pub adam_eps: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Generator steps between FID logs (0 disables).
    #[arg(long, default_value_t = TrainConfig::default().eval_every)]
    pub eval_every: u64,
    #[arg(long, default_value_t = TrainConfig::default().fid_samples)]
    pub fid_samples: usize,
    #[arg(long, default_value_t = LossWeights::default().lambda_gp)]
    pub lambda_gp: f64,
    #[arg(long, default_value_t = LossWeights::default().lambda1)]
    pub lambda1: f64,
    #[arg(long, default_value_t = LossWeights::default().lambda2)]
    pub lambda2: f64,
    /// Add label cross-entropy on real digits to the discriminator loss.
    #[arg(long)]
    pub supervised_cat: bool,
    /// Train on a seeded random subset of this many digit records.
    #[arg(long)]
    pub subset: Option<usize>,
    #[arg(long)]
    pub max_steps: Option<u64>,
}

impl TrainSettings {
    pub fn to_config(&self) -> TrainConfig {
        let variant = match self.variant {
            VariantArg::Icgan => Variant::Icgan,
            VariantArg::NoIc => Variant::NoIc,
        };
        TrainConfig {
            batch_size: self.batch_size,
            g_lr0: self.g_lr0,
            d_lr0: self.d_lr0,
            lr_decay: self.lr_decay,
            decay_every: self.decay_every,
            epochs: self.epochs,
            n_critic: self.n_critic,
            adam: AdamConfig { beta1: self.adam_beta1, beta2: self.adam_beta2, eps: self.adam_eps },
            seed: self.seed,
            eval_every: self.eval_every,
            fid_samples: self.fid_samples,
            weights: LossWeights {
                lambda_gp: self.lambda_gp,
                lambda1: self.lambda1,
                lambda2: self.lambda2,
                supervised_cat: self.supervised_cat,
            },
            generator: if self.tiny { GeneratorConfig::tiny(variant) } else { GeneratorConfig::full(variant) },
            discriminator: if self.tiny { TrunkConfig::tiny() } else { TrunkConfig::full() },
            subset: self.subset,
            max_steps: self.max_steps,
        }
    }
}

#[derive(Args, Debug)]
pub struct ClassifierArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub tiny: bool,
    #[arg(long, default_value_t = ClassifierConfig::default().batch_size)]
    pub batch_size: usize,
    #[arg(long, default_value_t = ClassifierConfig::default().lr)]
    pub lr: f64,
    #[arg(long, default_value_t = ClassifierConfig::default().max_epochs)]
    pub max_epochs: u64,
    #[arg(long, default_value_t = ClassifierConfig::default().target_accuracy)]
    pub target_accuracy: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Class-balanced training subset size.
    #[arg(long)]
    pub subset: Option<usize>,
    /// Test records evaluated per epoch.
    #[arg(long)]
    pub test_subset: Option<usize>,
}

impl ClassifierArgs {
    pub fn to_config(&self) -> ClassifierConfig {
        ClassifierConfig {
            batch_size: self.batch_size,
            lr: self.lr,
            max_epochs: self.max_epochs,
            target_accuracy: self.target_accuracy,
            seed: self.seed,
            trunk: if self.tiny { TrunkConfig::tiny() } else { TrunkConfig::full() },
            subset: self.subset,
            test_subset: self.test_subset,
            ..ClassifierConfig::default()
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct EvalFidArgs {
    /// GAN checkpoint.
    #[arg(long)]
    pub generator: PathBuf,
    #[arg(long)]
    pub classifier: PathBuf,
    /// Dataset directory; real features come from the test split.
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct EvalDiscreteArgs {
    #[arg(long)]
    pub generator: PathBuf,
    #[arg(long)]
    pub classifier: PathBuf,
    /// Images per round.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 5)]
    pub rounds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct EvalContinuousArgs {
    #[arg(long)]
    pub generator: PathBuf,
    /// Interpolation steps around the hue circle.
    #[arg(long, default_value_t = RING_STEPS)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub digit: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReductionArg {
    AbsOfMean,
    MeanOfAbs,
}

#[derive(Args, Debug, Serialize)]
pub struct AblateArgs {
    #[arg(long)]
    pub generator: PathBuf,
    /// Comma-separated digits (grid rows).
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4,5,6,7,8,9")]
    pub digits: Vec<usize>,
    #[arg(long, default_value_t = crate::ablation::DEFAULT_FRACTION)]
    pub fraction: f64,
    /// Latent draws averaged per digit for the scores.
    #[arg(long, default_value_t = SCORE_SAMPLES)]
    pub samples: usize,
    #[arg(long, value_enum, default_value = "abs-of-mean")]
    pub reduction: ReductionArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct PlotArgs {
    #[command(subcommand)]
    pub figure: Figure,
}

#[derive(Subcommand, Debug, Serialize)]
pub enum Figure {
    /// FID against generator iterations from a run log.
    FidCurve {
        /// One or more runlog.jsonl files (first blue, second orange).
        #[arg(long, required = true)]
        runlog: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rows of digits, columns sweeping the hue code.
    Interpolation {
        #[arg(long)]
        generator: PathBuf,
        #[arg(long, default_value_t = 10)]
        columns: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Unwrapped generated hue against interpolation step.
    Linearity {
        #[arg(long)]
        generator: PathBuf,
        #[arg(long, default_value_t = RING_STEPS)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        digit: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parses `argv` (program name first), runs the command and maps the
/// outcome to an exit code.
pub fn dispatch<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e @ Error::Usage(_)) => {
            eprintln!("{e}");
            EXIT_USAGE
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::MakeDataset(a) => make_dataset(&a),
        Command::Train(a) => train(&a),
        Command::TrainClassifier(a) => classifier(&a),
        Command::EvalFid(a) => eval_fid(&a),
        Command::EvalDiscrete(a) => eval_discrete(&a),
        Command::EvalContinuous(a) => eval_continuous(&a),
        Command::Ablate(a) => ablate(&a),
        Command::Plot(a) => plot(&a.figure),
    }
}

/// Output directory bookkeeping: config echo in, manifest out.
struct RunDir {
    dir: PathBuf,
    command: &'static str,
    outputs: Vec<String>,
}

impl RunDir {
    fn create(dir: &Path, command: &'static str, config: &impl Serialize) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let echo = json!({ "command": command, "config": config });
        fs::write(dir.join("config.json"), serde_json::to_string_pretty(&echo)? + "\n")?;
        Ok(Self { dir: dir.to_path_buf(), command, outputs: vec!["config.json".into()] })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        if !self.outputs.iter().any(|o| o == name) {
            self.outputs.push(name.into());
        }
        self.dir.join(name)
    }

    fn finish(self, extra: Value) -> Result<()> {
        let manifest = json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "outputs": self.outputs,
            "summary": extra,
        });
        fs::write(self.dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
        Ok(())
    }
}

fn echoed<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let v: Value = serde_json::from_str(&fs::read_to_string(path)?)?;
    let config = v.get("config").cloned().unwrap_or(v);
    serde_json::from_value(config).map_err(|e| Error::Usage(format!("{}: not a config echo ({e})", path.display())))
}

fn load_split(dir: &Path, name: &str) -> Result<DatasetFile> {
    let p = dir.join(name);
    if !p.exists() {
        return Err(Error::Usage(format!("{} not found; run make-dataset first", p.display())));
    }
    load_dataset(p)
}

fn load_generator(path: &Path) -> Result<TrainedGenerator> {
    generator_from_bundle(&CheckpointBundle::load(path)?)
}

fn load_classifier(path: &Path) -> Result<crate::metrics::TrainedClassifier> {
    Ok(classifier_from_bundle(&CheckpointBundle::load(path)?)?.0)
}

fn emit(run: &mut RunDir, reports: &[MetricReport]) -> Result<()> {
    let mut text = String::new();
    for r in reports {
        let line = r.to_json_line();
        println!("{line}");
        text.push_str(&line);
        text.push('\n');
    }
    fs::write(run.path("report.jsonl"), text)?;
    Ok(())
}

fn make_dataset(a: &MakeDatasetArgs) -> Result<()> {
    if a.scale == 0 {
        return Err(Error::Usage("--scale must be at least 1".into()));
    }
    let mut run = RunDir::create(&a.out, "make-dataset", a)?;
    let source = match &a.mnist_dir {
        Some(d) => MnistSource::from_dir(d)?,
        None => {
            log::warn!("no MNIST directory given; using procedural glyphs");
            MnistSource::synthetic(a.seed)
        }
    };
    let (train, test) =
        build_dataset_with(&source, a.seed, SplitTargets::TRAIN.scaled(a.scale), SplitTargets::TEST.scaled(a.scale))?;
    save_dataset(&train, run.path("train.cmnist"))?;
    save_dataset(&test, run.path("test.cmnist"))?;
    if let Some(limit) = a.png_limit {
        export_png_dir(&train, run.path("train_png"), Some(limit))?;
        export_png_dir(&test, run.path("test_png"), Some(limit))?;
    }
    println!("train {} records, test {} records", train.len(), test.len());
    run.finish(json!({
        "train_counts": train.class_counts(),
        "test_counts": test.class_counts(),
        "synthetic_glyphs": a.mnist_dir.is_none(),
    }))
}

fn train(a: &TrainArgs) -> Result<()> {
    let cfg = match &a.config {
        Some(p) => echoed(p)?,
        None => a.settings.to_config(),
    };
    cfg.validate().map_err(|e| Error::Usage(e.to_string()))?;
    let data = load_split(&a.dataset, "train.cmnist")?;
    let classifier = a.classifier.as_deref().map(load_classifier).transpose()?;
    let resume = a.resume.as_deref().map(CheckpointBundle::load).transpose()?;
    let mut run = RunDir::create(&a.out, "train", &cfg)?;
    let out = train_run(&cfg, &data, RunOptions { out_dir: Some(&a.out), classifier: classifier.as_ref(), resume })?;
    for e in 1..=out.state.epoch {
        run.path(&format!("epoch_{e:03}.ckpt"));
    }
    run.path("final.ckpt");
    run.path("runlog.jsonl");
    let generator_params = out.state.g.count();
    println!("trained {} steps over {} epochs; generator parameters {generator_params}", out.state.step, out.state.epoch);
    run.finish(json!({
        "steps": out.state.step,
        "epochs": out.state.epoch,
        "variant": cfg.generator.variant.as_str(),
        "generator_params": generator_params,
        "discriminator_params": out.state.d.count(),
        "last_fid": out.log.evals().last().map(|(_, f)| f),
    }))
}

fn classifier(a: &ClassifierArgs) -> Result<()> {
    let cfg = match &a.config {
        Some(p) => echoed(p)?,
        None => a.to_config(),
    };
    let train = load_split(&a.dataset, "train.cmnist")?;
    let test = load_split(&a.dataset, "test.cmnist")?;
    let mut run = RunDir::create(&a.out, "train-classifier", &cfg)?;
    let (model, report) = train_classifier(&cfg, &train, &test)?;
    classifier_bundle(&model, &cfg, &report)?.save(run.path("classifier.ckpt"))?;
    println!("test accuracy {:.4} after {} epochs", report.test_accuracy, report.epochs);
    run.finish(serde_json::to_value(&report)?)
}

fn eval_fid(a: &EvalFidArgs) -> Result<()> {
    let generator = load_generator(&a.generator)?;
    let classifier = load_classifier(&a.classifier)?;
    let test = load_split(&a.dataset, "test.cmnist")?;
    let mut run = RunDir::create(&a.out, "eval-fid", a)?;
    let probe = FidProbe::new(&classifier, &test, a.samples, a.seed)?;
    let value = probe.evaluate(&generator)?;
    let report = MetricReport::new(MetricKind::Fid, value, 0.0, a.samples);
    emit(&mut run, std::slice::from_ref(&report))?;
    run.finish(serde_json::to_value(&report)?)
}

fn eval_discrete(a: &EvalDiscreteArgs) -> Result<()> {
    let generator = load_generator(&a.generator)?;
    let classifier = load_classifier(&a.classifier)?;
    let mut run = RunDir::create(&a.out, "eval-discrete", a)?;
    let report = discrete_accuracy(&generator, &classifier, a.n, a.rounds, a.seed)?;
    emit(&mut run, std::slice::from_ref(&report))?;
    run.finish(serde_json::to_value(&report)?)
}

fn eval_continuous(a: &EvalContinuousArgs) -> Result<()> {
    if a.digit > 9 {
        return Err(Error::Usage(format!("digit {} outside 0-9", a.digit)));
    }
    let generator = load_generator(&a.generator)?;
    let mut run = RunDir::create(&a.out, "eval-continuous", a)?;
    let ring = generated_color_ring(&generator, a.digit, a.steps, a.seed)?;
    let report = hue_mse_report(&ring)?;
    let alignment = hue_mse_best_alignment(&ring.hues)?;
    let lin = linearity_report(&ring.hues, &alignment)?;
    println!("hue_mse {:.6} ({:.4} degrees), linearity r2 {:.4}", report.value, alignment.degrees, lin.r2);
    emit(&mut run, std::slice::from_ref(&report))?;
    fs::write(run.path("ring.json"), serde_json::to_string(&json!({ "hues": ring.hues, "linearity": lin }))?)?;
    run.finish(json!({
        "hue_mse": report.value,
        "hue_mse_degrees": alignment.degrees,
        "offset": alignment.offset,
        "flip": alignment.flip,
        "r2": lin.r2,
        "unreliable": ring.unreliable,
    }))
}

fn ablate(a: &AblateArgs) -> Result<()> {
    if let Some(d) = a.digits.iter().find(|&&d| d > 9) {
        return Err(Error::Usage(format!("digit {d} outside 0-9")));
    }
    let generator = load_generator(&a.generator)?;
    let mut run = RunDir::create(&a.out, "ablate", a)?;
    let reduction = match a.reduction {
        ReductionArg::AbsOfMean => ScoreReduction::AbsOfMean,
        ReductionArg::MeanOfAbs => ScoreReduction::MeanOfAbs,
    };
    let opts = GridOptions { fraction: a.fraction, score_samples: a.samples, reduction, seed: a.seed };
    let grid = ablation_grid(&generator, &a.digits, &opts)?;
    grid.save(&a.out)?;
    for f in ["grid.png", "cells.jsonl", "summary.json"] {
        run.path(f);
    }
    let s = grid.summary();
    println!(
        "hue shift first five {:.4}, last two {:.4}; visibility layerwise min {:.4}, accumulative {:.4}",
        s.first_five_hue_shift, s.last_two_hue_shift, s.min_layerwise_visibility, s.full_accumulative_visibility
    );
    run.finish(serde_json::to_value(&s)?)
}

/// Row per digit, `columns` hues evenly around the circle, one noise vector.
pub fn interpolation_images(generator: &impl ImageGenerator, columns: usize, seed: u64) -> Result<Vec<f32>> {
    let noise = sample_noise(&mut seed::stream(seed, "interpolation-noise", 0));
    let mut codes = Vec::with_capacity(10 * columns);
    for d in 0..10 {
        for k in 0..columns {
            codes.push(LatentCode::from_parts(d, Hue::new(k as f64 / columns as f64)?, &noise)?);
        }
    }
    generator.generate(&codes)
}

fn plot(figure: &Figure) -> Result<()> {
    let out = match figure {
        Figure::FidCurve { out, .. } | Figure::Interpolation { out, .. } | Figure::Linearity { out, .. } => out,
    };
    let mut run = RunDir::create(out, "plot", figure)?;
    let summary = match figure {
        Figure::FidCurve { runlog, .. } => {
            let mut series = Vec::new();
            for (path, color) in runlog.iter().zip([BLUE, ORANGE].into_iter().cycle()) {
                let log = RunLog::load(path)?;
                let points: Vec<(f64, f64)> = log.evals().map(|(s, f)| (s as f64, f)).collect();
                series.push(Series { points, color });
            }
            if series.iter().all(|s| s.points.is_empty()) {
                return Err(Error::Usage("run logs hold no FID evaluations".into()));
            }
            line_chart(&series, 640, 400)?.save(run.path("fid_curve.png"))?;
            json!({ "curves": series.iter().map(|s| s.points.clone()).collect::<Vec<_>>() })
        }
        Figure::Interpolation { generator, columns, seed, .. } => {
            if *columns == 0 {
                return Err(Error::Usage("--columns must be positive".into()));
            }
            let images = interpolation_images(&load_generator(generator)?, *columns, *seed)?;
            image_grid(&images, *columns, 2)?.save(run.path("interpolation.png"))?;
            json!({ "rows": 10, "columns": columns })
        }
        Figure::Linearity { generator, steps, digit, seed, .. } => {
            let ring = generated_color_ring(&load_generator(generator)?, *digit, *steps, *seed)?;
            let alignment = hue_mse_best_alignment(&ring.hues)?;
            let lin = linearity_report(&ring.hues, &alignment)?;
            let n = lin.curve.len() as f64;
            let generated = lin.curve.iter().enumerate().map(|(i, &h)| (i as f64 / n, h)).collect();
            let ideal = (0..lin.curve.len()).map(|i| (i as f64 / n, lin.curve[0] + lin.slope.signum() * i as f64 / n));
            let series = [Series { points: generated, color: BLUE }, Series { points: ideal.collect(), color: ORANGE }];
            line_chart(&series, 640, 400)?.save(run.path("linearity.png"))?;
            json!({ "r2": lin.r2, "slope": lin.slope, "hue_mse": alignment.mse })
        }
    };
    run.finish(summary)
}
