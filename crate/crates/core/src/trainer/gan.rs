use std::fs;
use std::path::Path;

use autograd::{backward, no_grad, Array, Float, Var};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::data::{epoch_order, image_batch, labels, select};
use super::log::{LogRecord, RunLog, StepRecord};
use crate::checkpoint::{spec_hash, CheckpointBundle, Manifest};
use crate::colormnist::{DatasetFile, SOLID_LABEL};
use crate::error::{domain, Error, Result};
use crate::losses::{
    categorical_loss, continuous_loss, critic_loss, generator_adv_loss, gradient_penalty, label_cross_entropy,
    sample_epsilon, total_discriminator_loss, total_generator_loss, LossWeights,
};
use crate::metrics::{fid, FeatureExtractor, Features, ImageGenerator, TrainedClassifier, TrainedGenerator};
use crate::models::{code_targets, latent_batch, make_latent, Discriminator, Generator, LatentCode, Q_HEAD_PREFIXES};
use crate::nn::{Bound, ParamSet};
use crate::optim::Adam;
use crate::seed;

pub const GAN_KIND: &str = "gan";

/// Generator and discriminator architectures of one run.
#[derive(Clone, Debug)]
pub struct Gan {
    pub generator: Generator,
    pub discriminator: Discriminator,
}

impl Gan {
    pub fn new(cfg: &TrainConfig) -> Self {
        Self {
            generator: Generator::new(cfg.generator),
            discriminator: Discriminator::new(cfg.discriminator),
        }
    }

    pub fn arch_string(&self) -> String {
        format!("{}+{}", self.generator.arch_string(), self.discriminator.arch_string())
    }
}

fn is_q_head(name: &str) -> bool {
    Q_HEAD_PREFIXES.iter().any(|p| name.starts_with(p))
}

/// Scalar terms of the discriminator objective.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiscriminatorParts {
    pub critic: f64,
    pub gp: f64,
    pub cat: f64,
    pub con: f64,
    pub supervised: f64,
    pub total: f64,
}

/// Critic + gradient penalty + code losses on the fake batch (+ label
/// cross-entropy on the real batch when supervised).
#[allow(clippy::too_many_arguments)]
pub fn discriminator_objective<T: Float>(
    d: &Discriminator,
    dp: &Bound<T>,
    real: &Var<T>,
    real_labels: &[usize],
    fake: &Var<T>,
    codes: &[LatentCode],
    epsilon: &Array<T>,
    w: &LossWeights,
    step: u64,
) -> Result<(Var<T>, DiscriminatorParts)> {
    let out_real = d.forward(dp, real)?;
    let out_fake = d.forward(dp, fake)?;
    let critic = critic_loss(&out_fake.critic, &out_real.critic)?;
    let gp = gradient_penalty(|x| d.critic(dp, x), real, fake, epsilon, w.lambda_gp)?;
    let (cat_t, col_t) = code_targets::<T>(codes);
    let cat = categorical_loss(&Var::constant(cat_t), &out_fake.cat_logits)?;
    let con = continuous_loss(&Var::constant(col_t), &out_fake.con)?;
    let supervised = if w.supervised_cat {
        // digit records only; the Q-head has ten outputs
        if real_labels.iter().any(|&l| l >= usize::from(SOLID_LABEL)) {
            return Err(domain("supervised loss needs digit labels 0-9"));
        }
        Some(label_cross_entropy(real_labels, &out_real.cat_logits)?)
    } else {
        None
    };
    let total = total_discriminator_loss(&critic, &gp, &cat, &con, supervised.as_ref(), w, step)?;
    let f = |v: &Var<T>| v.item().to_f64_lossy();
    let parts = DiscriminatorParts {
        critic: f(&critic),
        gp: f(&gp),
        cat: f(&cat),
        con: f(&con),
        supervised: supervised.as_ref().map_or(0.0, f),
        total: f(&total),
    };
    Ok((total, parts))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParts {
    pub adv: f64,
    pub cat: f64,
    pub con: f64,
    pub total: f64,
}

/// Adversarial + code losses of a freshly generated batch.
pub fn generator_objective<T: Float>(
    gan: &Gan,
    gp: &Bound<T>,
    dp: &Bound<T>,
    codes: &[LatentCode],
    w: &LossWeights,
    step: u64,
) -> Result<(Var<T>, GeneratorParts)> {
    let z = Var::constant(latent_batch::<T>(codes));
    let fake = gan.generator.forward(gp, &z)?;
    let out = gan.discriminator.forward(dp, &fake)?;
    let adv = generator_adv_loss(&out.critic)?;
    let (cat_t, col_t) = code_targets::<T>(codes);
    let cat = categorical_loss(&Var::constant(cat_t), &out.cat_logits)?;
    let con = continuous_loss(&Var::constant(col_t), &out.con)?;
    let total = total_generator_loss(&adv, &cat, &con, w, step)?;
    let f = |v: &Var<T>| v.item().to_f64_lossy();
    let parts = GeneratorParts { adv: f(&adv), cat: f(&cat), con: f(&con), total: f(&total) };
    Ok((total, parts))
}

/// Everything needed to continue training bit-for-bit.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainState {
    /// Completed generator steps.
    pub step: u64,
    /// Epoch in progress.
    pub epoch: u64,
    /// Batches already consumed in `epoch`.
    pub batch: usize,
    pub g: ParamSet,
    pub d: ParamSet,
    pub g_opt: Adam,
    pub d_opt: Adam,
    /// Learning-rate multiplier from divergence recovery.
    pub lr_scale: f64,
    pub nan_events: u32,
}

#[derive(Serialize, Deserialize)]
struct StateEcho {
    batch: usize,
    lr_scale: f64,
    nan_events: u32,
    g_steps: IndexMap<String, u64>,
    d_steps: IndexMap<String, u64>,
}

impl TrainState {
    pub fn init(gan: &Gan, cfg: &TrainConfig) -> Self {
        Self {
            step: 0,
            epoch: 0,
            batch: 0,
            g: gan.generator.init_params(seed::derive(cfg.seed, "generator", 0)),
            d: gan.discriminator.init_params(seed::derive(cfg.seed, "discriminator", 0)),
            g_opt: Adam::new(cfg.adam),
            d_opt: Adam::new(cfg.adam),
            lr_scale: 1.0,
            nan_events: 0,
        }
    }

    pub fn to_bundle(&self, gan: &Gan, cfg: &TrainConfig) -> Result<CheckpointBundle> {
        let mut arrays = self.g.clone();
        arrays.extend(self.d.clone());
        self.g_opt.export("opt.g", &mut arrays);
        self.d_opt.export("opt.d", &mut arrays);
        let state = StateEcho {
            batch: self.batch,
            lr_scale: self.lr_scale,
            nan_events: self.nan_events,
            g_steps: self.g_opt.steps.clone(),
            d_steps: self.d_opt.steps.clone(),
        };
        Ok(CheckpointBundle {
            manifest: Manifest {
                kind: GAN_KIND.into(),
                spec_hash: spec_hash(&gan.arch_string()),
                step: self.step,
                epoch: self.epoch,
                config: serde_json::to_value(cfg)?,
                state: serde_json::to_value(state)?,
            },
            arrays,
        })
    }

    pub fn from_bundle(bundle: &CheckpointBundle, gan: &Gan, cfg: &TrainConfig) -> Result<Self> {
        bundle.verify(GAN_KIND, &gan.arch_string())?;
        let echo: StateEcho = serde_json::from_value(bundle.manifest.state.clone())?;
        let g = bundle.arrays.subset("g.");
        let d = bundle.arrays.subset("d.");
        let expect_g = gan.generator.init_params::<f32>(0);
        if g.names().ne(expect_g.names()) {
            return Err(Error::Format("checkpoint generator arrays do not match the architecture".into()));
        }
        Ok(Self {
            step: bundle.manifest.step,
            epoch: bundle.manifest.epoch,
            batch: echo.batch,
            g,
            d,
            g_opt: Adam::import(cfg.adam, "opt.g", &bundle.arrays, echo.g_steps)?,
            d_opt: Adam::import(cfg.adam, "opt.d", &bundle.arrays, echo.d_steps)?,
            lr_scale: echo.lr_scale,
            nan_events: echo.nan_events,
        })
    }

    /// The generator half as an evaluation model.
    pub fn generator(&self, gan: &Gan) -> TrainedGenerator {
        TrainedGenerator::new(gan.generator.clone(), self.g.clone())
    }
}

/// The generator of a GAN checkpoint, rebuilt from its configuration echo.
pub fn generator_from_bundle(b: &CheckpointBundle) -> Result<TrainedGenerator> {
    let cfg: TrainConfig = serde_json::from_value(b.manifest.config.clone())?;
    let gan = Gan::new(&cfg);
    b.verify(GAN_KIND, &gan.arch_string())?;
    Ok(TrainedGenerator::new(gan.generator, b.arrays.subset("g.")))
}

fn random_codes(n: usize, rng: &mut seed::Rng) -> Result<Vec<LatentCode>> {
    (0..n).map(|_| make_latent(None, None, rng)).collect()
}

/// One optimization step: `n_critic` discriminator updates on `real`, then
/// one generator update (which also trains the code heads).
pub fn train_step(
    gan: &Gan,
    cfg: &TrainConfig,
    state: &mut TrainState,
    real: &Array<f32>,
    real_labels: &[usize],
) -> Result<StepRecord> {
    let n = real.shape()[0];
    let step = state.step + 1;
    let mut rng = seed::stream(cfg.seed, "step", step);
    let g_lr = cfg.lr(cfg.g_lr0, state.epoch) * state.lr_scale;
    let d_lr = cfg.lr(cfg.d_lr0, state.epoch) * state.lr_scale;
    let real_var = Var::constant(real.clone());

    let mut d_parts = Default::default();
    for _ in 0..cfg.n_critic {
        let codes = random_codes(n, &mut rng)?;
        let fake = no_grad(|| -> Result<Var<f32>> {
            let z = Var::constant(latent_batch(&codes));
            Ok(gan.generator.forward(&state.g.bind(false), &z)?.detach())
        })?;
        let eps = sample_epsilon(n, &mut rng);
        let dp = state.d.bind(true);
        let (total, parts) = discriminator_objective(
            &gan.discriminator,
            &dp,
            &real_var,
            real_labels,
            &fake,
            &codes,
            &eps,
            &cfg.weights,
            step,
        )?;
        let grads = dp.gradients(&backward(&total)?);
        state.d_opt.step(&mut state.d, &grads, d_lr)?;
        d_parts = parts;
    }

    let codes = random_codes(n, &mut rng)?;
    let gp = state.g.bind(true);
    let dp = state.d.bind_where(is_q_head);
    let (total, g_parts) = generator_objective(gan, &gp, &dp, &codes, &cfg.weights, step)?;
    let grads = backward(&total)?;
    state.g_opt.step(&mut state.g, &gp.gradients(&grads), g_lr)?;
    state.d_opt.step(&mut state.d, &dp.gradients_where(&grads, is_q_head), d_lr)?;

    if !(state.g.all_finite() && state.d.all_finite()) {
        return Err(Error::Divergence { step, detail: "non-finite parameters after update".into() });
    }
    state.step = step;
    Ok(StepRecord {
        step,
        epoch: state.epoch,
        g_loss: g_parts.total,
        d_loss: d_parts.total,
        gp: d_parts.gp,
        cat_loss: g_parts.cat,
        con_loss: g_parts.con,
        g_lr,
        d_lr,
    })
}

/// Classifier-feature FID of generated digits against a fixed real sample.
pub struct FidProbe<'a> {
    pub classifier: &'a TrainedClassifier,
    real: Features,
    codes: Vec<LatentCode>,
}

impl<'a> FidProbe<'a> {
    pub fn new(classifier: &'a TrainedClassifier, data: &DatasetFile, samples: usize, seed: u64) -> Result<Self> {
        let idx = select(data, |l| l < SOLID_LABEL, Some(samples), seed, "fid-real");
        let real = classifier.features(image_batch(data, &idx).data())?;
        let real = Features::new(idx.len(), classifier.dim(), real)?;
        let codes = random_codes(samples, &mut seed::stream(seed, "fid-codes", 0))?;
        Ok(Self { classifier, real, codes })
    }

    pub fn evaluate(&self, generator: &impl ImageGenerator) -> Result<f64> {
        let images = generator.generate(&self.codes)?;
        let f = Features::new(self.codes.len(), self.classifier.dim(), self.classifier.features(&images)?)?;
        fid(&self.real, &f)
    }
}

#[derive(Default)]
pub struct RunOptions<'a> {
    /// Checkpoints and run log are written here when set.
    pub out_dir: Option<&'a Path>,
    /// Enables periodic FID logging.
    pub classifier: Option<&'a TrainedClassifier>,
    pub resume: Option<CheckpointBundle>,
}

pub struct RunOutcome {
    pub state: TrainState,
    pub log: RunLog,
    pub checkpoint: CheckpointBundle,
}

/// Trains on the digit records of `data` for `cfg.epochs` epochs.
pub fn train_run(cfg: &TrainConfig, data: &DatasetFile, opts: RunOptions) -> Result<RunOutcome> {
    cfg.validate()?;
    let gan = Gan::new(cfg);
    let digits = select(data, |l| l < SOLID_LABEL, cfg.subset, cfg.seed, "train-subset");
    let batches = digits.len() / cfg.batch_size;
    if batches == 0 {
        return Err(domain(format!("{} digit records cannot fill a batch of {}", digits.len(), cfg.batch_size)));
    }
    let probe = match (opts.classifier, cfg.eval_every) {
        (Some(c), e) if e > 0 => Some(FidProbe::new(c, data, cfg.fid_samples, cfg.seed)?),
        _ => None,
    };
    if let Some(dir) = opts.out_dir {
        fs::create_dir_all(dir)?;
    }
    let log_path = opts.out_dir.map(|d| d.join("runlog.jsonl"));
    let mut state = match &opts.resume {
        Some(b) => TrainState::from_bundle(b, &gan, cfg)?,
        None => TrainState::init(&gan, cfg),
    };
    let mut log = match (&opts.resume, &log_path) {
        (Some(_), Some(p)) if p.exists() => RunLog::load(p)?,
        _ => RunLog::default(),
    };
    log.truncate_after(state.step);
    let save = |state: &TrainState, name: &str| -> Result<CheckpointBundle> {
        let b = state.to_bundle(&gan, cfg)?;
        if let Some(dir) = opts.out_dir {
            b.save(dir.join(name))?;
        }
        Ok(b)
    };
    let at_cap = |s: &TrainState| cfg.max_steps.is_some_and(|m| s.step >= m);

    'epochs: while state.epoch < cfg.epochs && !at_cap(&state) {
        let snapshot = state.clone();
        let log_len = log.records.len();
        let order = epoch_order(digits.len(), cfg.seed, state.epoch);
        while state.batch < batches {
            if at_cap(&state) {
                break 'epochs;
            }
            let idx: Vec<usize> = order[state.batch * cfg.batch_size..(state.batch + 1) * cfg.batch_size]
                .iter()
                .map(|&o| digits[o])
                .collect();
            let real = image_batch(data, &idx);
            match train_step(&gan, cfg, &mut state, &real, &labels(data, &idx)) {
                Ok(rec) => {
                    log::debug!("step {} d {:.4} g {:.4} gp {:.4}", rec.step, rec.d_loss, rec.g_loss, rec.gp);
                    log.push(LogRecord::Step(rec));
                }
                Err(Error::Divergence { step, detail }) if state.nan_events == 0 => {
                    log::warn!("divergence at step {step} ({detail}); restoring epoch start, halving learning rates");
                    let scale = state.lr_scale * 0.5;
                    state = snapshot.clone();
                    state.lr_scale = scale;
                    state.nan_events = 1;
                    log.records.truncate(log_len);
                    log.push(LogRecord::Recovery { step, restored_step: state.step, lr_scale: scale });
                    continue 'epochs;
                }
                Err(e) => return Err(e),
            }
            state.batch += 1;
            if let Some(p) = &probe {
                if state.step % cfg.eval_every == 0 {
                    let value = p.evaluate(&state.generator(&gan))?;
                    log::info!("step {} FID {value:.5}", state.step);
                    log.push(LogRecord::Eval { step: state.step, epoch: state.epoch, fid: value });
                }
            }
        }
        state.epoch += 1;
        state.batch = 0;
        log::info!("epoch {} done at step {}", state.epoch, state.step);
        save(&state, &format!("epoch_{:03}.ckpt", state.epoch))?;
        if let Some(p) = &log_path {
            log.save(p)?;
        }
    }
    let checkpoint = save(&state, "final.ckpt")?;
    if let Some(p) = &log_path {
        log.save(p)?;
    }
    Ok(RunOutcome { state, log, checkpoint })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::colormnist::{build_dataset_with, MnistSource, SplitTargets};
    use crate::models::{GeneratorConfig, TrunkConfig, Variant};

    fn tiny_data() -> DatasetFile {
        let src = MnistSource::synthetic_with_counts(3, [8; 10], [2; 10]);
        let t = SplitTargets { digits: 40, solid: 4, noise: 4 };
        build_dataset_with(&src, 3, t, SplitTargets { digits: 10, solid: 2, noise: 2 }).unwrap().0
    }

    fn tiny_cfg() -> TrainConfig {
        TrainConfig {
            batch_size: 8,
            g_lr0: 1e-3,
            d_lr0: 2e-3,
            epochs: 2,
            decay_every: 1,
            eval_every: 0,
            seed: 11,
            generator: GeneratorConfig::tiny(Variant::Icgan),
            discriminator: TrunkConfig::tiny(),
            ..TrainConfig::default()
        }
    }

    #[test]
    fn one_step_touches_every_array() {
        let cfg = tiny_cfg();
        let gan = Gan::new(&cfg);
        let data = tiny_data();
        let mut st = TrainState::init(&gan, &cfg);
        let before = st.clone();
        let idx: Vec<usize> = (0..8).collect();
        train_step(&gan, &cfg, &mut st, &image_batch(&data, &idx), &labels(&data, &idx)).unwrap();
        for (set, old) in [(&st.g, &before.g), (&st.d, &before.d)] {
            for (name, a) in set.iter() {
                assert_ne!(a, old.get(name).unwrap(), "{name} unchanged");
            }
        }
        assert_eq!(st.step, 1);
    }

    #[test]
    fn runs_are_deterministic_and_resume_bitwise() {
        let cfg = tiny_cfg();
        let data = tiny_data();
        let dir = tempfile::tempdir().unwrap();
        let a = train_run(&cfg, &data, RunOptions { out_dir: Some(dir.path()), ..Default::default() }).unwrap();
        let b = train_run(&cfg, &data, RunOptions::default()).unwrap();
        assert_eq!(a.log, b.log);
        assert_eq!(a.state, b.state);
        assert_eq!(a.log.steps().count(), 10);

        let resume = CheckpointBundle::load(dir.path().join("epoch_001.ckpt")).unwrap();
        assert_eq!(resume.manifest.step, 5);
        let c = train_run(&cfg, &data, RunOptions { out_dir: Some(dir.path()), resume: Some(resume), ..Default::default() })
            .unwrap();
        assert_eq!(c.state, a.state);
        assert_eq!(c.log, a.log);
        let mut bytes_a = Vec::new();
        let mut bytes_c = Vec::new();
        a.checkpoint.write(&mut bytes_a).unwrap();
        c.checkpoint.write(&mut bytes_c).unwrap();
        assert_eq!(bytes_a, bytes_c);
    }

    #[test]
    fn logged_rates_follow_the_schedule() {
        let cfg = TrainConfig { max_steps: Some(7), ..tiny_cfg() };
        let out = train_run(&cfg, &tiny_data(), RunOptions::default()).unwrap();
        let steps: Vec<_> = out.log.steps().collect();
        assert_eq!(steps.len(), 7);
        for w in steps.windows(2) {
            assert!(w[0].step < w[1].step);
        }
        for s in steps {
            assert_eq!(s.g_lr, cfg.lr(cfg.g_lr0, s.epoch));
            assert_eq!(s.d_lr, cfg.lr(cfg.d_lr0, s.epoch));
        }
    }

    #[test]
    fn divergence_recovers_once_then_fails() {
        let cfg = TrainConfig { g_lr0: 1e30, d_lr0: 1e38, ..tiny_cfg() };
        let err = train_run(&cfg, &tiny_data(), RunOptions::default()).err().unwrap();
        assert!(matches!(err, Error::Divergence { .. }), "{err}");
    }

    #[test]
    fn checkpoint_rejects_other_architecture() {
        let cfg = tiny_cfg();
        let gan = Gan::new(&cfg);
        let b = TrainState::init(&gan, &cfg).to_bundle(&gan, &cfg).unwrap();
        let other = TrainConfig { generator: GeneratorConfig::tiny(Variant::NoIc), ..cfg.clone() };
        assert!(TrainState::from_bundle(&b, &Gan::new(&other), &other).is_err());
        assert_eq!(TrainState::from_bundle(&b, &gan, &cfg).unwrap(), TrainState::init(&gan, &cfg));
    }
}
