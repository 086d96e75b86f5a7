use autograd::{backward, Var};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::config::ClassifierConfig;
use super::data::{epoch_order, image_batch, labels};
use crate::checkpoint::{spec_hash, CheckpointBundle, Manifest};
use crate::colormnist::{DatasetFile, NUM_CLASSES};
use crate::error::{domain, Result};
use crate::losses::label_cross_entropy;
use crate::metrics::{ImageClassifier, TrainedClassifier};
use crate::models::Classifier;
use crate::optim::Adam;
use crate::seed;

pub const CLASSIFIER_KIND: &str = "classifier";

/// Minimum test accuracy below which a trained classifier is flagged.
pub const USABLE_ACCURACY: f64 = 0.99;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierReport {
    pub epochs: u64,
    pub steps: u64,
    pub train_records: usize,
    pub test_records: usize,
    pub test_accuracy: f64,
    /// Test accuracy per class (NaN for classes absent from the test set).
    pub per_class: Vec<f64>,
    /// Test accuracy after each epoch.
    pub history: Vec<f64>,
    pub reached_target: bool,
}

/// Indices of a class-balanced subset: `limit / 12` per class, remainder to
/// the lowest labels. All records when `limit` is absent.
pub fn balanced_subset(data: &DatasetFile, limit: Option<usize>, seed: u64, label: &str) -> Vec<usize> {
    let Some(limit) = limit.filter(|&n| n < data.len()) else {
        return (0..data.len()).collect();
    };
    let mut rng = seed::stream(seed, label, 0);
    let mut out = Vec::with_capacity(limit);
    for c in 0..NUM_CLASSES {
        let want = limit / NUM_CLASSES + usize::from(c < limit % NUM_CLASSES);
        let mut idx: Vec<usize> =
            (0..data.len()).filter(|&i| usize::from(data.records[i].digit_label) == c).collect();
        idx.shuffle(&mut rng);
        idx.truncate(want);
        out.extend(idx);
    }
    out.sort_unstable();
    out
}

/// Overall and per-class accuracy of `model` on the given records.
pub fn accuracy(model: &impl ImageClassifier, data: &DatasetFile, indices: &[usize]) -> Result<(f64, Vec<f64>)> {
    let mut hits = [0usize; NUM_CLASSES];
    let mut totals = [0usize; NUM_CLASSES];
    for chunk in indices.chunks(1000) {
        let pred = model.predict(image_batch(data, chunk).data())?;
        for (&p, l) in pred.iter().zip(labels(data, chunk)) {
            totals[l] += 1;
            hits[l] += usize::from(p == l);
        }
    }
    let n: usize = totals.iter().sum();
    if n == 0 {
        return Err(domain("no records to evaluate"));
    }
    let per_class = hits.iter().zip(&totals).map(|(&h, &t)| h as f64 / t as f64).collect();
    Ok((hits.iter().sum::<usize>() as f64 / n as f64, per_class))
}

/// Trains the trunk + 12-way head with cross-entropy until the test
/// accuracy reaches `target_accuracy` or `max_epochs` pass.
pub fn train_classifier(
    cfg: &ClassifierConfig,
    train: &DatasetFile,
    test: &DatasetFile,
) -> Result<(TrainedClassifier, ClassifierReport)> {
    if cfg.batch_size == 0 || cfg.lr <= 0.0 {
        return Err(domain("classifier batch_size and lr must be positive"));
    }
    let model = Classifier::new(cfg.trunk);
    let mut params = model.init_params(cfg.seed);
    let mut opt = Adam::new(cfg.adam);
    let train_idx = balanced_subset(train, cfg.subset, cfg.seed, "classifier-train");
    let test_idx = balanced_subset(test, cfg.test_subset, cfg.seed, "classifier-test");
    let batches = train_idx.len() / cfg.batch_size;
    if batches == 0 {
        return Err(domain(format!("{} records cannot fill a batch of {}", train_idx.len(), cfg.batch_size)));
    }
    let mut history = Vec::new();
    let mut steps = 0;
    let mut per_class = Vec::new();
    for epoch in 0..cfg.max_epochs {
        let order = epoch_order(train_idx.len(), cfg.seed ^ 0xC1A5, epoch);
        for b in 0..batches {
            let idx: Vec<usize> =
                order[b * cfg.batch_size..(b + 1) * cfg.batch_size].iter().map(|&o| train_idx[o]).collect();
            let x = Var::constant(image_batch(train, &idx));
            let p = params.bind(true);
            let loss = label_cross_entropy(&labels(train, &idx), &model.logits(&p, &x)?)?;
            let grads = p.gradients(&backward(&loss)?);
            opt.step(&mut params, &grads, cfg.lr)?;
            steps += 1;
            if steps % 50 == 0 {
                log::debug!("classifier step {steps} loss {:.4}", loss.item());
            }
        }
        let trained = TrainedClassifier { model: model.clone(), params: params.clone() };
        let (acc, pc) = accuracy(&trained, test, &test_idx)?;
        log::info!("classifier epoch {} test accuracy {acc:.4}", epoch + 1);
        history.push(acc);
        per_class = pc;
        if acc >= cfg.target_accuracy {
            break;
        }
    }
    let test_accuracy = *history.last().expect("at least one epoch");
    if test_accuracy < USABLE_ACCURACY {
        log::warn!("classifier test accuracy {test_accuracy:.4} is below {USABLE_ACCURACY}");
    }
    let report = ClassifierReport {
        epochs: history.len() as u64,
        steps,
        train_records: train_idx.len(),
        test_records: test_idx.len(),
        test_accuracy,
        per_class,
        reached_target: test_accuracy >= cfg.target_accuracy,
        history,
    };
    Ok((TrainedClassifier { model, params }, report))
}

pub fn classifier_bundle(
    c: &TrainedClassifier,
    cfg: &ClassifierConfig,
    report: &ClassifierReport,
) -> Result<CheckpointBundle> {
    Ok(CheckpointBundle {
        manifest: Manifest {
            kind: CLASSIFIER_KIND.into(),
            spec_hash: spec_hash(&c.model.arch_string()),
            step: report.steps,
            epoch: report.epochs,
            config: serde_json::to_value(cfg)?,
            state: serde_json::to_value(report)?,
        },
        arrays: c.params.clone(),
    })
}

/// Restores a classifier checkpoint, checking architecture and that it was
/// actually trained.
pub fn classifier_from_bundle(b: &CheckpointBundle) -> Result<(TrainedClassifier, ClassifierReport)> {
    let cfg: ClassifierConfig = serde_json::from_value(b.manifest.config.clone())?;
    let model = Classifier::new(cfg.trunk);
    b.verify(CLASSIFIER_KIND, &model.arch_string())?;
    let report: ClassifierReport = serde_json::from_value(b.manifest.state.clone())?;
    if report.steps == 0 {
        return Err(crate::Error::Usage("classifier checkpoint is untrained".into()));
    }
    Ok((TrainedClassifier { model, params: b.arrays.clone() }, report))
}
