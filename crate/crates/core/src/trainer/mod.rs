//! Adversarial training loop, run log, checkpoints and the evaluation
//! classifier.

mod classifier;
mod config;
mod data;
mod gan;
mod log;

pub use classifier::{
    accuracy, balanced_subset, classifier_bundle, classifier_from_bundle, train_classifier, ClassifierReport,
    CLASSIFIER_KIND, USABLE_ACCURACY,
};
pub use config::{lr_schedule, ClassifierConfig, TrainConfig};
pub use data::{epoch_order, image_batch, labels, select};
pub use gan::{
    discriminator_objective, generator_from_bundle, generator_objective, train_run, train_step, DiscriminatorParts, FidProbe, Gan,
    GeneratorParts, RunOptions, RunOutcome, TrainState, GAN_KIND,
};
pub use log::{LogRecord, RunLog, StepRecord};
