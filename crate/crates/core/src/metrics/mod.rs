//! Feature FID, discrete disentanglement accuracy and the color-ring
//! Hue MSE with its linearity report.

mod continuous;
mod discrete;
mod fid;
mod models;
mod report;

pub use continuous::{
    aligned, corner_mean, extract_bg_hue, generated_color_ring, hue_mse_best_alignment, hue_mse_report,
    linearity_report, random_ring_baseline, Alignment, BackgroundHue, ColorRing, Linearity, DEGENERATE_SATURATION,
    RING_STEPS, UNRELIABLE_FRACTION,
};
pub use discrete::discrete_accuracy;
pub use fid::{fid, Features};
pub use models::{
    argmax, ConstantGenerator, FeatureExtractor, ImageClassifier, ImageGenerator, PassThroughGenerator,
    TrainedClassifier, TrainedGenerator, EVAL_BATCH,
};
pub use report::{mean_stderr, MetricKind, MetricReport};

#[cfg(test)]
mod tests;
