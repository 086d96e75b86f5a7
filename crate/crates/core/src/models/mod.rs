//! Generator (with and without latent re-injection), discriminator with
//! critic and auxiliary heads, and the evaluation classifier.

mod discriminator;
mod generator;
mod latent;

pub use discriminator::{Classifier, Discriminator, DiscriminatorOutput, Trunk, TrunkConfig, Q_HEAD_PREFIXES};
pub use generator::{
    Generator, GeneratorConfig, GeneratorTrace, Intervention, Variant, ABLATABLE_LAYERS, SS_SITES,
};
pub use latent::{
    code_targets, latent_batch, make_latent, sample_noise, LatentCode, CAT_DIM, COL_DIM, NOISE_DIM, Z_DIM,
};
