//! ICGAN: a conditional GAN whose generator re-injects the full latent
//! code at every stage through per-channel shift/scale blocks, trained on
//! ColorMNIST and probed for disentanglement of digit and background hue.

pub mod ablation;
pub mod checkpoint;
pub mod cli;
pub mod colormnist;
pub mod error;
pub mod losses;
pub mod metrics;
pub mod models;
pub mod nn;
pub mod optim;
pub mod plot;
pub mod seed;
pub mod trainer;

pub use error::{Error, Result};
