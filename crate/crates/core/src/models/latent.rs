use autograd::{Array, Float};
use rand::Rng;

use crate::colormnist::{Hue, HUE_STEPS};
use crate::error::{domain, Result};

pub const Z_DIM: usize = 100;
pub const CAT_DIM: usize = 10;
pub const COL_DIM: usize = 3;
pub const NOISE_DIM: usize = Z_DIM - CAT_DIM - COL_DIM;

/// `(one-hot digit | RGB of background hue | uniform noise)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LatentCode {
    pub digit: usize,
    pub hue: Hue,
    pub values: Vec<f64>,
}

impl LatentCode {
    pub fn c_cat(&self) -> &[f64] {
        &self.values[..CAT_DIM]
    }

    pub fn c_col(&self) -> &[f64] {
        &self.values[CAT_DIM..CAT_DIM + COL_DIM]
    }

    pub fn noise(&self) -> &[f64] {
        &self.values[CAT_DIM + COL_DIM..]
    }

    /// Assembles a code from explicit parts; `noise` must have 87 entries.
    pub fn from_parts(digit: usize, hue: Hue, noise: &[f64]) -> Result<Self> {
        if digit >= CAT_DIM {
            return Err(domain(format!("digit {digit} outside 0..10")));
        }
        if noise.len() != NOISE_DIM {
            return Err(domain(format!("noise has {} dims, expected {NOISE_DIM}", noise.len())));
        }
        let mut values = vec![0.0; Z_DIM];
        values[digit] = 1.0;
        values[CAT_DIM..CAT_DIM + COL_DIM].copy_from_slice(&hue.to_rgb());
        values[CAT_DIM + COL_DIM..].copy_from_slice(noise);
        Ok(Self { digit, hue, values })
    }
}

pub fn sample_noise(rng: &mut impl Rng) -> Vec<f64> {
    (0..NOISE_DIM).map(|_| rng.random::<f64>()).collect()
}

/// `None` draws the digit uniformly from 0..10 and the hue uniformly from
/// the 100-step grid.
pub fn make_latent(digit: Option<usize>, hue: Option<Hue>, rng: &mut impl Rng) -> Result<LatentCode> {
    let digit = digit.unwrap_or_else(|| rng.random_range(0..CAT_DIM));
    let hue = match hue {
        Some(h) => h,
        None => Hue::from_index(rng.random_range(0..HUE_STEPS))?,
    };
    let noise = sample_noise(rng);
    LatentCode::from_parts(digit, hue, &noise)
}

/// Stacks codes into a `[n, 100]` array.
pub fn latent_batch<T: Float>(codes: &[LatentCode]) -> Array<T> {
    let data: Vec<T> = codes
        .iter()
        .flat_map(|c| c.values.iter().map(|&v| T::from_f64_lossy(v)))
        .collect();
    Array::new(&[codes.len(), Z_DIM], data).expect("codes are 100-dim")
}

/// One-hot digits `[n, 10]` and RGB targets `[n, 3]` of a batch of codes.
pub fn code_targets<T: Float>(codes: &[LatentCode]) -> (Array<T>, Array<T>) {
    let cat = codes.iter().flat_map(|c| c.c_cat().iter().map(|&v| T::from_f64_lossy(v))).collect();
    let col = codes.iter().flat_map(|c| c.c_col().iter().map(|&v| T::from_f64_lossy(v))).collect();
    (
        Array::new(&[codes.len(), CAT_DIM], cat).expect("10 per code"),
        Array::new(&[codes.len(), COL_DIM], col).expect("3 per code"),
    )
}
