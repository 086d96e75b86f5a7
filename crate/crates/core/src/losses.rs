//! Adversarial, gradient-penalty and auxiliary-code objectives.

use autograd::{grad, Array, Float, Var};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub lambda_gp: f64,
    /// Categorical code weight.
    pub lambda1: f64,
    /// Continuous code weight.
    pub lambda2: f64,
    /// Extra cross-entropy of real images against their labels.
    pub supervised_cat: bool,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { lambda_gp: 10.0, lambda1: 1.0, lambda2: 1.0, supervised_cat: false }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda_gp", self.lambda_gp), ("lambda1", self.lambda1), ("lambda2", self.lambda2)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(domain(format!("{name} = {v} must be a finite non-negative number")));
            }
        }
        Ok(())
    }
}

fn nonempty<T: Float>(v: &Var<T>, what: &str) -> Result<()> {
    if v.value().is_empty() {
        return Err(domain(format!("{what}: empty batch")));
    }
    Ok(())
}

/// `mean(d_fake) - mean(d_real)`.
pub fn critic_loss<T: Float>(d_fake: &Var<T>, d_real: &Var<T>) -> Result<Var<T>> {
    nonempty(d_fake, "critic_loss")?;
    nonempty(d_real, "critic_loss")?;
    Ok(d_fake.mean().sub(&d_real.mean())?)
}

/// `-mean(d_fake)`.
pub fn generator_adv_loss<T: Float>(d_fake: &Var<T>) -> Result<Var<T>> {
    nonempty(d_fake, "generator_adv_loss")?;
    Ok(d_fake.mean().neg())
}

/// Per-sample interpolation weights in `[0, 1)`.
pub fn sample_epsilon<T: Float>(n: usize, rng: &mut impl Rng) -> Array<T> {
    let data = (0..n).map(|_| T::from_f64_lossy(rng.random::<f64>())).collect();
    Array::new(&[n, 1, 1, 1], data).expect("n weights")
}

/// `λ · mean((‖∇ critic(x̂)‖ - 1)²)` at `x̂ = ε·real + (1-ε)·fake`, built
/// with a differentiable gradient so the penalty trains the critic.
pub fn gradient_penalty<T: Float>(
    critic: impl Fn(&Var<T>) -> Result<Var<T>>,
    real: &Var<T>,
    fake: &Var<T>,
    epsilon: &Array<T>,
    lambda: f64,
) -> Result<Var<T>> {
    if real.shape() != fake.shape() {
        return Err(domain(format!("gradient_penalty: real {:?} vs fake {:?}", real.shape(), fake.shape())));
    }
    nonempty(real, "gradient_penalty")?;
    let n = real.shape()[0];
    let eps = Var::constant(epsilon.clone());
    let one_minus = Var::constant(epsilon.map(|e| T::one() - e));
    let mixed = real.detach().mul(&eps)?.add(&fake.detach().mul(&one_minus)?)?;
    let x_hat = Var::leaf(mixed.value().clone());
    let scores = critic(&x_hat)?.sum();
    let g = grad(&scores, &[&x_hat], true)?.remove(0);
    let mut reduce = vec![1; g.shape().len()];
    reduce[0] = n;
    // tiny floor keeps the sqrt differentiable at an exactly-zero gradient
    let norm = g.square().sum_to(&reduce)?.shift(1e-24).sqrt();
    Ok(norm.shift(-1.0).square().mean().scale(lambda))
}

/// Batch-mean cross-entropy of `[n, K]` logits against `[n, K]` one-hot
/// (or any probability) targets.
pub fn categorical_loss<T: Float>(targets: &Var<T>, logits: &Var<T>) -> Result<Var<T>> {
    let s = logits.shape();
    if s.len() != 2 || targets.shape() != s {
        return Err(domain(format!("categorical_loss: targets {:?} vs logits {s:?}", targets.shape())));
    }
    nonempty(logits, "categorical_loss")?;
    let (n, k) = (s[0], s[1]);
    let max: Vec<T> = logits
        .value()
        .data()
        .chunks(k)
        .map(|r| r.iter().copied().fold(T::neg_infinity(), T::max))
        .collect();
    let max = Var::constant(Array::new(&[n, 1], max)?);
    let lse = logits.sub(&max)?.exp().sum_to(&[n, 1])?.ln().add(&max)?;
    let picked = targets.mul(logits)?.sum_to(&[n, 1])?;
    let weight = targets.sum_to(&[n, 1])?;
    Ok(lse.mul(&weight)?.sub(&picked)?.mean())
}

/// Cross-entropy with integer class labels.
pub fn label_cross_entropy<T: Float>(labels: &[usize], logits: &Var<T>) -> Result<Var<T>> {
    let s = logits.shape();
    if s.len() != 2 || s[0] != labels.len() {
        return Err(domain(format!("label_cross_entropy: {} labels vs logits {s:?}", labels.len())));
    }
    let k = s[1];
    let mut onehot = vec![T::zero(); labels.len() * k];
    for (i, &l) in labels.iter().enumerate() {
        if l >= k {
            return Err(domain(format!("label {l} >= {k} classes")));
        }
        onehot[i * k + l] = T::one();
    }
    categorical_loss(&Var::constant(Array::new(s, onehot)?), logits)
}

/// `(1/3)·Σ(c - ĉ)²`, batch-averaged: the mean over all entries.
pub fn continuous_loss<T: Float>(target: &Var<T>, pred: &Var<T>) -> Result<Var<T>> {
    if target.shape() != pred.shape() {
        return Err(domain(format!("continuous_loss: {:?} vs {:?}", target.shape(), pred.shape())));
    }
    nonempty(pred, "continuous_loss")?;
    Ok(target.sub(pred)?.square().mean())
}

/// Scalar loss terms of one step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossParts {
    pub adv: f64,
    pub gp: f64,
    pub cat: f64,
    pub con: f64,
    pub supervised: f64,
}

fn check_finite(step: u64, what: &str, v: f64) -> Result<()> {
    if v.is_nan() {
        return Err(Error::Divergence { step, detail: format!("{what} is NaN") });
    }
    Ok(())
}

/// `adv + λ1·cat + λ2·con`.
pub fn total_generator_loss<T: Float>(
    adv: &Var<T>,
    cat: &Var<T>,
    con: &Var<T>,
    w: &LossWeights,
    step: u64,
) -> Result<Var<T>> {
    let total = adv.add(&cat.scale(w.lambda1))?.add(&con.scale(w.lambda2))?;
    check_finite(step, "generator loss", total.item().to_f64_lossy())?;
    Ok(total)
}

/// `critic + gp + λ1·cat + λ2·con (+ supervised)`.
pub fn total_discriminator_loss<T: Float>(
    critic: &Var<T>,
    gp: &Var<T>,
    cat: &Var<T>,
    con: &Var<T>,
    supervised: Option<&Var<T>>,
    w: &LossWeights,
    step: u64,
) -> Result<Var<T>> {
    let mut total = critic.add(gp)?.add(&cat.scale(w.lambda1))?.add(&con.scale(w.lambda2))?;
    if let Some(s) = supervised {
        total = total.add(s)?;
    }
    check_finite(step, "discriminator loss", total.item().to_f64_lossy())?;
    Ok(total)
}
