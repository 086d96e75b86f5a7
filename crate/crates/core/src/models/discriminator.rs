use autograd::{Float, Var};
use serde::{Deserialize, Serialize};

use super::latent::{CAT_DIM, COL_DIM};
use crate::colormnist::{NUM_CLASSES, SIDE};
use crate::error::{domain, Result};
use crate::nn::{lrelu, Bound, EqConv, EqLinear, ParamSet};
use crate::seed;

/// Convolution widths at 28, 14 and 7 pixels, then the feature width.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrunkConfig {
    pub widths: [usize; 3],
    pub features: usize,
}

impl TrunkConfig {
    pub fn full() -> Self {
        Self { widths: [32, 64, 128], features: 256 }
    }

    pub fn tiny() -> Self {
        Self { widths: [2, 2, 2], features: 4 }
    }
}

/// Convolutions with anti-aliased downsampling (28 → 14 → 7 → 4) and a
/// dense feature layer.
#[derive(Clone, Debug)]
pub struct Trunk {
    pub config: TrunkConfig,
    convs: [EqConv; 3],
    dense: EqLinear,
}

impl Trunk {
    pub fn new(prefix: &str, config: TrunkConfig) -> Self {
        let [a, b, c] = config.widths;
        Self {
            config,
            convs: [
                EqConv::new(format!("{prefix}.conv1"), 3, a, 3),
                EqConv::new(format!("{prefix}.conv2"), a, b, 3),
                EqConv::new(format!("{prefix}.conv3"), b, c, 3),
            ],
            dense: EqLinear::new(format!("{prefix}.dense"), c * 16, config.features),
        }
    }

    fn init<T: Float>(&self, ps: &mut ParamSet<T>, rng: &mut seed::Rng) {
        for c in &self.convs {
            c.init(ps, rng);
        }
        self.dense.init(ps, rng);
    }

    pub fn forward<T: Float>(&self, p: &Bound<T>, images: &Var<T>) -> Result<Var<T>> {
        let s = images.shape();
        if s.len() != 4 || s[1..] != [3, SIDE, SIDE] {
            return Err(domain(format!("image batch {s:?}, expected [n, 3, 28, 28]")));
        }
        let mut h = images.clone();
        for c in &self.convs {
            h = lrelu(&c.forward(p, &h)?).blur_pool()?;
        }
        let h = h.reshape(&[s[0], self.config.widths[2] * 16])?;
        Ok(lrelu(&self.dense.forward(p, &h)?))
    }

    fn arch(&self) -> String {
        format!("{:?}/{}", self.config.widths, self.config.features)
    }
}

/// Critic score, digit logits and background-color estimate.
pub struct DiscriminatorOutput<T: Float> {
    /// `[n]`
    pub critic: Var<T>,
    /// `[n, 10]`
    pub cat_logits: Var<T>,
    /// `[n, 3]`, each in `(0, 1)`
    pub con: Var<T>,
}

#[derive(Clone, Debug)]
pub struct Discriminator {
    pub trunk: Trunk,
    critic: EqLinear,
    cat: EqLinear,
    con: EqLinear,
}

/// Prefix of the auxiliary (mutual-information) head parameters.
pub const Q_HEAD_PREFIXES: [&str; 2] = ["d.cat", "d.con"];

impl Discriminator {
    pub fn new(config: TrunkConfig) -> Self {
        let f = config.features;
        Self {
            trunk: Trunk::new("d.trunk", config),
            // a critic offset cancels in the Wasserstein estimate
            critic: EqLinear::without_bias("d.critic", f, 1),
            cat: EqLinear::new("d.cat", f, CAT_DIM),
            con: EqLinear::new("d.con", f, COL_DIM),
        }
    }

    pub fn init_params<T: Float>(&self, seed: u64) -> ParamSet<T> {
        let mut ps = ParamSet::new();
        let mut rng = seed::stream(seed, "discriminator-init", 0);
        self.trunk.init(&mut ps, &mut rng);
        self.critic.init(&mut ps, &mut rng);
        self.cat.init(&mut ps, &mut rng);
        self.con.init(&mut ps, &mut rng);
        ps
    }

    pub fn arch_string(&self) -> String {
        format!("discriminator/v2/{}", self.trunk.arch())
    }

    pub fn forward<T: Float>(&self, p: &Bound<T>, images: &Var<T>) -> Result<DiscriminatorOutput<T>> {
        let f = self.trunk.forward(p, images)?;
        let n = images.shape()[0];
        Ok(DiscriminatorOutput {
            critic: self.critic.forward(p, &f)?.reshape(&[n])?,
            cat_logits: self.cat.forward(p, &f)?,
            con: self.con.forward(p, &f)?.sigmoid(),
        })
    }

    /// Critic head only.
    pub fn critic<T: Float>(&self, p: &Bound<T>, images: &Var<T>) -> Result<Var<T>> {
        let f = self.trunk.forward(p, images)?;
        Ok(self.critic.forward(p, &f)?.reshape(&[images.shape()[0]])?)
    }
}

/// Twelve-way ColorMNIST classifier; its penultimate features feed FID.
#[derive(Clone, Debug)]
pub struct Classifier {
    pub trunk: Trunk,
    head: EqLinear,
}

impl Classifier {
    pub fn new(config: TrunkConfig) -> Self {
        Self {
            trunk: Trunk::new("c.trunk", config),
            head: EqLinear::new("c.head", config.features, NUM_CLASSES),
        }
    }

    pub fn init_params<T: Float>(&self, seed: u64) -> ParamSet<T> {
        let mut ps = ParamSet::new();
        let mut rng = seed::stream(seed, "classifier-init", 0);
        self.trunk.init(&mut ps, &mut rng);
        self.head.init(&mut ps, &mut rng);
        ps
    }

    pub fn arch_string(&self) -> String {
        format!("classifier/v1/{}", self.trunk.arch())
    }

    /// `[n, 12]` logits.
    pub fn logits<T: Float>(&self, p: &Bound<T>, images: &Var<T>) -> Result<Var<T>> {
        self.head.forward(p, &self.trunk.forward(p, images)?)
    }

    /// `[n, features]` penultimate activations.
    pub fn features<T: Float>(&self, p: &Bound<T>, images: &Var<T>) -> Result<Var<T>> {
        self.trunk.forward(p, images)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use autograd::Array;
    use rand::Rng;

    fn images(n: usize, seed: u64) -> Array<f64> {
        let mut rng = seed::stream(seed, "img", 0);
        Array::new(&[n, 3, 28, 28], (0..n * 2352).map(|_| rng.random::<f64>()).collect()).unwrap()
    }

    #[test]
    fn head_shapes_and_ranges() {
        let d = Discriminator::new(TrunkConfig { widths: [4, 4, 4], features: 8 });
        let p = d.init_params::<f64>(0).bind(false);
        let out = d.forward(&p, &Var::constant(images(5, 1))).unwrap();
        assert_eq!(out.critic.shape(), &[5]);
        assert_eq!(out.cat_logits.shape(), &[5, 10]);
        assert_eq!(out.con.shape(), &[5, 3]);
        assert!(out.con.value().data().iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn rejects_wrong_image_shape() {
        let d = Discriminator::new(TrunkConfig::tiny());
        let p = d.init_params::<f64>(0).bind(false);
        assert!(d.forward(&p, &Var::constant(Array::zeros(&[1, 3, 27, 28]))).is_err());
    }

    #[test]
    fn classifier_shapes() {
        let c = Classifier::new(TrunkConfig::tiny());
        let p = c.init_params::<f64>(0).bind(false);
        let x = Var::constant(images(2, 2));
        assert_eq!(c.logits(&p, &x).unwrap().shape(), &[2, 12]);
        assert_eq!(c.features(&p, &x).unwrap().shape(), &[2, 4]);
    }
}
