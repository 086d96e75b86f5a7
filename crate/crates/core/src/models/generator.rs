use autograd::{Array, Float, Var};
use serde::{Deserialize, Serialize};

use super::latent::Z_DIM;
use crate::error::{domain, Result};
use crate::nn::{lrelu, Bound, EqConv, EqDeconv, EqLinear, ParamSet, SsBlock};
use crate::seed;

/// Layers that can be probed and ablated, in forward order.
pub const ABLATABLE_LAYERS: [&str; 8] = ["D1", "11", "12", "D2", "21", "22", "D3", "C"];

/// Modulation sites, in forward order.
pub const SS_SITES: [&str; 8] = ["dense", "D1", "11", "12", "D2", "21", "22", "D3"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Latent code re-injected at every stage.
    Icgan,
    /// Same stack with the modulation sites removed.
    NoIc,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Icgan => "icgan",
            Variant::NoIc => "no-ic",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "icgan" => Ok(Variant::Icgan),
            "no-ic" => Ok(Variant::NoIc),
            _ => Err(domain(format!("unknown variant {s:?} (icgan | no-ic)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    /// Channels at 4×4, 7×7, 14×14 and 28×28.
    pub widths: [usize; 4],
    pub variant: Variant,
}

impl GeneratorConfig {
    pub fn full(variant: Variant) -> Self {
        Self { widths: [256, 128, 64, 32], variant }
    }

    /// Few channels, for finite-difference checks.
    pub fn tiny(variant: Variant) -> Self {
        Self { widths: [3, 2, 2, 2], variant }
    }
}

/// Per-layer intervention applied to the post-activation feature map:
/// `x · scale + offset`, with `scale` and `offset` shaped `[1, C, 1, 1]`.
#[derive(Clone, Debug)]
pub struct Intervention<T: Float> {
    pub scale: Option<Array<T>>,
    pub offset: Option<Var<T>>,
}

impl<T: Float> Default for Intervention<T> {
    fn default() -> Self {
        Self { scale: None, offset: None }
    }
}

impl<T: Float> Intervention<T> {
    /// Zeroes the listed channels of a `channels`-wide map.
    pub fn suppress(channels: usize, zeroed: &[usize]) -> Self {
        let mut m = vec![T::one(); channels];
        for &c in zeroed {
            m[c] = T::zero();
        }
        Self {
            scale: Some(Array::new(&[1, channels, 1, 1], m).expect("channel mask")),
            offset: None,
        }
    }
}

/// Output of an instrumented forward pass.
pub struct GeneratorTrace<T: Float> {
    pub images: Var<T>,
    /// Post-activation map of every ablatable layer, after interventions.
    pub taps: Vec<Var<T>>,
}

#[derive(Clone, Debug)]
pub struct Generator {
    pub config: GeneratorConfig,
    dense: EqLinear,
    d1: EqDeconv,
    c11: EqConv,
    c12: EqConv,
    d2: EqDeconv,
    c21: EqConv,
    c22: EqConv,
    d3: EqDeconv,
    out: EqConv,
    ss: Vec<SsBlock>,
}

impl Generator {
    pub fn new(config: GeneratorConfig) -> Self {
        let [w0, w1, w2, w3] = config.widths;
        let ss = SS_SITES
            .iter()
            .zip([w0, w1, w1, w1, w2, w2, w2, w3])
            .map(|(site, c)| SsBlock::new(&format!("g.ss.{site}"), Z_DIM, c))
            .collect();
        Self {
            config,
            dense: EqLinear::new("g.dense", Z_DIM, w0 * 16),
            d1: EqDeconv::new("g.D1", w0, w1, (7, 7)),
            c11: EqConv::new("g.11", w1, w1, 3),
            c12: EqConv::new("g.12", w1, w1, 3),
            d2: EqDeconv::new("g.D2", w1, w2, (14, 14)),
            c21: EqConv::new("g.21", w2, w2, 3),
            c22: EqConv::new("g.22", w2, w2, 3),
            d3: EqDeconv::new("g.D3", w2, w3, (28, 28)),
            out: EqConv::new("g.C", w3, 3, 3),
            ss,
        }
    }

    /// Channel count of each ablatable layer's output.
    pub fn layer_channels(&self) -> [usize; 8] {
        let [_, w1, w2, w3] = self.config.widths;
        [w1, w1, w1, w2, w2, w2, w3, 3]
    }

    pub fn ss_blocks(&self) -> &[SsBlock] {
        &self.ss
    }

    pub fn init_params<T: Float>(&self, seed: u64) -> ParamSet<T> {
        let mut ps = ParamSet::new();
        let mut rng = seed::stream(seed, "generator-init", 0);
        self.dense.init(&mut ps, &mut rng);
        self.d1.init(&mut ps, &mut rng);
        self.c11.init(&mut ps, &mut rng);
        self.c12.init(&mut ps, &mut rng);
        self.d2.init(&mut ps, &mut rng);
        self.c21.init(&mut ps, &mut rng);
        self.c22.init(&mut ps, &mut rng);
        self.d3.init(&mut ps, &mut rng);
        self.out.init(&mut ps, &mut rng);
        if self.config.variant == Variant::Icgan {
            for s in &self.ss {
                s.init(&mut ps);
            }
        }
        ps
    }

    /// Stable description of the architecture, hashed into checkpoints.
    pub fn arch_string(&self) -> String {
        format!("generator/v1/{:?}/{}", self.config.widths, self.config.variant.as_str())
    }

    pub fn forward<T: Float>(&self, p: &Bound<T>, z: &Var<T>) -> Result<Var<T>> {
        Ok(self.forward_traced(p, z, &[])?.images)
    }

    /// Forward pass with optional interventions, indexed like
    /// [`ABLATABLE_LAYERS`] (missing entries mean none).
    pub fn forward_traced<T: Float>(
        &self,
        p: &Bound<T>,
        z: &Var<T>,
        hooks: &[Intervention<T>],
    ) -> Result<GeneratorTrace<T>> {
        let s = z.shape();
        if s.len() != 2 || s[1] != Z_DIM {
            return Err(domain(format!("latent batch {s:?}, expected [n, {Z_DIM}]")));
        }
        let n = s[0];
        let mut taps = Vec::with_capacity(8);
        let modulate = |site: usize, x: Var<T>| -> Result<Var<T>> {
            match self.config.variant {
                Variant::Icgan => self.ss[site].forward(p, &x, z),
                Variant::NoIc => Ok(x),
            }
        };
        let mut tap = |layer: usize, x: Var<T>| -> Result<Var<T>> {
            let mut x = x;
            if let Some(h) = hooks.get(layer) {
                if let Some(scale) = &h.scale {
                    x = x.mul(&Var::constant(scale.clone()))?;
                }
                if let Some(offset) = &h.offset {
                    x = x.add(offset)?;
                }
            }
            taps.push(x.clone());
            Ok(x)
        };

        let w0 = self.config.widths[0];
        let h = self.dense.forward(p, z)?.reshape(&[n, w0, 4, 4])?;
        let h = lrelu(&modulate(0, h)?);
        let h = tap(0, lrelu(&modulate(1, self.d1.forward(p, &h)?)?))?;
        let a = tap(1, lrelu(&modulate(2, self.c11.forward(p, &h)?)?))?;
        let a = tap(2, lrelu(&modulate(3, self.c12.forward(p, &a)?)?))?;
        let h = h.add(&a)?;
        let h = tap(3, lrelu(&modulate(4, self.d2.forward(p, &h)?)?))?;
        let a = tap(4, lrelu(&modulate(5, self.c21.forward(p, &h)?)?))?;
        let a = tap(5, lrelu(&modulate(6, self.c22.forward(p, &a)?)?))?;
        let h = h.add(&a)?;
        let h = tap(6, lrelu(&modulate(7, self.d3.forward(p, &h)?)?))?;
        let images = tap(7, self.out.forward(p, &h)?.sigmoid())?;
        Ok(GeneratorTrace { images, taps })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::latent::{latent_batch, make_latent};
    use crate::seed::stream;

    fn codes(n: usize, seed: u64) -> Vec<crate::models::LatentCode> {
        let mut rng = stream(seed, "codes", 0);
        (0..n).map(|_| make_latent(None, None, &mut rng).unwrap()).collect()
    }

    #[test]
    fn shape_and_range() {
        let g = Generator::new(GeneratorConfig { widths: [8, 6, 4, 4], variant: Variant::Icgan });
        let p = g.init_params::<f32>(0).bind(false);
        let y = g.forward(&p, &Var::constant(latent_batch(&codes(7, 1)))).unwrap();
        assert_eq!(y.shape(), &[7, 3, 28, 28]);
        assert!(y.value().data().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn wrong_latent_dim() {
        let g = Generator::new(GeneratorConfig::tiny(Variant::Icgan));
        let p = g.init_params::<f64>(0).bind(false);
        assert!(g.forward(&p, &Var::constant(Array::zeros(&[2, 99]))).is_err());
    }

    #[test]
    fn identity_modulation_matches_no_ic() {
        let ic = Generator::new(GeneratorConfig::tiny(Variant::Icgan));
        let plain = Generator::new(GeneratorConfig::tiny(Variant::NoIc));
        let pi = ic.init_params::<f64>(4);
        let pp = plain.init_params::<f64>(4);
        let z = Var::constant(latent_batch(&codes(3, 2)));
        let a = ic.forward(&pi.bind(false), &z).unwrap();
        let b = plain.forward(&pp.bind(false), &z).unwrap();
        assert_eq!(a.value(), b.value());
    }

    #[test]
    fn parameter_delta_is_the_modulation_maps() {
        let cfg = GeneratorConfig::full(Variant::Icgan);
        let ic = Generator::new(cfg).init_params::<f32>(0).count();
        let plain = Generator::new(GeneratorConfig { variant: Variant::NoIc, ..cfg }).init_params::<f32>(0).count();
        let [w0, w1, w2, w3] = cfg.widths;
        let per_site: usize = [w0, w1, w1, w1, w2, w2, w2, w3].iter().map(|c| 2 * 100 * c + 2 * c).sum();
        assert_eq!(ic - plain, per_site);
    }

    #[test]
    fn batch_independent() {
        let g = Generator::new(GeneratorConfig::tiny(Variant::Icgan));
        let mut ps = g.init_params::<f64>(1);
        // perturb modulation so it is not the identity
        for (name, v) in ps.iter_mut() {
            if name.contains(".ss.") {
                v.data_mut().iter_mut().enumerate().for_each(|(i, x)| *x += 0.01 * (i % 7) as f64);
            }
        }
        let p = ps.bind(false);
        let cs = codes(3, 3);
        let joint = g.forward(&p, &Var::constant(latent_batch(&cs))).unwrap();
        let per = 3 * 28 * 28;
        for (i, c) in cs.iter().enumerate() {
            let single = g.forward(&p, &Var::constant(latent_batch(std::slice::from_ref(c)))).unwrap();
            assert_eq!(single.value().data(), &joint.value().data()[i * per..(i + 1) * per]);
        }
    }

    #[test]
    fn suppression_zeroes_channels() {
        let g = Generator::new(GeneratorConfig::tiny(Variant::Icgan));
        let p = g.init_params::<f64>(2).bind(false);
        let z = Var::constant(latent_batch(&codes(2, 4)));
        let mut hooks = vec![Intervention::default(); 8];
        hooks[6] = Intervention::suppress(2, &[1]);
        let t = g.forward_traced(&p, &z, &hooks).unwrap();
        assert_eq!(t.taps.len(), 8);
        let d3 = t.taps[6].value();
        assert!(d3.data().chunks(784).skip(1).step_by(2).all(|c| c.iter().all(|&v| v == 0.0)));
    }
}
