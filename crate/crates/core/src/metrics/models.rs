//! The generator and classifier interfaces the evaluation procedures are
//! written against, with implementations for trained networks and a
//! renderer-backed reference generator.

use autograd::{no_grad, Array, Var};

use crate::colormnist::{glyph_from_bytes, render_digit_rgb, rgb_to_hsv, Hue, MnistSource, IMAGE_BYTES, PIXELS};
use crate::error::{domain, Result};
use crate::models::{latent_batch, Classifier, Generator, Intervention, LatentCode};
use crate::nn::ParamSet;

/// Maps latent codes to channel-first `[n, 3, 28, 28]` images in `[0, 1]`.
pub trait ImageGenerator {
    fn generate(&self, codes: &[LatentCode]) -> Result<Vec<f32>>;
}

/// Twelve-way classifier over channel-first images.
pub trait ImageClassifier {
    /// Argmax class per image.
    fn predict(&self, images: &[f32]) -> Result<Vec<usize>>;
}

/// Penultimate feature extractor for FID.
pub trait FeatureExtractor {
    fn dim(&self) -> usize;
    fn features(&self, images: &[f32]) -> Result<Vec<f64>>;
}

pub const EVAL_BATCH: usize = 100;

fn image_count(images: &[f32]) -> Result<usize> {
    if images.len() % IMAGE_BYTES != 0 {
        return Err(domain(format!("{} values is not a whole number of images", images.len())));
    }
    Ok(images.len() / IMAGE_BYTES)
}

/// A generator network with fixed weights and optional interventions.
#[derive(Clone, Debug)]
pub struct TrainedGenerator {
    pub model: Generator,
    pub params: ParamSet,
    pub hooks: Vec<Intervention<f32>>,
}

impl TrainedGenerator {
    pub fn new(model: Generator, params: ParamSet) -> Self {
        Self { model, params, hooks: Vec::new() }
    }
}

impl ImageGenerator for TrainedGenerator {
    fn generate(&self, codes: &[LatentCode]) -> Result<Vec<f32>> {
        no_grad(|| {
            let p = self.params.bind(false);
            let mut out = Vec::with_capacity(codes.len() * IMAGE_BYTES);
            for chunk in codes.chunks(EVAL_BATCH) {
                let z = Var::constant(latent_batch::<f32>(chunk));
                let t = self.model.forward_traced(&p, &z, &self.hooks)?;
                out.extend_from_slice(t.images.value().data());
            }
            Ok(out)
        })
    }
}

#[derive(Clone, Debug)]
pub struct TrainedClassifier {
    pub model: Classifier,
    pub params: ParamSet,
}

impl TrainedClassifier {
    fn batched(
        &self,
        images: &[f32],
        f: impl Fn(&Var<f32>) -> Result<Var<f32>>,
        mut sink: impl FnMut(&Array<f32>),
    ) -> Result<()> {
        image_count(images)?;
        for chunk in images.chunks(EVAL_BATCH * IMAGE_BYTES) {
            let b = chunk.len() / IMAGE_BYTES;
            let x = Var::constant(Array::new(&[b, 3, 28, 28], chunk.to_vec())?);
            sink(f(&x)?.value());
        }
        Ok(())
    }
}

impl ImageClassifier for TrainedClassifier {
    fn predict(&self, images: &[f32]) -> Result<Vec<usize>> {
        no_grad(|| {
            let p = self.params.bind(false);
            let mut out = Vec::new();
            self.batched(images, |x| self.model.logits(&p, x), |logits| {
                out.extend(logits.data().chunks(logits.shape()[1]).map(argmax));
            })?;
            Ok(out)
        })
    }
}

impl FeatureExtractor for TrainedClassifier {
    fn dim(&self) -> usize {
        self.model.trunk.config.features
    }

    fn features(&self, images: &[f32]) -> Result<Vec<f64>> {
        no_grad(|| {
            let p = self.params.bind(false);
            let mut out = Vec::new();
            self.batched(images, |x| self.model.features(&p, x), |f| out.extend(f.data().iter().map(|&v| f64::from(v))))?;
            Ok(out)
        })
    }
}

pub fn argmax(row: &[f32]) -> usize {
    row.iter()
        .enumerate()
        .fold((0, f32::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) })
        .0
}

/// Renders the requested digit (one fixed glyph per class) over the
/// background hue encoded in the code's color part: a generator with
/// perfect disentanglement, used as a reference.
#[derive(Clone, Debug)]
pub struct PassThroughGenerator {
    glyphs: Vec<Vec<f64>>,
}

impl PassThroughGenerator {
    /// First glyph of each digit class in the source's test split.
    pub fn from_source(source: &MnistSource) -> Result<Self> {
        let classes = source.test.by_class();
        let glyphs = classes
            .iter()
            .enumerate()
            .map(|(d, idx)| {
                let &i = idx.first().ok_or_else(|| domain(format!("no glyph for digit {d}")))?;
                Ok(glyph_from_bytes(source.test.glyph(i)))
            })
            .collect::<Result<_>>()?;
        Ok(Self { glyphs })
    }

    pub fn glyph(&self, digit: usize) -> &[f64] {
        &self.glyphs[digit]
    }
}

impl ImageGenerator for PassThroughGenerator {
    fn generate(&self, codes: &[LatentCode]) -> Result<Vec<f32>> {
        let mut out = Vec::with_capacity(codes.len() * IMAGE_BYTES);
        for c in codes {
            let col = c.c_col();
            let (h, _, _) = rgb_to_hsv([col[0], col[1], col[2]]);
            let hwc = render_digit_rgb(&self.glyphs[c.digit], Hue::wrapped(h))?;
            let start = out.len();
            out.resize(start + IMAGE_BYTES, 0.0);
            for p in 0..PIXELS {
                for ch in 0..3 {
                    out[start + ch * PIXELS + p] = hwc[p * 3 + ch] as f32;
                }
            }
        }
        Ok(out)
    }
}

/// Emits one fixed image whatever the code.
#[derive(Clone, Debug)]
pub struct ConstantGenerator(pub Vec<f32>);

impl ImageGenerator for ConstantGenerator {
    fn generate(&self, codes: &[LatentCode]) -> Result<Vec<f32>> {
        Ok(self.0.iter().copied().cycle().take(codes.len() * self.0.len()).collect())
    }
}
