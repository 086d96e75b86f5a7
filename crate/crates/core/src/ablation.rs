//! Gradient-score probe of where the generator stores digit and
//! background: mask the digit, backpropagate, rank channels by gradient,
//! then zero the top-ranked channels layer by layer or cumulatively.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use autograd::{grad, Array, Float, Var};
use serde::{Deserialize, Serialize};

use crate::colormnist::{circular_distance, Hue, IMAGE_BYTES, PIXELS};
use crate::error::{domain, Error, Result};
use crate::metrics::{corner_mean, extract_bg_hue, ImageGenerator, TrainedGenerator};
use crate::models::{latent_batch, make_latent, Generator, Intervention, LatentCode, ABLATABLE_LAYERS};
use crate::nn::Bound;
use crate::plot::{image_grid, Canvas};
use crate::seed;

/// Per-pixel RGB distance from the background above which a pixel is digit.
pub const MASK_THRESHOLD: f64 = 0.25;
pub const DEFAULT_FRACTION: f64 = 0.10;
/// Latent draws averaged per digit when scoring.
pub const SCORE_SAMPLES: usize = 64;

/// Binary (0/1) digit mask of a channel-first image: pixels farther than
/// [`MASK_THRESHOLD`] from the corner background color.
pub fn digit_mask(image: &[f32]) -> Result<Vec<u8>> {
    let bg = extract_bg_hue(image)?;
    if bg.degenerate {
        return Err(Error::Numerical(format!(
            "background saturation {:.3} too low to separate the digit",
            bg.saturation
        )));
    }
    let c = corner_mean(image);
    Ok((0..PIXELS)
        .map(|p| {
            let d2: f64 = (0..3).map(|ch| (f64::from(image[ch * PIXELS + p]) - c[ch]).powi(2)).sum();
            u8::from(d2.sqrt() > MASK_THRESHOLD)
        })
        .collect())
}

/// Mask of the image the generator produces for `code`.
pub fn digit_mask_for(generator: &impl ImageGenerator, code: &LatentCode) -> Result<Vec<u8>> {
    digit_mask(&generator.generate(std::slice::from_ref(code))?)
}

/// How a channel's gradient map is reduced to a score.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreReduction {
    /// `|mean|`, the formula as written.
    #[default]
    AbsOfMean,
    /// `mean(|·|)`.
    MeanOfAbs,
}

impl FromStr for ScoreReduction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "abs-of-mean" => Ok(Self::AbsOfMean),
            "mean-of-abs" => Ok(Self::MeanOfAbs),
            _ => Err(Error::Usage(format!("unknown score reduction {s:?} (abs-of-mean, mean-of-abs)"))),
        }
    }
}

/// Scores of one sample's `[C, h, w]` gradient block.
pub fn channel_scores<T: Float>(grad: &[T], channels: usize, reduction: ScoreReduction) -> Vec<f64> {
    let hw = grad.len() / channels;
    grad.chunks_exact(hw)
        .map(|g| match reduction {
            ScoreReduction::AbsOfMean => (g.iter().map(|v| v.to_f64_lossy()).sum::<f64>() / hw as f64).abs(),
            ScoreReduction::MeanOfAbs => g.iter().map(|v| v.to_f64_lossy().abs()).sum::<f64>() / hw as f64,
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerScores {
    pub layer: String,
    pub scores: Vec<f64>,
}

/// Channel scores for every ablatable layer, in forward order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradScoreTable {
    pub layers: Vec<LayerScores>,
}

impl GradScoreTable {
    pub fn get(&self, layer: &str) -> Option<&[f64]> {
        self.layers.iter().find(|l| l.layer == layer).map(|l| l.scores.as_slice())
    }
}

/// Sum over the batch of squared image values inside the masks.
pub fn masked_loss<T: Float>(images: &Var<T>, masks: &[Vec<u8>]) -> Result<Var<T>> {
    let n = images.shape()[0];
    if masks.len() != n || masks.iter().any(|m| m.len() != PIXELS) {
        return Err(domain(format!("need {n} masks of {PIXELS} pixels")));
    }
    let m: Vec<T> = masks.iter().flatten().map(|&b| T::from_f64_lossy(f64::from(b))).collect();
    let m = Var::constant(Array::new(&[n, 1, 28, 28], m)?);
    Ok(images.square().mul(&m)?.sum())
}

/// Backpropagates [`masked_loss`] to every tap and averages the per-sample
/// channel scores over the batch.
pub fn grad_scores<T: Float>(
    generator: &Generator,
    p: &Bound<T>,
    codes: &[LatentCode],
    masks: &[Vec<u8>],
    reduction: ScoreReduction,
) -> Result<GradScoreTable> {
    if codes.is_empty() {
        return Err(domain("no latent codes to score"));
    }
    if masks.iter().all(|m| m.iter().all(|&b| b == 0)) {
        log::warn!("all digit masks are empty; scores are zero");
    }
    let z = Var::leaf(latent_batch::<T>(codes));
    let trace = generator.forward_traced(p, &z, &[])?;
    let loss = masked_loss(&trace.images, masks)?;
    let taps: Vec<&Var<T>> = trace.taps.iter().collect();
    let grads = grad(&loss, &taps, false)?;
    let n = codes.len();
    let layers = ABLATABLE_LAYERS
        .iter()
        .zip(&grads)
        .map(|(name, g)| {
            let c = g.shape()[1];
            let mut acc = vec![0.0; c];
            for sample in g.value().data().chunks_exact(g.value().len() / n) {
                for (a, s) in acc.iter_mut().zip(channel_scores(sample, c, reduction)) {
                    *a += s / n as f64;
                }
            }
            LayerScores { layer: name.to_string(), scores: acc }
        })
        .collect();
    Ok(GradScoreTable { layers })
}

/// Scores of a trained generator for one digit, averaged over `samples`
/// random hue/noise draws. Draws whose background is grey get an empty mask.
pub fn digit_scores(
    generator: &TrainedGenerator,
    digit: usize,
    samples: usize,
    seed: u64,
    reduction: ScoreReduction,
) -> Result<GradScoreTable> {
    let mut rng = seed::stream(seed, "ablation-scores", digit as u64);
    let codes: Vec<LatentCode> = (0..samples).map(|_| make_latent(Some(digit), None, &mut rng)).collect::<Result<_>>()?;
    let images = generator.generate(&codes)?;
    let mut skipped = 0;
    let masks: Vec<Vec<u8>> = images
        .chunks_exact(IMAGE_BYTES)
        .map(|img| {
            digit_mask(img).unwrap_or_else(|_| {
                skipped += 1;
                vec![0; PIXELS]
            })
        })
        .collect();
    if skipped > 0 {
        log::warn!("digit {digit}: {skipped}/{samples} draws had a grey background and were not scored");
    }
    grad_scores(&generator.model, &generator.params.bind(false), &codes, &masks, reduction)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationMode {
    Layerwise,
    Accumulative,
}

impl fmt::Display for AblationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Layerwise => "layerwise",
            Self::Accumulative => "accumulative",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationPlan {
    pub mode: AblationMode,
    pub fraction: f64,
    /// Ordered target layers, named as in [`ABLATABLE_LAYERS`].
    pub layers: Vec<String>,
}

impl AblationPlan {
    /// All eight layers at the default fraction.
    pub fn full(mode: AblationMode) -> Self {
        Self { mode, fraction: DEFAULT_FRACTION, layers: ABLATABLE_LAYERS.iter().map(|s| s.to_string()).collect() }
    }

    pub fn validate(&self) -> Result<Vec<usize>> {
        if !(0.0..=1.0).contains(&self.fraction) {
            return Err(domain(format!("fraction {} outside [0, 1]", self.fraction)));
        }
        self.layers.iter().map(|l| layer_index(l)).collect()
    }

    /// Layer-index sets, one per run: each layer alone, or growing prefixes.
    pub fn runs(&self) -> Result<Vec<Vec<usize>>> {
        let idx = self.validate()?;
        Ok(match self.mode {
            AblationMode::Layerwise => idx.iter().map(|&i| vec![i]).collect(),
            AblationMode::Accumulative => (1..=idx.len()).map(|k| idx[..k].to_vec()).collect(),
        })
    }
}

pub fn layer_index(name: &str) -> Result<usize> {
    ABLATABLE_LAYERS
        .iter()
        .position(|l| *l == name)
        .ok_or_else(|| domain(format!("unknown layer {name:?} (expected one of {ABLATABLE_LAYERS:?})")))
}

/// Number of suppressed channels: `⌈fraction · channels⌉`.
pub fn suppressed_count(fraction: f64, channels: usize) -> usize {
    // guard against 0.1 · 30 = 3.0000000000000004
    ((fraction * channels as f64 - 1e-9).ceil().max(0.0) as usize).min(channels)
}

/// Highest-scoring channels, ties to the lower index.
pub fn top_channels(scores: &[f64], fraction: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(suppressed_count(fraction, scores.len()));
    order
}

/// Interventions zeroing the top channels of the given layers.
pub fn suppression_hooks(
    generator: &Generator,
    scores: &GradScoreTable,
    layers: &[usize],
    fraction: f64,
) -> Result<Vec<Intervention<f32>>> {
    let channels = generator.layer_channels();
    let mut hooks = vec![Intervention::default(); ABLATABLE_LAYERS.len()];
    for &l in layers {
        let s = scores
            .get(ABLATABLE_LAYERS[l])
            .ok_or_else(|| domain(format!("no scores for layer {}", ABLATABLE_LAYERS[l])))?;
        if s.len() != channels[l] {
            return Err(domain(format!("layer {} has {} channels, scores {}", ABLATABLE_LAYERS[l], channels[l], s.len())));
        }
        hooks[l] = Intervention::suppress(channels[l], &top_channels(s, fraction));
    }
    Ok(hooks)
}

/// Images for `codes` under each run of the plan (one image batch per run).
pub fn suppress_topk(
    generator: &TrainedGenerator,
    plan: &AblationPlan,
    scores: &GradScoreTable,
    codes: &[LatentCode],
) -> Result<Vec<Vec<f32>>> {
    plan.runs()?
        .iter()
        .map(|layers| {
            let hooks = suppression_hooks(&generator.model, scores, layers, plan.fraction)?;
            TrainedGenerator { hooks, ..generator.clone() }.generate(codes)
        })
        .collect()
}

/// Effect of one ablation on one image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub digit: usize,
    pub mode: Option<AblationMode>,
    /// Ablated layer (layerwise), deepest layer of the prefix
    /// (accumulative), or "none".
    pub column: String,
    /// Circular distance between background hues before and after.
    pub hue_shift: f64,
    /// Mean absolute pixel change inside the unablated digit mask.
    pub digit_change: f64,
    /// Mean RGB distance of the digit-mask pixels from the image's own
    /// corner background.
    pub visibility: f64,
}

fn cell(digit: usize, mode: Option<AblationMode>, column: &str, base: &[f32], mask: &[u8], img: &[f32]) -> Result<CellStats> {
    let h0 = extract_bg_hue(base)?.hue;
    let h1 = extract_bg_hue(img)?.hue;
    let on: Vec<usize> = (0..PIXELS).filter(|&p| mask[p] == 1).collect();
    let (mut change, mut vis) = (0.0, 0.0);
    let bg = corner_mean(img);
    for &p in &on {
        let mut d2 = 0.0;
        for ch in 0..3 {
            let v = f64::from(img[ch * PIXELS + p]);
            change += (v - f64::from(base[ch * PIXELS + p])).abs();
            d2 += (v - bg[ch]).powi(2);
        }
        vis += d2.sqrt();
    }
    let m = on.len().max(1) as f64;
    Ok(CellStats {
        digit,
        mode,
        column: column.into(),
        hue_shift: circular_distance(h0, h1),
        digit_change: change / (3.0 * m),
        visibility: vis / m,
    })
}

/// Layerwise and accumulative ablation of every layer, one fixed latent
/// per digit.
pub struct AblationGrid {
    pub digits: Vec<usize>,
    pub fraction: f64,
    /// Row-major: per digit `[none, 8 layerwise, 8 accumulative]`.
    pub cells: Vec<CellStats>,
    /// Images in the same order as `cells`.
    pub images: Vec<f32>,
}

pub const GRID_COLUMNS: usize = 1 + 2 * ABLATABLE_LAYERS.len();

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    /// Mean layerwise hue shift per layer.
    pub layer_hue_shift: Vec<f64>,
    pub first_five_hue_shift: f64,
    pub last_two_hue_shift: f64,
    /// Lowest mean digit visibility over single-layer ablations.
    pub min_layerwise_visibility: f64,
    /// Mean digit visibility with all layers ablated together.
    pub full_accumulative_visibility: f64,
    pub baseline_visibility: f64,
}

pub struct GridOptions {
    pub fraction: f64,
    pub score_samples: usize,
    pub reduction: ScoreReduction,
    pub seed: u64,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self { fraction: DEFAULT_FRACTION, score_samples: SCORE_SAMPLES, reduction: ScoreReduction::AbsOfMean, seed: 0 }
    }
}

pub fn ablation_grid(generator: &TrainedGenerator, digits: &[usize], opts: &GridOptions) -> Result<AblationGrid> {
    let mut cells = Vec::new();
    let mut images = Vec::new();
    for &d in digits {
        let scores = digit_scores(generator, d, opts.score_samples, opts.seed, opts.reduction)?;
        let mut rng = seed::stream(opts.seed, "ablation-code", d as u64);
        let hue = Hue::new(rand::Rng::random::<f64>(&mut rng))?;
        let code = make_latent(Some(d), Some(hue), &mut rng)?;
        let codes = [code];
        let base = generator.generate(&codes)?;
        let mask = digit_mask(&base).unwrap_or_else(|e| {
            log::warn!("digit {d}: {e}; digit statistics use an empty mask");
            vec![0; PIXELS]
        });
        cells.push(cell(d, None, "none", &base, &mask, &base)?);
        images.extend_from_slice(&base);
        for mode in [AblationMode::Layerwise, AblationMode::Accumulative] {
            let plan = AblationPlan { fraction: opts.fraction, ..AblationPlan::full(mode) };
            for (img, layer) in suppress_topk(generator, &plan, &scores, &codes)?.iter().zip(ABLATABLE_LAYERS) {
                cells.push(cell(d, Some(mode), layer, &base, &mask, img)?);
                images.extend_from_slice(img);
            }
        }
    }
    Ok(AblationGrid { digits: digits.to_vec(), fraction: opts.fraction, cells, images })
}

impl AblationGrid {
    pub fn canvas(&self) -> Result<Canvas> {
        image_grid(&self.images, GRID_COLUMNS, 2)
    }

    pub fn summary(&self) -> GridSummary {
        let n = self.digits.len().max(1) as f64;
        let mean_of = |f: &dyn Fn(&CellStats) -> bool, v: &dyn Fn(&CellStats) -> f64| {
            self.cells.iter().filter(|c| f(c)).map(v).sum::<f64>() / n
        };
        let layer_hue_shift: Vec<f64> = ABLATABLE_LAYERS
            .iter()
            .map(|l| mean_of(&|c| c.mode == Some(AblationMode::Layerwise) && c.column == *l, &|c| c.hue_shift))
            .collect();
        let min_layerwise_visibility = ABLATABLE_LAYERS
            .iter()
            .map(|l| mean_of(&|c| c.mode == Some(AblationMode::Layerwise) && c.column == *l, &|c| c.visibility))
            .fold(f64::INFINITY, f64::min);
        GridSummary {
            first_five_hue_shift: layer_hue_shift[..5].iter().sum::<f64>() / 5.0,
            last_two_hue_shift: layer_hue_shift[6..].iter().sum::<f64>() / 2.0,
            layer_hue_shift,
            min_layerwise_visibility,
            full_accumulative_visibility: mean_of(
                &|c| c.mode == Some(AblationMode::Accumulative) && c.column == "C",
                &|c| c.visibility,
            ),
            baseline_visibility: mean_of(&|c| c.mode.is_none(), &|c| c.visibility),
        }
    }

    /// `grid.png`, `cells.jsonl` and `summary.json` under `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        self.canvas()?.save(dir.join("grid.png"))?;
        let mut f = std::io::BufWriter::new(fs::File::create(dir.join("cells.jsonl"))?);
        for c in &self.cells {
            serde_json::to_writer(&mut f, c)?;
            f.write_all(b"\n")?;
        }
        f.flush()?;
        fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&self.summary())?)?;
        Ok(())
    }
}
