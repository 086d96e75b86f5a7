use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::models::ImageGenerator;
use super::report::{mean_stderr, MetricKind, MetricReport};
use crate::colormnist::{circular_distance, rgb_to_hsv, Hue, IMAGE_BYTES, PIXELS, SIDE};
use crate::error::{domain, Result};
use crate::models::{sample_noise, LatentCode};
use crate::seed;

/// Saturation below which a background counts as grey.
pub const DEGENERATE_SATURATION: f64 = 0.05;
/// Fraction of degenerate steps above which a ring is unreliable.
pub const UNRELIABLE_FRACTION: f64 = 0.10;
/// Default number of interpolation steps.
pub const RING_STEPS: usize = 900;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackgroundHue {
    pub hue: f64,
    pub saturation: f64,
    pub degenerate: bool,
}

/// Mean RGB of the four 3×3 corner patches of a channel-first image,
/// as a hue. Grey backgrounds are flagged and report hue 0.
pub fn extract_bg_hue(image: &[f32]) -> Result<BackgroundHue> {
    if image.len() != IMAGE_BYTES {
        return Err(domain(format!("image has {} values, expected {IMAGE_BYTES}", image.len())));
    }
    let rgb = corner_mean(image);
    let (h, s, _) = rgb_to_hsv(rgb);
    let degenerate = s < DEGENERATE_SATURATION;
    Ok(BackgroundHue { hue: if degenerate { 0.0 } else { h }, saturation: s, degenerate })
}

/// Mean RGB over the corner patches (rows/cols 0–2 and 25–27).
pub fn corner_mean(image: &[f32]) -> [f64; 3] {
    let mut sum = [0.0f64; 3];
    let edges = [0..3, SIDE - 3..SIDE];
    for ys in &edges {
        for xs in &edges {
            for y in ys.clone() {
                for x in xs.clone() {
                    for (c, s) in sum.iter_mut().enumerate() {
                        *s += f64::from(image[c * PIXELS + y * SIDE + x]);
                    }
                }
            }
        }
    }
    sum.map(|s| s / 36.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColorRing {
    pub hues: Vec<f64>,
    pub degenerate_steps: usize,
    pub unreliable: bool,
}

/// Background hues of images generated while the color code sweeps the
/// hue circle in `steps` steps, digit and noise held fixed.
pub fn generated_color_ring(
    generator: &impl ImageGenerator,
    digit: usize,
    steps: usize,
    seed: u64,
) -> Result<ColorRing> {
    if steps < 2 {
        return Err(domain("a color ring needs at least 2 steps"));
    }
    let noise = sample_noise(&mut seed::stream(seed, "ring-noise", 0));
    let codes: Vec<LatentCode> = (0..steps)
        .map(|k| LatentCode::from_parts(digit, Hue::new(k as f64 / steps as f64)?, &noise))
        .collect::<Result<_>>()?;
    let images = generator.generate(&codes)?;
    let mut hues = Vec::with_capacity(steps);
    let mut degenerate_steps = 0;
    for img in images.chunks_exact(IMAGE_BYTES) {
        let bg = extract_bg_hue(img)?;
        degenerate_steps += usize::from(bg.degenerate);
        hues.push(bg.hue);
    }
    let unreliable = degenerate_steps as f64 > UNRELIABLE_FRACTION * steps as f64;
    if unreliable {
        log::warn!("color ring unreliable: {degenerate_steps}/{steps} grey backgrounds");
    }
    Ok(ColorRing { hues, degenerate_steps, unreliable })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alignment {
    pub mse: f64,
    pub offset: usize,
    pub flip: bool,
    /// `mse × 360`.
    pub degrees: f64,
}

/// `ring[(offset ± i) mod N]`, the candidate mapping compared against `i/N`.
pub fn aligned(ring: &[f64], offset: usize, flip: bool) -> Vec<f64> {
    let n = ring.len();
    (0..n)
        .map(|i| if flip { ring[(offset + n - i % n) % n] } else { ring[(offset + i) % n] })
        .collect()
}

/// Minimum over all rotations and reversals of the mean squared circular
/// distance between the ring and the standard ring `(0, 1/N, …)`.
pub fn hue_mse_best_alignment(ring: &[f64]) -> Result<Alignment> {
    let n = ring.len();
    if n == 0 {
        return Err(domain("empty color ring"));
    }
    if ring.iter().any(|h| !h.is_finite()) {
        return Err(domain("color ring holds non-finite hues"));
    }
    let standard: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
    let mut best = Alignment { mse: f64::INFINITY, offset: 0, flip: false, degrees: f64::INFINITY };
    for flip in [false, true] {
        for offset in 0..n {
            let mut sum = 0.0;
            for (i, a1) in standard.iter().enumerate() {
                let a2 = if flip { ring[(offset + n - i) % n] } else { ring[(offset + i) % n] };
                sum += circular_distance(*a1, a2).powi(2);
            }
            let mse = sum / n as f64;
            if mse < best.mse {
                best = Alignment { mse, offset, flip, degrees: mse * 360.0 };
            }
        }
    }
    Ok(best)
}

pub fn hue_mse_report(ring: &ColorRing) -> Result<MetricReport> {
    let a = hue_mse_best_alignment(&ring.hues)?;
    let mut r = MetricReport::new(MetricKind::HueMse, a.mse, 0.0, ring.hues.len());
    r.offset = Some(a.offset);
    r.flip = Some(a.flip);
    r.degrees = Some(a.degrees);
    r.unreliable = Some(ring.unreliable);
    Ok(r)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Linearity {
    /// Unwrapped hue per aligned index.
    pub curve: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Unwraps the aligned ring and fits `index → hue` by least squares.
/// A constant curve reports R² = 0.
pub fn linearity_report(ring: &[f64], alignment: &Alignment) -> Result<Linearity> {
    if ring.len() < 2 {
        return Err(domain("linearity needs at least 2 points"));
    }
    let seq = aligned(ring, alignment.offset, alignment.flip);
    let mut curve = Vec::with_capacity(seq.len());
    let mut acc = seq[0];
    curve.push(acc);
    for w in seq.windows(2) {
        let mut d = w[1] - w[0];
        d -= d.round();
        acc += d;
        curve.push(acc);
    }
    let n = curve.len() as f64;
    let mx = (n - 1.0) / 2.0;
    let my = curve.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (i, y) in curve.iter().enumerate() {
        let dx = i as f64 - mx;
        let dy = y - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 0.0 };
    Ok(Linearity { intercept: my - slope * mx, curve, slope, r2 })
}

/// Mean best-aligned Hue MSE of randomly permuted standard rings.
pub fn random_ring_baseline(n: usize, trials: usize, seed: u64) -> Result<(f64, f64)> {
    let standard: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
    let mut values = Vec::with_capacity(trials);
    for t in 0..trials {
        let mut ring = standard.clone();
        ring.shuffle(&mut seed::stream(seed, "random-ring", t as u64));
        values.push(hue_mse_best_alignment(&ring)?.mse);
    }
    Ok(mean_stderr(&values))
}
