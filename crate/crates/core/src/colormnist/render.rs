use rand::Rng;

use super::color::Hue;
use crate::error::{domain, Result};

pub const SIDE: usize = 28;
pub const PIXELS: usize = SIDE * SIDE;
/// Bytes of one RGB image, row-major, channel-last.
pub const IMAGE_BYTES: usize = PIXELS * 3;

/// Channel-last 28×28 RGB image with 8-bit channels.
pub type RgbImage = Vec<u8>;

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn check_glyph(glyph: &[f64]) -> Result<()> {
    if glyph.len() != PIXELS {
        return Err(domain(format!("glyph has {} pixels, expected {PIXELS}", glyph.len())));
    }
    if let Some(v) = glyph.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(domain(format!("glyph value {v} outside [0, 1]")));
    }
    Ok(())
}

/// Black digit composited over a saturated background: `(1 - m) · rgb(h)`,
/// channel-last floats in `[0, 1]`.
pub fn render_digit_rgb(glyph: &[f64], hue: Hue) -> Result<Vec<f64>> {
    check_glyph(glyph)?;
    let bg = hue.to_rgb();
    Ok(glyph
        .iter()
        .flat_map(|&m| bg.map(|c| (1.0 - m) * c))
        .collect())
}

pub fn render_digit_image(glyph: &[f64], hue: Hue) -> Result<RgbImage> {
    Ok(render_digit_rgb(glyph, hue)?.into_iter().map(quantize).collect())
}

pub fn render_solid(hue: Hue) -> RgbImage {
    let px = hue.to_rgb().map(quantize);
    px.iter().copied().cycle().take(IMAGE_BYTES).collect()
}

/// Each channel of each pixel uniform over the 256 levels.
pub fn render_noise(rng: &mut impl Rng) -> RgbImage {
    let mut img = vec![0u8; IMAGE_BYTES];
    rng.fill(img.as_mut_slice());
    img
}

/// MNIST byte glyph to stroke mask in `[0, 1]`.
pub fn glyph_from_bytes(bytes: &[u8]) -> Vec<f64> {
    bytes.iter().map(|&b| f64::from(b) / 255.0).collect()
}

/// Channel-last bytes to channel-first floats in `[0, 1]`.
pub fn hwc_to_chw(image: &[u8]) -> Vec<f32> {
    let mut out = vec![0.0f32; IMAGE_BYTES];
    for p in 0..PIXELS {
        for c in 0..3 {
            out[c * PIXELS + p] = f32::from(image[p * 3 + c]) / 255.0;
        }
    }
    out
}

/// Channel-first floats to channel-last bytes.
pub fn chw_to_hwc(image: &[f32]) -> RgbImage {
    let mut out = vec![0u8; IMAGE_BYTES];
    for p in 0..PIXELS {
        for c in 0..3 {
            out[p * 3 + c] = quantize(f64::from(image[c * PIXELS + p]));
        }
    }
    out
}
