use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Number of background hues in the dataset grid.
pub const HUE_STEPS: usize = 100;

/// Hue coordinate of HSV (saturation and value fixed at 1), in `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Hue(f64);

impl Hue {
    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&value) {
            return Err(domain(format!("hue {value} outside [0, 1)")));
        }
        Ok(Self(value))
    }

    /// Wraps any finite value onto the hue circle.
    pub fn wrapped(value: f64) -> Self {
        let v = value.rem_euclid(1.0);
        Self(if v >= 1.0 { 0.0 } else { v })
    }

    /// Grid hue `index / 100`.
    pub fn from_index(index: usize) -> Result<Self> {
        if index >= HUE_STEPS {
            return Err(domain(format!("hue index {index} >= {HUE_STEPS}")));
        }
        Ok(Self(index as f64 / HUE_STEPS as f64))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn to_rgb(self) -> [f64; 3] {
        hsv_to_rgb_unchecked(self.0)
    }
}

/// HSV → RGB at full saturation and value.
pub fn hsv_to_rgb(h: f64) -> Result<[f64; 3]> {
    Ok(Hue::new(h)?.to_rgb())
}

fn hsv_to_rgb_unchecked(h: f64) -> [f64; 3] {
    let h6 = h * 6.0;
    let sector = (h6.floor() as i64).rem_euclid(6);
    let f = h6 - h6.floor();
    let (q, t) = (1.0 - f, f);
    match sector {
        0 => [1.0, t, 0.0],
        1 => [q, 1.0, 0.0],
        2 => [0.0, 1.0, t],
        3 => [0.0, q, 1.0],
        4 => [t, 0.0, 1.0],
        _ => [1.0, 0.0, q],
    }
}

/// RGB → (hue in `[0,1)`, saturation, value). Hue is 0 for greys.
pub fn rgb_to_hsv(rgb: [f64; 3]) -> (f64, f64, f64) {
    let [r, g, b] = rgb;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    if delta <= 0.0 {
        return (0.0, s, max);
    }
    let h = if max == r {
        ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        (b - r) / delta + 2.0
    } else {
        (r - g) / delta + 4.0
    };
    (Hue::wrapped(h / 6.0).value(), s, max)
}

/// Circular distance on the unit hue circle, in `[0, 0.5]`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).abs().rem_euclid(1.0);
    d.min(1.0 - d)
}
