//! Hue MSE and linearity of a color ring: the pass-through oracle against
//! a generator whose hue response is warped.

use icgan::colormnist::{default_source, hwc_to_chw, render_digit_image, Hue};
use icgan::metrics::*;
use icgan::models::LatentCode;

/// Renders digits like the oracle but bends the hue response.
struct Warped(PassThroughGenerator);

impl ImageGenerator for Warped {
    fn generate(&self, codes: &[LatentCode]) -> icgan::Result<Vec<f32>> {
        let mut out = Vec::new();
        for c in codes {
            let col = c.c_col();
            let (h, _, _) = icgan::colormnist::rgb_to_hsv([col[0], col[1], col[2]]);
            let bent = h + 0.08 * (std::f64::consts::TAU * h).sin();
            out.extend(hwc_to_chw(&render_digit_image(self.0.glyph(c.digit), Hue::wrapped(bent))?));
        }
        Ok(out)
    }
}

fn main() -> icgan::Result<()> {
    let pass = PassThroughGenerator::from_source(&default_source(0)?)?;
    let steps = 300;
    for (name, ring) in [
        ("pass-through", generated_color_ring(&pass, 2, steps, 0)?),
        ("warped", generated_color_ring(&Warped(pass.clone()), 2, steps, 0)?),
    ] {
        let al = hue_mse_best_alignment(&ring.hues)?;
        let lin = linearity_report(&ring.hues, &al)?;
        println!(
            "{name:>12}: Hue MSE {:.6} ({:.3} deg), offset {}, flip {}, slope {:.5}, R^2 {:.5}",
            al.mse, al.degrees, al.offset, al.flip, lin.slope, lin.r2
        );
    }
    Ok(())
}
