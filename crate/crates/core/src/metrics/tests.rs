use proptest::prelude::*;

use super::*;
use crate::colormnist::{hwc_to_chw, render_digit_image, render_solid, Hue, MnistSource, IMAGE_BYTES, PIXELS};
use crate::error::Result;

fn source() -> MnistSource {
    MnistSource::synthetic_with_counts(3, [1; 10], [1; 10])
}

/// Nearest-glyph classifier reading the stroke mask as `1 - max channel`.
struct TemplateClassifier(Vec<Vec<f64>>);

impl ImageClassifier for TemplateClassifier {
    fn predict(&self, images: &[f32]) -> Result<Vec<usize>> {
        Ok(images
            .chunks(IMAGE_BYTES)
            .map(|img| {
                let m: Vec<f64> = (0..PIXELS)
                    .map(|p| 1.0 - (0..3).map(|c| f64::from(img[c * PIXELS + p])).fold(0.0, f64::max))
                    .collect();
                if m.iter().all(|&v| v < 0.05) {
                    return 10;
                }
                let dist = |t: &Vec<f64>| t.iter().zip(&m).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
                (0..10).min_by(|&a, &b| dist(&self.0[a]).total_cmp(&dist(&self.0[b]))).unwrap()
            })
            .collect())
    }
}

fn template_classifier(g: &PassThroughGenerator) -> TemplateClassifier {
    TemplateClassifier((0..10).map(|d| g.glyph(d).to_vec()).collect())
}

#[test]
fn bg_hue_of_rendered_images() {
    let solid = hwc_to_chw(&render_solid(Hue::new(0.37).unwrap()));
    let bg = extract_bg_hue(&solid).unwrap();
    assert!((bg.hue - 0.37).abs() <= 1.0 / 512.0 && !bg.degenerate);

    let src = source();
    let glyph = crate::colormnist::glyph_from_bytes(src.train.glyph(4));
    for k in [0, 13, 50, 99] {
        let h = Hue::from_index(k).unwrap();
        let img = hwc_to_chw(&render_digit_image(&glyph, h).unwrap());
        let got = extract_bg_hue(&img).unwrap().hue;
        assert!(crate::colormnist::circular_distance(got, h.value()) <= 1.0 / 512.0, "{k}: {got}");
    }
}

#[test]
fn black_image_is_degenerate() {
    let bg = extract_bg_hue(&[0.0; IMAGE_BYTES]).unwrap();
    assert!(bg.degenerate);
    assert_eq!(bg.hue, 0.0);
}

fn standard(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / n as f64).collect()
}

#[test]
fn standard_ring_aligns_trivially() {
    let a = hue_mse_best_alignment(&standard(900)).unwrap();
    assert_eq!((a.mse, a.offset, a.flip), (0.0, 0, false));
    assert!(hue_mse_best_alignment(&[]).is_err());
}

#[test]
fn linearity_of_standard_and_constant_rings() {
    let ring = standard(100);
    let a = hue_mse_best_alignment(&ring).unwrap();
    let l = linearity_report(&ring, &a).unwrap();
    assert!((l.slope - 0.01).abs() < 1e-12);
    assert!((l.r2 - 1.0).abs() < 1e-12);
    let flat = vec![0.3; 50];
    let l = linearity_report(&flat, &hue_mse_best_alignment(&flat).unwrap()).unwrap();
    assert_eq!(l.slope, 0.0);
}

#[test]
fn pass_through_ring_is_the_standard_ring() {
    let g = PassThroughGenerator::from_source(&source()).unwrap();
    let ring = generated_color_ring(&g, 0, 90, 1).unwrap();
    assert_eq!(ring.hues.len(), 90);
    assert!(!ring.unreliable);
    for (k, h) in ring.hues.iter().enumerate() {
        assert!(crate::colormnist::circular_distance(*h, k as f64 / 90.0) < 1.0 / 512.0);
    }
    let a = hue_mse_best_alignment(&ring.hues).unwrap();
    assert!(a.mse < 1e-5);
    assert!(linearity_report(&ring.hues, &a).unwrap().r2 > 0.999);
    assert_eq!(ring, generated_color_ring(&g, 0, 90, 1).unwrap());
}

#[test]
fn grey_generator_ring_is_unreliable() {
    let ring = generated_color_ring(&ConstantGenerator(vec![0.5; IMAGE_BYTES]), 0, 10, 0).unwrap();
    assert!(ring.unreliable);
    assert_eq!(ring.degenerate_steps, 10);
}

#[test]
fn discrete_accuracy_oracles() {
    let g = PassThroughGenerator::from_source(&source()).unwrap();
    let cls = template_classifier(&g);
    let good = discrete_accuracy(&g, &cls, 200, 3, 5).unwrap();
    assert!(good.value >= 0.99, "{good:?}");
    assert_eq!(good.rounds.as_ref().unwrap().len(), 3);

    let fixed = g.generate(&[crate::models::LatentCode::from_parts(3, Hue::new(0.2).unwrap(), &[0.5; 87]).unwrap()]).unwrap();
    let bad = discrete_accuracy(&ConstantGenerator(fixed), &cls, 200, 3, 5).unwrap();
    assert!(bad.value <= 0.15, "{bad:?}");
    assert!(bad.stderr >= 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn rotation_and_reversal_give_zero(n in 2usize..60, k in 0usize..60, flip: bool) {
        let mut ring = standard(n);
        ring.rotate_left(k % n);
        if flip {
            ring.reverse();
        }
        prop_assert!(hue_mse_best_alignment(&ring).unwrap().mse < 1e-20);
    }

    #[test]
    fn invariant_under_rotation_reversal_and_global_shift(
        ring in prop::collection::vec(0.0f64..1.0, 2..40),
        k in 0usize..40,
        shift in 0.0f64..1.0,
    ) {
        let base = hue_mse_best_alignment(&ring).unwrap().mse;
        prop_assert!(base >= 0.0);
        let mut rotated = ring.clone();
        rotated.rotate_left(k % ring.len());
        prop_assert!((hue_mse_best_alignment(&rotated).unwrap().mse - base).abs() < 1e-12);
        let mut reversed = ring.clone();
        reversed.reverse();
        prop_assert!((hue_mse_best_alignment(&reversed).unwrap().mse - base).abs() < 1e-12);
        // shifting the generated ring by a whole grid step equals shifting A1
        let n = ring.len();
        let step = (shift * n as f64).floor() / n as f64;
        let shifted: Vec<f64> = ring.iter().map(|h| Hue::wrapped(h + step).value()).collect();
        prop_assert!((hue_mse_best_alignment(&shifted).unwrap().mse - base).abs() < 1e-9);
    }
}
