//! ColorMNIST: MNIST digits composited over 100 saturated background hues,
//! plus a solid-color class (10) and a noise class (11).

mod build;
mod color;
mod format;
mod mnist;
mod render;

pub use build::{
    build_dataset, build_dataset_with, DatasetFile, DatasetRecord, Split, SplitTargets, NOISE_LABEL, NUM_CLASSES,
    SOLID_LABEL,
};
pub use color::{circular_distance, hsv_to_rgb, rgb_to_hsv, Hue, HUE_STEPS};
pub use format::{export_png_dir, load_dataset, read_dataset, save_dataset, write_dataset, write_png, MAGIC};
pub use mnist::{GlyphSet, MnistSource, MNIST_TEST_COUNTS, MNIST_TRAIN_COUNTS};
pub use render::{
    chw_to_hwc, glyph_from_bytes, hwc_to_chw, render_digit_image, render_digit_rgb, render_noise, render_solid,
    RgbImage, IMAGE_BYTES, PIXELS, SIDE,
};

/// Environment variable naming a directory with the MNIST IDX files.
pub const MNIST_DIR_ENV: &str = "ICGAN_MNIST_DIR";

/// Real MNIST from `$ICGAN_MNIST_DIR` when set, otherwise the procedural
/// stand-in.
pub fn default_source(seed: u64) -> crate::Result<MnistSource> {
    match std::env::var_os(MNIST_DIR_ENV) {
        Some(dir) => MnistSource::from_dir(dir),
        None => {
            log::warn!("{MNIST_DIR_ENV} not set; using synthetic glyphs");
            Ok(MnistSource::synthetic(seed))
        }
    }
}
