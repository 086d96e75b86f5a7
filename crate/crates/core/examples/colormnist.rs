//! Builds a reduced ColorMNIST, reports class counts and hue balance, and
//! exports a few records as PNG.
//!
//! ```text
//! ICGAN_MNIST_DIR=/path/to/mnist cargo run --release --example colormnist -- out/ 20
//! ```
//! Without `ICGAN_MNIST_DIR` procedural glyphs stand in for MNIST.

use icgan::colormnist::*;

fn main() -> icgan::Result<()> {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let out = args.next().unwrap_or_else(|| "target/colormnist-example".into());
    let scale: usize = args.next().map_or(20, |s| s.parse().expect("scale"));

    let source = default_source(0)?;
    let (train, test) = build_dataset_with(&source, 0, SplitTargets::TRAIN.scaled(scale), SplitTargets::TEST.scaled(scale))?;
    println!("train {} records {:?}", train.len(), train.class_counts());
    println!("test  {} records {:?}", test.len(), test.class_counts());

    let mut hues = [0usize; HUE_STEPS];
    for r in train.digits() {
        hues[r.hue_index.unwrap() as usize] += 1;
    }
    println!("hue counts per grid hue: min {} max {}", hues.iter().min().unwrap(), hues.iter().max().unwrap());

    std::fs::create_dir_all(&out)?;
    save_dataset(&train, format!("{out}/train.cmnist"))?;
    let n = export_png_dir(&test, format!("{out}/png"), Some(24))?;
    println!("wrote {out}/train.cmnist and {n} PNGs under {out}/png");
    Ok(())
}
