//! Digit-code accuracy of reference generators under a trained classifier.
//!
//! ```text
//! cargo run --release --example train_classifier
//! cargo run --release --example discrete_accuracy -- target/example-classifier.ckpt
//! ```

use icgan::checkpoint::CheckpointBundle;
use icgan::colormnist::default_source;
use icgan::metrics::{discrete_accuracy, ConstantGenerator, ImageGenerator, PassThroughGenerator};
use icgan::models::make_latent;
use icgan::seed;
use icgan::trainer::classifier_from_bundle;

fn main() -> icgan::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "target/example-classifier.ckpt".into());
    let (classifier, report) = classifier_from_bundle(&CheckpointBundle::load(&path)?)?;
    println!("classifier {path}: test accuracy {:.4}", report.test_accuracy);

    let pass = PassThroughGenerator::from_source(&default_source(0)?)?;
    let r = discrete_accuracy(&pass, &classifier, 1000, 5, 0)?;
    println!("pass-through: {:.4} +- {:.4}", r.value, r.stderr);

    let seven = pass.generate(&[make_latent(Some(7), None, &mut seed::stream(0, "example", 0))?])?;
    let r = discrete_accuracy(&ConstantGenerator(seven), &classifier, 1000, 5, 0)?;
    println!("always a 7:   {:.4} +- {:.4}", r.value, r.stderr);
    Ok(())
}
