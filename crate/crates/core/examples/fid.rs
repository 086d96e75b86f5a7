//! Fréchet distance on Gaussian features with known answers, then on
//! classifier features of real images versus a constant generator.
//!
//! Pass a classifier checkpoint (e.g. from the `train_classifier` example)
//! to run the second part.

use icgan::checkpoint::CheckpointBundle;
use icgan::colormnist::{build_dataset_with, default_source, SplitTargets};
use icgan::metrics::{fid, ConstantGenerator, Features, PassThroughGenerator};
use icgan::seed;
use icgan::trainer::{classifier_from_bundle, FidProbe};
use rand_distr::{Distribution, StandardNormal};

fn gaussian(n: usize, d: usize, mean: f64, sd: f64, s: u64) -> Features {
    let mut rng = seed::stream(s, "fid-example", 0);
    let data = (0..n * d).map(|_| mean + sd * Distribution::<f64>::sample(&StandardNormal, &mut rng)).collect();
    Features::new(n, d, data).unwrap()
}

fn main() -> icgan::Result<()> {
    let d = 8;
    let a = gaussian(5000, d, 0.0, 1.0, 1);
    println!("N(0,I) vs itself:  {:.4}", fid(&a, &a)?);
    println!("N(0,I) vs N(1,I):  {:.4} (exact {d})", fid(&a, &gaussian(5000, d, 1.0, 1.0, 2))?);
    println!("N(0,I) vs N(0,4I): {:.4} (exact {d})", fid(&a, &gaussian(5000, d, 0.0, 2.0, 3))?);

    let Some(path) = std::env::args().nth(1) else {
        println!("(pass a classifier checkpoint for the feature FID part)");
        return Ok(());
    };
    let (classifier, _) = classifier_from_bundle(&CheckpointBundle::load(path)?)?;
    let source = default_source(0)?;
    let (_, test) = build_dataset_with(&source, 0, SplitTargets::TRAIN.scaled(50), SplitTargets::TEST.scaled(5))?;
    let probe = FidProbe::new(&classifier, &test, 1000, 0)?;
    let pass = PassThroughGenerator::from_source(&source)?;
    let grey = ConstantGenerator(vec![0.5; 3 * 28 * 28]);
    println!("feature FID, pass-through oracle: {:.4}", probe.evaluate(&pass)?);
    println!("feature FID, grey images:         {:.4}", probe.evaluate(&grey)?);
    Ok(())
}
