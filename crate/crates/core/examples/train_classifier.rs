//! Trains the 12-way evaluation classifier on a ColorMNIST subset.
//!
//! ```text
//! ICGAN_MNIST_DIR=/path/to/mnist cargo run --release --example train_classifier -- 4000 2
//! ```

use icgan::colormnist::{build_dataset_with, default_source, SplitTargets};
use icgan::trainer::{classifier_bundle, train_classifier, ClassifierConfig};

fn main() -> icgan::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut args = std::env::args().skip(1);
    let subset: usize = args.next().map_or(4000, |s| s.parse().expect("subset"));
    let epochs: u64 = args.next().map_or(2, |s| s.parse().expect("epochs"));

    let source = default_source(0)?;
    let (train, test) = build_dataset_with(&source, 0, SplitTargets::TRAIN.scaled(10), SplitTargets::TEST.scaled(10))?;
    let cfg = ClassifierConfig { subset: Some(subset), test_subset: Some(2000), max_epochs: epochs, ..ClassifierConfig::default() };
    let (model, report) = train_classifier(&cfg, &train, &test)?;
    println!("accuracy {:.4} after {} epochs", report.test_accuracy, report.epochs);
    for (class, acc) in report.per_class.iter().enumerate() {
        println!("  class {class:>2}: {acc:.3}");
    }
    let path = "target/example-classifier.ckpt";
    classifier_bundle(&model, &cfg, &report)?.save(path)?;
    println!("saved {path}");
    Ok(())
}
