//! Short adversarial run of a narrow ICGAN next to its no-IC twin, with
//! checkpoints and run logs under `target/train-icgan-example/`.
//!
//! ```text
//! cargo run --release --example train_icgan -- 300
//! ```

use icgan::colormnist::{build_dataset_with, default_source, SplitTargets};
use icgan::models::{GeneratorConfig, TrunkConfig, Variant};
use icgan::trainer::{train_run, RunOptions, TrainConfig};

fn main() -> icgan::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let steps: u64 = std::env::args().nth(1).map_or(300, |s| s.parse().expect("steps"));
    let source = default_source(0)?;
    let (train, _) = build_dataset_with(&source, 0, SplitTargets::TRAIN.scaled(20), SplitTargets::TEST.scaled(20))?;

    for variant in [Variant::Icgan, Variant::NoIc] {
        let cfg = TrainConfig {
            batch_size: 32,
            epochs: 10,
            max_steps: Some(steps),
            eval_every: 0,
            generator: GeneratorConfig { widths: [64, 32, 16, 8], variant },
            discriminator: TrunkConfig { widths: [8, 16, 32], features: 64 },
            ..TrainConfig::default()
        };
        let dir = format!("target/train-icgan-example/{}", variant.as_str());
        let out = train_run(&cfg, &train, RunOptions { out_dir: Some(dir.as_ref()), ..Default::default() })?;
        let recs: Vec<_> = out.log.steps().collect();
        let tail = &recs[recs.len().saturating_sub(20)..];
        let mean = |f: fn(&icgan::trainer::StepRecord) -> f64| tail.iter().map(|r| f(r)).sum::<f64>() / tail.len() as f64;
        println!(
            "{:>6}: {} steps, last-20 means: d_loss {:.3} gp {:.3} cat {:.3} con {:.4}  ({dir})",
            variant.as_str(),
            out.state.step,
            mean(|r| r.d_loss),
            mean(|r| r.gp),
            mean(|r| r.cat_loss),
            mean(|r| r.con_loss),
        );
    }
    Ok(())
}
