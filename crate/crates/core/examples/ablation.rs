//! Gradient-scored channel suppression on a generator checkpoint, or on a
//! freshly initialised generator when none is given. Writes the grid under
//! `target/ablation-example/`.

use icgan::ablation::{ablation_grid, GridOptions};
use icgan::checkpoint::CheckpointBundle;
use icgan::metrics::TrainedGenerator;
use icgan::models::{Generator, GeneratorConfig, Variant};
use icgan::trainer::generator_from_bundle;

fn main() -> icgan::Result<()> {
    let generator = match std::env::args().nth(1) {
        Some(path) => generator_from_bundle(&CheckpointBundle::load(path)?)?,
        None => {
            let g = Generator::new(GeneratorConfig::full(Variant::Icgan));
            let params = g.init_params(0);
            TrainedGenerator::new(g, params)
        }
    };
    let opts = GridOptions { score_samples: 8, ..GridOptions::default() };
    let grid = ablation_grid(&generator, &[0, 3, 7], &opts)?;
    for cell in grid.cells.iter().take(17) {
        println!(
            "digit {} {:>12} {:>4}: hue shift {:.4}  digit change {:.4}  visibility {:.4}",
            cell.digit,
            cell.mode.map_or("none".to_string(), |m| format!("{m:?}").to_lowercase()),
            cell.column,
            cell.hue_shift,
            cell.digit_change,
            cell.visibility
        );
    }
    let s = grid.summary();
    println!("first five layers hue shift {:.4}, last two {:.4}", s.first_five_hue_shift, s.last_two_hue_shift);
    grid.save("target/ablation-example")?;
    println!("wrote target/ablation-example/grid.png");
    Ok(())
}
