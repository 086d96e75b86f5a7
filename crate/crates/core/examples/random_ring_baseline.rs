//! Best-aligned Hue MSE of randomly permuted hue rings.

use icgan::metrics::random_ring_baseline;

fn main() -> icgan::Result<()> {
    let trials: usize = std::env::args().nth(1).map_or(1000, |s| s.parse().expect("trials"));
    for n in [10, 30, 100, 300] {
        let (mean, stderr) = random_ring_baseline(n, trials, 0)?;
        println!("N = {n:>3}: {mean:.5} +- {stderr:.5}  ({:.2} degrees)", mean * 360.0);
    }
    Ok(())
}
