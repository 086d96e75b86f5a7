//! Anti-aliased downsampling: max-pool, binomial blur, stride 2. Shifting
//! the input by two pixels shifts the output by one.

use autograd::{Array, Var};

fn pool(data: &[f64], w: usize) -> Vec<f64> {
    let x = Var::<f64>::constant(Array::from_f64(&[1, 1, w, w], data).unwrap());
    x.blur_pool().unwrap().value().to_f64_vec()
}

fn main() {
    let w = 12;
    let big: Vec<f64> = (0..(w + 2) * (w + 2)).map(|i| ((i * 37) % 11) as f64 / 10.0).collect();
    let crop = |dx: usize| -> Vec<f64> { (0..w * w).map(|k| big[(k / w) * (w + 2) + k % w + dx]).collect() };
    let (a, b) = (pool(&crop(0), w), pool(&crop(2), w));
    let out = w / 2;
    println!("input {w}x{w} -> output {out}x{out}");
    for y in 0..out {
        let row_a: Vec<String> = (0..out).map(|x| format!("{:.2}", a[y * out + x])).collect();
        let row_b: Vec<String> = (0..out).map(|x| format!("{:.2}", b[y * out + x])).collect();
        println!("{}   |   {}", row_a.join(" "), row_b.join(" "));
    }
    let interior = 1..=(w - 5) / 2;
    let worst = interior
        .clone()
        .flat_map(|y| interior.clone().map(move |x| (y, x)))
        .filter(|&(_, x)| x + 1 <= (w - 5) / 2)
        .map(|(y, x)| (b[y * out + x] - a[y * out + x + 1]).abs())
        .fold(0.0, f64::max);
    println!("interior mismatch after a 2-pixel shift: {worst:.2e}");
}
