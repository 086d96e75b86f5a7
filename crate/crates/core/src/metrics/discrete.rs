use super::models::{ImageClassifier, ImageGenerator};
use super::report::{mean_stderr, MetricKind, MetricReport};
use crate::error::{domain, Result};
use crate::models::{make_latent, LatentCode, CAT_DIM};
use crate::seed;

/// Fraction of generated images whose predicted class is the digit in
/// their code, over `rounds` rounds of `n` images (digits cycled 0..9,
/// random hue and noise).
pub fn discrete_accuracy(
    generator: &impl ImageGenerator,
    classifier: &impl ImageClassifier,
    n: usize,
    rounds: usize,
    seed: u64,
) -> Result<MetricReport> {
    if n == 0 || rounds == 0 {
        return Err(domain("discrete_accuracy needs n > 0 and rounds > 0"));
    }
    let mut accs = Vec::with_capacity(rounds);
    let mut hits = [0usize; CAT_DIM];
    let mut totals = [0usize; CAT_DIM];
    for r in 0..rounds {
        let mut rng = seed::stream(seed, "discrete-accuracy", r as u64);
        let codes: Vec<LatentCode> = (0..n)
            .map(|i| make_latent(Some(i % CAT_DIM), None, &mut rng))
            .collect::<Result<_>>()?;
        let predicted = classifier.predict(&generator.generate(&codes)?)?;
        let mut correct = 0;
        for (c, &p) in codes.iter().zip(&predicted) {
            totals[c.digit] += 1;
            if p == c.digit {
                correct += 1;
                hits[c.digit] += 1;
            }
        }
        accs.push(correct as f64 / n as f64);
    }
    let (mean, stderr) = mean_stderr(&accs);
    let mut report = MetricReport::new(MetricKind::DiscreteAcc, mean, stderr, n * rounds);
    report.per_class = Some(hits.iter().zip(&totals).map(|(&h, &t)| if t > 0 { h as f64 / t as f64 } else { 0.0 }).collect());
    report.rounds = Some(accs);
    Ok(report)
}
