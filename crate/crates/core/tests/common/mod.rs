#![allow(dead_code)]

use std::io::Write;

use autograd::{backward, Var};
use icgan::colormnist::{build_dataset_with, DatasetFile, MnistSource, SplitTargets};
use icgan::nn::{Bound, ParamSet};
use icgan::Result;
use icgan::checkpoint::CheckpointBundle;
use icgan::colormnist::{build_dataset, default_source};
use icgan::metrics::TrainedClassifier;
use icgan::trainer::{classifier_bundle, classifier_from_bundle, train_classifier, ClassifierConfig, ClassifierReport};
use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::Instant;

/// Writes past the test harness's output capture so result lines always
/// show up in the log.
pub fn say(text: impl AsRef<str>) {
    let mut e = std::io::stderr().lock();
    let _ = writeln!(e, "{}", text.as_ref());
}

/// Collects named checks of one acceptance criterion.
pub struct Criterion {
    pub id: u32,
    pub title: &'static str,
    pub checks: Vec<(String, bool)>,
}

impl Criterion {
    pub fn new(id: u32, title: &'static str) -> Self {
        Self { id, title, checks: Vec::new() }
    }

    pub fn check(&mut self, name: impl Into<String>, ok: bool) -> bool {
        let name = name.into();
        say(format!("    [{}] {name}", if ok { "ok" } else { "FAIL" }));
        self.checks.push((name, ok));
        ok
    }

    /// Prints the verdict line and fails the test if any check failed.
    pub fn finish(self) {
        let failed: Vec<&str> = self.checks.iter().filter(|c| !c.1).map(|c| c.0.as_str()).collect();
        let verdict = if failed.is_empty() { "PASS" } else { "FAIL" };
        say(format!(
            "criterion {} ({}): {verdict} [{}/{} checks]",
            self.id,
            self.title,
            self.checks.len() - failed.len(),
            self.checks.len()
        ));
        assert!(failed.is_empty(), "criterion {} failed: {failed:?}", self.id);
    }
}

/// Relative error with a floor on the denominator.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Largest relative error between autodiff and central differences of a
/// scalar function of `params`, probing up to `per_array` entries of each
/// array. Returns `(error, "array[index]")`.
pub fn fd_param_check(
    params: &ParamSet<f64>,
    f: &dyn Fn(&Bound<f64>) -> Result<Var<f64>>,
    per_array: usize,
) -> (f64, String) {
    let bound = params.bind(true);
    let grads = bound.gradients(&backward(&f(&bound).unwrap()).unwrap());
    let h = 1e-6;
    let mut worst = (0.0, String::new());
    for (name, array) in params.iter() {
        let analytic = grads.get(name).unwrap();
        let stride = (array.len() / per_array).max(1);
        for i in (0..array.len()).step_by(stride).take(per_array) {
            let eval = |d: f64| {
                let mut p = params.clone();
                p.get_mut(name).unwrap().data_mut()[i] += d;
                f(&p.bind(false)).unwrap().item()
            };
            let numeric = (eval(h) - eval(-h)) / (2.0 * h);
            let e = rel_err(analytic.data()[i], numeric, 1e-6);
            if e > worst.0 {
                worst = (e, format!("{name}[{i}]"));
            }
        }
    }
    worst
}

/// Small ColorMNIST built from procedural glyphs.
pub fn tiny_dataset(digits: usize, seed: u64) -> (DatasetFile, DatasetFile) {
    let per = digits / 10 + 2;
    let src = MnistSource::synthetic_with_counts(seed, [per; 10], [per; 10]);
    let t = SplitTargets { digits, solid: digits / 10, noise: digits / 10 };
    build_dataset_with(&src, seed, t, t).unwrap()
}

/// FNV-1a over everything written.
pub struct HashWriter(pub u64);

impl Default for HashWriter {
    fn default() -> Self {
        Self(0xcbf2_9ce4_8422_2325)
    }
}

impl Write for HashWriter {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        for &b in buf {
            self.0 = (self.0 ^ u64::from(b)).wrapping_mul(0x100_0000_01b3);
        }
        Ok(buf.len())
    }

    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

/// Cache for the trained models of the scaled suite,
/// `$ICGAN_ACCEPTANCE_DIR` or `target/acceptance`.
pub fn cache_dir() -> PathBuf {
    let dir = std::env::var_os("ICGAN_ACCEPTANCE_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../target/acceptance"));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

pub fn full_data() -> &'static (DatasetFile, DatasetFile) {
    static DATA: OnceLock<(DatasetFile, DatasetFile)> = OnceLock::new();
    DATA.get_or_init(|| build_dataset(&default_source(0).unwrap(), 0).unwrap())
}

pub fn classifier_config(seed: u64) -> ClassifierConfig {
    ClassifierConfig { seed, subset: Some(20_000), max_epochs: 15, ..ClassifierConfig::default() }
}

/// Trained (or cached) classifier with its report and training time.
pub fn classifier(seed: u64) -> (TrainedClassifier, ClassifierReport, f64) {
    let path = cache_dir().join(format!("classifier_s{seed}.ckpt"));
    if let Ok(b) = CheckpointBundle::load(&path) {
        let (m, r) = classifier_from_bundle(&b).unwrap();
        let secs = b.manifest.config.get("seconds").and_then(|v| v.as_f64()).unwrap_or(f64::NAN);
        return (m, r, secs);
    }
    let (train, test) = full_data();
    let cfg = classifier_config(seed);
    let t0 = Instant::now();
    let (m, r) = train_classifier(&cfg, train, test).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    let mut b = classifier_bundle(&m, &cfg, &r).unwrap();
    b.manifest.config["seconds"] = secs.into();
    b.save(&path).unwrap();
    (m, r, secs)
}

