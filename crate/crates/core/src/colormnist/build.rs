use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::color::{Hue, HUE_STEPS};
use super::mnist::{GlyphSet, MnistSource};
use super::render::{glyph_from_bytes, render_digit_image, render_noise, render_solid, RgbImage};
use crate::error::{Error, Result};
use crate::seed;

pub const NUM_CLASSES: usize = 12;
pub const SOLID_LABEL: u8 = 10;
pub const NOISE_LABEL: u8 = 11;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_byte(self) -> u8 {
        match self {
            Split::Train => 0,
            Split::Test => 1,
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(Split::Train),
            1 => Some(Split::Test),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetRecord {
    /// 28×28×3, row-major, channel-last.
    pub image: RgbImage,
    pub digit_label: u8,
    /// `None` exactly for the noise class.
    pub hue_index: Option<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetFile {
    pub split: Split,
    pub records: Vec<DatasetRecord>,
}

impl DatasetFile {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn class_counts(&self) -> [usize; NUM_CLASSES] {
        let mut counts = [0; NUM_CLASSES];
        for r in &self.records {
            counts[usize::from(r.digit_label)] += 1;
        }
        counts
    }

    /// Records with digit labels 0–9 only.
    pub fn digits(&self) -> impl Iterator<Item = &DatasetRecord> {
        self.records.iter().filter(|r| r.digit_label < SOLID_LABEL)
    }
}

/// Record counts of one split.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitTargets {
    pub digits: usize,
    pub solid: usize,
    pub noise: usize,
}

impl SplitTargets {
    pub const TRAIN: Self = Self { digits: 108_503, solid: 10_850, noise: 10_850 };
    pub const TEST: Self = Self { digits: 18_103, solid: 1_810, noise: 1_810 };

    pub fn total(&self) -> usize {
        self.digits + self.solid + self.noise
    }

    /// `digits / 10` per class, the remainder going to the lowest classes.
    pub fn per_digit(&self) -> [usize; 10] {
        let (q, r) = (self.digits / 10, self.digits % 10);
        std::array::from_fn(|c| q + usize::from(c < r))
    }

    pub fn per_class(&self) -> [usize; NUM_CLASSES] {
        let d = self.per_digit();
        std::array::from_fn(|c| match c {
            0..=9 => d[c],
            10 => self.solid,
            _ => self.noise,
        })
    }

    /// Same class proportions, `1 / factor` of the size (rounded down).
    pub fn scaled(&self, factor: usize) -> Self {
        let f = factor.max(1);
        Self { digits: self.digits / f, solid: self.solid / f, noise: self.noise / f }
    }
}

/// Hue indices in consecutive blocks of 100, each block a seeded
/// permutation of the full grid, so every hue appears equally often up to
/// the final partial block.
fn stratified_hues(n: usize, seed: u64, label: &str) -> Vec<u8> {
    let mut out = Vec::with_capacity(n);
    let mut block = 0u64;
    while out.len() < n {
        let mut perm: Vec<u8> = (0..HUE_STEPS as u8).collect();
        perm.shuffle(&mut seed::stream(seed, label, block));
        let take = (n - out.len()).min(HUE_STEPS);
        out.extend_from_slice(&perm[..take]);
        block += 1;
    }
    out
}

fn build_split(glyphs: &GlyphSet, split: Split, targets: SplitTargets, seed: u64) -> Result<DatasetFile> {
    let tag = match split {
        Split::Train => "train",
        Split::Test => "test",
    };
    let mut records = Vec::with_capacity(targets.total());
    let hues = stratified_hues(targets.digits, seed, &format!("{tag}-digit-hue"));
    let mut next_hue = hues.into_iter();
    let classes = glyphs.by_class();
    for (digit, want) in targets.per_digit().into_iter().enumerate() {
        let mut pool = classes[digit].clone();
        if pool.is_empty() && want > 0 {
            return Err(Error::Construction(format!("{tag}: no source images for digit {digit}")));
        }
        pool.shuffle(&mut seed::stream(seed, &format!("{tag}-digit-order"), digit as u64));
        // cycle through the permuted class when the target exceeds the source
        for &src in pool.iter().cycle().take(want) {
            let h = next_hue.next().expect("one hue per digit record");
            let image = render_digit_image(&glyph_from_bytes(glyphs.glyph(src)), Hue::from_index(h.into())?)?;
            records.push(DatasetRecord { image, digit_label: digit as u8, hue_index: Some(h) });
        }
    }
    for h in stratified_hues(targets.solid, seed, &format!("{tag}-solid-hue")) {
        records.push(DatasetRecord {
            image: render_solid(Hue::from_index(h.into())?),
            digit_label: SOLID_LABEL,
            hue_index: Some(h),
        });
    }
    for i in 0..targets.noise {
        let mut rng = seed::stream(seed, &format!("{tag}-noise"), i as u64);
        records.push(DatasetRecord { image: render_noise(&mut rng), digit_label: NOISE_LABEL, hue_index: None });
    }
    Ok(DatasetFile { split, records })
}

/// Builds both splits at the full published sizes.
pub fn build_dataset(source: &MnistSource, seed: u64) -> Result<(DatasetFile, DatasetFile)> {
    build_dataset_with(source, seed, SplitTargets::TRAIN, SplitTargets::TEST)
}

pub fn build_dataset_with(
    source: &MnistSource,
    seed: u64,
    train: SplitTargets,
    test: SplitTargets,
) -> Result<(DatasetFile, DatasetFile)> {
    Ok((
        build_split(&source.train, Split::Train, train, seed)?,
        build_split(&source.test, Split::Test, test, seed)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> (MnistSource, SplitTargets) {
        let src = MnistSource::synthetic_with_counts(2, [4; 10], [2; 10]);
        (src, SplitTargets { digits: 203, solid: 30, noise: 25 })
    }

    #[test]
    fn per_class_targets() {
        let t = SplitTargets::TRAIN.per_class();
        assert_eq!(&t[..4], &[10_851, 10_851, 10_851, 10_850]);
        assert_eq!(t.iter().sum::<usize>(), 130_203);
        assert_eq!(SplitTargets::TEST.per_class().iter().sum::<usize>(), 21_723);
    }

    #[test]
    fn counts_labels_and_hues() {
        let (src, t) = small();
        let (train, test) = build_dataset_with(&src, 9, t, t).unwrap();
        assert_eq!(train.class_counts(), t.per_class());
        assert_eq!(test.len(), t.total());
        for r in &train.records {
            assert_eq!(r.hue_index.is_none(), r.digit_label == NOISE_LABEL);
            assert!(r.hue_index.is_none_or(|h| usize::from(h) < HUE_STEPS));
        }
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let (src, t) = small();
        let a = build_dataset_with(&src, 4, t, t).unwrap();
        assert_eq!(a, build_dataset_with(&src, 4, t, t).unwrap());
        assert_ne!(a.0, build_dataset_with(&src, 5, t, t).unwrap().0);
    }

    #[test]
    fn missing_class_is_construction_error() {
        let mut src = MnistSource::synthetic_with_counts(2, [1; 10], [1; 10]);
        src.train.labels.iter_mut().filter(|l| **l == 3).for_each(|l| *l = 4);
        let t = SplitTargets { digits: 20, solid: 0, noise: 0 };
        assert!(matches!(build_dataset_with(&src, 0, t, t), Err(Error::Construction(_))));
    }

    #[test]
    fn stratified_hues_are_balanced() {
        let hues = stratified_hues(1050, 1, "x");
        let mut counts = [0usize; HUE_STEPS];
        for h in hues {
            counts[usize::from(h)] += 1;
        }
        assert!(counts.iter().all(|&c| c == 10 || c == 11));
    }
}
