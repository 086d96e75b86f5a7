//! MNIST glyph sources: the original IDX files, or a procedural stand-in
//! with the same split and class sizes for environments without the data.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use flate2::read::GzDecoder;
use rand::Rng;

use super::render::{PIXELS, SIDE};
use crate::error::{Error, Result};
use crate::seed;

/// Per-class image counts of the original MNIST train split.
pub const MNIST_TRAIN_COUNTS: [usize; 10] = [5923, 6742, 5958, 6131, 5842, 5421, 5918, 6265, 5851, 5949];
/// Per-class image counts of the original MNIST test split.
pub const MNIST_TEST_COUNTS: [usize; 10] = [980, 1135, 1032, 1010, 982, 892, 958, 1028, 974, 1009];

/// One split of grayscale glyphs, 784 bytes each.
#[derive(Clone, Debug, Default)]
pub struct GlyphSet {
    pub images: Vec<u8>,
    pub labels: Vec<u8>,
}

impl GlyphSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn glyph(&self, i: usize) -> &[u8] {
        &self.images[i * PIXELS..(i + 1) * PIXELS]
    }

    /// Indices of each digit class, in file order.
    pub fn by_class(&self) -> [Vec<usize>; 10] {
        let mut out: [Vec<usize>; 10] = Default::default();
        for (i, &l) in self.labels.iter().enumerate() {
            if let Some(v) = out.get_mut(usize::from(l)) {
                v.push(i);
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct MnistSource {
    pub train: GlyphSet,
    pub test: GlyphSet,
}

fn open(dir: &Path, stem: &str) -> Result<Box<dyn Read>> {
    let plain = dir.join(stem);
    if plain.exists() {
        return Ok(Box::new(BufReader::new(File::open(plain)?)));
    }
    let gz = dir.join(format!("{stem}.gz"));
    if gz.exists() {
        return Ok(Box::new(GzDecoder::new(BufReader::new(File::open(gz)?))));
    }
    Err(Error::Io(std::io::Error::new(
        std::io::ErrorKind::NotFound,
        format!("{} (or .gz) not found", plain.display()),
    )))
}

fn read_idx(mut r: impl Read, magic: u32, what: &str) -> Result<(Vec<usize>, Vec<u8>)> {
    let mut head = [0u8; 4];
    r.read_exact(&mut head)?;
    let got = u32::from_be_bytes(head);
    if got != magic {
        return Err(Error::Format(format!("{what}: IDX magic {got:#x}, expected {magic:#x}")));
    }
    let rank = (magic & 0xff) as usize;
    let mut dims = Vec::with_capacity(rank);
    for _ in 0..rank {
        r.read_exact(&mut head)?;
        dims.push(u32::from_be_bytes(head) as usize);
    }
    let n: usize = dims.iter().product();
    let mut data = vec![0u8; n];
    r.read_exact(&mut data)
        .map_err(|e| Error::Format(format!("{what}: truncated payload ({e})")))?;
    Ok((dims, data))
}

fn read_split(dir: &Path, prefix: &str) -> Result<GlyphSet> {
    let (idims, images) = read_idx(open(dir, &format!("{prefix}-images-idx3-ubyte"))?, 0x0803, prefix)?;
    let (ldims, labels) = read_idx(open(dir, &format!("{prefix}-labels-idx1-ubyte"))?, 0x0801, prefix)?;
    if idims[1..] != [SIDE, SIDE] || idims[0] != ldims[0] {
        return Err(Error::Format(format!("{prefix}: image dims {idims:?} vs labels {ldims:?}")));
    }
    if let Some(l) = labels.iter().find(|&&l| l > 9) {
        return Err(Error::Format(format!("{prefix}: label {l} out of range")));
    }
    Ok(GlyphSet { images, labels })
}

impl MnistSource {
    /// Reads the four standard IDX files (optionally gzipped) from `dir`.
    pub fn from_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        Ok(Self {
            train: read_split(dir, "train")?,
            test: read_split(dir, "t10k")?,
        })
    }

    /// Procedural digit-like glyphs with MNIST's split and class sizes.
    /// Strokes stay inside the central 20×20 box, like MNIST.
    pub fn synthetic(seed: u64) -> Self {
        Self::synthetic_with_counts(seed, MNIST_TRAIN_COUNTS, MNIST_TEST_COUNTS)
    }

    pub fn synthetic_with_counts(seed: u64, train: [usize; 10], test: [usize; 10]) -> Self {
        let split = |counts: [usize; 10], tag: &str| {
            let mut set = GlyphSet::default();
            for (digit, &n) in counts.iter().enumerate() {
                let mut rng = seed::stream(seed, tag, digit as u64);
                for _ in 0..n {
                    set.images.extend(synthetic_glyph(digit, &mut rng));
                    set.labels.push(digit as u8);
                }
            }
            set
        };
        Self {
            train: split(train, "synthetic-train"),
            test: split(test, "synthetic-test"),
        }
    }
}

/// Polyline skeletons on a unit box, one per digit.
fn skeleton(digit: usize) -> Vec<Vec<(f64, f64)>> {
    let arc = |cx: f64, cy: f64, rx: f64, ry: f64, a0: f64, a1: f64| {
        (0..=16)
            .map(|i| {
                let a = (a0 + (a1 - a0) * i as f64 / 16.0).to_radians();
                (cx + rx * a.cos(), cy + ry * a.sin())
            })
            .collect::<Vec<_>>()
    };
    match digit {
        0 => vec![arc(0.5, 0.5, 0.32, 0.45, 0.0, 360.0)],
        1 => vec![vec![(0.35, 0.2), (0.55, 0.05), (0.55, 0.95)]],
        2 => vec![
            arc(0.5, 0.3, 0.3, 0.25, 180.0, 380.0),
            vec![(0.78, 0.38), (0.2, 0.95), (0.85, 0.95)],
        ],
        3 => vec![arc(0.48, 0.28, 0.28, 0.23, 200.0, 450.0), arc(0.48, 0.73, 0.3, 0.23, 270.0, 520.0)],
        4 => vec![vec![(0.6, 0.05), (0.15, 0.65), (0.85, 0.65)], vec![(0.65, 0.3), (0.65, 0.95)]],
        5 => vec![
            vec![(0.8, 0.05), (0.3, 0.05), (0.25, 0.45)],
            arc(0.5, 0.67, 0.3, 0.28, 220.0, 500.0),
        ],
        6 => vec![
            vec![(0.7, 0.05), (0.3, 0.5)],
            arc(0.5, 0.7, 0.28, 0.25, 0.0, 360.0),
        ],
        7 => vec![vec![(0.15, 0.05), (0.85, 0.05), (0.4, 0.95)]],
        8 => vec![arc(0.5, 0.27, 0.24, 0.22, 0.0, 360.0), arc(0.5, 0.72, 0.3, 0.23, 0.0, 360.0)],
        _ => vec![arc(0.5, 0.3, 0.27, 0.25, 0.0, 360.0), vec![(0.77, 0.3), (0.6, 0.95)]],
    }
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (qx, qy) = (a.0 + t * dx - p.0, a.1 + t * dy - p.1);
    (qx * qx + qy * qy).sqrt()
}

/// Rasterizes a jittered, slanted skeleton with a soft pen into the
/// central 20×20 box.
fn synthetic_glyph(digit: usize, rng: &mut impl Rng) -> Vec<u8> {
    let slant = rng.random_range(-0.25..0.25);
    let sx = rng.random_range(0.75..1.0);
    let sy = rng.random_range(0.85..1.0);
    let pen = rng.random_range(1.0..1.8);
    let jitter = 0.04;
    let strokes: Vec<Vec<(f64, f64)>> = skeleton(digit)
        .into_iter()
        .map(|s| {
            s.into_iter()
                .map(|(x, y)| {
                    let x = x + rng.random_range(-jitter..jitter) + slant * (0.5 - y);
                    let y = y + rng.random_range(-jitter..jitter);
                    // unit box → pixels 5..=22, leaving room for the pen
                    (14.0 + (x - 0.5) * 16.0 * sx, 14.0 + (y - 0.5) * 17.0 * sy)
                })
                .collect()
        })
        .collect();
    let mut out = vec![0u8; PIXELS];
    for y in 4..24 {
        for x in 4..24 {
            let p = (x as f64 + 0.5, y as f64 + 0.5);
            let d = strokes
                .iter()
                .flat_map(|s| s.windows(2).map(move |w| segment_distance(p, w[0], w[1])))
                .fold(f64::INFINITY, f64::min);
            let v = (pen + 0.5 - d).clamp(0.0, 1.0);
            out[y * SIDE + x] = (v * 255.0).round() as u8;
        }
    }
    out
}
