use autograd::Array;
use rand::seq::SliceRandom;

use crate::colormnist::{DatasetFile, IMAGE_BYTES, PIXELS, SIDE};
use crate::seed;

/// Channel-first `[n, 3, 28, 28]` batch of the given records.
pub fn image_batch(data: &DatasetFile, indices: &[usize]) -> Array<f32> {
    let mut out = vec![0.0f32; indices.len() * IMAGE_BYTES];
    for (k, &i) in indices.iter().enumerate() {
        let img = &data.records[i].image;
        let dst = &mut out[k * IMAGE_BYTES..(k + 1) * IMAGE_BYTES];
        for p in 0..PIXELS {
            for c in 0..3 {
                dst[c * PIXELS + p] = f32::from(img[p * 3 + c]) / 255.0;
            }
        }
    }
    Array::new(&[indices.len(), 3, SIDE, SIDE], out).expect("whole images")
}

pub fn labels(data: &DatasetFile, indices: &[usize]) -> Vec<usize> {
    indices.iter().map(|&i| usize::from(data.records[i].digit_label)).collect()
}

/// Record indices passing `keep`, optionally reduced to a seeded random
/// subset of `limit` (kept in dataset order).
pub fn select(data: &DatasetFile, keep: impl Fn(u8) -> bool, limit: Option<usize>, seed: u64, label: &str) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..data.len()).filter(|&i| keep(data.records[i].digit_label)).collect();
    if let Some(n) = limit.filter(|&n| n < idx.len()) {
        idx.shuffle(&mut seed::stream(seed, label, 0));
        idx.truncate(n);
        idx.sort_unstable();
    }
    idx
}

/// Epoch order: a permutation that depends only on `(seed, epoch)`.
pub fn epoch_order(n: usize, seed: u64, epoch: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::stream(seed, "epoch-order", epoch));
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::colormnist::{DatasetRecord, Split};

    #[test]
    fn layout_and_selection() {
        let mut image = vec![0u8; IMAGE_BYTES];
        image[3 * 5 + 1] = 255; // pixel 5, green
        let rec = |l| DatasetRecord { image: image.clone(), digit_label: l, hue_index: Some(0) };
        let d = DatasetFile { split: Split::Train, records: vec![rec(1), rec(10), rec(2), rec(11)] };
        let b = image_batch(&d, &[0, 2]);
        assert_eq!(b.shape(), &[2, 3, 28, 28]);
        assert_eq!(b.data()[PIXELS + 5], 1.0);
        assert_eq!(b.data()[IMAGE_BYTES + PIXELS + 5], 1.0);
        assert_eq!(select(&d, |l| l < 10, None, 0, "x"), vec![0, 2]);
        assert_eq!(select(&d, |_| true, Some(2), 0, "x").len(), 2);
        assert_eq!(epoch_order(10, 1, 3), epoch_order(10, 1, 3));
        assert_ne!(epoch_order(10, 1, 3), epoch_order(10, 1, 4));
    }
}
