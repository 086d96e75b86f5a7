use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::build::{DatasetFile, DatasetRecord, Split};
use super::render::{IMAGE_BYTES, SIDE};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"CMNIST01";
const ABSENT_HUE: u8 = 255;
const RECORD_BYTES: usize = IMAGE_BYTES + 2;

pub fn write_dataset(file: &DatasetFile, mut w: impl Write) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&[file.split.as_byte()])?;
    w.write_all(&(file.records.len() as u64).to_le_bytes())?;
    for r in &file.records {
        if r.image.len() != IMAGE_BYTES {
            return Err(Error::Format(format!("record image has {} bytes", r.image.len())));
        }
        w.write_all(&r.image)?;
        w.write_all(&[r.digit_label, r.hue_index.unwrap_or(ABSENT_HUE)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset(mut r: impl Read) -> Result<DatasetFile> {
    let mut head = [0u8; 17];
    r.read_exact(&mut head)
        .map_err(|_| Error::Format("truncated header".into()))?;
    if &head[..8] != MAGIC {
        return Err(Error::Format(format!("bad magic {:?}", String::from_utf8_lossy(&head[..8]))));
    }
    let split = Split::from_byte(head[8]).ok_or_else(|| Error::Format(format!("bad split byte {}", head[8])))?;
    let count = u64::from_le_bytes(head[9..17].try_into().expect("8 bytes"));
    let mut records = Vec::new();
    let mut buf = vec![0u8; RECORD_BYTES];
    for i in 0..count {
        r.read_exact(&mut buf)
            .map_err(|_| Error::Format(format!("truncated: header says {count} records, payload ends at {i}")))?;
        let digit_label = buf[IMAGE_BYTES];
        if digit_label > 11 {
            return Err(Error::Format(format!("record {i}: digit label {digit_label}")));
        }
        let hue = buf[IMAGE_BYTES + 1];
        let hue_index = (hue != ABSENT_HUE).then_some(hue);
        if hue_index.is_some_and(|h| h >= 100) || hue_index.is_none() != (digit_label == 11) {
            return Err(Error::Format(format!("record {i}: hue byte {hue} with label {digit_label}")));
        }
        records.push(DatasetRecord { image: buf[..IMAGE_BYTES].to_vec(), digit_label, hue_index });
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::Format(format!("trailing bytes after {count} records")));
    }
    Ok(DatasetFile { split, records })
}

pub fn save_dataset(file: &DatasetFile, path: impl AsRef<Path>) -> Result<()> {
    write_dataset(file, BufWriter::new(File::create(path)?))
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<DatasetFile> {
    read_dataset(BufReader::new(File::open(path)?))
}

/// Writes a 28×28 RGB image as PNG.
pub fn write_png(path: impl AsRef<Path>, image: &[u8], width: usize, height: usize) -> Result<()> {
    let mut enc = png::Encoder::new(BufWriter::new(File::create(path)?), width as u32, height as u32);
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    let mut w = enc
        .write_header()
        .map_err(|e| Error::Format(format!("png: {e}")))?;
    w.write_image_data(image)
        .map_err(|e| Error::Format(format!("png: {e}")))?;
    Ok(())
}

/// One PNG per record (`{index:06}.png`) plus `labels.csv` with
/// `index,digit_label,hue_index` (empty hue for the noise class).
pub fn export_png_dir(file: &DatasetFile, dir: impl AsRef<Path>, limit: Option<usize>) -> Result<usize> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut csv = BufWriter::new(File::create(dir.join("labels.csv"))?);
    writeln!(csv, "index,digit_label,hue_index")?;
    let n = limit.unwrap_or(file.len()).min(file.len());
    for (i, r) in file.records.iter().take(n).enumerate() {
        write_png(dir.join(format!("{i:06}.png")), &r.image, SIDE, SIDE)?;
        let hue = r.hue_index.map(|h| h.to_string()).unwrap_or_default();
        writeln!(csv, "{i},{},{hue}", r.digit_label)?;
    }
    csv.flush()?;
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> DatasetFile {
        let rec = |v: u8, label: u8, hue: Option<u8>| DatasetRecord { image: vec![v; IMAGE_BYTES], digit_label: label, hue_index: hue };
        DatasetFile {
            split: Split::Test,
            records: vec![rec(1, 3, Some(42)), rec(200, 10, Some(0)), rec(77, 11, None)],
        }
    }

    fn bytes(f: &DatasetFile) -> Vec<u8> {
        let mut out = Vec::new();
        write_dataset(f, &mut out).unwrap();
        out
    }

    #[test]
    fn round_trip() {
        let f = sample();
        let b = bytes(&f);
        assert_eq!(b.len(), 17 + 3 * RECORD_BYTES);
        assert_eq!(read_dataset(b.as_slice()).unwrap(), f);
    }

    #[test]
    fn wrong_magic() {
        let mut b = bytes(&sample());
        b[0] = b'X';
        assert!(matches!(read_dataset(b.as_slice()), Err(Error::Format(_))));
    }

    #[test]
    fn count_larger_than_payload() {
        let mut b = bytes(&sample());
        b[9..17].copy_from_slice(&4u64.to_le_bytes());
        let err = read_dataset(b.as_slice()).unwrap_err();
        assert!(err.to_string().contains("truncated"), "{err}");
    }

    #[test]
    fn count_smaller_than_payload() {
        let mut b = bytes(&sample());
        b[9..17].copy_from_slice(&2u64.to_le_bytes());
        assert!(matches!(read_dataset(b.as_slice()), Err(Error::Format(_))));
    }

    #[test]
    fn png_export_with_manifest() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(export_png_dir(&sample(), dir.path(), None).unwrap(), 3);
        let csv = fs::read_to_string(dir.path().join("labels.csv")).unwrap();
        assert_eq!(csv, "index,digit_label,hue_index\n0,3,42\n1,10,0\n2,11,\n");
        let dec = png::Decoder::new(BufReader::new(File::open(dir.path().join("000002.png")).unwrap()));
        let mut reader = dec.read_info().unwrap();
        let mut buf = vec![0; reader.output_buffer_size().unwrap()];
        reader.next_frame(&mut buf).unwrap();
        assert_eq!(&buf[..IMAGE_BYTES], &[77; IMAGE_BYTES][..]);
    }
}
