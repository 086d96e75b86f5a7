//! Binary checkpoint container: a JSON manifest followed by named
//! little-endian `f32` arrays.
//!
//! Layout: `"ICGANCKP"`, `u32` manifest length, manifest JSON, `u32` array
//! count, then per array `u32` name length, UTF-8 name, `u32` rank, `u64`
//! dims, `f32` values. All integers little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use autograd::Array;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::ParamSet;
use crate::seed::fnv1a;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"ICGANCKP";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    /// `"gan"` or `"classifier"`.
    pub kind: String,
    pub spec_hash: String,
    pub step: u64,
    pub epoch: u64,
    /// Configuration echo.
    pub config: serde_json::Value,
    /// Trainer state that is not an array (optimizer step counts, LR scale).
    #[serde(default)]
    pub state: serde_json::Value,
}

pub fn spec_hash(arch: &str) -> String {
    format!("{:016x}", fnv1a(arch.as_bytes()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckpointBundle {
    pub manifest: Manifest,
    pub arrays: ParamSet,
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u32::from_le_bytes(b))
}

fn truncated(e: std::io::Error) -> Error {
    Error::Format(format!("truncated checkpoint: {e}"))
}

impl CheckpointBundle {
    pub fn write(&self, mut w: impl Write) -> Result<()> {
        w.write_all(CHECKPOINT_MAGIC)?;
        let manifest = serde_json::to_vec(&self.manifest)?;
        w.write_all(&(manifest.len() as u32).to_le_bytes())?;
        w.write_all(&manifest)?;
        w.write_all(&(self.arrays.len() as u32).to_le_bytes())?;
        for (name, a) in self.arrays.iter() {
            w.write_all(&(name.len() as u32).to_le_bytes())?;
            w.write_all(name.as_bytes())?;
            w.write_all(&(a.ndim() as u32).to_le_bytes())?;
            for &d in a.shape() {
                w.write_all(&(d as u64).to_le_bytes())?;
            }
            for v in a.data() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(truncated)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(Error::Format("not a checkpoint (bad magic)".into()));
        }
        let len = read_u32(&mut r)? as usize;
        let mut manifest = vec![0u8; len];
        r.read_exact(&mut manifest).map_err(truncated)?;
        let manifest: Manifest = serde_json::from_slice(&manifest)?;
        let count = read_u32(&mut r)?;
        let mut arrays = ParamSet::new();
        for _ in 0..count {
            let mut name = vec![0u8; read_u32(&mut r)? as usize];
            r.read_exact(&mut name).map_err(truncated)?;
            let name = String::from_utf8(name).map_err(|_| Error::Format("array name is not UTF-8".into()))?;
            let rank = read_u32(&mut r)? as usize;
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                let mut b = [0u8; 8];
                r.read_exact(&mut b).map_err(truncated)?;
                shape.push(u64::from_le_bytes(b) as usize);
            }
            let mut bytes = vec![0u8; autograd::numel(&shape) * 4];
            r.read_exact(&mut bytes).map_err(truncated)?;
            let data = bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                .collect();
            arrays.insert(name, Array::new(&shape, data)?);
        }
        Ok(Self { manifest, arrays })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        // write-then-rename so an interrupted save never leaves a torn file
        let tmp = path.with_extension("tmp");
        self.write(BufWriter::new(File::create(&tmp)?))?;
        std::fs::rename(tmp, path)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read(BufReader::new(File::open(path)?))
    }

    /// Loads and checks the model kind and architecture hash.
    pub fn load_verified(path: impl AsRef<Path>, kind: &str, arch: &str) -> Result<Self> {
        let b = Self::load(path)?;
        b.verify(kind, arch)?;
        Ok(b)
    }

    pub fn verify(&self, kind: &str, arch: &str) -> Result<()> {
        if self.manifest.kind != kind {
            return Err(Error::Format(format!("checkpoint holds a {}, expected a {kind}", self.manifest.kind)));
        }
        let want = spec_hash(arch);
        if self.manifest.spec_hash != want {
            return Err(Error::Format(format!(
                "architecture hash {} does not match {want} ({arch})",
                self.manifest.spec_hash
            )));
        }
        Ok(())
    }
}
