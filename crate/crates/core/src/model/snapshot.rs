//! Flat versioned binary model snapshots.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//!   magic          8 bytes   "ADMOESNP"
//!   version        u32       currently 1
//!   config length  u32
//!   config         JSON bytes (ModelConfig with hidden resolved)
//!   tensor count   u32
//!   per tensor:    name length u16, name bytes, rows u32, cols u32
//!   data:          row-major f64 per tensor, manifest order
//! ```
//!
//! Parameters are stored as raw f64 bits, so a save/load cycle is bitwise
//! exact.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::{cast, to_f64, Scalar};

use super::{AdmoeModel, ModelConfig};

const MAGIC: &[u8; 8] = b"ADMOESNP";
const VERSION: u32 = 1;

pub fn save_snapshot<T: Scalar>(model: &AdmoeModel<T>, path: impl AsRef<Path>) -> Result<()> {
    let mut out: Vec<u8> = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());

    let config = serde_json::to_vec(&model.config)
        .map_err(|e| Error::Snapshot(format!("config serialization: {e}")))?;
    out.extend_from_slice(&(config.len() as u32).to_le_bytes());
    out.extend_from_slice(&config);

    let blocks = model.param_blocks();
    let shapes = tensor_shapes(model);
    debug_assert_eq!(blocks.len(), shapes.len());
    out.extend_from_slice(&(blocks.len() as u32).to_le_bytes());
    for (b, (rows, cols)) in blocks.iter().zip(&shapes) {
        let name = b.name.as_bytes();
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name);
        out.extend_from_slice(&(*rows as u32).to_le_bytes());
        out.extend_from_slice(&(*cols as u32).to_le_bytes());
    }
    for b in &blocks {
        for &x in b.data {
            out.extend_from_slice(&to_f64(x).to_le_bytes());
        }
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn load_snapshot<T: Scalar>(path: impl AsRef<Path>) -> Result<AdmoeModel<T>> {
    let bytes = fs::read(path)?;
    let mut cur = Cursor::new(&bytes);

    if cur.take(8)? != MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let version = cur.u32()?;
    if version != VERSION {
        return Err(Error::Snapshot(format!(
            "unsupported snapshot version {version} (expected {VERSION})"
        )));
    }
    let config_len = cur.u32()? as usize;
    let config: ModelConfig = serde_json::from_slice(cur.take(config_len)?)
        .map_err(|e| Error::Snapshot(format!("config parse: {e}")))?;

    let mut model = AdmoeModel::new(config, 0)?;

    let count = cur.u32()? as usize;
    let mut manifest = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = cur.u16()? as usize;
        let name = String::from_utf8(cur.take(name_len)?.to_vec())
            .map_err(|e| Error::Snapshot(format!("tensor name: {e}")))?;
        let rows = cur.u32()? as usize;
        let cols = cur.u32()? as usize;
        manifest.push((name, rows, cols));
    }

    let expected = tensor_shapes(&model);
    let mut blocks = model.param_blocks_mut();
    if blocks.len() != count {
        return Err(Error::Snapshot(format!(
            "tensor count mismatch: file has {count}, model has {}",
            blocks.len()
        )));
    }
    for ((block, shape), (name, rows, cols)) in blocks.iter_mut().zip(&expected).zip(&manifest) {
        if &block.name != name || shape.0 != *rows || shape.1 != *cols {
            return Err(Error::Snapshot(format!(
                "manifest mismatch for `{name}` ({rows}×{cols}); model expects `{}` ({}×{})",
                block.name, shape.0, shape.1
            )));
        }
        for dst in block.data.iter_mut() {
            let raw = cur.take(8)?;
            *dst = cast(f64::from_le_bytes(raw.try_into().unwrap()));
        }
    }
    if cur.remaining() != 0 {
        return Err(Error::Snapshot(format!(
            "{} trailing bytes after parameter data",
            cur.remaining()
        )));
    }
    drop(blocks);
    Ok(model)
}

/// Logical (rows, cols) per parameter block, in block order. Bias vectors
/// are 1×len.
fn tensor_shapes<T: Scalar>(model: &AdmoeModel<T>) -> Vec<(usize, usize)> {
    let mut shapes = Vec::new();
    for l in &model.trunk {
        shapes.push((l.in_dim(), l.out_dim()));
        shapes.push((1, l.out_dim()));
    }
    if let Some(e) = &model.embedding {
        shapes.push((e.sources(), e.dim()));
    }
    if let Some(g) = &model.gate {
        shapes.push((g.linear.in_dim(), g.linear.out_dim()));
        shapes.push((1, g.linear.out_dim()));
    }
    if let Some(bank) = &model.experts {
        for ex in &bank.experts {
            shapes.push((ex.in_dim(), ex.out_dim()));
            shapes.push((1, ex.out_dim()));
        }
    }
    shapes.push((model.head.in_dim(), model.head.out_dim()));
    shapes.push((1, model.head.out_dim()));
    shapes
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Cursor { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Snapshot("unexpected end of file".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}
