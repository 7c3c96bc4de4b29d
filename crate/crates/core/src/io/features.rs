use std::path::Path;

use super::{payload_len, Bytes};
use crate::error::{Error, Result};
use crate::raster::FeatureStack;

const MAGIC: &[u8; 4] = b"SPF1";

pub fn decode_features(bytes: &[u8]) -> Result<FeatureStack> {
    let mut b = Bytes::new(bytes);
    b.magic(MAGIC, "SPF1")?;
    let h = b.u32("header")?;
    let w = b.u32("header")?;
    let d = b.u32("header")?;
    let n = payload_len(&[h, w, d], 4, b.pos())?;
    let start = b.pos();
    let raw = b.take(n, "feature data")?;
    b.finish()?;
    let mut data = Vec::with_capacity(n / 4);
    for (i, c) in raw.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
        if !v.is_finite() {
            return Err(Error::format(start + 4 * i, "non-finite feature"));
        }
        data.push(v);
    }
    FeatureStack::new(w as usize, h as usize, d as usize, data)
}

pub fn encode_features(f: &FeatureStack) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 4 * f.data().len());
    out.extend_from_slice(MAGIC);
    for v in [f.height(), f.width(), f.depth()] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    for v in f.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn read_features(path: impl AsRef<Path>) -> Result<FeatureStack> {
    decode_features(&std::fs::read(path)?)
}

pub fn write_features(path: impl AsRef<Path>, f: &FeatureStack) -> Result<()> {
    std::fs::write(path, encode_features(f))?;
    Ok(())
}
