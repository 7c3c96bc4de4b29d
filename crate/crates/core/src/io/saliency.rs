use std::path::Path;

use super::features::decode_features;
use super::pnm::decode_pgm;
use crate::adaptive::SaliencyMap;
use crate::error::{Error, Result};

/// Saliency from a P5 PGM (scaled by maxval) or a single-channel SPF1 file.
pub fn decode_saliency(bytes: &[u8]) -> Result<SaliencyMap> {
    if bytes.starts_with(b"SPF1") {
        let f = decode_features(bytes)?;
        if f.depth() != 1 {
            return Err(Error::InvalidConfig(format!("saliency needs one channel, file has {}", f.depth())));
        }
        return SaliencyMap::new(f.width(), f.height(), f.data().iter().map(|&v| v as f64).collect());
    }
    let g = decode_pgm(bytes)?;
    let m = g.maxval as f64;
    SaliencyMap::new(g.width, g.height, g.data.iter().map(|&v| v as f64 / m).collect())
}

pub fn read_saliency(path: impl AsRef<Path>) -> Result<SaliencyMap> {
    decode_saliency(&std::fs::read(path)?)
}
