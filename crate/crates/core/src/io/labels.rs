use std::path::Path;

use super::{payload_len, Bytes};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"SPL1";

/// A raster of 32-bit labels as stored in SPL1 files.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelRaster {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u32>,
}

impl LabelRaster {
    pub fn new(width: usize, height: usize, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: format!("{} labels", width * height),
                found: format!("{} labels", labels.len()),
            });
        }
        Ok(LabelRaster { width, height, labels })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }
}

pub fn decode_labels(bytes: &[u8]) -> Result<LabelRaster> {
    let mut b = Bytes::new(bytes);
    b.magic(MAGIC, "SPL1")?;
    let h = b.u32("header")?;
    let w = b.u32("header")?;
    let n = payload_len(&[h, w], 4, b.pos())?;
    let raw = b.take(n, "label data")?;
    b.finish()?;
    let labels = raw
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(LabelRaster {
        width: w as usize,
        height: h as usize,
        labels,
    })
}

pub fn encode_labels(width: usize, height: usize, labels: &[u32]) -> Vec<u8> {
    assert_eq!(labels.len(), width * height);
    let mut out = Vec::with_capacity(12 + 4 * labels.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(height as u32).to_le_bytes());
    out.extend_from_slice(&(width as u32).to_le_bytes());
    for l in labels {
        out.extend_from_slice(&l.to_le_bytes());
    }
    out
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<LabelRaster> {
    decode_labels(&std::fs::read(path)?)
}

pub fn write_labels(path: impl AsRef<Path>, width: usize, height: usize, labels: &[u32]) -> Result<()> {
    std::fs::write(path, encode_labels(width, height, labels))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::UNCERTAIN;
    use proptest::prelude::*;

    #[test]
    fn two_by_two_layout() {
        let b = encode_labels(2, 2, &[0, 1, 1, UNCERTAIN]);
        assert_eq!(b.len(), 28);
        assert_eq!(&b[24..], &[0xff; 4]);
        assert_eq!(&b[..12], b"SPL1\x02\x00\x00\x00\x02\x00\x00\x00");
    }

    #[test]
    fn wrong_magic() {
        let err = decode_labels(b"SPM1\0\0\0\0\0\0\0\0").unwrap_err();
        assert!(err.to_string().contains("not an SPL1 file"));
    }

    #[test]
    fn short_and_long_payloads() {
        let b = encode_labels(2, 1, &[5, 6]);
        let err = decode_labels(&b[..b.len() - 1]).unwrap_err();
        assert!(err.to_string().contains("byte offset 19"), "{err}");
        let mut long = b.clone();
        long.push(0);
        let err = decode_labels(&long).unwrap_err();
        assert!(err.to_string().contains("byte offset 20"), "{err}");
    }

    proptest! {
        #[test]
        fn round_trip(w in 0usize..9, h in 0usize..9, seed in any::<u64>()) {
            let labels: Vec<u32> = (0..w * h).map(|i| (seed.rotate_left(i as u32) as u32) | (i as u32 & 1) * UNCERTAIN).collect();
            let bytes = encode_labels(w, h, &labels);
            let back = decode_labels(&bytes).unwrap();
            prop_assert_eq!(back, LabelRaster { width: w, height: h, labels });
        }
    }
}
