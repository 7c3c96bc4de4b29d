use std::path::Path;

use super::pnm::decode_pgm;
use super::{payload_len, Bytes};
use crate::error::{Error, Result};
use crate::prior::MaskStack;

const MAGIC: &[u8; 4] = b"SPM1";

pub fn decode_masks(bytes: &[u8]) -> Result<MaskStack> {
    let mut b = Bytes::new(bytes);
    b.magic(MAGIC, "SPM1")?;
    let n = b.u32("header")?;
    let h = b.u32("header")?;
    let w = b.u32("header")?;
    let plane = payload_len(&[h, w], 1, b.pos())?;
    payload_len(&[n, h, w], 1, b.pos())?;
    let mut masks = Vec::with_capacity(n as usize);
    for _ in 0..n {
        masks.push(b.take(plane, "mask data")?.iter().map(|&v| v != 0).collect());
    }
    b.finish()?;
    MaskStack::new(w as usize, h as usize, masks)
}

pub fn encode_masks(stack: &MaskStack) -> Vec<u8> {
    let (w, h) = stack.dims();
    let mut out = Vec::with_capacity(16 + stack.len() * w * h);
    out.extend_from_slice(MAGIC);
    for v in [stack.len(), h, w] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    for m in stack.masks() {
        out.extend(m.iter().map(|&b| b as u8));
    }
    out
}

/// Reads an SPM1 file, or a directory of P5 PGM masks taken in name order.
pub fn read_masks(path: impl AsRef<Path>) -> Result<MaskStack> {
    let path = path.as_ref();
    if !path.is_dir() {
        return decode_masks(&std::fs::read(path)?);
    }
    let mut files: Vec<_> = std::fs::read_dir(path)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")))
        .collect();
    files.sort();
    let mut dims = None;
    let mut masks = Vec::with_capacity(files.len());
    for f in &files {
        let g = decode_pgm(&std::fs::read(f)?)?;
        match dims {
            None => dims = Some((g.width, g.height)),
            Some(d) if d != (g.width, g.height) => {
                return Err(Error::DimensionMismatch {
                    expected: format!("{}x{}", d.0, d.1),
                    found: format!("{}x{} in {}", g.width, g.height, f.display()),
                });
            }
            _ => {}
        }
        masks.push(g.data.iter().map(|&v| v != 0).collect());
    }
    let (w, h) = dims.ok_or_else(|| Error::InvalidConfig(format!("no .pgm masks in {}", path.display())))?;
    MaskStack::new(w, h, masks)
}

pub fn write_masks(path: impl AsRef<Path>, stack: &MaskStack) -> Result<()> {
    std::fs::write(path, encode_masks(stack))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::pnm::{encode_pgm, GrayImage};
    use proptest::prelude::*;

    #[test]
    fn layout_and_errors() {
        let s = MaskStack::new(2, 1, vec![vec![true, false], vec![false, true]]).unwrap();
        let b = encode_masks(&s);
        assert_eq!(b.len(), 16 + 4);
        assert_eq!(&b[16..], &[1, 0, 0, 1]);
        assert!(decode_masks(b"SPL1").unwrap_err().to_string().contains("not an SPM1 file"));
        let err = decode_masks(&b[..19]).unwrap_err();
        assert!(err.to_string().contains("byte offset 19"), "{err}");
        let mut long = b.clone();
        long.push(9);
        assert!(decode_masks(&long).unwrap_err().to_string().contains("byte offset 20"));
    }

    #[test]
    fn directory_of_pgms() {
        let dir = tempfile::tempdir().unwrap();
        let a = GrayImage { width: 2, height: 2, maxval: 255, data: vec![255, 0, 0, 0] };
        let b = GrayImage { width: 2, height: 2, maxval: 255, data: vec![0, 0, 0, 7] };
        std::fs::write(dir.path().join("b.pgm"), encode_pgm(&b)).unwrap();
        std::fs::write(dir.path().join("a.pgm"), encode_pgm(&a)).unwrap();
        std::fs::write(dir.path().join("notes.txt"), "x").unwrap();
        let s = read_masks(dir.path()).unwrap();
        assert_eq!(s.masks(), &[vec![true, false, false, false], vec![false, false, false, true]]);
    }

    proptest! {
        #[test]
        fn round_trip(n in 0usize..4, w in 1usize..6, h in 1usize..6, bits in any::<u64>()) {
            let masks: Vec<Vec<bool>> = (0..n).map(|i| (0..w * h).map(|p| (bits >> ((i * 7 + p) % 64)) & 1 == 1).collect()).collect();
            let s = MaskStack::new(w, h, masks).unwrap();
            prop_assert_eq!(decode_masks(&encode_masks(&s)).unwrap(), s);
        }
    }
}
