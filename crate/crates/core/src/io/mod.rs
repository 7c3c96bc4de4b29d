//! File formats: PPM/PGM/PNG images, SPL1 labels, SPM1 mask stacks, SPF1 features.

mod features;
mod labels;
mod masks;
mod overlay;
mod png;
mod pnm;
mod saliency;

pub use self::features::{decode_features, encode_features, read_features, write_features};
pub use self::labels::{decode_labels, encode_labels, read_labels, write_labels, LabelRaster};
pub use self::masks::{decode_masks, encode_masks, read_masks, write_masks};
pub use self::overlay::{render_overlay, write_overlay, BOUNDARY_COLOR};
pub use self::png::{decode_png, encode_png};
pub use self::pnm::{decode_pgm, decode_ppm, encode_pgm, encode_ppm, GrayImage};
pub use self::saliency::{decode_saliency, read_saliency};

use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::Image;

/// Cursor over a byte buffer that reports offsets in its errors.
pub(crate) struct Bytes<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Bytes<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        Bytes { data, pos: 0 }
    }

    pub fn pos(&self) -> usize {
        self.pos
    }

    pub fn magic(&mut self, magic: &[u8; 4], what: &str) -> Result<()> {
        if self.data.len() < 4 || &self.data[..4] != magic {
            return Err(Error::format(0, format!("not an {what} file")));
        }
        self.pos = 4;
        Ok(())
    }

    pub fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.data.len());
        match end {
            Some(end) => {
                let s = &self.data[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::format(self.data.len(), format!("unexpected end of {what}"))),
        }
    }

    pub fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    pub fn finish(&self) -> Result<()> {
        if self.pos != self.data.len() {
            return Err(Error::format(
                self.pos,
                format!("{} trailing bytes after payload", self.data.len() - self.pos),
            ));
        }
        Ok(())
    }
}

/// Multiplies header fields, rejecting overflow.
pub(crate) fn payload_len(dims: &[u32], unit: usize, offset: usize) -> Result<usize> {
    dims.iter()
        .try_fold(unit, |acc, &d| acc.checked_mul(d as usize))
        .ok_or_else(|| Error::format(offset, "header dimensions overflow"))
}

/// Reads a PPM or PNG image, chosen by file content.
pub fn read_image(path: impl AsRef<Path>) -> Result<Image> {
    decode_image(&std::fs::read(path)?)
}

pub fn decode_image(bytes: &[u8]) -> Result<Image> {
    if bytes.starts_with(b"\x89PNG") {
        decode_png(bytes)
    } else {
        decode_ppm(bytes)
    }
}

/// Writes a PNG when the path ends in `.png`, a binary PPM otherwise.
pub fn write_image(path: impl AsRef<Path>, img: &Image) -> Result<()> {
    let path = path.as_ref();
    let is_png = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png"));
    let bytes = if is_png { encode_png(img)? } else { encode_ppm(img) };
    std::fs::write(path, bytes)?;
    Ok(())
}
