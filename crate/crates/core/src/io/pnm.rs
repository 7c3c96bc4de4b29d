use super::Bytes;
use crate::error::{Error, Result};
use crate::raster::Image;

/// Single-channel image with its maxval.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub data: Vec<u16>,
}

fn header_token(b: &mut Bytes<'_>) -> Result<usize> {
    // skip whitespace and comments
    loop {
        let at = b.pos();
        let c = b.take(1, "header")?[0];
        if c == b'#' {
            while b.take(1, "header")?[0] != b'\n' {}
        } else if !c.is_ascii_whitespace() {
            let mut v = (c as char)
                .to_digit(10)
                .ok_or_else(|| Error::format(at, format!("unexpected byte 0x{c:02x} in header")))? as usize;
            loop {
                let at = b.pos();
                let c = b.take(1, "header")?[0];
                if c.is_ascii_whitespace() {
                    return Ok(v);
                }
                let d = (c as char)
                    .to_digit(10)
                    .ok_or_else(|| Error::format(at, format!("unexpected byte 0x{c:02x} in header")))?;
                v = v
                    .checked_mul(10)
                    .and_then(|v| v.checked_add(d as usize))
                    .ok_or_else(|| Error::format(at, "header number too large"))?;
            }
        }
    }
}

fn header<'a>(bytes: &'a [u8], magic: &[u8; 2], what: &str) -> Result<(Bytes<'a>, usize, usize, u16)> {
    if bytes.len() < 2 || &bytes[..2] != magic {
        return Err(Error::format(0, format!("not a binary {what} file")));
    }
    let mut b = Bytes::new(bytes);
    b.take(2, "header")?;
    let at = b.pos();
    let w = header_token(&mut b)?;
    let h = header_token(&mut b)?;
    let maxval = header_token(&mut b)?;
    if w == 0 || h == 0 {
        return Err(Error::format(at, format!("empty {what} image {w}x{h}")));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::format(at, format!("maxval {maxval} out of range")));
    }
    Ok((b, w, h, maxval as u16))
}

fn samples(b: &mut Bytes<'_>, count: usize, maxval: u16) -> Result<Vec<u16>> {
    let wide = maxval > 255;
    let n = count
        .checked_mul(if wide { 2 } else { 1 })
        .ok_or_else(|| Error::format(b.pos(), "header dimensions overflow"))?;
    let raw = b.take(n, "pixel data")?;
    let out: Vec<u16> = if wide {
        raw.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
    } else {
        raw.iter().map(|&v| v as u16).collect()
    };
    if let Some(i) = out.iter().position(|&v| v > maxval) {
        return Err(Error::format(b.pos() - n + i * (1 + wide as usize), format!("sample exceeds maxval {maxval}")));
    }
    b.finish()?;
    Ok(out)
}

/// Decodes a binary PPM (P6). Samples are rescaled to 0..=255 when maxval differs.
pub fn decode_ppm(bytes: &[u8]) -> Result<Image> {
    let (mut b, w, h, maxval) = header(bytes, b"P6", "PPM")?;
    let n = w.checked_mul(h).and_then(|n| n.checked_mul(3)).ok_or_else(|| Error::format(0, "header dimensions overflow"))?;
    let s = samples(&mut b, n, maxval)?;
    let rgb = if maxval == 255 {
        s.into_iter().map(|v| v as u8).collect()
    } else {
        s.into_iter()
            .map(|v| ((v as u32 * 255 + maxval as u32 / 2) / maxval as u32) as u8)
            .collect()
    };
    Image::from_rgb(w, h, rgb)
}

pub fn encode_ppm(img: &Image) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.rgb());
    out
}

/// Decodes a binary PGM (P5), 8 or 16 bit.
pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let (mut b, w, h, maxval) = header(bytes, b"P5", "PGM")?;
    let n = w.checked_mul(h).ok_or_else(|| Error::format(0, "header dimensions overflow"))?;
    let data = samples(&mut b, n, maxval)?;
    Ok(GrayImage {
        width: w,
        height: h,
        maxval,
        data,
    })
}

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", img.width, img.height, img.maxval).into_bytes();
    if img.maxval > 255 {
        for v in &img.data {
            out.extend_from_slice(&v.to_be_bytes());
        }
    } else {
        out.extend(img.data.iter().map(|&v| v as u8));
    }
    out
}
