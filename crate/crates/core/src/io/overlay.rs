use std::path::Path;

use crate::clustering::SuperpixelLabeling;
use crate::error::{Error, Result};
use crate::metrics::boundary_map;
use crate::raster::Image;

pub const BOUNDARY_COLOR: [u8; 3] = [255, 0, 0];

/// Source image with superpixel boundary pixels painted red.
pub fn render_overlay(img: &Image, seg: &SuperpixelLabeling) -> Result<Image> {
    if img.dims() != seg.dims() {
        return Err(Error::dims(img.dims(), seg.dims()));
    }
    let (w, h) = img.dims();
    let b = boundary_map(seg.labels(), w, h);
    Image::from_fn(w, h, |x, y| if b[y * w + x] { BOUNDARY_COLOR } else { img.rgb_at(x, y) })
}

pub fn write_overlay(path: impl AsRef<Path>, img: &Image, seg: &SuperpixelLabeling) -> Result<()> {
    super::write_image(path, &render_overlay(img, seg)?)
}
