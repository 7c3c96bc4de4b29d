//! 4-connected component labeling over label rasters.

use std::collections::VecDeque;

/// Marker for pixels excluded from labeling.
pub const NO_COMPONENT: u32 = u32::MAX;

/// Connected components of a raster, numbered in raster order of their first pixel.
#[derive(Clone, Debug)]
pub struct Components {
    /// Component id per pixel, or [`NO_COMPONENT`].
    pub ids: Vec<u32>,
    /// Pixel count per component.
    pub sizes: Vec<usize>,
    /// Raster index of the first pixel of each component.
    pub first_pixel: Vec<usize>,
}

impl Components {
    pub fn count(&self) -> usize {
        self.sizes.len()
    }
}

/// Labels the 4-connected components of equal-valued pixels.
///
/// Pixels for which `include` returns false get [`NO_COMPONENT`].
pub fn label_components<T: PartialEq + Copy>(
    values: &[T],
    width: usize,
    height: usize,
    include: impl Fn(T) -> bool,
) -> Components {
    assert_eq!(values.len(), width * height);
    let mut ids = vec![NO_COMPONENT; values.len()];
    let mut sizes = Vec::new();
    let mut first_pixel = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..values.len() {
        if ids[start] != NO_COMPONENT || !include(values[start]) {
            continue;
        }
        let id = sizes.len() as u32;
        let v = values[start];
        ids[start] = id;
        queue.push_back(start);
        let mut size = 0;
        while let Some(p) = queue.pop_front() {
            size += 1;
            let (x, y) = (p % width, p / width);
            let mut visit = |q: usize| {
                if ids[q] == NO_COMPONENT && values[q] == v {
                    ids[q] = id;
                    queue.push_back(q);
                }
            };
            if x > 0 {
                visit(p - 1);
            }
            if x + 1 < width {
                visit(p + 1);
            }
            if y > 0 {
                visit(p - width);
            }
            if y + 1 < height {
                visit(p + width);
            }
        }
        sizes.push(size);
        first_pixel.push(start);
    }
    Components {
        ids,
        sizes,
        first_pixel,
    }
}

/// Components of the `true` pixels of a binary mask.
pub fn binary_components(mask: &[bool], width: usize, height: usize) -> Components {
    label_components(mask, width, height, |v| v)
}

/// Calls `f` for each in-bounds 4-neighbour of pixel `p`.
#[inline]
pub fn for_each_neighbor4(p: usize, width: usize, height: usize, mut f: impl FnMut(usize)) {
    let (x, y) = (p % width, p / width);
    if x > 0 {
        f(p - 1);
    }
    if x + 1 < width {
        f(p + 1);
    }
    if y > 0 {
        f(p - width);
    }
    if y + 1 < height {
        f(p + width);
    }
}
