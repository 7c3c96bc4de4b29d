//! Binary morphology with square structuring elements.
//!
//! Pixels outside the image are ignored, so shapes touching the frame are
//! not eroded by it.

fn sweep(mask: &[bool], width: usize, height: usize, radius: usize, horizontal: bool, all: bool) -> Vec<bool> {
    let mut out = vec![false; mask.len()];
    let (outer, inner) = if horizontal { (height, width) } else { (width, height) };
    let idx = |o: usize, i: usize| if horizontal { o * width + i } else { i * width + o };
    for o in 0..outer {
        // running count of set pixels inside the window
        let mut set = 0usize;
        let mut lo = 0usize;
        let mut hi = 0usize; // window is [lo, hi)
        for i in 0..inner {
            let want_lo = i.saturating_sub(radius);
            let want_hi = (i + radius + 1).min(inner);
            while hi < want_hi {
                set += mask[idx(o, hi)] as usize;
                hi += 1;
            }
            while lo < want_lo {
                set -= mask[idx(o, lo)] as usize;
                lo += 1;
            }
            let len = hi - lo;
            out[idx(o, i)] = if all { set == len } else { set > 0 };
        }
    }
    out
}

/// Binary erosion by a `(2r+1)x(2r+1)` square.
pub fn erode(mask: &[bool], width: usize, height: usize, radius: usize) -> Vec<bool> {
    if radius == 0 {
        return mask.to_vec();
    }
    let h = sweep(mask, width, height, radius, true, true);
    sweep(&h, width, height, radius, false, true)
}

/// Binary dilation by a `(2r+1)x(2r+1)` square.
pub fn dilate(mask: &[bool], width: usize, height: usize, radius: usize) -> Vec<bool> {
    if radius == 0 {
        return mask.to_vec();
    }
    let h = sweep(mask, width, height, radius, true, false);
    sweep(&h, width, height, radius, false, false)
}

/// Morphological opening: erosion followed by dilation.
pub fn morphological_open(mask: &[bool], width: usize, height: usize, radius: usize) -> Vec<bool> {
    let eroded = erode(mask, width, height, radius);
    dilate(&eroded, width, height, radius)
}
