use super::{check_dims, GroundTruth};
use crate::clustering::SuperpixelLabeling;
use crate::error::{Error, Result};

/// Default boundary matching tolerance in pixels.
pub const DEFAULT_EPS: f64 = 2.0;

/// Superpixel counts swept by the F-measure protocol.
pub const DEFAULT_SCALES: [usize; 10] = [50, 100, 200, 300, 400, 600, 800, 1000, 1200, 1500];

/// Pixels with a 4-neighbour of a different label. The image frame does not
/// count as a boundary.
pub fn boundary_map(labels: &[u32], width: usize, height: usize) -> Vec<bool> {
    let mut out = vec![false; width * height];
    for y in 0..height {
        for x in 0..width {
            let p = y * width + x;
            if x + 1 < width && labels[p] != labels[p + 1] {
                out[p] = true;
                out[p + 1] = true;
            }
            if y + 1 < height && labels[p] != labels[p + width] {
                out[p] = true;
                out[p + width] = true;
            }
        }
    }
    out
}

/// Offsets strictly closer than `eps`.
fn disc(eps: f64) -> Vec<(isize, isize)> {
    let r = eps.ceil() as isize;
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if ((dx * dx + dy * dy) as f64) < eps * eps {
                out.push((dx, dy));
            }
        }
    }
    out
}

/// Fraction of `from` pixels with a `to` pixel closer than `eps`; 1 when `from` is empty.
fn matched_fraction(from: &[bool], to: &[bool], width: usize, height: usize, offsets: &[(isize, isize)]) -> f64 {
    let (mut total, mut hit) = (0usize, 0usize);
    for (p, _) in from.iter().enumerate().filter(|(_, &b)| b) {
        total += 1;
        let (x, y) = ((p % width) as isize, (p / width) as isize);
        let found = offsets.iter().any(|&(dx, dy)| {
            let (qx, qy) = (x + dx, y + dy);
            qx >= 0 && qy >= 0 && (qx as usize) < width && (qy as usize) < height && to[qy as usize * width + qx as usize]
        });
        hit += found as usize;
    }
    if total == 0 {
        1.0
    } else {
        hit as f64 / total as f64
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::InvalidConfig(format!("boundary tolerance must be >= 0, got {eps}")));
    }
    Ok(())
}

/// Boundary recall and precision with matches strictly closer than `eps`.
pub fn boundary_recall_precision(seg: &SuperpixelLabeling, gt: &GroundTruth, eps: f64) -> Result<(f64, f64)> {
    check_dims(seg.dims(), gt.dims())?;
    check_eps(eps)?;
    let (w, h) = seg.dims();
    let sb = boundary_map(seg.labels(), w, h);
    let gb = boundary_map(gt.labels(), w, h);
    let offsets = disc(eps);
    Ok((
        matched_fraction(&gb, &sb, w, h, &offsets),
        matched_fraction(&sb, &gb, w, h, &offsets),
    ))
}

/// Best boundary F-measure of the scale-averaged contour map over all thresholds.
pub fn f_measure_protocol(segs: &[SuperpixelLabeling], gt: &GroundTruth, eps: f64) -> Result<f64> {
    if segs.is_empty() {
        return Err(Error::InvalidConfig("F-measure needs at least one segmentation".into()));
    }
    check_eps(eps)?;
    let (w, h) = gt.dims();
    let mut votes = vec![0u32; w * h];
    for s in segs {
        check_dims(s.dims(), gt.dims())?;
        for (v, b) in votes.iter_mut().zip(boundary_map(s.labels(), w, h)) {
            *v += b as u32;
        }
    }
    // thresholding the averaged map at v/n is thresholding the vote count at v
    let mut levels: Vec<u32> = votes.iter().copied().filter(|&v| v > 0).collect();
    levels.sort_unstable();
    levels.dedup();
    let gb = boundary_map(gt.labels(), w, h);
    let offsets = disc(eps);
    let mut best = 0.0f64;
    for t in levels {
        let det: Vec<bool> = votes.iter().map(|&v| v >= t).collect();
        let r = matched_fraction(&gb, &det, w, h, &offsets);
        let p = matched_fraction(&det, &gb, w, h, &offsets);
        if p + r > 0.0 {
            best = best.max(2.0 * p * r / (p + r));
        }
    }
    Ok(best)
}
