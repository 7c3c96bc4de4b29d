use super::check_dims;
use crate::clustering::SuperpixelLabeling;
use crate::error::Result;
use crate::raster::Image;

/// Explained variation of the Lab image by superpixel means.
///
/// Computed per channel and averaged over channels that vary; a constant
/// image scores 1.
pub fn ev(seg: &SuperpixelLabeling, img: &Image) -> Result<f64> {
    check_dims(seg.dims(), img.dims())?;
    let n = img.len() as f64;
    let lab = img.lab();
    let k = seg.count();
    let mut sums = vec![[0.0f64; 3]; k];
    let mut sizes = vec![0usize; k];
    let mut mean = [0.0f64; 3];
    for (&l, px) in seg.labels().iter().zip(lab) {
        sizes[l as usize] += 1;
        for c in 0..3 {
            sums[l as usize][c] += px[c];
            mean[c] += px[c];
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut total = [0.0f64; 3];
    for px in lab {
        for c in 0..3 {
            total[c] += (px[c] - mean[c]).powi(2);
        }
    }
    let mut explained = [0.0f64; 3];
    for (s, &size) in sums.iter().zip(&sizes) {
        if size == 0 {
            continue;
        }
        for c in 0..3 {
            explained[c] += size as f64 * (s[c] / size as f64 - mean[c]).powi(2);
        }
    }
    let ratios: Vec<f64> = (0..3)
        .filter(|&c| total[c] > 0.0)
        .map(|c| (explained[c] / total[c]).min(1.0))
        .collect();
    if ratios.is_empty() {
        return Ok(1.0);
    }
    Ok(ratios.iter().sum::<f64>() / ratios.len() as f64)
}

/// Relative error between requested and realized superpixel counts.
pub fn delta_k(k_requested: usize, k_realized: usize) -> f64 {
    (k_realized as f64 - k_requested as f64).abs() / k_requested as f64
}
