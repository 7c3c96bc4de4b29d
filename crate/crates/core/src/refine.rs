//! Semantic border refinement: borders become uncertain and superpixels
//! constrained by the class regions decide where they go.

use crate::clustering::SuperpixelLabeling;
use crate::components::label_components;
use crate::error::{Error, Result};
use crate::pipeline::{segment, Allocation};
use crate::prior::{PriorPartition, UNCERTAIN};
use crate::raster::{ClusterConfig, FeatureStack, Image};

/// Default border band element size.
pub const DEFAULT_KERNEL: usize = 5;
/// Default superpixel budget for refinement.
pub const DEFAULT_REFINE_K: usize = 500;

/// A semantic partition with uncertain border bands and the class of each object.
#[derive(Clone, Debug, PartialEq)]
pub struct BorderPartition {
    pub partition: PriorPartition,
    pub object_class: Vec<u32>,
}

fn sliding(values: &[u32], width: usize, height: usize, r: usize, pick: fn(u32, u32) -> u32) -> Vec<u32> {
    let mut rows = vec![0u32; values.len()];
    for y in 0..height {
        for x in 0..width {
            let (lo, hi) = (x.saturating_sub(r), (x + r).min(width - 1));
            rows[y * width + x] = (lo..=hi).map(|i| values[y * width + i]).reduce(pick).unwrap();
        }
    }
    let mut out = vec![0u32; values.len()];
    for y in 0..height {
        let (lo, hi) = (y.saturating_sub(r), (y + r).min(height - 1));
        for x in 0..width {
            out[y * width + x] = (lo..=hi).map(|j| rows[j * width + x]).reduce(pick).unwrap();
        }
    }
    out
}

/// Marks as uncertain every pixel whose `kernel x kernel` window holds more
/// than one class. The remaining pixels are grouped into objects by
/// 4-connected class region.
pub fn dilate_borders(semantic: &[u32], width: usize, height: usize, kernel: usize) -> Result<BorderPartition> {
    if semantic.len() != width * height {
        return Err(Error::DimensionMismatch {
            expected: format!("{} labels", width * height),
            found: format!("{} labels", semantic.len()),
        });
    }
    if kernel == 0 || kernel % 2 == 0 {
        return Err(Error::InvalidConfig(format!("kernel must be odd and positive, got {kernel}")));
    }
    if semantic.contains(&UNCERTAIN) {
        return Err(Error::InvalidConfig(format!("class id {UNCERTAIN} is reserved")));
    }
    let r = kernel / 2;
    let lo = sliding(semantic, width, height, r, u32::min);
    let hi = sliding(semantic, width, height, r, u32::max);
    let masked: Vec<u32> = semantic
        .iter()
        .zip(lo.iter().zip(&hi))
        .map(|(&c, (&a, &b))| if a == b { c } else { UNCERTAIN })
        .collect();
    let comps = label_components(&masked, width, height, |v| v != UNCERTAIN);
    let object_class = comps.first_pixel.iter().map(|&p| semantic[p]).collect();
    let partition = PriorPartition::from_labels(width, height, comps.ids)?;
    Ok(BorderPartition {
        partition,
        object_class,
    })
}

/// Refined class of every pixel: the class of its superpixel's object.
pub fn read_back(labeling: &SuperpixelLabeling, object_class: &[u32]) -> Vec<u32> {
    labeling
        .labels()
        .iter()
        .map(|&l| object_class[labeling.owner(l) as usize])
        .collect()
}

/// Moves semantic borders onto image evidence. `cfg.k` is the superpixel budget.
pub fn refine(img: &Image, semantic: &[u32], kernel: usize, cfg: &ClusterConfig) -> Result<Vec<u32>> {
    let (w, h) = img.dims();
    let border = dilate_borders(semantic, w, h, kernel)?;
    if border.partition.object_count() == 0 {
        return Err(Error::InvalidConfig("border band covers the whole image".into()));
    }
    let seg = segment(img, &FeatureStack::empty(w, h), &border.partition, cfg, &Allocation::Proportional)?;
    Ok(read_back(seg.labeling(), &border.object_class))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window_oracle(s: &[u32], w: usize, h: usize, kernel: usize) -> Vec<bool> {
        let r = (kernel / 2) as isize;
        (0..w * h)
            .map(|p| {
                let (x, y) = ((p % w) as isize, (p / w) as isize);
                let mut mixed = false;
                for dy in -r..=r {
                    for dx in -r..=r {
                        let (qx, qy) = (x + dx, y + dy);
                        if qx >= 0 && qy >= 0 && qx < w as isize && qy < h as isize {
                            mixed |= s[qy as usize * w + qx as usize] != s[p];
                        }
                    }
                }
                mixed
            })
            .collect()
    }

    #[test]
    fn kernel_one_has_no_band() {
        let s: Vec<u32> = (0..30).map(|p| (p % 6 / 2) as u32).collect();
        let b = dilate_borders(&s, 6, 5, 1).unwrap();
        assert_eq!(b.partition.uncertain_count(), 0);
        assert_eq!(b.object_class, vec![0, 1, 2]);
    }

    #[test]
    fn vertical_border_gives_four_pixel_band() {
        let (w, h) = (20, 6);
        let s: Vec<u32> = (0..w * h).map(|p| (p % w >= 10) as u32).collect();
        let b = dilate_borders(&s, w, h, 5).unwrap();
        for y in 0..h {
            let row: Vec<bool> = (0..w).map(|x| b.partition.is_uncertain(y * w + x)).collect();
            let expected: Vec<bool> = (0..w).map(|x| (8..12).contains(&x)).collect();
            assert_eq!(row, expected);
        }
    }

    #[test]
    fn constant_map_is_one_object() {
        let b = dilate_borders(&[7; 25], 5, 5, 5).unwrap();
        assert_eq!(b.partition.object_count(), 1);
        assert_eq!(b.partition.uncertain_count(), 0);
        assert_eq!(b.object_class, vec![7]);
    }

    #[test]
    fn band_matches_window_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for _ in 0..30 {
            let (w, h) = (rng.random_range(1..15), rng.random_range(1..15));
            let s: Vec<u32> = (0..w * h).map(|_| rng.random_range(0..3)).collect();
            let kernel = 2 * rng.random_range(0..4) + 1;
            let b = dilate_borders(&s, w, h, kernel).unwrap();
            let band: Vec<bool> = (0..w * h).map(|p| b.partition.is_uncertain(p)).collect();
            assert_eq!(band, window_oracle(&s, w, h, kernel));
            for p in (0..w * h).filter(|&p| !band[p]) {
                assert_eq!(b.object_class[b.partition.label(p) as usize], s[p]);
            }
        }
    }

    #[test]
    fn rejects_even_kernel() {
        assert!(dilate_borders(&[0; 4], 2, 2, 4).is_err());
    }

    #[test]
    fn kernel_one_refinement_is_identity() {
        let img = Image::from_fn(24, 16, |x, y| [(x * 9) as u8, (y * 13) as u8, 50]).unwrap();
        let s: Vec<u32> = (0..24 * 16).map(|p| ((p % 24) / 7 + 3 * ((p / 24) / 9)) as u32).collect();
        assert_eq!(refine(&img, &s, 1, &ClusterConfig::with_k(40)).unwrap(), s);
    }

    #[test]
    fn border_moves_to_color_edge() {
        // color edge at x = 16, semantic border offset to x = 14
        let (w, h) = (32, 24);
        let img = Image::from_fn(w, h, |x, _| if x < 16 { [200, 40, 40] } else { [40, 40, 200] }).unwrap();
        let s: Vec<u32> = (0..w * h).map(|p| (p % w >= 14) as u32).collect();
        let out = refine(&img, &s, 5, &ClusterConfig::with_k(24)).unwrap();
        for y in 0..h {
            let edge = (0..w).find(|&x| out[y * w + x] == 1).unwrap();
            assert!((edge as i64 - 16).abs() <= 1, "row {y}: edge at {edge}");
        }
    }
}
