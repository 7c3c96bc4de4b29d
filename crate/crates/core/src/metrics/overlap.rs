use std::collections::HashMap;

use super::{check_dims, GroundTruth};
use crate::clustering::SuperpixelLabeling;
use crate::error::Result;

/// Achievable segmentation accuracy: the fraction of pixels that fall in the
/// ground-truth region overlapping their superpixel the most.
pub fn asa(seg: &SuperpixelLabeling, gt: &GroundTruth) -> Result<f64> {
    check_dims(seg.dims(), gt.dims())?;
    let mut overlap: HashMap<(u32, u32), usize> = HashMap::new();
    for (&s, &g) in seg.labels().iter().zip(gt.labels()) {
        *overlap.entry((s, g)).or_default() += 1;
    }
    let mut best = vec![0usize; seg.count()];
    for (&(s, _), &c) in &overlap {
        best[s as usize] = best[s as usize].max(c);
    }
    Ok(best.iter().sum::<usize>() as f64 / seg.labels().len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn oracle(seg: &[u32], gt: &[u32]) -> f64 {
        let ks = seg.iter().max().unwrap() + 1;
        let js = gt.iter().max().unwrap() + 1;
        let mut total = 0usize;
        for k in 0..ks {
            let mut best = 0;
            for j in 0..js {
                let c = (0..seg.len()).filter(|&p| seg[p] == k && gt[p] == j).count();
                best = best.max(c);
            }
            total += best;
        }
        total as f64 / seg.len() as f64
    }

    #[test]
    fn identical_is_one() {
        let l: Vec<u32> = (0..36).map(|p| (p / 9) as u32).collect();
        let seg = SuperpixelLabeling::from_labels(6, 6, l.clone()).unwrap();
        assert_eq!(asa(&seg, &GroundTruth::new(6, 6, l).unwrap()).unwrap(), 1.0);
    }

    #[test]
    fn single_superpixel_over_sixty_forty() {
        let seg = SuperpixelLabeling::from_labels(10, 1, vec![0; 10]).unwrap();
        let gt = GroundTruth::new(10, 1, (0..10).map(|p| (p >= 6) as u32).collect()).unwrap();
        assert_eq!(asa(&seg, &gt).unwrap(), 0.6);
    }

    #[test]
    fn random_pairs_match_double_loop() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let s: Vec<u32> = (0..36).map(|_| rng.random_range(0..5)).collect();
            let g: Vec<u32> = (0..36).map(|_| rng.random_range(0..4)).collect();
            let seg = SuperpixelLabeling::from_labels(6, 6, s).unwrap();
            let gt = GroundTruth::new(6, 6, g).unwrap();
            assert_eq!(asa(&seg, &gt).unwrap(), oracle(seg.labels(), gt.labels()));
        }
    }
}
