use super::{check_dims, GroundTruth};
use crate::clustering::SoftAssignment;
use crate::error::{Error, Result};

/// Default weight of the compactness term.
pub const LOSS_LAMBDA: f64 = 1e-5;

const LOG_FLOOR: f64 = 1e-12;

/// Dense per-pixel class distribution, `pixels x classes`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassDistribution {
    pub classes: usize,
    pub data: Vec<f64>,
}

impl ClassDistribution {
    pub fn row(&self, p: usize) -> &[f64] {
        &self.data[p * self.classes..(p + 1) * self.classes]
    }

    pub fn pixels(&self) -> usize {
        self.data.len() / self.classes.max(1)
    }
}

fn column_mass(soft: &SoftAssignment) -> Vec<f64> {
    let mut mass = vec![0.0f64; soft.num_superpixels()];
    for p in 0..soft.num_pixels() {
        let (idx, w) = soft.row(p);
        for (&k, &v) in idx.iter().zip(w) {
            mass[k as usize] += v;
        }
    }
    mass
}

/// Ground truth carried to superpixels with column-normalized weights and
/// back to pixels with row-normalized weights.
pub fn project_groundtruth(soft: &SoftAssignment, gt: &GroundTruth) -> Result<ClassDistribution> {
    let n = soft.num_pixels();
    if n != gt.labels().len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} pixels", gt.labels().len()),
            found: format!("{n} pixels"),
        });
    }
    let c = gt.regions();
    let mass = column_mass(soft);
    let mut per_superpixel = vec![0.0f64; soft.num_superpixels() * c];
    for p in 0..n {
        let (idx, w) = soft.row(p);
        let g = gt.labels()[p] as usize;
        for (&k, &v) in idx.iter().zip(w) {
            per_superpixel[k as usize * c + g] += v;
        }
    }
    // normalize after summing so nested hard assignments stay exactly one-hot
    for (k, row) in per_superpixel.chunks_mut(c.max(1)).enumerate() {
        if mass[k] > 0.0 {
            for v in row {
                *v /= mass[k];
            }
        }
    }
    let mut data = vec![0.0f64; n * c];
    for p in 0..n {
        let (idx, w) = soft.row(p);
        let row = &mut data[p * c..(p + 1) * c];
        for (&k, &v) in idx.iter().zip(w) {
            for (r, s) in row.iter_mut().zip(&per_superpixel[k as usize * c..(k as usize + 1) * c]) {
                *r += v * s;
            }
        }
    }
    Ok(ClassDistribution { classes: c, data })
}

/// Mean cross-entropy of the projected distribution at the true class.
pub fn seg_loss(projected: &ClassDistribution, gt: &GroundTruth) -> Result<f64> {
    if projected.pixels() != gt.labels().len() || projected.classes != gt.regions() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} pixels x {} classes", gt.labels().len(), gt.regions()),
            found: format!("{} pixels x {} classes", projected.pixels(), projected.classes),
        });
    }
    let n = gt.labels().len();
    let sum: f64 = gt
        .labels()
        .iter()
        .enumerate()
        .map(|(p, &g)| projected.row(p)[g as usize].max(LOG_FLOOR).ln())
        .sum();
    Ok((0.0 - sum) / n as f64)
}

/// Sum of distances from each pixel to the soft spatial center of its hard superpixel.
pub fn compactness_loss(spatial: &[[f64; 2]], soft: &SoftAssignment, hard: &[u32]) -> Result<f64> {
    let n = soft.num_pixels();
    if spatial.len() != n || hard.len() != n {
        return Err(Error::DimensionMismatch {
            expected: format!("{n} pixels"),
            found: format!("{} positions and {} labels", spatial.len(), hard.len()),
        });
    }
    let mass = column_mass(soft);
    let mut centers = vec![[0.0f64; 2]; soft.num_superpixels()];
    for (p, pos) in spatial.iter().enumerate() {
        let (idx, w) = soft.row(p);
        for (&k, &v) in idx.iter().zip(w) {
            centers[k as usize][0] += v * pos[0];
            centers[k as usize][1] += v * pos[1];
        }
    }
    for (c, &m) in centers.iter_mut().zip(&mass) {
        if m > 0.0 {
            c[0] /= m;
            c[1] /= m;
        }
    }
    let mut total = 0.0;
    for (pos, &k) in spatial.iter().zip(hard) {
        let c = centers.get(k as usize).ok_or_else(|| Error::InvalidConfig(format!("hard label {k} out of range")))?;
        total += ((pos[0] - c[0]).powi(2) + (pos[1] - c[1]).powi(2)).sqrt();
    }
    Ok(total)
}

/// `seg_loss + lambda * compactness_loss`.
pub fn total_loss(
    soft: &SoftAssignment,
    gt: &GroundTruth,
    spatial: &[[f64; 2]],
    hard: &[u32],
    lambda: f64,
) -> Result<f64> {
    check_dims((soft.num_pixels(), 1), (gt.labels().len(), 1))?;
    let projected = project_groundtruth(soft, gt)?;
    Ok(seg_loss(&projected, gt)? + lambda * compactness_loss(spatial, soft, hard)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn dense(soft: &SoftAssignment) -> Vec<Vec<f64>> {
        (0..soft.num_pixels())
            .map(|p| {
                let mut r = vec![0.0; soft.num_superpixels()];
                let (idx, w) = soft.row(p);
                for (&k, &v) in idx.iter().zip(w) {
                    r[k as usize] += v;
                }
                r
            })
            .collect()
    }

    /// Dense matrix product: rownorm(S) * colnorm(S)^T * onehot(G).
    fn projection_oracle(soft: &SoftAssignment, gt: &GroundTruth) -> Vec<Vec<f64>> {
        let s = dense(soft);
        let (n, k, c) = (s.len(), soft.num_superpixels(), gt.regions());
        let rows: Vec<Vec<f64>> = s
            .iter()
            .map(|r| {
                let t: f64 = r.iter().sum();
                r.iter().map(|v| v / t).collect()
            })
            .collect();
        let colsum: Vec<f64> = (0..k).map(|j| s.iter().map(|r| r[j]).sum()).collect();
        let mut out = vec![vec![0.0; c]; n];
        for i in 0..n {
            for j in 0..c {
                let mut acc = 0.0;
                for m in 0..k {
                    let mut inner = 0.0;
                    for q in 0..n {
                        let g = (gt.labels()[q] as usize == j) as u8 as f64;
                        inner += if colsum[m] > 0.0 { s[q][m] / colsum[m] } else { 0.0 } * g;
                    }
                    acc += rows[i][m] * inner;
                }
                out[i][j] = acc;
            }
        }
        out
    }

    fn random_soft(rng: &mut impl Rng, n: usize, k: usize) -> SoftAssignment {
        let rows: Vec<Vec<(u32, f64)>> = (0..n)
            .map(|_| {
                let m = rng.random_range(1..=k);
                let mut ids: Vec<u32> = (0..k as u32).collect();
                ids.truncate(m);
                ids.into_iter().map(|j| (j, rng.random_range(0.05..1.0))).collect()
            })
            .collect();
        SoftAssignment::from_rows(k, &rows).unwrap()
    }

    #[test]
    fn nested_hard_assignment_reproduces_groundtruth() {
        let soft = SoftAssignment::from_rows(3, &[vec![(0, 1.0)], vec![(0, 1.0)], vec![(1, 1.0)], vec![(2, 1.0)]]).unwrap();
        let gt = GroundTruth::new(4, 1, vec![0, 0, 1, 1]).unwrap();
        let g = project_groundtruth(&soft, &gt).unwrap();
        assert_eq!(g.data, vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0]);
        assert_eq!(seg_loss(&g, &gt).unwrap(), 0.0);
    }

    #[test]
    fn shared_superpixel_splits_evenly() {
        let soft = SoftAssignment::from_rows(1, &[vec![(0, 1.0)], vec![(0, 1.0)]]).unwrap();
        let gt = GroundTruth::new(2, 1, vec![0, 1]).unwrap();
        let g = project_groundtruth(&soft, &gt).unwrap();
        assert_eq!(g.data, vec![0.5, 0.5, 0.5, 0.5]);
        assert!((seg_loss(&g, &gt).unwrap() - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn projection_matches_dense_product() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let (n, k) = (rng.random_range(2..7), rng.random_range(1..4));
            let soft = random_soft(&mut rng, n, k);
            let gt = GroundTruth::new(n, 1, (0..n).map(|_| rng.random_range(0..3)).collect()).unwrap();
            let g = project_groundtruth(&soft, &gt).unwrap();
            let o = projection_oracle(&soft, &gt);
            for p in 0..n {
                for c in 0..gt.regions() {
                    assert!((g.row(p)[c] - o[p][c]).abs() < 1e-12);
                }
            }
            let direct: f64 = -(0..n).map(|p| o[p][gt.labels()[p] as usize].max(1e-12).ln()).sum::<f64>() / n as f64;
            assert!((seg_loss(&g, &gt).unwrap() - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn compactness_closed_forms() {
        let one = SoftAssignment::from_rows(1, &[vec![(0, 1.0)]]).unwrap();
        assert_eq!(compactness_loss(&[[3.0, 4.0]], &one, &[0]).unwrap(), 0.0);
        let two = SoftAssignment::from_rows(1, &[vec![(0, 1.0)], vec![(0, 1.0)]]).unwrap();
        let d = compactness_loss(&[[0.0, 0.0], [3.0, 4.0]], &two, &[0, 0]).unwrap();
        assert!((d - 5.0).abs() < 1e-12);
    }

    #[test]
    fn compactness_matches_brute_force() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let (n, k) = (rng.random_range(1..9), rng.random_range(1..4));
            let soft = random_soft(&mut rng, n, k);
            let pos: Vec<[f64; 2]> = (0..n).map(|_| [rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)]).collect();
            let hard = soft.harden();
            let s = dense(&soft);
            let mut expected = 0.0;
            for i in 0..n {
                let j = hard[i] as usize;
                let m: f64 = (0..n).map(|q| s[q][j]).sum();
                let cx: f64 = (0..n).map(|q| s[q][j] * pos[q][0]).sum::<f64>() / m;
                let cy: f64 = (0..n).map(|q| s[q][j] * pos[q][1]).sum::<f64>() / m;
                expected += ((pos[i][0] - cx).powi(2) + (pos[i][1] - cy).powi(2)).sqrt();
            }
            assert!((compactness_loss(&pos, &soft, &hard).unwrap() - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn total_is_weighted_sum() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(29);
        let soft = random_soft(&mut rng, 6, 3);
        let gt = GroundTruth::new(6, 1, vec![0, 1, 1, 0, 2, 2]).unwrap();
        let pos: Vec<[f64; 2]> = (0..6).map(|i| [i as f64, (i * i) as f64]).collect();
        let hard = soft.harden();
        let s = seg_loss(&project_groundtruth(&soft, &gt).unwrap(), &gt).unwrap();
        let c = compactness_loss(&pos, &soft, &hard).unwrap();
        assert_eq!(total_loss(&soft, &gt, &pos, &hard, LOSS_LAMBDA).unwrap(), s + LOSS_LAMBDA * c);
    }
}
