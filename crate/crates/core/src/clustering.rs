//! Object-constrained iterative clustering.
//!
//! Each pixel may only associate with up to nine nearby seeds of its own
//! prior object; uncertain pixels may associate with seeds of any object.
//! The loop alternates soft assignment and center updates, then hardens the
//! assignment and repairs connectivity.

use rayon::prelude::*;

use crate::connectivity::enforce_connectivity;
use crate::error::{Error, Result};
use crate::prior::PriorPartition;
use crate::raster::{assemble_features, ClusterConfig, FeatureStack, Image, PixelFeatures};
use crate::seeding::SeedSet;
use crate::spatial::PointGrid;

/// Maximum number of candidate superpixels per pixel.
pub const MAX_CANDIDATES: usize = 9;

/// Pixels per work chunk. Fixed so that reductions do not depend on the
/// number of worker threads.
const CHUNK: usize = 4096;

/// Candidate seeds per pixel, stored as compressed rows.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateMap {
    offsets: Vec<u32>,
    seeds: Vec<u32>,
}

impl CandidateMap {
    pub fn candidates(&self, p: usize) -> &[u32] {
        &self.seeds[self.offsets[p] as usize..self.offsets[p + 1] as usize]
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Per-pixel weights over candidate superpixels. Rows sum to one.
#[derive(Clone, Debug, PartialEq)]
pub struct SoftAssignment {
    offsets: Vec<u32>,
    index: Vec<u32>,
    weight: Vec<f64>,
    num_superpixels: usize,
}

impl SoftAssignment {
    /// Builds an assignment from explicit sparse rows of `(superpixel, weight)`.
    /// Rows are normalized to unit sum; an all-zero row is rejected.
    pub fn from_rows(num_superpixels: usize, rows: &[Vec<(u32, f64)>]) -> Result<Self> {
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        let mut index = Vec::new();
        let mut weight = Vec::new();
        offsets.push(0);
        for (p, row) in rows.iter().enumerate() {
            let sum: f64 = row.iter().map(|r| r.1).sum();
            if !(sum > 0.0) || row.iter().any(|r| r.1 < 0.0 || r.0 as usize >= num_superpixels) {
                return Err(Error::InvalidConfig(format!("invalid assignment row for pixel {p}")));
            }
            for &(k, w) in row {
                index.push(k);
                weight.push(w / sum);
            }
            offsets.push(index.len() as u32);
        }
        Ok(SoftAssignment {
            offsets,
            index,
            weight,
            num_superpixels,
        })
    }

    pub fn num_pixels(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn num_superpixels(&self) -> usize {
        self.num_superpixels
    }

    /// Superpixel indices and weights of pixel `p`.
    pub fn row(&self, p: usize) -> (&[u32], &[f64]) {
        let r = self.offsets[p] as usize..self.offsets[p + 1] as usize;
        (&self.index[r.clone()], &self.weight[r])
    }

    /// Argmax superpixel of every pixel; ties go to the lowest index.
    pub fn harden(&self) -> Vec<u32> {
        (0..self.num_pixels())
            .map(|p| {
                let (idx, w) = self.row(p);
                let mut best = (idx[0], w[0]);
                for (&k, &v) in idx.iter().zip(w).skip(1) {
                    if v > best.1 || (v == best.1 && k < best.0) {
                        best = (k, v);
                    }
                }
                best.0
            })
            .collect()
    }
}

/// Final per-pixel superpixel ids with the owning prior object of each superpixel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuperpixelLabeling {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    owner: Vec<u32>,
}

impl SuperpixelLabeling {
    pub fn new(width: usize, height: usize, labels: Vec<u32>, owner: Vec<u32>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: format!("{} labels", width * height),
                found: format!("{} labels", labels.len()),
            });
        }
        if let Some(&l) = labels.iter().find(|&&l| l as usize >= owner.len()) {
            return Err(Error::InvalidConfig(format!("label {l} has no owner")));
        }
        Ok(SuperpixelLabeling {
            width,
            height,
            labels,
            owner,
        })
    }

    /// A labeling without prior objects: ids are compacted in increasing order
    /// and every superpixel is owned by object 0.
    pub fn from_labels(width: usize, height: usize, labels: Vec<u32>) -> Result<Self> {
        let labels = compact(labels);
        let k = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
        Self::new(width, height, labels, vec![0; k])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn owners(&self) -> &[u32] {
        &self.owner
    }

    pub fn owner(&self, superpixel: u32) -> u32 {
        self.owner[superpixel as usize]
    }

    /// Number of distinct superpixels.
    pub fn count(&self) -> usize {
        self.owner.len()
    }
}

/// Renumbers labels densely, keeping their relative order.
pub(crate) fn compact(labels: Vec<u32>) -> Vec<u32> {
    let mut ids = labels.clone();
    ids.sort_unstable();
    ids.dedup();
    if ids.last().is_none_or(|&m| m as usize + 1 == ids.len()) {
        return labels;
    }
    labels.into_iter().map(|l| ids.binary_search(&l).unwrap() as u32).collect()
}

/// Selects up to nine candidate seeds per pixel.
///
/// Eligible seeds are those of the pixel's object (any object for uncertain
/// pixels) within `candidate_radius_factor * sqrt(|I|/K)`. When none is in
/// range the single nearest eligible seed is used.
pub fn build_candidates(partition: &PriorPartition, seeds: &SeedSet, cfg: &ClusterConfig) -> Result<CandidateMap> {
    if seeds.is_empty() {
        return Err(Error::InvalidConfig("no seeds to cluster around".into()));
    }
    let (w, h) = partition.dims();
    let n = w * h;
    let side = cfg.superpixel_side(n);
    let radius = cfg.candidate_radius_factor * side;
    let r2 = radius * radius;
    let positions = seeds.positions();
    let grid = PointGrid::new(&positions, w, h, side);
    let objects: Vec<u32> = seeds.seeds.iter().map(|s| s.object).collect();
    let has_seed = {
        let mut v = vec![false; partition.object_count()];
        for &o in &objects {
            v[o as usize] = true;
        }
        v
    };

    let rows: Vec<Vec<u32>> = (0..n)
        .into_par_iter()
        .chunks(CHUNK)
        .map(|chunk| {
            let mut out = Vec::with_capacity(chunk.len() * MAX_CANDIDATES);
            let mut lens = Vec::with_capacity(chunk.len());
            for p in chunk {
                let obj = partition.label(p);
                let free = obj == crate::prior::UNCERTAIN;
                assert!(free || has_seed[obj as usize], "object {obj} has pixels but no seed");
                let q = [(p % w) as f64, (p / w) as f64];
                let mut best: [(f64, u32); MAX_CANDIDATES] = [(f64::INFINITY, u32::MAX); MAX_CANDIDATES];
                let mut len = 0;
                grid.for_each_near(q, radius, |i, d2| {
                    if d2 > r2 || !(free || objects[i as usize] == obj) {
                        return;
                    }
                    insert_sorted(&mut best, &mut len, (d2, i));
                });
                if len == 0 {
                    let (i, _) = grid
                        .nearest(q, |i| free || objects[i as usize] == obj)
                        .expect("eligible seed exists");
                    best[0] = (0.0, i);
                    len = 1;
                }
                out.extend(best[..len].iter().map(|b| b.1));
                lens.push(len as u32);
            }
            let mut packed = lens;
            packed.extend(out);
            packed
        })
        .collect();

    let mut offsets = Vec::with_capacity(n + 1);
    let mut all = Vec::with_capacity(n * MAX_CANDIDATES);
    offsets.push(0u32);
    for (c, packed) in rows.iter().enumerate() {
        let m = CHUNK.min(n - c * CHUNK);
        let (lens, ids) = packed.split_at(m);
        all.extend_from_slice(ids);
        for &l in lens {
            offsets.push(offsets.last().unwrap() + l);
        }
    }
    Ok(CandidateMap { offsets, seeds: all })
}

fn insert_sorted(best: &mut [(f64, u32); MAX_CANDIDATES], len: &mut usize, item: (f64, u32)) {
    let less = |a: (f64, u32), b: (f64, u32)| a.0 < b.0 || (a.0 == b.0 && a.1 < b.1);
    if *len == MAX_CANDIDATES && !less(item, best[MAX_CANDIDATES - 1]) {
        return;
    }
    let mut i = (*len).min(MAX_CANDIDATES - 1);
    while i > 0 && less(item, best[i - 1]) {
        best[i] = best[i - 1];
        i -= 1;
    }
    best[i] = item;
    if *len < MAX_CANDIDATES {
        *len += 1;
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Softmax of negative squared feature distances over each pixel's candidates.
pub fn soft_assign(features: &PixelFeatures, centers: &[f64], candidates: &CandidateMap) -> SoftAssignment {
    let dim = features.dim();
    let n = features.len();
    let mut weight = vec![0.0; candidates.seeds.len()];
    let offsets = &candidates.offsets;

    let mut slices: Vec<(usize, &mut [f64])> = Vec::with_capacity(n.div_ceil(CHUNK));
    let mut rest: &mut [f64] = &mut weight;
    for start in (0..n).step_by(CHUNK) {
        let end = (start + CHUNK).min(n);
        let len = (offsets[end] - offsets[start]) as usize;
        let (head, tail) = rest.split_at_mut(len);
        slices.push((start, head));
        rest = tail;
    }
    slices.into_par_iter().for_each(|(start, out)| {
        let end = (start + CHUNK).min(n);
        let base = offsets[start] as usize;
        for p in start..end {
            let f = features.pixel(p);
            let r = offsets[p] as usize..offsets[p + 1] as usize;
            let row = &mut out[r.start - base..r.end - base];
            let cands = &candidates.seeds[r];
            let mut min = f64::INFINITY;
            for (slot, &k) in row.iter_mut().zip(cands) {
                let k = k as usize;
                let d = sq_dist(f, &centers[k * dim..(k + 1) * dim]);
                *slot = d;
                min = min.min(d);
            }
            let mut sum = 0.0;
            for slot in row.iter_mut() {
                *slot = (-(*slot - min)).exp();
                sum += *slot;
            }
            for slot in row.iter_mut() {
                *slot /= sum;
            }
        }
    });
    SoftAssignment {
        offsets: candidates.offsets.clone(),
        index: candidates.seeds.clone(),
        weight,
        num_superpixels: centers.len() / dim,
    }
}

/// Weighted feature means `c_k = Σ q_pk f_p / Σ q_pk`.
///
/// Superpixels with zero total weight keep their entry from `previous`.
pub fn update_centers(features: &PixelFeatures, soft: &SoftAssignment, previous: &[f64]) -> Vec<f64> {
    let dim = features.dim();
    let k = soft.num_superpixels();
    let n = soft.num_pixels();
    let partials: Vec<(Vec<f64>, Vec<f64>)> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut sums = vec![0.0; k * dim];
            let mut mass = vec![0.0; k];
            for p in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let f = features.pixel(p);
                let (idx, w) = soft.row(p);
                for (&s, &q) in idx.iter().zip(w) {
                    let s = s as usize;
                    mass[s] += q;
                    for (acc, &v) in sums[s * dim..(s + 1) * dim].iter_mut().zip(f) {
                        *acc += q * v;
                    }
                }
            }
            (sums, mass)
        })
        .collect();
    let mut sums = vec![0.0; k * dim];
    let mut mass = vec![0.0; k];
    for (s, m) in partials {
        for (a, b) in sums.iter_mut().zip(s) {
            *a += b;
        }
        for (a, b) in mass.iter_mut().zip(m) {
            *a += b;
        }
    }
    let mut centers = previous.to_vec();
    for s in 0..k {
        if mass[s] > 0.0 {
            for d in 0..dim {
                centers[s * dim + d] = sums[s * dim + d] / mass[s];
            }
        }
    }
    centers
}

/// Everything produced by one clustering run.
#[derive(Clone, Debug)]
pub struct ClusterOutput {
    /// Final soft assignment, indexed by seed.
    pub soft: SoftAssignment,
    /// Hard assignment before connectivity repair, indexed by seed.
    pub seed_labels: Vec<u32>,
    /// Final centers, `K x dim`, indexed by seed.
    pub centers: Vec<f64>,
    /// Connected superpixels after repair.
    pub labeling: SuperpixelLabeling,
}

/// Runs the constrained clustering loop from the given seeds.
pub fn cluster(
    img: &Image,
    deep: &FeatureStack,
    partition: &PriorPartition,
    seeds: &SeedSet,
    cfg: &ClusterConfig,
) -> Result<ClusterOutput> {
    if partition.dims() != img.dims() {
        return Err(Error::dims(img.dims(), partition.dims()));
    }
    let features = assemble_features(img, deep, cfg)?;
    cluster_features(&features, partition, seeds, cfg)
}

/// [`cluster`] on pre-assembled features.
pub fn cluster_features(
    features: &PixelFeatures,
    partition: &PriorPartition,
    seeds: &SeedSet,
    cfg: &ClusterConfig,
) -> Result<ClusterOutput> {
    cfg.validate()?;
    let candidates = build_candidates(partition, seeds, cfg)?;
    let mut centers = seeds.feature_centers(features);
    for _ in 0..cfg.iterations {
        let soft = soft_assign(features, &centers, &candidates);
        centers = update_centers(features, &soft, &centers);
    }
    let soft = soft_assign(features, &centers, &candidates);
    let seed_labels = soft.harden();
    let owner: Vec<u32> = seeds.seeds.iter().map(|s| s.object).collect();
    let raw = SuperpixelLabeling::new(partition.width(), partition.height(), seed_labels.clone(), owner)?;
    let min_fragment = cfg.min_fragment_for(partition.len());
    let labeling = enforce_connectivity(&raw, partition, min_fragment);
    Ok(ClusterOutput {
        soft,
        seed_labels,
        centers,
        labeling,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::UNCERTAIN;
    use crate::seeding::{allocate_seed_counts, place_seeds, Seed};

    fn seedset(seeds: Vec<(f64, f64, u32)>, objects: usize) -> SeedSet {
        let mut per = vec![0; objects];
        for s in &seeds {
            per[s.2 as usize] += 1;
        }
        SeedSet {
            seeds: seeds.into_iter().map(|(x, y, object)| Seed { x, y, object }).collect(),
            per_object_counts: per,
        }
    }

    #[test]
    fn single_seed_object_has_one_candidate() {
        let part = PriorPartition::whole(10, 10);
        let s = seedset(vec![(4.0, 4.0, 0)], 1);
        let c = build_candidates(&part, &s, &ClusterConfig::with_k(1)).unwrap();
        assert!((0..100).all(|p| c.candidates(p) == [0]));
    }

    #[test]
    fn dense_field_gives_nine_candidates() {
        let part = PriorPartition::whole(30, 30);
        let seeds: Vec<(f64, f64, u32)> = (0..100).map(|i| ((i % 10 * 3 + 1) as f64, (i / 10 * 3 + 1) as f64, 0)).collect();
        let s = seedset(seeds, 1);
        let c = build_candidates(&part, &s, &ClusterConfig::with_k(100)).unwrap();
        let interior = 15 * 30 + 15;
        assert_eq!(c.candidates(interior).len(), MAX_CANDIDATES);
    }

    /// Brute-force candidate selection.
    fn oracle_candidates(part: &PriorPartition, s: &SeedSet, radius: f64, p: usize) -> Vec<u32> {
        let w = part.width();
        let (x, y) = ((p % w) as f64, (p / w) as f64);
        let obj = part.label(p);
        let mut all: Vec<(f64, u32)> = s
            .seeds
            .iter()
            .enumerate()
            .filter(|(_, sd)| obj == UNCERTAIN || sd.object == obj)
            .map(|(i, sd)| ((sd.x - x).powi(2) + (sd.y - y).powi(2), i as u32))
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let inside: Vec<u32> = all.iter().filter(|a| a.0 <= radius * radius).take(9).map(|a| a.1).collect();
        if inside.is_empty() { vec![all[0].1] } else { inside }
    }

    #[test]
    fn uncertain_pixels_see_both_objects() {
        let (w, h) = (12, 12);
        let labels: Vec<u32> = (0..w * h)
            .map(|p| match p % w {
                0..=5 => 0,
                6 => UNCERTAIN,
                _ => 1,
            })
            .collect();
        let part = PriorPartition::from_labels(w, h, labels).unwrap();
        let s = seedset(vec![(2.0, 3.0, 0), (3.0, 9.0, 0), (9.0, 3.0, 1), (9.0, 9.0, 1)], 2);
        let cfg = ClusterConfig::with_k(4);
        let c = build_candidates(&part, &s, &cfg).unwrap();
        let radius = cfg.candidate_radius_factor * cfg.superpixel_side(w * h);
        for p in 0..w * h {
            assert_eq!(c.candidates(p), oracle_candidates(&part, &s, radius, p).as_slice(), "pixel {p}");
        }
        let mid = 6 * w + 6;
        let objs: std::collections::HashSet<u32> = c.candidates(mid).iter().map(|&i| s.seeds[i as usize].object).collect();
        assert_eq!(objs.len(), 2);
    }

    #[test]
    fn random_candidates_match_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let (w, h) = (rng.random_range(5..30), rng.random_range(5..30));
            let labels: Vec<u32> = (0..w * h)
                .map(|p| if rng.random_range(0..8) == 0 { UNCERTAIN } else { ((p % w) * 3 / w) as u32 })
                .collect();
            let part = PriorPartition::from_labels(w, h, labels).unwrap();
            let k = part.object_count() + rng.random_range(0..30);
            let s = place_seeds(&part, &allocate_seed_counts(&part, k).unwrap(), 3).unwrap();
            let cfg = ClusterConfig {
                candidate_radius_factor: rng.random_range(0.3..4.0),
                ..ClusterConfig::with_k(k)
            };
            let radius = cfg.candidate_radius_factor * cfg.superpixel_side(w * h);
            let c = build_candidates(&part, &s, &cfg).unwrap();
            for p in 0..w * h {
                assert_eq!(c.candidates(p), oracle_candidates(&part, &s, radius, p).as_slice());
            }
        }
    }

    fn features_1d(values: &[[f64; 5]]) -> PixelFeatures {
        PixelFeatures::from_raw(values.len(), 1, 5, values.iter().flatten().copied().collect()).unwrap()
    }

    #[test]
    fn softmax_closed_forms() {
        let f = features_1d(&[[0.0; 5]]);
        let one = CandidateMap { offsets: vec![0, 1], seeds: vec![0] };
        let s = soft_assign(&f, &[1.0, 2.0, 3.0, 4.0, 5.0], &one);
        assert_eq!(s.row(0).1, &[1.0]);

        let two = CandidateMap { offsets: vec![0, 2], seeds: vec![0, 1] };
        let s = soft_assign(&f, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0], &two);
        assert_eq!(s.row(0).1, &[0.5, 0.5]);

        let d = 3f64.ln().sqrt();
        let s = soft_assign(&f, &[0.0, 0.0, 0.0, 0.0, 0.0, d, 0.0, 0.0, 0.0, 0.0], &two);
        let q = s.row(0).1;
        assert!((q[0] - 0.75).abs() < 1e-12 && (q[1] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn centers_match_brute_force_accumulation() {
        let vals = [[1.0, 2.0, 3.0, 4.0, 5.0], [-1.0, 0.5, 2.0, 0.0, 1.0], [3.0, 3.0, 3.0, 3.0, 3.0]];
        let f = features_1d(&vals);
        let q = [[0.2, 0.8], [0.5, 0.5], [1.0, 0.0]];
        let rows: Vec<Vec<(u32, f64)>> = q.iter().map(|r| vec![(0, r[0]), (1, r[1])]).collect();
        let soft = SoftAssignment::from_rows(2, &rows).unwrap();
        let c = update_centers(&f, &soft, &[0.0; 10]);
        for k in 0..2 {
            let mass: f64 = q.iter().map(|r| r[k]).sum();
            for d in 0..5 {
                let num: f64 = (0..3).map(|p| q[p][k] * vals[p][d]).sum();
                assert!((c[k * 5 + d] - num / mass).abs() < 1e-12);
            }
        }
        // pixels owned entirely by one seed each
        let f = features_1d(&vals[..2]);
        let soft = SoftAssignment::from_rows(2, &[vec![(0, 1.0), (1, 0.0)], vec![(0, 0.0), (1, 1.0)]]).unwrap();
        let c = update_centers(&f, &soft, &[0.0; 10]);
        assert_eq!(&c[..5], &vals[0]);
        assert_eq!(&c[5..], &vals[1]);
    }

    #[test]
    fn weightless_center_is_kept() {
        let f = features_1d(&[[1.0; 5]]);
        let soft = SoftAssignment::from_rows(2, &[vec![(0, 1.0)]]).unwrap();
        let prev = [0.0, 0.0, 0.0, 0.0, 0.0, 7.0, 7.0, 7.0, 7.0, 7.0];
        assert_eq!(&update_centers(&f, &soft, &prev)[5..], &[7.0; 5]);
    }

    #[test]
    fn whole_image_single_superpixel() {
        let img = Image::from_fn(8, 8, |x, y| [(x * 30) as u8, (y * 30) as u8, 0]).unwrap();
        let part = PriorPartition::whole(8, 8);
        let s = place_seeds(&part, &[1], 0).unwrap();
        let out = cluster(&img, &FeatureStack::empty(8, 8), &part, &s, &ClusterConfig::with_k(1)).unwrap();
        assert!(out.labeling.labels().iter().all(|&l| l == 0));
        assert_eq!(out.labeling.count(), 1);
    }

    #[test]
    fn rows_are_normalized() {
        let img = Image::from_fn(20, 20, |x, y| [(x * 13) as u8, (y * 11) as u8, ((x * y) % 255) as u8]).unwrap();
        let part = PriorPartition::whole(20, 20);
        let cfg = ClusterConfig::with_k(12);
        let s = place_seeds(&part, &allocate_seed_counts(&part, 12).unwrap(), 0).unwrap();
        let out = cluster(&img, &FeatureStack::empty(20, 20), &part, &s, &cfg).unwrap();
        for p in 0..400 {
            let sum: f64 = out.soft.row(p).1.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
    }
}
