//! Seed budget allocation and seed placement inside prior objects.
//!
//! Every object receives a number of seeds proportional to its area. Seeds
//! are drawn at random among the object's pixels, refined by a few rounds of
//! spatial K-means and snapped back onto distinct pixels of the object.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::prior::PriorPartition;
use crate::raster::PixelFeatures;
use crate::spatial::PointGrid;

/// Lloyd iterations used to refine the random draw.
pub const LLOYD_ITERATIONS: usize = 5;
/// Objects larger than this are subsampled for seeding.
pub const SUBSAMPLE_THRESHOLD: usize = 65536;
/// Size of the subsample drawn from large objects.
pub const SUBSAMPLE_SIZE: usize = 4096;

/// One superpixel seed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Seed {
    pub x: f64,
    pub y: f64,
    pub object: u32,
}

impl Seed {
    pub fn pixel(&self, width: usize) -> usize {
        self.y as usize * width + self.x as usize
    }
}

/// Seeds of all objects, grouped by object id in increasing order.
#[derive(Clone, Debug, PartialEq)]
pub struct SeedSet {
    pub seeds: Vec<Seed>,
    pub per_object_counts: Vec<usize>,
}

impl SeedSet {
    pub fn len(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }

    pub fn positions(&self) -> Vec<[f64; 2]> {
        self.seeds.iter().map(|s| [s.x, s.y]).collect()
    }

    /// Initial cluster centers: the feature vector of each seed pixel.
    pub fn feature_centers(&self, features: &PixelFeatures) -> Vec<f64> {
        let w = features.width();
        self.seeds
            .iter()
            .flat_map(|s| features.pixel(s.pixel(w)).iter().copied())
            .collect()
    }
}

/// Rounds real quotas to integers summing to `total` by largest remainder,
/// giving every entry at least one.
///
/// Entries whose quota is below one are raised to one. When the floors exceed
/// `total`, units are taken back from entries above one, smallest remainder
/// first. Ties go to the lower index. Requires `total >= quotas.len()`.
pub fn largest_remainder(quotas: &[f64], total: usize) -> Vec<usize> {
    let n = quotas.len();
    assert!(total >= n, "largest_remainder needs at least one unit per entry");
    if n == 0 {
        return Vec::new();
    }
    let floors: Vec<usize> = quotas.iter().map(|&q| q.max(0.0).floor() as usize).collect();
    let rem: Vec<f64> = quotas.iter().zip(&floors).map(|(&q, &f)| q - f as f64).collect();
    let mut counts: Vec<usize> = floors.iter().map(|&f| f.max(1)).collect();
    let mut sum: usize = counts.iter().sum();

    let mut by_rem_desc: Vec<usize> = (0..n).collect();
    by_rem_desc.sort_by(|&a, &b| rem[b].total_cmp(&rem[a]).then(a.cmp(&b)));

    if sum < total {
        // raised entries already hold more than their quota
        let eligible: Vec<usize> = by_rem_desc.iter().copied().filter(|&i| floors[i] >= 1).collect();
        let order = if eligible.is_empty() { by_rem_desc.clone() } else { eligible };
        let mut i = 0;
        while sum < total {
            counts[order[i % order.len()]] += 1;
            sum += 1;
            i += 1;
        }
    }
    if sum > total {
        let mut by_rem_asc = by_rem_desc.clone();
        by_rem_asc.reverse();
        by_rem_asc.sort_by(|&a, &b| rem[a].total_cmp(&rem[b]).then(a.cmp(&b)));
        while sum > total {
            let mut progressed = false;
            for &i in &by_rem_asc {
                if sum == total {
                    break;
                }
                if counts[i] > 1 {
                    counts[i] -= 1;
                    sum -= 1;
                    progressed = true;
                }
            }
            assert!(progressed, "cannot reduce below one unit per entry");
        }
    }
    counts
}

/// Seed counts proportional to object areas, summing to `k`.
pub fn allocate_seed_counts(partition: &PriorPartition, k: usize) -> Result<Vec<usize>> {
    let n = partition.object_count();
    if n == 0 {
        return Err(Error::InvalidConfig("prior partition has no objects".into()));
    }
    if k < n {
        return Err(Error::InsufficientBudget { k, objects: n });
    }
    let total = partition.covered_area() as f64;
    let quotas: Vec<f64> = partition
        .object_areas()
        .iter()
        .map(|&a| (a as f64 * k as f64) / total)
        .collect();
    Ok(largest_remainder(&quotas, k))
}

/// Clamps counts to object areas, moving the surplus to objects with room left.
fn clamp_to_areas(counts: &[usize], areas: &[usize]) -> Vec<usize> {
    let mut counts: Vec<usize> = counts.to_vec();
    loop {
        let mut surplus = 0;
        for (c, &a) in counts.iter_mut().zip(areas) {
            if *c > a {
                surplus += *c - a;
                *c = a;
            }
        }
        let open: Vec<usize> = (0..counts.len()).filter(|&i| counts[i] < areas[i]).collect();
        if surplus == 0 || open.is_empty() {
            return counts;
        }
        let room: f64 = open.iter().map(|&i| areas[i] as f64).sum();
        let quotas: Vec<f64> = open.iter().map(|&i| surplus as f64 * areas[i] as f64 / room).collect();
        // distribute without the one-per-entry floor
        let floors: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
        let mut extra = surplus - floors.iter().sum::<usize>();
        let mut order: Vec<usize> = (0..open.len()).collect();
        order.sort_by(|&a, &b| {
            let ra = quotas[a] - floors[a] as f64;
            let rb = quotas[b] - floors[b] as f64;
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        for (j, &i) in open.iter().enumerate() {
            counts[i] += floors[j];
        }
        for &j in &order {
            if extra == 0 {
                break;
            }
            counts[open[j]] += 1;
            extra -= 1;
        }
    }
}

/// Places seeds inside every object according to `counts`.
///
/// Deterministic for a given `rng_seed`: each object uses its own random
/// stream derived from `rng_seed ^ object_id`, so the result does not depend
/// on the number of worker threads.
pub fn place_seeds(partition: &PriorPartition, counts: &[usize], rng_seed: u64) -> Result<SeedSet> {
    if counts.len() != partition.object_count() {
        return Err(Error::InvalidConfig(format!(
            "{} seed counts for {} objects",
            counts.len(),
            partition.object_count()
        )));
    }
    let counts = clamp_to_areas(counts, partition.object_areas());
    let pixels = partition.object_pixels();
    let w = partition.width();
    let per_object: Vec<Vec<Seed>> = pixels
        .par_iter()
        .enumerate()
        .map(|(id, px)| {
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed ^ id as u64);
            seed_object(partition, id as u32, px, counts[id], w, &mut rng)
        })
        .collect();
    let per_object_counts = per_object.iter().map(Vec::len).collect();
    Ok(SeedSet {
        seeds: per_object.into_iter().flatten().collect(),
        per_object_counts,
    })
}

fn coords(p: u32, w: usize) -> [f64; 2] {
    [(p as usize % w) as f64, (p as usize / w) as f64]
}

fn seed_object(
    partition: &PriorPartition,
    id: u32,
    pixels: &[u32],
    count: usize,
    w: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Seed> {
    if count == 0 || pixels.is_empty() {
        return Vec::new();
    }
    let pool: Vec<u32> = if pixels.len() > SUBSAMPLE_THRESHOLD {
        let m = SUBSAMPLE_SIZE.max(count).min(pixels.len());
        let mut idx = sample(rng, pixels.len(), m).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| pixels[i]).collect()
    } else {
        pixels.to_vec()
    };
    let pts: Vec<[f64; 2]> = pool.iter().map(|&p| coords(p, w)).collect();
    let mut draw = sample(rng, pool.len(), count).into_vec();
    draw.sort_unstable();
    let init: Vec<[f64; 2]> = draw.iter().map(|&i| pts[i]).collect();
    let centers = lloyd(&pts, init, LLOYD_ITERATIONS, partition.width(), partition.height());
    snap_to_object(partition, id, &centers)
        .into_iter()
        .map(|p| {
            let [x, y] = coords(p, w);
            Seed { x, y, object: id }
        })
        .collect()
}

/// Plain Lloyd iterations on 2-D points with deterministic empty-cluster repair.
pub(crate) fn lloyd(
    pts: &[[f64; 2]],
    mut centers: Vec<[f64; 2]>,
    iterations: usize,
    width: usize,
    height: usize,
) -> Vec<[f64; 2]> {
    let k = centers.len();
    let mut assign = vec![0u32; pts.len()];
    for _ in 0..iterations {
        let cell = ((width * height) as f64 / k as f64).sqrt();
        let grid = PointGrid::new(&centers, width, height, cell);
        for (a, p) in assign.iter_mut().zip(pts) {
            *a = grid.nearest(*p, |_| true).expect("non-empty centers").0;
        }
        let mut sizes = vec![0usize; k];
        for &a in &assign {
            sizes[a as usize] += 1;
        }
        for j in 0..k {
            if sizes[j] > 0 {
                continue;
            }
            // move the farthest point of the largest cluster into the empty one
            let largest = (0..k).max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a))).unwrap();
            if sizes[largest] < 2 {
                continue;
            }
            let c = centers[largest];
            let far = assign
                .iter()
                .enumerate()
                .filter(|(_, &a)| a as usize == largest)
                .map(|(i, _)| (i, (pts[i][0] - c[0]).powi(2) + (pts[i][1] - c[1]).powi(2)))
                .fold(None, |acc: Option<(usize, f64)>, (i, d)| match acc {
                    Some((_, bd)) if bd >= d => acc,
                    _ => Some((i, d)),
                })
                .unwrap()
                .0;
            assign[far] = j as u32;
            sizes[largest] -= 1;
            sizes[j] += 1;
            centers[j] = pts[far];
        }
        let mut sums = vec![[0.0f64; 2]; k];
        for (a, p) in assign.iter().zip(pts) {
            sums[*a as usize][0] += p[0];
            sums[*a as usize][1] += p[1];
        }
        for j in 0..k {
            if sizes[j] > 0 {
                centers[j] = [sums[j][0] / sizes[j] as f64, sums[j][1] / sizes[j] as f64];
            }
        }
    }
    centers
}

/// Snaps each center to the nearest untaken pixel of object `id`
/// (Euclidean distance, raster-order tie-break).
fn snap_to_object(partition: &PriorPartition, id: u32, centers: &[[f64; 2]]) -> Vec<u32> {
    let (w, h) = partition.dims();
    let mut taken = std::collections::HashSet::new();
    let mut out = Vec::with_capacity(centers.len());
    for c in centers {
        let cx = c[0].round().clamp(0.0, (w - 1) as f64) as isize;
        let cy = c[1].round().clamp(0.0, (h - 1) as f64) as isize;
        let mut best: Option<(f64, u32)> = None;
        let max_ring = w.max(h) as isize;
        for ring in 0..=max_ring {
            for y in cy - ring..=cy + ring {
                if y < 0 || y >= h as isize {
                    continue;
                }
                let edge = y == cy - ring || y == cy + ring;
                let step = if edge { 1 } else { (2 * ring).max(1) };
                let mut x = cx - ring;
                while x <= cx + ring {
                    if x >= 0 && x < w as isize {
                        let p = (y as usize * w + x as usize) as u32;
                        if partition.label(p as usize) == id && !taken.contains(&p) {
                            let d = (x as f64 - c[0]).powi(2) + (y as f64 - c[1]).powi(2);
                            if best.is_none_or(|(bd, bp)| d < bd || (d == bd && p < bp)) {
                                best = Some((d, p));
                            }
                        }
                    }
                    x += step;
                }
            }
            // pixels outside this ring are at least ring + 0.5 from the center
            if let Some((bd, _)) = best {
                let reach = ring as f64 + 0.5;
                if bd < reach * reach {
                    break;
                }
            }
        }
        let (_, p) = best.expect("object has at least as many pixels as seeds");
        taken.insert(p);
        out.push(p);
    }
    out
}
