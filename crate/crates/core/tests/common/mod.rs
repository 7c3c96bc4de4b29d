#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use superpix::prior::UNCERTAIN;
use superpix::raster::Image;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Nearest-site labeling of random sites.
pub fn voronoi(w: usize, h: usize, sites: usize, rng: &mut impl Rng) -> Vec<u32> {
    let pts: Vec<(f64, f64)> = (0..sites)
        .map(|_| (rng.random_range(0.0..w as f64), rng.random_range(0.0..h as f64)))
        .collect();
    (0..w * h)
        .map(|p| {
            let (x, y) = ((p % w) as f64, (p / w) as f64);
            let mut best = (f64::MAX, 0u32);
            for (i, &(sx, sy)) in pts.iter().enumerate() {
                let d = (x - sx).powi(2) + (y - sy).powi(2);
                if d < best.0 {
                    best = (d, i as u32);
                }
            }
            best.1
        })
        .collect()
}

/// Piecewise-constant colors per region plus uniform noise of the given amplitude.
pub fn paint(w: usize, h: usize, regions: &[u32], noise: u8, rng: &mut impl Rng) -> Image {
    let n = regions.iter().max().map_or(0, |&m| m as usize + 1);
    let colors: Vec<[u8; 3]> = (0..n).map(|_| [rng.random(), rng.random(), rng.random()]).collect();
    Image::from_fn(w, h, |x, y| {
        let c = colors[regions[y * w + x] as usize];
        let mut jitter = |v: u8| {
            if noise == 0 {
                v
            } else {
                (v as i16 + rng.random_range(-(noise as i16)..=noise as i16)).clamp(0, 255) as u8
            }
        };
        [jitter(c[0]), jitter(c[1]), jitter(c[2])]
    })
    .unwrap()
}

/// Marks random discs and scattered pixels as uncertain.
pub fn sprinkle_uncertain(labels: &mut [u32], w: usize, h: usize, rng: &mut impl Rng) {
    for _ in 0..rng.random_range(0..4) {
        let (cx, cy) = (rng.random_range(0..w) as i64, rng.random_range(0..h) as i64);
        let r = rng.random_range(1..6) as i64;
        for y in (cy - r).max(0)..(cy + r + 1).min(h as i64) {
            for x in (cx - r).max(0)..(cx + r + 1).min(w as i64) {
                if (x - cx).pow(2) + (y - cy).pow(2) <= r * r {
                    labels[y as usize * w + x as usize] = UNCERTAIN;
                }
            }
        }
    }
    let frac = rng.random_range(0.0..0.1);
    for l in labels.iter_mut() {
        if rng.random_bool(frac) {
            *l = UNCERTAIN;
        }
    }
}

/// True when every label value forms one 4-connected component.
pub fn all_connected(labels: &[u32], w: usize, h: usize) -> bool {
    let mut seen = vec![false; labels.len()];
    let mut done = std::collections::HashSet::new();
    for start in 0..labels.len() {
        if seen[start] {
            continue;
        }
        let l = labels[start];
        if !done.insert(l) {
            return false;
        }
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(p) = stack.pop() {
            let (x, y) = (p % w, p / w);
            let mut n = Vec::with_capacity(4);
            if x > 0 {
                n.push(p - 1);
            }
            if x + 1 < w {
                n.push(p + 1);
            }
            if y > 0 {
                n.push(p - w);
            }
            if y + 1 < h {
                n.push(p + w);
            }
            for q in n {
                if !seen[q] && labels[q] == l {
                    seen[q] = true;
                    stack.push(q);
                }
            }
        }
    }
    true
}
