//! Uniform bucket grid over 2-D points for nearest-neighbour queries.

#[derive(Clone, Debug)]
pub(crate) struct PointGrid {
    cell: f64,
    cols: usize,
    rows: usize,
    starts: Vec<u32>,
    items: Vec<u32>,
    points: Vec<[f64; 2]>,
}

impl PointGrid {
    /// Buckets `points` into square cells of side `cell` covering `[0,width)x[0,height)`.
    /// Points outside the extent are clamped into the border cells.
    pub fn new(points: &[[f64; 2]], width: usize, height: usize, cell: f64) -> Self {
        let cell = cell.max(1.0);
        let cols = ((width as f64 / cell).ceil() as usize).max(1);
        let rows = ((height as f64 / cell).ceil() as usize).max(1);
        let cell_of = |p: &[f64; 2]| {
            let cx = ((p[0] / cell).floor().max(0.0) as usize).min(cols - 1);
            let cy = ((p[1] / cell).floor().max(0.0) as usize).min(rows - 1);
            cy * cols + cx
        };
        let mut counts = vec![0u32; cols * rows + 1];
        for p in points {
            counts[cell_of(p) + 1] += 1;
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let mut fill = counts.clone();
        let mut items = vec![0u32; points.len()];
        for (i, p) in points.iter().enumerate() {
            let c = cell_of(p);
            items[fill[c] as usize] = i as u32;
            fill[c] += 1;
        }
        PointGrid {
            cell,
            cols,
            rows,
            starts: counts,
            items,
            points: points.to_vec(),
        }
    }

    fn cell_coords(&self, q: [f64; 2]) -> (isize, isize) {
        let cx = ((q[0] / self.cell).floor() as isize).clamp(0, self.cols as isize - 1);
        let cy = ((q[1] / self.cell).floor() as isize).clamp(0, self.rows as isize - 1);
        (cx, cy)
    }

    fn cell_items(&self, cx: isize, cy: isize) -> &[u32] {
        if cx < 0 || cy < 0 || cx >= self.cols as isize || cy >= self.rows as isize {
            return &[];
        }
        let c = cy as usize * self.cols + cx as usize;
        &self.items[self.starts[c] as usize..self.starts[c + 1] as usize]
    }

    /// Visits every point whose cell lies within `radius` (in cells, Chebyshev) of `q`'s cell.
    pub fn for_each_near(&self, q: [f64; 2], radius: f64, mut f: impl FnMut(u32, f64)) {
        let (cx, cy) = self.cell_coords(q);
        let r = (radius / self.cell).ceil() as isize + 1;
        for y in cy - r..=cy + r {
            for x in cx - r..=cx + r {
                for &i in self.cell_items(x, y) {
                    let p = self.points[i as usize];
                    let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
                    f(i, d2);
                }
            }
        }
    }

    /// Nearest point to `q` among those accepted by `keep`; ties go to the lowest index.
    pub fn nearest(&self, q: [f64; 2], keep: impl Fn(u32) -> bool) -> Option<(u32, f64)> {
        let (cx, cy) = self.cell_coords(q);
        let max_ring = self.cols.max(self.rows) as isize;
        let mut best: Option<(u32, f64)> = None;
        for ring in 0..=max_ring {
            let mut visit = |x: isize, y: isize| {
                for &i in self.cell_items(x, y) {
                    if !keep(i) {
                        continue;
                    }
                    let p = self.points[i as usize];
                    let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
                    let better = match best {
                        None => true,
                        Some((bi, bd)) => d2 < bd || (d2 == bd && i < bi),
                    };
                    if better {
                        best = Some((i, d2));
                    }
                }
            };
            if ring == 0 {
                visit(cx, cy);
            } else {
                for x in cx - ring..=cx + ring {
                    visit(x, cy - ring);
                    visit(x, cy + ring);
                }
                for y in cy - ring + 1..=cy + ring - 1 {
                    visit(cx - ring, y);
                    visit(cx + ring, y);
                }
            }
            // anything beyond this ring is at least `ring * cell` away from q
            if let Some((_, bd)) = best {
                let reach = ring as f64 * self.cell;
                if bd < reach * reach {
                    break;
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn nearest_matches_brute_force() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let n = rng.random_range(1..60);
            let pts: Vec<[f64; 2]> = (0..n)
                .map(|_| [rng.random_range(0..40) as f64, rng.random_range(0..30) as f64])
                .collect();
            let grid = PointGrid::new(&pts, 40, 30, rng.random_range(1.0..9.0));
            for _ in 0..30 {
                let q = [rng.random_range(0.0..40.0), rng.random_range(0.0..30.0)];
                let keep = |i: u32| i % 3 != 1;
                let brute = (0..n as u32)
                    .filter(|&i| keep(i))
                    .map(|i| {
                        let p = pts[i as usize];
                        (i, (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2))
                    })
                    .fold(None, |acc: Option<(u32, f64)>, (i, d)| match acc {
                        Some((_, bd)) if bd <= d => acc,
                        _ => Some((i, d)),
                    });
                assert_eq!(grid.nearest(q, keep), brute);
            }
        }
    }
}
