use std::collections::HashMap;

use crate::clustering::SuperpixelLabeling;

fn members(seg: &SuperpixelLabeling) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); seg.count()];
    for (p, &l) in seg.labels().iter().enumerate() {
        out[l as usize].push(p);
    }
    out
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Perimeter of the convex hull of the pixel squares.
fn hull_perimeter(pixels: &[usize], width: usize) -> f64 {
    // row extents are enough: the hull only touches the outermost corners
    let mut rows: HashMap<usize, (usize, usize)> = HashMap::new();
    for &p in pixels {
        let (x, y) = (p % width, p / width);
        let e = rows.entry(y).or_insert((x, x));
        e.0 = e.0.min(x);
        e.1 = e.1.max(x);
    }
    let mut pts: Vec<[f64; 2]> = Vec::with_capacity(rows.len() * 4);
    for (&y, &(x0, x1)) in &rows {
        let (y, x0, x1) = (y as f64, x0 as f64, x1 as f64 + 1.0);
        pts.extend([[x0, y], [x0, y + 1.0], [x1, y], [x1, y + 1.0]]);
    }
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(pts.len() * 2);
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    (0..hull.len())
        .map(|i| {
            let (a, b) = (hull[i], hull[(i + 1) % hull.len()]);
            ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
        })
        .sum()
}

/// Number of unit pixel edges between the region and everything else.
fn edge_perimeter(seg: &SuperpixelLabeling, pixels: &[usize]) -> usize {
    let (w, h) = seg.dims();
    let labels = seg.labels();
    let mut edges = 0;
    for &p in pixels {
        let (x, y) = (p % w, p / w);
        let l = labels[p];
        edges += (x == 0 || labels[p - 1] != l) as usize;
        edges += (x + 1 == w || labels[p + 1] != l) as usize;
        edges += (y == 0 || labels[p - w] != l) as usize;
        edges += (y + 1 == h || labels[p + w] != l) as usize;
    }
    edges
}

fn balance(pixels: &[usize], width: usize) -> f64 {
    let n = pixels.len() as f64;
    let (mut sx, mut sy, mut sxx, mut syy) = (0.0, 0.0, 0.0, 0.0);
    for &p in pixels {
        let (x, y) = ((p % width) as f64, (p / width) as f64);
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
    }
    let vx = (sxx / n - (sx / n).powi(2)).max(0.0);
    let vy = (syy / n - (sy / n).powi(2)).max(0.0);
    let (lo, hi) = (vx.min(vy).sqrt(), vx.max(vy).sqrt());
    if hi == 0.0 {
        1.0
    } else {
        (lo / hi).sqrt()
    }
}

fn src_of(seg: &SuperpixelLabeling, pixels: &[usize]) -> f64 {
    let cc = (hull_perimeter(pixels, seg.width()) / edge_perimeter(seg, pixels) as f64).clamp(0.0, 1.0);
    cc * balance(pixels, seg.width())
}

/// Shape regularity of one superpixel: convexity times balance of its spread.
pub fn src(seg: &SuperpixelLabeling, superpixel: u32) -> f64 {
    let px: Vec<usize> = (0..seg.labels().len()).filter(|&p| seg.labels()[p] == superpixel).collect();
    if px.is_empty() {
        return 0.0;
    }
    src_of(seg, &px)
}

/// Pixel offsets from the rounded centroid.
fn registered(pixels: &[usize], width: usize) -> Vec<(i64, i64)> {
    let n = pixels.len() as f64;
    let cx = (pixels.iter().map(|&p| (p % width) as f64).sum::<f64>() / n).round() as i64;
    let cy = (pixels.iter().map(|&p| (p / width) as f64).sum::<f64>() / n).round() as i64;
    pixels
        .iter()
        .map(|&p| ((p % width) as i64 - cx, (p / width) as i64 - cy))
        .collect()
}

fn mean_shape(shapes: &[Vec<(i64, i64)>]) -> HashMap<(i64, i64), f64> {
    let total: usize = shapes.iter().map(Vec::len).sum();
    let mut m: HashMap<(i64, i64), f64> = HashMap::new();
    for s in shapes {
        for &o in s {
            *m.entry(o).or_default() += 1.0;
        }
    }
    for v in m.values_mut() {
        *v /= total as f64;
    }
    m
}

fn smf_of(shape: &[(i64, i64)], mean: &HashMap<(i64, i64), f64>) -> f64 {
    let q = 1.0 / shape.len() as f64;
    let mut inside = 0.0;
    let mut diff = 0.0;
    for o in shape {
        let m = mean.get(o).copied().unwrap_or(0.0);
        inside += m;
        diff += (q - m).abs();
    }
    // mass of the mean shape outside this superpixel's support
    diff += (1.0 - inside).max(0.0);
    1.0 - 0.5 * diff
}

/// Similarity of one superpixel's registered shape to the segmentation's mean shape.
pub fn smf(seg: &SuperpixelLabeling, superpixel: u32) -> f64 {
    let shapes: Vec<Vec<(i64, i64)>> = members(seg)
        .iter()
        .filter(|m| !m.is_empty())
        .map(|m| registered(m, seg.width()))
        .collect();
    let px: Vec<usize> = (0..seg.labels().len()).filter(|&p| seg.labels()[p] == superpixel).collect();
    if px.is_empty() {
        return 0.0;
    }
    smf_of(&registered(&px, seg.width()), &mean_shape(&shapes))
}

/// Global regularity: area-weighted mean of `src * smf`.
pub fn gr(seg: &SuperpixelLabeling) -> f64 {
    let groups: Vec<Vec<usize>> = members(seg).into_iter().filter(|m| !m.is_empty()).collect();
    let shapes: Vec<Vec<(i64, i64)>> = groups.iter().map(|m| registered(m, seg.width())).collect();
    let mean = mean_shape(&shapes);
    let mut num = 0.0;
    let mut den = 0.0;
    for (g, s) in groups.iter().zip(&shapes) {
        num += g.len() as f64 * src_of(seg, g) * smf_of(s, &mean);
        den += g.len() as f64;
    }
    num / den
}
