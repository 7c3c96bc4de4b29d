//! Best boundary F-measure over a sweep of superpixel counts.
//!
//! ```text
//! cargo run --example fmeasure_protocol
//! ```

use superpix::clustering::SuperpixelLabeling;
use superpix::metrics::{boundary_recall_precision, f_measure_protocol, GroundTruth, DEFAULT_EPS};
use superpix::pipeline::{segment, Allocation};
use superpix::prior::PriorPartition;
use superpix::raster::{ClusterConfig, FeatureStack, Image};

fn main() -> superpix::Result<()> {
    let (w, h) = (120, 90);
    let region = |x: usize, y: usize| -> u32 {
        let (dx, dy) = (x as f64 - 60.0, y as f64 - 45.0);
        (dx * dx + dy * dy < 900.0) as u32 + 2 * (x < 20) as u32
    };
    let img = Image::from_fn(w, h, |x, y| match region(x, y) {
        0 => [90, 90, 90],
        1 => [230, 120, 30],
        _ => [20, 60, 160],
    })?;
    let gt = GroundTruth::new(w, h, (0..w * h).map(|p| region(p % w, p / w)).collect())?;
    let prior = PriorPartition::whole(w, h);
    let features = FeatureStack::empty(w, h);

    let scales = [10, 25, 50, 100, 200];
    let segs = scales
        .iter()
        .map(|&k| segment(&img, &features, &prior, &ClusterConfig::with_k(k), &Allocation::Proportional).map(|s| s.output.labeling))
        .collect::<superpix::Result<Vec<SuperpixelLabeling>>>()?;
    for (k, s) in scales.iter().zip(&segs) {
        let (r, p) = boundary_recall_precision(s, &gt, DEFAULT_EPS)?;
        println!("K={k:>4}: {:>4} superpixels, recall {r:.3}, precision {p:.3}", s.count());
    }
    println!("best F = {:.4}", f_measure_protocol(&segs, &gt, DEFAULT_EPS)?);
    Ok(())
}
