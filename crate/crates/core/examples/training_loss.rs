//! Evaluates the training objective on a clustering result: the projected
//! ground-truth term plus the weighted compactness term.
//!
//! ```text
//! cargo run --example training_loss
//! ```

use superpix::metrics::{compactness_loss, project_groundtruth, seg_loss, total_loss, GroundTruth, LOSS_LAMBDA};
use superpix::pipeline::{segment, Allocation};
use superpix::prior::PriorPartition;
use superpix::raster::{ClusterConfig, FeatureStack, Image};

fn main() -> superpix::Result<()> {
    let (w, h) = (80, 60);
    let region = |x: usize, y: usize| ((x / 20 + y / 20) % 3) as u32;
    let img = Image::from_fn(w, h, |x, y| [[220, 60, 60], [60, 220, 60], [60, 60, 220]][region(x, y) as usize])?;
    let gt = GroundTruth::new(w, h, (0..w * h).map(|p| region(p % w, p / w)).collect())?;
    let spatial: Vec<[f64; 2]> = (0..w * h).map(|p| [(p % w) as f64, (p / w) as f64]).collect();

    for k in [12, 48, 192] {
        let seg = segment(
            &img,
            &FeatureStack::empty(w, h),
            &PriorPartition::whole(w, h),
            &ClusterConfig::with_k(k),
            &Allocation::Proportional,
        )?;
        let soft = &seg.output.soft;
        let hard = &seg.output.seed_labels;
        let s = seg_loss(&project_groundtruth(soft, &gt)?, &gt)?;
        let c = compactness_loss(&spatial, soft, hard)?;
        let t = total_loss(soft, &gt, &spatial, hard, LOSS_LAMBDA)?;
        println!("K={k:>3}: seg {s:.4}  compact {c:>10.1}  total {t:.4}");
    }
    Ok(())
}
