//! Scores a segmentation with every metric in the evaluation suite.
//!
//! ```text
//! cargo run --example evaluate_metrics
//! ```

use superpix::metrics::{asa, boundary_recall_precision, delta_k, ev, evaluate, gr, GroundTruth, DEFAULT_EPS};
use superpix::pipeline::{segment, Allocation};
use superpix::prior::PriorPartition;
use superpix::raster::{ClusterConfig, FeatureStack, Image};

fn main() -> superpix::Result<()> {
    let (w, h) = (160, 120);
    // ground truth: four quadrants with distinct colors
    let region = |x: usize, y: usize| (x >= w / 2) as u32 + 2 * (y >= h / 2) as u32;
    let palette = [[200, 40, 40], [40, 200, 40], [40, 40, 200], [200, 200, 40]];
    let img = Image::from_fn(w, h, |x, y| palette[region(x, y) as usize])?;
    let gt = GroundTruth::new(w, h, (0..w * h).map(|p| region(p % w, p / w)).collect())?;

    let k = 100;
    let seg = segment(
        &img,
        &FeatureStack::empty(w, h),
        &PriorPartition::whole(w, h),
        &ClusterConfig::with_k(k),
        &Allocation::Proportional,
    )?;
    let lab = seg.labeling();

    let (recall, precision) = boundary_recall_precision(lab, &gt, DEFAULT_EPS)?;
    println!("asa       {:.4}", asa(lab, &gt)?);
    println!("recall    {recall:.4}");
    println!("precision {precision:.4}");
    println!("ev        {:.4}", ev(lab, &img)?);
    println!("gr        {:.4}", gr(lab));
    println!("delta_k   {:.4}", delta_k(k, lab.count()));

    let report = evaluate(lab, std::slice::from_ref(&gt), &img, k, DEFAULT_EPS)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
