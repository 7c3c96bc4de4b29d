//! Redistributes the superpixel budget: by saliency, then by per-object factors.
//!
//! ```text
//! cargo run --example adaptive_density
//! ```

use superpix::adaptive::{FactorMap, SaliencyMap, DEFAULT_SALIENCY_THRESHOLD};
use superpix::pipeline::{segment, Allocation};
use superpix::prior::PriorPartition;
use superpix::raster::{ClusterConfig, FeatureStack, Image};

fn main() -> superpix::Result<()> {
    let (w, h) = (200, 120);
    // four vertical stripes of equal area
    let labels: Vec<u32> = (0..w * h).map(|p| ((p % w) / 50) as u32).collect();
    let prior = PriorPartition::from_labels(w, h, labels)?;
    let img = Image::from_fn(w, h, |x, y| [(x + y) as u8, (x * 3 % 256) as u8, 128])?;
    let features = FeatureStack::empty(w, h);
    let cfg = ClusterConfig::with_k(80);

    // stripe 1 is salient
    let saliency = SaliencyMap::new(w, h, (0..w * h).map(|p| if (p % w) / 50 == 1 { 0.9 } else { 0.0 }).collect())?;
    let factors = FactorMap::new([(0, 2.0), (3, 0.5)])?;

    let modes = [
        ("proportional", Allocation::Proportional),
        (
            "attention r=2",
            Allocation::VisualAttention {
                saliency,
                threshold: DEFAULT_SALIENCY_THRESHOLD,
                ratio: 2.0,
            },
        ),
        ("factors {0: 2, 3: 0.5}", Allocation::UserFactors(factors)),
    ];
    for (name, alloc) in modes {
        let seg = segment(&img, &features, &prior, &cfg, &alloc)?;
        println!(
            "{name:>24}: per-object {:?}, realized {}",
            seg.seeds.per_object_counts,
            seg.labeling().count()
        );
    }
    Ok(())
}
