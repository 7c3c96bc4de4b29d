//! Segments a synthetic scene whose prior splits it into three objects, then
//! checks that no superpixel crosses an object border.
//!
//! ```text
//! cargo run --example segment_with_prior -- [out_dir]
//! ```

use std::path::PathBuf;

use superpix::io::{write_image, write_labels, write_overlay};
use superpix::pipeline::{segment, Allocation};
use superpix::prior::PriorPartition;
use superpix::raster::{ClusterConfig, FeatureStack, Image};

fn main() -> superpix::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(std::env::temp_dir);
    let (w, h) = (240, 160);

    // a disc and a bar on a gradient background
    let object = |x: usize, y: usize| -> u32 {
        let (dx, dy) = (x as f64 - 70.0, y as f64 - 80.0);
        if dx * dx + dy * dy < 45.0 * 45.0 {
            1
        } else if (150..210).contains(&x) && (30..130).contains(&y) {
            2
        } else {
            0
        }
    };
    let img = Image::from_fn(w, h, |x, y| match object(x, y) {
        1 => [220, 180, 40],
        2 => [40, 90, 200],
        _ => [(x / 2) as u8, 120, (y / 2) as u8],
    })?;
    let labels: Vec<u32> = (0..w * h).map(|p| object(p % w, p / w)).collect();
    let prior = PriorPartition::from_labels(w, h, labels)?;

    let cfg = ClusterConfig::with_k(150);
    let seg = segment(&img, &FeatureStack::empty(w, h), &prior, &cfg, &Allocation::Proportional)?;
    let lab = seg.labeling();

    println!("requested {} superpixels, got {}", cfg.k, lab.count());
    for (id, (&n, &area)) in seg.counts.iter().zip(prior.object_areas()).enumerate() {
        println!("object {id}: {area} px, {n} superpixels");
    }
    let crossing = (0..w * h)
        .filter(|&p| lab.owner(lab.labels()[p]) != prior.label(p))
        .count();
    println!("pixels outside their object's superpixels: {crossing}");

    write_image(out.join("scene.png"), &img)?;
    write_labels(out.join("scene.seg.spl1"), w, h, lab.labels())?;
    write_overlay(out.join("scene.overlay.png"), &img, lab)?;
    println!("wrote scene.png, scene.seg.spl1 and scene.overlay.png to {}", out.display());
    Ok(())
}
