//! Snaps a misaligned semantic border onto the image edge.
//!
//! ```text
//! cargo run --example refine_semantic
//! ```

use superpix::raster::{ClusterConfig, Image};
use superpix::refine::{dilate_borders, refine, DEFAULT_KERNEL};

fn main() -> superpix::Result<()> {
    let (w, h) = (96, 64);
    let edge = |y: usize| 40 + y / 8;
    let img = Image::from_fn(w, h, |x, y| if x < edge(y) { [200, 70, 60] } else { [60, 90, 200] })?;
    // a coarse prediction that is two pixels off
    let semantic: Vec<u32> = (0..w * h).map(|p| (p % w >= edge(p / w) + 2) as u32).collect();

    let band = dilate_borders(&semantic, w, h, DEFAULT_KERNEL)?;
    println!(
        "{} pixels in the uncertain band, {} objects",
        band.partition.uncertain_count(),
        band.partition.object_count()
    );

    let refined = refine(&img, &semantic, DEFAULT_KERNEL, &ClusterConfig::with_k(200))?;
    let offset = |labels: &[u32]| -> f64 {
        (0..h)
            .map(|y| {
                let x = labels[y * w..(y + 1) * w].iter().position(|&c| c == 1).unwrap_or(w);
                (x as f64 - edge(y) as f64).abs()
            })
            .sum::<f64>()
            / h as f64
    };
    println!("mean border offset before: {:.2} px", offset(&semantic));
    println!("mean border offset after:  {:.2} px", offset(&refined));
    Ok(())
}
