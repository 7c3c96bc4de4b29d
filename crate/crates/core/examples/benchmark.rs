//! Runs the batch evaluator over a generated dataset directory.
//!
//! ```text
//! cargo run --example benchmark -- [dataset_dir]
//! ```

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use superpix::bench::{rows_csv, run_benchmark, BenchConfig};
use superpix::io::{encode_ppm, write_labels};
use superpix::raster::Image;

fn main() -> superpix::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("superpix-bench"));
    std::fs::create_dir_all(&dir)?;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (w, h) = (160, 120);
    for i in 0..4 {
        let sites: Vec<(f64, f64, [u8; 3])> = (0..8)
            .map(|_| (rng.random_range(0.0..w as f64), rng.random_range(0.0..h as f64), rng.random()))
            .collect();
        let nearest = |x: usize, y: usize| {
            (0..sites.len())
                .min_by(|&a, &b| {
                    let d = |s: &(f64, f64, [u8; 3])| (s.0 - x as f64).powi(2) + (s.1 - y as f64).powi(2);
                    d(&sites[a]).total_cmp(&d(&sites[b]))
                })
                .unwrap()
        };
        let img = Image::from_fn(w, h, |x, y| sites[nearest(x, y)].2)?;
        let gt: Vec<u32> = (0..w * h).map(|p| nearest(p % w, p / w) as u32).collect();
        std::fs::write(dir.join(format!("img{i}.ppm")), encode_ppm(&img))?;
        write_labels(dir.join(format!("img{i}.gt.spl1")), w, h, &gt)?;
    }

    let cfg = BenchConfig {
        ks: vec![50, 100, 200],
        ..BenchConfig::default()
    };
    let (report, timings) = run_benchmark(&dir, &cfg)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    print!("{}", String::from_utf8_lossy(&rows_csv(&report.rows)?));
    let total: f64 = timings.iter().map(|t| t.segment_ms).sum();
    println!("segmentation time over {} runs: {total:.1} ms", timings.len());
    Ok(())
}
