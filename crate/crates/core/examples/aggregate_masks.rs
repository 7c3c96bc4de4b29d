//! Turns overlapping object proposals into a prior partition.
//!
//! ```text
//! cargo run --example aggregate_masks
//! ```

use superpix::prior::{aggregate, check_partition, AggregationConfig, MaskStack, UNCERTAIN};

fn rect(w: usize, h: usize, x0: usize, y0: usize, x1: usize, y1: usize) -> Vec<bool> {
    (0..w * h)
        .map(|p| (x0..x1).contains(&(p % w)) && (y0..y1).contains(&(p / w)))
        .collect()
}

fn main() -> superpix::Result<()> {
    let (w, h) = (64, 40);
    let stack = MaskStack::new(
        w,
        h,
        vec![
            rect(w, h, 0, 0, 40, 40),
            // overlaps the first; the smaller mask wins the shared pixels
            rect(w, h, 30, 10, 56, 30),
            // too small to survive
            rect(w, h, 60, 0, 63, 3),
        ],
    )?;
    let cfg = AggregationConfig {
        min_area: 20,
        opening_radius: 1,
    };
    let part = aggregate(&stack, &cfg);
    check_partition(&part, cfg.min_area).expect("aggregation yields a partition");

    println!("{} objects, {} uncertain pixels", part.object_count(), part.uncertain_count());
    for (id, (area, bbox)) in part.object_areas().iter().zip(part.bounding_boxes()).enumerate() {
        println!("object {id}: area {area}, bbox {bbox:?}");
    }
    // coarse map, one character per 2x2 block
    for y in (0..h).step_by(2) {
        let row: String = (0..w)
            .step_by(2)
            .map(|x| match part.label(y * w + x) {
                UNCERTAIN => '?',
                l => char::from_digit(l % 10, 10).unwrap(),
            })
            .collect();
        println!("{row}");
    }
    Ok(())
}
