//! Prior object partitions and aggregation of overlapping object proposals.
//!
//! Proposal masks from a promptable segmenter overlap and leave holes. The
//! aggregation turns them into a proper partition: masks below a minimum area
//! are dropped, overlaps are resolved in favour of the smaller mask, large
//! unlabeled blobs become background objects and the remaining thin unlabeled
//! pixels are marked [`UNCERTAIN`].

use crate::components::{binary_components, label_components};
use crate::error::{Error, Result};
use crate::morphology::morphological_open;

/// Label of pixels that belong to no prior object.
pub const UNCERTAIN: u32 = u32::MAX;

/// A stack of binary object masks sharing one raster size.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaskStack {
    width: usize,
    height: usize,
    masks: Vec<Vec<bool>>,
}

impl MaskStack {
    pub fn new(width: usize, height: usize, masks: Vec<Vec<bool>>) -> Result<Self> {
        if let Some(m) = masks.iter().find(|m| m.len() != width * height) {
            return Err(Error::DimensionMismatch {
                expected: format!("{} mask pixels", width * height),
                found: format!("{} mask pixels", m.len()),
            });
        }
        Ok(MaskStack {
            width,
            height,
            masks,
        })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        MaskStack {
            width,
            height,
            masks: Vec::new(),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn masks(&self) -> &[Vec<bool>] {
        &self.masks
    }

    pub fn area(&self, i: usize) -> usize {
        self.masks[i].iter().filter(|&&v| v).count()
    }
}

/// Per-pixel object ids plus the [`UNCERTAIN`] label.
///
/// Object ids are dense in `0..object_count()`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PriorPartition {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    areas: Vec<usize>,
}

impl PriorPartition {
    /// Builds a partition from arbitrary labels. Ids are compacted to a dense
    /// range, keeping their relative order; [`UNCERTAIN`] is kept as is.
    pub fn from_labels(width: usize, height: usize, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: format!("{} labels", width * height),
                found: format!("{} labels", labels.len()),
            });
        }
        let mut ids: Vec<u32> = labels.iter().copied().filter(|&l| l != UNCERTAIN).collect();
        ids.sort_unstable();
        ids.dedup();
        let dense = ids.last().is_none_or(|&m| m as usize + 1 == ids.len());
        let labels = if dense {
            labels
        } else {
            labels
                .into_iter()
                .map(|l| {
                    if l == UNCERTAIN {
                        l
                    } else {
                        ids.binary_search(&l).unwrap() as u32
                    }
                })
                .collect()
        };
        let mut areas = vec![0usize; ids.len()];
        for &l in &labels {
            if l != UNCERTAIN {
                areas[l as usize] += 1;
            }
        }
        Ok(PriorPartition {
            width,
            height,
            labels,
            areas,
        })
    }

    /// A single object covering the whole image.
    pub fn whole(width: usize, height: usize) -> Self {
        PriorPartition {
            width,
            height,
            labels: vec![0; width * height],
            areas: vec![width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label(&self, p: usize) -> u32 {
        self.labels[p]
    }

    pub fn is_uncertain(&self, p: usize) -> bool {
        self.labels[p] == UNCERTAIN
    }

    pub fn object_count(&self) -> usize {
        self.areas.len()
    }

    pub fn object_areas(&self) -> &[usize] {
        &self.areas
    }

    /// Number of pixels covered by some object.
    pub fn covered_area(&self) -> usize {
        self.areas.iter().sum()
    }

    pub fn uncertain_count(&self) -> usize {
        self.len() - self.covered_area()
    }

    /// Raster-ordered pixel indices of every object.
    pub fn object_pixels(&self) -> Vec<Vec<u32>> {
        let mut out: Vec<Vec<u32>> = self.areas.iter().map(|&a| Vec::with_capacity(a)).collect();
        for (p, &l) in self.labels.iter().enumerate() {
            if l != UNCERTAIN {
                out[l as usize].push(p as u32);
            }
        }
        out
    }

    /// Inclusive bounding box `[x0, y0, x1, y1]` of every object.
    pub fn bounding_boxes(&self) -> Vec<[usize; 4]> {
        let mut boxes = vec![[usize::MAX, usize::MAX, 0, 0]; self.areas.len()];
        for (p, &l) in self.labels.iter().enumerate() {
            if l != UNCERTAIN {
                let (x, y) = (p % self.width, p / self.width);
                let b = &mut boxes[l as usize];
                b[0] = b[0].min(x);
                b[1] = b[1].min(y);
                b[2] = b[2].max(x);
                b[3] = b[3].max(y);
            }
        }
        boxes
    }

    /// One mask per object, in id order; uncertain pixels are in no mask.
    pub fn to_masks(&self) -> MaskStack {
        let masks = (0..self.areas.len() as u32)
            .map(|id| self.labels.iter().map(|&l| l == id).collect())
            .collect();
        MaskStack {
            width: self.width,
            height: self.height,
            masks,
        }
    }
}

/// Parameters of proposal aggregation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AggregationConfig {
    pub min_area: usize,
    pub opening_radius: usize,
}

impl AggregationConfig {
    /// Defaults scaled to the image: `min_area = max(64, |I|/1000)`, radius 1.
    /// The minimum area never exceeds the image itself.
    pub fn for_image(width: usize, height: usize) -> Self {
        let n = width * height;
        AggregationConfig {
            min_area: 64.max(n / 1000).min(n).max(1),
            opening_radius: 1,
        }
    }
}

/// Drops masks smaller than `min_area`, keeping the order of the rest.
pub fn filter_min_area(stack: &MaskStack, cfg: &AggregationConfig) -> MaskStack {
    let masks = stack
        .masks
        .iter()
        .filter(|m| m.iter().filter(|&&v| v).count() >= cfg.min_area)
        .cloned()
        .collect();
    MaskStack {
        width: stack.width,
        height: stack.height,
        masks,
    }
}

/// Makes masks pairwise disjoint by subtracting smaller masks from larger ones.
///
/// Each pixel stays in the smallest original mask that contains it; equal
/// areas are resolved in favour of the lower stack index.
pub fn remove_overlaps(stack: &MaskStack) -> MaskStack {
    let owner = smallest_owner(stack);
    let masks = (0..stack.len())
        .map(|i| owner.iter().map(|&o| o == i).collect())
        .collect();
    MaskStack {
        width: stack.width,
        height: stack.height,
        masks,
    }
}

fn smallest_owner(stack: &MaskStack) -> Vec<usize> {
    let areas: Vec<usize> = (0..stack.len()).map(|i| stack.area(i)).collect();
    let mut order: Vec<usize> = (0..stack.len()).collect();
    order.sort_by_key(|&i| (areas[i], i));
    let mut owner = vec![usize::MAX; stack.width * stack.height];
    for &i in &order {
        for (o, &v) in owner.iter_mut().zip(&stack.masks[i]) {
            if v && *o == usize::MAX {
                *o = i;
            }
        }
    }
    owner
}

/// Aggregates a proposal stack into a [`PriorPartition`].
///
/// Retained proposals get ids by decreasing area (ties by stack order);
/// background blobs are appended afterwards in the same order.
pub fn aggregate(stack: &MaskStack, cfg: &AggregationConfig) -> PriorPartition {
    let (w, h) = stack.dims();
    let n = w * h;
    let kept = remove_overlaps(&filter_min_area(stack, cfg));

    let mut objects: Vec<(usize, Vec<u32>)> = Vec::new();
    let mut unlabeled = vec![true; n];
    for m in kept.masks() {
        let pixels: Vec<u32> = (0..n as u32).filter(|&p| m[p as usize]).collect();
        if pixels.len() >= cfg.min_area {
            for &p in &pixels {
                unlabeled[p as usize] = false;
            }
            objects.push((pixels.len(), pixels));
        }
    }
    objects.sort_by_key(|o| std::cmp::Reverse(o.0));

    let opened = morphological_open(&unlabeled, w, h, cfg.opening_radius);
    let comps = binary_components(&opened, w, h);
    let mut background: Vec<(usize, Vec<u32>)> = vec![(0, Vec::new()); comps.count()];
    for (p, &c) in comps.ids.iter().enumerate() {
        if c != u32::MAX {
            background[c as usize].1.push(p as u32);
        }
    }
    let mut background: Vec<(usize, Vec<u32>)> = background
        .into_iter()
        .map(|(_, px)| (px.len(), px))
        .filter(|(a, _)| *a >= cfg.min_area)
        .collect();
    background.sort_by_key(|o| std::cmp::Reverse(o.0));

    let mut labels = vec![UNCERTAIN; n];
    let mut areas = Vec::with_capacity(objects.len() + background.len());
    for (id, (area, pixels)) in objects.iter().chain(background.iter()).enumerate() {
        for &p in pixels {
            labels[p as usize] = id as u32;
        }
        areas.push(*area);
    }
    PriorPartition {
        width: w,
        height: h,
        labels,
        areas,
    }
}

/// Checks the partition invariants: dense ids, matching areas and the
/// minimum object area. Returns a description of the first violation.
pub fn check_partition(part: &PriorPartition, min_area: usize) -> std::result::Result<(), String> {
    let mut areas = vec![0usize; part.object_count()];
    for (p, &l) in part.labels().iter().enumerate() {
        if l == UNCERTAIN {
            continue;
        }
        if l as usize >= areas.len() {
            return Err(format!("pixel {p} has out-of-range id {l}"));
        }
        areas[l as usize] += 1;
    }
    if areas != part.object_areas() {
        return Err("recorded areas differ from label counts".into());
    }
    if let Some(i) = areas.iter().position(|&a| a < min_area) {
        return Err(format!("object {i} has area {} < {min_area}", areas[i]));
    }
    Ok(())
}

/// True when two label rasters are equal up to a bijective renaming of ids.
pub fn same_up_to_renumbering(a: &[u32], b: &[u32]) -> bool {
    use std::collections::HashMap;
    if a.len() != b.len() {
        return false;
    }
    let mut fwd = HashMap::new();
    let mut bwd = HashMap::new();
    a.iter().zip(b).all(|(&x, &y)| {
        *fwd.entry(x).or_insert(y) == y && *bwd.entry(y).or_insert(x) == x
    })
}

/// Relabels each 4-connected component of the same id as its own object.
pub fn split_disconnected(part: &PriorPartition) -> PriorPartition {
    let comps = label_components(part.labels(), part.width, part.height, |l| l != UNCERTAIN);
    PriorPartition::from_labels(part.width, part.height, comps.ids).expect("dimensions unchanged")
}
