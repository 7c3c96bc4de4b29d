//! Segmentation quality metrics and training-loss diagnostics.

mod boundary;
mod loss;
mod overlap;
mod regularity;
mod variation;

pub use boundary::{boundary_map, boundary_recall_precision, f_measure_protocol, DEFAULT_EPS, DEFAULT_SCALES};
pub use loss::{compactness_loss, project_groundtruth, seg_loss, total_loss, ClassDistribution, LOSS_LAMBDA};
pub use overlap::asa;
pub use regularity::{gr, smf, src};
pub use variation::{delta_k, ev};

use serde::{Deserialize, Serialize};

use crate::clustering::{compact, SuperpixelLabeling};
use crate::error::{Error, Result};
use crate::raster::Image;

/// Reference region labeling.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundTruth {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    regions: usize,
}

impl GroundTruth {
    /// Region ids are compacted to `0..n` keeping their order.
    pub fn new(width: usize, height: usize, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: format!("{} labels", width * height),
                found: format!("{} labels", labels.len()),
            });
        }
        let labels = compact(labels);
        let regions = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
        Ok(GroundTruth {
            width,
            height,
            labels,
            regions,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn regions(&self) -> usize {
        self.regions
    }
}

fn check_dims(a: (usize, usize), b: (usize, usize)) -> Result<()> {
    if a != b {
        return Err(Error::dims(a, b));
    }
    Ok(())
}

/// One evaluation row.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub asa: f64,
    pub gr: f64,
    pub recall: f64,
    pub precision: f64,
    pub f: f64,
    pub ev: f64,
    pub delta_k: f64,
    pub k_realized: usize,
}

/// Scores a segmentation against one or more ground truths.
///
/// Ground-truth dependent metrics are averaged over `gts`; `f` is the
/// single-scale boundary F-measure.
pub fn evaluate(
    seg: &SuperpixelLabeling,
    gts: &[GroundTruth],
    img: &Image,
    k_requested: usize,
    eps: f64,
) -> Result<MetricsReport> {
    if gts.is_empty() {
        return Err(Error::InvalidConfig("no ground truth to evaluate against".into()));
    }
    if k_requested == 0 {
        return Err(Error::InvalidConfig("requested K must be positive".into()));
    }
    check_dims(seg.dims(), img.dims())?;
    let n = gts.len() as f64;
    let (mut a, mut r, mut p, mut f) = (0.0, 0.0, 0.0, 0.0);
    for gt in gts {
        a += asa(seg, gt)?;
        let (rr, pp) = boundary_recall_precision(seg, gt, eps)?;
        r += rr;
        p += pp;
        f += f_measure_protocol(std::slice::from_ref(seg), gt, eps)?;
    }
    Ok(MetricsReport {
        asa: a / n,
        gr: gr(seg),
        recall: r / n,
        precision: p / n,
        f: f / n,
        ev: ev(seg, img)?,
        delta_k: delta_k(k_requested, seg.count()),
        k_realized: seg.count(),
    })
}
