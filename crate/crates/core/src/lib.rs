//! Superpixel segmentation constrained by a prior object partition.
//!
//! Pixels of a prior object may only join superpixels seeded inside that
//! object; pixels left uncertain by the prior are free to join any nearby
//! superpixel. The crate covers mask aggregation into a prior, seeding,
//! clustering, connectivity repair, adaptive per-object budgets, semantic
//! border refinement, evaluation metrics, file formats, a CLI and a small
//! HTTP API.
//!
//! ```
//! use superpix::pipeline::{segment, Allocation};
//! use superpix::prior::PriorPartition;
//! use superpix::raster::{ClusterConfig, FeatureStack, Image};
//!
//! let img = Image::from_fn(32, 32, |x, _| if x < 16 { [200, 30, 30] } else { [30, 30, 200] }).unwrap();
//! let prior = PriorPartition::from_labels(32, 32, (0..32 * 32).map(|p| (p % 32 >= 16) as u32).collect()).unwrap();
//! let seg = segment(&img, &FeatureStack::empty(32, 32), &prior, &ClusterConfig::with_k(8), &Allocation::Proportional).unwrap();
//! let lab = seg.labeling();
//! for p in 0..32 * 32 {
//!     assert_eq!(lab.owner(lab.labels()[p]), prior.label(p));
//! }
//! ```

pub mod adaptive;
pub mod bench;
pub mod cli;
pub mod clustering;
pub mod components;
pub mod connectivity;
pub mod error;
pub mod io;
pub mod metrics;
pub mod morphology;
pub mod pipeline;
pub mod prior;
pub mod raster;
pub mod refine;
pub mod seeding;
pub mod serve;
mod spatial;

pub use error::{Error, Result};
