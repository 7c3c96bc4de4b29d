//! End-to-end segmentation: budget allocation, seeding, clustering.

use crate::adaptive::{classify_salient, user_allocate, va_allocate, FactorMap, ObjectClass, SaliencyMap};
use crate::clustering::{cluster, ClusterOutput, SuperpixelLabeling};
use crate::error::{Error, Result};
use crate::prior::PriorPartition;
use crate::raster::{ClusterConfig, FeatureStack, Image};
use crate::seeding::{allocate_seed_counts, place_seeds, SeedSet};

/// How the superpixel budget is split across prior objects.
#[derive(Clone, Debug, Default)]
pub enum Allocation {
    /// Proportional to object area.
    #[default]
    Proportional,
    /// Salient objects are densified by `ratio`.
    VisualAttention {
        saliency: SaliencyMap,
        threshold: f64,
        ratio: f64,
    },
    /// Explicit per-object density factors.
    UserFactors(FactorMap),
}

impl Allocation {
    /// Requested seed count per object.
    pub fn counts(&self, partition: &PriorPartition, k: usize) -> Result<Vec<usize>> {
        match self {
            Allocation::Proportional => allocate_seed_counts(partition, k),
            Allocation::VisualAttention {
                saliency,
                threshold,
                ratio,
            } => {
                let classes: Vec<ObjectClass> = classify_salient(partition, saliency, *threshold)?;
                va_allocate(partition, &classes, k, *ratio)
            }
            Allocation::UserFactors(f) => user_allocate(partition, f, k),
        }
    }
}

/// Result of [`segment`].
#[derive(Clone, Debug)]
pub struct Segmentation {
    /// Seed counts requested per object, before clamping to object areas.
    pub counts: Vec<usize>,
    pub seeds: SeedSet,
    pub output: ClusterOutput,
}

impl Segmentation {
    pub fn labeling(&self) -> &SuperpixelLabeling {
        &self.output.labeling
    }
}

/// Segments `img` into about `cfg.k` superpixels, each inside one prior object.
pub fn segment(
    img: &Image,
    deep: &FeatureStack,
    partition: &PriorPartition,
    cfg: &ClusterConfig,
    allocation: &Allocation,
) -> Result<Segmentation> {
    cfg.validate()?;
    if partition.dims() != img.dims() {
        return Err(Error::dims(img.dims(), partition.dims()));
    }
    let counts = allocation.counts(partition, cfg.k)?;
    let seeds = place_seeds(partition, &counts, cfg.rng_seed)?;
    let output = cluster(img, deep, partition, &seeds, cfg)?;
    Ok(Segmentation { counts, seeds, output })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn too_small_budget_is_reported() {
        let img = Image::from_fn(8, 8, |_, _| [0, 0, 0]).unwrap();
        let part = PriorPartition::from_labels(8, 8, (0..64).map(|p| (p % 8 / 2) as u32).collect()).unwrap();
        let err = segment(&img, &FeatureStack::empty(8, 8), &part, &ClusterConfig::with_k(3), &Allocation::Proportional);
        assert!(matches!(err, Err(Error::InsufficientBudget { k: 3, objects: 4 })));
    }

    #[test]
    fn user_factors_shift_the_budget() {
        let img = Image::from_fn(16, 8, |x, _| [(x * 10) as u8, 0, 0]).unwrap();
        let part = PriorPartition::from_labels(16, 8, (0..128).map(|p| (p % 16 >= 8) as u32).collect()).unwrap();
        let f = FactorMap::new([(0, 3.0)]).unwrap();
        let s = segment(&img, &FeatureStack::empty(16, 8), &part, &ClusterConfig::with_k(8), &Allocation::UserFactors(f)).unwrap();
        assert_eq!(s.counts, vec![6, 2]);
        assert_eq!(s.seeds.per_object_counts, vec![6, 2]);
    }
}
