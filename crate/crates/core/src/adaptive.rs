//! Per-object superpixel budgets: visual-attention and user-factor modes.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::prior::{PriorPartition, UNCERTAIN};
use crate::seeding::largest_remainder;

/// Default mean-saliency threshold above which an object is foreground.
pub const DEFAULT_SALIENCY_THRESHOLD: f64 = 0.1;

/// Per-pixel saliency scores in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SaliencyMap {
    width: usize,
    height: usize,
    scores: Vec<f64>,
}

impl SaliencyMap {
    pub fn new(width: usize, height: usize, scores: Vec<f64>) -> Result<Self> {
        if scores.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: format!("{} scores", width * height),
                found: format!("{} scores", scores.len()),
            });
        }
        if let Some(p) = scores.iter().position(|s| !(0.0..=1.0).contains(s)) {
            return Err(Error::InvalidConfig(format!(
                "saliency at pixel {p} is {} (expected a value in [0, 1])",
                scores[p]
            )));
        }
        Ok(SaliencyMap { width, height, scores })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }
}

/// Positive density factors keyed by object id. Missing objects use 1.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FactorMap {
    factors: BTreeMap<u32, f64>,
}

impl FactorMap {
    pub fn new(factors: impl IntoIterator<Item = (u32, f64)>) -> Result<Self> {
        let factors: BTreeMap<u32, f64> = factors.into_iter().collect();
        if let Some((id, r)) = factors.iter().find(|(_, r)| !(r.is_finite() && **r > 0.0)) {
            return Err(Error::InvalidConfig(format!("factor for object {id} must be positive, got {r}")));
        }
        Ok(FactorMap { factors })
    }

    pub fn factor(&self, object: u32) -> f64 {
        self.factors.get(&object).copied().unwrap_or(1.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.factors.iter().map(|(&k, &v)| (k, v))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectClass {
    Foreground,
    Background,
}

/// Marks each object foreground iff its mean saliency exceeds `threshold`.
pub fn classify_salient(
    partition: &PriorPartition,
    saliency: &SaliencyMap,
    threshold: f64,
) -> Result<Vec<ObjectClass>> {
    if saliency.dims() != partition.dims() {
        return Err(Error::dims(partition.dims(), saliency.dims()));
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidConfig(format!("threshold {threshold} outside [0, 1]")));
    }
    let mut sums = vec![0.0f64; partition.object_count()];
    for (&l, &s) in partition.labels().iter().zip(saliency.scores()) {
        if l != UNCERTAIN {
            sums[l as usize] += s;
        }
    }
    Ok(sums
        .iter()
        .zip(partition.object_areas())
        .map(|(&s, &a)| {
            if s / a as f64 > threshold {
                ObjectClass::Foreground
            } else {
                ObjectClass::Background
            }
        })
        .collect())
}

fn check_budget(partition: &PriorPartition, k: usize) -> Result<()> {
    let n = partition.object_count();
    if n == 0 {
        return Err(Error::InvalidConfig("prior partition has no objects".into()));
    }
    if k < n {
        return Err(Error::InsufficientBudget { k, objects: n });
    }
    Ok(())
}

/// Unrounded visual-attention budgets.
///
/// Foreground objects get `|O_i|/|I| * K * r`; background objects share what
/// is left in proportion to their area. `|I|` is the area covered by objects.
/// When the foreground alone asks for `K` or more, each background object is
/// left one superpixel and the foreground splits the rest by area.
pub fn va_quotas(partition: &PriorPartition, classes: &[ObjectClass], k: usize, r: f64) -> Result<Vec<f64>> {
    check_budget(partition, k)?;
    if classes.len() != partition.object_count() {
        return Err(Error::InvalidConfig(format!(
            "{} classes for {} objects",
            classes.len(),
            partition.object_count()
        )));
    }
    if !(r.is_finite() && r >= 1.0) {
        return Err(Error::InvalidConfig(format!("attention ratio must be >= 1, got {r}")));
    }
    let areas = partition.object_areas();
    let total = partition.covered_area() as f64;
    let kf = k as f64;
    let (mut fg_area, mut bg_area, mut bg_count) = (0usize, 0usize, 0usize);
    for (&a, &c) in areas.iter().zip(classes) {
        match c {
            ObjectClass::Foreground => fg_area += a,
            ObjectClass::Background => {
                bg_area += a;
                bg_count += 1;
            }
        }
    }
    let fg_demand = r * (kf * fg_area as f64);
    if fg_demand >= kf * total {
        let left = (k - bg_count) as f64;
        return Ok(areas
            .iter()
            .zip(classes)
            .map(|(&a, &c)| match c {
                ObjectClass::Foreground => a as f64 * left / fg_area as f64,
                ObjectClass::Background => 1.0,
            })
            .collect());
    }
    // share of the per-area budget left for the background; exactly 1 when r = 1
    let bg_scale = (kf * total - fg_demand) / (kf * bg_area as f64);
    Ok(areas
        .iter()
        .zip(classes)
        .map(|(&a, &c)| match c {
            ObjectClass::Foreground => (a as f64 * kf) * r / total,
            ObjectClass::Background => (a as f64 * kf) * bg_scale / total,
        })
        .collect())
}

/// Visual-attention allocation rounded to exactly `k` with at least one per object.
pub fn va_allocate(partition: &PriorPartition, classes: &[ObjectClass], k: usize, r: f64) -> Result<Vec<usize>> {
    Ok(largest_remainder(&va_quotas(partition, classes, k, r)?, k))
}

/// Unrounded user-factor budgets: `K * |O_i| r_i / sum_j |O_j| r_j`.
pub fn user_quotas(partition: &PriorPartition, factors: &FactorMap, k: usize) -> Result<Vec<f64>> {
    check_budget(partition, k)?;
    let n = partition.object_count() as u32;
    if let Some((id, _)) = factors.iter().find(|&(id, _)| id >= n) {
        return Err(Error::InvalidConfig(format!("factor given for unknown object {id}")));
    }
    let areas = partition.object_areas();
    let denom: f64 = areas
        .iter()
        .enumerate()
        .map(|(i, &a)| a as f64 * factors.factor(i as u32))
        .sum();
    Ok(areas
        .iter()
        .enumerate()
        .map(|(i, &a)| (a as f64 * k as f64) * factors.factor(i as u32) / denom)
        .collect())
}

/// User-factor allocation rounded to exactly `k` with at least one per object.
pub fn user_allocate(partition: &PriorPartition, factors: &FactorMap, k: usize) -> Result<Vec<usize>> {
    Ok(largest_remainder(&user_quotas(partition, factors, k)?, k))
}
