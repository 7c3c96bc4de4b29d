//! Batch evaluation over a directory of images and ground truths.
//!
//! Layout, grouped by file stem:
//! - `<stem>.ppm` or `<stem>.png`: the image
//! - `<stem>.gt.spl1` or `<stem>.gt<N>.spl1`: one or more ground truths
//! - `<stem>.prior.spl1`: optional prior partition
//! - `<stem>.masks.spm1`: optional mask stack, aggregated when no prior is given
//!
//! Images without a prior use the whole image as a single object.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_image, read_labels, read_masks};
use crate::metrics::{evaluate, GroundTruth, MetricsReport, DEFAULT_EPS};
use crate::pipeline::{segment, Allocation};
use crate::prior::{aggregate, AggregationConfig, PriorPartition};
use crate::raster::{ClusterConfig, FeatureStack};

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub ks: Vec<usize>,
    /// Clustering parameters; `k` is replaced by each entry of `ks`.
    pub cluster: ClusterConfig,
    pub eps: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            ks: vec![100, 250, 400],
            cluster: ClusterConfig::default(),
            eps: DEFAULT_EPS,
        }
    }
}

/// One image at one K.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageRow {
    pub stem: String,
    pub k: usize,
    pub asa: f64,
    pub gr: f64,
    pub recall: f64,
    pub precision: f64,
    pub f: f64,
    pub ev: f64,
    pub delta_k: f64,
    pub k_realized: usize,
}

impl ImageRow {
    fn new(stem: &str, k: usize, r: &MetricsReport) -> Self {
        ImageRow {
            stem: stem.to_string(),
            k,
            asa: r.asa,
            gr: r.gr,
            recall: r.recall,
            precision: r.precision,
            f: r.f,
            ev: r.ev,
            delta_k: r.delta_k,
            k_realized: r.k_realized,
        }
    }
}

/// Means over all images at one K.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KSummary {
    pub k: usize,
    pub images: usize,
    pub asa: f64,
    pub gr: f64,
    pub recall: f64,
    pub precision: f64,
    pub f: f64,
    pub ev: f64,
    pub delta_k: f64,
    pub k_realized: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub images: usize,
    pub warnings: Vec<String>,
    pub per_k: Vec<KSummary>,
    #[serde(skip)]
    pub rows: Vec<ImageRow>,
}

/// Wall-clock milliseconds per stage for one image at one K.
#[derive(Clone, Debug, Serialize)]
pub struct StageTimings {
    pub stem: String,
    pub k: usize,
    pub prior_ms: f64,
    pub segment_ms: f64,
    pub metrics_ms: f64,
}

#[derive(Debug, Default)]
struct Entry {
    image: Option<PathBuf>,
    gts: Vec<PathBuf>,
    prior: Option<PathBuf>,
    masks: Option<PathBuf>,
}

enum Role {
    Image,
    Gt,
    Prior,
    Masks,
}

fn classify(name: &str) -> Option<(&str, Role)> {
    if let Some(stem) = name.strip_suffix(".masks.spm1") {
        return Some((stem, Role::Masks));
    }
    if let Some(rest) = name.strip_suffix(".spl1") {
        if let Some(stem) = rest.strip_suffix(".prior") {
            return Some((stem, Role::Prior));
        }
        let (stem, tag) = rest.rsplit_once('.')?;
        let n = tag.strip_prefix("gt")?;
        if n.chars().all(|c| c.is_ascii_digit()) {
            return Some((stem, Role::Gt));
        }
        return None;
    }
    let (stem, ext) = name.rsplit_once('.')?;
    matches!(ext.to_ascii_lowercase().as_str(), "ppm" | "png").then_some((stem, Role::Image))
}

/// Groups dataset files by stem. Unrecognized or unpaired files become warnings.
fn scan(dir: &Path) -> Result<(BTreeMap<String, Entry>, Vec<String>)> {
    let mut names: Vec<String> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_file())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    let mut entries: BTreeMap<String, Entry> = BTreeMap::new();
    let mut warnings = Vec::new();
    for name in names {
        let path = dir.join(&name);
        let Some((stem, role)) = classify(&name) else {
            warnings.push(format!("{name}: unrecognized file"));
            continue;
        };
        let e = entries.entry(stem.to_string()).or_default();
        match role {
            Role::Image if e.image.is_some() => warnings.push(format!("{name}: second image for stem {stem}")),
            Role::Image => e.image = Some(path),
            Role::Gt => e.gts.push(path),
            Role::Prior => e.prior = Some(path),
            Role::Masks => e.masks = Some(path),
        }
    }
    entries.retain(|stem, e| {
        if e.image.is_none() {
            warnings.push(format!("{stem}: no image"));
            false
        } else if e.gts.is_empty() {
            warnings.push(format!("{stem}: no ground truth"));
            false
        } else {
            true
        }
    });
    Ok((entries, warnings))
}

fn load_gt(path: &Path, dims: (usize, usize)) -> Result<GroundTruth> {
    let l = read_labels(path)?;
    if l.dims() != dims {
        return Err(Error::dims(dims, l.dims()));
    }
    GroundTruth::new(l.width, l.height, l.labels)
}

type ImageResult = (Vec<(ImageRow, StageTimings)>, Vec<String>);

fn run_image(stem: &str, e: &Entry, cfg: &BenchConfig) -> Result<ImageResult> {
    let img = read_image(e.image.as_ref().expect("entries are paired"))?;
    let (w, h) = img.dims();
    let gts = e.gts.iter().map(|p| load_gt(p, (w, h))).collect::<Result<Vec<_>>>()?;
    let t = Instant::now();
    let prior = if let Some(p) = &e.prior {
        let l = read_labels(p)?;
        if l.dims() != (w, h) {
            return Err(Error::dims((w, h), l.dims()));
        }
        PriorPartition::from_labels(w, h, l.labels)?
    } else if let Some(m) = &e.masks {
        let stack = read_masks(m)?;
        if stack.dims() != (w, h) {
            return Err(Error::dims((w, h), stack.dims()));
        }
        aggregate(&stack, &AggregationConfig::for_image(w, h))
    } else {
        PriorPartition::whole(w, h)
    };
    let prior_ms = t.elapsed().as_secs_f64() * 1e3;
    let features = FeatureStack::empty(w, h);
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for &k in &cfg.ks {
        let cc = ClusterConfig { k, ..cfg.cluster.clone() };
        let t = Instant::now();
        let seg = match segment(&img, &features, &prior, &cc, &Allocation::Proportional) {
            Ok(s) => s,
            Err(err @ Error::InsufficientBudget { .. }) => {
                warnings.push(format!("{stem}: skipped at K={k}: {err}"));
                continue;
            }
            Err(err) => return Err(err),
        };
        let segment_ms = t.elapsed().as_secs_f64() * 1e3;
        let t = Instant::now();
        let report = evaluate(seg.labeling(), &gts, &img, k, cfg.eps)?;
        let metrics_ms = t.elapsed().as_secs_f64() * 1e3;
        rows.push((
            ImageRow::new(stem, k, &report),
            StageTimings {
                stem: stem.to_string(),
                k,
                prior_ms,
                segment_ms,
                metrics_ms,
            },
        ));
    }
    Ok((rows, warnings))
}

/// Arithmetic means of `rows` per K, in the order of `ks`.
pub fn summarize(rows: &[ImageRow], ks: &[usize]) -> Vec<KSummary> {
    ks.iter()
        .filter_map(|&k| {
            let sel: Vec<&ImageRow> = rows.iter().filter(|r| r.k == k).collect();
            if sel.is_empty() {
                return None;
            }
            let n = sel.len() as f64;
            let mean = |f: fn(&ImageRow) -> f64| sel.iter().map(|r| f(r)).sum::<f64>() / n;
            Some(KSummary {
                k,
                images: sel.len(),
                asa: mean(|r| r.asa),
                gr: mean(|r| r.gr),
                recall: mean(|r| r.recall),
                precision: mean(|r| r.precision),
                f: mean(|r| r.f),
                ev: mean(|r| r.ev),
                delta_k: mean(|r| r.delta_k),
                k_realized: mean(|r| r.k_realized as f64),
            })
        })
        .collect()
}

/// Segments and scores every paired image at every K.
pub fn run_benchmark(dir: impl AsRef<Path>, cfg: &BenchConfig) -> Result<(BenchReport, Vec<StageTimings>)> {
    let dir = dir.as_ref();
    if !dir.is_dir() {
        return Err(Error::InvalidConfig(format!("{} is not a directory", dir.display())));
    }
    let (entries, mut warnings) = scan(dir)?;
    if entries.is_empty() {
        warnings.push("no paired images found".into());
    }
    let list: Vec<(&String, &Entry)> = entries.iter().collect();
    let results: Vec<(String, Result<ImageResult>)> = list
        .par_iter()
        .map(|(stem, e)| (stem.to_string(), run_image(stem, e, cfg)))
        .collect();
    let mut rows = Vec::new();
    let mut timings = Vec::new();
    let mut images = 0;
    for (stem, r) in results {
        match r {
            Ok((pairs, w)) => {
                images += 1;
                warnings.extend(w);
                for (row, t) in pairs {
                    rows.push(row);
                    timings.push(t);
                }
            }
            Err(e) => warnings.push(format!("{stem}: skipped: {e}")),
        }
    }
    let per_k = summarize(&rows, &cfg.ks);
    Ok((
        BenchReport {
            images,
            warnings,
            per_k,
            rows,
        },
        timings,
    ))
}

/// Per-image rows as CSV.
pub fn rows_csv(rows: &[ImageRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::InvalidConfig(format!("csv: {e}")))?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}
