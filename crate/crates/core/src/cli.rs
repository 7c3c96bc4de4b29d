//! Command-line interface behind the `superpix` binary.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::adaptive::{FactorMap, DEFAULT_SALIENCY_THRESHOLD};
use crate::bench::{rows_csv, run_benchmark, BenchConfig};
use crate::clustering::SuperpixelLabeling;
use crate::error::{Error, Result};
use crate::io::{
    read_features, read_image, read_labels, read_masks, read_saliency, write_labels, write_overlay, LabelRaster,
};
use crate::metrics::{evaluate, f_measure_protocol, GroundTruth, DEFAULT_EPS, DEFAULT_SCALES};
use crate::pipeline::{segment, Allocation};
use crate::prior::{aggregate, AggregationConfig, PriorPartition};
use crate::raster::{ClusterConfig, FeatureStack, Image};
use crate::refine::{refine, DEFAULT_KERNEL, DEFAULT_REFINE_K};
use crate::serve::{ApiServer, Session};

#[derive(Debug, Parser)]
#[command(name = "superpix", version, about = "Superpixels constrained by a prior object partition")]
pub struct Cli {
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Merge object proposal masks into a prior partition.
    Aggregate {
        /// SPM1 file or directory of PGM masks.
        #[arg(long)]
        masks: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        min_area: Option<usize>,
        #[arg(long)]
        open_radius: Option<usize>,
    },
    /// Compute superpixels.
    Segment(SegmentArgs),
    /// Score a segmentation against ground truth.
    Eval {
        #[arg(long)]
        seg: PathBuf,
        /// Ground truth; repeat for several annotations.
        #[arg(long, required = true)]
        gt: Vec<PathBuf>,
        #[arg(long)]
        image: PathBuf,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
        /// Requested K for delta_k; defaults to the realized count.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Best boundary F-measure over a range of superpixel counts.
    Fmeasure {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SCALES)]
        scales: Vec<usize>,
        #[arg(long)]
        prior: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
        #[command(flatten)]
        cluster: ClusterArgs,
    },
    /// Move semantic borders onto image edges.
    Refine {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        semantic: PathBuf,
        #[arg(long, default_value_t = DEFAULT_REFINE_K)]
        k: usize,
        #[arg(long, default_value_t = DEFAULT_KERNEL)]
        kernel: usize,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        cluster: ClusterArgs,
    },
    /// Serve the interactive HTTP API for one image.
    Serve {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        prior: Option<PathBuf>,
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long)]
        saliency: Option<PathBuf>,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Request handler threads.
        #[arg(long, default_value_t = 4)]
        workers: usize,
    },
    /// Evaluate a dataset directory at several K.
    Bench {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [100, 250, 400])]
        ks: Vec<usize>,
        /// JSON summary.
        #[arg(long)]
        out: PathBuf,
        /// Per-image CSV rows.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Per-stage wall-clock timings (JSON).
        #[arg(long)]
        timings: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
        #[command(flatten)]
        cluster: ClusterArgs,
    },
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[arg(long)]
    pub lambda_c: Option<f64>,
    #[arg(long)]
    pub lambda_s: Option<f64>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl ClusterArgs {
    fn config(&self, k: usize) -> ClusterConfig {
        let d = ClusterConfig::default();
        ClusterConfig {
            k,
            lambda_c: self.lambda_c.unwrap_or(d.lambda_c),
            lambda_s: self.lambda_s.unwrap_or(d.lambda_s),
            iterations: self.iters.unwrap_or(d.iterations),
            rng_seed: self.seed,
            ..d
        }
    }
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub k: usize,
    /// SPL1 prior partition; the whole image is one object when omitted.
    #[arg(long)]
    pub prior: Option<PathBuf>,
    /// SPF1 deep features.
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[command(flatten)]
    pub cluster: ClusterArgs,
    /// Saliency map (PGM or single-channel SPF1) for attention mode.
    #[arg(long, requires = "va_ratio")]
    pub saliency: Option<PathBuf>,
    #[arg(long, requires = "saliency", conflicts_with = "factors")]
    pub va_ratio: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_SALIENCY_THRESHOLD)]
    pub va_threshold: f64,
    /// Per-object density factors, `id=r,...`.
    #[arg(long, value_delimiter = ',', value_parser = parse_factor)]
    pub factors: Vec<(u32, f64)>,
    #[arg(long)]
    pub out: PathBuf,
    /// Image with superpixel boundaries drawn in red.
    #[arg(long)]
    pub overlay: Option<PathBuf>,
}

fn parse_factor(s: &str) -> std::result::Result<(u32, f64), String> {
    let (id, r) = s.split_once('=').ok_or_else(|| format!("expected id=factor, got {s:?}"))?;
    let id = id.trim().parse().map_err(|_| format!("bad object id {id:?}"))?;
    let r: f64 = r.trim().parse().map_err(|_| format!("bad factor {r:?}"))?;
    if !(r.is_finite() && r > 0.0) {
        return Err("factor must be positive".into());
    }
    Ok((id, r))
}

fn load_prior(path: Option<&Path>, dims: (usize, usize)) -> Result<PriorPartition> {
    match path {
        None => Ok(PriorPartition::whole(dims.0, dims.1)),
        Some(p) => {
            let l = read_labels(p)?;
            if l.dims() != dims {
                return Err(Error::dims(dims, l.dims()));
            }
            PriorPartition::from_labels(l.width, l.height, l.labels)
        }
    }
}

fn load_features(path: Option<&Path>, dims: (usize, usize)) -> Result<FeatureStack> {
    match path {
        None => Ok(FeatureStack::empty(dims.0, dims.1)),
        Some(p) => {
            let f = read_features(p)?;
            if (f.width(), f.height()) != dims {
                return Err(Error::dims(dims, (f.width(), f.height())));
            }
            Ok(f)
        }
    }
}

fn load_gt(path: &Path, dims: (usize, usize)) -> Result<GroundTruth> {
    let l = read_labels(path)?;
    if l.dims() != dims {
        return Err(Error::dims(dims, l.dims()));
    }
    GroundTruth::new(l.width, l.height, l.labels)
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

fn run_segment(a: &SegmentArgs) -> Result<()> {
    let img = read_image(&a.image)?;
    let prior = load_prior(a.prior.as_deref(), img.dims())?;
    let features = load_features(a.features.as_deref(), img.dims())?;
    let allocation = match (&a.saliency, a.va_ratio) {
        (Some(s), Some(ratio)) => Allocation::VisualAttention {
            saliency: read_saliency(s)?,
            threshold: a.va_threshold,
            ratio,
        },
        _ if !a.factors.is_empty() => Allocation::UserFactors(FactorMap::new(a.factors.iter().copied())?),
        _ => Allocation::Proportional,
    };
    let seg = segment(&img, &features, &prior, &a.cluster.config(a.k), &allocation)?;
    let lab = seg.labeling();
    write_labels(&a.out, lab.width(), lab.height(), lab.labels())?;
    if let Some(o) = &a.overlay {
        write_overlay(o, &img, lab)?;
    }
    println!("{}", serde_json::json!({ "k_requested": a.k, "k_realized": lab.count() }));
    Ok(())
}

/// Executes one parsed command.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Aggregate {
            masks,
            out,
            min_area,
            open_radius,
        } => {
            let stack = read_masks(&masks)?;
            let (w, h) = stack.dims();
            let mut cfg = AggregationConfig::for_image(w, h);
            if let Some(m) = min_area {
                cfg.min_area = m;
            }
            if let Some(r) = open_radius {
                cfg.opening_radius = r;
            }
            let part = aggregate(&stack, &cfg);
            write_labels(&out, w, h, part.labels())?;
            println!(
                "{}",
                serde_json::json!({ "objects": part.object_count(), "uncertain": part.uncertain_count() })
            );
        }
        Command::Segment(a) => run_segment(&a)?,
        Command::Eval {
            seg,
            gt,
            image,
            eps,
            k,
            report,
        } => {
            let img = read_image(&image)?;
            let s = read_labels(&seg)?;
            if s.dims() != img.dims() {
                return Err(Error::dims(img.dims(), s.dims()));
            }
            let seg = SuperpixelLabeling::from_labels(s.width, s.height, s.labels)?;
            let gts = gt.iter().map(|p| load_gt(p, img.dims())).collect::<Result<Vec<_>>>()?;
            let r = evaluate(&seg, &gts, &img, k.unwrap_or(seg.count()).max(1), eps)?;
            if let Some(p) = report {
                write_json(&p, &r)?;
            }
            println!("{}", serde_json::to_string(&r)?);
        }
        Command::Fmeasure {
            image,
            gt,
            scales,
            prior,
            eps,
            cluster,
        } => {
            let img = read_image(&image)?;
            let gt = load_gt(&gt, img.dims())?;
            let prior = load_prior(prior.as_deref(), img.dims())?;
            let features = FeatureStack::empty(img.width(), img.height());
            let segs = scales
                .iter()
                .map(|&k| {
                    segment(&img, &features, &prior, &cluster.config(k), &Allocation::Proportional)
                        .map(|s| s.output.labeling)
                })
                .collect::<Result<Vec<_>>>()?;
            let f = f_measure_protocol(&segs, &gt, eps)?;
            let realized: Vec<usize> = segs.iter().map(SuperpixelLabeling::count).collect();
            println!("{}", serde_json::json!({ "f": f, "scales": scales, "k_realized": realized }));
        }
        Command::Refine {
            image,
            semantic,
            k,
            kernel,
            out,
            cluster,
        } => {
            let img = read_image(&image)?;
            let sem: LabelRaster = read_labels(&semantic)?;
            if sem.dims() != img.dims() {
                return Err(Error::dims(img.dims(), sem.dims()));
            }
            let refined = refine(&img, &sem.labels, kernel, &cluster.config(k))?;
            let changed = refined.iter().zip(&sem.labels).filter(|(a, b)| a != b).count();
            write_labels(&out, img.width(), img.height(), &refined)?;
            println!("{}", serde_json::json!({ "changed_pixels": changed }));
        }
        Command::Serve {
            image,
            prior,
            features,
            saliency,
            port,
            host,
            workers,
        } => {
            let img: Image = read_image(&image)?;
            let dims = img.dims();
            let session = Session::new(
                img,
                load_features(features.as_deref(), dims)?,
                load_prior(prior.as_deref(), dims)?,
                saliency.map(read_saliency).transpose()?,
            )?;
            let server = ApiServer::bind(&format!("{host}:{port}"), session)?;
            eprintln!("listening on http://{host}:{}", server.port().unwrap_or(port));
            server.run(workers);
        }
        Command::Bench {
            data,
            ks,
            out,
            csv,
            timings,
            eps,
            cluster,
        } => {
            let cfg = BenchConfig {
                cluster: cluster.config(ks.first().copied().unwrap_or(1)),
                ks,
                eps,
            };
            let (report, times) = run_benchmark(&data, &cfg)?;
            for w in &report.warnings {
                log::warn!("{w}");
            }
            write_json(&out, &report)?;
            if let Some(p) = csv {
                std::fs::write(p, rows_csv(&report.rows)?)?;
            }
            if let Some(p) = timings {
                write_json(&p, &times)?;
            }
            println!(
                "{}",
                serde_json::json!({ "images": report.images, "warnings": report.warnings.len() })
            );
        }
    }
    Ok(())
}

/// Parses arguments, runs the command inside a sized thread pool and maps
/// the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        pool = pool.num_threads(n);
    }
    let result = match pool.build() {
        Ok(pool) => pool.install(|| run(cli)),
        Err(e) => Err(Error::InvalidConfig(format!("thread pool: {e}"))),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
