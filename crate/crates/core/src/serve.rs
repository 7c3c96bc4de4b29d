//! Local HTTP API for interactive re-segmentation of one image.
//!
//! Endpoints:
//! - `GET /api/session`: image size and prior objects
//! - `GET /api/image`: the working image as PNG
//! - `POST /api/segment`: segment with a JSON parameter body
//! - `POST /api/prior`: replace the prior with an SPL1 or SPM1 body

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, TryLockError};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::adaptive::{FactorMap, SaliencyMap, DEFAULT_SALIENCY_THRESHOLD};
use crate::error::{Error, Result};
use crate::io::{decode_labels, decode_masks, encode_png};
use crate::metrics::boundary_map;
use crate::pipeline::{segment, Allocation};
use crate::prior::{aggregate, AggregationConfig, PriorPartition};
use crate::raster::{ClusterConfig, FeatureStack, Image};

/// Everything a session segments against.
#[derive(Clone, Debug)]
pub struct Session {
    pub image: Image,
    pub features: FeatureStack,
    pub prior: PriorPartition,
    pub saliency: Option<SaliencyMap>,
}

impl Session {
    pub fn new(image: Image, features: FeatureStack, prior: PriorPartition, saliency: Option<SaliencyMap>) -> Result<Self> {
        let dims = image.dims();
        let fd = (features.width(), features.height());
        for found in [fd, prior.dims()].into_iter().chain(saliency.as_ref().map(|s| s.dims())) {
            if found != dims {
                return Err(Error::dims(dims, found));
            }
        }
        Ok(Session {
            image,
            features,
            prior,
            saliency,
        })
    }
}

/// A plain HTTP response.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reply {
    pub status: u16,
    pub content_type: &'static str,
    pub body: Vec<u8>,
}

impl Reply {
    fn json(status: u16, value: &impl Serialize) -> Reply {
        Reply {
            status,
            content_type: "application/json",
            body: serde_json::to_vec(value).expect("serializable response"),
        }
    }

    fn error(status: u16, message: impl Into<String>) -> Reply {
        Reply::json(status, &serde_json::json!({ "error": message.into() }))
    }
}

#[derive(Serialize)]
struct ObjectInfo {
    id: u32,
    area: usize,
    bbox: [usize; 4],
}

#[derive(Serialize)]
struct SessionInfo {
    width: usize,
    height: usize,
    objects: Vec<ObjectInfo>,
}

/// Body of `POST /api/segment`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentRequest {
    pub k: usize,
    pub lambda_s: Option<f64>,
    pub lambda_c: Option<f64>,
    #[serde(default)]
    pub factors: BTreeMap<String, f64>,
    pub va_ratio: Option<f64>,
    pub iters: Option<usize>,
    pub seed: Option<u64>,
}

/// Body returned by `POST /api/segment`.
#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct SegmentResponse {
    pub k_realized: usize,
    /// `[label, run length]` pairs in raster order.
    pub labels_rle: Vec<[u32; 2]>,
    pub boundaries: Vec<[usize; 2]>,
    pub per_object_counts: BTreeMap<u32, usize>,
}

/// Run-length encodes a label raster.
pub fn rle_encode(labels: &[u32]) -> Vec<[u32; 2]> {
    let mut out: Vec<[u32; 2]> = Vec::new();
    for &l in labels {
        match out.last_mut() {
            Some(run) if run[0] == l => run[1] += 1,
            _ => out.push([l, 1]),
        }
    }
    out
}

pub fn rle_decode(runs: &[[u32; 2]]) -> Vec<u32> {
    runs.iter()
        .flat_map(|&[l, n]| std::iter::repeat_n(l, n as usize))
        .collect()
}

fn session_info(s: &Session) -> SessionInfo {
    let boxes = s.prior.bounding_boxes();
    SessionInfo {
        width: s.image.width(),
        height: s.image.height(),
        objects: s
            .prior
            .object_areas()
            .iter()
            .zip(boxes)
            .enumerate()
            .map(|(id, (&area, bbox))| ObjectInfo {
                id: id as u32,
                area,
                bbox,
            })
            .collect(),
    }
}

fn run_segment(s: &Session, body: &[u8]) -> Reply {
    let req: SegmentRequest = match serde_json::from_slice(body) {
        Ok(r) => r,
        Err(e) => return Reply::error(400, format!("malformed request: {e}")),
    };
    let mut factors = Vec::new();
    for (key, &r) in &req.factors {
        let Ok(id) = key.parse::<u32>() else {
            return Reply::error(400, format!("object id {key:?} is not a number"));
        };
        if !(r.is_finite() && r > 0.0) {
            return Reply::error(400, "factor must be positive");
        }
        factors.push((id, r));
    }
    let allocation = match (req.va_ratio, factors.is_empty()) {
        (Some(_), false) => return Reply::error(400, "va_ratio and factors are mutually exclusive"),
        (Some(ratio), true) => match &s.saliency {
            Some(map) => Allocation::VisualAttention {
                saliency: map.clone(),
                threshold: DEFAULT_SALIENCY_THRESHOLD,
                ratio,
            },
            None => return Reply::error(400, "session has no saliency map"),
        },
        (None, true) => Allocation::Proportional,
        (None, false) => match FactorMap::new(factors) {
            Ok(f) => Allocation::UserFactors(f),
            Err(e) => return Reply::error(400, e.to_string()),
        },
    };
    let defaults = ClusterConfig::default();
    let cfg = ClusterConfig {
        k: req.k,
        lambda_c: req.lambda_c.unwrap_or(defaults.lambda_c),
        lambda_s: req.lambda_s.unwrap_or(defaults.lambda_s),
        iterations: req.iters.unwrap_or(defaults.iterations),
        rng_seed: req.seed.unwrap_or(defaults.rng_seed),
        ..defaults
    };
    match segment(&s.image, &s.features, &s.prior, &cfg, &allocation) {
        Ok(seg) => {
            let lab = seg.labeling();
            let (w, h) = lab.dims();
            let boundaries = boundary_map(lab.labels(), w, h)
                .iter()
                .enumerate()
                .filter(|(_, &b)| b)
                .map(|(p, _)| [p % w, p / w])
                .collect();
            let per_object_counts = seg
                .seeds
                .per_object_counts
                .iter()
                .enumerate()
                .map(|(id, &n)| (id as u32, n))
                .collect();
            Reply::json(
                200,
                &SegmentResponse {
                    k_realized: lab.count(),
                    labels_rle: rle_encode(lab.labels()),
                    boundaries,
                    per_object_counts,
                },
            )
        }
        Err(e @ (Error::InvalidConfig(_) | Error::InsufficientBudget { .. })) => Reply::error(400, e.to_string()),
        Err(e) => Reply::error(500, e.to_string()),
    }
}

fn replace_prior(s: &mut Session, body: &[u8]) -> Reply {
    let (w, h) = s.image.dims();
    let prior = if body.starts_with(b"SPM1") {
        decode_masks(body).and_then(|m| {
            if m.dims() != (w, h) {
                return Err(Error::dims((w, h), m.dims()));
            }
            Ok(aggregate(&m, &AggregationConfig::for_image(w, h)))
        })
    } else {
        decode_labels(body).and_then(|l| {
            if l.dims() != (w, h) {
                return Err(Error::dims((w, h), l.dims()));
            }
            PriorPartition::from_labels(w, h, l.labels)
        })
    };
    match prior {
        Ok(p) => {
            s.prior = p;
            Reply::json(200, &session_info(s))
        }
        Err(e) => Reply::error(400, e.to_string()),
    }
}

/// Shared session state behind the HTTP API.
#[derive(Debug)]
pub struct App {
    session: Mutex<Session>,
}

impl App {
    pub fn new(session: Session) -> Self {
        App {
            session: Mutex::new(session),
        }
    }

    /// Routes one request. Segmenting and prior updates refuse to wait for a
    /// busy session and answer 409 instead.
    pub fn handle(&self, method: &str, path: &str, body: &[u8]) -> Reply {
        let path = path.split('?').next().unwrap_or(path);
        match (method, path) {
            ("GET", "/api/session") => Reply::json(200, &session_info(&self.lock())),
            ("GET", "/api/image") => match encode_png(&self.lock().image) {
                Ok(png) => Reply {
                    status: 200,
                    content_type: "image/png",
                    body: png,
                },
                Err(e) => Reply::error(500, e.to_string()),
            },
            ("POST", "/api/segment") => match self.try_lock() {
                Some(s) => run_segment(&s, body),
                None => Reply::error(409, "session busy"),
            },
            ("POST", "/api/prior") => match self.try_lock() {
                Some(mut s) => replace_prior(&mut s, body),
                None => Reply::error(409, "session busy"),
            },
            (_, "/api/session" | "/api/image" | "/api/segment" | "/api/prior") => Reply::error(405, "method not allowed"),
            _ => Reply::error(404, "not found"),
        }
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Session> {
        self.session.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn try_lock(&self) -> Option<std::sync::MutexGuard<'_, Session>> {
        match self.session.try_lock() {
            Ok(g) => Some(g),
            Err(TryLockError::Poisoned(e)) => Some(e.into_inner()),
            Err(TryLockError::WouldBlock) => None,
        }
    }
}

/// How often idle workers check for a stop request.
const POLL: Duration = Duration::from_millis(50);

/// HTTP listener bound to a session.
pub struct ApiServer {
    http: Arc<tiny_http::Server>,
    app: Arc<App>,
    stopped: Arc<AtomicBool>,
}

impl ApiServer {
    pub fn bind(addr: &str, session: Session) -> Result<Self> {
        let http = tiny_http::Server::http(addr).map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
        Ok(ApiServer {
            http: Arc::new(http),
            app: Arc::new(App::new(session)),
            stopped: Arc::new(AtomicBool::new(false)),
        })
    }

    pub fn port(&self) -> Option<u16> {
        self.http.server_addr().to_ip().map(|a| a.port())
    }

    /// Makes [`ApiServer::run`] return once in-flight requests finish.
    pub fn stopper(&self) -> impl Fn() + Send + Sync + 'static {
        let stopped = Arc::clone(&self.stopped);
        move || stopped.store(true, Ordering::SeqCst)
    }

    /// Serves requests on `workers` threads until stopped.
    pub fn run(&self, workers: usize) {
        std::thread::scope(|scope| {
            for _ in 0..workers.max(1) {
                scope.spawn(|| {
                    while !self.stopped.load(Ordering::SeqCst) {
                        let mut req = match self.http.recv_timeout(POLL) {
                            Ok(Some(r)) => r,
                            Ok(None) => continue,
                            Err(e) => {
                                log::error!("listener failed: {e}");
                                return;
                            }
                        };
                        let mut body = Vec::new();
                        let reply = match req.as_reader().read_to_end(&mut body) {
                            Ok(_) => self.app.handle(req.method().as_str(), req.url(), &body),
                            Err(e) => Reply::error(400, format!("unreadable body: {e}")),
                        };
                        let header = tiny_http::Header::from_bytes("Content-Type", reply.content_type)
                            .expect("static header is valid");
                        let resp = tiny_http::Response::from_data(reply.body)
                            .with_status_code(reply.status)
                            .with_header(header);
                        if let Err(e) = req.respond(resp) {
                            log::warn!("failed to send response: {e}");
                        }
                    }
                });
            }
        });
    }
}
