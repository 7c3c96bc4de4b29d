mod common;

use std::io::{Read, Write};
use std::net::TcpStream;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use serde_json::Value;
use superpix::io::{encode_labels, encode_masks};
use superpix::prior::{MaskStack, PriorPartition};
use superpix::raster::{FeatureStack, Image};
use superpix::serve::{rle_decode, ApiServer, Session, SegmentResponse};

use common::*;

const W: usize = 120;
const H: usize = 90;

/// Three column objects plus a small rectangle (object 3) carved out of the right one.
fn prior_labels() -> Vec<u32> {
    (0..W * H)
        .map(|p| {
            let (x, y) = (p % W, p / W);
            if (90..110).contains(&x) && (40..55).contains(&y) {
                3
            } else {
                (x / 40) as u32
            }
        })
        .collect()
}

struct Running {
    port: u16,
    stop: Box<dyn Fn() + Send + Sync>,
    handle: Option<thread::JoinHandle<()>>,
}

impl Drop for Running {
    fn drop(&mut self) {
        (self.stop)();
        if let Some(h) = self.handle.take() {
            h.join().unwrap();
        }
    }
}

fn start(session: Session) -> Running {
    let server = ApiServer::bind("127.0.0.1:0", session).unwrap();
    let port = server.port().unwrap();
    let stop = Box::new(server.stopper());
    let handle = thread::spawn(move || server.run(4));
    Running {
        port,
        stop,
        handle: Some(handle),
    }
}

fn small_session() -> Session {
    let mut r = rng(11);
    let img = paint(W, H, &voronoi(W, H, 12, &mut r), 10, &mut r);
    let prior = PriorPartition::from_labels(W, H, prior_labels()).unwrap();
    Session::new(img, FeatureStack::empty(W, H), prior, None).unwrap()
}

fn request(port: u16, method: &str, path: &str, body: &[u8]) -> (u16, Vec<u8>) {
    let mut s = TcpStream::connect(("127.0.0.1", port)).unwrap();
    write!(
        s,
        "{method} {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\nContent-Length: {}\r\n\r\n",
        body.len()
    )
    .unwrap();
    s.write_all(body).unwrap();
    let mut raw = Vec::new();
    s.read_to_end(&mut raw).unwrap();
    let split = raw.windows(4).position(|w| w == b"\r\n\r\n").expect("header terminator");
    let head = String::from_utf8_lossy(&raw[..split]).into_owned();
    let status = head.split_whitespace().nth(1).unwrap().parse().unwrap();
    let mut body = raw[split + 4..].to_vec();
    if head.to_ascii_lowercase().contains("transfer-encoding: chunked") {
        body = dechunk(&body);
    }
    (status, body)
}

fn dechunk(mut b: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    loop {
        let eol = b.windows(2).position(|w| w == b"\r\n").unwrap();
        let n = usize::from_str_radix(std::str::from_utf8(&b[..eol]).unwrap().trim(), 16).unwrap();
        if n == 0 {
            return out;
        }
        out.extend_from_slice(&b[eol + 2..eol + 2 + n]);
        b = &b[eol + 4 + n..];
    }
}

fn segment(port: u16, body: &str) -> SegmentResponse {
    let (status, bytes) = request(port, "POST", "/api/segment", body.as_bytes());
    assert_eq!(status, 200, "{}", String::from_utf8_lossy(&bytes));
    serde_json::from_slice(&bytes).unwrap()
}

#[test]
fn session_describes_objects() {
    let srv = start(small_session());
    let (status, body) = request(srv.port, "GET", "/api/session", b"");
    assert_eq!(status, 200);
    let v: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!((v["width"].as_u64(), v["height"].as_u64()), (Some(W as u64), Some(H as u64)));
    let objects = v["objects"].as_array().unwrap();
    assert_eq!(objects.len(), 4);
    assert_eq!(objects[3]["area"].as_u64(), Some(300));
    assert_eq!(objects[3]["bbox"], serde_json::json!([90, 40, 109, 54]));
}

#[test]
fn image_is_png() {
    let srv = start(small_session());
    let (status, body) = request(srv.port, "GET", "/api/image", b"");
    assert_eq!(status, 200);
    assert_eq!(&body[..8], b"\x89PNG\r\n\x1a\n");
    let img = superpix::io::decode_image(&body).unwrap();
    assert_eq!(img.dims(), (W, H));
}

#[test]
fn repeated_segment_is_byte_identical() {
    let srv = start(small_session());
    let a = request(srv.port, "POST", "/api/segment", br#"{"k": 200, "factors": {}}"#);
    let b = request(srv.port, "POST", "/api/segment", br#"{"k": 200, "factors": {}}"#);
    assert_eq!(a.0, 200);
    assert_eq!(a, b);
}

#[test]
fn rle_labels_round_trip_and_respect_prior() {
    let srv = start(small_session());
    let resp = segment(srv.port, r#"{"k": 150, "seed": 4}"#);
    let labels = rle_decode(&resp.labels_rle);
    assert_eq!(labels.len(), W * H);
    let count = *labels.iter().max().unwrap() as usize + 1;
    assert_eq!(count, resp.k_realized);
    let prior = prior_labels();
    let mut owner = vec![None; count];
    for (p, &l) in labels.iter().enumerate() {
        let o = owner[l as usize].get_or_insert(prior[p]);
        assert_eq!(*o, prior[p], "superpixel {l} spans two objects");
    }
    assert!(all_connected(&labels, W, H));
    assert_eq!(resp.per_object_counts.values().sum::<usize>(), 150);
    for &[x, y] in &resp.boundaries {
        let p = y * W + x;
        let differs = [(x > 0).then(|| p - 1), (x + 1 < W).then(|| p + 1), (y > 0).then(|| p - W), (y + 1 < H).then(|| p + W)]
            .into_iter()
            .flatten()
            .any(|q| labels[q] != labels[p]);
        assert!(differs, "({x}, {y}) listed as boundary");
    }
}

#[test]
fn doubling_a_factor_doubles_the_count() {
    let srv = start(small_session());
    let base = segment(srv.port, r#"{"k": 400, "factors": {}}"#);
    let boosted = segment(srv.port, r#"{"k": 400, "factors": {"3": 2.0}}"#);
    let (b, d) = (base.per_object_counts[&3] as i64, boosted.per_object_counts[&3] as i64);
    assert!(b >= 5, "object 3 got only {b}");
    assert!((d - 2 * b).abs() <= 1, "base {b}, doubled {d}");
    assert_eq!(boosted.per_object_counts.values().sum::<usize>(), 400);
}

#[test]
fn bad_requests_get_400() {
    let srv = start(small_session());
    let (s, body) = request(srv.port, "POST", "/api/segment", br#"{"k": 100, "factors": {"1": 0}}"#);
    assert_eq!(s, 400);
    assert!(String::from_utf8_lossy(&body).contains("factor must be positive"));
    let (s, _) = request(srv.port, "POST", "/api/segment", br#"{"k": 100, "factors": {"1": -2.5}}"#);
    assert_eq!(s, 400);
    for body in [&b"{"[..], br#"{"k": "many"}"#, br#"{"k": 10, "colour": 1}"#, br#"{"factors": {}}"#] {
        assert_eq!(request(srv.port, "POST", "/api/segment", body).0, 400);
    }
    // fewer superpixels than objects
    assert_eq!(request(srv.port, "POST", "/api/segment", br#"{"k": 2}"#).0, 400);
    assert_eq!(request(srv.port, "POST", "/api/segment", br#"{"k": 50, "va_ratio": 2.0}"#).0, 400);
    assert_eq!(request(srv.port, "POST", "/api/prior", b"garbage").0, 400);
    assert_eq!(request(srv.port, "DELETE", "/api/session", b"").0, 405);
    assert_eq!(request(srv.port, "GET", "/api/nothing", b"").0, 404);
}

#[test]
fn prior_upload_replaces_partition() {
    let srv = start(small_session());
    let halves: Vec<u32> = (0..W * H).map(|p| (p / W >= H / 2) as u32).collect();
    let (s, body) = request(srv.port, "POST", "/api/prior", &encode_labels(W, H, &halves));
    assert_eq!(s, 200, "{}", String::from_utf8_lossy(&body));
    let v: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(v["objects"].as_array().unwrap().len(), 2);
    let resp = segment(srv.port, r#"{"k": 60}"#);
    assert_eq!(resp.per_object_counts.len(), 2);

    let left: Vec<bool> = (0..W * H).map(|p| p % W < W / 2).collect();
    let stack = MaskStack::new(W, H, vec![left]).unwrap();
    let (s, _) = request(srv.port, "POST", "/api/prior", &encode_masks(&stack));
    assert_eq!(s, 200);
    let (_, body) = request(srv.port, "GET", "/api/session", b"");
    let v: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(v["objects"].as_array().unwrap().len(), 2);

    let wrong = encode_labels(W / 2, H, &vec![0; W / 2 * H]);
    assert_eq!(request(srv.port, "POST", "/api/prior", &wrong).0, 400);
}

#[test]
fn concurrent_mutation_gets_409() {
    let (w, h) = (480, 320);
    let mut r = rng(12);
    let img: Image = paint(w, h, &voronoi(w, h, 40, &mut r), 10, &mut r);
    let srv = start(Session::new(img, FeatureStack::empty(w, h), PriorPartition::whole(w, h), None).unwrap());
    let port = srv.port;
    let done = Arc::new(AtomicBool::new(false));
    let slow = {
        let done = Arc::clone(&done);
        thread::spawn(move || {
            let r = request(port, "POST", "/api/segment", br#"{"k": 3000, "iters": 80}"#);
            done.store(true, Ordering::SeqCst);
            r.0
        })
    };
    // an unparseable prior is 400 when idle and 409 while a segmentation holds the session
    let mut saw_conflict = false;
    while !done.load(Ordering::SeqCst) {
        match request(port, "POST", "/api/prior", b"not a raster").0 {
            409 => {
                saw_conflict = true;
                break;
            }
            400 => thread::sleep(Duration::from_millis(2)),
            s => panic!("unexpected status {s}"),
        }
    }
    assert_eq!(slow.join().unwrap(), 200);
    assert!(saw_conflict, "no request overlapped the running segmentation");
    assert_eq!(request(port, "POST", "/api/prior", b"not a raster").0, 400);
}
