//! Serves the annotation API for a synthetic image and drives it with a few
//! requests, the way the browser client does.
//!
//! ```text
//! cargo run --example interactive_server          # scripted requests, then exit
//! cargo run --example interactive_server -- 8080  # keep serving on port 8080
//! ```

use std::io::{Read, Write};
use std::net::TcpStream;

use superpix::prior::PriorPartition;
use superpix::raster::{FeatureStack, Image};
use superpix::serve::{ApiServer, SegmentResponse, Session};

fn post(port: u16, path: &str, body: &str) -> std::io::Result<String> {
    let mut s = TcpStream::connect(("127.0.0.1", port))?;
    write!(
        s,
        "POST {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\nContent-Length: {}\r\n\r\n{body}",
        body.len()
    )?;
    let mut raw = String::new();
    s.read_to_string(&mut raw)?;
    let (head, body) = raw.split_once("\r\n\r\n").unwrap_or((&raw, ""));
    if !head.to_ascii_lowercase().contains("transfer-encoding: chunked") {
        return Ok(body.to_string());
    }
    // chunked: hex length line, data, CRLF, until a zero-length chunk
    let mut out = String::new();
    let mut rest = body;
    while let Some((len, tail)) = rest.split_once("\r\n") {
        let n = usize::from_str_radix(len.trim(), 16).unwrap_or(0);
        if n == 0 || tail.len() < n {
            break;
        }
        out.push_str(&tail[..n]);
        rest = tail[n..].trim_start_matches("\r\n");
    }
    Ok(out)
}

fn main() -> superpix::Result<()> {
    let (w, h) = (160, 120);
    let labels: Vec<u32> = (0..w * h).map(|p| ((p % w) / 40) as u32).collect();
    let img = Image::from_fn(w, h, |x, y| [(x * 255 / w) as u8, (y * 255 / h) as u8, 100])?;
    let session = Session::new(img, FeatureStack::empty(w, h), PriorPartition::from_labels(w, h, labels)?, None)?;

    let port: u16 = std::env::args().nth(1).and_then(|p| p.parse().ok()).unwrap_or(0);
    let server = ApiServer::bind(&format!("127.0.0.1:{port}"), session)?;
    let port = server.port().expect("bound to an IP address");
    println!("listening on http://127.0.0.1:{port}/api/session");
    if std::env::args().nth(1).is_some() {
        server.run(4);
        return Ok(());
    }

    let stop = server.stopper();
    let script = || -> superpix::Result<()> {
        // clicking object 2 twice doubles its factor each time
        for body in [r#"{"k": 120}"#, r#"{"k": 120, "factors": {"2": 2.0}}"#, r#"{"k": 120, "factors": {"2": 4.0}}"#] {
            let resp: SegmentResponse = serde_json::from_str(&post(port, "/api/segment", body)?)?;
            println!("{body:<40} -> {} superpixels, per object {:?}", resp.k_realized, resp.per_object_counts);
        }
        println!("{}", post(port, "/api/segment", r#"{"k": 120, "factors": {"2": -1}}"#)?);
        Ok(())
    };
    std::thread::scope(|scope| {
        scope.spawn(|| server.run(2));
        let result = script();
        stop();
        result
    })
}
