//! One complete session against the HTTP service, driven in-process: upload an
//! image, set seeds, start a run, poll progress and fetch the label map.
//! `ffp serve` exposes the same routes on a TCP port.

use std::time::Duration;

use axum::body::Body;
use axum::http::{Method, Request};
use ffp_app::io;
use ffp_app::server::{router, ServerConfig};
use ffp_core::fixtures;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &axum::Router, method: Method, uri: &str, ct: Option<&str>, body: Vec<u8>) -> (u16, Vec<u8>) {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(ct) = ct {
        req = req.header("content-type", ct);
    }
    let resp = app.clone().oneshot(req.body(Body::from(body)).unwrap()).await.unwrap();
    let status = resp.status().as_u16();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

#[tokio::main]
async fn main() {
    let app = router(ServerConfig::default());
    let f = fixtures::disk(128, 40.0);
    let gray = image::GrayImage::from_fn(128, 128, |x, y| {
        image::Luma([(f.image.channel(0).get(x as usize, y as usize) * 255.0) as u8])
    });
    let mut png = std::io::Cursor::new(Vec::new());
    gray.write_to(&mut png, image::ImageFormat::Png).unwrap();

    let mut form = b"--b\r\nContent-Disposition: form-data; name=\"image\"; filename=\"disk.png\"\r\n\r\n".to_vec();
    form.extend(png.into_inner());
    form.extend(b"\r\n--b--\r\n");
    let (status, body) = call(&app, Method::POST, "/api/sessions", Some("multipart/form-data; boundary=b"), form).await;
    let session: Value = serde_json::from_slice(&body).unwrap();
    println!("POST /api/sessions -> {status} {session}");
    let id = session["id"].as_str().unwrap();

    let seeds = io::to_json_bytes(&io::seeds_to_json(&f.seeds));
    let (status, _) = call(&app, Method::PUT, &format!("/api/sessions/{id}/seeds"), Some("application/json"), seeds).await;
    println!("PUT  seeds -> {status}");

    let run = json!({"mode": "fb", "params": {"alpha_f": 2.0, "alpha_b": 3.0, "colorspace": "rgb"}});
    let (status, body) =
        call(&app, Method::POST, &format!("/api/sessions/{id}/run"), Some("application/json"), run.to_string().into_bytes()).await;
    println!("POST run -> {status} {}", String::from_utf8_lossy(&body));

    loop {
        let (_, body) = call(&app, Method::GET, &format!("/api/sessions/{id}/progress"), None, Vec::new()).await;
        let p: Value = serde_json::from_slice(&body).unwrap();
        println!("GET  progress -> {p}");
        if p["status"] != "running" {
            break;
        }
        tokio::time::sleep(Duration::from_millis(25)).await;
    }

    let (status, png) = call(&app, Method::GET, &format!("/api/sessions/{id}/label.png"), None, Vec::new()).await;
    let labels = io::decode_label_png(&png).unwrap();
    let fg = labels.values().iter().filter(|l| **l == 1).count();
    println!("GET  label.png -> {status}, {} bytes, {fg} foreground pixels", png.len());
    let (status, _) = call(&app, Method::DELETE, &format!("/api/sessions/{id}"), None, Vec::new()).await;
    println!("DELETE -> {status}");
}
