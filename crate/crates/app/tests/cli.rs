use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ffp_app::io;
use ffp_core::edge::ImageBuffer;
use ffp_core::fixtures;

fn save_gray_png(img: &ImageBuffer, path: &Path) {
    let g = img.grid();
    let gray = image::GrayImage::from_fn(g.width() as u32, g.height() as u32, |x, y| {
        image::Luma([(img.channel(0).get(x as usize, y as usize) * 255.0).round() as u8])
    });
    gray.save(path).unwrap();
}

fn save_seeds(seeds: &ffp_core::fmm::SeedSets, path: &Path) {
    std::fs::write(path, io::to_json_bytes(&io::seeds_to_json(seeds))).unwrap();
}

fn ffp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ffp")).args(args).output().unwrap()
}

struct Disk {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Disk {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        let f = fixtures::disk(64, 20.0);
        save_gray_png(&f.image, &root.join("disk.png"));
        save_seeds(&f.seeds, &root.join("seeds.json"));
        Disk { _dir: dir, root }
    }

    fn p(&self, name: &str) -> String {
        self.root.join(name).display().to_string()
    }

    fn segment(&self, tag: &str) -> Output {
        ffp(&[
            "segment-fb",
            "--image",
            &self.p("disk.png"),
            "--seeds",
            &self.p("seeds.json"),
            "--out-label",
            &self.p(&format!("{tag}.png")),
            "--out-dist",
            &self.p(&format!("{tag}.ffd1")),
            "--out-contours",
            &self.p(&format!("{tag}.json")),
        ])
    }
}

#[test]
fn segment_fb_writes_three_files() {
    let d = Disk::new();
    let out = d.segment("a");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let labels = io::decode_label_png(&std::fs::read(d.p("a.png")).unwrap()).unwrap();
    assert_eq!((labels.grid().width(), labels.grid().height()), (64, 64));
    assert_eq!(labels.get(32, 32), 1);
    assert_eq!(labels.get(0, 63), 2);
    let u = io::read_distance_map(Path::new(&d.p("a.ffd1"))).unwrap();
    assert_eq!(u.get(32, 32), 0.0);
    let contours: serde_json::Value = serde_json::from_slice(&std::fs::read(d.p("a.json")).unwrap()).unwrap();
    assert_eq!(contours["width"], 64);
    assert!(!contours["contours"].as_array().unwrap().is_empty());
}

#[test]
fn identical_invocations_give_identical_files() {
    let d = Disk::new();
    assert!(d.segment("a").status.success());
    assert!(d.segment("b").status.success());
    for ext in ["png", "ffd1", "json"] {
        let a = std::fs::read(d.p(&format!("a.{ext}"))).unwrap();
        let b = std::fs::read(d.p(&format!("b.{ext}"))).unwrap();
        assert!(a == b, "{ext} outputs differ");
    }
}

#[test]
fn missing_image_is_a_usage_error() {
    let out = ffp(&["segment-fb", "--seeds", "s.json", "--out-label", "a", "--out-dist", "b", "--out-contours", "c"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("--image") && err.contains("Usage"), "{err}");
}

#[test]
fn data_errors_exit_with_2() {
    let d = Disk::new();
    std::fs::write(d.p("one.json"), br#"{"sets":[{"label":1,"points":[[1,1]]}]}"#).unwrap();
    let out = ffp(&[
        "segment-fb",
        "--image",
        &d.p("disk.png"),
        "--seeds",
        &d.p("one.json"),
        "--out-label",
        &d.p("x.png"),
        "--out-dist",
        &d.p("x.ffd1"),
        "--out-contours",
        &d.p("x.json"),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error:"));

    let out = ffp(&["metric-info", "--image", &d.p("missing.png"), "--point", "1,1", "--out", &d.p("m.json")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn segment_tube_respects_n_th() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixtures::bar(64, 32, 4);
    let (img, seeds) = (dir.path().join("bar.png"), dir.path().join("seeds.json"));
    save_gray_png(&f.image, &img);
    save_seeds(&f.seeds, &seeds);
    let path = |n: &str| dir.path().join(n).display().to_string();
    let out = ffp(&[
        "segment-tube",
        "--image",
        &path("bar.png"),
        "--seeds",
        &path("seeds.json"),
        "--n-th",
        "120",
        "--out-label",
        &path("t.png"),
        "--out-dist",
        &path("t.ffd1"),
        "--out-contours",
        &path("t.json"),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let labels = io::decode_label_png(&std::fs::read(path("t.png")).unwrap()).unwrap();
    assert_eq!(labels.values().iter().filter(|l| **l == 1).count(), 120);
}

#[test]
fn metric_info_reports_72_directions() {
    let d = Disk::new();
    let out = ffp(&["metric-info", "--image", &d.p("disk.png"), "--point", "52,32", "--out", &d.p("m.json")]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(d.p("m.json")).unwrap()).unwrap();
    let records = v["records"].as_array().unwrap();
    assert_eq!(records.len(), 72);
    let step = records[1]["angle"].as_f64().unwrap() - records[0]["angle"].as_f64().unwrap();
    assert!((step - std::f64::consts::PI / 36.0).abs() < 1e-12);
    assert!(v["kappa"].as_f64().unwrap() >= 1.0);
    // j = 72 is along g, j = 36 against it, j = 18 and 54 across it
    let cost = |j: usize| records[j - 1]["cost"].as_f64().unwrap();
    let c = v["potential"].as_f64().unwrap();
    assert!((cost(72) - c * v["psi_f"].as_f64().unwrap()).abs() < 1e-9 * cost(72));
    assert!((cost(36) - c * v["psi_b"].as_f64().unwrap()).abs() < 1e-9 * cost(36));
    assert!((cost(18) - c).abs() < 1e-9 * c && (cost(54) - c).abs() < 1e-9 * c);
    assert!(cost(18) < cost(72) && cost(72) < cost(36));
}

#[test]
fn gvf_dump_has_one_vector_per_pixel() {
    let d = Disk::new();
    let out = ffp(&["gvf", "--image", &d.p("disk.png"), "--out", &d.p("h.json")]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(d.p("h.json")).unwrap()).unwrap();
    assert_eq!(v["h"].as_array().unwrap().len(), 64 * 64);
    assert_eq!(v["converged"], true);
}

#[test]
fn help_exits_zero() {
    assert_eq!(ffp(&["--help"]).status.code(), Some(0));
    assert_eq!(ffp(&[]).status.code(), Some(1));
}
