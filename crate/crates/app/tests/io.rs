use ffp_app::io::{self, IoError, RawDistanceMap};
use ffp_core::grid::{Field, Grid2D, ScalarField};
use rand::{Rng, SeedableRng};

fn png_bytes(img: image::DynamicImage) -> Vec<u8> {
    let mut out = std::io::Cursor::new(Vec::new());
    img.write_to(&mut out, image::ImageFormat::Png).unwrap();
    out.into_inner()
}

#[test]
fn plain_pgm_is_scaled_by_255() {
    let img = io::load_image_bytes(b"P2\n2 2\n255\n0 255\n128 64\n").unwrap();
    assert_eq!(img.channel_count(), 1);
    let v = img.channel(0).values();
    let expected = [0.0, 1.0, 0.50196, 0.25098];
    for (a, b) in v.iter().zip(expected) {
        assert!((a - b).abs() < 1e-5, "{a} vs {b}");
    }
}

#[test]
fn binary_ppm_and_rgb_png_have_three_channels() {
    let mut ppm = b"P6\n3 2\n255\n".to_vec();
    ppm.extend((0..18).map(|k| (k * 10) as u8));
    let img = io::load_image_bytes(&ppm).unwrap();
    assert_eq!((img.channel_count(), img.grid().width(), img.grid().height()), (3, 3, 2));
    assert!((img.channel(1).get(0, 0) - 10.0 / 255.0).abs() < 1e-12);

    let rgb = image::RgbImage::from_fn(5, 4, |x, y| image::Rgb([x as u8 * 50, y as u8 * 60, 7]));
    let img = io::load_image_bytes(&png_bytes(rgb.into())).unwrap();
    assert_eq!((img.channel_count(), img.grid().width(), img.grid().height()), (3, 5, 4));
    assert!((img.channel(0).get(4, 0) - 200.0 / 255.0).abs() < 1e-12);
    assert!((img.channel(1).get(0, 3) - 180.0 / 255.0).abs() < 1e-12);
}

#[test]
fn alpha_is_dropped() {
    let rgba = image::RgbaImage::from_fn(3, 3, |_, _| image::Rgba([255, 0, 0, 10]));
    let img = io::load_image_bytes(&png_bytes(rgba.into())).unwrap();
    assert_eq!(img.channel_count(), 3);
    assert_eq!(img.channel(0).get(1, 1), 1.0);
}

#[test]
fn bad_inputs_are_rejected() {
    let bytes = png_bytes(image::GrayImage::from_fn(16, 16, |x, _| image::Luma([x as u8])).into());
    let truncated = &bytes[..bytes.len() / 2];
    assert!(matches!(io::load_image_bytes(truncated), Err(IoError::Corrupt(_))));
    assert!(matches!(io::load_image_bytes(b"GIF89a......"), Err(IoError::UnsupportedFormat)));
    assert!(io::load_image_bytes(b"P2\n0 2\n255\n").is_err());
}

#[test]
fn seed_examples() {
    let g = Grid2D::new(10, 10).unwrap();
    let s = io::parse_seeds(br#"{"sets":[{"label":1,"points":[[0,0]]},{"label":2,"points":[[5,5]]}]}"#, g).unwrap();
    assert_eq!(s.len(), 2);
    assert_eq!(s.point_count(), 2);

    let e = io::parse_seeds(br#"{"sets":[{"label":1,"points":[[10,0]]}]}"#, g).unwrap_err();
    assert!(e.to_string().contains("point 0"), "{e}");
    assert!(io::parse_seeds(br#"{"sets":[{"label":1,"points":[[3,3]]},{"label":2,"points":[[3,3]]}]}"#, g).is_err());
    assert!(io::parse_seeds(br#"{"sets":[{"label":1,"points":[]}]}"#, g).is_err());
    assert!(io::parse_seeds(br#"{"sets":[{"label":0,"points":[[1,1]]}]}"#, g).is_err());

    let dup = io::parse_seeds(br#"{"sets":[{"label":1,"points":[[2,2],[2,2],[3,2]]}]}"#, g).unwrap();
    assert_eq!(dup.point_count(), 2);
}

#[test]
fn seed_json_round_trip() {
    let g = Grid2D::new(8, 6).unwrap();
    let text = br#"{"sets":[{"label":3,"points":[[7,5],[0,1]]},{"label":1,"points":[[4,4]]}]}"#;
    let s = io::parse_seeds(text, g).unwrap();
    let back = io::seeds_from_json(&io::seeds_to_json(&s), g).unwrap();
    assert_eq!(back, s);
}

#[test]
fn ffd1_one_pixel_layout() {
    let raw = RawDistanceMap { width: 1, height: 1, values: vec![2.5] };
    let bytes = io::encode_ffd1(&raw);
    assert_eq!(bytes, [0x46, 0x46, 0x44, 0x31, 1, 0, 0, 0, 1, 0, 0, 0, 0x00, 0x00, 0x20, 0x40]);
    assert_eq!(io::decode_ffd1(&bytes).unwrap(), raw);
}

#[test]
fn ffd1_round_trip_is_bitwise() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let g = Grid2D::new(37, 23).unwrap();
    let mut u = ScalarField::from_fn(g, |_, _| rng.gen_range(0.0f32..1e6) as f64);
    u.set(3, 4, f64::INFINITY);
    u.set(0, 0, 0.0);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("u.ffd1");
    io::write_distance_map(&u, &path).unwrap();
    let back = io::read_distance_map(&path).unwrap();
    let bits = |f: &ScalarField| f.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&back), bits(&u));
    assert_eq!(io::encode_distance_map(&back), std::fs::read(&path).unwrap());
}

#[test]
fn ffd1_errors() {
    let raw = RawDistanceMap { width: 3, height: 2, values: vec![1.0; 6] };
    let bytes = io::encode_ffd1(&raw);
    assert!(matches!(io::decode_ffd1(&bytes[..bytes.len() - 1]), Err(IoError::SizeMismatch { .. })));
    assert!(matches!(io::decode_ffd1(&bytes[..6]), Err(IoError::SizeMismatch { .. })));
    let mut bad = bytes.clone();
    bad[3] = b'2';
    assert!(matches!(io::decode_ffd1(&bad), Err(IoError::BadMagic)));
}

#[test]
fn label_png_round_trip_and_palette() {
    let g = Grid2D::new(9, 7).unwrap();
    let labels = Field::from_fn(g, |x, y| ((x + y) % 4) as u32);
    let png = io::encode_label_png(&labels).unwrap();
    assert_eq!(io::decode_label_png(&png).unwrap(), labels);

    // any image reader sees the palette colours
    let rgb = image::load_from_memory(&png).unwrap().into_rgb8();
    assert_eq!((rgb.width(), rgb.height()), (9, 7));
    assert_eq!(rgb.get_pixel(1, 0).0, io::palette_color(1));
    assert_eq!(rgb.get_pixel(0, 0).0, [0, 0, 0]);

    let big = Field::filled(g, 300u32);
    assert!(matches!(io::encode_label_png(&big), Err(IoError::LabelOverflow(300))));
}
