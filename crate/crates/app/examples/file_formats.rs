//! Writes a segmentation of the disk fixture in every output format to a
//! directory (default `./ffp-formats`), then reads each file back.

use std::path::PathBuf;

use ffp_app::io;
use ffp_core::fixtures;
use ffp_core::pipeline::{segment_fb, FbOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "ffp-formats".into()));
    std::fs::create_dir_all(&dir)?;

    let f = fixtures::disk(96, 30.0);
    let seeds_json = io::to_json_bytes(&io::seeds_to_json(&f.seeds));
    io::write_file(&dir.join("seeds.json"), &seeds_json)?;
    let seeds = io::parse_seeds(&io::read_file(&dir.join("seeds.json"))?, f.grid())?;
    assert_eq!(seeds, f.seeds);

    let r = segment_fb(&f.image, &seeds, &FbOptions::default())?;
    io::write_file(&dir.join("labels.png"), &io::encode_label_png(&r.label_map)?)?;
    io::write_distance_map(&r.distance_map, &dir.join("distance.ffd1"))?;
    io::write_file(&dir.join("contours.json"), &io::to_json_bytes(&io::contours_json(f.grid(), &r.contours)))?;

    let labels = io::decode_label_png(&io::read_file(&dir.join("labels.png"))?)?;
    let u = io::read_distance_map(&dir.join("distance.ffd1"))?;
    println!("wrote {}", dir.display());
    println!("  labels.png     {}x{}, labels {:?}", labels.grid().width(), labels.grid().height(), {
        let mut l: Vec<u32> = labels.values().to_vec();
        l.sort_unstable();
        l.dedup();
        l
    });
    println!("  distance.ffd1  max U {:.1}", u.max());
    println!("  contours.json  {} polylines", r.contours.len());
    for k in 0..4u8 {
        println!("  palette[{k}] = {:?}", io::palette_color(k));
    }
    Ok(())
}
