//! Foreground/background segmentation of a disk from two seed sets, for the
//! isotropic, anisotropic Riemannian and Randers settings of the cost functions.

use ffp_core::fixtures;
use ffp_core::metric::CostParams;
use ffp_core::pipeline::{region_iou, segment_fb, FbOptions};

fn main() -> ffp_core::Result<()> {
    let f = fixtures::disk(128, 40.0);
    for (name, params) in [
        ("isotropic  (0,0)", CostParams::isotropic()),
        ("riemannian (2,0)", CostParams::anisotropic_riemannian()),
        ("randers    (2,3)", CostParams::randers()),
    ] {
        let r = segment_fb(&f.image, &f.seeds, &FbOptions { params, ..FbOptions::default() })?;
        let iou = region_iou(&r.mask_of(1), &f.truth)?;
        let boundary: f64 = r.contours.iter().filter(|c| c.label == Some(1)).map(|c| c.length()).sum();
        println!(
            "{name}: IoU {iou:.4}  boundary length {boundary:.1} (circle {:.1})  kappa {:.2}  {:?}",
            2.0 * std::f64::consts::PI * 40.0,
            r.stats.kappa,
            r.stats.runtime
        );
        for w in &r.stats.warnings {
            println!("  warning: {w}");
        }
    }
    Ok(())
}
