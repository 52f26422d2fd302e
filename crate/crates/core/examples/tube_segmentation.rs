//! Tubular segmentation: a front grown from one seed stops after `n_th` pixels.
//! The printed fraction is the share of the accepted mask inside the structure.

use ffp_core::fixtures;
use ffp_core::metric::CostParams;
use ffp_core::pipeline::{inside_fraction, segment_tube, TubeOptions};

fn main() -> ffp_core::Result<()> {
    for (name, f) in [("bar", fixtures::bar(128, 64, 5)), ("spiral", fixtures::spiral(160, 2.5, 2.5))] {
        println!("{name}: {} structure pixels", f.area());
        for budget in [0.5, 1.0, 1.5] {
            let n_th = (f.area() as f64 * budget) as usize;
            for (label, params) in [("(0,0)", CostParams::isotropic()), ("(2,3)", CostParams::randers())] {
                let r = segment_tube(&f.image, &f.seeds, &TubeOptions { params, ..TubeOptions::new(n_th) })?;
                let frac = inside_fraction(&r.mask_of(1), &f.truth)?;
                let covered = r.mask_of(1).iter().zip(&f.truth).filter(|(m, t)| **m && **t).count();
                println!(
                    "  n_th {n_th:>5}  alpha {label}  inside {frac:.3}  structure covered {:.3}  contours {}",
                    covered as f64 / f.area() as f64,
                    r.contours.len()
                );
            }
        }
    }
    Ok(())
}
