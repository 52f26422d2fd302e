//! Geodesic Voronoi regions of three seed sets over a smooth random Randers metric.
//! One joint front propagation labels every pixel with its closest set.

use ffp_core::fixtures::smooth_random_metric;
use ffp_core::fmm::{run_fast_marching, FmmConfig, SeedSet, SeedSets};
use ffp_core::grid::{Grid2D, Pixel};
use ffp_core::metric::anisotropy_ratio;

fn main() -> ffp_core::Result<()> {
    let grid = Grid2D::new(60, 30)?;
    let metric = smooth_random_metric(grid, 7);
    let seeds = SeedSets::new(
        grid,
        vec![
            SeedSet { label: 1, points: vec![Pixel::new(8, 6), Pixel::new(9, 6)] },
            SeedSet { label: 2, points: vec![Pixel::new(50, 8)] },
            SeedSet { label: 3, points: vec![Pixel::new(30, 25)] },
        ],
    )?;
    let out = run_fast_marching(&metric, &seeds, &FmmConfig::full())?;
    println!("kappa {:.2}, repair {:?}", anisotropy_ratio(&metric), out.repair);
    for label in 1..=3 {
        let n = out.state.labels().iter().filter(|l| **l == label).count();
        println!("region {label}: {n} pixels");
    }
    for y in 0..grid.height() {
        let row: String = (0..grid.width())
            .map(|x| {
                let i = grid.index(x, y);
                if out.state.is_seed(i) {
                    '*'
                } else {
                    [' ', '.', 'o', '#'][out.state.labels()[i] as usize]
                }
            })
            .collect();
        println!("{row}");
    }
    Ok(())
}
