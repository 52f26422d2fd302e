//! The fast marching solution next to two independent references: a 16-neighbour
//! Dijkstra graph distance and a ternary-search sweeping solver.

use ffp_core::fixtures::smooth_random_metric;
use ffp_core::fmm::{hopf_lax_residual, run_fast_marching, FmmConfig, SeedSets};
use ffp_core::grid::{Grid2D, Pixel};
use ffp_core::oracle::{dijkstra_distance, sweeping_solution, GraphNeighborhood};

fn main() -> ffp_core::Result<()> {
    let grid = Grid2D::new(50, 50)?;
    let seeds = SeedSets::single(grid, vec![Pixel::new(25, 25)])?;
    println!("{:>4} {:>12} {:>12} {:>12} {:>12}", "seed", "residual", "vs sweeping", "vs dijk-8", "vs dijk-16");
    for s in 0..4 {
        let metric = smooth_random_metric(grid, s);
        let out = run_fast_marching(&metric, &seeds, &FmmConfig::full())?;
        let u = out.state.distance();
        let gap = |reference: &[f64]| {
            (0..grid.len())
                .filter(|i| !out.state.is_seed(*i))
                .map(|i| (u[i] - reference[i]).abs() / reference[i])
                .fold(0.0, f64::max)
        };
        let (sweep, _) = sweeping_solution(&metric, &seeds, 1e-12, 500);
        let d8 = dijkstra_distance(&metric, &seeds, &GraphNeighborhood::eight());
        let d16 = dijkstra_distance(&metric, &seeds, &GraphNeighborhood::sixteen());
        println!(
            "{s:>4} {:>12.2e} {:>12.2e} {:>12.4} {:>12.4}",
            hopf_lax_residual(&out.state, &metric).max(),
            gap(sweep.values()),
            gap(d8.values()),
            gap(d16.values())
        );
    }
    Ok(())
}
