//! Distance from a single seed under a constant Randers metric, compared with the
//! closed form `F(x - s)`. Travel along `g` (45°) costs 3, against it 8, across it 1.

use ffp_core::fmm::{run_fast_marching, FmmConfig, SeedSets};
use ffp_core::grid::{Field, Grid2D, Pixel};
use ffp_core::linalg::Vec2;
use ffp_core::metric::{CostFunctions, MetricMode, RandersMetricField};
use ffp_core::oracle::analytic_constant_distance;

fn main() -> ffp_core::Result<()> {
    for n in [51, 101, 201] {
        let grid = Grid2D::new(n, n)?;
        let costs = CostFunctions { psi_f: Field::filled(grid, 3.0), psi_b: Field::filled(grid, 8.0) };
        let g = Field::filled(grid, Vec2::from_angle(std::f64::consts::FRAC_PI_4));
        let metric = RandersMetricField::from_costs(&g, costs, Field::filled(grid, 1.0), MetricMode::Fb, 0.0)?;
        let seed = Pixel::new(n / 2, n / 2);
        let out = run_fast_marching(&metric, &SeedSets::single(grid, vec![seed])?, &FmmConfig::full())?;

        let (m, w) = (metric.tensor().values()[0], metric.omega().values()[0]);
        let (mut err, mut top) = (0.0f64, 0.0f64);
        for p in grid.pixels() {
            let exact = analytic_constant_distance(&m, w, 1.0, seed.as_vec(), p.as_vec());
            err = err.max((out.state.distance()[grid.index(p.x, p.y)] - exact).abs());
            top = top.max(exact);
        }
        let repair = out.repair.expect("full runs are repaired");
        println!(
            "{n:>3}x{n:<3} sup-norm relative error {:.5}  repair sweeps {}  changed {}",
            err / top,
            repair.sweeps,
            repair.changed_pixels
        );
    }

    // the front is lopsided: cheap towards +g, expensive towards -g
    let n = 41;
    let grid = Grid2D::new(n, n)?;
    let costs = CostFunctions { psi_f: Field::filled(grid, 3.0), psi_b: Field::filled(grid, 8.0) };
    let g = Field::filled(grid, Vec2::from_angle(std::f64::consts::FRAC_PI_4));
    let metric = RandersMetricField::from_costs(&g, costs, Field::filled(grid, 1.0), MetricMode::Fb, 0.0)?;
    let out = run_fast_marching(&metric, &SeedSets::single(grid, vec![Pixel::new(20, 20)])?, &FmmConfig::full())?;
    let u = out.state.distance_field();
    println!("\nlevel sets of U (one character per 10 units):");
    for y in (0..n).step_by(2) {
        let row: String = (0..n).map(|x| char::from(b'0' + ((u.get(x, y) / 10.0) as u8).min(9))).collect();
        println!("  {row}");
    }
    Ok(())
}
