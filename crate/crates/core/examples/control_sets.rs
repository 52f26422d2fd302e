//! Unit balls `{u : F(q, u) <= 1}` of the edge-driven construction. With
//! `psi_f = psi_b` they are centred ellipses; a larger `psi_b` pushes them
//! towards `+g`, where travel is cheap.

use ffp_core::grid::{Field, Grid2D, Pixel};
use ffp_core::linalg::Vec2;
use ffp_core::metric::{closed_form_ratio, control_set, CostFunctions, MetricMode, RandersMetricField};

fn main() -> ffp_core::Result<()> {
    let grid = Grid2D::new(3, 3)?;
    let q = Pixel::new(1, 1);
    let g = Vec2::new(1.0, 0.0);
    println!("psi_f = 5, g = +x, 72 samples");
    println!("{:>6} {:>9} {:>9} {:>9} {:>9}", "psi_b", "x_min", "x_max", "y_max", "drift");
    for psi_b in [5.0, 8.0, 12.0, 20.0, 40.0] {
        let costs = CostFunctions { psi_f: Field::filled(grid, 5.0), psi_b: Field::filled(grid, psi_b) };
        let metric = RandersMetricField::from_costs(&Field::filled(grid, g), costs, Field::filled(grid, 1.0), MetricMode::Fb, 0.0)?;
        let ball = control_set(&metric, q, 72)?;
        let x_min = ball.iter().map(|b| b.x).fold(f64::INFINITY, f64::min);
        let x_max = ball.iter().map(|b| b.x).fold(f64::NEG_INFINITY, f64::max);
        let y_max = ball.iter().map(|b| b.y).fold(f64::NEG_INFINITY, f64::max);
        println!(
            "{psi_b:>6} {x_min:>9.4} {x_max:>9.4} {y_max:>9.4} {:>9.4}",
            closed_form_ratio(5.0, psi_b, 0.0)
        );
    }
    Ok(())
}
