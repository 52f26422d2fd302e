//! Edge saliency and its gradient vector flow on a synthetic disk. The flow points
//! towards the rim from both sides; its unit direction is the `g` of the metric.

use ffp_core::edge::{edge_saliency, gvf, unit_vector_field, GvfParams};
use ffp_core::fixtures;

fn main() -> ffp_core::Result<()> {
    let f = fixtures::disk(96, 30.0);
    let rho = edge_saliency(&f.image, 1.0)?;
    let out = gvf(&rho, &GvfParams::default())?;
    println!(
        "rho max {:.4}, GVF {} iterations, converged {}, last update {:.2e}",
        rho.max_abs(),
        out.iterations,
        out.converged,
        out.last_update
    );
    let unit = unit_vector_field(&out.field);
    println!("degenerate directions: {}", unit.degenerate_count());

    // along the row through the centre: left of the rim the flow points right, inside it points left
    let y = 48;
    for x in [10, 16, 20, 30, 40, 48, 56, 66, 76, 82] {
        let h = out.field.get(x, y);
        println!("  x = {x:>2}  rho {:.4}  h = ({:+.4}, {:+.4})", rho.get(x, y), h.x, h.y);
    }
    Ok(())
}
