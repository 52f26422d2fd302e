//! Gauss-Seidel repair of a completed fast marching run.
//!
//! Under strong anisotropy the fixed 8-neighbour fan is not causal: a pixel may
//! be accepted before a neighbour that would have given it a smaller value.
//! Sweeping the Hopf-Lax operator over the grid in alternating directions
//! drives the distance map to a fixed point of the operator. Values only decrease.

use crate::grid::{Field, ScalarField};
use crate::metric::RandersMetricField;

use super::stencil::{hopf_lax_at, LocalMetric};
use super::{FrontState, Tag};

/// Convergence threshold on per-pixel updates, relative to `max(1, U)`.
pub const REPAIR_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepairReport {
    pub sweeps: usize,
    /// Pixels whose distance decreased at least once.
    pub changed_pixels: usize,
    pub last_max_update: f64,
    pub converged: bool,
}

/// Sweeps until the largest (relative) update falls below [`REPAIR_TOL`] or
/// `max_sweeps` is reached. Only meaningful for complete runs; a truncated
/// state is returned untouched.
pub fn fixed_point_repair(state: &mut FrontState, metric: &RandersMetricField, max_sweeps: usize) -> RepairReport {
    let mut report = RepairReport { sweeps: 0, changed_pixels: 0, last_max_update: 0.0, converged: false };
    if !state.is_complete() {
        return report;
    }
    let grid = state.grid;
    let (w, h) = (grid.width(), grid.height());
    let mut changed = vec![false; grid.len()];

    while report.sweeps < max_sweeps {
        let dir = report.sweeps % 4;
        let mut max_update: f64 = 0.0;
        for yy in 0..h {
            let y = if dir & 2 == 0 { yy } else { h - 1 - yy };
            for xx in 0..w {
                let x = if dir & 1 == 0 { xx } else { w - 1 - xx };
                let i = y * w + x;
                if state.is_seed[i] {
                    continue;
                }
                let local = LocalMetric::at(metric, i, state.dynamic[i]);
                let (dist, labels) = (&state.distance, &state.labels);
                let up = hopf_lax_at(grid, i, &local, |j| dist[j], |j| labels[j]);
                let old = state.distance[i];
                if up.value < old {
                    let rel = (old - up.value) / old.abs().max(1.0);
                    max_update = max_update.max(if old.is_finite() { rel } else { f64::INFINITY });
                    state.distance[i] = up.value;
                    state.labels[i] = up.label;
                    changed[i] = true;
                }
            }
        }
        report.sweeps += 1;
        report.last_max_update = max_update;
        if max_update < REPAIR_TOL {
            report.converged = true;
            break;
        }
    }
    report.changed_pixels = changed.iter().filter(|c| **c).count();
    if !report.converged {
        log::warn!("repair stopped after {} sweeps, last update {:e}", report.sweeps, report.last_max_update);
    }
    report
}

/// `|U(x) − H(U)(x)|` at every Accepted non-seed pixel, using only Accepted
/// neighbours and the state's dynamic potential; zero elsewhere.
pub fn hopf_lax_residual(state: &FrontState, metric: &RandersMetricField) -> ScalarField {
    let grid = state.grid;
    let values = (0..grid.len())
        .map(|i| {
            if state.is_seed[i] || state.tags[i] != Tag::Accepted {
                return 0.0;
            }
            let local = LocalMetric::at(metric, i, state.dynamic[i]);
            let up = hopf_lax_at(
                grid,
                i,
                &local,
                |j| if state.tags[j] == Tag::Accepted { state.distance[j] } else { f64::INFINITY },
                |j| state.labels[j],
            );
            (state.distance[i] - up.value).abs()
        })
        .collect();
    Field::new(grid, values).expect("state matches grid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fmm::{FastMarching, NoDynamic, SeedSets};
    use crate::grid::{Grid2D, Pixel};
    use crate::linalg::{Spd2, Vec2};

    #[test]
    fn isotropic_run_needs_no_repair() {
        let g = Grid2D::new(41, 41).unwrap();
        let m = RandersMetricField::constant(g, Spd2::IDENTITY, Vec2::ZERO, 1.0).unwrap();
        let seeds = SeedSets::single(g, vec![Pixel::new(20, 20)]).unwrap();
        let mut st = FastMarching::new(&m, &seeds).unwrap().run(&NoDynamic);
        let before = st.distance().to_vec();
        let rep = fixed_point_repair(&mut st, &m, 10);
        assert!(rep.converged);
        assert!(rep.sweeps <= 1, "{rep:?}");
        for (a, b) in before.iter().zip(st.distance()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn strong_anisotropy_repair_only_lowers() {
        // κ ≈ 10: eigenvalues 100 and 1, tilted
        let g = Grid2D::new(41, 41).unwrap();
        let e = Vec2::from_angle(0.4);
        let t = e.outer().scaled(100.0) + e.perp().outer();
        let m = RandersMetricField::constant(g, t, Vec2::ZERO, 1.0).unwrap();
        let seeds = SeedSets::single(g, vec![Pixel::new(20, 20)]).unwrap();
        let mut st = FastMarching::new(&m, &seeds).unwrap().run(&NoDynamic);
        let before = st.distance().to_vec();
        let rep = fixed_point_repair(&mut st, &m, 1000);
        assert!(rep.converged);
        assert!(rep.changed_pixels > 0);
        for (a, b) in before.iter().zip(st.distance()) {
            assert!(b <= a);
        }
        let res = hopf_lax_residual(&st, &m);
        assert!(res.max() <= 1e-9, "residual {}", res.max());
    }

    #[test]
    fn truncated_state_untouched() {
        let g = Grid2D::new(10, 10).unwrap();
        let m = RandersMetricField::constant(g, Spd2::IDENTITY, Vec2::ZERO, 1.0).unwrap();
        let seeds = SeedSets::single(g, vec![Pixel::new(0, 0)]).unwrap();
        let mut st = FastMarching::new(&m, &seeds).unwrap().n_th(Some(5)).run(&NoDynamic);
        let rep = fixed_point_repair(&mut st, &m, 10);
        assert_eq!(rep.sweeps, 0);
    }
}
