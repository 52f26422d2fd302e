//! Reference computations used to validate the solver.
//!
//! Everything here is deliberately simple and shares no code with the fast
//! marching update: graph shortest paths, straight-line distances under
//! constant metrics, polyline lengths, Eikonal residuals, and a sweeping
//! solver that minimizes each simplex by ternary search.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::fmm::SeedSets;
use crate::grid::{central_gradient, Field, Grid2D, ScalarField};
use crate::linalg::{Spd2, Vec2};
use crate::metric::RandersMetricField;

/// Neighbour offsets of the oracle graph. Always symmetric as a set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphNeighborhood {
    offsets: Vec<(i64, i64)>,
}

impl GraphNeighborhood {
    pub fn eight() -> Self {
        GraphNeighborhood {
            offsets: vec![(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)],
        }
    }

    /// The 8-ring plus the eight knight moves.
    pub fn sixteen() -> Self {
        let mut n = Self::eight();
        n.offsets.extend([(2, 1), (1, 2), (-1, 2), (-2, 1), (-2, -1), (-1, -2), (1, -2), (2, -1)]);
        n
    }

    pub fn offsets(&self) -> &[(i64, i64)] {
        &self.offsets
    }
}

/// Bilinearly interpolated `(M, ω, 𝔠)` at a continuous point, clamped to the grid.
///
/// The set `{(M, ω) : M − ωωᵀ ≻ 0}` is convex, so interpolation keeps the metric positive.
pub fn sample_metric(metric: &RandersMetricField, p: Vec2) -> (Spd2, Vec2, f64) {
    let grid = metric.grid();
    let x = p.x.clamp(0.0, (grid.width() - 1) as f64);
    let y = p.y.clamp(0.0, (grid.height() - 1) as f64);
    let x0 = (x.floor() as usize).min(grid.width() - 2);
    let y0 = (y.floor() as usize).min(grid.height() - 2);
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let corners = [
        (x0, y0, (1.0 - fx) * (1.0 - fy)),
        (x0 + 1, y0, fx * (1.0 - fy)),
        (x0, y0 + 1, (1.0 - fx) * fy),
        (x0 + 1, y0 + 1, fx * fy),
    ];
    let mut m = Spd2::new(0.0, 0.0, 0.0);
    let mut w = Vec2::ZERO;
    let mut c = 0.0;
    for (cx, cy, wt) in corners {
        if wt == 0.0 {
            continue;
        }
        let i = grid.index(cx, cy);
        m = m + metric.tensor().values()[i].scaled(wt);
        w = w + metric.omega().values()[i] * wt;
        c += metric.potential(i) * wt;
    }
    (m, w, c)
}

/// `F(p, u)` with the interpolated metric.
pub fn eval_at_point(metric: &RandersMetricField, p: Vec2, u: Vec2) -> f64 {
    let (m, w, c) = sample_metric(metric, p);
    c * (m.norm(u) - w.dot(u))
}

#[derive(PartialEq)]
struct Node(f64, usize);

impl Eq for Node {}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest paths on the directed grid graph with edge cost `F(midpoint(x, y), y − x)`.
pub fn dijkstra_distance(metric: &RandersMetricField, seeds: &SeedSets, neighborhood: &GraphNeighborhood) -> ScalarField {
    let grid = metric.grid();
    let mut dist = vec![f64::INFINITY; grid.len()];
    let mut done = vec![false; grid.len()];
    let mut heap = BinaryHeap::new();
    for (i, _) in seeds.indexed() {
        dist[i] = 0.0;
        heap.push(Node(0.0, i));
    }
    while let Some(Node(d, i)) = heap.pop() {
        if done[i] {
            continue;
        }
        done[i] = true;
        let p = grid.pixel(i).as_vec();
        for &(dx, dy) in neighborhood.offsets() {
            let Some(j) = grid.offset(i, dx, dy) else { continue };
            if done[j] {
                continue;
            }
            let step = Vec2::new(dx as f64, dy as f64);
            let nd = d + eval_at_point(metric, p + step * 0.5, step);
            if nd < dist[j] {
                dist[j] = nd;
                heap.push(Node(nd, j));
            }
        }
    }
    Field::new(grid, dist).expect("grid sized")
}

/// `c (‖x − s‖_M − ⟨ω, x − s⟩)`: geodesics of a constant metric are segments.
pub fn analytic_constant_distance(m: &Spd2, omega: Vec2, c: f64, s: Vec2, x: Vec2) -> f64 {
    let d = x - s;
    c * (m.norm(d) - omega.dot(d))
}

/// Length of a polyline by the midpoint rule: `Σ F(midpoint, Δ)`.
pub fn polyline_length(metric: &RandersMetricField, polyline: &[Vec2]) -> f64 {
    polyline
        .windows(2)
        .map(|w| {
            let d = w[1] - w[0];
            if d == Vec2::ZERO {
                0.0
            } else {
                eval_at_point(metric, (w[0] + w[1]) * 0.5, d)
            }
        })
        .sum()
}

#[derive(Debug, Clone)]
pub struct EikonalResidual {
    /// `NaN` where the residual was not evaluated.
    pub field: ScalarField,
    pub median: f64,
    pub p90: f64,
    pub count: usize,
}

/// `r(x) = ‖∇U − 𝔠ω‖` measured in the dual norm `(𝔠²M)⁻¹`, minus one, where the
/// drift is taken with the orientation of travel away from the seeds (see
/// [`eikonal_residual_with`]).
///
/// Evaluated at pixels whose full 8-neighbourhood is in the grid, finite, and
/// allowed by `mask` (when given).
pub fn eikonal_residual(u: &ScalarField, metric: &RandersMetricField, mask: Option<&[bool]>) -> EikonalResidual {
    eikonal_residual_with(u, metric, mask, DriftSign::Outgoing)
}

/// Which sign the drift enters the Eikonal equation with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriftSign {
    /// `U` accumulates `F(x, ẋ)` along curves leaving the seeds, so
    /// `max_u ⟨∇U, u⟩ − F(x,u) = 0`, i.e. `‖∇U + 𝔠ω‖_{(𝔠²M)⁻¹} = 1`.
    Outgoing,
    /// `‖∇U − 𝔠ω‖_{(𝔠²M)⁻¹} = 1`: the distance *to* the seeds.
    Incoming,
}

pub fn eikonal_residual_with(
    u: &ScalarField,
    metric: &RandersMetricField,
    mask: Option<&[bool]>,
    sign: DriftSign,
) -> EikonalResidual {
    let grid = u.grid();
    let grad = central_gradient(u);
    let s = match sign {
        DriftSign::Outgoing => 1.0,
        DriftSign::Incoming => -1.0,
    };
    let mut values = vec![f64::NAN; grid.len()];
    let mut samples = Vec::new();
    for i in 0..grid.len() {
        if mask.is_some_and(|m| !m[i]) || !u.values()[i].is_finite() {
            continue;
        }
        let full = crate::fmm::RING
            .iter()
            .all(|&(dx, dy)| grid.offset(i, dx, dy).is_some_and(|j| u.values()[j].is_finite()));
        if !full {
            continue;
        }
        let c = metric.potential(i);
        let dual = metric.tensor().values()[i].scaled(c * c).inverse().expect("metric tensors are SPD");
        let r = dual.norm(grad.values()[i] + metric.omega().values()[i] * (s * c)) - 1.0;
        values[i] = r;
        samples.push(r.abs());
    }
    samples.sort_by(f64::total_cmp);
    let pick = |q: f64| {
        if samples.is_empty() {
            f64::NAN
        } else {
            samples[((samples.len() - 1) as f64 * q).round() as usize]
        }
    };
    EikonalResidual {
        median: pick(0.5),
        p90: pick(0.9),
        count: samples.len(),
        field: Field::new(grid, values).expect("grid sized"),
    }
}

/// Ternary search for the minimum of a convex function on `[lo, hi]`, endpoints included.
pub fn ternary_minimize(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let (a0, b0) = (lo, hi);
    while hi - lo > tol {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1) <= f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let mid = 0.5 * (lo + hi);
    [(mid, f(mid)), (a0, f(a0)), (b0, f(b0))]
        .into_iter()
        .min_by(|p, q| p.1.total_cmp(&q.1))
        .expect("three candidates")
}

/// Fixed point of the 8-fan Hopf-Lax operator by plain Gauss-Seidel sweeps from
/// `U = +∞`, each simplex minimized by ternary search on `λ`.
///
/// Returns the distance map and the number of sweeps.
pub fn sweeping_solution(metric: &RandersMetricField, seeds: &SeedSets, tol: f64, max_sweeps: usize) -> (ScalarField, usize) {
    const RING: [(i64, i64); 8] = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];
    let grid: Grid2D = metric.grid();
    let (w, h) = (grid.width(), grid.height());
    let mut u = vec![f64::INFINITY; grid.len()];
    let mut seed = vec![false; grid.len()];
    for (i, _) in seeds.indexed() {
        u[i] = 0.0;
        seed[i] = true;
    }
    let mut sweeps = 0;
    while sweeps < max_sweeps {
        let dir = sweeps % 4;
        let mut max_change: f64 = 0.0;
        for yy in 0..h {
            let y = if dir & 2 == 0 { yy } else { h - 1 - yy };
            for xx in 0..w {
                let x = if dir & 1 == 0 { xx } else { w - 1 - xx };
                let i = y * w + x;
                if seed[i] {
                    continue;
                }
                let m = metric.tensor().values()[i];
                let om = metric.omega().values()[i];
                let c = metric.potential(i);
                let cost = |v: Vec2| c * (m.norm(v) - om.dot(v));
                let mut best = u[i];
                for k in 0..8 {
                    let (o1, o2) = (RING[k], RING[(k + 1) % 8]);
                    let u1 = grid.offset(i, o1.0, o1.1).map_or(f64::INFINITY, |j| u[j]);
                    let u2 = grid.offset(i, o2.0, o2.1).map_or(f64::INFINITY, |j| u[j]);
                    let z1 = Vec2::new(o1.0 as f64, o1.1 as f64);
                    let z2 = Vec2::new(o2.0 as f64, o2.1 as f64);
                    let cand = match (u1.is_finite(), u2.is_finite()) {
                        (false, false) => continue,
                        (true, false) => cost(-z1) + u1,
                        (false, true) => cost(-z2) + u2,
                        (true, true) => {
                            ternary_minimize(
                                |l| cost(-(z1 * l + z2 * (1.0 - l))) + l * u1 + (1.0 - l) * u2,
                                0.0,
                                1.0,
                                1e-12,
                            )
                            .1
                        }
                    };
                    best = best.min(cand);
                }
                if best < u[i] {
                    let change = if u[i].is_finite() { (u[i] - best) / u[i].max(1.0) } else { f64::INFINITY };
                    max_change = max_change.max(change);
                    u[i] = best;
                }
            }
        }
        sweeps += 1;
        if max_change < tol {
            break;
        }
    }
    (Field::new(grid, u).expect("grid sized"), sweeps)
}
