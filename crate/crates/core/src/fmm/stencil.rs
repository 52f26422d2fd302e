//! The fixed 8-neighbour stencil fan and the Hopf-Lax local update.

use crate::grid::{Grid2D, Pixel};
use crate::linalg::{Spd2, Vec2};
use crate::metric::RandersMetricField;

/// Neighbour offsets in counterclockwise order, starting on the +x axis.
pub const RING: [(i64, i64); 8] = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];

/// The stencil fan around a pixel: eight simplexes, each joining two consecutive ring offsets.
#[derive(Debug, Clone, Copy, Default)]
pub struct StencilFan;

impl StencilFan {
    pub fn offsets(&self) -> &'static [(i64, i64); 8] {
        &RING
    }

    /// `(z1, z2)` offsets of simplex `i`.
    pub fn simplex(&self, i: usize) -> ((i64, i64), (i64, i64)) {
        (RING[i], RING[(i + 1) % 8])
    }

    pub fn simplexes(&self) -> impl Iterator<Item = ((i64, i64), (i64, i64))> + '_ {
        (0..8).map(move |i| self.simplex(i))
    }
}

/// Metric data frozen at the pixel being updated.
#[derive(Debug, Clone, Copy)]
pub struct LocalMetric {
    pub tensor: Spd2,
    pub omega: Vec2,
    pub potential: f64,
}

impl LocalMetric {
    #[inline]
    pub fn at(metric: &RandersMetricField, index: usize, dynamic: f64) -> Self {
        LocalMetric {
            tensor: metric.tensor().values()[index],
            omega: metric.omega().values()[index],
            potential: metric.static_potential().values()[index] * dynamic,
        }
    }

    #[inline]
    pub fn eval(&self, v: Vec2) -> f64 {
        self.potential * (self.tensor.norm(v) - self.omega.dot(v))
    }
}

/// Minimum of the per-simplex problem and its barycentric minimizer `(λ1, λ2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexMin {
    pub value: f64,
    pub lambda: (f64, f64),
}

impl SimplexMin {
    pub const INFINITE: SimplexMin = SimplexMin { value: f64::INFINITY, lambda: (0.0, 0.0) };
}

/// Minimizes `F(x, x − y) + λ1 U1 + λ2 U2` over `y = λ1 z1 + λ2 z2` on the segment.
///
/// `to_z1` and `to_z2` are the vertex offsets relative to `x`. An infinite vertex
/// restricts the problem to the other one.
///
/// For a Randers metric the objective along the segment is
/// `𝔠‖a − λe‖_M + kλ + const` with `a = x − z2`, `e = z1 − z2`, so its
/// stationary point has a closed form; endpoints are always compared.
pub fn minimize_on_simplex(local: &LocalMetric, to_z1: Vec2, to_z2: Vec2, u1: f64, u2: f64) -> SimplexMin {
    let inf1 = !u1.is_finite();
    let inf2 = !u2.is_finite();
    if inf1 && inf2 {
        return SimplexMin::INFINITE;
    }
    let at_z1 = || SimplexMin { value: local.eval(-to_z1) + u1, lambda: (1.0, 0.0) };
    let at_z2 = || SimplexMin { value: local.eval(-to_z2) + u2, lambda: (0.0, 1.0) };
    if inf2 {
        return at_z1();
    }
    if inf1 {
        return at_z2();
    }

    let a = -to_z2;
    let e = to_z1 - to_z2;
    let m = &local.tensor;
    let c = local.potential;
    let aa = m.quad(e);
    let bb = m.bilinear(a, e);
    let cc = m.quad(a);
    let k = c * local.omega.dot(e) + u1 - u2;

    let mut best = at_z2();
    let end1 = at_z1();
    if end1.value < best.value {
        best = end1;
    }

    let denom = aa * c * c - k * k;
    if denom > 0.0 {
        let det = (aa * cc - bb * bb).max(0.0);
        let t = -k.signum() * k.abs() * (det / denom).sqrt();
        let lam = (t + bb) / aa;
        if lam > 0.0 && lam < 1.0 {
            let v = a - e * lam;
            let value = local.eval(v) + lam * u1 + (1.0 - lam) * u2;
            if value < best.value {
                best = SimplexMin { value, lambda: (lam, 1.0 - lam) };
            }
        }
    }
    best
}

/// Public form of the per-simplex minimization with pixels and the metric field.
///
/// The metric (including its current dynamic potential) is evaluated at `x`.
pub fn simplex_minimize(
    metric: &RandersMetricField,
    x: Pixel,
    z1: Pixel,
    z2: Pixel,
    u1: f64,
    u2: f64,
) -> SimplexMin {
    let grid = metric.grid();
    let idx = grid.index(x.x, x.y);
    let local = LocalMetric::at(metric, idx, metric.dynamic_potential().values()[idx]);
    minimize_on_simplex(&local, z1.as_vec() - x.as_vec(), z2.as_vec() - x.as_vec(), u1, u2)
}

/// Voronoi index rule: `L(z1)` when `λ1 ≥ λ2`, else `L(z2)`.
///
/// A simplex that degenerated to one vertex carries `λ = (1, 0)` or `(0, 1)`,
/// so the rule returns that vertex's label.
#[inline]
pub fn voronoi_index_update(lambda: (f64, f64), label_z1: u32, label_z2: u32) -> u32 {
    if lambda.0 >= lambda.1 {
        label_z1
    } else {
        label_z2
    }
}

/// Result of the Hopf-Lax operator at one pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalUpdate {
    pub value: f64,
    pub label: u32,
}

/// Hopf-Lax update at linear index `x`: the minimum over the eight simplexes.
///
/// `value_of(j)` returns the distance used for neighbour `j` (`+∞` when it must be
/// ignored); `label_of(j)` its Voronoi index. Simplexes clipped by the grid border
/// reduce to their in-grid vertex.
#[inline]
pub fn hopf_lax_at(
    grid: Grid2D,
    x: usize,
    local: &LocalMetric,
    value_of: impl Fn(usize) -> f64,
    label_of: impl Fn(usize) -> u32,
) -> LocalUpdate {
    let mut neighbours = [None; 8];
    let mut values = [f64::INFINITY; 8];
    for (k, &(dx, dy)) in RING.iter().enumerate() {
        if let Some(j) = grid.offset(x, dx, dy) {
            neighbours[k] = Some(j);
            values[k] = value_of(j);
        }
    }
    let mut best = LocalUpdate { value: f64::INFINITY, label: 0 };
    for k in 0..8 {
        let k2 = (k + 1) % 8;
        let (u1, u2) = (values[k], values[k2]);
        if !u1.is_finite() && !u2.is_finite() {
            continue;
        }
        let o1 = Vec2::new(RING[k].0 as f64, RING[k].1 as f64);
        let o2 = Vec2::new(RING[k2].0 as f64, RING[k2].1 as f64);
        let s = minimize_on_simplex(local, o1, o2, u1, u2);
        if s.value < best.value {
            let l1 = neighbours[k].map(&label_of).unwrap_or(0);
            let l2 = neighbours[k2].map(&label_of).unwrap_or(0);
            best = LocalUpdate { value: s.value, label: voronoi_index_update(s.lambda, l1, l2) };
        }
    }
    best
}
