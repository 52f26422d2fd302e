//! Fast marching fronts propagation with simultaneous Voronoi labelling.
//!
//! The solver pops the Trial pixel of smallest distance, tags it Accepted, and
//! relaxes every neighbour whose stencil contains it with the Hopf-Lax update
//! over the 8-neighbour fan. Each pixel records the label selected by the
//! barycentric weights of the simplex that produced its distance.

mod dynamic;
mod repair;
mod stencil;

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid2D, Pixel, ScalarField};
use crate::metric::RandersMetricField;

pub use dynamic::{
    dynamic_update_fb, dynamic_update_tube, DynamicHook, DynamicPotential, FbDynamic, FeatureMap, NoDynamic,
    TubeDynamic,
};
pub use repair::{fixed_point_repair, hopf_lax_residual, RepairReport, REPAIR_TOL};
pub use stencil::{
    hopf_lax_at, minimize_on_simplex, simplex_minimize, voronoi_index_update, LocalMetric, LocalUpdate,
    SimplexMin, StencilFan, RING,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tag {
    Far,
    Trial,
    Accepted,
}

/// A labelled source set `𝔰_k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedSet {
    pub label: u32,
    pub points: Vec<Pixel>,
}

/// Pairwise disjoint, in-grid seed sets with distinct labels ≥ 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedSets {
    grid: Grid2D,
    sets: Vec<SeedSet>,
}

impl SeedSets {
    /// Validates the sets and removes duplicate points within each set.
    pub fn new(grid: Grid2D, sets: Vec<SeedSet>) -> Result<Self> {
        if sets.is_empty() {
            return Err(Error::InvalidSeeds("no seed sets".into()));
        }
        let mut owner = vec![0u32; grid.len()];
        let mut out = Vec::with_capacity(sets.len());
        for set in sets {
            if set.label == 0 {
                return Err(Error::InvalidSeeds("labels must be >= 1".into()));
            }
            if out.iter().any(|s: &SeedSet| s.label == set.label) {
                return Err(Error::InvalidSeeds(format!("label {} used twice", set.label)));
            }
            if set.points.is_empty() {
                return Err(Error::InvalidSeeds(format!("seed set {} is empty", set.label)));
            }
            let mut points = Vec::with_capacity(set.points.len());
            for p in set.points {
                let p = grid.checked_pixel(p.x as i64, p.y as i64)?;
                let i = grid.index(p.x, p.y);
                match owner[i] {
                    0 => {
                        owner[i] = set.label;
                        points.push(p);
                    }
                    l if l == set.label => {}
                    l => {
                        return Err(Error::InvalidSeeds(format!(
                            "pixel ({}, {}) belongs to sets {l} and {}",
                            p.x, p.y, set.label
                        )))
                    }
                }
            }
            out.push(SeedSet { label: set.label, points });
        }
        Ok(SeedSets { grid, sets: out })
    }

    /// One set holding the given points, label 1.
    pub fn single(grid: Grid2D, points: Vec<Pixel>) -> Result<Self> {
        Self::new(grid, vec![SeedSet { label: 1, points }])
    }

    pub fn grid(&self) -> Grid2D {
        self.grid
    }

    pub fn sets(&self) -> &[SeedSet] {
        &self.sets
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// Total number of seed pixels.
    pub fn point_count(&self) -> usize {
        self.sets.iter().map(|s| s.points.len()).sum()
    }

    /// `(linear index, label)` of every seed pixel.
    pub fn indexed(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.sets.iter().flat_map(move |s| s.points.iter().map(move |p| (self.grid.index(p.x, p.y), s.label)))
    }
}

/// Solver state: distances, Voronoi indices and tags.
#[derive(Debug, Clone)]
pub struct FrontState {
    grid: Grid2D,
    distance: Vec<f64>,
    labels: Vec<u32>,
    tags: Vec<Tag>,
    is_seed: Vec<bool>,
    dynamic: Vec<f64>,
    order: Vec<usize>,
    accepted_count: usize,
}

impl FrontState {
    fn init(metric: &RandersMetricField, seeds: &SeedSets) -> Self {
        let grid = metric.grid();
        let n = grid.len();
        let mut state = FrontState {
            grid,
            distance: vec![f64::INFINITY; n],
            labels: vec![0; n],
            tags: vec![Tag::Far; n],
            is_seed: vec![false; n],
            dynamic: metric.dynamic_potential().values().to_vec(),
            order: Vec::with_capacity(n),
            accepted_count: 0,
        };
        for (i, label) in seeds.indexed() {
            state.distance[i] = 0.0;
            state.labels[i] = label;
            state.tags[i] = Tag::Trial;
            state.is_seed[i] = true;
            state.dynamic[i] = 1.0;
        }
        state
    }

    pub fn grid(&self) -> Grid2D {
        self.grid
    }

    pub fn distance(&self) -> &[f64] {
        &self.distance
    }

    pub fn distance_field(&self) -> ScalarField {
        Field::new(self.grid, self.distance.clone()).expect("state matches grid")
    }

    /// Voronoi index per pixel, 0 where unassigned.
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn tags(&self) -> &[Tag] {
        &self.tags
    }

    pub fn is_seed(&self, index: usize) -> bool {
        self.is_seed[index]
    }

    /// Dynamic potential as left by the run.
    pub fn dynamic_potential(&self) -> &[f64] {
        &self.dynamic
    }

    /// Accepted pixels in extraction order.
    pub fn acceptance_order(&self) -> &[usize] {
        &self.order
    }

    pub fn accepted_count(&self) -> usize {
        self.accepted_count
    }

    pub fn accepted_mask(&self) -> Vec<bool> {
        self.tags.iter().map(|t| *t == Tag::Accepted).collect()
    }

    /// Whether every pixel is Accepted.
    pub fn is_complete(&self) -> bool {
        self.accepted_count == self.grid.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct HeapEntry {
    value: u64,
    index: usize,
}

impl HeapEntry {
    fn new(value: f64, index: usize) -> Self {
        HeapEntry { value: value.to_bits(), index }
    }

    fn value(&self) -> f64 {
        f64::from_bits(self.value)
    }
}

impl Ord for HeapEntry {
    // reversed: BinaryHeap is a max-heap; ties go to the lower pixel index
    fn cmp(&self, other: &Self) -> Ordering {
        other.value().total_cmp(&self.value()).then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Solver configuration.
#[derive(Debug, Clone, Default)]
pub struct FmmConfig {
    /// Stop once this many pixels (seeds included) are Accepted; `None` runs to completion.
    pub n_th: Option<usize>,
    pub dynamic: DynamicPotential,
    /// Run [`fixed_point_repair`] after a complete run; ignored for truncated runs.
    pub repair: bool,
    pub max_repair_sweeps: usize,
}

impl FmmConfig {
    pub fn full() -> Self {
        FmmConfig { n_th: None, dynamic: DynamicPotential::Disabled, repair: true, max_repair_sweeps: 1000 }
    }

    pub fn truncated(n_th: usize) -> Self {
        FmmConfig { n_th: Some(n_th), repair: false, ..Self::full() }
    }

    pub fn with_dynamic(self, dynamic: DynamicPotential) -> Self {
        FmmConfig { dynamic, ..self }
    }
}

/// Output of [`run_fast_marching`].
#[derive(Debug, Clone)]
pub struct FmmOutput {
    pub state: FrontState,
    pub repair: Option<RepairReport>,
}

/// Front propagation over a metric from a set of seeds.
pub struct FastMarching<'a> {
    metric: &'a RandersMetricField,
    seeds: &'a SeedSets,
    n_th: Option<usize>,
    progress: Option<&'a AtomicUsize>,
}

impl<'a> FastMarching<'a> {
    pub fn new(metric: &'a RandersMetricField, seeds: &'a SeedSets) -> Result<Self> {
        if seeds.is_empty() || seeds.point_count() == 0 {
            return Err(Error::InvalidSeeds("no seed points".into()));
        }
        if seeds.grid() != metric.grid() {
            return Err(Error::SizeMismatch { expected: metric.grid().len(), got: seeds.grid().len() });
        }
        Ok(FastMarching { metric, seeds, n_th: None, progress: None })
    }

    pub fn n_th(mut self, n_th: Option<usize>) -> Self {
        self.n_th = n_th;
        self
    }

    /// Counter updated with the number of Accepted pixels as the front grows.
    pub fn progress(mut self, counter: &'a AtomicUsize) -> Self {
        self.progress = Some(counter);
        self
    }

    /// Runs the propagation with the given dynamic potential hook.
    pub fn run<H: DynamicHook>(&self, hook: &H) -> FrontState {
        let metric = self.metric;
        let grid = metric.grid();
        let mut state = FrontState::init(metric, self.seeds);
        let limit = self.n_th.unwrap_or(usize::MAX);
        let mut heap = BinaryHeap::with_capacity(grid.len() / 4);
        for (i, _) in self.seeds.indexed() {
            heap.push(HeapEntry::new(0.0, i));
        }

        while let Some(entry) = heap.pop() {
            let x = entry.index;
            if state.tags[x] == Tag::Accepted || entry.value != state.distance[x].to_bits() {
                continue;
            }
            state.tags[x] = Tag::Accepted;
            state.accepted_count += 1;
            state.order.push(x);
            if let Some(p) = self.progress {
                p.store(state.accepted_count, AtomicOrdering::Relaxed);
            }
            if state.accepted_count >= limit {
                break;
            }
            for &(dx, dy) in RING.iter() {
                let Some(z) = grid.offset(x, dx, dy) else { continue };
                if state.tags[z] == Tag::Accepted || state.is_seed[z] {
                    continue;
                }
                if H::ENABLED {
                    state.dynamic[z] = hook.potential(z, x);
                }
                let local = LocalMetric::at(metric, z, state.dynamic[z]);
                let (tags, dist, labels) = (&state.tags, &state.distance, &state.labels);
                let update = hopf_lax_at(
                    grid,
                    z,
                    &local,
                    |j| if tags[j] == Tag::Accepted { dist[j] } else { f64::INFINITY },
                    |j| labels[j],
                );
                if update.value < state.distance[z] {
                    state.distance[z] = update.value;
                    state.labels[z] = update.label;
                    heap.push(HeapEntry::new(update.value, z));
                }
                state.tags[z] = Tag::Trial;
            }
        }
        state
    }
}

/// Runs fast marching as configured, followed by the fixed-point repair for complete runs.
pub fn run_fast_marching(metric: &RandersMetricField, seeds: &SeedSets, config: &FmmConfig) -> Result<FmmOutput> {
    run_fast_marching_with_progress(metric, seeds, config, None)
}

pub fn run_fast_marching_with_progress(
    metric: &RandersMetricField,
    seeds: &SeedSets,
    config: &FmmConfig,
    progress: Option<&AtomicUsize>,
) -> Result<FmmOutput> {
    let mut fm = FastMarching::new(metric, seeds)?.n_th(config.n_th);
    if let Some(p) = progress {
        fm = fm.progress(p);
    }
    let mut state = match &config.dynamic {
        DynamicPotential::Disabled => fm.run(&NoDynamic),
        DynamicPotential::Fb { features, beta_d } => {
            if features.len() != metric.grid().len() {
                return Err(Error::SizeMismatch { expected: metric.grid().len(), got: features.len() });
            }
            fm.run(&FbDynamic { features, beta_d: *beta_d })
        }
        DynamicPotential::Tube { zeta, beta_d } => {
            if zeta.grid() != metric.grid() {
                return Err(Error::SizeMismatch { expected: metric.grid().len(), got: zeta.grid().len() });
            }
            fm.run(&TubeDynamic { zeta, beta_d: *beta_d })
        }
    };
    let repair = if config.repair && state.is_complete() {
        Some(fixed_point_repair(&mut state, metric, config.max_repair_sweeps))
    } else {
        None
    };
    Ok(FmmOutput { state, repair })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{Spd2, Vec2};

    fn iso(w: usize, h: usize) -> RandersMetricField {
        RandersMetricField::constant(Grid2D::new(w, h).unwrap(), Spd2::IDENTITY, Vec2::ZERO, 1.0).unwrap()
    }

    #[test]
    fn seed_validation() {
        let g = Grid2D::new(10, 10).unwrap();
        let ok = SeedSets::new(
            g,
            vec![
                SeedSet { label: 1, points: vec![Pixel::new(0, 0), Pixel::new(0, 0)] },
                SeedSet { label: 2, points: vec![Pixel::new(5, 5)] },
            ],
        )
        .unwrap();
        assert_eq!(ok.sets()[0].points.len(), 1);
        assert!(SeedSets::new(g, vec![]).is_err());
        assert!(matches!(
            SeedSets::single(g, vec![Pixel::new(10, 0)]),
            Err(Error::OutOfGrid { x: 10, y: 0, .. })
        ));
        let overlap = SeedSets::new(
            g,
            vec![
                SeedSet { label: 1, points: vec![Pixel::new(1, 1)] },
                SeedSet { label: 2, points: vec![Pixel::new(1, 1)] },
            ],
        );
        assert!(matches!(overlap, Err(Error::InvalidSeeds(_))));
        assert!(SeedSets::new(g, vec![SeedSet { label: 1, points: vec![] }]).is_err());
        assert!(SeedSets::new(g, vec![SeedSet { label: 0, points: vec![Pixel::new(0, 0)] }]).is_err());
    }

    #[test]
    fn heap_orders_by_value_then_index() {
        let mut h = BinaryHeap::new();
        h.push(HeapEntry::new(2.0, 1));
        h.push(HeapEntry::new(1.0, 9));
        h.push(HeapEntry::new(1.0, 3));
        let order: Vec<usize> = std::iter::from_fn(|| h.pop().map(|e| e.index)).collect();
        assert_eq!(order, vec![3, 9, 1]);
    }

    #[test]
    fn accepted_values_nondecreasing_and_invariants_hold() {
        let m = iso(31, 23);
        let seeds = SeedSets::single(m.grid(), vec![Pixel::new(4, 7)]).unwrap();
        let st = FastMarching::new(&m, &seeds).unwrap().run(&NoDynamic);
        assert!(st.is_complete());
        let vals: Vec<f64> = st.acceptance_order().iter().map(|&i| st.distance()[i]).collect();
        assert!(vals.windows(2).all(|w| w[1] >= w[0]));
        assert!(st.labels().iter().all(|l| *l == 1));
        assert_eq!(st.distance()[m.grid().index(4, 7)], 0.0);
        assert!(st.distance().iter().enumerate().all(|(i, d)| i == m.grid().index(4, 7) || *d > 0.0));
    }

    #[test]
    fn truncated_run_tags() {
        let m = iso(20, 20);
        let seeds = SeedSets::single(m.grid(), vec![Pixel::new(10, 10)]).unwrap();
        let st = FastMarching::new(&m, &seeds).unwrap().n_th(Some(37)).run(&NoDynamic);
        assert_eq!(st.accepted_count(), 37);
        for (t, d) in st.tags().iter().zip(st.distance()) {
            match t {
                Tag::Far => assert!(d.is_infinite()),
                _ => assert!(d.is_finite()),
            }
        }
        let st = FastMarching::new(&m, &seeds).unwrap().n_th(Some(1)).run(&NoDynamic);
        assert_eq!(st.accepted_mask().iter().filter(|a| **a).count(), 1);
    }

    #[test]
    fn single_neighbour_axis_distance() {
        let m = iso(8, 3);
        let seeds = SeedSets::single(m.grid(), vec![Pixel::new(0, 1)]).unwrap();
        let st = FastMarching::new(&m, &seeds).unwrap().run(&NoDynamic);
        for x in 0..8 {
            assert!((st.distance()[m.grid().index(x, 1)] - x as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn progress_counter_tracks_acceptances() {
        let m = iso(12, 9);
        let seeds = SeedSets::single(m.grid(), vec![Pixel::new(0, 0)]).unwrap();
        let counter = AtomicUsize::new(0);
        let out = run_fast_marching_with_progress(&m, &seeds, &FmmConfig::full(), Some(&counter)).unwrap();
        assert_eq!(counter.load(AtomicOrdering::Relaxed), 108);
        assert!(out.repair.is_some());
    }

    #[test]
    fn empty_or_mismatched_seeds_rejected() {
        let m = iso(8, 8);
        let other = SeedSets::single(Grid2D::new(9, 8).unwrap(), vec![Pixel::new(0, 0)]).unwrap();
        assert!(FastMarching::new(&m, &other).is_err());
    }
}
