//! End-to-end segmentation: foreground/background by Voronoi regions and
//! tubular structures by truncated fronts.

use std::sync::atomic::AtomicUsize;
use std::time::{Duration, Instant};

use crate::contour::{extract_contours_masked, iso_contours, Polyline};
use crate::edge::{edge_saliency, gvf, unit_vector_field, GvfOutput, GvfParams, ImageBuffer, UnitField};
use crate::error::{Error, Result};
use crate::fmm::{run_fast_marching_with_progress, DynamicPotential, FeatureMap, FmmConfig, RepairReport, SeedSets};
use crate::grid::{Field, ScalarField};
use crate::metric::{
    anisotropy_ratio, cost_functions, positivity_check, resolve_mu, static_potential, CostParams, MetricMode,
    PotentialSource, RandersMetricField,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ColorSpace {
    #[default]
    Rgb,
    Lab,
}

/// Feature vectors compared by the foreground/background dynamic potential.
#[derive(Debug, Clone, Default)]
pub enum FeatureSource {
    /// Pixel colors (or gray level) of the input image.
    #[default]
    Image,
    /// A precomputed scalar map, e.g. a foreground probability, in `[0, 1]`.
    Scalar(ScalarField),
}

#[derive(Debug, Clone)]
pub struct FbOptions {
    pub params: CostParams,
    pub colorspace: ColorSpace,
    pub features: FeatureSource,
    /// GVF iteration limits; the smoothness weight comes from `params.epsilon`.
    pub gvf: GvfParams,
    pub max_repair_sweeps: usize,
}

impl Default for FbOptions {
    fn default() -> Self {
        FbOptions {
            params: CostParams::randers(),
            colorspace: ColorSpace::Rgb,
            features: FeatureSource::Image,
            gvf: GvfParams::default(),
            max_repair_sweeps: 1000,
        }
    }
}

/// Distance level at which the tubular contour is traced.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Threshold {
    /// Largest distance among Accepted pixels.
    #[default]
    Auto,
    Value(f64),
}

#[derive(Debug, Clone)]
pub struct TubeOptions {
    pub params: CostParams,
    pub n_th: usize,
    pub threshold: Threshold,
    pub gvf: GvfParams,
}

impl TubeOptions {
    pub fn new(n_th: usize) -> Self {
        TubeOptions { params: CostParams::randers(), n_th, threshold: Threshold::Auto, gvf: GvfParams::default() }
    }
}

/// Saliency, its gradient vector flow and the normalized direction field.
#[derive(Debug, Clone)]
pub struct EdgeData {
    pub rho: ScalarField,
    pub gvf: GvfOutput,
    pub unit: UnitField,
}

pub fn edge_data(img: &ImageBuffer, params: &CostParams, gvf_params: &GvfParams) -> Result<EdgeData> {
    params.validate()?;
    let rho = edge_saliency(img, params.sigma)?;
    let gvf = gvf(&rho, &GvfParams { epsilon: params.epsilon, ..*gvf_params })?;
    let unit = unit_vector_field(&gvf.field);
    Ok(EdgeData { rho, gvf, unit })
}

/// Foreground/background metric: `M`, `ω` from the cost functions and the saliency potential.
pub fn build_fb_metric(edges: &EdgeData, params: &CostParams) -> Result<RandersMetricField> {
    let costs = cost_functions(&edges.rho, params.alpha_f, params.alpha_b);
    let potential = static_potential(PotentialSource::Saliency(&edges.rho), params.beta_s);
    RandersMetricField::from_costs(&edges.unit.field, costs, potential, MetricMode::Fb, 0.0)
}

/// Tubular metric: `M + μ g⊗g`, `ω`, and the tubularity potential of `zeta`.
pub fn build_tube_metric(edges: &EdgeData, zeta: &ScalarField, params: &CostParams) -> Result<RandersMetricField> {
    let costs = cost_functions(&edges.rho, params.alpha_f, params.alpha_b);
    let mu = resolve_mu(params.mu, &costs.psi_f);
    let potential = static_potential(PotentialSource::Tubularity(zeta), params.beta_s);
    RandersMetricField::from_costs(&edges.unit.field, costs, potential, MetricMode::Tube, mu)
}

/// Gray levels rescaled to `[0, 1]`; a constant image maps to zero.
pub fn tubularity_from_gray(img: &ImageBuffer) -> ScalarField {
    let gray = img.to_gray();
    let (lo, hi) = (gray.min(), gray.max());
    if hi > lo {
        gray.map(|v| (v - lo) / (hi - lo))
    } else {
        gray.map(|_| 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    /// Pixels with `ρ > ½‖ρ‖_∞`.
    pub edge_pixels: usize,
    /// Edge pixels where travelling along `g` is not strictly cheaper than against it
    /// (only counted when `α_b > 0`).
    pub ordering_violations: usize,
    pub positivity_max_ratio: f64,
    pub gvf_iterations: usize,
    pub gvf_converged: bool,
    /// Pixels where the GVF vanished and a fallback direction was used.
    pub degenerate_directions: usize,
}

#[derive(Debug, Clone)]
pub struct RunStats {
    pub accepted_count: usize,
    pub total: usize,
    pub runtime: Duration,
    pub kappa: f64,
    pub repair: Option<RepairReport>,
    pub diagnostics: Diagnostics,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct SegmentationResult {
    /// Voronoi labels (foreground/background) or a 0/1 mask (tubular).
    pub label_map: Field<u32>,
    pub contours: Vec<Polyline>,
    pub distance_map: ScalarField,
    pub stats: RunStats,
}

impl SegmentationResult {
    pub fn mask_of(&self, label: u32) -> Vec<bool> {
        self.label_map.values().iter().map(|l| *l == label).collect()
    }
}

fn diagnostics(edges: &EdgeData, metric: &RandersMetricField, params: &CostParams) -> Diagnostics {
    let top = edges.rho.max_abs();
    let mut edge_pixels = 0;
    let mut ordering_violations = 0;
    for (i, r) in edges.rho.values().iter().enumerate() {
        if top > 0.0 && *r > 0.5 * top {
            edge_pixels += 1;
            let g = edges.unit.field.values()[i];
            if params.alpha_b > 0.0 && metric.randers_cost(i, g) >= metric.randers_cost(i, -g) {
                ordering_violations += 1;
            }
        }
    }
    Diagnostics {
        edge_pixels,
        ordering_violations,
        positivity_max_ratio: positivity_check(metric).max_ratio,
        gvf_iterations: edges.gvf.iterations,
        gvf_converged: edges.gvf.converged,
        degenerate_directions: edges.unit.degenerate_count(),
    }
}

fn gvf_warning(edges: &EdgeData, warnings: &mut Vec<String>) {
    if !edges.gvf.converged {
        warnings.push(format!(
            "gradient vector flow stopped after {} iterations (last update {:.3e})",
            edges.gvf.iterations, edges.gvf.last_update
        ));
    }
}

fn check_grid(img: &ImageBuffer, seeds: &SeedSets) -> Result<()> {
    if img.grid() != seeds.grid() {
        return Err(Error::SizeMismatch { expected: img.grid().len(), got: seeds.grid().len() });
    }
    Ok(())
}

pub fn segment_fb(img: &ImageBuffer, seeds: &SeedSets, options: &FbOptions) -> Result<SegmentationResult> {
    segment_fb_with_progress(img, seeds, options, None)
}

/// Full-domain propagation with the feature-consistency potential, followed by repair.
///
/// Boundaries between cells whose four pixels are all seeds are user input rather
/// than computed, and are left out of the contours.
pub fn segment_fb_with_progress(
    img: &ImageBuffer,
    seeds: &SeedSets,
    options: &FbOptions,
    progress: Option<&AtomicUsize>,
) -> Result<SegmentationResult> {
    let start = Instant::now();
    check_grid(img, seeds)?;
    if seeds.len() < 2 {
        return Err(Error::InvalidSeeds(format!("foreground/background needs at least 2 seed sets, got {}", seeds.len())));
    }
    let params = &options.params;
    let working = match options.colorspace {
        ColorSpace::Rgb => img.clone(),
        ColorSpace::Lab => img.to_lab(),
    };
    let edges = edge_data(&working, params, &options.gvf)?;
    let metric = build_fb_metric(&edges, params)?;
    let features = match &options.features {
        FeatureSource::Image => FeatureMap::from_image(&working),
        FeatureSource::Scalar(f) => {
            if f.grid() != img.grid() {
                return Err(Error::SizeMismatch { expected: img.grid().len(), got: f.grid().len() });
            }
            FeatureMap::from_scalar(f)
        }
    };
    let config = FmmConfig {
        n_th: None,
        dynamic: DynamicPotential::Fb { features, beta_d: params.beta_d },
        repair: true,
        max_repair_sweeps: options.max_repair_sweeps,
    };
    let out = run_fast_marching_with_progress(&metric, seeds, &config, progress)?;
    let state = out.state;
    let grid = state.grid();
    let label_map = Field::new(grid, state.labels().to_vec())?;
    let w = grid.width();
    let all_seeds = |x: usize, y: usize| {
        let i = y * w + x;
        state.is_seed(i) && state.is_seed(i + 1) && state.is_seed(i + w) && state.is_seed(i + w + 1)
    };
    let contours = extract_contours_masked(&label_map, all_seeds);

    let mut warnings = Vec::new();
    gvf_warning(&edges, &mut warnings);
    if let Some(r) = &out.repair {
        if !r.converged {
            warnings.push(format!("repair stopped after {} sweeps (last update {:.3e})", r.sweeps, r.last_max_update));
        }
    }
    let stats = RunStats {
        accepted_count: state.accepted_count(),
        total: grid.len(),
        runtime: start.elapsed(),
        kappa: anisotropy_ratio(&metric),
        repair: out.repair,
        diagnostics: diagnostics(&edges, &metric, params),
        warnings,
    };
    Ok(SegmentationResult { label_map, contours, distance_map: state.distance_field(), stats })
}

pub fn segment_tube(img: &ImageBuffer, seeds: &SeedSets, options: &TubeOptions) -> Result<SegmentationResult> {
    segment_tube_with_progress(img, seeds, options, None)
}

/// Truncated propagation under the tubular metric with the one-sided tubularity potential.
pub fn segment_tube_with_progress(
    img: &ImageBuffer,
    seeds: &SeedSets,
    options: &TubeOptions,
    progress: Option<&AtomicUsize>,
) -> Result<SegmentationResult> {
    let start = Instant::now();
    check_grid(img, seeds)?;
    if seeds.len() != 1 {
        return Err(Error::InvalidSeeds(format!("tubular segmentation needs exactly 1 seed set, got {}", seeds.len())));
    }
    if options.n_th < seeds.point_count() {
        return Err(Error::InvalidParameter(format!(
            "n_th = {} is smaller than the number of seed points {}",
            options.n_th,
            seeds.point_count()
        )));
    }
    if let Threshold::Value(t) = options.threshold {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(format!("threshold must be finite and >= 0, got {t}")));
        }
    }
    let mut warnings = Vec::new();
    let grid = img.grid();
    let n_th = if options.n_th > grid.len() {
        let msg = format!("n_th = {} exceeds the grid size; clamped to {}", options.n_th, grid.len());
        log::warn!("{msg}");
        warnings.push(msg);
        grid.len()
    } else {
        options.n_th
    };
    let params = &options.params;
    let edges = edge_data(img, params, &options.gvf)?;
    let zeta = tubularity_from_gray(img);
    let metric = build_tube_metric(&edges, &zeta, params)?;
    let config = FmmConfig::truncated(n_th).with_dynamic(DynamicPotential::Tube { zeta, beta_d: params.beta_d });
    let out = run_fast_marching_with_progress(&metric, seeds, &config, progress)?;
    let state = out.state;
    let mask = state.accepted_mask();
    let label_map = Field::new(grid, mask.iter().map(|m| *m as u32).collect())?;

    let t_h = match options.threshold {
        Threshold::Auto => state.acceptance_order().iter().map(|&i| state.distance()[i]).fold(0.0, f64::max),
        Threshold::Value(t) => t,
    };
    // Far pixels need a finite value above every finite distance for interpolation
    let far = 2.0 * state.distance().iter().copied().filter(|u| u.is_finite()).fold(t_h, f64::max) + 1.0;
    let level_field = Field::new(grid, state.distance().iter().map(|u| -u.min(far)).collect())?;
    let contours = iso_contours(&level_field, -t_h)
        .into_iter()
        .map(|mut p| {
            p.label = Some(1);
            p
        })
        .collect();

    gvf_warning(&edges, &mut warnings);
    let stats = RunStats {
        accepted_count: state.accepted_count(),
        total: n_th,
        runtime: start.elapsed(),
        kappa: anisotropy_ratio(&metric),
        repair: None,
        diagnostics: diagnostics(&edges, &metric, params),
        warnings,
    };
    Ok(SegmentationResult { label_map, contours, distance_map: state.distance_field(), stats })
}

/// `|A ∩ B| / |A ∪ B|`, defined as 1 when both masks are empty.
pub fn region_iou(a: &[bool], b: &[bool]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::SizeMismatch { expected: a.len(), got: b.len() });
    }
    let (mut inter, mut union) = (0usize, 0usize);
    for (x, y) in a.iter().zip(b) {
        inter += (*x && *y) as usize;
        union += (*x || *y) as usize;
    }
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

/// Fraction of `mask` pixels inside `truth`; zero for an empty mask.
pub fn inside_fraction(mask: &[bool], truth: &[bool]) -> Result<f64> {
    if mask.len() != truth.len() {
        return Err(Error::SizeMismatch { expected: mask.len(), got: truth.len() });
    }
    let total = mask.iter().filter(|m| **m).count();
    let inside = mask.iter().zip(truth).filter(|(m, t)| **m && **t).count();
    Ok(if total == 0 { 0.0 } else { inside as f64 / total as f64 })
}
