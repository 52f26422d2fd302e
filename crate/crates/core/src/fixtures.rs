//! Deterministic synthetic images with ground-truth masks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::edge::ImageBuffer;
use crate::fmm::{SeedSet, SeedSets};
use crate::grid::{Field, Grid2D, Pixel, ScalarField};
use crate::linalg::Vec2;
use crate::metric::{CostFunctions, MetricMode, RandersMetricField};

/// A synthetic image, its ground-truth object mask and a seed configuration.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub image: ImageBuffer,
    pub truth: Vec<bool>,
    pub seeds: SeedSets,
}

impl Fixture {
    pub fn grid(&self) -> Grid2D {
        self.image.grid()
    }

    pub fn area(&self) -> usize {
        self.truth.iter().filter(|t| **t).count()
    }
}

fn binary_image(grid: Grid2D, truth: &[bool], fg: f64, bg: f64) -> ImageBuffer {
    ImageBuffer::gray(ScalarField::new(grid, truth.iter().map(|t| if *t { fg } else { bg }).collect()).expect("grid sized"))
}

/// White disk on black. Seed set 1: five pixels in a plus at the disk centre;
/// set 2: five pixels in the top-left corner.
pub fn disk(size: usize, radius: f64) -> Fixture {
    let grid = Grid2D::new(size, size).expect("size >= 2");
    let c = (size / 2) as f64;
    let truth: Vec<bool> = grid
        .pixels()
        .map(|p| {
            let (dx, dy) = (p.x as f64 - c, p.y as f64 - c);
            dx * dx + dy * dy <= radius * radius
        })
        .collect();
    let image = binary_image(grid, &truth, 1.0, 0.0);
    let ci = size / 2;
    let seeds = SeedSets::new(
        grid,
        vec![
            SeedSet {
                label: 1,
                points: vec![
                    Pixel::new(ci, ci),
                    Pixel::new(ci - 1, ci),
                    Pixel::new(ci + 1, ci),
                    Pixel::new(ci, ci - 1),
                    Pixel::new(ci, ci + 1),
                ],
            },
            SeedSet {
                label: 2,
                points: vec![Pixel::new(0, 0), Pixel::new(1, 0), Pixel::new(0, 1), Pixel::new(1, 1), Pixel::new(2, 0)],
            },
        ],
    )
    .expect("valid seeds");
    Fixture { image, truth, seeds }
}

/// Bright horizontal bar of the given thickness across most of the image, seeded at its left end.
pub fn bar(width: usize, height: usize, thickness: usize) -> Fixture {
    let grid = Grid2D::new(width, height).expect("size >= 2");
    let y0 = (height - thickness) / 2;
    let (x0, x1) = (width / 8, width - width / 8);
    let truth: Vec<bool> =
        grid.pixels().map(|p| (x0..x1).contains(&p.x) && (y0..y0 + thickness).contains(&p.y)).collect();
    let image = binary_image(grid, &truth, 1.0, 0.0);
    let seeds = SeedSets::single(grid, vec![Pixel::new(x0 + 1, y0 + thickness / 2)]).expect("valid seeds");
    Fixture { image, truth, seeds }
}

/// Archimedean spiral tube `r = r0 + b θ` of the given half-width, seeded at its inner end.
pub fn spiral(size: usize, turns: f64, half_width: f64) -> Fixture {
    let grid = Grid2D::new(size, size).expect("size >= 2");
    let c = (size / 2) as f64;
    let r0 = 6.0;
    let r_max = 0.45 * size as f64;
    let b = (r_max - r0) / (turns * std::f64::consts::TAU);
    let steps = (turns * 4000.0) as usize;
    let curve: Vec<(f64, f64)> = (0..=steps)
        .map(|k| {
            let t = turns * std::f64::consts::TAU * k as f64 / steps as f64;
            let r = r0 + b * t;
            (c + r * t.cos(), c + r * t.sin())
        })
        .collect();
    let mut truth = vec![false; grid.len()];
    let reach = half_width.ceil() as i64 + 1;
    for &(px, py) in &curve {
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                let (x, y) = (px.round() as i64 + dx, py.round() as i64 + dy);
                if grid.contains(x, y) {
                    let (ex, ey) = (x as f64 - px, y as f64 - py);
                    if ex * ex + ey * ey <= half_width * half_width {
                        truth[grid.index(x as usize, y as usize)] = true;
                    }
                }
            }
        }
    }
    let image = binary_image(grid, &truth, 1.0, 0.0);
    let (sx, sy) = curve[0];
    let seeds = SeedSets::single(grid, vec![Pixel::new(sx.round() as usize, sy.round() as usize)]).expect("valid seeds");
    Fixture { image, truth, seeds }
}

/// Boolean mask as a 0/1 label field.
pub fn mask_labels(grid: Grid2D, mask: &[bool]) -> Field<u32> {
    Field::new(grid, mask.iter().map(|m| *m as u32).collect()).expect("grid sized")
}

/// Smooth scalar field in `[0, 1]`: a few random low-frequency waves.
pub fn smooth_random_field(grid: Grid2D, rng: &mut impl Rng) -> ScalarField {
    let scale = grid.width().max(grid.height()) as f64;
    let waves: Vec<(f64, f64, f64)> = (0..3)
        .map(|_| {
            let k = rng.gen_range(0.5..2.0) * std::f64::consts::TAU / scale;
            let a = rng.gen_range(0.0..std::f64::consts::TAU);
            (k * a.cos(), k * a.sin(), rng.gen_range(0.0..std::f64::consts::TAU))
        })
        .collect();
    ScalarField::from_fn(grid, |x, y| {
        let s: f64 = waves.iter().map(|(kx, ky, ph)| (kx * x as f64 + ky * y as f64 + ph).sin()).sum();
        0.5 + s / 6.0
    })
}

/// Smooth random Randers metric built like the segmentation metrics:
/// `ψ_f ∈ [1, 1.8]`, `ψ_b/ψ_f ∈ [1, 1.8]`, a smoothly turning direction field and
/// a potential in `[1, 1.5]`. The anisotropy ratio stays below 4.
pub fn smooth_random_metric(grid: Grid2D, seed: u64) -> RandersMetricField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = smooth_random_field(grid, &mut rng);
    let b = smooth_random_field(grid, &mut rng);
    let theta = smooth_random_field(grid, &mut rng);
    let c = smooth_random_field(grid, &mut rng);
    let psi_f = a.map(|v| 1.0 + 0.8 * v);
    let psi_b = psi_f.zip_map(&b, |f, v| f * (1.0 + 0.8 * v)).expect("same grid");
    let g = theta.map(|t| Vec2::from_angle(2.0 * std::f64::consts::PI * t));
    let potential = c.map(|v| 1.0 + 0.5 * v);
    RandersMetricField::from_costs(&g, CostFunctions { psi_f, psi_b }, potential, MetricMode::Fb, 0.0)
        .expect("ψ_b ≥ ψ_f ≥ 1 keeps the metric positive")
}
