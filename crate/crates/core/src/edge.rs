//! Edge saliency and gradient vector flow.
//!
//! The saliency `ρ` is the Frobenius norm of the Gaussian-smoothed image
//! Jacobian. The gradient vector flow of `ρ` gives a dense, smooth field whose
//! normalized direction orients the Randers metrics built in [`crate::metric`].

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{central_gradient, Field, Grid2D, ScalarField, VectorField2};
use crate::linalg::Vec2;

/// Image with one (gray) or three (color) channels, samples in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    grid: Grid2D,
    channels: Vec<ScalarField>,
}

impl ImageBuffer {
    /// Samples are clamped into `[0, 1]`.
    pub fn new(channels: Vec<ScalarField>) -> Result<Self> {
        if channels.len() != 1 && channels.len() != 3 {
            return Err(Error::InvalidParameter(format!(
                "image must have 1 or 3 channels, got {}",
                channels.len()
            )));
        }
        let grid = channels[0].grid();
        if channels.iter().any(|c| c.grid() != grid) {
            return Err(Error::InvalidParameter("image channels differ in size".into()));
        }
        let channels = channels.into_iter().map(|c| c.map(|v| v.clamp(0.0, 1.0))).collect();
        Ok(ImageBuffer { grid, channels })
    }

    pub fn gray(field: ScalarField) -> Self {
        ImageBuffer { grid: field.grid(), channels: vec![field.map(|v| v.clamp(0.0, 1.0))] }
    }

    pub fn grid(&self) -> Grid2D {
        self.grid
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn channels(&self) -> &[ScalarField] {
        &self.channels
    }

    pub fn channel(&self, c: usize) -> &ScalarField {
        &self.channels[c]
    }

    /// Channel mean; the identity for gray images.
    pub fn to_gray(&self) -> ScalarField {
        if self.channels.len() == 1 {
            return self.channels[0].clone();
        }
        let n = self.channels.len() as f64;
        Field::from_fn(self.grid, |x, y| self.channels.iter().map(|c| c.get(x, y)).sum::<f64>() / n)
    }

    /// Feature vector at a linear pixel index, written into `out`.
    pub fn features_at(&self, index: usize, out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.channels) {
            *o = c.values()[index];
        }
    }

    /// Converts sRGB to CIE-Lab (D65), rescaled so each channel falls in `[0, 1]`:
    /// `L/100`, `(a+128)/255`, `(b+128)/255`. Gray images are returned unchanged.
    pub fn to_lab(&self) -> ImageBuffer {
        if self.channels.len() != 3 {
            return self.clone();
        }
        let n = self.grid.len();
        let mut out = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for i in 0..n {
            let rgb = [self.channels[0].values()[i], self.channels[1].values()[i], self.channels[2].values()[i]];
            let [l, a, b] = srgb_to_lab(rgb);
            out[0][i] = (l / 100.0).clamp(0.0, 1.0);
            out[1][i] = ((a + 128.0) / 255.0).clamp(0.0, 1.0);
            out[2][i] = ((b + 128.0) / 255.0).clamp(0.0, 1.0);
        }
        let channels = out.into_iter().map(|v| Field::new(self.grid, v).expect("same grid")).collect();
        ImageBuffer { grid: self.grid, channels }
    }
}

fn srgb_to_lab(rgb: [f64; 3]) -> [f64; 3] {
    let lin = rgb.map(|c| if c <= 0.04045 { c / 12.92 } else { ((c + 0.055) / 1.055).powf(2.4) });
    let x = 0.4124564 * lin[0] + 0.3575761 * lin[1] + 0.1804375 * lin[2];
    let y = 0.2126729 * lin[0] + 0.7151522 * lin[1] + 0.0721750 * lin[2];
    let z = 0.0193339 * lin[0] + 0.1191920 * lin[1] + 0.9503041 * lin[2];
    let f = |t: f64| {
        if t > 216.0 / 24389.0 {
            t.cbrt()
        } else {
            (24389.0 / 27.0 * t + 16.0) / 116.0
        }
    };
    let (fx, fy, fz) = (f(x / 0.95047), f(y), f(z / 1.08883));
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

/// Normalized discrete Gaussian truncated at radius `⌈3σ⌉`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let mut k: Vec<f64> =
        (-radius..=radius).map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp()).collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Separable Gaussian convolution with replicated borders.
pub fn gaussian_smooth(f: &ScalarField, sigma: f64) -> Result<ScalarField> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
    }
    let kernel = gaussian_kernel(sigma);
    let r = (kernel.len() / 2) as i64;
    let grid = f.grid();
    let (w, h) = (grid.width() as i64, grid.height() as i64);
    let src = f.values();

    let mut tmp = vec![0.0; src.len()];
    tmp.par_chunks_mut(w as usize).enumerate().for_each(|(y, row)| {
        let base = y * w as usize;
        for x in 0..w {
            row[x as usize] = kernel
                .iter()
                .enumerate()
                .map(|(k, wk)| wk * src[base + (x + k as i64 - r).clamp(0, w - 1) as usize])
                .sum();
        }
    });
    let mut out = vec![0.0; src.len()];
    out.par_chunks_mut(w as usize).enumerate().for_each(|(y, row)| {
        for x in 0..w as usize {
            row[x] = kernel
                .iter()
                .enumerate()
                .map(|(k, wk)| wk * tmp[(y as i64 + k as i64 - r).clamp(0, h - 1) as usize * w as usize + x])
                .sum();
        }
    });
    Field::new(grid, out)
}

/// Edge saliency `ρ(x) = √(Σᵢ |∂ₓ Gσ∗Iᵢ|² + |∂ᵧ Gσ∗Iᵢ|²)`.
pub fn edge_saliency(img: &ImageBuffer, sigma: f64) -> Result<ScalarField> {
    let mut acc = vec![0.0; img.grid().len()];
    for channel in img.channels() {
        let grad = central_gradient(&gaussian_smooth(channel, sigma)?);
        for (a, g) in acc.iter_mut().zip(grad.values()) {
            *a += g.x * g.x + g.y * g.y;
        }
    }
    Field::new(img.grid(), acc.into_iter().map(f64::sqrt).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GvfParams {
    /// Weight of the smoothness term.
    pub epsilon: f64,
    pub max_iters: usize,
    /// Stop once the largest per-pixel update falls below this.
    pub tol: f64,
}

impl Default for GvfParams {
    fn default() -> Self {
        GvfParams { epsilon: 0.1, max_iters: 10_000, tol: 1e-4 }
    }
}

impl GvfParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gvf needs epsilon > 0 and tol > 0, got epsilon={} tol={}",
                self.epsilon, self.tol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct GvfOutput {
    pub field: VectorField2,
    pub iterations: usize,
    pub converged: bool,
    pub last_update: f64,
}

/// Gradient vector flow of `ρ`: explicit descent on
/// `ε·Δh − ‖∇ρ‖²(h − ∇ρ) = 0` with Neumann borders, starting from `h = ∇ρ`.
///
/// Hitting `max_iters` is not an error; check [`GvfOutput::converged`].
pub fn gvf(rho: &ScalarField, params: &GvfParams) -> Result<GvfOutput> {
    params.validate()?;
    let grid = rho.grid();
    let w = grid.width();
    let h = grid.height();
    let target = central_gradient(rho);
    let weight: Vec<f64> = target.values().iter().map(|g| g.dot(*g)).collect();
    let max_weight = weight.iter().copied().fold(0.0, f64::max);
    let dt = 1.0 / (8.0 * params.epsilon + max_weight);
    let eps = params.epsilon;

    let mut cur: Vec<Vec2> = target.values().to_vec();
    let mut next = cur.clone();
    let mut iterations = 0;
    let mut last_update = 0.0;
    let mut converged = false;

    while iterations < params.max_iters {
        let src = &cur;
        let tv = target.values();
        last_update = next
            .par_chunks_mut(w)
            .enumerate()
            .map(|(y, row)| {
                let mut worst: f64 = 0.0;
                for (x, out) in row.iter_mut().enumerate() {
                    let i = y * w + x;
                    let c = src[i];
                    let left = if x > 0 { src[i - 1] } else { c };
                    let right = if x + 1 < w { src[i + 1] } else { c };
                    let up = if y > 0 { src[i - w] } else { c };
                    let down = if y + 1 < h { src[i + w] } else { c };
                    let lap = left + right + up + down - c * 4.0;
                    let step = (lap * eps - (c - tv[i]) * weight[i]) * dt;
                    *out = c + step;
                    worst = worst.max(step.norm());
                }
                worst
            })
            .reduce(|| 0.0, f64::max);
        std::mem::swap(&mut cur, &mut next);
        iterations += 1;
        if last_update < params.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("gvf stopped after {iterations} iterations, last update {last_update:e}");
    }
    Ok(GvfOutput { field: Field::new(grid, cur)?, iterations, converged, last_update })
}

/// Discrete GVF energy `ε Σ_edges ‖h_i − h_j‖² + Σ ‖∇ρ‖² ‖h − ∇ρ‖²`, matching the descent in [`gvf`].
pub fn gvf_energy(rho: &ScalarField, h: &VectorField2, epsilon: f64) -> f64 {
    let grid = rho.grid();
    let target = central_gradient(rho);
    let (w, hh) = (grid.width(), grid.height());
    let v = h.values();
    let mut reg = 0.0;
    let mut data = 0.0;
    for y in 0..hh {
        for x in 0..w {
            let i = y * w + x;
            if x + 1 < w {
                let d = v[i + 1] - v[i];
                reg += d.dot(d);
            }
            if y + 1 < hh {
                let d = v[i + w] - v[i];
                reg += d.dot(d);
            }
            let t = target.values()[i];
            let r = v[i] - t;
            data += t.dot(t) * r.dot(r);
        }
    }
    epsilon * reg + data
}

/// Pointwise Euler-Lagrange residual `‖ε·Δh − ‖∇ρ‖²(h − ∇ρ)‖`.
pub fn gvf_residual(rho: &ScalarField, h: &VectorField2, epsilon: f64) -> ScalarField {
    let grid = rho.grid();
    let target = central_gradient(rho);
    let (w, hh) = (grid.width(), grid.height());
    let v = h.values();
    Field::from_fn(grid, |x, y| {
        let i = y * w + x;
        let c = v[i];
        let left = if x > 0 { v[i - 1] } else { c };
        let right = if x + 1 < w { v[i + 1] } else { c };
        let up = if y > 0 { v[i - w] } else { c };
        let down = if y + 1 < hh { v[i + w] } else { c };
        let t = target.values()[i];
        ((left + right + up + down - c * 4.0) * epsilon - (c - t) * t.dot(t)).norm()
    })
}

/// Norms below this are treated as zero by [`unit_vector_field`].
pub const DEGENERATE_NORM: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct UnitField {
    pub field: VectorField2,
    /// `true` where the input had (near) zero norm and `(1, 0)` was substituted.
    pub degenerate: Vec<bool>,
}

impl UnitField {
    pub fn degenerate_count(&self) -> usize {
        self.degenerate.iter().filter(|d| **d).count()
    }
}

pub fn unit_vector_field(h: &VectorField2) -> UnitField {
    let mut degenerate = vec![false; h.grid().len()];
    let values = h
        .values()
        .iter()
        .zip(degenerate.iter_mut())
        .map(|(v, d)| {
            let n = v.norm();
            if n >= DEGENERATE_NORM {
                *v * (1.0 / n)
            } else {
                *d = true;
                Vec2::new(1.0, 0.0)
            }
        })
        .collect();
    UnitField { field: Field::new(h.grid(), values).expect("same grid"), degenerate }
}
