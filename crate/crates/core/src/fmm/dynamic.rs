//! Dynamic potentials refreshed during front propagation.
//!
//! When `x_min` is accepted, every neighbour `z` that is neither a seed nor
//! accepted gets its dynamic potential overwritten from a consistency measure
//! between `z` and `x_min`, immediately before its Hopf-Lax update.

use crate::edge::ImageBuffer;
use crate::error::{Error, Result};
use crate::grid::ScalarField;

/// In-loop potential update. `ENABLED = false` removes the call from the solver loop.
pub trait DynamicHook {
    const ENABLED: bool;

    /// New dynamic potential of `z` given the latest accepted pixel `x_min`.
    fn potential(&self, z: usize, x_min: usize) -> f64;
}

/// No dynamic term: `𝔠_dyn ≡ 1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoDynamic;

impl DynamicHook for NoDynamic {
    const ENABLED: bool = false;

    #[inline]
    fn potential(&self, _z: usize, _x_min: usize) -> f64 {
        1.0
    }
}

/// Per-pixel feature vectors `𝔉(x) ∈ ℝⁿ`, stored pixel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    dim: usize,
    values: Vec<f64>,
}

impl FeatureMap {
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || values.len() % dim != 0 {
            return Err(Error::InvalidParameter(format!(
                "feature map of {} values is not a multiple of dimension {dim}",
                values.len()
            )));
        }
        Ok(FeatureMap { dim, values })
    }

    /// Color vector (or gray level) of each pixel.
    pub fn from_image(img: &ImageBuffer) -> Self {
        let dim = img.channel_count();
        let n = img.grid().len();
        let mut values = vec![0.0; n * dim];
        for i in 0..n {
            img.features_at(i, &mut values[i * dim..(i + 1) * dim]);
        }
        FeatureMap { dim, values }
    }

    /// Scalar map such as a probability map.
    pub fn from_scalar(field: &ScalarField) -> Self {
        FeatureMap { dim: 1, values: field.values().to_vec() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn at(&self, index: usize) -> &[f64] {
        &self.values[index * self.dim..(index + 1) * self.dim]
    }

    #[inline]
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        self.at(a).iter().zip(self.at(b)).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
    }
}

/// `𝔠_dyn(z) = exp(β_d ‖𝔉(z) − 𝔉(x_min)‖)`.
pub fn dynamic_update_fb(z: usize, x_min: usize, features: &FeatureMap, beta_d: f64) -> f64 {
    (beta_d * features.distance(z, x_min)).exp()
}

/// `𝔠̃_dyn(z) = exp(β_d |min{ζ(z) − ζ(x_min), 0}|)`.
pub fn dynamic_update_tube(z: usize, x_min: usize, zeta: &ScalarField, beta_d: f64) -> f64 {
    let v = zeta.values();
    (beta_d * (v[z] - v[x_min]).min(0.0).abs()).exp()
}

/// Feature-consistency potential for foreground/background segmentation.
#[derive(Debug, Clone)]
pub struct FbDynamic<'a> {
    pub features: &'a FeatureMap,
    pub beta_d: f64,
}

impl DynamicHook for FbDynamic<'_> {
    const ENABLED: bool = true;

    #[inline]
    fn potential(&self, z: usize, x_min: usize) -> f64 {
        dynamic_update_fb(z, x_min, self.features, self.beta_d)
    }
}

/// One-sided tubularity-consistency potential.
#[derive(Debug, Clone)]
pub struct TubeDynamic<'a> {
    pub zeta: &'a ScalarField,
    pub beta_d: f64,
}

impl DynamicHook for TubeDynamic<'_> {
    const ENABLED: bool = true;

    #[inline]
    fn potential(&self, z: usize, x_min: usize) -> f64 {
        dynamic_update_tube(z, x_min, self.zeta, self.beta_d)
    }
}

/// Owned choice of dynamic potential, dispatched onto the generic solver.
#[derive(Debug, Clone, Default)]
pub enum DynamicPotential {
    #[default]
    Disabled,
    Fb { features: FeatureMap, beta_d: f64 },
    Tube { zeta: ScalarField, beta_d: f64 },
}
