//! Data-driven Randers metrics `F(x, u) = 𝔠(x) (‖u‖_{M(x)} − ⟨ω(x), u⟩)`.
//!
//! The tensor `M` and drift `ω` are assembled from a unit vector field `g` and
//! two cost functions so that, with `𝔠 = 1`, travelling along `g` costs `ψ_f`,
//! against `g` costs `ψ_b` and across `g` costs 1.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid2D, Pixel, ScalarField, SpdTensorField, VectorField2};
use crate::linalg::{Spd2, Vec2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mu {
    /// `‖ψ_f‖²_∞`
    Auto,
    Value(f64),
}

/// Parameters shared by the metric construction and both segmentation pipelines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostParams {
    pub alpha_f: f64,
    pub alpha_b: f64,
    pub beta_s: f64,
    pub beta_d: f64,
    /// Gaussian scale of the saliency map, in pixels.
    pub sigma: f64,
    /// GVF regularization weight.
    pub epsilon: f64,
    pub mu: Mu,
}

impl Default for CostParams {
    fn default() -> Self {
        CostParams::randers()
    }
}

impl CostParams {
    /// `α = (2, 3)`: anisotropic and asymmetric.
    pub fn randers() -> Self {
        CostParams { alpha_f: 2.0, alpha_b: 3.0, beta_s: 10.0, beta_d: 10.0, sigma: 1.0, epsilon: 0.1, mu: Mu::Auto }
    }

    /// `α = (2, 0)`: symmetric, anisotropic Riemannian.
    pub fn anisotropic_riemannian() -> Self {
        CostParams { alpha_b: 0.0, ..Self::randers() }
    }

    /// `α = (0, 0)`: isotropic.
    pub fn isotropic() -> Self {
        CostParams { alpha_f: 0.0, alpha_b: 0.0, ..Self::randers() }
    }

    pub fn with_alpha(self, alpha_f: f64, alpha_b: f64) -> Self {
        CostParams { alpha_f, alpha_b, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::InvalidParameter(format!("{what} = {v}")));
        if !(self.alpha_f >= 0.0) {
            return bad("alpha_f must be >= 0, got", self.alpha_f);
        }
        if !(self.alpha_b >= 0.0) {
            return bad("alpha_b must be >= 0, got", self.alpha_b);
        }
        if !(self.beta_s > 0.0) {
            return bad("beta_s must be > 0, got", self.beta_s);
        }
        if !(self.beta_d >= 0.0) {
            return bad("beta_d must be >= 0, got", self.beta_d);
        }
        if !(self.sigma > 0.0) {
            return bad("sigma must be > 0, got", self.sigma);
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be > 0, got", self.epsilon);
        }
        if let Mu::Value(mu) = self.mu {
            if !(mu >= 0.0) {
                return bad("mu must be >= 0, got", mu);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostFunctions {
    pub psi_f: ScalarField,
    pub psi_b: ScalarField,
}

/// `ρ/‖ρ‖_∞`, defined as zero everywhere when `ρ ≡ 0`.
pub fn normalized(rho: &ScalarField) -> ScalarField {
    let m = rho.max_abs();
    if m > 0.0 {
        rho.map(|v| v / m)
    } else {
        rho.map(|_| 0.0)
    }
}

/// `ψ_f = exp(α_f ρ/‖ρ‖_∞)`, `ψ_b = exp(α_b ρ/‖ρ‖_∞) ψ_f`.
pub fn cost_functions(rho: &ScalarField, alpha_f: f64, alpha_b: f64) -> CostFunctions {
    let r = normalized(rho);
    let psi_f = r.map(|v| (alpha_f * v).exp());
    let psi_b = r.zip_map(&psi_f, |v, pf| (alpha_b * v).exp() * pf).expect("same grid");
    CostFunctions { psi_f, psi_b }
}

/// `M = ¼(ψ_f+ψ_b)² g⊗g + g⊥⊗g⊥` for a unit field `g`.
pub fn build_tensor(g: &VectorField2, costs: &CostFunctions) -> SpdTensorField {
    let n = g.grid().len();
    let values = (0..n)
        .map(|i| {
            let gv = g.values()[i];
            let s = 0.5 * (costs.psi_f.values()[i] + costs.psi_b.values()[i]);
            gv.outer().scaled(s * s) + gv.perp().outer()
        })
        .collect();
    Field::new(g.grid(), values).expect("same grid")
}

/// `ω = ½(ψ_b − ψ_f) g`.
pub fn build_omega(g: &VectorField2, costs: &CostFunctions) -> VectorField2 {
    let n = g.grid().len();
    let values = (0..n)
        .map(|i| g.values()[i] * (0.5 * (costs.psi_b.values()[i] - costs.psi_f.values()[i])))
        .collect();
    Field::new(g.grid(), values).expect("same grid")
}

/// Resolves `μ`, with `Auto` meaning `‖ψ_f‖²_∞`.
pub fn resolve_mu(mu: Mu, psi_f: &ScalarField) -> f64 {
    match mu {
        Mu::Auto => {
            let m = psi_f.max_abs();
            m * m
        }
        Mu::Value(v) => v,
    }
}

/// `M̃ = M + μ g⊗g`.
pub fn build_tubular_tensor(m: &SpdTensorField, g: &VectorField2, mu: f64) -> SpdTensorField {
    m.zip_map(g, |t, gv| t + gv.outer().scaled(mu)).expect("same grid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricMode {
    /// Foreground/background segmentation.
    Fb,
    /// Tubular structure segmentation.
    Tube,
}

/// Input of [`static_potential`].
#[derive(Debug, Clone, Copy)]
pub enum PotentialSource<'a> {
    /// Edge saliency `ρ`: `exp(β_s ρ/‖ρ‖_∞)`.
    Saliency(&'a ScalarField),
    /// Tubularity map `ζ ∈ [0, 1]`: `exp(β_s (‖ζ‖_∞ − ζ))`.
    Tubularity(&'a ScalarField),
}

pub fn static_potential(source: PotentialSource<'_>, beta_s: f64) -> ScalarField {
    match source {
        PotentialSource::Saliency(rho) => normalized(rho).map(|v| (beta_s * v).exp()),
        PotentialSource::Tubularity(zeta) => {
            let top = zeta.max_abs();
            zeta.map(|v| (beta_s * (top - v)).exp())
        }
    }
}

/// The cost functions and `μ` a metric was built from, kept for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Construction {
    pub costs: CostFunctions,
    pub unit_field: VectorField2,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandersMetricField {
    tensor: SpdTensorField,
    omega: VectorField2,
    static_potential: ScalarField,
    dynamic_potential: ScalarField,
    mode: MetricMode,
    construction: Option<Construction>,
}

impl RandersMetricField {
    /// Validates positive definiteness, potential positivity and `‖ω‖_{M⁻¹} < 1`.
    pub fn new(
        tensor: SpdTensorField,
        omega: VectorField2,
        static_potential: ScalarField,
        mode: MetricMode,
    ) -> Result<Self> {
        let grid = tensor.grid();
        for g in [omega.grid(), static_potential.grid()] {
            if g != grid {
                return Err(Error::SizeMismatch { expected: grid.len(), got: g.len() });
            }
        }
        tensor.check_positive_definite()?;
        if let Some(i) = static_potential.values().iter().position(|c| !(*c > 0.0 && c.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "potential must be positive and finite, got {} at index {i}",
                static_potential.values()[i]
            )));
        }
        for (i, (m, w)) in tensor.values().iter().zip(omega.values()).enumerate() {
            let ratio = drift_ratio(m, *w);
            if !(ratio < 1.0) {
                let p = grid.pixel(i);
                return Err(Error::PositivityViolated { x: p.x, y: p.y, ratio });
            }
        }
        Ok(RandersMetricField {
            tensor,
            omega,
            static_potential,
            dynamic_potential: ScalarField::filled(grid, 1.0),
            mode,
            construction: None,
        })
    }

    /// Spatially constant metric.
    pub fn constant(grid: Grid2D, tensor: Spd2, omega: Vec2, potential: f64) -> Result<Self> {
        Self::new(
            Field::filled(grid, tensor),
            Field::filled(grid, omega),
            Field::filled(grid, potential),
            MetricMode::Fb,
        )
    }

    /// Assembles `M` (or `M̃` when `mu > 0`) and `ω` from a unit field and cost functions.
    pub fn from_costs(
        unit_field: &VectorField2,
        costs: CostFunctions,
        static_potential: ScalarField,
        mode: MetricMode,
        mu: f64,
    ) -> Result<Self> {
        let mut tensor = build_tensor(unit_field, &costs);
        if mu > 0.0 {
            tensor = build_tubular_tensor(&tensor, unit_field, mu);
        }
        let omega = build_omega(unit_field, &costs);
        let mut metric = Self::new(tensor, omega, static_potential, mode)?;
        metric.construction = Some(Construction { costs, unit_field: unit_field.clone(), mu });
        Ok(metric)
    }

    pub fn grid(&self) -> Grid2D {
        self.tensor.grid()
    }

    pub fn tensor(&self) -> &SpdTensorField {
        &self.tensor
    }

    pub fn omega(&self) -> &VectorField2 {
        &self.omega
    }

    pub fn static_potential(&self) -> &ScalarField {
        &self.static_potential
    }

    pub fn dynamic_potential(&self) -> &ScalarField {
        &self.dynamic_potential
    }

    pub fn mode(&self) -> MetricMode {
        self.mode
    }

    pub fn construction(&self) -> Option<&Construction> {
        self.construction.as_ref()
    }

    /// Replaces the dynamic potential (must be positive).
    pub fn set_dynamic_potential(&mut self, dynamic: ScalarField) -> Result<()> {
        if dynamic.grid() != self.grid() {
            return Err(Error::SizeMismatch { expected: self.grid().len(), got: dynamic.grid().len() });
        }
        if dynamic.values().iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidParameter("dynamic potential must be positive".into()));
        }
        self.dynamic_potential = dynamic;
        Ok(())
    }

    /// Multiplies the static potential by `c > 0`.
    pub fn scale_potential(&mut self, c: f64) {
        self.static_potential.values_mut().iter_mut().for_each(|v| *v *= c);
    }

    /// `𝔠 = static · dynamic` at a linear index.
    #[inline]
    pub fn potential(&self, index: usize) -> f64 {
        self.static_potential.values()[index] * self.dynamic_potential.values()[index]
    }

    /// Randers part `‖u‖_M − ⟨ω, u⟩` without the potential.
    #[inline]
    pub fn randers_cost(&self, index: usize, u: Vec2) -> f64 {
        self.tensor.values()[index].norm(u) - self.omega.values()[index].dot(u)
    }

    /// `F(x, u)` at a linear index; no zero-vector check.
    #[inline]
    pub fn eval_index(&self, index: usize, u: Vec2) -> f64 {
        self.potential(index) * self.randers_cost(index, u)
    }

    pub fn eval(&self, x: Pixel, u: Vec2) -> Result<f64> {
        eval_metric(self, x, u)
    }
}

/// `F(x, u)`; the zero vector is a domain error.
pub fn eval_metric(field: &RandersMetricField, x: Pixel, u: Vec2) -> Result<f64> {
    if u == Vec2::ZERO {
        return Err(Error::ZeroVector);
    }
    let grid = field.grid();
    let x = grid.checked_pixel(x.x as i64, x.y as i64)?;
    Ok(field.eval_index(grid.index(x.x, x.y), u))
}

/// `‖ω‖_{M⁻¹}`.
pub fn drift_ratio(m: &Spd2, omega: Vec2) -> f64 {
    match m.inverse() {
        Ok(inv) => inv.norm(omega),
        Err(_) => f64::INFINITY,
    }
}

/// Closed form of `‖ω‖_{M̃⁻¹}` for a metric built from `ψ_f, ψ_b, μ`:
/// `½(ψ_b − ψ_f) / √(¼(ψ_f+ψ_b)² + μ)`, which is `(ψ_b−ψ_f)/(ψ_b+ψ_f)` when `μ = 0`.
pub fn closed_form_ratio(psi_f: f64, psi_b: f64, mu: f64) -> f64 {
    let s = 0.5 * (psi_f + psi_b);
    0.5 * (psi_b - psi_f) / (s * s + mu).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositivityReport {
    pub max_ratio: f64,
    pub argmax: Pixel,
    pub passed: bool,
    /// Largest closed-form ratio, for metrics with a known construction.
    pub closed_form_max: Option<f64>,
    /// Largest pixelwise gap between closed form and quadratic form.
    pub closed_form_gap: Option<f64>,
}

pub fn positivity_check(field: &RandersMetricField) -> PositivityReport {
    let grid = field.grid();
    let ratios: Vec<f64> =
        field.tensor.values().iter().zip(field.omega.values()).map(|(m, w)| drift_ratio(m, *w)).collect();
    let (argmax, max_ratio) =
        ratios.iter().copied().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, r)| if r > acc.1 { (i, r) } else { acc });
    let (closed_form_max, closed_form_gap) = match &field.construction {
        Some(c) => {
            let mut cmax = f64::NEG_INFINITY;
            let mut gap: f64 = 0.0;
            for (i, r) in ratios.iter().enumerate() {
                let cf = closed_form_ratio(c.costs.psi_f.values()[i], c.costs.psi_b.values()[i], c.mu);
                cmax = cmax.max(cf);
                gap = gap.max((cf - r).abs());
            }
            (Some(cmax), Some(gap))
        }
        None => (None, None),
    };
    PositivityReport {
        max_ratio,
        argmax: grid.pixel(argmax),
        passed: max_ratio < 1.0,
        closed_form_max,
        closed_form_gap,
    }
}

/// Angular resolution of the dense sampling in [`anisotropy_ratio`].
const ANGLE_STEPS: usize = 360;

/// Extreme values of `θ ↦ ‖u_θ‖_M − ⟨ω, u_θ⟩` over the unit circle, `(min, max)`.
///
/// Dense sampling at π/180 followed by one Newton step on each extremum.
pub fn unit_circle_extrema(m: &Spd2, omega: Vec2) -> (f64, f64) {
    let f = |t: f64| {
        let u = Vec2::from_angle(t);
        m.norm(u) - omega.dot(u)
    };
    let step = 2.0 * PI / ANGLE_STEPS as f64;
    let (mut tmin, mut fmin, mut tmax, mut fmax) = (0.0, f64::INFINITY, 0.0, f64::NEG_INFINITY);
    for j in 0..ANGLE_STEPS {
        let t = j as f64 * step;
        let v = f(t);
        if v < fmin {
            fmin = v;
            tmin = t;
        }
        if v > fmax {
            fmax = v;
            tmax = t;
        }
    }
    let refine = |t: f64, fallback: f64, want_min: bool| {
        let t_new = t - newton_step(m, omega, t);
        let v = f(t_new);
        let better = if want_min { v < fallback } else { v > fallback };
        if v.is_finite() && better {
            v
        } else {
            fallback
        }
    };
    (refine(tmin, fmin, true), refine(tmax, fmax, false))
}

/// `f'(θ)/f''(θ)` with analytic derivatives of the Randers cost on the unit circle.
fn newton_step(m: &Spd2, omega: Vec2, t: f64) -> f64 {
    let u = Vec2::from_angle(t);
    let du = u.perp();
    let q = m.quad(u);
    let dq = 2.0 * m.bilinear(du, u);
    let ddq = 2.0 * (m.quad(du) - q);
    let s = q.sqrt();
    let ds = dq / (2.0 * s);
    let dds = ddq / (2.0 * s) - dq * dq / (4.0 * s * s * s);
    let d1 = ds - omega.dot(du);
    let d2 = dds + omega.dot(u);
    if d2.abs() > 1e-300 {
        (d1 / d2).clamp(-PI / 90.0, PI / 90.0)
    } else {
        0.0
    }
}

/// `κ(F) = max_x max_{u,v} F(x,u)/F(x,v)` over unit `u, v`. The potential cancels.
pub fn anisotropy_ratio(field: &RandersMetricField) -> f64 {
    field
        .tensor
        .values()
        .par_iter()
        .zip(field.omega.values().par_iter())
        .map(|(m, w)| {
            let (lo, hi) = unit_circle_extrema(m, *w);
            hi / lo
        })
        .reduce(|| 1.0, f64::max)
}

/// Boundary of the unit ball `{u : F(x, u) ≤ 1}`, sampled at angles `2πj/n`.
pub fn control_set(field: &RandersMetricField, x: Pixel, n_samples: usize) -> Result<Vec<Vec2>> {
    if n_samples < 8 {
        return Err(Error::InvalidParameter(format!("control set needs at least 8 samples, got {n_samples}")));
    }
    (0..n_samples)
        .map(|j| {
            let u = Vec2::from_angle(2.0 * PI * j as f64 / n_samples as f64);
            Ok(u * (1.0 / eval_metric(field, x, u)?))
        })
        .collect()
}

/// One sample of [`directional_profile`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionalSample {
    /// Rotation from `g(x)`, counterclockwise.
    pub angle: f64,
    pub direction: Vec2,
    pub cost: f64,
    /// `direction / cost`, a point on the control set boundary.
    pub ball_point: Vec2,
}

/// Costs along `u_j = R(j·2π/n) g(x)` for `j = 1..=n`, where `g` is the
/// unit field the metric was built from (or `(1, 0)` without one).
pub fn directional_profile(field: &RandersMetricField, x: Pixel, n: usize) -> Result<Vec<DirectionalSample>> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one direction".into()));
    }
    let grid = field.grid();
    let p = grid.checked_pixel(x.x as i64, x.y as i64)?;
    let g = field
        .construction
        .as_ref()
        .map(|c| c.unit_field.values()[grid.index(p.x, p.y)])
        .unwrap_or(Vec2::new(1.0, 0.0));
    let step = 2.0 * PI / n as f64;
    (1..=n)
        .map(|j| {
            let angle = j as f64 * step;
            let direction = g.rotated(angle);
            let cost = eval_metric(field, p, direction)?;
            Ok(DirectionalSample { angle, direction, cost, ball_point: direction * (1.0 / cost) })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn grid(w: usize, h: usize) -> Grid2D {
        Grid2D::new(w, h).unwrap()
    }

    fn diag45() -> Vec2 {
        Vec2::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2)
    }

    fn constant_costs(g: Grid2D, pf: f64, pb: f64) -> CostFunctions {
        CostFunctions { psi_f: Field::filled(g, pf), psi_b: Field::filled(g, pb) }
    }

    fn skewed_metric(potential: f64) -> RandersMetricField {
        let g = grid(3, 3);
        let unit = Field::filled(g, diag45());
        RandersMetricField::from_costs(&unit, constant_costs(g, 3.0, 8.0), Field::filled(g, potential), MetricMode::Fb, 0.0)
            .unwrap()
    }

    #[test]
    fn cost_function_examples() {
        let g = grid(2, 2);
        let rho = ScalarField::new(g, vec![0.0, 0.5, 1.0, 0.25]).unwrap();
        let c = cost_functions(&rho, 2.0, 3.0);
        assert_eq!(c.psi_f.values()[0], 1.0);
        assert_eq!(c.psi_b.values()[0], 1.0);
        assert_abs_diff_eq!(c.psi_f.values()[2], 7.38905609893065, epsilon = 1e-12);
        assert_abs_diff_eq!(c.psi_b.values()[2], 148.4131591025766, epsilon = 1e-10);
        let sym = cost_functions(&rho, 2.0, 0.0);
        assert_eq!(sym.psi_f, sym.psi_b);
        for (f, b) in c.psi_f.values().iter().zip(c.psi_b.values()) {
            assert!(*f >= 1.0 && b >= f);
        }
    }

    #[test]
    fn zero_saliency_gives_unit_costs() {
        let rho = ScalarField::filled(grid(3, 3), 0.0);
        let c = cost_functions(&rho, 2.0, 3.0);
        assert!(c.psi_f.values().iter().chain(c.psi_b.values()).all(|v| *v == 1.0));
    }

    #[test]
    fn tensor_examples() {
        let g = grid(2, 2);
        let unit = Field::filled(g, Vec2::new(0.6, 0.8));
        let m = build_tensor(&unit, &constant_costs(g, 1.0, 1.0));
        for t in m.values() {
            assert_abs_diff_eq!(t.m11, 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(t.m12, 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(t.m22, 1.0, epsilon = 1e-15);
        }
        let unit = Field::filled(g, diag45());
        let m = build_tensor(&unit, &constant_costs(g, 3.0, 8.0));
        let t = m.values()[0];
        assert_abs_diff_eq!(t.m11, 15.625, epsilon = 1e-12);
        assert_abs_diff_eq!(t.m12, 14.625, epsilon = 1e-12);
        assert_abs_diff_eq!(t.m22, 15.625, epsilon = 1e-12);
        let mg = t.apply(diag45());
        assert_abs_diff_eq!(mg.x, 30.25 * FRAC_1_SQRT_2, epsilon = 1e-10);
        assert_abs_diff_eq!(mg.y, 30.25 * FRAC_1_SQRT_2, epsilon = 1e-10);
        let perp = diag45().perp();
        let mp = t.apply(perp);
        assert_abs_diff_eq!(mp.x, perp.x, epsilon = 1e-12);
        assert_abs_diff_eq!(mp.y, perp.y, epsilon = 1e-12);
    }

    #[test]
    fn omega_examples() {
        let g = grid(2, 2);
        let unit = Field::filled(g, diag45());
        let w = build_omega(&unit, &constant_costs(g, 2.0, 2.0));
        assert!(w.values().iter().all(|v| *v == Vec2::ZERO));
        let costs = constant_costs(g, 3.0, 8.0);
        let w = build_omega(&unit, &costs).values()[0];
        assert_abs_diff_eq!(w.x, 1.7677669529663689, epsilon = 1e-12);
        assert_abs_diff_eq!(w.y, 1.7677669529663689, epsilon = 1e-12);
        let m = build_tensor(&unit, &costs).values()[0];
        let inv = crate::linalg::spd_inverse(&m).unwrap();
        assert_abs_diff_eq!(inv.norm(w), 5.0 / 11.0, epsilon = 1e-12);
    }

    #[test]
    fn tubular_tensor_examples() {
        let g = grid(2, 2);
        let unit = Field::filled(g, Vec2::new(1.0, 0.0));
        let m = build_tensor(&unit, &constant_costs(g, 1.0, 1.0));
        assert_eq!(build_tubular_tensor(&m, &unit, 0.0), m);
        let t = build_tubular_tensor(&m, &unit, 4.0).values()[0];
        assert_eq!(t, Spd2::diag(5.0, 1.0));
        assert_eq!(resolve_mu(Mu::Auto, &Field::filled(g, 3.0)), 9.0);
    }

    #[test]
    fn tubular_tensor_keeps_positivity() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let g = grid(16, 16);
        let unit = Field::from_fn(g, |_, _| Vec2::from_angle(rng.gen_range(0.0..2.0 * PI)));
        let rho = Field::from_fn(g, |_, _| rng.gen_range(0.0..1.0));
        let costs = cost_functions(&rho, 2.0, 3.0);
        let m = build_tensor(&unit, &costs);
        let w = build_omega(&unit, &costs);
        let mt = build_tubular_tensor(&m, &unit, resolve_mu(Mu::Auto, &costs.psi_f));
        for i in 0..g.len() {
            let before = drift_ratio(&m.values()[i], w.values()[i]);
            let after = drift_ratio(&mt.values()[i], w.values()[i]);
            assert!(after <= before + 1e-15 && before < 1.0);
            assert!(mt.values()[i].is_positive_definite());
        }
    }

    #[test]
    fn eval_skewed_directions() {
        let f = skewed_metric(1.0);
        let x = Pixel::new(1, 1);
        assert_abs_diff_eq!(f.eval(x, diag45()).unwrap(), 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.eval(x, -diag45()).unwrap(), 8.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.eval(x, diag45().perp()).unwrap(), 1.0, epsilon = 1e-12);
        let u = Vec2::new(0.3, -1.7);
        assert_eq!(f.eval(x, u * 2.0).unwrap(), 2.0 * f.eval(x, u).unwrap());
        assert_eq!(f.eval(x, Vec2::ZERO), Err(Error::ZeroVector));
        assert!(matches!(f.eval(Pixel::new(3, 0), u), Err(Error::OutOfGrid { .. })));
    }

    #[test]
    fn eval_isotropic() {
        let g = grid(4, 4);
        let f = RandersMetricField::constant(g, Spd2::IDENTITY, Vec2::ZERO, 2.5).unwrap();
        for k in 0..12 {
            let u = Vec2::from_angle(k as f64 * 0.5);
            assert_abs_diff_eq!(f.eval(Pixel::new(2, 1), u).unwrap(), 2.5, epsilon = 1e-14);
        }
    }

    #[test]
    fn construction_rejects_violations() {
        let g = grid(2, 2);
        let err = RandersMetricField::constant(g, Spd2::IDENTITY, Vec2::new(1.0, 0.0), 1.0).unwrap_err();
        assert!(matches!(err, Error::PositivityViolated { .. }));
        assert!(RandersMetricField::constant(g, Spd2::IDENTITY, Vec2::ZERO, 0.0).is_err());
        assert!(RandersMetricField::constant(g, Spd2::new(1.0, 2.0, 1.0), Vec2::ZERO, 1.0).is_err());
    }

    #[test]
    fn positivity_examples() {
        let g = grid(3, 3);
        let unit = Field::filled(g, diag45());
        let sym = RandersMetricField::from_costs(&unit, constant_costs(g, 4.0, 4.0), Field::filled(g, 1.0), MetricMode::Fb, 0.0)
            .unwrap();
        let r = positivity_check(&sym);
        assert_eq!(r.max_ratio, 0.0);
        assert!(r.passed);
        let r = positivity_check(&skewed_metric(1.0));
        assert_abs_diff_eq!(r.max_ratio, 5.0 / 11.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.closed_form_max.unwrap(), 5.0 / 11.0, epsilon = 1e-15);
        assert!(r.closed_form_gap.unwrap() <= 1e-9);
    }

    #[test]
    fn positivity_sweep_random_alpha() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let g = grid(12, 12);
        for _ in 0..20 {
            let (af, ab) = (rng.gen_range(0.0..5.0), rng.gen_range(0.0..5.0));
            let mu = if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.0..50.0) };
            let unit = Field::from_fn(g, |_, _| Vec2::from_angle(rng.gen_range(0.0..2.0 * PI)));
            let rho = Field::from_fn(g, |_, _| rng.gen_range(0.0..3.0));
            let m = RandersMetricField::from_costs(&unit, cost_functions(&rho, af, ab), Field::filled(g, 1.0), MetricMode::Fb, mu)
                .unwrap();
            let r = positivity_check(&m);
            assert!(r.passed);
            assert!(r.closed_form_gap.unwrap() <= 1e-9);
        }
    }

    fn brute_kappa(m: &Spd2, w: Vec2, samples: usize) -> f64 {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for j in 0..samples {
            let u = Vec2::from_angle(2.0 * PI * j as f64 / samples as f64);
            let v = m.norm(u) - w.dot(u);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        hi / lo
    }

    #[test]
    fn anisotropy_examples() {
        let g = grid(3, 3);
        let iso = RandersMetricField::constant(g, Spd2::IDENTITY, Vec2::ZERO, 3.0).unwrap();
        assert_abs_diff_eq!(anisotropy_ratio(&iso), 1.0, epsilon = 1e-9);
        let f = skewed_metric(1.0);
        let kappa = anisotropy_ratio(&f);
        let oracle = brute_kappa(&f.tensor().values()[0], f.omega().values()[0], 100_000);
        assert!((kappa - oracle).abs() / oracle < 1e-4, "{kappa} vs {oracle}");
        assert!(kappa >= 8.0);
        let scaled = skewed_metric(17.0);
        assert_eq!(anisotropy_ratio(&scaled), kappa);
    }

    #[test]
    fn extrema_directions_invariant_to_potential() {
        let f1 = skewed_metric(1.0);
        let f2 = skewed_metric(6.5);
        let x = Pixel::new(0, 0);
        let argext = |f: &RandersMetricField| {
            let vals: Vec<f64> =
                (0..720).map(|j| f.eval(x, Vec2::from_angle(j as f64 * PI / 360.0)).unwrap()).collect();
            let amin = (0..720).min_by(|a, b| vals[*a].total_cmp(&vals[*b])).unwrap();
            let amax = (0..720).max_by(|a, b| vals[*a].total_cmp(&vals[*b])).unwrap();
            (amin, amax)
        };
        assert_eq!(argext(&f1), argext(&f2));
    }

    #[test]
    fn control_set_examples() {
        let g = grid(3, 3);
        let iso = RandersMetricField::constant(g, Spd2::IDENTITY, Vec2::ZERO, 1.0).unwrap();
        for b in control_set(&iso, Pixel::new(1, 1), 64).unwrap() {
            assert_abs_diff_eq!(b.norm(), 1.0, epsilon = 1e-14);
        }
        assert!(control_set(&iso, Pixel::new(1, 1), 7).is_err());

        let unit = Field::filled(g, diag45());
        for pb in [5.0, 6.0, 8.0, 12.0] {
            let m = RandersMetricField::from_costs(&unit, constant_costs(g, 5.0, pb), Field::filled(g, 1.0), MetricMode::Fb, 0.0)
                .unwrap();
            let pts = control_set(&m, Pixel::new(1, 1), 72).unwrap();
            for b in &pts {
                assert_abs_diff_eq!(m.eval(Pixel::new(1, 1), *b).unwrap(), 1.0, epsilon = 1e-9);
            }
            let centroid = pts.iter().fold(Vec2::ZERO, |a, b| a + *b) * (1.0 / pts.len() as f64);
            if pb == 5.0 {
                for j in 0..36 {
                    let d = pts[j] + pts[j + 36];
                    assert!(d.norm() < 1e-9);
                }
                assert!(centroid.norm() < 1e-12);
            } else {
                // drift pushes the ball toward g
                assert!(centroid.norm() > 1e-3);
                assert!(centroid.dot(diag45()) > 0.0);
            }
        }
    }

    #[test]
    fn static_potential_examples() {
        let g = grid(2, 2);
        let rho = ScalarField::new(g, vec![0.0, 2.0, 1.0, 0.5]).unwrap();
        let p = static_potential(PotentialSource::Saliency(&rho), 10.0);
        assert_eq!(p.values()[0], 1.0);
        assert_abs_diff_eq!(p.values()[1], 10f64.exp(), epsilon = 1e-9);
        let zeta = ScalarField::new(g, vec![0.0, 0.8, 0.4, 0.8]).unwrap();
        let p = static_potential(PotentialSource::Tubularity(&zeta), 5.0);
        assert_eq!(p.values()[1], 1.0);
        assert_abs_diff_eq!(p.values()[0], 4f64.exp(), epsilon = 1e-12);
        assert!(p.values().iter().all(|v| *v >= 1.0));
    }

    #[test]
    fn directional_profile_starts_after_g() {
        let f = skewed_metric(1.0);
        let prof = directional_profile(&f, Pixel::new(1, 1), 72).unwrap();
        assert_eq!(prof.len(), 72);
        // j = 72 is a full turn: back along g
        assert_abs_diff_eq!(prof[71].cost, 3.0, epsilon = 1e-9);
        // j = 36 points against g
        assert_abs_diff_eq!(prof[35].cost, 8.0, epsilon = 1e-9);
        assert_abs_diff_eq!(prof[17].cost, 1.0, epsilon = 1e-9);
    }
}
