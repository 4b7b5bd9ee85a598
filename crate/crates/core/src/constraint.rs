//! Treatments of Stokes' paradox for forces with a nonzero sum.
//!
//! * [`CorrectionMethod::MeanZero`] adds the constant velocity that makes the
//!   mean velocity on a circle of radius `R` vanish. It costs one pass over
//!   the forces on top of the free-space superposition.
//! * [`CorrectionMethod::ExplicitCircle`] discretizes the circle with `M`
//!   regularized Stokeslets and solves a dense `2M × 2M` system for the forces
//!   that make the velocity vanish at every circle point.
//! * [`CorrectionMethod::MeanForceSubtraction`] removes the mean force from
//!   every source so that the forces sum to zero.
//! * [`CorrectionMethod::None`] is the plain free-space sum.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::kernels::{singular_velocity, DirectSum, FluidParams, KernelSum, PointForceSet};
use crate::linalg::{inverse_norm1_estimate, lu_factor, lu_solve, LuFactors};
use crate::vec2::Vec2;

/// Condition estimates above this are treated as numerically singular.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum CorrectionMethod {
    #[cfg_attr(feature = "serde", serde(rename = "meanzero"))]
    MeanZero,
    #[cfg_attr(feature = "serde", serde(rename = "circle"))]
    ExplicitCircle,
    #[cfg_attr(feature = "serde", serde(rename = "meansub"))]
    MeanForceSubtraction,
    None,
}

impl CorrectionMethod {
    pub const ALL: [CorrectionMethod; 4] = [
        CorrectionMethod::MeanZero,
        CorrectionMethod::ExplicitCircle,
        CorrectionMethod::MeanForceSubtraction,
        CorrectionMethod::None,
    ];

    /// Short name used on the command line and in file names.
    pub fn name(self) -> &'static str {
        match self {
            CorrectionMethod::MeanZero => "meanzero",
            CorrectionMethod::ExplicitCircle => "circle",
            CorrectionMethod::MeanForceSubtraction => "meansub",
            CorrectionMethod::None => "none",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        CorrectionMethod::ALL.into_iter().find(|m| m.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct CorrectionConfig {
    pub method: CorrectionMethod,
    /// Radius of the large circle (μm).
    pub radius: f64,
    /// Number of circle points for the explicit treatment.
    pub circle_points: usize,
}

impl Default for CorrectionConfig {
    fn default() -> Self {
        CorrectionConfig {
            method: CorrectionMethod::MeanZero,
            radius: 1e3,
            circle_points: 100,
        }
    }
}

impl CorrectionConfig {
    pub fn new(method: CorrectionMethod, radius: f64) -> Self {
        CorrectionConfig {
            method,
            radius,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "radius",
                reason: "large-circle radius must be positive and finite",
            });
        }
        if self.method == CorrectionMethod::ExplicitCircle && self.circle_points < 3 {
            return Err(Error::InvalidParameter {
                name: "circle_points",
                reason: "the explicit circle needs at least 3 points",
            });
        }
        Ok(())
    }
}

/// Mean over the radius-`R` circle of the singular velocity due to `f0`
/// at the origin: `f0 / (4 pi mu) (1/2 - ln R)`.
pub fn mean_circle_velocity(f0: Vec2, mu: f64, radius: f64) -> Vec2 {
    f0 * ((0.5 - libm::log(radius)) / (4.0 * PI * mu))
}

/// The constant velocity `u^R = -Σ f_k / (4 pi mu) (1/2 - ln R)`.
pub fn correction_velocity(sources: &PointForceSet, mu: f64, radius: f64) -> Vec2 {
    correction_velocity_with(&DirectSum, sources, mu, radius)
}

pub fn correction_velocity_with<B: KernelSum>(
    backend: &B,
    sources: &PointForceSet,
    mu: f64,
    radius: f64,
) -> Vec2 {
    backend.note_force_ops(sources.len());
    -mean_circle_velocity(sources.net_force(), mu, radius)
}

/// Forces with their arithmetic mean removed.
pub fn subtract_mean_force(sources: &PointForceSet) -> PointForceSet {
    if sources.is_empty() {
        return sources.clone();
    }
    let mean = sources.net_force() / sources.len() as f64;
    PointForceSet {
        positions: sources.positions.clone(),
        forces: sources.forces.iter().map(|&f| f - mean).collect(),
    }
}

/// Velocity at `evals` due to `sources` under the configured treatment.
pub fn total_velocity(
    evals: &[Vec2],
    sources: &PointForceSet,
    params: &FluidParams,
    config: &CorrectionConfig,
) -> Result<Vec<Vec2>> {
    total_velocity_with(&DirectSum, evals, sources, params, config)
}

pub fn total_velocity_with<B: KernelSum>(
    backend: &B,
    evals: &[Vec2],
    sources: &PointForceSet,
    params: &FluidParams,
    config: &CorrectionConfig,
) -> Result<Vec<Vec2>> {
    config.validate()?;
    if sources.is_force_free() {
        return Ok(vec![Vec2::ZERO; evals.len()]);
    }
    match config.method {
        CorrectionMethod::None => Ok(backend.velocity(evals, sources, params)),
        CorrectionMethod::MeanZero => {
            let u_r = correction_velocity_with(backend, sources, params.mu, config.radius);
            let mut u = backend.velocity(evals, sources, params);
            for v in &mut u {
                *v += u_r;
            }
            Ok(u)
        }
        CorrectionMethod::MeanForceSubtraction => {
            let zeroed = subtract_mean_force(sources);
            Ok(backend.velocity(evals, &zeroed, params))
        }
        CorrectionMethod::ExplicitCircle => {
            let solver = CircleSolver::with_backend(backend, params, config.radius, config.circle_points)?;
            solver.velocity_with(backend, evals, sources, params)
        }
    }
}

/// Uniform points on the radius-`R` circle, starting at angle zero.
pub fn circle_points(radius: f64, m: usize) -> Vec<Vec2> {
    (0..m)
        .map(|j| Vec2::from_angle(2.0 * PI * j as f64 / m as f64) * radius)
        .collect()
}

/// Pre-factored mobility system of the discretized large circle.
///
/// The circle geometry does not depend on the sources, so one factorization
/// serves every time step.
#[derive(Debug, Clone)]
pub struct CircleSolver {
    points: Vec<Vec2>,
    circle_params: FluidParams,
    factors: LuFactors,
    condition: f64,
}

impl CircleSolver {
    /// Regularization on the circle equals the circle point spacing `2 pi R / M`.
    pub fn new(params: &FluidParams, radius: f64, m: usize) -> Result<Self> {
        Self::with_backend(&DirectSum, params, radius, m)
    }

    pub fn with_backend<B: KernelSum>(
        backend: &B,
        params: &FluidParams,
        radius: f64,
        m: usize,
    ) -> Result<Self> {
        CorrectionConfig {
            method: CorrectionMethod::ExplicitCircle,
            radius,
            circle_points: m,
        }
        .validate()?;
        let points = circle_points(radius, m);
        let circle_params = FluidParams::new(params.mu, 2.0 * PI * radius / m as f64)?;
        let matrix = backend.mobility(&points, &points, &circle_params);
        let factors = lu_factor(&matrix)?;
        let condition = matrix.norm1() * inverse_norm1_estimate(&factors)?;
        log::debug!("circle mobility R={radius:e} M={m}: 1-norm condition ~ {condition:e}");
        if !(condition < MAX_CONDITION) {
            return Err(Error::IllConditioned { condition });
        }
        Ok(CircleSolver {
            points,
            circle_params,
            factors,
            condition,
        })
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// Forces on the circle points that cancel the velocity `sources`
    /// induce there.
    pub fn circle_forces<B: KernelSum>(
        &self,
        backend: &B,
        sources: &PointForceSet,
        params: &FluidParams,
    ) -> Result<Vec<Vec2>> {
        let tol = 1e-12 * self.points[0].norm();
        for (j, &c) in self.points.iter().enumerate() {
            if let Some(k) = sources.positions.iter().position(|&x| x.distance(c) <= tol) {
                return Err(Error::CircleOverlap {
                    circle_index: j,
                    source_index: k,
                });
            }
        }
        let u_circle = backend.velocity(&self.points, sources, params);
        let rhs: Vec<f64> = u_circle.iter().flat_map(|u| [-u.x, -u.y]).collect();
        let g = lu_solve(&self.factors, &rhs)?;
        Ok(g.chunks_exact(2).map(|c| Vec2::new(c[0], c[1])).collect())
    }

    pub fn velocity_with<B: KernelSum>(
        &self,
        backend: &B,
        evals: &[Vec2],
        sources: &PointForceSet,
        params: &FluidParams,
    ) -> Result<Vec<Vec2>> {
        if sources.is_force_free() {
            return Ok(vec![Vec2::ZERO; evals.len()]);
        }
        let g = self.circle_forces(backend, sources, params)?;
        let circle = PointForceSet {
            positions: self.points.clone(),
            forces: g,
        };
        let mut u = backend.velocity(evals, sources, params);
        let u_c = backend.velocity(evals, &circle, &self.circle_params);
        for (a, b) in u.iter_mut().zip(u_c) {
            *a += b;
        }
        Ok(u)
    }

    pub fn velocity(&self, evals: &[Vec2], sources: &PointForceSet, params: &FluidParams) -> Result<Vec<Vec2>> {
        self.velocity_with(&DirectSum, evals, sources, params)
    }

    /// Velocity at the circle points after adding the solved circle forces.
    pub fn circle_residual(&self, sources: &PointForceSet, params: &FluidParams) -> Result<Vec<Vec2>> {
        let g = self.circle_forces(&DirectSum, sources, params)?;
        let circle = PointForceSet {
            positions: self.points.clone(),
            forces: g,
        };
        let mut u = DirectSum.velocity(&self.points, sources, params);
        let u_c = DirectSum.velocity(&self.points, &circle, &self.circle_params);
        for (a, b) in u.iter_mut().zip(u_c) {
            *a += b;
        }
        Ok(u)
    }
}

/// Velocity at `evals` with zero velocity enforced at `m` points of the
/// radius-`R` circle.
pub fn circle_bc_velocity(
    evals: &[Vec2],
    sources: &PointForceSet,
    params: &FluidParams,
    radius: f64,
    m: usize,
) -> Result<Vec<Vec2>> {
    if sources.is_force_free() {
        return Ok(vec![Vec2::ZERO; evals.len()]);
    }
    CircleSolver::new(params, radius, m)?.velocity(evals, sources, params)
}

/// Maximum relative deviation of the force-aligned singular velocity over
/// `n` uniform points of the radius-`R` circle, for `f0` at the origin.
pub fn sigma_u(radius: f64, n: usize, f0: Vec2, mu: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: "at least two circle points are required",
        });
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter {
            name: "radius",
            reason: "must be positive",
        });
    }
    let fmag = f0.norm();
    if !(fmag > 0.0) {
        return Err(Error::InvalidParameter {
            name: "f0",
            reason: "force must be nonzero",
        });
    }
    // Work in the frame where f0 points along +x.
    let alpha = libm::atan2(f0.y, f0.x);
    let f_rot = Vec2::new(fmag, 0.0);
    let ux = circle_points(radius, n)
        .into_iter()
        .map(|x| singular_velocity(x.rotated(-alpha), Vec2::ZERO, f_rot, mu).map(|u| u.x))
        .collect::<Result<Vec<f64>>>()?;
    let mean = ux.iter().sum::<f64>() / n as f64;
    let scale = fmag / (4.0 * PI * mu) * (libm::fabs(libm::log(radius)) + 1.0);
    if libm::fabs(mean) <= 1e3 * f64::EPSILON * scale {
        return Err(Error::DegenerateMean { mean });
    }
    Ok(ux.iter().fold(0.0, |m: f64, &u| m.max(libm::fabs((u - mean) / mean))))
}

/// Inputs to the admissible-radius computation, in SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RadiusBoundsInput {
    /// Fluid density (kg/m³).
    pub rho: f64,
    /// Characteristic velocity (m/s).
    pub v: f64,
    /// Viscosity (Pa·s).
    pub mu: f64,
    /// Largest acceptable Reynolds number.
    pub re_max: f64,
    /// Largest acceptable `sigma_u`, as a fraction.
    pub sigma_threshold: f64,
}

impl RadiusBoundsInput {
    /// Water-like fluid moving at 1 μm/s.
    pub fn water() -> Self {
        RadiusBoundsInput {
            rho: 1e3,
            v: 1e-6,
            mu: 1e-3,
            re_max: 0.1,
            sigma_threshold: 0.10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rho", self.rho),
            ("v", self.v),
            ("mu", self.mu),
            ("re_max", self.re_max),
            ("sigma_threshold", self.sigma_threshold),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: "must be positive and finite",
                });
            }
        }
        if self.re_max >= 1.0 {
            return Err(Error::InvalidParameter {
                name: "re_max",
                reason: "Stokes flow needs a Reynolds threshold below 1",
            });
        }
        Ok(())
    }
}

/// Decades searched for the lower radius bound, as exponents of ten.
pub const RADIUS_SWEEP_DECADES: core::ops::RangeInclusive<i32> = 1..=8;

/// `(R_min, R_max)` in μm. `R_max` is the length at which the Reynolds number
/// reaches `re_max`; `R_min` is the smallest decade with `sigma_u` at or
/// below the threshold.
pub fn radius_bounds(input: &RadiusBoundsInput, n: usize) -> Result<(f64, f64)> {
    input.validate()?;
    let r_max_m = input.re_max * input.mu / (input.rho * input.v);
    let r_max = r_max_m * 1e6;
    let mut r_min = f64::INFINITY;
    for k in RADIUS_SWEEP_DECADES {
        let r = libm::pow(10.0, k as f64);
        if sigma_u(r, n, Vec2::new(1.0, 0.0), input.mu)? <= input.sigma_threshold {
            r_min = r;
            break;
        }
    }
    if r_min > r_max {
        return Err(Error::InfeasibleBounds { r_min, r_max });
    }
    Ok((r_min, r_max))
}
