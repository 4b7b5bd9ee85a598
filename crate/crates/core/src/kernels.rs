//! Singular and regularized 2D Stokeslets.
//!
//! The regularized kernels correspond to the blob
//! `phi_eps(x) = 3 eps^3 / (2 pi (|x|^2 + eps^2)^(5/2))` and are finite
//! everywhere, including at the source point. All quantities use
//! micrometres, seconds, piconewtons and Pa·s without rescaling.

use alloc::vec::Vec;
use core::cell::Cell;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::vec2::Vec2;

/// Fluid viscosity and regularization radius.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FluidParams {
    /// Dynamic viscosity (Pa·s = pN·s/μm²).
    pub mu: f64,
    /// Regularization radius (μm).
    pub eps: f64,
}

impl FluidParams {
    pub fn new(mu: f64, eps: f64) -> Result<Self> {
        let p = FluidParams { mu, eps };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "mu",
                reason: "viscosity must be positive and finite",
            });
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "eps",
                reason: "regularization radius must be positive and finite",
            });
        }
        Ok(())
    }
}

/// Source points and the (2D, per unit length) forces applied at them.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointForceSet {
    pub positions: Vec<Vec2>,
    pub forces: Vec<Vec2>,
}

impl PointForceSet {
    pub fn new(positions: Vec<Vec2>, forces: Vec<Vec2>) -> Result<Self> {
        if positions.len() != forces.len() {
            return Err(Error::LengthMismatch {
                what: "point force set forces",
                expected: positions.len(),
                found: forces.len(),
            });
        }
        Ok(PointForceSet { positions, forces })
    }

    pub fn empty() -> Self {
        PointForceSet::default()
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn push(&mut self, position: Vec2, force: Vec2) {
        self.positions.push(position);
        self.forces.push(force);
    }

    pub fn extend(&mut self, positions: &[Vec2], forces: &[Vec2]) {
        debug_assert_eq!(positions.len(), forces.len());
        self.positions.extend_from_slice(positions);
        self.forces.extend_from_slice(forces);
    }

    /// Sum of all forces, in source order.
    pub fn net_force(&self) -> Vec2 {
        self.forces.iter().sum()
    }

    pub fn is_force_free(&self) -> bool {
        self.forces.iter().all(|f| *f == Vec2::ZERO)
    }
}

/// The regularizing blob `3 eps^3 / (2 pi (|r|^2 + eps^2)^(5/2))`.
pub fn blob_phi(r: Vec2, eps: f64) -> f64 {
    let s2 = r.norm_squared() + eps * eps;
    3.0 * eps * eps * eps / (2.0 * PI * s2 * s2 * libm::sqrt(s2))
}

/// Free-space Stokeslet velocity at `x` due to `f0` applied at `x0`.
pub fn singular_velocity(x: Vec2, x0: Vec2, f0: Vec2, mu: f64) -> Result<Vec2> {
    let d = x - x0;
    let r2 = d.norm_squared();
    if r2 == 0.0 {
        return Err(Error::Singularity { at: x });
    }
    let c = 1.0 / (4.0 * PI * mu);
    let log_r = 0.5 * libm::log(r2);
    Ok(f0 * (-c * log_r) + d * (c * f0.dot(d) / r2))
}

/// Free-space Stokeslet pressure at `x` due to `f0` applied at `x0`.
pub fn singular_pressure(x: Vec2, x0: Vec2, f0: Vec2) -> Result<f64> {
    let d = x - x0;
    let r2 = d.norm_squared();
    if r2 == 0.0 {
        return Err(Error::Singularity { at: x });
    }
    Ok(f0.dot(d) / (2.0 * PI * r2))
}

/// Scalar coefficients `(a, b)` of the regularized Stokeslet tensor for a
/// displacement `d`, so that `u = (-a f + b (f·d) d) / (4 pi mu)`.
#[inline]
fn reg_coefficients(d: Vec2, eps: f64) -> (f64, f64) {
    let r2 = d.norm_squared();
    let s = libm::sqrt(r2 + eps * eps);
    let s_eps = s + eps;
    let s_2eps = s + 2.0 * eps;
    let a = libm::log(s_eps) - eps * s_2eps / (s_eps * s);
    let b = s_2eps / (s_eps * s_eps * s);
    (a, b)
}

/// Regularized Stokeslet velocity at `x` due to `f0` spread around `x0`.
pub fn reg_velocity(x: Vec2, x0: Vec2, f0: Vec2, params: &FluidParams) -> Vec2 {
    let d = x - x0;
    let (a, b) = reg_coefficients(d, params.eps);
    let c = 1.0 / (4.0 * PI * params.mu);
    f0 * (-a * c) + d * (b * c * f0.dot(d))
}

/// Regularized pressure at `x` due to `f0` spread around `x0`.
pub fn reg_pressure(x: Vec2, x0: Vec2, f0: Vec2, eps: f64) -> f64 {
    let d = x - x0;
    let r2 = d.norm_squared();
    let e2 = eps * eps;
    let s = libm::sqrt(r2 + e2);
    let h = (r2 + 2.0 * e2 + eps * s) / ((s + eps) * s * s * s);
    f0.dot(d) * h / (2.0 * PI)
}

/// The 2×2 regularized mobility block mapping a force at `x0` to the
/// velocity at `x`, row-major.
pub fn reg_mobility_block(x: Vec2, x0: Vec2, params: &FluidParams) -> [[f64; 2]; 2] {
    let d = x - x0;
    let (a, b) = reg_coefficients(d, params.eps);
    let c = 1.0 / (4.0 * PI * params.mu);
    [
        [c * (-a + b * d.x * d.x), c * b * d.x * d.y],
        [c * b * d.x * d.y, c * (-a + b * d.y * d.y)],
    ]
}

/// Pairwise summation backend. Implementations must reduce over sources in
/// ascending index order so that results are reproducible bit for bit.
pub trait KernelSum {
    fn velocity(&self, evals: &[Vec2], sources: &PointForceSet, params: &FluidParams) -> Vec<Vec2>;

    fn pressure(&self, evals: &[Vec2], sources: &PointForceSet, eps: f64) -> Vec<f64>;

    /// Dense `2T × 2S` mobility matrix from forces at `sources` to
    /// velocities at `targets`.
    fn mobility(&self, targets: &[Vec2], sources: &[Vec2], params: &FluidParams) -> DenseMatrix;

    /// Hook for per-force bookkeeping (used by the correction velocity).
    fn note_force_ops(&self, _n: usize) {}
}

/// Direct O(N_eval · N_src) double loop.
#[derive(Debug, Clone, Copy, Default)]
pub struct DirectSum;

impl KernelSum for DirectSum {
    fn velocity(&self, evals: &[Vec2], sources: &PointForceSet, params: &FluidParams) -> Vec<Vec2> {
        evals
            .iter()
            .map(|&x| {
                let mut u = Vec2::ZERO;
                for (&x0, &f0) in sources.positions.iter().zip(&sources.forces) {
                    u += reg_velocity(x, x0, f0, params);
                }
                u
            })
            .collect()
    }

    fn pressure(&self, evals: &[Vec2], sources: &PointForceSet, eps: f64) -> Vec<f64> {
        evals
            .iter()
            .map(|&x| {
                let mut p = 0.0;
                for (&x0, &f0) in sources.positions.iter().zip(&sources.forces) {
                    p += reg_pressure(x, x0, f0, eps);
                }
                p
            })
            .collect()
    }

    fn mobility(&self, targets: &[Vec2], sources: &[Vec2], params: &FluidParams) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(2 * targets.len(), 2 * sources.len());
        for (i, &x) in targets.iter().enumerate() {
            for (k, &x0) in sources.iter().enumerate() {
                let blk = reg_mobility_block(x, x0, params);
                for (r, row) in blk.iter().enumerate() {
                    for (c, &v) in row.iter().enumerate() {
                        m.set(2 * i + r, 2 * k + c, v);
                    }
                }
            }
        }
        m
    }
}

/// Wraps another backend and counts pairwise kernel evaluations and force
/// operations.
#[derive(Debug, Default)]
pub struct CountingSum<B = DirectSum> {
    inner: B,
    kernel_evals: Cell<u64>,
    force_ops: Cell<u64>,
}

impl<B: KernelSum> CountingSum<B> {
    pub fn new(inner: B) -> Self {
        CountingSum {
            inner,
            kernel_evals: Cell::new(0),
            force_ops: Cell::new(0),
        }
    }

    pub fn kernel_evals(&self) -> u64 {
        self.kernel_evals.get()
    }

    pub fn force_ops(&self) -> u64 {
        self.force_ops.get()
    }

    pub fn reset(&self) {
        self.kernel_evals.set(0);
        self.force_ops.set(0);
    }

    fn bump(&self, n: usize) {
        self.kernel_evals.set(self.kernel_evals.get() + n as u64);
    }
}

impl<B: KernelSum> KernelSum for CountingSum<B> {
    fn velocity(&self, evals: &[Vec2], sources: &PointForceSet, params: &FluidParams) -> Vec<Vec2> {
        self.bump(evals.len() * sources.len());
        self.inner.velocity(evals, sources, params)
    }

    fn pressure(&self, evals: &[Vec2], sources: &PointForceSet, eps: f64) -> Vec<f64> {
        self.bump(evals.len() * sources.len());
        self.inner.pressure(evals, sources, eps)
    }

    fn mobility(&self, targets: &[Vec2], sources: &[Vec2], params: &FluidParams) -> DenseMatrix {
        self.bump(targets.len() * sources.len());
        self.inner.mobility(targets, sources, params)
    }

    fn note_force_ops(&self, n: usize) {
        self.force_ops.set(self.force_ops.get() + n as u64);
        self.inner.note_force_ops(n);
    }
}

/// Regularized velocity at every evaluation point, summed over all sources.
pub fn superpose_velocity(evals: &[Vec2], sources: &PointForceSet, params: &FluidParams) -> Vec<Vec2> {
    DirectSum.velocity(evals, sources, params)
}

/// Regularized pressure at every evaluation point, summed over all sources.
pub fn superpose_pressure(evals: &[Vec2], sources: &PointForceSet, eps: f64) -> Vec<f64> {
    DirectSum.pressure(evals, sources, eps)
}
