//! A ring of points tethered to two fixed rings on either side.
//!
//! The tether force on the initial configuration is the same at every
//! point, so the net force is nonzero and the correction method decides
//! whether the ring relaxes to the midpoint, drifts, or freezes.

use alloc::vec::Vec;

use super::{check_non_negative, check_positive, euler_advance, max_speed, Flow, RunSettings, Snapshot, Stepping, TimeSeries, Trace};
use crate::error::{Error, Result};
use crate::kernels::{FluidParams, PointForceSet};
use crate::structures::{circle_nodes, tether_force};
use crate::vec2::{centroid, Vec2};

pub const TRACE_COLUMNS: [&str; 5] = ["t", "x_ymax", "x_center", "y_center", "max_speed"];

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TetheredParams {
    pub n_points: usize,
    /// Ring radius (μm).
    pub radius: f64,
    pub center: Vec2,
    pub right_center: Vec2,
    pub left_center: Vec2,
    /// Tether stiffness (pN/μm²).
    pub k_teth: f64,
    /// Viscosity (Pa·s).
    pub mu: f64,
    /// Blob size; the ring spacing `2 pi r / N` when unset.
    pub eps: Option<f64>,
}

impl Default for TetheredParams {
    fn default() -> Self {
        TetheredParams {
            n_points: 32,
            radius: 19.2,
            center: Vec2::new(10.0, 0.0),
            right_center: Vec2::new(80.0, 0.0),
            left_center: Vec2::new(-80.0, 0.0),
            k_teth: 1.0,
            mu: 1.0,
            eps: None,
        }
    }
}

pub fn default_stepping() -> Stepping {
    Stepping {
        dt: 1e-3,
        dt_fine: 1e-3,
        fine_window: 0.0,
        t_end: 0.5,
        stop_speed: None,
        output_every: 1,
    }
}

impl TetheredParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_points < 3 {
            return Err(Error::InvalidParameter {
                name: "n_points",
                reason: "need at least 3 points",
            });
        }
        check_positive("radius", self.radius)?;
        check_non_negative("k_teth", self.k_teth)?;
        check_positive("mu", self.mu)?;
        if let Some(eps) = self.eps {
            check_positive("eps", eps)?;
        }
        Ok(())
    }

    pub fn eps(&self) -> f64 {
        self.eps
            .unwrap_or(2.0 * core::f64::consts::PI * self.radius / self.n_points as f64)
    }

    pub fn fluid(&self) -> Result<FluidParams> {
        FluidParams::new(self.mu, self.eps())
    }

    /// Ring points and the right and left anchors, paired by index.
    pub fn initial_geometry(&self) -> (Vec<Vec2>, Vec<Vec2>, Vec<Vec2>) {
        let offsets = circle_nodes(Vec2::ZERO, self.radius, self.n_points);
        let place = |c: Vec2| offsets.iter().map(|o| c + *o).collect::<Vec<_>>();
        (place(self.center), place(self.right_center), place(self.left_center))
    }

    /// Points and tether forces of the initial configuration.
    pub fn initial_sources(&self) -> Result<PointForceSet> {
        let (x, right, left) = self.initial_geometry();
        let f = tether_force(&x, &right, &left, self.k_teth)?;
        PointForceSet::new(x, f)
    }
}

/// Index of the topmost point; the lowest index wins ties.
fn topmost(points: &[Vec2]) -> usize {
    let mut best = 0;
    for (i, p) in points.iter().enumerate() {
        if p.y > points[best].y {
            best = i;
        }
    }
    best
}

/// Runs the tethered ring. `x_ymax` follows the point that is topmost at
/// t = 0.
pub fn run_tethered(params: &TetheredParams, run: &RunSettings) -> Result<TimeSeries> {
    params.validate()?;
    run.stepping.validate()?;
    let flow = Flow::new(params.fluid()?, run.correction)?;
    let stepping = &run.stepping;
    let (mut x, right, left) = params.initial_geometry();
    let tracked = topmost(&x);
    let n_steps = stepping.base_steps();

    let mut series = TimeSeries {
        trace: Trace::new(&TRACE_COLUMNS),
        snapshots: Vec::new(),
    };
    let mut step = 0usize;
    loop {
        let t = step as f64 * stepping.dt;
        let f = tether_force(&x, &right, &left, params.k_teth)?;
        let sources = PointForceSet::new(x.clone(), f)?;
        let u = flow.velocity(&x, &sources)?;
        let speed = max_speed(&u);
        let stop = step >= n_steps || stepping.stop_speed.is_some_and(|s| speed < s);
        if step.is_multiple_of(stepping.output_every) || stop {
            let c = centroid(&x);
            series.trace.push(alloc::vec![t, x[tracked].x, c.x, c.y, speed]);
            series.snapshots.push(Snapshot {
                t,
                structure: "points",
                nodes: x.clone(),
            });
        }
        if stop {
            break;
        }
        euler_advance(&mut x, &u, stepping.dt);
        step += 1;
    }
    log::info!(
        "tethered run ({}) finished at t={} after {step} steps",
        run.correction.method.name(),
        step as f64 * stepping.dt
    );
    Ok(series)
}
