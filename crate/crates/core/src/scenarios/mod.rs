//! The cell-mechanics simulations: tethered points, protrusion-driven
//! motility through an elastic ECM, and membrane blebbing.
//!
//! All three advance positions with forward Euler. Fluid-borne points move
//! with the velocity of the configured correction method; the blebbing
//! cortex follows its own force balance.

pub mod blebbing;
pub mod motility;
pub mod tethered;

use alloc::vec::Vec;

use crate::constraint::{total_velocity, CircleSolver, CorrectionConfig, CorrectionMethod};
use crate::error::{Error, Result};
use crate::kernels::{superpose_pressure, FluidParams, PointForceSet};
use crate::vec2::Vec2;

pub use blebbing::{run_blebbing, BlebbingOutput, BlebbingParams, PressureProfile};
pub use motility::{
    protrusion_forces, run_motility, CycleEvent, CycleEventKind, CyclePhase, MotilityOutcome, MotilityOutput,
    MotilityParams, RigidMode,
};
pub use tethered::{run_tethered, TetheredParams};

/// Time-stepping controls shared by all scenarios.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct Stepping {
    /// Base time step (s).
    pub dt: f64,
    /// Reduced time step used right after a binding event (s).
    pub dt_fine: f64,
    /// Length of the reduced-step window (s).
    pub fine_window: f64,
    /// Final time (s).
    pub t_end: f64,
    /// Stop once the largest point speed falls below this (μm/s).
    pub stop_speed: Option<f64>,
    /// Record trace rows and snapshots every this many steps.
    pub output_every: usize,
}

impl Default for Stepping {
    fn default() -> Self {
        Stepping {
            dt: 1e-3,
            dt_fine: 1e-3,
            fine_window: 0.0,
            t_end: 1.0,
            stop_speed: None,
            output_every: 1,
        }
    }
}

impl Stepping {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("dt", self.dt), ("dt_fine", self.dt_fine)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: "time step must be positive and finite",
                });
            }
        }
        if !(self.fine_window >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "fine_window",
                reason: "must be non-negative",
            });
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "t_end",
                reason: "must be non-negative and finite",
            });
        }
        if let Some(s) = self.stop_speed {
            if !(s >= 0.0) {
                return Err(Error::InvalidParameter {
                    name: "stop_speed",
                    reason: "must be non-negative",
                });
            }
        }
        if self.output_every == 0 {
            return Err(Error::InvalidParameter {
                name: "output_every",
                reason: "must be at least 1",
            });
        }
        Ok(())
    }

    /// Number of base steps needed to reach `t_end`.
    pub fn base_steps(&self) -> usize {
        libm::ceil(self.t_end / self.dt - 1e-9) as usize
    }
}

/// Settings common to every run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub correction: CorrectionConfig,
    pub stepping: Stepping,
    pub seed: u64,
}

/// `dt_fine` inside the window that opens at `bound_at`, `dt` otherwise.
pub fn adaptive_dt(t: f64, bound_at: Option<f64>, stepping: &Stepping) -> f64 {
    match bound_at {
        Some(t_b) if t >= t_b && t - t_b < stepping.fine_window => stepping.dt_fine,
        _ => stepping.dt,
    }
}

/// Fluid solve for one scenario: kernel parameters, correction method and,
/// for the explicit circle, the pre-factored circle system.
#[derive(Debug, Clone)]
pub struct Flow {
    pub params: FluidParams,
    pub correction: CorrectionConfig,
    circle: Option<CircleSolver>,
}

impl Flow {
    pub fn new(params: FluidParams, correction: CorrectionConfig) -> Result<Self> {
        params.validate()?;
        correction.validate()?;
        let circle = match correction.method {
            CorrectionMethod::ExplicitCircle => {
                Some(CircleSolver::new(&params, correction.radius, correction.circle_points)?)
            }
            _ => None,
        };
        Ok(Flow {
            params,
            correction,
            circle,
        })
    }

    /// Velocity at `evals`; any non-finite component is an error.
    pub fn velocity(&self, evals: &[Vec2], sources: &PointForceSet) -> Result<Vec<Vec2>> {
        let u = match &self.circle {
            Some(solver) => solver.velocity(evals, sources, &self.params)?,
            None => total_velocity(evals, sources, &self.params, &self.correction)?,
        };
        if let Some(index) = u.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteVelocity {
                index,
                method: self.correction.method.name(),
            });
        }
        Ok(u)
    }

    /// Pressure from the physical sources. The correction adds a uniform
    /// velocity only, so it never changes the pressure.
    pub fn pressure(&self, evals: &[Vec2], sources: &PointForceSet) -> Vec<f64> {
        superpose_pressure(evals, sources, self.params.eps)
    }
}

pub fn euler_advance(points: &mut [Vec2], velocity: &[Vec2], dt: f64) {
    for (x, u) in points.iter_mut().zip(velocity) {
        *x += *u * dt;
    }
}

pub fn max_speed(velocity: &[Vec2]) -> f64 {
    velocity.iter().fold(0.0, |m: f64, u| m.max(u.norm()))
}

/// Scalar observables, one row per output step; column 0 is time.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Trace {
    pub fn new(columns: &[&'static str]) -> Self {
        Trace {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.columns.iter().position(|n| *n == name)?;
        Some(self.rows.iter().map(|r| r[c]).collect())
    }

    pub fn last(&self, name: &str) -> Option<f64> {
        let c = self.columns.iter().position(|n| *n == name)?;
        self.rows.last().map(|r| r[c])
    }
}

/// Positions of one structure at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub structure: &'static str,
    pub nodes: Vec<Vec2>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimeSeries {
    pub trace: Trace,
    pub snapshots: Vec<Snapshot>,
}

impl Default for Trace {
    fn default() -> Self {
        Trace::new(&[])
    }
}

impl TimeSeries {
    pub fn snapshots_of<'a>(&'a self, structure: &'a str) -> impl Iterator<Item = &'a Snapshot> + 'a {
        self.snapshots.iter().filter(move |s| s.structure == structure)
    }

    pub fn structures(&self) -> Vec<&'static str> {
        let mut names: Vec<&'static str> = Vec::new();
        for s in &self.snapshots {
            if !names.contains(&s.structure) {
                names.push(s.structure);
            }
        }
        names
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ScenarioKind {
    Tethered,
    Motility,
    Blebbing,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Tethered => "tethered",
            ScenarioKind::Motility => "motility",
            ScenarioKind::Blebbing => "blebbing",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    Tethered(TetheredParams),
    Motility(MotilityParams),
    Blebbing(BlebbingParams),
}

/// A complete, validated description of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub model: ModelParams,
    pub run: RunSettings,
}

impl ScenarioConfig {
    /// Scenario defaults, including the scenario's time stepping.
    pub fn defaults(kind: ScenarioKind) -> Self {
        let (model, stepping) = match kind {
            ScenarioKind::Tethered => (ModelParams::Tethered(TetheredParams::default()), tethered::default_stepping()),
            ScenarioKind::Motility => (ModelParams::Motility(MotilityParams::default()), motility::default_stepping()),
            ScenarioKind::Blebbing => (ModelParams::Blebbing(BlebbingParams::default()), blebbing::default_stepping()),
        };
        ScenarioConfig {
            model,
            run: RunSettings {
                correction: CorrectionConfig::default(),
                stepping,
                seed: match kind {
                    ScenarioKind::Motility => motility::DEFAULT_SEED,
                    _ => 1,
                },
            },
        }
    }

    pub fn kind(&self) -> ScenarioKind {
        match self.model {
            ModelParams::Tethered(_) => ScenarioKind::Tethered,
            ModelParams::Motility(_) => ScenarioKind::Motility,
            ModelParams::Blebbing(_) => ScenarioKind::Blebbing,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.run.correction.validate()?;
        self.run.stepping.validate()?;
        match &self.model {
            ModelParams::Tethered(p) => p.validate(),
            ModelParams::Motility(p) => p.validate(),
            ModelParams::Blebbing(p) => p.validate(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioOutput {
    Tethered(TimeSeries),
    Motility(MotilityOutput),
    Blebbing(BlebbingOutput),
}

impl ScenarioOutput {
    pub fn series(&self) -> &TimeSeries {
        match self {
            ScenarioOutput::Tethered(s) => s,
            ScenarioOutput::Motility(m) => &m.series,
            ScenarioOutput::Blebbing(b) => &b.series,
        }
    }
}

pub fn run(config: &ScenarioConfig) -> Result<ScenarioOutput> {
    config.validate()?;
    Ok(match &config.model {
        ModelParams::Tethered(p) => ScenarioOutput::Tethered(run_tethered(p, &config.run)?),
        ModelParams::Motility(p) => ScenarioOutput::Motility(run_motility(p, &config.run)?),
        ModelParams::Blebbing(p) => ScenarioOutput::Blebbing(run_blebbing(p, &config.run)?),
    })
}

pub(crate) fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: "must be positive and finite",
        })
    }
}

pub(crate) fn check_non_negative(name: &'static str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: "must be non-negative and finite",
        })
    }
}
