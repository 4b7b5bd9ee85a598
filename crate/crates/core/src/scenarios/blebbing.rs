//! Bleb expansion: a membrane attached to an elastic cortex by adhesion
//! springs. The membrane moves with the fluid; the cortex follows a
//! viscous force balance. Breaking the top links lets the pressurized
//! interior push the membrane out.

use alloc::vec::Vec;

use super::{check_non_negative, check_positive, euler_advance, max_speed, Flow, RunSettings, Snapshot, Stepping, TimeSeries, Trace};
use crate::error::{Error, Result};
use crate::kernels::{FluidParams, PointForceSet};
use crate::structures::{
    adhesion_force_densities, circle_nodes, fiber_elastic_force, fiber_elastic_force_density, AdhesionState,
    ClosedFiber,
};
use crate::vec2::{centroid, Vec2};

pub const TRACE_COLUMNS: [&str; 6] = ["t", "p_center", "cortex_radius", "membrane_top", "intact_links", "max_speed"];

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct BlebbingParams {
    /// Nodes on each of membrane and cortex.
    pub n: usize,
    pub r_mem: f64,
    pub r_cortex: f64,
    pub gamma_m: f64,
    pub k_m: f64,
    pub gamma_c: f64,
    pub k_c: f64,
    /// Adhesion stiffness (pN/μm³).
    pub k_adh: f64,
    /// Cytosol viscosity (Pa·s).
    pub mu: f64,
    /// Cortical viscosity (pN·s/μm³).
    pub nu_c: f64,
    /// Blob size; 1.5 membrane spacings when unset.
    pub eps: Option<f64>,
    /// Cortex radius at which the intact cell is in force balance. Sets the
    /// cortex reference spacing.
    pub cortex_balance_radius: f64,
    pub equilibration_steps: usize,
    /// Links broken at initiation, taken at the topmost membrane nodes.
    pub n_broken: usize,
    /// Times after initiation at which shapes and pressure profiles are kept.
    pub sample_times: Vec<f64>,
    pub pressure_samples: usize,
    pub pressure_y_min: f64,
    pub pressure_y_max: f64,
}

impl Default for BlebbingParams {
    fn default() -> Self {
        BlebbingParams {
            n: 100,
            r_mem: 10.0,
            r_cortex: 9.90,
            gamma_m: 40.0,
            k_m: 80.0,
            gamma_c: 250.0,
            k_c: 100.0,
            k_adh: 247.0,
            mu: 5.0,
            nu_c: 10.0,
            eps: None,
            cortex_balance_radius: 9.90,
            equilibration_steps: 10,
            n_broken: 7,
            sample_times: alloc::vec![0.0, 0.1, 1.0, 5.0, 10.0],
            pressure_samples: 101,
            pressure_y_min: -15.0,
            pressure_y_max: 15.0,
        }
    }
}

pub fn default_stepping() -> Stepping {
    Stepping {
        dt: 1e-4,
        dt_fine: 1e-4,
        fine_window: 0.0,
        t_end: 10.0,
        stop_speed: None,
        output_every: 1000,
    }
}

impl BlebbingParams {
    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::InvalidParameter {
                name: "n",
                reason: "need at least 3 nodes",
            });
        }
        check_positive("r_mem", self.r_mem)?;
        check_positive("r_cortex", self.r_cortex)?;
        for (name, v) in [
            ("gamma_m", self.gamma_m),
            ("k_m", self.k_m),
            ("gamma_c", self.gamma_c),
            ("k_c", self.k_c),
            ("k_adh", self.k_adh),
        ] {
            check_non_negative(name, v)?;
        }
        check_positive("mu", self.mu)?;
        check_positive("nu_c", self.nu_c)?;
        if let Some(eps) = self.eps {
            check_positive("eps", eps)?;
        }
        if !(self.cortex_balance_radius > 0.0 && self.cortex_balance_radius < self.r_mem) {
            return Err(Error::InvalidParameter {
                name: "cortex_balance_radius",
                reason: "must lie strictly inside the membrane",
            });
        }
        if self.n_broken > self.n {
            return Err(Error::InvalidParameter {
                name: "n_broken",
                reason: "cannot break more links than there are nodes",
            });
        }
        if self.pressure_samples < 2 || !(self.pressure_y_max > self.pressure_y_min) {
            return Err(Error::InvalidParameter {
                name: "pressure_samples",
                reason: "need at least 2 samples over a non-empty interval",
            });
        }
        if self.sample_times.iter().any(|t| !(*t >= 0.0)) {
            return Err(Error::InvalidParameter {
                name: "sample_times",
                reason: "times must be non-negative",
            });
        }
        Ok(())
    }

    pub fn membrane_spacing(&self) -> f64 {
        2.0 * self.r_mem * libm::sin(core::f64::consts::PI / self.n as f64)
    }

    pub fn eps(&self) -> f64 {
        self.eps.unwrap_or(1.5 * self.membrane_spacing())
    }

    pub fn fluid(&self) -> Result<FluidParams> {
        FluidParams::new(self.mu, self.eps())
    }

    /// Cortex reference spacing at which a regular cortex of radius
    /// `cortex_balance_radius`, linked to an unstretched membrane, has its
    /// elastic and adhesion forces in exact discrete balance.
    pub fn cortex_ref_spacing(&self) -> Result<f64> {
        let s = libm::sin(core::f64::consts::PI / self.n as f64);
        let chord = 2.0 * self.cortex_balance_radius * s;
        let a = self.k_adh * (self.r_mem - self.cortex_balance_radius);
        // Balance: 2 s (gamma + k (chord q - 1)) q = a with q = 1 / spacing.
        let qa = 2.0 * s * self.k_c * chord;
        let qb = 2.0 * s * (self.gamma_c - self.k_c);
        let q = if qa == 0.0 {
            if qb == 0.0 {
                return Err(Error::InvalidParameter {
                    name: "gamma_c",
                    reason: "cortex with no tension or stiffness cannot balance adhesion",
                });
            }
            a / qb
        } else {
            (-qb + libm::sqrt(qb * qb + 4.0 * qa * a)) / (2.0 * qa)
        };
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "cortex_balance_radius",
                reason: "no positive cortex reference spacing balances the adhesion",
            });
        }
        Ok(1.0 / q)
    }

    pub fn initial_structures(&self) -> Result<(ClosedFiber, ClosedFiber)> {
        let membrane = ClosedFiber::new(
            circle_nodes(Vec2::ZERO, self.r_mem, self.n),
            self.membrane_spacing(),
            self.gamma_m,
            self.k_m,
        )?;
        let cortex = ClosedFiber::new(
            circle_nodes(Vec2::ZERO, self.r_cortex, self.n),
            self.cortex_ref_spacing()?,
            self.gamma_c,
            self.k_c,
        )?;
        Ok((membrane, cortex))
    }

    /// Sample points on `x = 0`.
    pub fn pressure_line(&self) -> Vec<Vec2> {
        let m = self.pressure_samples;
        let h = (self.pressure_y_max - self.pressure_y_min) / (m - 1) as f64;
        (0..m)
            .map(|i| Vec2::new(0.0, self.pressure_y_min + h * i as f64))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PressureProfile {
    pub t: f64,
    pub y: Vec<f64>,
    pub p: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlebbingOutput {
    pub series: TimeSeries,
    pub pressure: Vec<PressureProfile>,
    /// Largest membrane or cortex speed at the end of equilibration.
    pub equilibrium_speed: f64,
    /// Membrane nodes whose links were broken.
    pub broken_nodes: Vec<usize>,
}

impl BlebbingOutput {
    pub fn profile_at(&self, t: f64) -> Option<&PressureProfile> {
        self.pressure.iter().find(|p| libm::fabs(p.t - t) < 1e-9)
    }

    pub fn membrane_at(&self, t: f64) -> Option<&Snapshot> {
        self.series
            .snapshots_of("membrane")
            .find(|s| libm::fabs(s.t - t) < 1e-9)
    }
}

struct Bleb<'a> {
    params: &'a BlebbingParams,
    flow: Flow,
    membrane: ClosedFiber,
    cortex: ClosedFiber,
    adhesion: AdhesionState,
}

struct Rates {
    sources: PointForceSet,
    membrane: Vec<Vec2>,
    cortex: Vec<Vec2>,
}

impl Bleb<'_> {
    fn rates(&self) -> Result<Rates> {
        let (adh_m, adh_c) = adhesion_force_densities(&self.membrane, &self.cortex, &self.adhesion)?;
        let ds_m = self.membrane.ref_spacing;
        let forces: Vec<Vec2> = fiber_elastic_force(&self.membrane)?
            .into_iter()
            .zip(adh_m)
            .map(|(el, adh)| el + adh * ds_m)
            .collect();
        let sources = PointForceSet::new(self.membrane.nodes.clone(), forces)?;
        let membrane = self.flow.velocity(&self.membrane.nodes, &sources)?;
        let inv_nu = 1.0 / self.params.nu_c;
        let cortex = fiber_elastic_force_density(&self.cortex)?
            .into_iter()
            .zip(adh_c)
            .map(|(el, adh)| (el + adh) * inv_nu)
            .collect();
        Ok(Rates {
            sources,
            membrane,
            cortex,
        })
    }

    fn advance(&mut self, rates: &Rates, dt: f64) {
        euler_advance(&mut self.membrane.nodes, &rates.membrane, dt);
        euler_advance(&mut self.cortex.nodes, &rates.cortex, dt);
    }

    /// Membrane nodes with the largest `y`; the lowest index wins ties.
    fn topmost_membrane_nodes(&self, count: usize) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.membrane.len()).collect();
        order.sort_by(|&a, &b| {
            let (ya, yb) = (self.membrane.nodes[a].y, self.membrane.nodes[b].y);
            yb.partial_cmp(&ya).unwrap_or(core::cmp::Ordering::Equal).then(a.cmp(&b))
        });
        order.truncate(count);
        order.sort_unstable();
        order
    }
}

pub fn run_blebbing(params: &BlebbingParams, run: &RunSettings) -> Result<BlebbingOutput> {
    params.validate()?;
    run.stepping.validate()?;
    let stepping = &run.stepping;
    let dt = stepping.dt;
    let (membrane, cortex) = params.initial_structures()?;
    let mut sim = Bleb {
        params,
        flow: Flow::new(params.fluid()?, run.correction)?,
        adhesion: AdhesionState::one_to_one(params.n, params.k_adh),
        membrane,
        cortex,
    };

    for _ in 0..params.equilibration_steps {
        let r = sim.rates()?;
        sim.advance(&r, dt);
    }
    let eq = sim.rates()?;
    let equilibrium_speed = max_speed(&eq.membrane).max(max_speed(&eq.cortex));
    log::info!("blebbing: max speed after equilibration {equilibrium_speed:e} μm/s");

    let broken_nodes = sim.topmost_membrane_nodes(params.n_broken);

    let sample_steps: Vec<(usize, f64)> = params
        .sample_times
        .iter()
        .map(|&t| (libm::round(t / dt) as usize, t))
        .collect();
    let line = params.pressure_line();
    let near = 2.0 * params.eps();

    let mut out = BlebbingOutput {
        series: TimeSeries {
            trace: Trace::new(&TRACE_COLUMNS),
            snapshots: Vec::new(),
        },
        pressure: Vec::new(),
        equilibrium_speed,
        broken_nodes: broken_nodes.clone(),
    };
    let n_steps = stepping.base_steps();
    // The t = 0 row and profile describe the cell at initiation, just before
    // the links go.
    for step in 0..=n_steps {
        let t = step as f64 * dt;
        let mut rates = sim.rates()?;
        let sample = sample_steps.iter().find(|(s, _)| *s == step).map(|(_, t)| *t);
        if step.is_multiple_of(stepping.output_every) || sample.is_some() || step == n_steps {
            let t_rec = sample.unwrap_or(t);
            let p_center = sim.flow.pressure(&[Vec2::ZERO], &rates.sources)[0];
            let c = centroid(&sim.cortex.nodes);
            let cortex_radius = sim.cortex.nodes.iter().map(|x| x.distance(c)).sum::<f64>() / params.n as f64;
            let top = sim.membrane.nodes.iter().fold(f64::NEG_INFINITY, |m, x| m.max(x.y));
            let speed = max_speed(&rates.membrane).max(max_speed(&rates.cortex));
            out.series
                .trace
                .push(alloc::vec![t_rec, p_center, cortex_radius, top, sim.adhesion.intact() as f64, speed]);
            for (name, fiber) in [("membrane", &sim.membrane), ("cortex", &sim.cortex)] {
                out.series.snapshots.push(Snapshot {
                    t: t_rec,
                    structure: name,
                    nodes: fiber.nodes.clone(),
                });
            }
        }
        if let Some(t_s) = sample {
            let kept: Vec<Vec2> = line
                .iter()
                .copied()
                .filter(|y| rates.sources.positions.iter().all(|x| x.distance(*y) > near))
                .collect();
            let p = sim.flow.pressure(&kept, &rates.sources);
            out.pressure.push(PressureProfile {
                t: t_s,
                y: kept.iter().map(|v| v.y).collect(),
                p,
            });
        }
        if step == 0 {
            sim.adhesion.break_links_at_membrane_nodes(&broken_nodes);
            rates = sim.rates()?;
        }
        if step == n_steps {
            break;
        }
        sim.advance(&rates, dt);
    }
    Ok(out)
}
