//! Protrusion-driven motility through an anchored ECM spring network.
//!
//! One cycle: a front-edge cortex node is pushed outward until it comes
//! within `2 eps` of an ECM node, binds to it, the cortex stiffens and
//! contracts, and once the system has slowed below the stop speed the node
//! is released.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{adaptive_dt, check_non_negative, check_positive, euler_advance, max_speed, Flow, RunSettings, Snapshot, Stepping, TimeSeries, Trace};
use crate::error::{Error, Result};
use crate::kernels::{superpose_velocity, DirectSum, FluidParams, KernelSum, PointForceSet};
use crate::linalg::{lu_factor, lu_solve, LuFactors};
use crate::structures::{
    delaunay_edges, ecm_force, fiber_elastic_force, outward_normals, ClosedFiber, SpringNetwork,
};
use crate::vec2::{centroid, Vec2};

pub const TRACE_COLUMNS: [&str; 8] = [
    "t",
    "nucleus_x",
    "nucleus_y",
    "displacement",
    "phase",
    "cycles",
    "bound_node",
    "max_speed",
];

/// How a rigid ECM is imposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum RigidMode {
    /// Nodes never move and exert no force on the fluid. The bound tip is
    /// then pinned while the stiffened cortex pulls on it, which forward
    /// Euler cannot follow at `dt = 1e-3`.
    Frozen,
    /// Nodes carry whatever forces make the fluid velocity vanish there.
    #[default]
    NoSlip,
}

impl RigidMode {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "frozen" => Some(RigidMode::Frozen),
            "no-slip" => Some(RigidMode::NoSlip),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RigidMode::Frozen => "frozen",
            RigidMode::NoSlip => "no-slip",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct MotilityParams {
    pub cortex_n: usize,
    pub cortex_radius: f64,
    /// Cortex stiffness before binding (pN/μm).
    pub k_cortex: f64,
    /// Factor applied to the cortex stiffness while bound.
    pub stiffen_factor: f64,
    pub nucleus_n: usize,
    pub nucleus_radius: f64,
    pub k_nucleus: f64,
    pub cell_center: Vec2,
    pub ecm_nodes: Vec<Vec2>,
    /// ECM spring stiffness (pN/μm²).
    pub k_teth: f64,
    /// Replace the elastic network by a rigid one.
    pub rigid: Option<RigidMode>,
    pub mu: f64,
    pub eps: f64,
    /// Protrusion force density (pN/μm²).
    pub f0: f64,
    /// Direction of polarization.
    pub front_direction: Vec2,
    /// Half-width of the front sector (degrees).
    pub front_half_angle: f64,
    /// Binding distance in units of `eps`.
    pub bind_distance: f64,
    /// Release displacement in units of `eps`.
    pub release_distance: f64,
    pub max_cycles: usize,
    /// After the last contraction, release the node and keep stepping
    /// until the speed drops below the stop speed again.
    pub settle: bool,
}

/// Default ECM: a 5 × 4 lattice with unit spacing around the cell.
pub fn default_ecm_nodes() -> Vec<Vec2> {
    ecm_lattice(5, 4, 1.0, Vec2::new(-2.0, -1.5))
}

/// `nx × ny` lattice with the given spacing, row by row from `origin`.
pub fn ecm_lattice(nx: usize, ny: usize, spacing: f64, origin: Vec2) -> Vec<Vec2> {
    let mut nodes = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            nodes.push(origin + Vec2::new(i as f64, j as f64) * spacing);
        }
    }
    nodes
}

/// Lattice with each node displaced uniformly within `±jitter` per
/// component, reproducible from `seed`.
pub fn jittered_lattice(nx: usize, ny: usize, spacing: f64, origin: Vec2, jitter: f64, seed: u64) -> Vec<Vec2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ecm_lattice(nx, ny, spacing, origin)
        .into_iter()
        .map(|p| {
            if jitter > 0.0 {
                p + Vec2::new(rng.gen_range(-jitter..=jitter), rng.gen_range(-jitter..=jitter))
            } else {
                p
            }
        })
        .collect()
}

impl Default for MotilityParams {
    fn default() -> Self {
        MotilityParams {
            cortex_n: 80,
            cortex_radius: 0.5,
            k_cortex: 1.0,
            stiffen_factor: 100.0,
            nucleus_n: 40,
            nucleus_radius: 0.45,
            k_nucleus: 50.0,
            cell_center: Vec2::new(-0.8, 0.1),
            ecm_nodes: default_ecm_nodes(),
            k_teth: 50.0,
            rigid: None,
            mu: 1.0,
            eps: 0.075,
            f0: 500.0,
            front_direction: Vec2::new(1.0, 0.0),
            front_half_angle: 60.0,
            bind_distance: 2.0,
            release_distance: 2.0,
            max_cycles: 1,
            settle: true,
        }
    }
}

/// Seed of the reference run.
pub const DEFAULT_SEED: u64 = 9;

pub fn default_stepping() -> Stepping {
    Stepping {
        dt: 1e-3,
        dt_fine: 2e-4,
        fine_window: 0.05,
        t_end: 2.0,
        stop_speed: Some(0.075),
        output_every: 10,
    }
}

impl MotilityParams {
    pub fn validate(&self) -> Result<()> {
        if self.cortex_n < 5 {
            return Err(Error::InvalidParameter {
                name: "cortex_n",
                reason: "protrusions need at least 5 cortex nodes",
            });
        }
        if self.nucleus_n < 3 {
            return Err(Error::InvalidParameter {
                name: "nucleus_n",
                reason: "need at least 3 nucleus nodes",
            });
        }
        if self.ecm_nodes.len() < 3 {
            return Err(Error::InvalidParameter {
                name: "ecm_nodes",
                reason: "need at least 3 ECM nodes",
            });
        }
        check_positive("cortex_radius", self.cortex_radius)?;
        check_positive("nucleus_radius", self.nucleus_radius)?;
        for (name, v) in [
            ("k_cortex", self.k_cortex),
            ("stiffen_factor", self.stiffen_factor),
            ("k_nucleus", self.k_nucleus),
            ("k_teth", self.k_teth),
            ("f0", self.f0),
            ("bind_distance", self.bind_distance),
            ("release_distance", self.release_distance),
        ] {
            check_non_negative(name, v)?;
        }
        check_positive("mu", self.mu)?;
        check_positive("eps", self.eps)?;
        if self.front_direction.normalized().is_none() {
            return Err(Error::InvalidParameter {
                name: "front_direction",
                reason: "must be a nonzero vector",
            });
        }
        if !(self.front_half_angle > 0.0 && self.front_half_angle <= 180.0) {
            return Err(Error::InvalidParameter {
                name: "front_half_angle",
                reason: "must lie in (0, 180] degrees",
            });
        }
        Ok(())
    }

    pub fn fluid(&self) -> Result<FluidParams> {
        FluidParams::new(self.mu, self.eps)
    }

    pub fn initial_structures(&self) -> Result<(ClosedFiber, ClosedFiber, SpringNetwork)> {
        let cortex = ClosedFiber::circle(self.cell_center, self.cortex_radius, self.cortex_n, 0.0, self.k_cortex)?;
        let nucleus = ClosedFiber::circle(self.cell_center, self.nucleus_radius, self.nucleus_n, 0.0, self.k_nucleus)?;
        let edges = delaunay_edges(&self.ecm_nodes)?;
        let ecm = SpringNetwork::at_rest(self.ecm_nodes.clone(), edges, self.k_teth)?;
        Ok((cortex, nucleus, ecm))
    }
}

/// Protrusion forces per node: `f0` along the outward normal at `j`,
/// `f0 / 2` at its two neighbors, and the opposite of their sum shared
/// equally by the other `N - 3` nodes. Densities are weighted by the
/// reference spacing.
pub fn protrusion_forces(cortex: &ClosedFiber, j: usize, f0: f64) -> Result<Vec<Vec2>> {
    let n = cortex.len();
    if n < 5 {
        return Err(Error::InvalidParameter {
            name: "cortex",
            reason: "protrusions need at least 5 cortex nodes",
        });
    }
    if j >= n {
        return Err(Error::InvalidParameter {
            name: "j",
            reason: "protrusion node out of range",
        });
    }
    let normals = outward_normals(cortex)?;
    let ds = cortex.ref_spacing;
    let prev = (j + n - 1) % n;
    let next = (j + 1) % n;
    let mut out = alloc::vec![Vec2::ZERO; n];
    out[prev] = normals[prev] * (0.5 * f0 * ds);
    out[j] = normals[j] * (f0 * ds);
    out[next] = normals[next] * (0.5 * f0 * ds);
    let push = out[prev] + out[j] + out[next];
    let share = push / -((n - 3) as f64);
    for (i, f) in out.iter_mut().enumerate() {
        if i != prev && i != j && i != next {
            *f = share;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CyclePhase {
    Protruding,
    Bound,
    Contracting,
    Released,
}

impl CyclePhase {
    pub fn code(self) -> f64 {
        match self {
            CyclePhase::Protruding => 0.0,
            CyclePhase::Bound => 1.0,
            CyclePhase::Contracting => 2.0,
            CyclePhase::Released => 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CycleEventKind {
    /// A new protrusion starts at this cortex node.
    Protrusion { cortex_node: usize },
    /// The protrusion tip bound to this ECM node.
    Bound { ecm_node: usize, cortex_node: usize },
    /// The system slowed below the stop speed while bound.
    Contracted { ecm_node: usize },
    /// The ECM node was detached and moved away from the cell.
    Released { ecm_node: usize },
    Settled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleEvent {
    pub t: f64,
    pub kind: CycleEventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotilityOutcome {
    /// The requested number of cycles finished.
    Completed { cycles: usize },
    /// `t_end` reached while a protrusion was still searching for a node.
    NeverBound { cycles: usize },
    /// `t_end` reached while bound.
    TimeLimit { cycles: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotilityOutput {
    pub series: TimeSeries,
    pub events: Vec<CycleEvent>,
    pub outcome: MotilityOutcome,
    pub ecm_initial: Vec<Vec2>,
    pub ecm_final: Vec<Vec2>,
    pub edges: Vec<(usize, usize)>,
    pub t_final: f64,
}

impl MotilityOutput {
    /// Time of the first completed contraction.
    pub fn first_cycle_time(&self) -> Option<f64> {
        self.events.iter().find_map(|e| match e.kind {
            CycleEventKind::Contracted { .. } => Some(e.t),
            _ => None,
        })
    }

    pub fn bind_time(&self) -> Option<f64> {
        self.events.iter().find_map(|e| match e.kind {
            CycleEventKind::Bound { .. } => Some(e.t),
            _ => None,
        })
    }

    /// Nucleus displacement at time `t`, holding the last value once the
    /// run has stopped.
    pub fn displacement_at(&self, t: f64) -> Option<f64> {
        let ts = self.series.trace.column("t")?;
        let d = self.series.trace.column("displacement")?;
        let mut value = None;
        for (ti, di) in ts.iter().zip(&d) {
            if *ti <= t + 1e-12 {
                value = Some(*di);
            } else {
                break;
            }
        }
        value
    }
}

#[derive(Debug, Clone, Copy)]
struct Binding {
    node: usize,
    tip: usize,
    offset: Vec2,
    at: f64,
}

struct Cell<'a> {
    params: &'a MotilityParams,
    flow: Flow,
    no_slip: Option<LuFactors>,
    cortex: ClosedFiber,
    nucleus: ClosedFiber,
    ecm: SpringNetwork,
    phase: CyclePhase,
    protrusion: usize,
    binding: Option<Binding>,
    cycles: usize,
    rng: ChaCha8Rng,
}

struct Velocities {
    cortex: Vec<Vec2>,
    nucleus: Vec<Vec2>,
    ecm: Vec<Vec2>,
}

impl Velocities {
    fn max_speed(&self) -> f64 {
        max_speed(&self.cortex)
            .max(max_speed(&self.nucleus))
            .max(max_speed(&self.ecm))
    }
}

impl Cell<'_> {
    fn front_nodes(&self) -> Result<Vec<usize>> {
        let normals = outward_normals(&self.cortex)?;
        let dir = self.params.front_direction.normalized().unwrap_or(Vec2::new(1.0, 0.0));
        let cos_max = libm::cos(self.params.front_half_angle.to_radians());
        let front: Vec<usize> = normals
            .iter()
            .enumerate()
            .filter(|(_, n)| n.dot(dir) >= cos_max - 1e-12)
            .map(|(i, _)| i)
            .collect();
        if front.is_empty() {
            return Err(Error::DegenerateGeometry("no cortex node faces the front direction"));
        }
        Ok(front)
    }

    fn start_protrusion(&mut self) -> Result<usize> {
        let front = self.front_nodes()?;
        // A uniform fraction of the sector rather than a uniform index, so a
        // seed picks the same part of the front at any resolution.
        let u: f64 = self.rng.gen();
        self.protrusion = front[((u * front.len() as f64) as usize).min(front.len() - 1)];
        self.phase = CyclePhase::Protruding;
        Ok(self.protrusion)
    }

    fn elastic_ecm(&self) -> bool {
        self.params.rigid.is_none()
    }

    fn velocities(&self) -> Result<Velocities> {
        let mut f_cortex = fiber_elastic_force(&self.cortex)?;
        if self.phase == CyclePhase::Protruding {
            let push = protrusion_forces(&self.cortex, self.protrusion, self.params.f0)?;
            for (f, p) in f_cortex.iter_mut().zip(push) {
                *f += p;
            }
        }
        let f_nucleus = fiber_elastic_force(&self.nucleus)?;
        let tip = self.binding.map(|b| b.tip);

        let mut sources = PointForceSet::empty();
        for (i, (&x, &f)) in self.cortex.nodes.iter().zip(&f_cortex).enumerate() {
            if Some(i) != tip {
                sources.push(x, f);
            }
        }
        sources.extend(&self.nucleus.nodes, &f_nucleus);
        let n_cell = sources.len();
        if self.elastic_ecm() {
            let mut f_ecm = ecm_force(&self.ecm);
            if let Some(b) = self.binding {
                f_ecm[b.node] += f_cortex[b.tip];
            }
            sources.extend(&self.ecm.nodes, &f_ecm);
        }
        let evals = sources.positions.clone();

        let u = match &self.no_slip {
            None => self.flow.velocity(&evals, &sources)?,
            Some(factors) => {
                // Forces at the rigid nodes chosen so the fluid is at rest there.
                let params = &self.flow.params;
                let at_nodes = superpose_velocity(&self.ecm.nodes, &sources, params);
                let rhs: Vec<f64> = at_nodes.iter().flat_map(|v| [-v.x, -v.y]).collect();
                let g = lu_solve(factors, &rhs)?;
                let mut all = sources.clone();
                let g: Vec<Vec2> = g.chunks_exact(2).map(|c| Vec2::new(c[0], c[1])).collect();
                all.extend(&self.ecm.nodes, &g);
                let u = superpose_velocity(&evals, &all, params);
                if let Some(index) = u.iter().position(|v| !v.is_finite()) {
                    return Err(Error::NonFiniteVelocity {
                        index,
                        method: "no-slip ECM",
                    });
                }
                u
            }
        };

        let n_c = self.cortex.len();
        let mut cortex = alloc::vec![Vec2::ZERO; n_c];
        let mut k = 0;
        for (i, v) in cortex.iter_mut().enumerate() {
            if Some(i) != tip {
                *v = u[k];
                k += 1;
            }
        }
        let nucleus = u[k..n_cell].to_vec();
        let ecm = if self.elastic_ecm() {
            u[n_cell..].to_vec()
        } else {
            alloc::vec![Vec2::ZERO; self.ecm.nodes.len()]
        };
        if let Some(b) = self.binding {
            cortex[b.tip] = ecm[b.node];
        }
        Ok(Velocities { cortex, nucleus, ecm })
    }

    fn advance(&mut self, v: &Velocities, dt: f64) {
        euler_advance(&mut self.cortex.nodes, &v.cortex, dt);
        euler_advance(&mut self.nucleus.nodes, &v.nucleus, dt);
        euler_advance(&mut self.ecm.nodes, &v.ecm, dt);
        if let Some(b) = self.binding {
            self.cortex.nodes[b.tip] = self.ecm.nodes[b.node] + b.offset;
        }
    }

    /// ECM node within the binding distance of the protrusion tip, nearest
    /// first.
    fn contact(&self) -> Option<usize> {
        let tip = self.cortex.nodes[self.protrusion];
        let reach = self.params.bind_distance * self.params.eps;
        let mut best: Option<(usize, f64)> = None;
        for (j, &x) in self.ecm.nodes.iter().enumerate() {
            let d = x.distance(tip);
            if d <= reach && best.is_none_or(|(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        best.map(|(j, _)| j)
    }

    fn release(&mut self) -> Result<usize> {
        let b = self.binding.take().ok_or(Error::DegenerateGeometry("release without a bound node"))?;
        let normal = outward_normals(&self.cortex)?[b.tip];
        self.ecm.nodes[b.node] += normal * (self.params.release_distance * self.params.eps);
        self.cortex.k_elastic = self.params.k_cortex;
        self.cycles += 1;
        self.phase = CyclePhase::Released;
        Ok(b.node)
    }
}

pub fn run_motility(params: &MotilityParams, run: &RunSettings) -> Result<MotilityOutput> {
    params.validate()?;
    run.stepping.validate()?;
    let stepping = &run.stepping;
    let (cortex, nucleus, ecm) = params.initial_structures()?;
    let fluid = params.fluid()?;
    let no_slip = match params.rigid {
        Some(RigidMode::NoSlip) => Some(lu_factor(&DirectSum.mobility(&ecm.nodes, &ecm.nodes, &fluid))?),
        _ => None,
    };
    if no_slip.is_some() {
        log::info!("no-slip ECM: the no-slip nodes replace the configured correction");
    }
    let edges = ecm.edges.clone();
    let ecm_initial = ecm.nodes.clone();
    let nucleus_start = centroid(&nucleus.nodes);
    let mut cell = Cell {
        params,
        flow: Flow::new(fluid, run.correction)?,
        no_slip,
        cortex,
        nucleus,
        ecm,
        phase: CyclePhase::Protruding,
        protrusion: 0,
        binding: None,
        cycles: 0,
        rng: ChaCha8Rng::seed_from_u64(run.seed),
    };

    let mut series = TimeSeries {
        trace: Trace::new(&TRACE_COLUMNS),
        snapshots: Vec::new(),
    };
    let mut events = Vec::new();
    let first = cell.start_protrusion()?;
    events.push(CycleEvent {
        t: 0.0,
        kind: CycleEventKind::Protrusion { cortex_node: first },
    });

    let mut t = 0.0;
    let mut step = 0usize;
    let mut record_now = true;
    let mut settling = false;
    let outcome = loop {
        let v = cell.velocities()?;
        let speed = v.max_speed();

        let mut finished = false;
        let mut contracted = false;
        let mut last_cycle = false;
        if matches!(cell.phase, CyclePhase::Bound | CyclePhase::Contracting) {
            let b = cell.binding.expect("bound phase has a binding");
            if t - b.at >= stepping.fine_window {
                cell.phase = CyclePhase::Contracting;
            }
            if stepping.stop_speed.is_some_and(|s| speed < s) {
                events.push(CycleEvent {
                    t,
                    kind: CycleEventKind::Contracted { ecm_node: b.node },
                });
                record_now = true;
                contracted = true;
                last_cycle = cell.cycles + 1 >= params.max_cycles;
                finished = last_cycle && !params.settle;
            }
        }
        if settling && stepping.stop_speed.is_some_and(|s| speed < s) {
            events.push(CycleEvent {
                t,
                kind: CycleEventKind::Settled,
            });
            finished = true;
        }
        let out_of_time = t >= stepping.t_end - 1e-12;

        if record_now || step.is_multiple_of(stepping.output_every) || finished || out_of_time {
            let c = centroid(&cell.nucleus.nodes);
            let bound = cell.binding.map_or(-1.0, |b| b.node as f64);
            series.trace.push(alloc::vec![
                t,
                c.x,
                c.y,
                c.distance(nucleus_start),
                cell.phase.code(),
                cell.cycles as f64,
                bound,
                speed
            ]);
            for (name, nodes) in [
                ("cortex", &cell.cortex.nodes),
                ("nucleus", &cell.nucleus.nodes),
                ("ecm", &cell.ecm.nodes),
            ] {
                series.snapshots.push(Snapshot {
                    t,
                    structure: name,
                    nodes: nodes.clone(),
                });
            }
            record_now = false;
        }
        if finished {
            break MotilityOutcome::Completed {
                cycles: if settling { cell.cycles } else { cell.cycles + 1 },
            };
        }
        if out_of_time {
            break match cell.phase {
                _ if settling => MotilityOutcome::TimeLimit { cycles: cell.cycles },
                CyclePhase::Protruding | CyclePhase::Released => MotilityOutcome::NeverBound { cycles: cell.cycles },
                _ => MotilityOutcome::TimeLimit { cycles: cell.cycles },
            };
        }
        if contracted {
            let node = cell.release()?;
            events.push(CycleEvent {
                t,
                kind: CycleEventKind::Released { ecm_node: node },
            });
            if last_cycle {
                settling = true;
                record_now = true;
                continue;
            }
            let j = cell.start_protrusion()?;
            events.push(CycleEvent {
                t,
                kind: CycleEventKind::Protrusion { cortex_node: j },
            });
            continue;
        }

        let dt = adaptive_dt(t, cell.binding.map(|b| b.at), stepping);
        cell.advance(&v, dt);
        t += dt;
        step += 1;

        if cell.phase == CyclePhase::Protruding {
            if let Some(node) = cell.contact() {
                let tip = cell.protrusion;
                cell.binding = Some(Binding {
                    node,
                    tip,
                    offset: cell.cortex.nodes[tip] - cell.ecm.nodes[node],
                    at: t,
                });
                cell.cortex.k_elastic = params.k_cortex * params.stiffen_factor;
                cell.phase = CyclePhase::Bound;
                events.push(CycleEvent {
                    t,
                    kind: CycleEventKind::Bound {
                        ecm_node: node,
                        cortex_node: tip,
                    },
                });
                record_now = true;
                log::debug!("tip {tip} bound to ECM node {node} at t={t}");
            }
        }
    };
    log::info!("motility run finished at t={t}: {outcome:?}");
    Ok(MotilityOutput {
        series,
        events,
        outcome,
        ecm_initial,
        ecm_final: cell.ecm.nodes.clone(),
        edges,
        t_final: t,
    })
}
