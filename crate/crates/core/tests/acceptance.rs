//! One PASS/FAIL line per acceptance criterion. Tolerances live in the
//! constants below.
//!
//! Criteria listed in `KNOWN_UNMET` are still run and printed; they are the
//! only ones allowed to print FAIL without failing the test. Each has a
//! written analysis in the project's decision log.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use regstokes_core::constraint::{
    correction_velocity, mean_circle_velocity, radius_bounds, sigma_u, total_velocity, RadiusBoundsInput,
    RADIUS_SWEEP_DECADES,
};
use regstokes_core::kernels::{singular_velocity, superpose_pressure, DirectSum, KernelSum};
use regstokes_core::linalg::{lu_factor, lu_solve, DenseMatrix};
use regstokes_core::scenarios::blebbing::{self, BlebbingOutput, BlebbingParams};
use regstokes_core::scenarios::motility::{self, MotilityOutput, MotilityParams, RigidMode};
use regstokes_core::scenarios::tethered::{self, TetheredParams};
use regstokes_core::scenarios::{
    protrusion_forces, run_blebbing, run_motility, run_tethered, Flow, RunSettings, Stepping, TimeSeries,
};
use regstokes_core::structures::{
    adhesion_forces, circle_nodes, ecm_force, fiber_elastic_force, AdhesionState, ClosedFiber,
};
use regstokes_core::{CorrectionConfig, CorrectionMethod, Vec2};

const SIGMA_POINTS: usize = 100;
const SIGMA_AT_1E3: f64 = 0.10;
const SIGMA_AT_1E5: f64 = 0.05;

const QUADRATURE_POINTS: usize = 10_000;
const QUADRATURE_REL: f64 = 1e-6;

const U_EPS_RANGE: (f64, f64) = (115.0, 135.0);
const U_R_RANGE: (f64, f64) = (-330.0, -320.0);

const TETHER_CENTER_MAX: f64 = 0.5;
const TETHER_GAP_1E3: f64 = 0.07;
const TETHER_GAP_1E5: f64 = 0.03;

const RIGID_CYCLE_TIME: f64 = 1.36;
const RIGID_CYCLE_REL: f64 = 0.15;
const HALF_CORTEX_N: usize = 40;
const HALF_NUCLEUS_N: usize = 20;
const HALF_EPS: f64 = 0.075;

const MEANSUB_SHIFT_MIN: f64 = 0.05;
const MEANSUB_AGREE_REL: f64 = 0.10;
const MEANZERO_NODE_MAX: f64 = 0.1;

const BLEB_STABLE_REL: f64 = 0.05;
const BLEB_DROP_MIN: f64 = 0.20;
const BLEB_HAUSDORFF_MAX: f64 = 0.2;

const FORCE_SUM_REL: f64 = 1e-12;
const CERTIFICATE_REL: f64 = 1e-6;
const LU_REL: f64 = 1e-10;

const KNOWN_UNMET: &[&str] = &["artificial-equilibrium"];

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn outcome(name: &'static str, checks: &[(bool, String)]) -> Outcome {
    Outcome {
        name,
        pass: checks.iter().all(|(ok, _)| *ok),
        detail: checks
            .iter()
            .map(|(ok, d)| format!("{}{d}", if *ok { "" } else { "[x] " }))
            .collect::<Vec<_>>()
            .join("; "),
    }
}

fn settings(method: CorrectionMethod, radius: f64, stepping: Stepping, seed: u64) -> RunSettings {
    RunSettings {
        correction: CorrectionConfig::new(method, radius),
        stepping,
        seed,
    }
}

fn sigma_thresholds() -> Outcome {
    let f0 = Vec2::new(1.0, 0.0);
    let sig: Vec<(f64, f64)> = RADIUS_SWEEP_DECADES
        .map(|k| {
            let r = 10f64.powi(k);
            (r, sigma_u(r, SIGMA_POINTS, f0, 1.0).unwrap())
        })
        .collect();
    let at = |r: f64| sig.iter().find(|(x, _)| *x == r).unwrap().1;
    let decreasing = sig.windows(2).all(|w| w[1].1 < w[0].1);
    outcome(
        "sigma-thresholds",
        &[
            (at(1e3) < SIGMA_AT_1E3, format!("sigma_u(1e3) = {:.4} < {SIGMA_AT_1E3}", at(1e3))),
            (at(1e5) < SIGMA_AT_1E5, format!("sigma_u(1e5) = {:.4} < {SIGMA_AT_1E5}", at(1e5))),
            (decreasing, format!("decreasing over 1e1..1e8: {decreasing}")),
        ],
    )
}

fn radius_bounds_reproduced() -> Outcome {
    let input = RadiusBoundsInput {
        rho: 1e3,
        v: 1e-6,
        mu: 1e-3,
        re_max: 0.1,
        sigma_threshold: 0.10,
    };
    let (lo, hi) = radius_bounds(&input, SIGMA_POINTS).unwrap();
    outcome(
        "radius-bounds",
        &[(lo == 1e3 && hi == 1e5, format!("(R_min, R_max) = ({lo:e}, {hi:e}) um, expected (1e3, 1e5)"))],
    )
}

fn quadrature_oracle() -> Outcome {
    let mut checks = Vec::new();
    for radius in [1e3, 1e5] {
        let f0 = Vec2::new(1.0, 0.0);
        let mut sum = Vec2::ZERO;
        for j in 0..QUADRATURE_POINTS {
            let x = Vec2::from_angle(2.0 * PI * j as f64 / QUADRATURE_POINTS as f64) * radius;
            sum += singular_velocity(x, Vec2::ZERO, f0, 1.0).unwrap();
        }
        let q = sum / QUADRATURE_POINTS as f64;
        let exact = mean_circle_velocity(f0, 1.0, radius);
        let rel = (q - exact).norm() / exact.norm();
        checks.push((rel < QUADRATURE_REL, format!("R={radius:e}: rel err {rel:.2e}")));
    }
    outcome("quadrature-oracle", &checks)
}

fn velocity_decomposition() -> Outcome {
    let p = TetheredParams::default();
    let sources = p.initial_sources().unwrap();
    let fluid = p.fluid().unwrap();
    let u_eps = DirectSum.velocity(&[Vec2::ZERO], &sources, &fluid)[0];
    let u_r = correction_velocity(&sources, fluid.mu, 1e3);
    outcome(
        "velocity-decomposition",
        &[
            (
                (U_EPS_RANGE.0..=U_EPS_RANGE.1).contains(&u_eps.x),
                format!("u_eps_x = {:.3} in {:?}", u_eps.x, U_EPS_RANGE),
            ),
            (
                (U_R_RANGE.0..=U_R_RANGE.1).contains(&u_r.x),
                format!("u_R_x = {:.3} in {:?}", u_r.x, U_R_RANGE),
            ),
        ],
    )
}

fn tethered_dynamics() -> Outcome {
    let p = TetheredParams::default();
    let stepping = tethered::default_stepping();
    let t_end = stepping.t_end;
    let run = |m, r| run_tethered(&p, &settings(m, r, stepping.clone(), 1)).unwrap();
    let col = |s: &TimeSeries, c: &str| s.trace.column(c).unwrap();
    let mut checks = Vec::new();

    let none = run(CorrectionMethod::None, 1e3);
    let (t, x) = (col(&none, "t"), col(&none, "x_ymax"));
    let window: Vec<f64> = t.iter().zip(&x).filter(|(t, _)| **t >= 0.1 * t_end - 1e-12).map(|(_, x)| *x).collect();
    let increasing = window.windows(2).all(|w| w[1] > w[0]);
    checks.push((increasing, format!("none: x_ymax strictly increasing on [0.1 t_end, t_end]: {increasing}")));

    for (radius, gap_max) in [(1e3, TETHER_GAP_1E3), (1e5, TETHER_GAP_1E5)] {
        let mz = run(CorrectionMethod::MeanZero, radius);
        let xc = *col(&mz, "x_center").last().unwrap();
        checks.push((xc.abs() < TETHER_CENTER_MAX, format!("meanzero R={radius:e}: final |x_c| = {:.4}", xc.abs())));
        let circle = run(CorrectionMethod::ExplicitCircle, radius);
        let gap = col(&mz, "x_ymax")
            .iter()
            .zip(col(&circle, "x_ymax"))
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        checks.push((
            gap <= gap_max * p.radius,
            format!("R={radius:e}: max x_ymax gap {:.2}% of r (limit {:.0}%)", 100.0 * gap / p.radius, 100.0 * gap_max),
        ));
    }

    let ms = run(CorrectionMethod::MeanForceSubtraction, 1e3);
    let first = &ms.snapshots.first().unwrap().nodes;
    let moved = ms
        .snapshots
        .iter()
        .flat_map(|s| s.nodes.iter().zip(first.iter()).map(|(a, b)| a.distance(*b)))
        .fold(0.0f64, f64::max);
    let speed = col(&ms, "max_speed").iter().fold(0.0f64, |m, v| m.max(*v));
    checks.push((moved == 0.0 && speed == 0.0, format!("meansub: max displacement {moved:e}, max speed {speed:e}")));
    outcome("tethered-dynamics", &checks)
}

fn motility_run(p: &MotilityParams, method: CorrectionMethod) -> MotilityOutput {
    run_motility(p, &settings(method, 1e3, motility::default_stepping(), motility::DEFAULT_SEED)).unwrap()
}

/// Displacements of rigid, k = 10, 25, 50 at the earliest final time.
fn ordering(base: &MotilityParams) -> (Vec<MotilityOutput>, f64, Vec<f64>) {
    let variants = [
        MotilityParams {
            rigid: Some(RigidMode::NoSlip),
            ..base.clone()
        },
        MotilityParams {
            k_teth: 10.0,
            ..base.clone()
        },
        MotilityParams {
            k_teth: 25.0,
            ..base.clone()
        },
        MotilityParams {
            k_teth: 50.0,
            ..base.clone()
        },
    ];
    let outs: Vec<MotilityOutput> = std::thread::scope(|s| {
        let handles: Vec<_> = variants
            .iter()
            .map(|p| s.spawn(move || motility_run(p, CorrectionMethod::MeanZero)))
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let t_min = outs.iter().map(|o| o.t_final).fold(f64::INFINITY, f64::min);
    let d = outs.iter().map(|o| o.displacement_at(t_min).unwrap()).collect();
    (outs, t_min, d)
}

fn ordered(d: &[f64]) -> bool {
    d[1] <= d[2] && d[2] <= d[3] && d[3] <= d[0]
}

fn motility_ordering() -> Outcome {
    let full = MotilityParams::default();
    let half = MotilityParams {
        cortex_n: HALF_CORTEX_N,
        nucleus_n: HALF_NUCLEUS_N,
        eps: HALF_EPS,
        ..MotilityParams::default()
    };
    let (outs, t_min, d) = ordering(&full);
    let (_, t_half, d_half) = ordering(&half);
    let cycle = outs[0].first_cycle_time();
    let cycle_ok = cycle.is_some_and(|c| (c - RIGID_CYCLE_TIME).abs() <= RIGID_CYCLE_REL * RIGID_CYCLE_TIME);
    let fmt = |d: &[f64]| format!("rigid {:.4}, k10 {:.4}, k25 {:.4}, k50 {:.4}", d[0], d[1], d[2], d[3]);
    outcome(
        "motility-ordering",
        &[
            (ordered(&d), format!("full at t={t_min:.3}: {}", fmt(&d))),
            (
                cycle_ok,
                format!("rigid cycle {:?} s vs {RIGID_CYCLE_TIME} +/- {}%", cycle, 100.0 * RIGID_CYCLE_REL),
            ),
            (ordered(&d_half), format!("half at t={t_half:.3}: {}", fmt(&d_half))),
        ],
    )
}

fn artificial_equilibrium() -> Outcome {
    let p = MotilityParams {
        k_teth: 50.0,
        ..MotilityParams::default()
    };
    let (ms, mz) = std::thread::scope(|s| {
        let a = s.spawn(|| motility_run(&p, CorrectionMethod::MeanForceSubtraction));
        let b = s.spawn(|| motility_run(&p, CorrectionMethod::MeanZero));
        (a.join().unwrap(), b.join().unwrap())
    });
    let shifts: Vec<Vec2> = ms.ecm_final.iter().zip(&ms.ecm_initial).map(|(a, b)| *a - *b).collect();
    let mean = shifts.iter().copied().sum::<Vec2>() / shifts.len() as f64;
    let mut spread = 0.0f64;
    for a in &shifts {
        for b in &shifts {
            spread = spread.max((*a - *b).norm());
        }
    }
    let common = mean.norm() > MEANSUB_SHIFT_MIN && spread <= MEANSUB_AGREE_REL * mean.norm();
    let mz_max = mz
        .ecm_final
        .iter()
        .zip(&mz.ecm_initial)
        .map(|(a, b)| a.distance(*b))
        .fold(0.0f64, f64::max);
    outcome(
        "artificial-equilibrium",
        &[
            (
                common,
                format!(
                    "meansub k=50: common shift ({:.4}, {:.4}), |shift| {:.4} (need > {MEANSUB_SHIFT_MIN}), pairwise spread {:.4}",
                    mean.x,
                    mean.y,
                    mean.norm(),
                    spread
                ),
            ),
            (mz_max < MEANZERO_NODE_MAX, format!("meanzero k=50: max node displacement {mz_max:.4}")),
        ],
    )
}

fn hausdorff(a: &[Vec2], b: &[Vec2]) -> f64 {
    let one = |a: &[Vec2], b: &[Vec2]| {
        a.iter()
            .map(|p| b.iter().map(|q| p.distance(*q)).fold(f64::INFINITY, f64::min))
            .fold(0.0f64, f64::max)
    };
    one(a, b).max(one(b, a))
}

fn blebbing_dichotomy() -> Outcome {
    let run = |r_cortex: f64, t_end: f64| {
        let p = BlebbingParams {
            r_cortex,
            ..BlebbingParams::default()
        };
        let stepping = Stepping {
            t_end,
            ..blebbing::default_stepping()
        };
        run_blebbing(&p, &settings(CorrectionMethod::MeanZero, 1e3, stepping, 1)).unwrap()
    };
    let (a, b): (BlebbingOutput, BlebbingOutput) = std::thread::scope(|s| {
        let a = s.spawn(|| run(9.90, 10.0));
        let b = s.spawn(|| run(9.85, 5.0));
        (a.join().unwrap(), b.join().unwrap())
    });
    let p_at = |o: &BlebbingOutput, t: f64| {
        let ts = o.series.trace.column("t").unwrap();
        let ps = o.series.trace.column("p_center").unwrap();
        ts.iter().zip(&ps).find(|(x, _)| (**x - t).abs() < 1e-9).map(|(_, p)| *p).unwrap()
    };
    let stable = (p_at(&a, 10.0) - p_at(&a, 0.0)).abs() / p_at(&a, 0.0).abs();
    let drop = (p_at(&b, 0.0) - p_at(&b, 1.0)) / p_at(&b, 0.0).abs();
    let mut checks = vec![
        (
            stable < BLEB_STABLE_REL,
            format!(
                "9.90: p(0) = {:.3}, p(10) = {:.3}, change {:.2}%",
                p_at(&a, 0.0),
                p_at(&a, 10.0),
                100.0 * stable
            ),
        ),
        (
            drop > BLEB_DROP_MIN,
            format!("9.85: p(0) = {:.3}, p(1) = {:.3}, drop {:.1}%", p_at(&b, 0.0), p_at(&b, 1.0), 100.0 * drop),
        ),
    ];
    let mut worst = String::new();
    let mut ok = true;
    for t in [0.1, 1.0, 5.0] {
        let h = hausdorff(&a.membrane_at(t).unwrap().nodes, &b.membrane_at(t).unwrap().nodes);
        ok &= h < BLEB_HAUSDORFF_MAX;
        let _ = write!(worst, " t={t}: {h:.4}");
    }
    checks.push((ok, format!("membrane Hausdorff{worst}")));
    outcome("blebbing-dichotomy", &checks)
}

fn rel_sum(f: &[Vec2]) -> f64 {
    let total: Vec2 = f.iter().copied().sum();
    let scale: f64 = f.iter().map(|v| v.norm()).sum();
    total.norm() / scale
}

fn structural_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checks = Vec::new();

    let n = 50;
    let nodes: Vec<Vec2> = circle_nodes(Vec2::new(0.3, -1.0), 4.0, n)
        .into_iter()
        .map(|p| p + Vec2::new(rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2)))
        .collect();
    let fiber = ClosedFiber::new(nodes, 0.45, 2.0, 30.0).unwrap();
    let r = rel_sum(&fiber_elastic_force(&fiber).unwrap());
    checks.push((r <= FORCE_SUM_REL, format!("fiber sum {r:.1e}")));

    let bp = BlebbingParams::default();
    let (membrane, cortex) = bp.initial_structures().unwrap();
    let mut adh = AdhesionState::one_to_one(bp.n, bp.k_adh);
    adh.break_links_at_membrane_nodes(&[22, 23, 24, 25, 26, 27, 28]);
    let (fm, fc) = adhesion_forces(&membrane, &cortex, &adh).unwrap();
    let both: Vec<Vec2> = fm.iter().chain(&fc).copied().collect();
    let r = rel_sum(&both);
    checks.push((r <= FORCE_SUM_REL, format!("adhesion action-reaction {r:.1e}")));

    let mp = MotilityParams::default();
    let (mcortex, _, network) = mp.initial_structures().unwrap();
    let ecm_max = ecm_force(&network).iter().fold(0.0f64, |m, f| m.max(f.norm()));
    checks.push((ecm_max <= FORCE_SUM_REL * mp.k_teth, format!("ECM at rest max force {ecm_max:.1e}")));

    let r = rel_sum(&protrusion_forces(&mcortex, 3, mp.f0).unwrap());
    checks.push((r <= FORCE_SUM_REL, format!("protrusion sum {r:.1e}")));

    let tp = TetheredParams::default();
    let sources = tp.initial_sources().unwrap();
    let fluid = tp.fluid().unwrap();
    let radius = 1e3;
    let m = 10_000;
    let circle: Vec<Vec2> = (0..m).map(|j| Vec2::from_angle(2.0 * PI * j as f64 / m as f64) * radius).collect();
    let raw = total_velocity(&circle, &sources, &fluid, &CorrectionConfig::new(CorrectionMethod::None, radius)).unwrap();
    let fixed = total_velocity(&circle, &sources, &fluid, &CorrectionConfig::new(CorrectionMethod::MeanZero, radius)).unwrap();
    let raw_mean = raw.iter().copied().sum::<Vec2>() / m as f64;
    let fixed_mean = fixed.iter().copied().sum::<Vec2>() / m as f64;
    let r = fixed_mean.norm() / raw_mean.norm();
    checks.push((r < CERTIFICATE_REL, format!("zero-mean certificate {r:.1e}")));

    let evals: Vec<Vec2> = (0..40).map(|_| Vec2::new(rng.gen_range(-30.0..30.0), rng.gen_range(-30.0..30.0))).collect();
    let bits = |p: Vec<f64>| p.into_iter().map(f64::to_bits).collect::<Vec<_>>();
    let base = bits(superpose_pressure(&evals, &sources, fluid.eps));
    let same = CorrectionMethod::ALL.iter().all(|&method| {
        let flow = Flow::new(fluid, CorrectionConfig::new(method, radius)).unwrap();
        bits(flow.pressure(&evals, &sources)) == base
    });
    checks.push((same, format!("pressure bit-identical across methods: {same}")));

    let n = 120;
    let a = DenseMatrix::from_row_major(n, n, (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
    let f = lu_factor(&a).unwrap();
    let pa = f.permute_rows(&a);
    let lu = f.lower().matmul(&f.upper()).unwrap();
    let mut recon = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            recon = recon.max((pa.get(i, j) - lu.get(i, j)).abs());
        }
    }
    let recon = recon / a.max_abs();
    let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let x = lu_solve(&f, &b).unwrap();
    let res = a.matvec(&x).unwrap().iter().zip(&b).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
    let bmax = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    checks.push((
        recon < LU_REL && res / bmax < LU_REL,
        format!("LU reconstruction {recon:.1e}, solve residual {:.1e}", res / bmax),
    ));

    let small = MotilityParams {
        cortex_n: HALF_CORTEX_N,
        nucleus_n: HALF_NUCLEUS_N,
        eps: HALF_EPS,
        ..MotilityParams::default()
    };
    let stepping = Stepping {
        t_end: 0.3,
        ..motility::default_stepping()
    };
    let go = || run_motility(&small, &settings(CorrectionMethod::MeanZero, 1e3, stepping.clone(), 9)).unwrap();
    let same = go() == go();
    checks.push((same, format!("determinism under fixed seed: {same}")));
    outcome("structural-invariants", &checks)
}

#[test]
fn acceptance() {
    let criteria: [fn() -> Outcome; 9] = [
        sigma_thresholds,
        radius_bounds_reproduced,
        quadrature_oracle,
        velocity_decomposition,
        tethered_dynamics,
        motility_ordering,
        artificial_equilibrium,
        blebbing_dichotomy,
        structural_invariants,
    ];
    let results: Vec<Outcome> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria.iter().map(|c| s.spawn(c)).collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut unexpected = Vec::new();
    for r in &results {
        let known = KNOWN_UNMET.contains(&r.name);
        let tag = if r.pass { "PASS" } else { "FAIL" };
        let note = if !r.pass && known { " (known, see decision log)" } else { "" };
        println!("{tag} {}{note}: {}", r.name, r.detail);
        if !r.pass && !known {
            unexpected.push(r.name);
        }
    }
    assert!(unexpected.is_empty(), "failed: {unexpected:?}");
}
