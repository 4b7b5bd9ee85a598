use proptest::prelude::*;

use regstokes_core::constraint::{correction_velocity, subtract_mean_force, total_velocity};
use regstokes_core::kernels::{reg_pressure, reg_velocity, superpose_pressure};
use regstokes_core::linalg::{lu_factor, lu_solve, DenseMatrix};
use regstokes_core::scenarios::protrusion_forces;
use regstokes_core::structures::{
    adhesion_forces, circle_nodes, delaunay_edges, ecm_force, fiber_elastic_force, tether_force, AdhesionState,
    ClosedFiber, SpringNetwork,
};
use regstokes_core::{CorrectionConfig, CorrectionMethod, FluidParams, PointForceSet, Vec2};

fn vec2(range: f64) -> impl Strategy<Value = Vec2> {
    (-range..range, -range..range).prop_map(|(x, y)| Vec2::new(x, y))
}

fn sources(max: usize) -> impl Strategy<Value = PointForceSet> {
    prop::collection::vec((vec2(20.0), vec2(5.0)), 1..max).prop_map(|pairs| {
        let (x, f): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        PointForceSet::new(x, f).unwrap()
    })
}

/// Circle nodes with small radial perturbations, so the curve stays simple.
fn perturbed_fiber() -> impl Strategy<Value = ClosedFiber> {
    (6usize..60, 0.5f64..20.0, 0.0f64..2.0, 0.1f64..100.0).prop_flat_map(|(n, r, gamma, k)| {
        prop::collection::vec(-0.2f64..0.2, n).prop_map(move |bumps| {
            let nodes = circle_nodes(Vec2::new(1.0, -2.0), r, n)
                .into_iter()
                .zip(bumps)
                .map(|(p, b)| Vec2::new(1.0, -2.0) + (p - Vec2::new(1.0, -2.0)) * (1.0 + b))
                .collect();
            ClosedFiber::new(nodes, 2.0 * std::f64::consts::PI * r / n as f64, gamma, k).unwrap()
        })
    })
}

/// Points on a coarse jittered grid: distinct, and never three collinear
/// or four cocircular in practice.
fn scattered_points() -> impl Strategy<Value = Vec<Vec2>> {
    (3usize..6, 3usize..6).prop_flat_map(|(nx, ny)| {
        prop::collection::vec(vec2(0.3), nx * ny).prop_map(move |jitter| {
            (0..nx * ny)
                .map(|i| Vec2::new((i % nx) as f64, (i / nx) as f64) + jitter[i])
                .collect()
        })
    })
}

fn sorted_edges(mut e: Vec<(usize, usize)>) -> Vec<(usize, usize)> {
    e.sort_unstable();
    e
}

proptest! {
    #[test]
    fn kernels_are_linear_in_force(x in vec2(10.0), x0 in vec2(10.0), f in vec2(10.0), c in -5.0f64..5.0) {
        let params = FluidParams::new(1.3, 0.2).unwrap();
        let u1 = reg_velocity(x, x0, f, &params) * c;
        let u2 = reg_velocity(x, x0, f * c, &params);
        prop_assert!((u1 - u2).norm() <= 1e-12 * (1.0 + u1.norm()));
        let p1 = reg_pressure(x, x0, f, 0.2) * c;
        let p2 = reg_pressure(x, x0, f * c, 0.2);
        prop_assert!((p1 - p2).abs() <= 1e-12 * (1.0 + p1.abs()));
    }

    #[test]
    fn velocity_even_under_swap(x in vec2(10.0), x0 in vec2(10.0), f in vec2(10.0)) {
        let params = FluidParams::new(1.0, 0.05).unwrap();
        let a = reg_velocity(x, x0, f, &params);
        let b = reg_velocity(x0, x, f, &params);
        prop_assert!((a - b).norm() <= 1e-12 * (1.0 + a.norm()));
    }

    #[test]
    fn fiber_forces_telescope(fiber in perturbed_fiber()) {
        let f = fiber_elastic_force(&fiber).unwrap();
        let total: Vec2 = f.iter().sum();
        let scale: f64 = f.iter().map(|v| v.norm()).sum();
        prop_assert!(total.norm() <= 1e-12 * scale.max(1e-300));
    }

    #[test]
    fn adhesion_is_action_reaction(
        n in 8usize..64,
        shift in vec2(0.5),
        k in 1.0f64..500.0,
        broken in prop::collection::vec(any::<bool>(), 64),
    ) {
        let membrane = ClosedFiber::circle(Vec2::ZERO, 10.0, n, 0.1, 1.0).unwrap();
        let nodes = circle_nodes(shift, 9.8, n);
        let cortex = ClosedFiber::new(nodes, membrane.ref_spacing, 0.1, 1.0).unwrap();
        let mut adh = AdhesionState::one_to_one(n, k);
        let cut: Vec<usize> = (0..n).filter(|&i| broken[i]).collect();
        adh.break_links_at_membrane_nodes(&cut);
        let (fm, fc) = adhesion_forces(&membrane, &cortex, &adh).unwrap();
        let total: Vec2 = fm.iter().chain(&fc).sum();
        let scale: f64 = fm.iter().map(|v| v.norm()).sum();
        prop_assert!(total.norm() <= 1e-12 * scale.max(1e-300));
    }

    #[test]
    fn ecm_at_rest_is_force_free(points in scattered_points(), k in 1.0f64..100.0) {
        let edges = delaunay_edges(&points).unwrap();
        let net = SpringNetwork::at_rest(points, edges, k).unwrap();
        for f in ecm_force(&net) {
            prop_assert!(f.norm() < 1e-12 * k);
        }
    }

    #[test]
    fn tether_forces_shift_uniformly_under_translation(
        n in 3usize..40,
        offset in vec2(5.0),
        k in 0.1f64..10.0,
    ) {
        let x = circle_nodes(Vec2::new(3.0, 1.0), 7.0, n);
        let right: Vec<Vec2> = circle_nodes(Vec2::new(60.0, 0.0), 7.0, n);
        let left: Vec<Vec2> = circle_nodes(Vec2::new(-60.0, 0.0), 7.0, n);
        let moved: Vec<Vec2> = x.iter().map(|p| *p + offset).collect();
        let f0 = tether_force(&x, &right, &left, k).unwrap();
        let f1 = tether_force(&moved, &right, &left, k).unwrap();
        let shift = f1[0] - f0[0];
        for (a, b) in f0.iter().zip(&f1) {
            prop_assert!(((*b - *a) - shift).norm() < 1e-10 * (1.0 + shift.norm()));
        }
    }

    #[test]
    fn delaunay_ignores_input_order(points in scattered_points(), seed in any::<u64>()) {
        let n = points.len();
        let mut order: Vec<usize> = (0..n).collect();
        let mut s = seed | 1;
        for i in (1..n).rev() {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            order.swap(i, (s % (i as u64 + 1)) as usize);
        }
        let shuffled: Vec<Vec2> = order.iter().map(|&i| points[i]).collect();
        let a = sorted_edges(delaunay_edges(&points).unwrap());
        let b = sorted_edges(
            delaunay_edges(&shuffled)
                .unwrap()
                .into_iter()
                .map(|(i, j)| {
                    let (p, q) = (order[i], order[j]);
                    (p.min(q), p.max(q))
                })
                .collect(),
        );
        prop_assert_eq!(a, b);
    }

    #[test]
    fn delaunay_edge_count_matches_euler(points in scattered_points()) {
        // A triangulation of n points with h on the hull has 3n - 3 - h edges.
        let n = points.len();
        let hull = convex_hull_size(&points);
        let edges = delaunay_edges(&points).unwrap();
        prop_assert_eq!(edges.len(), 3 * n - 3 - hull);
    }

    #[test]
    fn mean_subtraction_sums_to_zero(s in sources(40)) {
        let z = subtract_mean_force(&s);
        let scale: f64 = s.forces.iter().map(|f| f.norm()).sum();
        prop_assert!(z.net_force().norm() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn mean_zero_correction_zeroes_circle_mean(s in sources(12)) {
        prop_assume!(s.net_force().norm() > 1e-3);
        let params = FluidParams::new(1.0, 0.1).unwrap();
        let radius = 1e3;
        let m = 10_000;
        let circle: Vec<Vec2> = (0..m)
            .map(|j| Vec2::from_angle(2.0 * std::f64::consts::PI * j as f64 / m as f64) * radius)
            .collect();
        let config = CorrectionConfig::new(CorrectionMethod::MeanZero, radius);
        let raw = total_velocity(&circle, &s, &params, &CorrectionConfig::new(CorrectionMethod::None, radius)).unwrap();
        let raw_mean = raw.iter().sum::<Vec2>() / m as f64;
        let corrected = raw_mean + correction_velocity(&s, params.mu, radius);
        let via_config = total_velocity(&circle, &s, &params, &config).unwrap();
        let config_mean = via_config.iter().sum::<Vec2>() / m as f64;
        prop_assert!(corrected.norm() < 1e-6 * raw_mean.norm() + 1e-12);
        prop_assert!(config_mean.norm() < 1e-6 * raw_mean.norm() + 1e-12);
    }

    #[test]
    fn correction_never_changes_pressure(s in sources(20), evals in prop::collection::vec(vec2(30.0), 1..20)) {
        let eps = 0.3;
        let params = FluidParams::new(1.0, eps).unwrap();
        let before = superpose_pressure(&evals, &s, eps);
        for method in CorrectionMethod::ALL {
            let flow = regstokes_core::scenarios::Flow::new(params, CorrectionConfig::new(method, 1e3)).unwrap();
            let after = flow.pressure(&evals, &s);
            prop_assert_eq!(
                before.iter().map(|p| p.to_bits()).collect::<Vec<_>>(),
                after.iter().map(|p| p.to_bits()).collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn protrusion_forces_balance(n in 8usize..120, j in 0usize..120, f0 in 1.0f64..1000.0) {
        let cortex = ClosedFiber::circle(Vec2::new(-0.7, 0.2), 0.5, n, 0.0, 1.0).unwrap();
        let f = protrusion_forces(&cortex, j % n, f0).unwrap();
        let total: Vec2 = f.iter().sum();
        let scale: f64 = f.iter().map(|v| v.norm()).sum();
        prop_assert!(total.norm() <= 1e-12 * scale);
    }

    #[test]
    fn lu_solves_diagonally_dominant_systems(
        n in 1usize..40,
        entries in prop::collection::vec(-1.0f64..1.0, 1600),
        b in prop::collection::vec(-10.0f64..10.0, 40),
    ) {
        let mut a = DenseMatrix::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                a.set(r, c, entries[r * 40 + c] + if r == c { n as f64 } else { 0.0 });
            }
        }
        let factors = lu_factor(&a).unwrap();
        let x = lu_solve(&factors, &b[..n]).unwrap();
        let ax = a.matvec(&x).unwrap();
        let bmax = b[..n].iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        let res = ax.iter().zip(&b[..n]).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
        prop_assert!(res / bmax <= 1e-10);
    }
}

/// Number of convex hull vertices (gift wrapping; no collinear triples in
/// the generated inputs).
fn convex_hull_size(points: &[Vec2]) -> usize {
    let start = (0..points.len())
        .min_by(|&a, &b| points[a].x.total_cmp(&points[b].x).then(points[a].y.total_cmp(&points[b].y)))
        .unwrap();
    let mut count = 0;
    let mut current = start;
    loop {
        count += 1;
        let mut next = (current + 1) % points.len();
        for i in 0..points.len() {
            if i == current {
                continue;
            }
            let turn = (points[next] - points[current]).cross(points[i] - points[current]);
            if turn < 0.0 {
                next = i;
            }
        }
        current = next;
        if current == start {
            return count;
        }
    }
}
