use mrmp_core::constraints::nonconvex_residuals;
use mrmp_core::diffusion::{sample, NoiseSchedule, SamplerConfig, ZeroScore};
use mrmp_core::projection::{project_alm, project_convex, ProjectionConfig};
use mrmp_core::{MapFamily, Obstacle, ProblemInstance, RobotSpec, Trajectory};
use proptest::prelude::*;

/// Two or three robots in separate horizontal lanes that swap sides, with an
/// obstacle near the middle.
fn arb_instance(horizon: usize) -> impl Strategy<Value = ProblemInstance> {
    (2usize..=3, prop::collection::vec((-0.1f64..0.1, -0.1f64..0.1), 3), 0.04f64..0.08, (0.8f64..1.2, 0.7f64..1.3))
        .prop_map(move |(n, jitter, radius, (ox, oy))| {
            let robots = (0..n)
                .map(|i| {
                    let y = 0.4 + 0.55 * i as f64;
                    RobotSpec {
                        radius,
                        start: [0.3, y + jitter[i].0],
                        goal: [1.7, 1.9 - y + jitter[i].1],
                        v_max: 2.0 / (horizon - 1) as f64,
                    }
                })
                .collect();
            let obstacles = vec![Obstacle { center: [ox, oy], radius: 0.1 }];
            ProblemInstance::new("prop", MapFamily::Basic, 2.0, robots, obstacles, horizon, 1.0).unwrap()
        })
}

fn perturbed(instance: &ProblemInstance, noise: &[f64]) -> Trajectory {
    let mut t = Trajectory::straight_line(instance);
    for (v, n) in t.as_mut_slice().iter_mut().zip(noise.iter().cycle()) {
        *v += n;
    }
    t
}

fn noise(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.4f64..0.4, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn instance_json_round_trip_is_exact(inst in arb_instance(8)) {
        let back = ProblemInstance::from_json(&inst.to_json().unwrap()).unwrap();
        prop_assert_eq!(&back, &inst);
        for (a, b) in back.robots.iter().zip(&inst.robots) {
            prop_assert_eq!(a.start[0].to_bits(), b.start[0].to_bits());
            prop_assert_eq!(a.v_max.to_bits(), b.v_max.to_bits());
        }
    }

    #[test]
    fn separation_radii_are_symmetric(inst in arb_instance(4)) {
        let n = inst.num_robots();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    prop_assert_eq!(
                        inst.separation_radius_robots(i, j).unwrap(),
                        inst.separation_radius_robots(j, i).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn robot_pair_residuals_are_symmetric(inst in arb_instance(6), n in noise(36)) {
        let t = perturbed(&inst, &n);
        let res = nonconvex_residuals(&t, &inst).unwrap();
        for i in 0..inst.num_robots() {
            for j in 0..inst.num_robots() {
                if i != j {
                    for h in 0..6 {
                        prop_assert_eq!(res.robot_pair(i, j, h), res.robot_pair(j, i, h));
                    }
                }
            }
        }
    }

    #[test]
    fn convex_projection_is_nonexpansive(inst in arb_instance(10), a in noise(60), b in noise(60)) {
        let tol = 1e-9;
        let (x, y) = (perturbed(&inst, &a), perturbed(&inst, &b));
        let (px, py) = (project_convex(&x, &inst, tol).unwrap(), project_convex(&y, &inst, tol).unwrap());
        prop_assert!(px.distance(&py) <= x.distance(&y) + 2.0 * tol);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn penalty_follows_geometric_schedule(
        inst in arb_instance(12),
        n in noise(72),
        zeta in 1.0f64..1.1,
        rho in 0.5f64..20.0,
    ) {
        let config = ProjectionConfig { zeta, rho_init: rho, max_outer_iters: 30, ..Default::default() };
        let out = project_alm(&perturbed(&inst, &n), &inst, &config).unwrap();
        for row in &out.trace {
            prop_assert_eq!(row.rho.to_bits(), (rho * zeta.powi(row.k as i32)).to_bits());
        }
    }

    #[test]
    fn converged_projection_is_feasible_and_nearly_idempotent(inst in arb_instance(12), n in noise(72)) {
        let config = ProjectionConfig::default();
        let delta = config.delta_a.max(config.delta_o);
        let once = project_alm(&perturbed(&inst, &n), &inst, &config).unwrap();
        prop_assume!(once.converged);
        let res = nonconvex_residuals(&once.trajectory, &inst).unwrap();
        prop_assert!(res.max_violation() <= delta);
        let twice = project_alm(&once.trajectory, &inst, &config).unwrap();
        prop_assert!(twice.trajectory.distance(&once.trajectory) <= 10.0 * delta);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn sampler_output_has_exact_endpoints(inst in arb_instance(12), seed in any::<u64>()) {
        let schedule = NoiseSchedule::default();
        let config = SamplerConfig { seed, inner_iters: 2, ..Default::default() };
        let out = sample(&inst, &ZeroScore { dim: inst.num_robots() * 24 }, &schedule, &config).unwrap();
        let t = &out.trajectory;
        for (i, r) in inst.robots.iter().enumerate() {
            let (s, g) = (t.point(i, 0), t.point(i, 11));
            prop_assert!((s[0] - r.start[0]).abs() <= 1e-6 && (s[1] - r.start[1]).abs() <= 1e-6);
            prop_assert!((g[0] - r.goal[0]).abs() <= 1e-6 && (g[1] - r.goal[1]).abs() <= 1e-6);
        }
    }
}
