mod common;

use cbsmp::baselines::joint_oracle;
use cbsmp::cbs::{CostMetric, Query, QueryConfig, QueryOutcome};
use cbsmp::conflict::{config_at_timestep, find_first_conflict};
use cbsmp::geometry::{
    in_collision_pair, interpolate, is_valid_edge, Configuration, ConvexPolygon, Environment, RobotModel, Vec2,
};
use cbsmp::roadmap::{build_roadmap, constrained_shortest_path, grow_roadmap, shortest_path, Constraint, TimedPath};
use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn robot_strategy(id: usize) -> impl Strategy<Value = (RobotModel, Configuration)> {
    prop_oneof![
        (0.1..1.5f64, -5.0..5.0f64, -5.0..5.0f64)
            .prop_map(move |(r, x, y)| (RobotModel::disk(id, r, 1.0).unwrap(), Configuration::xy(x, y))),
        (0.2..1.5f64, 0.2..1.5f64, -5.0..5.0f64, -5.0..5.0f64).prop_map(move |(w, h, x, y)| {
            let verts = vec![Vec2::new(-w, -h), Vec2::new(w, -h), Vec2::new(w, h), Vec2::new(-w, h)];
            (RobotModel::polygon(id, verts, 1.0).unwrap(), Configuration::xy(x, y))
        }),
        (-3.0..3.0f64, -3.0..3.0f64, -3.1..3.1f64, -2.0..2.0f64).prop_map(move |(bx, by, a, b)| {
            let r = RobotModel::chain(id, Vec2::new(bx, by), vec![1.0, 1.0], 0.2, 1.0).unwrap();
            (r, Configuration::new(vec![a, b]))
        }),
    ]
}

proptest! {
    #[test]
    fn collision_is_symmetric((ri, qi) in robot_strategy(0), (rj, qj) in robot_strategy(1)) {
        prop_assert_eq!(
            in_collision_pair(&ri, &qi, &rj, &qj).unwrap(),
            in_collision_pair(&rj, &qj, &ri, &qi).unwrap()
        );
    }

    #[test]
    fn disk_collision_is_the_distance_test(
        ra in 0.1..2.0f64, rb in 0.1..2.0f64,
        ax in -5.0..5.0f64, ay in -5.0..5.0f64, bx in -5.0..5.0f64, by in -5.0..5.0f64,
    ) {
        let (a, b) = (RobotModel::disk(0, ra, 1.0).unwrap(), RobotModel::disk(1, rb, 1.0).unwrap());
        let d = ((ax - bx).powi(2) + (ay - by).powi(2)).sqrt();
        // Skip the razor-thin band where rounding decides.
        prop_assume!((d - ra - rb).abs() > 1e-9);
        let hit = in_collision_pair(&a, &Configuration::xy(ax, ay), &b, &Configuration::xy(bx, by)).unwrap();
        prop_assert_eq!(hit, d <= ra + rb);
    }

    #[test]
    fn interpolation_is_lipschitz((r, qa) in robot_strategy(0), (_, qb_raw) in robot_strategy(0), s in 0.0..0.99f64, ds in 0.0..0.01f64) {
        // Same robot kind for both ends.
        prop_assume!(qa.dof() == qb_raw.dof());
        let qb = qb_raw;
        let a = interpolate(&r, &qa, &qb, s).unwrap();
        let b = interpolate(&r, &qa, &qb, (s + ds).min(1.0)).unwrap();
        let bound = (r.distance(&qa, &qb) + std::f64::consts::PI * qa.dof() as f64) * ds;
        prop_assert!(r.distance(&a, &b) <= bound + 1e-9);
    }

    #[test]
    fn edge_refinement_is_monotone(ax in 0.5..9.5f64, ay in 0.5..9.5f64, bx in 0.5..9.5f64, by in 0.5..9.5f64, step in 0.05..3.0f64) {
        let wall = ConvexPolygon::rect(Vec2::new(4.8, 2.0), Vec2::new(5.2, 8.0)).unwrap();
        let env = Environment::new(cbsmp::geometry::Aabb::new(Vec2::new(0.0, 0.0), Vec2::new(10.0, 10.0)), vec![wall]).unwrap();
        let r = RobotModel::disk(0, 0.3, 1.0).unwrap();
        let (a, b) = (Configuration::xy(ax, ay), Configuration::xy(bx, by));
        if !is_valid_edge(&env, &r, &a, &b, step).unwrap() {
            for finer in [step / 2.0, step / 3.0, step / 8.0] {
                prop_assert!(!is_valid_edge(&env, &r, &a, &b, finer).unwrap());
            }
        }
    }

    #[test]
    fn unconstrained_search_matches_bellman_ford(seed in any::<u64>(), n in 2usize..20, extra in 0usize..30, goal_pick in any::<usize>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = random_roadmap(&mut rng, 0, n, extra);
        let robot = RobotModel::disk(0, 0.5, 1.0).unwrap();
        let goal = goal_pick % n;
        let dt = 0.5;
        let bf = bellman_ford_steps(&r, 0, dt);
        let p = shortest_path(&r, &robot, 0, goal, dt, 10_000).unwrap();
        prop_assert_eq!(p.as_ref().map(|p| u64::from(p.duration())), bf[goal]);
        if let Some(p) = p {
            p.validate(&r).unwrap();
        }
    }

    #[test]
    fn constraints_never_decrease_cost(seed in any::<u64>(), n in 2usize..16, extra in 0usize..20, k in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = random_roadmap(&mut rng, 0, n, extra);
        let robot = RobotModel::disk(0, 0.5, 1.0).unwrap();
        let other = RobotModel::disk(1, 0.5, 1.0).unwrap();
        let goal = n - 1;
        let (dt, horizon) = (0.5, 120);
        let mut constraints = Vec::new();
        let mut last = constrained_shortest_path(&r, &robot, 0, goal, &constraints, dt, horizon).unwrap().map(|p| p.duration());
        for _ in 0..k {
            constraints.push(Constraint {
                agent: 0,
                timestep: rng.gen_range(1..40),
                other_robot: other.clone(),
                other_config: Configuration::xy(rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)),
            });
            let next = constrained_shortest_path(&r, &robot, 0, goal, &constraints, dt, horizon).unwrap();
            if let Some(p) = &next {
                p.validate(&r).unwrap();
            }
            let next = next.map(|p| p.duration());
            match (last, next) {
                (Some(a), Some(b)) => prop_assert!(b >= a),
                (None, Some(_)) => prop_assert!(false, "a constraint made an infeasible query feasible"),
                _ => {}
            }
            last = next;
        }
    }

    #[test]
    fn roadmap_construction_is_deterministic(seed in any::<u64>(), n in 1usize..30, k in 1usize..8) {
        let env = Environment::open(10.0, 10.0).unwrap();
        let robot = RobotModel::disk(0, 0.4, 1.0).unwrap();
        let a = build_roadmap(&env, &robot, n, k, seed).unwrap();
        let b = build_roadmap(&env, &robot, n, k, seed).unwrap();
        prop_assert_eq!(a.to_text(), b.to_text());
        let ga = grow_roadmap(&a, &env, &robot, 5, k, seed ^ 1).unwrap();
        let gb = grow_roadmap(&b, &env, &robot, 5, k, seed ^ 1).unwrap();
        prop_assert_eq!(ga.to_text(), gb.to_text());
        for e in a.edges() {
            prop_assert!(ga.has_edge(e.a, e.b));
        }
    }
}

fn crossing_paths(seed: u64, agents: usize) -> (Vec<TimedPath>, Vec<cbsmp::roadmap::Roadmap>, Vec<RobotModel>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let robots: Vec<RobotModel> = (0..agents).map(|i| RobotModel::disk(i, 0.5, 1.0).unwrap()).collect();
    let mut roadmaps = Vec::new();
    let mut paths = Vec::new();
    for (i, robot) in robots.iter().enumerate() {
        let r = random_roadmap(&mut rng, i, 6, 4);
        let p = shortest_path(&r, robot, 0, 5, 0.5, 1000).unwrap().unwrap();
        roadmaps.push(r);
        paths.push(p);
    }
    (paths, roadmaps, robots)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn first_conflict_is_earliest(seed in any::<u64>(), agents in 2usize..5) {
        let (paths, roadmaps, robots) = crossing_paths(seed, agents);
        let found = find_first_conflict(&paths, &roadmaps, &robots).unwrap();
        let horizon = paths.iter().map(TimedPath::duration).max().unwrap();
        let earliest = (0..=horizon).find(|&t| {
            (0..agents).any(|i| (i + 1..agents).any(|j| {
                let qi = config_at_timestep(&paths[i], &roadmaps[i], &robots[i], t);
                let qj = config_at_timestep(&paths[j], &roadmaps[j], &robots[j], t);
                in_collision_pair(&robots[i], &qi, &robots[j], &qj).unwrap()
            }))
        });
        prop_assert_eq!(found.map(|c| c.timestep), earliest);
    }

    #[test]
    fn conflict_is_permutation_invariant(seed in any::<u64>()) {
        let (paths, roadmaps, robots) = crossing_paths(seed, 3);
        let a = find_first_conflict(&paths, &roadmaps, &robots).unwrap();
        // Reverse the agent order; ids travel with their paths.
        let (rp, rr, rb): (Vec<_>, Vec<_>, Vec<_>) =
            (paths.iter().rev().cloned().collect(), roadmaps.iter().rev().cloned().collect(), robots.iter().rev().cloned().collect());
        let b = find_first_conflict(&rp, &rr, &rb).unwrap();
        prop_assert_eq!(a.as_ref().map(|c| c.timestep), b.as_ref().map(|c| c.timestep));
        if let (Some(a), Some(b)) = (a, b) {
            // Both pairs must collide at that timestep, whichever was reported.
            for c in [&a, &b] {
                let ri = robots.iter().find(|r| r.id == c.agent_i).unwrap();
                let rj = robots.iter().find(|r| r.id == c.agent_j).unwrap();
                prop_assert!(in_collision_pair(ri, &c.config_i, rj, &c.config_j).unwrap());
            }
        }
    }

    #[test]
    fn oracle_matches_single_agent_search(seed in any::<u64>(), n in 2usize..12, extra in 0usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = random_roadmap(&mut rng, 0, n, extra);
        let robot = RobotModel::disk(0, 0.5, 1.0).unwrap();
        let p = shortest_path(&r, &robot, 0, n - 1, 0.5, 200).unwrap();
        let o = joint_oracle(std::slice::from_ref(&r), std::slice::from_ref(&robot), &[0], &[n - 1], 0.5, 200, CostMetric::SumOfCosts).unwrap();
        prop_assert_eq!(p.map(|p| u64::from(p.duration())), o.map(|o| o.cost_steps));
    }

    #[test]
    fn conflict_tree_invariants(seed in 0u64..400) {
        let Some(m) = micro(seed, 2, 8) else { return Ok(()) };
        let config = QueryConfig {
            metric: CostMetric::SumOfCosts,
            max_ct_nodes: Some(400),
            dt: m.dt,
            horizon: m.horizon,
            deadline: None,
        };
        let (rep, tree) = Query::new(&m.roadmaps, &m.robots, &m.start_ids, &m.goal_ids, config).unwrap().run_with_tree(true).unwrap();
        prop_assert!(rep.expanded_costs.windows(2).all(|w| w[0] <= w[1]), "expansion order {:?}", rep.expanded_costs);
        prop_assert_eq!(tree.len(), rep.stats.ct_generated);
        for node in &tree {
            let Some(pid) = node.parent else {
                prop_assert!(node.constraints.is_empty());
                continue;
            };
            let parent = &tree[pid];
            prop_assert_eq!(node.constraints.len(), parent.constraints.len() + 1);
            prop_assert_eq!(&node.constraints[..parent.constraints.len()], &parent.constraints[..]);
            prop_assert!(node.cost_steps >= parent.cost_steps);
            // Only the constrained agent was replanned.
            let changed = node.constraints.last().unwrap().agent;
            for (i, p) in node.paths.iter().enumerate() {
                if i != changed {
                    prop_assert_eq!(p, &parent.paths[i]);
                }
            }
        }
        if let QueryOutcome::Solved(sol) = rep.outcome {
            check_solution(&m.env, &m.robots, &m.roadmaps, &m.starts, &m.goals, &sol, None).map_err(TestCaseError::fail)?;
        }
    }
}
