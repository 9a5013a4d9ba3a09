#![allow(dead_code)]

use cbsmp::baselines::joint_oracle;
use cbsmp::cbs::{cbs_query, unconstrained_steps, CostMetric, QueryConfig, QueryOutcome, RoadmapGrower, PlannerParams, Solution};
use cbsmp::geometry::{
    in_collision_pair, is_valid_config, is_valid_edge, Configuration, ConvexPolygon, Environment, RobotModel, Vec2,
};
use cbsmp::roadmap::{edge_steps, Roadmap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Configuration at timestep `t`, recomputed from scratch.
pub fn config_at(robot: &RobotModel, r: &Roadmap, vertices: &[usize], arrivals: &[u32], t: u32) -> Configuration {
    let last = vertices.len() - 1;
    if t >= arrivals[last] {
        return r.vertex(vertices[last]).clone();
    }
    let k = (0..last).find(|&k| arrivals[k] <= t && t < arrivals[k + 1]).unwrap();
    let s = f64::from(t - arrivals[k]) / f64::from(arrivals[k + 1] - arrivals[k]);
    let (a, b) = (r.vertex(vertices[k]).values(), r.vertex(vertices[k + 1]).values());
    let vals = a
        .iter()
        .zip(b)
        .map(|(x, y)| {
            if robot.is_chain() {
                let tau = std::f64::consts::TAU;
                let d = (y - x + std::f64::consts::PI).rem_euclid(tau) - std::f64::consts::PI;
                (x + d * s + std::f64::consts::PI).rem_euclid(tau) - std::f64::consts::PI
            } else {
                x + (y - x) * s
            }
        })
        .collect();
    Configuration::new(vals)
}

/// Full-scan validity check: roadmap edges with matching timing, valid
/// motions against the environment, and no pairwise collision at any
/// timestep up to the makespan.
pub fn check_solution(
    env: &Environment,
    robots: &[RobotModel],
    roadmaps: &[Roadmap],
    starts: &[Configuration],
    goals: &[Configuration],
    sol: &Solution,
    step: Option<f64>,
) -> Result<(), String> {
    let dt = sol.dt;
    for (i, p) in sol.paths.iter().enumerate() {
        let r = &roadmaps[i];
        if r.vertex(p.vertices[0]) != &starts[i] && robots[i].distance(r.vertex(p.vertices[0]), &starts[i]) > 1e-9 {
            return Err(format!("agent {i} does not start at its start"));
        }
        if robots[i].distance(r.vertex(*p.vertices.last().unwrap()), &goals[i]) > 1e-9 {
            return Err(format!("agent {i} does not end at its goal"));
        }
        if p.arrivals[0] != 0 {
            return Err(format!("agent {i} departs late"));
        }
        for k in 1..p.vertices.len() {
            let (a, b) = (p.vertices[k - 1], p.vertices[k]);
            let w = r.weight(a, b).ok_or(format!("agent {i}: no edge {a}-{b}"))?;
            if p.arrivals[k] - p.arrivals[k - 1] != edge_steps(w, dt) {
                return Err(format!("agent {i}: edge {a}-{b} timing"));
            }
            let s = step.unwrap_or_else(|| robots[i].default_edge_step());
            if !is_valid_edge(env, &robots[i], r.vertex(a), r.vertex(b), s).unwrap() {
                return Err(format!("agent {i}: edge {a}-{b} invalid"));
            }
        }
    }
    let makespan = sol.paths.iter().map(|p| p.duration()).max().unwrap_or(0);
    for t in 0..=makespan {
        let qs: Vec<Configuration> = sol
            .paths
            .iter()
            .enumerate()
            .map(|(i, p)| config_at(&robots[i], &roadmaps[i], &p.vertices, &p.arrivals, t))
            .collect();
        for i in 0..qs.len() {
            if !is_valid_config(env, &robots[i], &qs[i]).unwrap() {
                return Err(format!("agent {i} invalid at t={t}"));
            }
            for j in i + 1..qs.len() {
                if in_collision_pair(&robots[i], &qs[i], &robots[j], &qs[j]).unwrap() {
                    return Err(format!("agents {i},{j} collide at t={t}"));
                }
            }
        }
    }
    Ok(())
}

pub struct Micro {
    pub env: Environment,
    pub robots: Vec<RobotModel>,
    pub starts: Vec<Configuration>,
    pub goals: Vec<Configuration>,
    pub roadmaps: Vec<Roadmap>,
    pub start_ids: Vec<usize>,
    pub goal_ids: Vec<usize>,
    pub dt: f64,
    pub horizon: u32,
}

/// Small random instance with connected endpoints, or `None` when the
/// generated roadmaps leave some endpoint unreachable.
pub fn micro(seed: u64, agents: usize, samples: usize) -> Option<Micro> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let obstacles = if rng.gen_bool(0.5) {
        vec![ConvexPolygon::rect(Vec2::new(3.5, 3.5), Vec2::new(4.5, 4.5)).unwrap()]
    } else {
        Vec::new()
    };
    let env = Environment::new(cbsmp::geometry::Aabb::new(Vec2::new(0.0, 0.0), Vec2::new(8.0, 8.0)), obstacles).ok()?;
    let robots: Vec<RobotModel> = (0..agents).map(|i| RobotModel::disk(i, 0.6, 1.0).unwrap()).collect();
    let mut starts = Vec::new();
    let mut goals = Vec::new();
    for i in 0..agents {
        for set in [&mut starts, &mut goals] {
            let q = loop {
                let q = Configuration::xy(rng.gen_range(0.6..7.4), rng.gen_range(0.6..7.4));
                let free = is_valid_config(&env, &robots[i], &q).unwrap()
                    && set.iter().enumerate().all(|(j, o)| !in_collision_pair(&robots[i], &q, &robots[j], o).unwrap());
                if free {
                    break q;
                }
            };
            set.push(q);
        }
    }
    let params = PlannerParams {
        initial_samples: Some(samples),
        k: 3,
        dt: Some(0.5),
        seed,
        ..PlannerParams::default()
    }
    .resolve(&robots)
    .unwrap();
    let mut grower = RoadmapGrower::new(&env, &robots, &starts, &goals, &params);
    grower.advance().unwrap();
    let c = grower.connect().unwrap()?;
    let durations: Option<Vec<u32>> = (0..agents)
        .map(|i| unconstrained_steps(&c.roadmaps[i], c.starts[i], c.goals[i], 0.5))
        .collect();
    let horizon = durations?.into_iter().max().unwrap() * 2 + 4;
    Some(Micro {
        env,
        robots,
        starts,
        goals,
        roadmaps: c.roadmaps,
        start_ids: c.starts,
        goal_ids: c.goals,
        dt: 0.5,
        horizon,
    })
}

pub enum Agreement {
    BothSolved { cbs: u64, oracle: u64 },
    BothInfeasible,
    CbsOnly,
    OracleOnly,
    /// The oracle's state space exceeds its bound.
    Skipped,
    CbsUnfinished,
}

pub fn compare(m: &Micro, metric: CostMetric) -> (Agreement, Option<Solution>) {
    let config = QueryConfig {
        metric,
        max_ct_nodes: None,
        dt: m.dt,
        horizon: m.horizon,
        deadline: Some(std::time::Instant::now() + std::time::Duration::from_secs(20)),
    };
    let oracle = match joint_oracle(&m.roadmaps, &m.robots, &m.start_ids, &m.goal_ids, m.dt, m.horizon, metric) {
        Ok(o) => o,
        Err(cbsmp::Error::StateBoundExceeded { .. }) => return (Agreement::Skipped, None),
        Err(e) => panic!("oracle failed: {e}"),
    };
    let rep = cbs_query(&m.roadmaps, &m.robots, &m.start_ids, &m.goal_ids, config).unwrap();
    match (rep.outcome, oracle) {
        (QueryOutcome::Solved(s), Some(o)) => {
            let c = cbsmp::cbs::group_cost_steps(&s.paths, metric);
            (Agreement::BothSolved { cbs: c, oracle: o.cost_steps }, Some(s))
        }
        (QueryOutcome::Solved(s), None) => (Agreement::CbsOnly, Some(s)),
        (QueryOutcome::Infeasible, None) => (Agreement::BothInfeasible, None),
        (QueryOutcome::Infeasible, Some(_)) => (Agreement::OracleOnly, None),
        _ => (Agreement::CbsUnfinished, None),
    }
}

/// Random graph of `n` points in a 10 x 10 square: a random spanning tree
/// plus `extra` random chords, weights equal to travel time at speed 1.
pub fn random_roadmap(rng: &mut impl Rng, agent: usize, n: usize, extra: usize) -> Roadmap {
    let robot = RobotModel::disk(agent, 0.5, 1.0).unwrap();
    let mut r = Roadmap::new(agent);
    for _ in 0..n {
        r.add_vertex(Configuration::xy(rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)));
    }
    let link = |r: &mut Roadmap, a: usize, b: usize| {
        if a != b {
            let w = cbsmp::roadmap::quantize_weight(robot.travel_time(r.vertex(a), r.vertex(b)));
            r.add_edge(a, b, w);
        }
    };
    for v in 1..n {
        let u = rng.gen_range(0..v);
        link(&mut r, u, v);
    }
    for _ in 0..extra {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        link(&mut r, a, b);
    }
    r
}

/// Textbook Bellman-Ford over integer edge durations.
pub fn bellman_ford_steps(r: &Roadmap, source: usize, dt: f64) -> Vec<Option<u64>> {
    let n = r.vertex_count();
    let mut d: Vec<Option<u64>> = vec![None; n];
    d[source] = Some(0);
    for _ in 1..n.max(2) {
        let mut changed = false;
        for e in r.edges() {
            let w = u64::from(edge_steps(e.weight, dt));
            for (u, v) in [(e.a, e.b), (e.b, e.a)] {
                if let Some(du) = d[u] {
                    if d[v].is_none_or(|dv| du + w < dv) {
                        d[v] = Some(du + w);
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    d
}

/// Number of no-wait walks from `start` that end at `goal` no later than
/// `horizon` (saturating in f64).
pub fn count_paths(r: &Roadmap, start: usize, goal: usize, dt: f64, horizon: u32) -> f64 {
    let h = horizon as usize;
    let mut ways = vec![vec![0.0f64; h + 1]; r.vertex_count()];
    ways[start][0] = 1.0;
    let mut total = 0.0;
    for t in 0..=h {
        for v in 0..r.vertex_count() {
            let w = ways[v][t];
            if w == 0.0 {
                continue;
            }
            if v == goal {
                total += w;
            }
            for &(u, weight) in r.neighbors(v) {
                let a = t + edge_steps(weight, dt) as usize;
                if a <= h {
                    ways[u][a] += w;
                }
            }
        }
    }
    total
}
