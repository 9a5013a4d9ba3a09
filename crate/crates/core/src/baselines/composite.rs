//! PRM in the joint configuration space of all robots.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cbs::{check_instance, PlanReport, PlanStatus, PlannerParams, PlannerStats, Solution};
use crate::error::{Error, Result};
use crate::geometry::{edge_subdivisions, in_collision_pair, is_valid_config, is_valid_edge, Configuration, Environment, RobotModel};
use crate::par;
use crate::roadmap::{edge_steps, quantize_weight, Roadmap, TimedPath, DEDUP_TOLERANCE};
use crate::seed;

/// Roadmap over joint configurations; an edge moves every robot in a
/// straight line over the same duration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct JointRoadmap {
    pub vertices: Vec<Vec<Configuration>>,
    /// Sorted `(neighbour, duration)` lists.
    pub adjacency: Vec<Vec<(usize, f64)>>,
}

impl JointRoadmap {
    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    fn add_vertex(&mut self, q: Vec<Configuration>) -> usize {
        self.vertices.push(q);
        self.adjacency.push(Vec::new());
        self.vertices.len() - 1
    }

    fn add_edge(&mut self, a: usize, b: usize, w: f64) {
        for (x, y) in [(a, b), (b, a)] {
            let adj = &mut self.adjacency[x];
            if let Err(pos) = adj.binary_search_by(|&(n, _)| n.cmp(&y)) {
                adj.insert(pos, (y, w));
            }
        }
    }

    fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search_by(|&(n, _)| n.cmp(&b)).is_ok()
    }
}

struct Joint<'a> {
    env: &'a Environment,
    robots: &'a [RobotModel],
    steps: Vec<f64>,
    dt: f64,
}

impl Joint<'_> {
    fn distance(&self, a: &[Configuration], b: &[Configuration]) -> f64 {
        self.robots.iter().zip(a.iter().zip(b)).map(|(r, (x, y))| r.distance(x, y)).sum()
    }

    fn duration(&self, a: &[Configuration], b: &[Configuration]) -> f64 {
        self.robots
            .iter()
            .zip(a.iter().zip(b))
            .map(|(r, (x, y))| r.travel_time(x, y))
            .fold(0.0, f64::max)
    }

    fn pairwise_free(&self, q: &[Configuration]) -> bool {
        let n = self.robots.len();
        (0..n).all(|i| (i + 1..n).all(|j| !in_collision_pair(&self.robots[i], &q[i], &self.robots[j], &q[j]).unwrap_or(true)))
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Result<Option<Vec<Configuration>>> {
        let mut q = Vec::with_capacity(self.robots.len());
        for r in self.robots {
            let mut found = None;
            for _ in 0..100 {
                let c = r.sample(rng, self.env);
                if is_valid_config(self.env, r, &c)? {
                    found = Some(c);
                    break;
                }
            }
            match found {
                Some(c) => q.push(c),
                None => return Ok(None),
            }
        }
        Ok(self.pairwise_free(&q).then_some(q))
    }

    /// Validates a joint motion; returns its quantized duration.
    fn edge(&self, a: &[Configuration], b: &[Configuration]) -> Result<Option<f64>> {
        if self.distance(a, b) <= DEDUP_TOLERANCE {
            return Ok(None);
        }
        for (i, r) in self.robots.iter().enumerate() {
            if !is_valid_edge(self.env, r, &a[i], &b[i], self.steps[i])? {
                return Ok(None);
            }
        }
        let w = quantize_weight(self.duration(a, b));
        let dyadic = self
            .robots
            .iter()
            .enumerate()
            .map(|(i, r)| edge_subdivisions(r.distance(&a[i], &b[i]), self.steps[i]))
            .max()
            .unwrap_or(1);
        let timesteps = edge_steps(w, self.dt) as u64;
        let fractions = (1..dyadic)
            .map(|k| k as f64 / dyadic as f64)
            .chain((1..timesteps).map(|k| k as f64 / timesteps as f64));
        for s in fractions {
            let q: Vec<Configuration> = self
                .robots
                .iter()
                .enumerate()
                .map(|(i, r)| r.lerp(&a[i], &b[i], s))
                .collect();
            if !self.pairwise_free(&q) {
                return Ok(None);
            }
        }
        Ok(Some(w))
    }

    fn nearest(&self, g: &JointRoadmap, v: usize, k: usize) -> Vec<usize> {
        let mut d: Vec<(f64, usize)> = (0..g.vertices.len())
            .filter(|&u| u != v)
            .map(|u| (self.distance(&g.vertices[v], &g.vertices[u]), u))
            .collect();
        d.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        d.into_iter().take(k).map(|(_, u)| u).collect()
    }

    /// Connects `from` to their nearest neighbours; `false` on timeout.
    fn connect(&self, g: &mut JointRoadmap, from: std::ops::Range<usize>, k: usize, deadline: Instant) -> Result<bool> {
        let mut pairs: Vec<(usize, usize)> = par::map_range(from, |v| {
            self.nearest(g, v, k).into_iter().map(|u| (v.min(u), v.max(u))).collect::<Vec<_>>()
        })
        .into_iter()
        .flatten()
        .filter(|&(a, b)| !g.has_edge(a, b))
        .collect();
        pairs.sort_unstable();
        pairs.dedup();
        self.connect_pairs(g, &pairs, deadline)
    }

    fn connect_pairs(&self, g: &mut JointRoadmap, pairs: &[(usize, usize)], deadline: Instant) -> Result<bool> {
        let checked = par::map(pairs, |&(a, b)| {
            if Instant::now() >= deadline {
                return Err(None);
            }
            self.edge(&g.vertices[a], &g.vertices[b]).map_err(Some)
        });
        for (&(a, b), w) in pairs.iter().zip(checked) {
            match w {
                Ok(Some(w)) => g.add_edge(a, b, w),
                Ok(None) => {}
                Err(None) => return Ok(false),
                Err(Some(e)) => return Err(e),
            }
        }
        Ok(true)
    }
}

fn shortest(g: &JointRoadmap, dt: f64) -> Option<Vec<usize>> {
    let n = g.vertices.len();
    let mut dist = vec![u64::MAX; n];
    let mut prev = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    dist[0] = 0;
    heap.push(Reverse((0u64, 0usize)));
    while let Some(Reverse((d, v))) = heap.pop() {
        if v == 1 {
            let mut path = vec![1];
            while *path.last().unwrap() != 0 {
                path.push(prev[*path.last().unwrap()]);
            }
            path.reverse();
            return Some(path);
        }
        if d > dist[v] {
            continue;
        }
        for &(u, w) in &g.adjacency[v] {
            let nd = d + edge_steps(w, dt) as u64;
            if nd < dist[u] || (nd == dist[u] && v < prev[u]) {
                dist[u] = nd;
                prev[u] = v;
                heap.push(Reverse((nd, u)));
            }
        }
    }
    None
}

/// Splits a joint path into one single-chain roadmap per robot. Each chain
/// keeps the joint timing and drops the trailing segments in which the
/// robot no longer moves.
pub fn project_joint_path(
    joint: &[Vec<Configuration>],
    durations: &[f64],
    robots: &[RobotModel],
    dt: f64,
) -> (Vec<Roadmap>, Vec<TimedPath>) {
    let mut roadmaps = Vec::new();
    let mut paths = Vec::new();
    for (i, robot) in robots.iter().enumerate() {
        let last_move = (0..durations.len())
            .rev()
            .find(|&e| robot.distance(&joint[e][i], &joint[e + 1][i]) > 0.0)
            .map_or(0, |e| e + 1);
        let mut r = Roadmap::new(robot.id);
        let mut arrivals = vec![0];
        r.add_vertex(joint[0][i].clone());
        for e in 0..last_move {
            r.add_vertex(joint[e + 1][i].clone());
            r.add_edge(e, e + 1, durations[e]);
            arrivals.push(arrivals[e] + edge_steps(durations[e], dt));
        }
        paths.push(TimedPath {
            agent: robot.id,
            vertices: (0..=last_move).collect(),
            arrivals,
            dt,
        });
        roadmaps.push(r);
    }
    (roadmaps, paths)
}

/// Coupled planner: a single PRM over the product space, grown until the
/// joint start and goal are connected or the budget runs out.
pub fn composite_prm_plan(
    env: &Environment,
    robots: &[RobotModel],
    starts: &[Configuration],
    goals: &[Configuration],
    params: &PlannerParams,
) -> Result<PlanReport> {
    let t0 = Instant::now();
    let p = params.resolve(robots)?;
    let deadline = t0 + p.budget;
    let mut stats = PlannerStats::default();
    let report = |status, roadmaps, stats| PlanReport {
        status,
        roadmaps,
        stats,
        elapsed: t0.elapsed(),
    };
    if let Some(reason) = check_instance(env, robots, starts, goals)? {
        return Ok(report(PlanStatus::Infeasible(reason), Vec::new(), stats));
    }
    let joint = Joint {
        env,
        robots,
        steps: robots.iter().map(|r| p.edge_step.unwrap_or_else(|| r.default_edge_step())).collect(),
        dt: p.dt,
    };
    let mut g = JointRoadmap::default();
    g.add_vertex(starts.to_vec());
    g.add_vertex(goals.to_vec());
    if !joint.connect_pairs(&mut g, &[(0, 1)], deadline)? {
        return Ok(report(PlanStatus::TimedOut, Vec::new(), stats));
    }
    loop {
        if let Some(path) = shortest(&g, p.dt) {
            let configs: Vec<Vec<Configuration>> = path.iter().map(|&v| g.vertices[v].clone()).collect();
            let durations: Vec<f64> = path
                .windows(2)
                .map(|w| g.adjacency[w[0]].iter().find(|&&(u, _)| u == w[1]).unwrap().1)
                .collect();
            let (roadmaps, paths) = project_joint_path(&configs, &durations, robots, p.dt);
            let sol = Solution::new(paths, &roadmaps, robots, p.metric, stats.clone())?;
            return Ok(report(PlanStatus::Solved(sol), roadmaps, stats));
        }
        if Instant::now() >= deadline {
            return Ok(report(PlanStatus::TimedOut, Vec::new(), stats));
        }
        let n = if stats.growth_rounds == 0 {
            p.initial_samples
        } else {
            p.growth_samples
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(p.seed, u64::MAX, stats.growth_rounds as u64));
        let old = g.vertices.len();
        for _ in 0..100 * n {
            if g.vertices.len() - old == n {
                break;
            }
            if let Some(q) = joint.sample(&mut rng)? {
                g.add_vertex(q);
            }
        }
        if g.vertices.len() == old {
            return Err(Error::SamplingExhausted { attempts: 100 * n });
        }
        stats.growth_rounds += 1;
        let len = g.vertices.len();
        // Endpoints are re-linked each round so they can reach new samples.
        for range in [old..len, 0..2] {
            if !joint.connect(&mut g, range, p.k, deadline)? {
                return Ok(report(PlanStatus::TimedOut, Vec::new(), stats));
            }
        }
    }
}
