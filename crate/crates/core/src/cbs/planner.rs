use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use super::{CostMetric, PlannerStats, Query, QueryConfig, QueryOutcome, Solution, DEFAULT_MAX_CT_NODES};
use crate::error::{Error, Result};
use crate::geometry::{default_timestep, in_collision_pair, is_valid_config, Configuration, Environment, RobotModel};
use crate::par;
use crate::roadmap::{default_horizon, edge_steps, Prm, Roadmap, DEFAULT_K};
use crate::seed;

/// Tunables shared by the planners. `None` fields are derived from the robots.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerParams {
    /// First-round samples per agent; 64, or 128 when any robot is a chain.
    pub initial_samples: Option<usize>,
    /// Samples added per regrowth round; defaults to `initial_samples`.
    pub growth_samples: Option<usize>,
    pub k: usize,
    /// Edge validation step; each robot's own default when `None`.
    pub edge_step: Option<f64>,
    pub dt: Option<f64>,
    pub horizon: Option<u32>,
    pub max_ct_nodes: Option<usize>,
    pub metric: CostMetric,
    pub budget: Duration,
    pub seed: u64,
}

impl Default for PlannerParams {
    fn default() -> Self {
        PlannerParams {
            initial_samples: None,
            growth_samples: None,
            k: DEFAULT_K,
            edge_step: None,
            dt: None,
            horizon: None,
            max_ct_nodes: Some(DEFAULT_MAX_CT_NODES),
            metric: CostMetric::SumOfCosts,
            budget: Duration::from_secs(1000),
            seed: 0,
        }
    }
}

/// [`PlannerParams`] with robot-dependent defaults filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedParams {
    pub initial_samples: usize,
    pub growth_samples: usize,
    pub k: usize,
    pub edge_step: Option<f64>,
    pub dt: f64,
    pub horizon: Option<u32>,
    pub max_ct_nodes: Option<usize>,
    pub metric: CostMetric,
    pub budget: Duration,
    pub seed: u64,
}

impl PlannerParams {
    pub fn resolve(&self, robots: &[RobotModel]) -> Result<ResolvedParams> {
        if robots.is_empty() {
            return Err(Error::InvalidParameter("no robots".into()));
        }
        let initial = self
            .initial_samples
            .unwrap_or(if robots.iter().any(RobotModel::is_chain) { 128 } else { 64 });
        let growth = self.growth_samples.unwrap_or(initial);
        if initial == 0 || growth == 0 || self.k == 0 {
            return Err(Error::InvalidParameter("sample counts and k must be positive".into()));
        }
        let dt = self.dt.unwrap_or_else(|| default_timestep(robots));
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        if self.max_ct_nodes == Some(0) {
            return Err(Error::InvalidParameter("max_ct_nodes must be at least 1".into()));
        }
        Ok(ResolvedParams {
            initial_samples: initial,
            growth_samples: growth,
            k: self.k,
            edge_step: self.edge_step,
            dt,
            horizon: self.horizon,
            max_ct_nodes: self.max_ct_nodes,
            metric: self.metric,
            budget: self.budget,
            seed: self.seed,
        })
    }
}

/// Roadmaps with every agent's start and goal inserted.
#[derive(Debug, Clone, PartialEq)]
pub struct Connected {
    pub roadmaps: Vec<Roadmap>,
    pub starts: Vec<usize>,
    pub goals: Vec<usize>,
}

/// Per-agent roadmaps that are built once and then grown round by round.
pub struct RoadmapGrower<'a> {
    env: &'a Environment,
    robots: &'a [RobotModel],
    starts: &'a [Configuration],
    goals: &'a [Configuration],
    params: &'a ResolvedParams,
    roadmaps: Vec<Roadmap>,
    rounds: usize,
}

impl<'a> RoadmapGrower<'a> {
    pub fn new(
        env: &'a Environment,
        robots: &'a [RobotModel],
        starts: &'a [Configuration],
        goals: &'a [Configuration],
        params: &'a ResolvedParams,
    ) -> Self {
        RoadmapGrower {
            env,
            robots,
            starts,
            goals,
            params,
            roadmaps: Vec::new(),
            rounds: 0,
        }
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn roadmaps(&self) -> &[Roadmap] {
        &self.roadmaps
    }

    fn prm(&self, i: usize) -> Prm<'a> {
        let p = Prm::new(self.env, &self.robots[i], self.params.k);
        match self.params.edge_step {
            Some(s) => p.with_step(s),
            None => p,
        }
    }

    /// Builds every roadmap on the first call and grows them afterwards.
    pub fn advance(&mut self) -> Result<()> {
        let round = self.rounds as u64;
        let next = par::map_range(0..self.robots.len(), |i| {
            let s = seed::derive(self.params.seed, i as u64, round);
            if self.rounds == 0 {
                self.prm(i).build(self.params.initial_samples, s)
            } else {
                self.prm(i).grow(&self.roadmaps[i], self.params.growth_samples, s)
            }
        });
        self.roadmaps = next.into_iter().collect::<Result<_>>()?;
        self.rounds += 1;
        Ok(())
    }

    /// Inserts the endpoints. `None` when some endpoint has no valid edge;
    /// the roadmaps are kept unchanged in that case.
    pub fn connect(&mut self) -> Result<Option<Connected>> {
        let results = par::map_range(0..self.robots.len(), |i| {
            self.prm(i).connect_endpoints(&self.roadmaps[i], &self.starts[i], &self.goals[i])
        });
        let mut c = Connected {
            roadmaps: Vec::new(),
            starts: Vec::new(),
            goals: Vec::new(),
        };
        for r in results {
            match r {
                Ok((rm, s, g)) => {
                    c.roadmaps.push(rm);
                    c.starts.push(s);
                    c.goals.push(g);
                }
                Err(Error::DisconnectedEndpoint { .. }) => return Ok(None),
                Err(e) => return Err(e),
            }
        }
        self.roadmaps = c.roadmaps.clone();
        Ok(Some(c))
    }
}

/// Fewest timesteps from `start` to `goal` ignoring other agents.
pub fn unconstrained_steps(r: &Roadmap, start: usize, goal: usize, dt: f64) -> Option<u32> {
    let mut dist = vec![u64::MAX; r.vertex_count()];
    let mut heap = BinaryHeap::new();
    dist[start] = 0;
    heap.push(Reverse((0u64, start)));
    while let Some(Reverse((d, v))) = heap.pop() {
        if v == goal {
            return u32::try_from(d).ok();
        }
        if d > dist[v] {
            continue;
        }
        for &(u, w) in r.neighbors(v) {
            let nd = d + edge_steps(w, dt) as u64;
            if nd < dist[u] {
                dist[u] = nd;
                heap.push(Reverse((nd, u)));
            }
        }
    }
    None
}

/// Horizon for a query: the fixed one if given, else derived from the
/// unconstrained durations. `None` when some agent cannot reach its goal.
pub fn query_horizon(c: &Connected, dt: f64, fixed: Option<u32>) -> Option<u32> {
    let durations: Option<Vec<u32>> = (0..c.roadmaps.len())
        .map(|i| unconstrained_steps(&c.roadmaps[i], c.starts[i], c.goals[i], dt))
        .collect();
    let durations = durations?;
    Some(fixed.unwrap_or_else(|| default_horizon(durations)))
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlanStatus {
    Solved(Solution),
    TimedOut,
    /// The instance is unsolvable as posed, e.g. two starts overlap.
    Infeasible(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanReport {
    pub status: PlanStatus,
    pub roadmaps: Vec<Roadmap>,
    pub stats: PlannerStats,
    pub elapsed: Duration,
}

impl PlanReport {
    pub fn solution(&self) -> Option<&Solution> {
        match &self.status {
            PlanStatus::Solved(s) => Some(s),
            _ => None,
        }
    }
}

/// Checks ids, dimensions and endpoint validity; returns a reason when two
/// starts or two goals overlap.
pub fn check_instance(
    env: &Environment,
    robots: &[RobotModel],
    starts: &[Configuration],
    goals: &[Configuration],
) -> Result<Option<String>> {
    if starts.len() != robots.len() || goals.len() != robots.len() {
        return Err(Error::InvalidParameter(format!(
            "{} robots, {} starts, {} goals",
            robots.len(),
            starts.len(),
            goals.len()
        )));
    }
    for (i, r) in robots.iter().enumerate() {
        if r.id != i {
            return Err(Error::InvalidParameter(format!("robot at index {i} has id {}", r.id)));
        }
        for (q, which) in [(&starts[i], "start"), (&goals[i], "goal")] {
            if !is_valid_config(env, r, q)? {
                return Err(Error::Validation(format!("robot {i}: {which} {:?} is invalid", q.values())));
            }
        }
    }
    for (set, which) in [(starts, "starts"), (goals, "goals")] {
        for i in 0..robots.len() {
            for j in i + 1..robots.len() {
                if in_collision_pair(&robots[i], &set[i], &robots[j], &set[j])? {
                    return Ok(Some(format!("{which} of agents {i} and {j} overlap")));
                }
            }
        }
    }
    Ok(None)
}

/// Plans with conflict-based search, growing every roadmap and retrying
/// whenever an endpoint is isolated or the conflict tree gives up, until a
/// solution is found or the budget runs out.
pub fn plan(
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
    if let Some(reason) = check_instance(env, robots, starts, goals)? {
        return Ok(PlanReport {
            status: PlanStatus::Infeasible(reason),
            roadmaps: Vec::new(),
            stats,
            elapsed: t0.elapsed(),
        });
    }
    let mut grower = RoadmapGrower::new(env, robots, starts, goals, &p);
    let status = loop {
        if Instant::now() >= deadline {
            break PlanStatus::TimedOut;
        }
        grower.advance()?;
        stats.growth_rounds = grower.rounds();
        let Some(c) = grower.connect()? else {
            continue;
        };
        let Some(horizon) = query_horizon(&c, p.dt, p.horizon) else {
            continue;
        };
        let config = QueryConfig {
            metric: p.metric,
            max_ct_nodes: p.max_ct_nodes,
            dt: p.dt,
            horizon,
            deadline: Some(deadline),
        };
        let report = Query::new(&c.roadmaps, robots, &c.starts, &c.goals, config)?.run()?;
        stats.absorb(&report.stats);
        match report.outcome {
            QueryOutcome::Solved(mut sol) => {
                sol.stats = stats.clone();
                break PlanStatus::Solved(sol);
            }
            QueryOutcome::TimedOut => break PlanStatus::TimedOut,
            QueryOutcome::Exhausted | QueryOutcome::Infeasible => {}
        }
    };
    Ok(PlanReport {
        status,
        roadmaps: grower.roadmaps().to_vec(),
        stats,
        elapsed: t0.elapsed(),
    })
}
