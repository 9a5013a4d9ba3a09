//! Conflict-based search over per-agent roadmaps.
//!
//! The high level is a best-first search over a conflict tree. Every node
//! holds one path per agent and the constraints those paths satisfy. When a
//! popped node's paths collide, the earliest conflict spawns up to two
//! children, each forcing one of the two agents to avoid the other's
//! configuration at the conflicting timestep.

mod planner;
mod solution;

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::time::Instant;

pub use planner::{
    check_instance, plan, query_horizon, unconstrained_steps, Connected, PlanReport, PlanStatus, PlannerParams, ResolvedParams,
    RoadmapGrower,
};
pub use solution::{PlannerStats, Solution, SolutionRecord};

use crate::conflict::{summarize_conflicts, Conflict};
use crate::error::{Error, Result};
use crate::geometry::RobotModel;
use crate::par;
use crate::roadmap::{timed_search, Constraint, ConstraintObstacles, Roadmap, SearchOutcome, TimedPath};

/// Default conflict-tree size limit.
pub const DEFAULT_MAX_CT_NODES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum CostMetric {
    #[default]
    SumOfCosts,
    Makespan,
}

impl CostMetric {
    pub fn name(self) -> &'static str {
        match self {
            CostMetric::SumOfCosts => "soc",
            CostMetric::Makespan => "makespan",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "soc" | "sum-of-costs" => Some(CostMetric::SumOfCosts),
            "makespan" => Some(CostMetric::Makespan),
            _ => None,
        }
    }
}

/// Group cost in whole timesteps.
pub fn group_cost_steps(paths: &[TimedPath], metric: CostMetric) -> u64 {
    let durations = paths.iter().map(|p| p.duration() as u64);
    match metric {
        CostMetric::SumOfCosts => durations.sum(),
        CostMetric::Makespan => durations.max().unwrap_or(0),
    }
}

/// Group cost in seconds.
pub fn group_cost(paths: &[TimedPath], metric: CostMetric) -> f64 {
    let dt = paths.first().map_or(0.0, |p| p.dt);
    group_cost_steps(paths, metric) as f64 * dt
}

#[derive(Debug, Clone, PartialEq)]
pub struct CtNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub constraints: Vec<Constraint>,
    pub paths: Vec<TimedPath>,
    pub cost_steps: u64,
    /// Earliest conflict among `paths`.
    pub conflict: Option<Conflict>,
    /// Colliding (timestep, pair) entries among `paths`.
    pub conflict_count: usize,
}

impl CtNode {
    pub fn cost(&self) -> f64 {
        self.cost_steps as f64 * self.paths.first().map_or(0.0, |p| p.dt)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QueryConfig {
    pub metric: CostMetric,
    /// Limit on generated nodes, root included; `None` is unlimited.
    pub max_ct_nodes: Option<usize>,
    pub dt: f64,
    pub horizon: u32,
    pub deadline: Option<Instant>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum QueryOutcome {
    Solved(Solution),
    /// The tree hit its size limit with unexplored nodes left.
    Exhausted,
    /// Every branch ran out of paths.
    Infeasible,
    TimedOut,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryReport {
    pub outcome: QueryOutcome,
    pub stats: PlannerStats,
    /// Costs of expanded nodes in expansion order.
    pub expanded_costs: Vec<u64>,
}

/// One conflict-tree search over fixed roadmaps.
pub struct Query<'a> {
    pub roadmaps: &'a [Roadmap],
    pub robots: &'a [RobotModel],
    pub starts: &'a [usize],
    pub goals: &'a [usize],
    pub config: QueryConfig,
}

enum Replan {
    Path(TimedPath),
    NoPath,
    TimedOut,
}

impl<'a> Query<'a> {
    pub fn new(
        roadmaps: &'a [Roadmap],
        robots: &'a [RobotModel],
        starts: &'a [usize],
        goals: &'a [usize],
        config: QueryConfig,
    ) -> Result<Self> {
        let n = robots.len();
        if roadmaps.len() != n || starts.len() != n || goals.len() != n {
            return Err(Error::InvalidParameter(format!(
                "{n} robots, {} roadmaps, {} starts, {} goals",
                roadmaps.len(),
                starts.len(),
                goals.len()
            )));
        }
        for (i, (robot, rm)) in robots.iter().zip(roadmaps).enumerate() {
            if robot.id != i || rm.agent() != i {
                return Err(Error::InvalidParameter(format!(
                    "agent {i} has robot id {} and roadmap agent {}",
                    robot.id,
                    rm.agent()
                )));
            }
        }
        Ok(Query {
            roadmaps,
            robots,
            starts,
            goals,
            config,
        })
    }

    fn replan(&self, agent: usize, constraints: &[Constraint]) -> Result<Replan> {
        let obstacles = ConstraintObstacles::new(constraints.iter().filter(|c| c.agent == agent));
        let out = timed_search(
            &self.roadmaps[agent],
            &self.robots[agent],
            self.starts[agent],
            self.goals[agent],
            &obstacles,
            self.config.dt,
            self.config.horizon,
            self.config.deadline,
        )?;
        Ok(match out {
            SearchOutcome::Found(p) => Replan::Path(p),
            SearchOutcome::NoPath => Replan::NoPath,
            SearchOutcome::TimedOut => Replan::TimedOut,
        })
    }

    fn conflicts(&self, paths: &[TimedPath]) -> Result<(Option<Conflict>, usize)> {
        let s = summarize_conflicts(paths, self.roadmaps, self.robots)?;
        Ok((s.first, s.count))
    }

    /// Root node from unconstrained paths; `None` if some agent has no path.
    pub fn root(&self, stats: &mut PlannerStats) -> Result<Option<CtNode>> {
        let replans = par::map_range(0..self.robots.len(), |i| self.replan(i, &[]));
        stats.low_level_replans += replans.len();
        let mut paths = Vec::with_capacity(replans.len());
        for r in replans {
            match r? {
                Replan::Path(p) => paths.push(p),
                Replan::NoPath | Replan::TimedOut => return Ok(None),
            }
        }
        let (conflict, conflict_count) = self.conflicts(&paths)?;
        Ok(Some(CtNode {
            id: 0,
            parent: None,
            constraints: Vec::new(),
            cost_steps: group_cost_steps(&paths, self.config.metric),
            paths,
            conflict,
            conflict_count,
        }))
    }

    /// Children of `node` resolving `conflict`: one per involved agent whose
    /// replan under the extended constraint set succeeds. `None` when the
    /// deadline passed mid-replan.
    pub fn expand_node(
        &self,
        node: &CtNode,
        conflict: &Conflict,
        next_id: &mut usize,
        stats: &mut PlannerStats,
    ) -> Result<Option<Vec<CtNode>>> {
        let branch = |agent: usize,
                      other: usize,
                      other_config: &crate::geometry::Configuration|
         -> Result<Option<(usize, Vec<Constraint>, Replan)>> {
            let c = Constraint {
                agent,
                timestep: conflict.timestep,
                other_robot: self.robots[other].clone(),
                other_config: other_config.clone(),
            };
            if node.constraints.contains(&c) {
                return Ok(None);
            }
            let mut constraints = node.constraints.clone();
            constraints.push(c);
            let r = self.replan(agent, &constraints)?;
            Ok(Some((agent, constraints, r)))
        };
        let (i, j) = (conflict.agent_i, conflict.agent_j);
        let (a, b) = par::join(
            || branch(i, j, &conflict.config_j),
            || branch(j, i, &conflict.config_i),
        );
        let mut children = Vec::new();
        for res in [a, b] {
            let Some((agent, constraints, replan)) = res? else {
                continue;
            };
            stats.low_level_replans += 1;
            let path = match replan {
                Replan::Path(p) => p,
                Replan::NoPath => continue,
                Replan::TimedOut => return Ok(None),
            };
            let mut paths = node.paths.clone();
            paths[agent] = path;
            let (conflict, conflict_count) = self.conflicts(&paths)?;
            children.push(CtNode {
                id: *next_id,
                parent: Some(node.id),
                constraints,
                cost_steps: group_cost_steps(&paths, self.config.metric),
                paths,
                conflict,
                conflict_count,
            });
            *next_id += 1;
        }
        Ok(Some(children))
    }

    /// Runs the best-first conflict-tree search. With `keep_tree`, every
    /// generated node is returned for inspection.
    pub fn run_with_tree(&self, keep_tree: bool) -> Result<(QueryReport, Vec<CtNode>)> {
        let mut stats = PlannerStats::default();
        let mut expanded_costs = Vec::new();
        let mut tree = Vec::new();
        let finish = |outcome, stats, expanded_costs, tree| {
            Ok((
                QueryReport {
                    outcome,
                    stats,
                    expanded_costs,
                },
                tree,
            ))
        };
        if self.timed_out() {
            return finish(QueryOutcome::TimedOut, stats, expanded_costs, tree);
        }
        let Some(root) = self.root(&mut stats)? else {
            let outcome = if self.timed_out() {
                QueryOutcome::TimedOut
            } else {
                QueryOutcome::Infeasible
            };
            return finish(outcome, stats, expanded_costs, tree);
        };
        stats.ct_generated = 1;
        let mut next_id = 1;
        // Open list key: cost, then fewer conflicts (so conflict-free
        // first), then FIFO by id.
        let mut open = BinaryHeap::new();
        let mut nodes: Vec<Option<CtNode>> = Vec::new();
        let push = |node: CtNode, open: &mut BinaryHeap<_>, nodes: &mut Vec<Option<CtNode>>| {
            open.push(Reverse((node.cost_steps, node.conflict_count, node.id)));
            let id = node.id;
            if nodes.len() <= id {
                nodes.resize(id + 1, None);
            }
            nodes[id] = Some(node);
        };
        if keep_tree {
            tree.push(root.clone());
        }
        push(root, &mut open, &mut nodes);

        while let Some(Reverse((cost, _, id))) = open.pop() {
            if self.timed_out() {
                return finish(QueryOutcome::TimedOut, stats, expanded_costs, tree);
            }
            let node = nodes[id].take().expect("open nodes are stored");
            stats.ct_expanded += 1;
            expanded_costs.push(cost);
            let Some(conflict) = node.conflict.clone() else {
                let solution = Solution::new(
                    node.paths,
                    self.roadmaps,
                    self.robots,
                    self.config.metric,
                    stats.clone(),
                )?;
                return finish(QueryOutcome::Solved(solution), stats, expanded_costs, tree);
            };
            stats.conflicts += 1;
            if self.config.max_ct_nodes.is_some_and(|m| stats.ct_generated >= m) {
                return finish(QueryOutcome::Exhausted, stats, expanded_costs, tree);
            }
            let Some(mut children) = self.expand_node(&node, &conflict, &mut next_id, &mut stats)? else {
                return finish(QueryOutcome::TimedOut, stats, expanded_costs, tree);
            };
            if let Some(m) = self.config.max_ct_nodes {
                children.truncate(m - stats.ct_generated);
            }
            stats.ct_generated += children.len();
            for child in children {
                if keep_tree {
                    tree.push(child.clone());
                }
                push(child, &mut open, &mut nodes);
            }
        }
        finish(QueryOutcome::Infeasible, stats, expanded_costs, tree)
    }

    pub fn run(&self) -> Result<QueryReport> {
        Ok(self.run_with_tree(false)?.0)
    }

    fn timed_out(&self) -> bool {
        self.config.deadline.is_some_and(|d| Instant::now() >= d)
    }
}

/// Conflict-tree query on fixed roadmaps whose endpoints are already
/// connected (`starts`/`goals` are vertex indices).
pub fn cbs_query(
    roadmaps: &[Roadmap],
    robots: &[RobotModel],
    starts: &[usize],
    goals: &[usize],
    config: QueryConfig,
) -> Result<QueryReport> {
    Query::new(roadmaps, robots, starts, goals, config)?.run()
}
