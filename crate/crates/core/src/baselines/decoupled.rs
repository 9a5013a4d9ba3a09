//! Prioritized planning: agents plan one after another, each treating the
//! trajectories already fixed as moving obstacles.

use std::time::Instant;

use crate::cbs::{
    check_instance, query_horizon, CostMetric, PlanReport, PlanStatus, PlannerParams, PlannerStats, RoadmapGrower,
    Solution,
};
use crate::conflict::footprints;
use crate::error::{Error, Result};
use crate::geometry::{Configuration, Environment, RobotModel};
use crate::roadmap::{timed_search, Roadmap, SearchOutcome, TrajectoryObstacles};

#[derive(Debug, Clone, PartialEq)]
pub enum DecoupledOutcome {
    Solved(Solution),
    /// This agent found no path.
    Failed { agent: usize },
    TimedOut,
}

fn check_order(order: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    for &i in order {
        if i >= n || std::mem::replace(&mut seen[i], true) {
            return Err(Error::InvalidParameter(format!("priority order {order:?} is not a permutation of 0..{n}")));
        }
    }
    if order.len() != n {
        return Err(Error::InvalidParameter(format!("priority order {order:?} is not a permutation of 0..{n}")));
    }
    Ok(())
}

/// Plans agents one at a time in `order` (highest priority first) on fixed,
/// endpoint-connected roadmaps.
#[allow(clippy::too_many_arguments)]
pub fn decoupled_query(
    roadmaps: &[Roadmap],
    robots: &[RobotModel],
    starts: &[usize],
    goals: &[usize],
    order: &[usize],
    dt: f64,
    horizon: u32,
    metric: CostMetric,
    deadline: Option<Instant>,
) -> Result<(DecoupledOutcome, PlannerStats)> {
    let n = robots.len();
    if roadmaps.len() != n || starts.len() != n || goals.len() != n {
        return Err(Error::InvalidParameter("robots, roadmaps and endpoints differ in length".into()));
    }
    check_order(order, n)?;
    let mut stats = PlannerStats::default();
    let mut paths = vec![None; n];
    let mut fixed = Vec::with_capacity(n);
    for &i in order {
        let obstacles = TrajectoryObstacles::new(fixed.clone());
        let out = timed_search(&roadmaps[i], &robots[i], starts[i], goals[i], &obstacles, dt, horizon, deadline)?;
        stats.low_level_replans += 1;
        let path = match out {
            SearchOutcome::Found(p) => p,
            SearchOutcome::NoPath => return Ok((DecoupledOutcome::Failed { agent: i }, stats)),
            SearchOutcome::TimedOut => return Ok((DecoupledOutcome::TimedOut, stats)),
        };
        fixed.push(footprints(&path, &roadmaps[i], &robots[i], path.duration()));
        paths[i] = Some(path);
    }
    let paths = paths.into_iter().map(Option::unwrap).collect();
    let sol = Solution::new(paths, roadmaps, robots, metric, stats.clone())?;
    Ok((DecoupledOutcome::Solved(sol), stats))
}

/// Prioritized planning with the same grow-and-retry loop as the
/// conflict-based planner: any failed agent triggers growth of every roadmap.
/// `priority` defaults to index order.
pub fn decoupled_prm_plan(
    env: &Environment,
    robots: &[RobotModel],
    starts: &[Configuration],
    goals: &[Configuration],
    priority: Option<&[usize]>,
    params: &PlannerParams,
) -> Result<PlanReport> {
    let t0 = Instant::now();
    let p = params.resolve(robots)?;
    let order: Vec<usize> = match priority {
        Some(o) => o.to_vec(),
        None => (0..robots.len()).collect(),
    };
    check_order(&order, robots.len())?;
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
        let (out, s) = decoupled_query(&c.roadmaps, robots, &c.starts, &c.goals, &order, p.dt, horizon, p.metric, Some(deadline))?;
        stats.absorb(&s);
        match out {
            DecoupledOutcome::Solved(mut sol) => {
                sol.stats = stats.clone();
                break PlanStatus::Solved(sol);
            }
            DecoupledOutcome::TimedOut => break PlanStatus::TimedOut,
            DecoupledOutcome::Failed { .. } => {}
        }
    };
    Ok(PlanReport {
        status,
        roadmaps: grower.roadmaps().to_vec(),
        stats,
        elapsed: t0.elapsed(),
    })
}
