//! Uniform-time discretization of agent paths and earliest-conflict
//! detection.
//!
//! Each path is sampled at integer timesteps; between vertices the agent
//! moves linearly in C-space, and after its last arrival it stays at the
//! goal. Agents are only compared at these synchronized timesteps.

use crate::error::{Error, Result};
use crate::geometry::{Configuration, Footprint, RobotModel};
use crate::par;
use crate::roadmap::{Roadmap, TimedPath};

/// Two agents colliding at one timestep.
#[derive(Debug, Clone, PartialEq)]
pub struct Conflict {
    pub timestep: u32,
    pub agent_i: usize,
    pub agent_j: usize,
    pub config_i: Configuration,
    pub config_j: Configuration,
}

/// The agent's configuration at timestep `t`; the goal once `t` passes
/// the path's duration.
pub fn config_at_timestep(path: &TimedPath, roadmap: &Roadmap, robot: &RobotModel, t: u32) -> Configuration {
    if t >= path.duration() {
        return roadmap.vertex(path.goal()).clone();
    }
    // Index of the first arrival strictly after t; the agent is on the edge
    // leading to it.
    let next = path.arrivals.partition_point(|&a| a <= t);
    let (dep, arr) = (path.arrivals[next - 1], path.arrivals[next]);
    let (a, b) = (path.vertices[next - 1], path.vertices[next]);
    let s = (t - dep) as f64 / (arr - dep) as f64;
    robot.lerp(roadmap.vertex(a), roadmap.vertex(b), s)
}

/// Configurations at timesteps `0..=until`.
pub fn trajectory(path: &TimedPath, roadmap: &Roadmap, robot: &RobotModel, until: u32) -> Vec<Configuration> {
    (0..=until)
        .map(|t| config_at_timestep(path, roadmap, robot, t))
        .collect()
}

pub(crate) fn footprints(path: &TimedPath, roadmap: &Roadmap, robot: &RobotModel, until: u32) -> Vec<Footprint> {
    (0..=until)
        .map(|t| robot.footprint_unchecked(&config_at_timestep(path, roadmap, robot, t)))
        .collect()
}

fn check_inputs(paths: &[TimedPath], roadmaps: &[Roadmap], robots: &[RobotModel]) -> Result<()> {
    if paths.len() != roadmaps.len() || paths.len() != robots.len() {
        return Err(Error::InvalidParameter(format!(
            "{} paths, {} roadmaps and {} robots",
            paths.len(),
            roadmaps.len(),
            robots.len()
        )));
    }
    if let Some(p) = paths.iter().find(|p| p.dt != paths[0].dt) {
        return Err(Error::InvalidParameter(format!(
            "agent {} uses dt {} but agent {} uses {}",
            p.agent, p.dt, paths[0].agent, paths[0].dt
        )));
    }
    Ok(())
}

/// Earliest conflict plus the total number of colliding (timestep, pair)
/// entries up to the longest path's duration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConflictSummary {
    pub first: Option<Conflict>,
    pub count: usize,
}

fn conflict_at(paths: &[TimedPath], roadmaps: &[Roadmap], robots: &[RobotModel], t: u32, i: usize, j: usize) -> Conflict {
    Conflict {
        timestep: t,
        agent_i: robots[i].id,
        agent_j: robots[j].id,
        config_i: config_at_timestep(&paths[i], &roadmaps[i], &robots[i], t),
        config_j: config_at_timestep(&paths[j], &roadmaps[j], &robots[j], t),
    }
}

fn all_footprints(paths: &[TimedPath], roadmaps: &[Roadmap], robots: &[RobotModel]) -> (u32, Vec<Vec<Footprint>>) {
    let horizon = paths.iter().map(TimedPath::duration).max().unwrap_or(0);
    let fps = par::map_range(0..paths.len(), |i| footprints(&paths[i], &roadmaps[i], &robots[i], horizon));
    (horizon, fps)
}

/// Scans timesteps in increasing order and, within a timestep, agent pairs
/// in ascending index order; returns the first colliding pair.
pub fn find_first_conflict(
    paths: &[TimedPath],
    roadmaps: &[Roadmap],
    robots: &[RobotModel],
) -> Result<Option<Conflict>> {
    check_inputs(paths, roadmaps, robots)?;
    if paths.len() < 2 {
        return Ok(None);
    }
    let (horizon, fps) = all_footprints(paths, roadmaps, robots);
    let n = paths.len();
    let hit = par::find_map_first(0..horizon as usize + 1, |t| {
        (0..n).find_map(|i| {
            (i + 1..n)
                .find(|&j| fps[i][t].intersects(&fps[j][t]))
                .map(|j| (t as u32, i, j))
        })
    });
    Ok(hit.map(|(t, i, j)| conflict_at(paths, roadmaps, robots, t, i, j)))
}

/// Like [`find_first_conflict`], but also counts every colliding
/// (timestep, pair) entry.
pub fn summarize_conflicts(paths: &[TimedPath], roadmaps: &[Roadmap], robots: &[RobotModel]) -> Result<ConflictSummary> {
    check_inputs(paths, roadmaps, robots)?;
    if paths.len() < 2 {
        return Ok(ConflictSummary { first: None, count: 0 });
    }
    let (horizon, fps) = all_footprints(paths, roadmaps, robots);
    let n = paths.len();
    let per_step = par::map_range(0..horizon as usize + 1, |t| {
        let mut first = None;
        let mut count = 0;
        for i in 0..n {
            for j in i + 1..n {
                if fps[i][t].intersects(&fps[j][t]) {
                    first.get_or_insert((i, j));
                    count += 1;
                }
            }
        }
        (first, count)
    });
    let count = per_step.iter().map(|&(_, c)| c).sum();
    let first = per_step
        .iter()
        .enumerate()
        .find_map(|(t, &(f, _))| f.map(|(i, j)| conflict_at(paths, roadmaps, robots, t as u32, i, j)));
    Ok(ConflictSummary { first, count })
}
