//! Shortest paths over the time-expanded roadmap.
//!
//! Search states are `(vertex, timestep)`. Traversing an edge of weight `w`
//! takes `ceil(w / dt)` timesteps and occupies every timestep after
//! departure up to and including arrival. There is no waiting action; an
//! agent may only stop for good at its goal.

use std::collections::BTreeMap;
use std::time::Instant;

use super::Roadmap;
use crate::error::{Error, Result};
use crate::geometry::{Configuration, Footprint, RobotModel};

/// Smallest horizon handed out by [`default_horizon`].
pub const MIN_HORIZON: u32 = 256;

/// Number of timesteps needed to traverse an edge.
pub fn edge_steps(weight: f64, dt: f64) -> u32 {
    let s = (weight / dt - 1e-9).ceil();
    if s < 1.0 {
        1
    } else {
        s.min(u32::MAX as f64) as u32
    }
}

/// Four times the longest unconstrained duration, at least [`MIN_HORIZON`].
pub fn default_horizon(durations: impl IntoIterator<Item = u32>) -> u32 {
    durations
        .into_iter()
        .max()
        .unwrap_or(0)
        .saturating_mul(4)
        .max(MIN_HORIZON)
}

/// One agent's roadmap path with arrival timesteps at each vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedPath {
    pub agent: usize,
    pub vertices: Vec<usize>,
    pub arrivals: Vec<u32>,
    pub dt: f64,
}

impl TimedPath {
    pub fn duration(&self) -> u32 {
        *self.arrivals.last().expect("paths are never empty")
    }

    /// Duration in seconds.
    pub fn cost(&self) -> f64 {
        self.duration() as f64 * self.dt
    }

    pub fn start(&self) -> usize {
        self.vertices[0]
    }

    pub fn goal(&self) -> usize {
        *self.vertices.last().expect("paths are never empty")
    }

    /// False when the path revisits a roadmap vertex.
    pub fn is_spatially_simple(&self) -> bool {
        let mut seen = self.vertices.clone();
        seen.sort_unstable();
        seen.windows(2).all(|w| w[0] != w[1])
    }

    /// Checks the structural invariants against the roadmap it came from.
    pub fn validate(&self, r: &Roadmap) -> Result<()> {
        let fail = |m: String| Err(Error::Validation(format!("agent {} path: {m}", self.agent)));
        if self.vertices.is_empty() || self.vertices.len() != self.arrivals.len() {
            return fail("vertex and arrival lists differ in length".into());
        }
        if self.arrivals[0] != 0 {
            return fail("first arrival is not 0".into());
        }
        for i in 1..self.vertices.len() {
            let (a, b) = (self.vertices[i - 1], self.vertices[i]);
            let Some(w) = r.weight(a, b) else {
                return fail(format!("{a} and {b} are not neighbours"));
            };
            if self.arrivals[i] - self.arrivals[i - 1] != edge_steps(w, self.dt) {
                return fail(format!("edge {a}-{b} has the wrong duration"));
            }
        }
        Ok(())
    }
}

/// Requires `agent` to avoid `other_robot` at `other_config` on `timestep`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub agent: usize,
    pub timestep: u32,
    pub other_robot: RobotModel,
    pub other_config: Configuration,
}

/// When an agent parked at its goal would be hit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParkingBlock {
    Never,
    /// Blocked at this timestep, free at every later one.
    Until(u32),
    Forever,
}

/// Time-indexed obstacles the low-level search has to avoid.
pub trait Obstacles {
    /// Calls `f` on each timestep in `from..=to` carrying an obstacle, in
    /// increasing order; returns true as soon as `f` does.
    fn any_active(&self, from: u32, to: u32, f: &mut dyn FnMut(u32) -> bool) -> bool;

    fn collides(&self, t: u32, fp: &Footprint) -> bool;

    fn parking_block(&self, fp: &Footprint) -> ParkingBlock;
}

pub struct NoObstacles;

impl Obstacles for NoObstacles {
    fn any_active(&self, _: u32, _: u32, _: &mut dyn FnMut(u32) -> bool) -> bool {
        false
    }

    fn collides(&self, _: u32, _: &Footprint) -> bool {
        false
    }

    fn parking_block(&self, _: &Footprint) -> ParkingBlock {
        ParkingBlock::Never
    }
}

/// Conflict-tree constraints addressed to one agent.
pub struct ConstraintObstacles {
    by_time: BTreeMap<u32, Vec<Footprint>>,
}

impl ConstraintObstacles {
    pub fn new<'c>(constraints: impl IntoIterator<Item = &'c Constraint>) -> Self {
        let mut by_time: BTreeMap<u32, Vec<Footprint>> = BTreeMap::new();
        for c in constraints {
            by_time
                .entry(c.timestep)
                .or_default()
                .push(c.other_robot.footprint_unchecked(&c.other_config));
        }
        ConstraintObstacles { by_time }
    }
}

impl Obstacles for ConstraintObstacles {
    fn any_active(&self, from: u32, to: u32, f: &mut dyn FnMut(u32) -> bool) -> bool {
        self.by_time.range(from..=to).any(|(&t, _)| f(t))
    }

    fn collides(&self, t: u32, fp: &Footprint) -> bool {
        self.by_time
            .get(&t)
            .is_some_and(|fps| fps.iter().any(|o| o.intersects(fp)))
    }

    fn parking_block(&self, fp: &Footprint) -> ParkingBlock {
        self.by_time
            .iter()
            .rev()
            .find(|(_, fps)| fps.iter().any(|o| o.intersects(fp)))
            .map_or(ParkingBlock::Never, |(&t, _)| ParkingBlock::Until(t))
    }
}

/// Fixed trajectories of other agents, one footprint per timestep; each
/// agent stays at its last footprint forever.
pub struct TrajectoryObstacles {
    trajectories: Vec<Vec<Footprint>>,
}

impl TrajectoryObstacles {
    pub fn new(trajectories: Vec<Vec<Footprint>>) -> Self {
        TrajectoryObstacles {
            trajectories: trajectories.into_iter().filter(|t| !t.is_empty()).collect(),
        }
    }
}

impl Obstacles for TrajectoryObstacles {
    fn any_active(&self, from: u32, to: u32, f: &mut dyn FnMut(u32) -> bool) -> bool {
        !self.trajectories.is_empty() && (from..=to).any(f)
    }

    fn collides(&self, t: u32, fp: &Footprint) -> bool {
        self.trajectories
            .iter()
            .any(|tr| tr[(t as usize).min(tr.len() - 1)].intersects(fp))
    }

    fn parking_block(&self, fp: &Footprint) -> ParkingBlock {
        let mut last = None;
        for tr in &self.trajectories {
            if tr[tr.len() - 1].intersects(fp) {
                return ParkingBlock::Forever;
            }
            if let Some(t) = (0..tr.len() - 1).rev().find(|&t| tr[t].intersects(fp)) {
                last = last.max(Some(t as u32));
            }
        }
        last.map_or(ParkingBlock::Never, ParkingBlock::Until)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SearchOutcome {
    Found(TimedPath),
    NoPath,
    TimedOut,
}

impl SearchOutcome {
    pub fn found(self) -> Option<TimedPath> {
        match self {
            SearchOutcome::Found(p) => Some(p),
            _ => None,
        }
    }
}

struct BitGrid {
    width: usize,
    bits: Vec<u64>,
}

impl BitGrid {
    fn new(rows: usize, width: usize) -> Self {
        BitGrid {
            width,
            bits: vec![0; (rows * width).div_ceil(64)],
        }
    }

    fn get(&self, row: usize, col: usize) -> bool {
        let i = row * self.width + col;
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    fn set(&mut self, row: usize, col: usize) {
        let i = row * self.width + col;
        self.bits[i / 64] |= 1 << (i % 64);
    }
}

struct Motion<'a, O: ?Sized> {
    roadmap: &'a Roadmap,
    robot: &'a RobotModel,
    obstacles: &'a O,
}

impl<O: Obstacles + ?Sized> Motion<'_, O> {
    fn blocked(&self, from: usize, to: usize, departure: u32, steps: u32) -> bool {
        let (a, b) = (self.roadmap.vertex(from), self.roadmap.vertex(to));
        self.obstacles.any_active(departure + 1, departure + steps, &mut |t| {
            let s = (t - departure) as f64 / steps as f64;
            let q = self.robot.lerp(a, b, s);
            self.obstacles.collides(t, &self.robot.footprint_unchecked(&q))
        })
    }
}

/// Earliest-arrival path from `start` to `goal` that avoids `obstacles`,
/// arrives no later than `horizon` and can park at the goal afterwards.
/// Among equally fast paths the lexicographically smallest vertex sequence
/// is returned.
#[allow(clippy::too_many_arguments)]
pub fn timed_search<O: Obstacles + ?Sized>(
    roadmap: &Roadmap,
    robot: &RobotModel,
    start: usize,
    goal: usize,
    obstacles: &O,
    dt: f64,
    horizon: u32,
    deadline: Option<Instant>,
) -> Result<SearchOutcome> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let n = roadmap.vertex_count();
    if start >= n || goal >= n {
        return Err(Error::InvalidParameter(format!(
            "endpoint vertex out of range ({start}, {goal}) for {n} vertices"
        )));
    }
    let motion = Motion {
        roadmap,
        robot,
        obstacles,
    };
    let steps: Vec<Vec<(usize, u32)>> = (0..n)
        .map(|v| {
            roadmap
                .neighbors(v)
                .iter()
                .map(|&(u, w)| (u, edge_steps(w, dt)))
                .collect()
        })
        .collect();

    let start_fp = robot.footprint_unchecked(roadmap.vertex(start));
    if obstacles.any_active(0, 0, &mut |t| obstacles.collides(t, &start_fp)) {
        return Ok(SearchOutcome::NoPath);
    }
    let parking = obstacles.parking_block(&robot.footprint_unchecked(roadmap.vertex(goal)));
    let can_park = |t: u32| match parking {
        ParkingBlock::Never => true,
        ParkingBlock::Until(last) => t > last,
        ParkingBlock::Forever => false,
    };
    if parking == ParkingBlock::Forever {
        return Ok(SearchOutcome::NoPath);
    }

    let h = horizon as usize;
    let mut seen = BitGrid::new(h + 1, n);
    let mut layers: Vec<Vec<usize>> = vec![Vec::new(); h + 1];
    seen.set(0, start);
    layers[0].push(start);
    let mut arrival = None;
    for t in 0..=h {
        if t % 32 == 0 && deadline.is_some_and(|d| Instant::now() >= d) {
            return Ok(SearchOutcome::TimedOut);
        }
        if seen.get(t, goal) && can_park(t as u32) {
            arrival = Some(t);
            break;
        }
        for i in 0..layers[t].len() {
            let v = layers[t][i];
            for &(u, s) in &steps[v] {
                let t2 = t + s as usize;
                if t2 > h || seen.get(t2, u) || motion.blocked(v, u, t as u32, s) {
                    continue;
                }
                seen.set(t2, u);
                layers[t2].push(u);
            }
        }
    }
    let Some(arrival) = arrival else {
        return Ok(SearchOutcome::NoPath);
    };

    // States that can still reach (goal, arrival).
    let mut alive = BitGrid::new(arrival + 1, n);
    alive.set(arrival, goal);
    for t in (0..arrival).rev() {
        for &v in &layers[t] {
            let ok = steps[v].iter().any(|&(u, s)| {
                let t2 = t + s as usize;
                t2 <= arrival && alive.get(t2, u) && !motion.blocked(v, u, t as u32, s)
            });
            if ok {
                alive.set(t, v);
            }
        }
    }

    let mut vertices = vec![start];
    let mut arrivals = vec![0u32];
    let (mut v, mut t) = (start, 0usize);
    while !(v == goal && t == arrival) {
        let &(u, s) = steps[v]
            .iter()
            .find(|&&(u, s)| {
                let t2 = t + s as usize;
                t2 <= arrival && alive.get(t2, u) && !motion.blocked(v, u, t as u32, s)
            })
            .expect("every live state has a live successor");
        v = u;
        t += s as usize;
        vertices.push(v);
        arrivals.push(t as u32);
    }
    Ok(SearchOutcome::Found(TimedPath {
        agent: roadmap.agent(),
        vertices,
        arrivals,
        dt,
    }))
}

/// Minimum-duration path avoiding every constraint addressed to this
/// roadmap's agent; `None` when no such path arrives within `horizon`.
pub fn constrained_shortest_path(
    roadmap: &Roadmap,
    robot: &RobotModel,
    start: usize,
    goal: usize,
    constraints: &[Constraint],
    dt: f64,
    horizon: u32,
) -> Result<Option<TimedPath>> {
    if let Some(c) = constraints.iter().find(|c| c.agent != roadmap.agent()) {
        return Err(Error::InvalidParameter(format!(
            "constraint for agent {} passed to agent {}",
            c.agent,
            roadmap.agent()
        )));
    }
    let obstacles = ConstraintObstacles::new(constraints);
    Ok(timed_search(roadmap, robot, start, goal, &obstacles, dt, horizon, None)?.found())
}

pub fn shortest_path(
    roadmap: &Roadmap,
    robot: &RobotModel,
    start: usize,
    goal: usize,
    dt: f64,
    horizon: u32,
) -> Result<Option<TimedPath>> {
    Ok(timed_search(roadmap, robot, start, goal, &NoObstacles, dt, horizon, None)?.found())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Configuration;

    fn disk() -> RobotModel {
        RobotModel::disk(0, 0.5, 1.0).unwrap()
    }

    /// Diamond 0 -> {1, 2} -> 3; the route through 1 is cheaper.
    fn diamond() -> Roadmap {
        let mut r = Roadmap::new(0);
        for (x, y) in [(0.0, 0.0), (2.0, 1.0), (2.0, -3.0), (4.0, 0.0)] {
            r.add_vertex(Configuration::xy(x, y));
        }
        let robot = disk();
        for (a, b) in [(0, 1), (1, 3), (0, 2), (2, 3)] {
            let w = robot.travel_time(r.vertex(a), r.vertex(b));
            r.add_edge(a, b, w);
        }
        r
    }

    // Oracle: enumerate every simple path and keep the cheapest that avoids
    // the obstacles at every occupied timestep.
    fn brute_force(r: &Roadmap, robot: &RobotModel, obs: &ConstraintObstacles, dt: f64) -> Option<u32> {
        fn walk(
            r: &Roadmap,
            robot: &RobotModel,
            obs: &ConstraintObstacles,
            dt: f64,
            path: &mut Vec<usize>,
            t: u32,
            best: &mut Option<u32>,
        ) {
            let v = *path.last().unwrap();
            if v == 3 {
                *best = Some(best.map_or(t, |b| b.min(t)));
                return;
            }
            for &(u, w) in r.neighbors(v) {
                if path.contains(&u) {
                    continue;
                }
                let s = edge_steps(w, dt);
                let hit = (1..=s).any(|k| {
                    let q = crate::geometry::interpolate(robot, r.vertex(v), r.vertex(u), k as f64 / s as f64).unwrap();
                    obs.collides(t + k, &robot.footprint(&q).unwrap())
                });
                if !hit {
                    path.push(u);
                    walk(r, robot, obs, dt, path, t + s, best);
                    path.pop();
                }
            }
        }
        let mut best = None;
        walk(r, robot, obs, dt, &mut vec![0], 0, &mut best);
        best
    }

    #[test]
    fn edge_step_rounding() {
        assert_eq!(edge_steps(1.0, 0.25), 4);
        assert_eq!(edge_steps(1.01, 0.25), 5);
        assert_eq!(edge_steps(1e-12, 0.25), 1);
        assert_eq!(edge_steps(0.3 * 3.0, 0.3), 3);
    }

    #[test]
    fn unconstrained_diamond_takes_cheap_route() {
        let r = diamond();
        let p = shortest_path(&r, &disk(), 0, 3, 0.5, 64).unwrap().unwrap();
        assert_eq!(p.vertices, vec![0, 1, 3]);
        assert_eq!(p.arrivals, vec![0, 5, 10]);
        p.validate(&r).unwrap();
        assert!((p.cost() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn late_constraint_does_not_change_path() {
        let r = diamond();
        let robot = disk();
        let c = Constraint {
            agent: 0,
            timestep: 40,
            other_robot: robot.clone().with_id(1),
            other_config: Configuration::xy(2.0, 1.0),
        };
        let p = constrained_shortest_path(&r, &robot, 0, 3, &[c], 0.5, 64).unwrap().unwrap();
        assert_eq!(p.vertices, vec![0, 1, 3]);
    }

    #[test]
    fn blocked_cheap_route_matches_enumeration() {
        let r = diamond();
        let robot = disk();
        let c = Constraint {
            agent: 0,
            timestep: 5,
            other_robot: robot.clone().with_id(1),
            other_config: Configuration::xy(2.0, 1.0),
        };
        let p = constrained_shortest_path(&r, &robot, 0, 3, std::slice::from_ref(&c), 0.5, 64)
            .unwrap()
            .unwrap();
        let expected = brute_force(&r, &robot, &ConstraintObstacles::new([&c]), 0.5).unwrap();
        assert_eq!(p.duration(), expected);
        assert_eq!(p.vertices, vec![0, 2, 3]);
    }

    #[test]
    fn constraint_at_goal_after_arrival_delays_parking() {
        let r = diamond();
        let robot = disk();
        let c = Constraint {
            agent: 0,
            timestep: 12,
            other_robot: robot.clone().with_id(1),
            other_config: Configuration::xy(4.0, 0.0),
        };
        let p = constrained_shortest_path(&r, &robot, 0, 3, &[c], 0.5, 64).unwrap().unwrap();
        assert!(p.duration() > 12);
        assert_eq!(p.vertices, vec![0, 2, 3]);
    }

    #[test]
    fn start_constraint_at_zero_is_unsatisfiable() {
        let r = diamond();
        let robot = disk();
        let c = Constraint {
            agent: 0,
            timestep: 0,
            other_robot: robot.clone().with_id(1),
            other_config: Configuration::xy(0.5, 0.0),
        };
        assert!(constrained_shortest_path(&r, &robot, 0, 3, &[c], 0.5, 64).unwrap().is_none());
    }

    #[test]
    fn horizon_too_short_is_no_path() {
        let r = diamond();
        assert!(shortest_path(&r, &disk(), 0, 3, 0.5, 9).unwrap().is_none());
        assert!(shortest_path(&r, &disk(), 0, 3, 0.5, 10).unwrap().is_some());
    }

    #[test]
    fn foreign_constraint_is_rejected() {
        let r = diamond();
        let c = Constraint {
            agent: 4,
            timestep: 1,
            other_robot: disk(),
            other_config: Configuration::xy(0.0, 0.0),
        };
        assert!(constrained_shortest_path(&r, &disk(), 0, 3, &[c], 0.5, 64).is_err());
    }

    #[test]
    fn start_equals_goal_is_a_single_vertex_path() {
        let r = diamond();
        let p = shortest_path(&r, &disk(), 2, 2, 0.5, 8).unwrap().unwrap();
        assert_eq!(p.vertices, vec![2]);
        assert_eq!(p.duration(), 0);
    }
}
