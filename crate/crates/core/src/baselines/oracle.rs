//! Exhaustive uniform-cost search over the joint time-expanded roadmap.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use crate::cbs::CostMetric;
use crate::error::{Error, Result};
use crate::geometry::{Footprint, RobotModel};
use crate::roadmap::{edge_steps, Roadmap, TimedPath};

type State = (u32, Vec<Pos>);

/// Largest joint state space the oracle will search.
pub const ORACLE_STATE_BOUND: u128 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Pos {
    At(u32),
    Moving { from: u32, to: u32, elapsed: u32, total: u32 },
    Parked,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub cost_steps: u64,
    /// Group cost in seconds.
    pub cost: f64,
    pub paths: Vec<TimedPath>,
    pub states_expanded: usize,
}

struct Agent<'a> {
    roadmap: &'a Roadmap,
    robot: &'a RobotModel,
    goal: u32,
    cache: HashMap<Pos, Footprint>,
}

impl Agent<'_> {
    fn footprint(&mut self, p: Pos) -> &Footprint {
        let (r, robot, goal) = (self.roadmap, self.robot, self.goal);
        self.cache.entry(p).or_insert_with(|| {
            let q = match p {
                Pos::At(v) => r.vertex(v as usize).clone(),
                Pos::Parked => r.vertex(goal as usize).clone(),
                Pos::Moving { from, to, elapsed, total } => {
                    robot.lerp(r.vertex(from as usize), r.vertex(to as usize), elapsed as f64 / total as f64)
                }
            };
            robot.footprint_unchecked(&q)
        })
    }

    fn successors(&self, p: Pos, dt: f64) -> Vec<Pos> {
        match p {
            Pos::Parked => vec![Pos::Parked],
            Pos::Moving { from, to, elapsed, total } => {
                if elapsed + 1 == total {
                    vec![Pos::At(to)]
                } else {
                    vec![Pos::Moving { from, to, elapsed: elapsed + 1, total }]
                }
            }
            Pos::At(v) => {
                let mut out = Vec::new();
                if v == self.goal {
                    out.push(Pos::Parked);
                }
                for &(u, w) in self.roadmap.neighbors(v as usize) {
                    let total = edge_steps(w, dt);
                    out.push(if total == 1 {
                        Pos::At(u as u32)
                    } else {
                        Pos::Moving { from: v, to: u as u32, elapsed: 1, total }
                    });
                }
                out
            }
        }
    }

    /// Number of distinct positions: vertices, interior edge steps, parked.
    fn position_count(&self, dt: f64) -> u128 {
        let interior: u128 = (0..self.roadmap.vertex_count())
            .flat_map(|v| self.roadmap.neighbors(v).iter())
            .map(|&(_, w)| edge_steps(w, dt) as u128 - 1)
            .sum();
        self.roadmap.vertex_count() as u128 + interior + 1
    }
}

fn done(state: &[Pos], goals: &[u32]) -> bool {
    state
        .iter()
        .zip(goals)
        .all(|(p, &g)| matches!(p, Pos::Parked) || *p == Pos::At(g))
}

/// Optimal joint plan on fixed roadmaps: every agent follows its own
/// roadmap without waiting, parks at its goal for good, and no two agents
/// collide at any timestep up to `horizon`. `None` if no such plan exists.
#[allow(clippy::too_many_arguments)]
pub fn joint_oracle(
    roadmaps: &[Roadmap],
    robots: &[RobotModel],
    starts: &[usize],
    goals: &[usize],
    dt: f64,
    horizon: u32,
    metric: CostMetric,
) -> Result<Option<OracleSolution>> {
    let n = robots.len();
    if roadmaps.len() != n || starts.len() != n || goals.len() != n {
        return Err(Error::InvalidParameter("robots, roadmaps and endpoints differ in length".into()));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let mut agents: Vec<Agent> = (0..n)
        .map(|i| Agent {
            roadmap: &roadmaps[i],
            robot: &robots[i],
            goal: goals[i] as u32,
            cache: HashMap::new(),
        })
        .collect();
    let states = agents
        .iter()
        .map(|a| a.position_count(dt))
        .fold(horizon as u128 + 1, |acc, c| acc.saturating_mul(c));
    if states > ORACLE_STATE_BOUND {
        return Err(Error::StateBoundExceeded {
            states,
            bound: ORACLE_STATE_BOUND,
        });
    }
    let goal_ids: Vec<u32> = goals.iter().map(|&g| g as u32).collect();

    let collides = |agents: &mut [Agent], state: &[Pos]| {
        let fps: Vec<Footprint> = agents.iter_mut().zip(state).map(|(a, &p)| a.footprint(p).clone()).collect();
        (0..n).any(|i| (i + 1..n).any(|j| fps[i].intersects(&fps[j])))
    };

    let start: Vec<Pos> = starts.iter().map(|&s| Pos::At(s as u32)).collect();
    if collides(&mut agents, &start) {
        return Ok(None);
    }
    // State -> (best cost, predecessor).
    let mut best: HashMap<State, (u64, Option<State>)> = HashMap::new();
    let mut open = BinaryHeap::new();
    best.insert((0, start.clone()), (0, None));
    open.push(Reverse((0u64, 0u32, start)));
    let mut expanded = 0;

    while let Some(Reverse((g, t, state))) = open.pop() {
        if best[&(t, state.clone())].0 < g {
            continue;
        }
        expanded += 1;
        if done(&state, &goal_ids) {
            let paths = reconstruct(&best, t, state, starts, dt);
            return Ok(Some(OracleSolution {
                cost_steps: g,
                cost: g as f64 * dt,
                paths,
                states_expanded: expanded,
            }));
        }
        if t == horizon {
            continue;
        }
        let options: Vec<Vec<Pos>> = agents.iter().zip(&state).map(|(a, &p)| a.successors(p, dt)).collect();
        let mut choice = vec![0usize; n];
        'product: loop {
            let next: Vec<Pos> = (0..n).map(|i| options[i][choice[i]]).collect();
            let moving = next.iter().filter(|p| !matches!(p, Pos::Parked)).count() as u64;
            let step = match metric {
                CostMetric::SumOfCosts => moving,
                CostMetric::Makespan => u64::from(moving > 0),
            };
            // All-parked successors are skipped: their predecessor already
            // passed the goal test.
            if moving > 0 && !collides(&mut agents, &next) {
                let key = (t + 1, next);
                let ng = g + step;
                if best.get(&key).is_none_or(|&(c, _)| ng < c) {
                    best.insert(key.clone(), (ng, Some((t, state.clone()))));
                    open.push(Reverse((ng, key.0, key.1)));
                }
            }
            for i in 0..n {
                choice[i] += 1;
                if choice[i] < options[i].len() {
                    continue 'product;
                }
                choice[i] = 0;
            }
            break;
        }
    }
    Ok(None)
}

type Parents = HashMap<(u32, Vec<Pos>), (u64, Option<(u32, Vec<Pos>)>)>;

fn reconstruct(best: &Parents, t: u32, state: Vec<Pos>, starts: &[usize], dt: f64) -> Vec<TimedPath> {
    let mut chain = vec![(t, state)];
    while let Some((_, Some(prev))) = best.get(chain.last().unwrap()) {
        chain.push(prev.clone());
    }
    chain.reverse();
    (0..starts.len())
        .map(|i| {
            let mut vertices = Vec::new();
            let mut arrivals = Vec::new();
            for (t, s) in &chain {
                if let Pos::At(v) = s[i] {
                    vertices.push(v as usize);
                    arrivals.push(*t);
                }
            }
            TimedPath {
                agent: i,
                vertices,
                arrivals,
                dt,
            }
        })
        .collect()
}
