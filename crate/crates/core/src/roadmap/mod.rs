//! Per-agent probabilistic roadmaps and the time-expanded constrained search.

mod io;
mod search;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use search::{
    constrained_shortest_path, default_horizon, edge_steps, shortest_path, timed_search,
    Constraint, ConstraintObstacles, NoObstacles, Obstacles, ParkingBlock, SearchOutcome,
    TimedPath, TrajectoryObstacles, MIN_HORIZON,
};

use crate::error::{Error, Result};
use crate::geometry::{is_valid_config, is_valid_edge, Configuration, Environment, RobotModel};
use crate::par;

/// Two vertices closer than this are the same vertex.
pub const DEDUP_TOLERANCE: f64 = 1e-9;

pub const DEFAULT_K: usize = 8;

/// Edge weights are stored at the precision they are serialized with, so a
/// roadmap read back from text is identical to the one that was written.
pub fn quantize_weight(w: f64) -> f64 {
    format!("{w:.11e}").parse().expect("formatted float parses")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LineageRecord {
    pub seed: u64,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    /// Traversal time in seconds.
    pub weight: f64,
}

/// Undirected roadmap over one agent's configuration space.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Roadmap {
    agent: usize,
    vertices: Vec<Configuration>,
    // Sorted by neighbour index.
    adjacency: Vec<Vec<(usize, f64)>>,
    lineage: Vec<LineageRecord>,
}

impl Roadmap {
    pub fn new(agent: usize) -> Self {
        Roadmap {
            agent,
            ..Default::default()
        }
    }

    pub fn agent(&self) -> usize {
        self.agent
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn vertex(&self, i: usize) -> &Configuration {
        &self.vertices[i]
    }

    pub fn vertices(&self) -> &[Configuration] {
        &self.vertices
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    pub fn lineage(&self) -> &[LineageRecord] {
        &self.lineage
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    /// Edges with `a < b`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(a, nbrs)| {
            nbrs.iter()
                .filter(move |(b, _)| *b > a)
                .map(move |&(b, weight)| Edge { a, b, weight })
        })
    }

    pub fn weight(&self, a: usize, b: usize) -> Option<f64> {
        self.adjacency[a]
            .binary_search_by_key(&b, |e| e.0)
            .ok()
            .map(|i| self.adjacency[a][i].1)
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.weight(a, b).is_some()
    }

    pub fn add_vertex(&mut self, q: Configuration) -> usize {
        self.vertices.push(q);
        self.adjacency.push(Vec::new());
        self.vertices.len() - 1
    }

    /// Inserts an undirected edge; returns false if it already existed.
    pub fn add_edge(&mut self, a: usize, b: usize, weight: f64) -> bool {
        assert!(a != b, "self loops are not allowed");
        match self.adjacency[a].binary_search_by_key(&b, |e| e.0) {
            Ok(_) => false,
            Err(pos) => {
                self.adjacency[a].insert(pos, (b, weight));
                let pos = self.adjacency[b].binary_search_by_key(&a, |e| e.0).unwrap_err();
                self.adjacency[b].insert(pos, (a, weight));
                true
            }
        }
    }

    pub(crate) fn push_lineage(&mut self, seed: u64, samples: usize) {
        self.lineage.push(LineageRecord { seed, samples });
    }

    /// Index of a vertex within [`DEDUP_TOLERANCE`] of `q`.
    pub fn find_vertex(&self, robot: &RobotModel, q: &Configuration) -> Option<usize> {
        self.vertices
            .iter()
            .position(|v| robot.distance(v, q) <= DEDUP_TOLERANCE)
    }

    /// The `k` nearest vertices to `q`, excluding `skip`; ties broken by index.
    pub fn nearest(&self, robot: &RobotModel, q: &Configuration, k: usize, skip: Option<usize>) -> Vec<usize> {
        let mut cands: Vec<(f64, usize)> = self
            .vertices
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != skip)
            .map(|(i, v)| (robot.distance(q, v), i))
            .collect();
        let by_dist = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if cands.len() > k {
            cands.select_nth_unstable_by(k, by_dist);
            cands.truncate(k);
        }
        cands.sort_by(by_dist);
        cands.into_iter().map(|(_, i)| i).collect()
    }
}

/// Sampling and connection settings for one robot.
#[derive(Debug, Clone, Copy)]
pub struct Prm<'a> {
    pub env: &'a Environment,
    pub robot: &'a RobotModel,
    pub k: usize,
    /// Local planner resolution in C-space units.
    pub step: f64,
}

impl<'a> Prm<'a> {
    pub fn new(env: &'a Environment, robot: &'a RobotModel, k: usize) -> Self {
        Prm {
            env,
            robot,
            k,
            step: robot.default_edge_step(),
        }
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }

    fn check(&self, n: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::InvalidParameter("sample count must be at least 1".into()));
        }
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::InvalidParameter(format!("edge step must be positive, got {}", self.step)));
        }
        Ok(())
    }

    fn sample(&self, n: usize, seed: u64) -> Result<Vec<Configuration>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let attempts = 100 * n;
        let mut out = Vec::with_capacity(n);
        for _ in 0..attempts {
            if out.len() == n {
                break;
            }
            let q = self.robot.sample(&mut rng, self.env);
            if is_valid_config(self.env, self.robot, &q)? {
                out.push(q);
            }
        }
        if out.is_empty() {
            return Err(Error::SamplingExhausted { attempts });
        }
        Ok(out)
    }

    fn edge(&self, a: &Configuration, b: &Configuration) -> Result<Option<f64>> {
        if self.robot.distance(a, b) <= DEDUP_TOLERANCE || !is_valid_edge(self.env, self.robot, a, b, self.step)? {
            return Ok(None);
        }
        Ok(Some(quantize_weight(self.robot.travel_time(a, b))))
    }

    /// Attempts connections from each vertex in `from` to its k nearest.
    fn connect(&self, r: &mut Roadmap, from: std::ops::Range<usize>) -> Result<()> {
        let mut pairs: Vec<(usize, usize)> = par::map_range(from, |i| {
            r.nearest(self.robot, r.vertex(i), self.k, Some(i))
                .into_iter()
                .map(|j| (i.min(j), i.max(j)))
                .collect::<Vec<_>>()
        })
        .into_iter()
        .flatten()
        .filter(|&(a, b)| !r.has_edge(a, b))
        .collect();
        pairs.sort_unstable();
        pairs.dedup();
        let checked = par::map(&pairs, |&(a, b)| self.edge(r.vertex(a), r.vertex(b)));
        for (&(a, b), w) in pairs.iter().zip(checked) {
            if let Some(w) = w? {
                r.add_edge(a, b, w);
            }
        }
        Ok(())
    }

    pub fn build(&self, n: usize, seed: u64) -> Result<Roadmap> {
        self.check(n)?;
        let mut r = Roadmap::new(self.robot.id);
        for q in self.sample(n, seed)? {
            r.add_vertex(q);
        }
        r.push_lineage(seed, n);
        let len = r.vertex_count();
        self.connect(&mut r, 0..len)?;
        Ok(r)
    }

    pub fn grow(&self, r: &Roadmap, n_additional: usize, seed: u64) -> Result<Roadmap> {
        self.check(n_additional)?;
        let mut out = r.clone();
        let old = out.vertex_count();
        for q in self.sample(n_additional, seed)? {
            out.add_vertex(q);
        }
        out.push_lineage(seed, n_additional);
        let len = out.vertex_count();
        self.connect(&mut out, old..len)?;
        Ok(out)
    }

    fn insert_endpoint(&self, r: &mut Roadmap, q: &Configuration) -> Result<usize> {
        self.robot.check_dof(q)?;
        if !is_valid_config(self.env, self.robot, q)? {
            return Err(Error::Validation(format!(
                "agent {}: endpoint {:?} is not a valid configuration",
                self.robot.id,
                q.values()
            )));
        }
        let v = match r.find_vertex(self.robot, q) {
            Some(v) => v,
            None => r.add_vertex(q.clone()),
        };
        self.connect(r, v..v + 1)?;
        Ok(v)
    }

    pub fn connect_endpoints(
        &self,
        r: &Roadmap,
        start: &Configuration,
        goal: &Configuration,
    ) -> Result<(Roadmap, usize, usize)> {
        let mut out = r.clone();
        let s = self.insert_endpoint(&mut out, start)?;
        let g = self.insert_endpoint(&mut out, goal)?;
        if s != g {
            if out.degree(s) == 0 {
                return Err(Error::DisconnectedEndpoint {
                    agent: self.robot.id,
                    which: "start",
                });
            }
            if out.degree(g) == 0 {
                return Err(Error::DisconnectedEndpoint {
                    agent: self.robot.id,
                    which: "goal",
                });
            }
        }
        Ok((out, s, g))
    }
}

/// Builds a roadmap of up to `n` valid uniform samples, each connected to its
/// `k` nearest neighbours where the straight-line motion is valid.
pub fn build_roadmap(env: &Environment, robot: &RobotModel, n: usize, k: usize, seed: u64) -> Result<Roadmap> {
    Prm::new(env, robot, k).build(n, seed)
}

pub fn grow_roadmap(
    r: &Roadmap,
    env: &Environment,
    robot: &RobotModel,
    n_additional: usize,
    k: usize,
    seed: u64,
) -> Result<Roadmap> {
    Prm::new(env, robot, k).grow(r, n_additional, seed)
}

pub fn connect_endpoints(
    r: &Roadmap,
    env: &Environment,
    robot: &RobotModel,
    start: &Configuration,
    goal: &Configuration,
    k: usize,
) -> Result<(Roadmap, usize, usize)> {
    Prm::new(env, robot, k).connect_endpoints(r, start, goal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ConvexPolygon, Vec2};

    fn disk() -> RobotModel {
        RobotModel::disk(0, 0.5, 1.0).unwrap()
    }

    #[test]
    fn single_sample_has_no_edges() {
        let env = Environment::open(20.0, 20.0).unwrap();
        let r = build_roadmap(&env, &disk(), 1, 8, 3).unwrap();
        assert_eq!(r.vertex_count(), 1);
        assert_eq!(r.edge_count(), 0);
    }

    #[test]
    fn open_space_gives_complete_graph() {
        let env = Environment::open(20.0, 20.0).unwrap();
        let r = build_roadmap(&env, &disk(), 5, 4, 11).unwrap();
        assert_eq!(r.vertex_count(), 5);
        assert_eq!(r.edge_count(), 10);
        let g = grow_roadmap(&r, &env, &disk(), 5, 9, 12).unwrap();
        assert_eq!(g.vertex_count(), 10);
        assert_eq!(g.edge_count(), 45);
        assert_eq!(g.lineage().len(), 2);
    }

    #[test]
    fn edge_weights_are_symmetric_travel_times() {
        let env = Environment::open(20.0, 20.0).unwrap();
        let robot = RobotModel::disk(0, 0.5, 2.0).unwrap();
        let r = build_roadmap(&env, &robot, 20, 5, 1).unwrap();
        for e in r.edges() {
            assert_eq!(r.weight(e.a, e.b), r.weight(e.b, e.a));
            let t = robot.travel_time(r.vertex(e.a), r.vertex(e.b));
            assert!((e.weight - t).abs() <= 1e-11 * t.max(1.0));
            assert!(e.weight > 0.0);
        }
    }

    #[test]
    fn wall_is_never_crossed() {
        let wall = ConvexPolygon::rect(Vec2::new(9.5, 0.0), Vec2::new(10.5, 20.0)).unwrap();
        let env = Environment::new(Environment::open(20.0, 20.0).unwrap().bounds, vec![wall]).unwrap();
        let robot = disk();
        let r = build_roadmap(&env, &robot, 50, 8, 5).unwrap();
        assert!(r.edge_count() > 0);
        let step = robot.default_edge_step();
        for e in r.edges() {
            let (a, b) = (r.vertex(e.a), r.vertex(e.b));
            assert!(is_valid_edge(&env, &robot, a, b, step / 10.0).unwrap());
            assert_eq!(a.values()[0] < 10.0, b.values()[0] < 10.0);
        }
    }

    #[test]
    fn growth_keeps_prior_graph_and_is_deterministic() {
        let env = Environment::open(3.0, 3.0).unwrap();
        let robot = disk();
        let r = build_roadmap(&env, &robot, 10, 4, 2).unwrap();
        let g1 = grow_roadmap(&r, &env, &robot, 1, 4, 3).unwrap();
        let g2 = grow_roadmap(&r, &env, &robot, 1, 4, 3).unwrap();
        assert_eq!(g1.to_text(), g2.to_text());
        for i in 0..r.vertex_count() {
            assert_eq!(r.vertex(i), g1.vertex(i));
        }
        for e in r.edges() {
            assert_eq!(g1.weight(e.a, e.b), Some(e.weight));
        }
    }

    #[test]
    fn sampling_exhaustion_is_reported() {
        let env = Environment::open(0.5, 0.5).unwrap();
        let err = build_roadmap(&env, &disk(), 3, 2, 0).unwrap_err();
        assert!(matches!(err, Error::SamplingExhausted { attempts: 300 }));
    }

    #[test]
    fn endpoints_deduplicate_and_connect() {
        let env = Environment::open(20.0, 20.0).unwrap();
        let robot = disk();
        let r = build_roadmap(&env, &robot, 6, 8, 9).unwrap();
        let existing = r.vertex(2).clone();
        let (c, s, g) = connect_endpoints(&r, &env, &robot, &existing, &Configuration::xy(10.0, 10.0), 3).unwrap();
        assert_eq!(s, 2);
        assert_eq!(g, 6);
        assert_eq!(c.vertex_count(), 7);
        assert_eq!(c.degree(g), 3);
    }

    #[test]
    fn endpoint_in_pocket_is_disconnected() {
        // A U-shaped pocket opening upward toward the top wall: the start sits
        // inside and every sample outside is blocked by a pocket wall.
        let b = Environment::open(20.0, 20.0).unwrap().bounds;
        let walls = vec![
            ConvexPolygon::rect(Vec2::new(8.0, 8.0), Vec2::new(12.0, 9.0)).unwrap(),
            ConvexPolygon::rect(Vec2::new(8.0, 9.0), Vec2::new(9.0, 12.0)).unwrap(),
            ConvexPolygon::rect(Vec2::new(11.0, 9.0), Vec2::new(12.0, 12.0)).unwrap(),
            ConvexPolygon::rect(Vec2::new(8.0, 12.0), Vec2::new(12.0, 13.0)).unwrap(),
        ];
        let env = Environment::new(b, walls).unwrap();
        let robot = disk();
        let r = build_roadmap(&env, &robot, 30, 8, 4).unwrap();
        let start = Configuration::xy(10.0, 10.5);
        // oracle: no roadmap vertex has a valid straight line to the start
        let step = robot.default_edge_step();
        assert!(r
            .vertices()
            .iter()
            .all(|v| !is_valid_edge(&env, &robot, v, &start, step).unwrap()));
        let err = connect_endpoints(&r, &env, &robot, &start, &Configuration::xy(2.0, 2.0), 8).unwrap_err();
        assert!(matches!(err, Error::DisconnectedEndpoint { which: "start", .. }));
    }
}
