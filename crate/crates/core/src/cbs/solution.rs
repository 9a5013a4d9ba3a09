use std::fmt::Write as _;

use super::{group_cost, CostMetric};
use crate::conflict::trajectory;
use crate::error::{Error, Result};
use crate::geometry::{Configuration, RobotModel};
use crate::roadmap::{Roadmap, TimedPath};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PlannerStats {
    pub ct_expanded: usize,
    pub ct_generated: usize,
    pub growth_rounds: usize,
    pub low_level_replans: usize,
    pub conflicts: usize,
}

impl PlannerStats {
    pub(crate) fn absorb(&mut self, other: &PlannerStats) {
        self.ct_expanded += other.ct_expanded;
        self.ct_generated += other.ct_generated;
        self.low_level_replans += other.low_level_replans;
        self.conflicts += other.conflicts;
    }
}

/// A conflict-free set of timed paths with their sampled trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub paths: Vec<TimedPath>,
    pub metric: CostMetric,
    pub dt: f64,
    /// Group cost in seconds.
    pub cost: f64,
    /// Per-agent configurations at timesteps `0..=makespan`.
    pub trajectories: Vec<Vec<Configuration>>,
    pub stats: PlannerStats,
}

impl Solution {
    pub fn new(
        paths: Vec<TimedPath>,
        roadmaps: &[Roadmap],
        robots: &[RobotModel],
        metric: CostMetric,
        stats: PlannerStats,
    ) -> Result<Self> {
        if paths.len() != roadmaps.len() || paths.len() != robots.len() {
            return Err(Error::InvalidParameter("paths, roadmaps and robots differ in length".into()));
        }
        let makespan = paths.iter().map(TimedPath::duration).max().unwrap_or(0);
        let trajectories = paths
            .iter()
            .zip(roadmaps.iter().zip(robots))
            .map(|(p, (r, robot))| trajectory(p, r, robot, makespan))
            .collect();
        Ok(Solution {
            dt: paths.first().map_or(0.0, |p| p.dt),
            cost: group_cost(&paths, metric),
            paths,
            metric,
            trajectories,
            stats,
        })
    }

    pub fn makespan_steps(&self) -> u32 {
        self.paths.iter().map(TimedPath::duration).max().unwrap_or(0)
    }

    pub fn record(&self) -> SolutionRecord {
        SolutionRecord {
            metric: self.metric,
            cost: self.cost,
            dt: self.dt,
            stats: self.stats.clone(),
            trajectories: self.trajectories.clone(),
        }
    }

    /// Plain-text trajectory dump at 12 significant digits.
    pub fn to_text(&self) -> String {
        self.record().to_text()
    }
}

/// The serialized form of a [`Solution`]: cost, stats and trajectories,
/// without roadmap indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionRecord {
    pub metric: CostMetric,
    pub cost: f64,
    pub dt: f64,
    pub stats: PlannerStats,
    pub trajectories: Vec<Vec<Configuration>>,
}

fn num(x: f64) -> String {
    format!("{x:.11e}")
}

impl SolutionRecord {
    pub fn to_text(&self) -> String {
        let steps = self.trajectories.first().map_or(0, Vec::len);
        let s = &self.stats;
        let mut out = format!(
            "solution metric={} cost={} dt={} agents={} timesteps={}\n\
             stats ct_expanded={} ct_generated={} growth_rounds={} low_level_replans={} conflicts={}\n",
            self.metric.name(),
            num(self.cost),
            num(self.dt),
            self.trajectories.len(),
            steps,
            s.ct_expanded,
            s.ct_generated,
            s.growth_rounds,
            s.low_level_replans,
            s.conflicts,
        );
        for (i, traj) in self.trajectories.iter().enumerate() {
            let dof = traj.first().map_or(0, Configuration::dof);
            writeln!(out, "agent {i} dof={dof}").unwrap();
            for (t, q) in traj.iter().enumerate() {
                write!(out, "{t}").unwrap();
                for v in q.values() {
                    write!(out, " {}", num(*v)).unwrap();
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
        let (ln, header) = lines.next().ok_or_else(|| Error::parse(1, "empty solution"))?;
        let fields = keyed(ln, header, "solution")?;
        let get = |k: &str| {
            fields
                .iter()
                .find(|(key, _)| *key == k)
                .map(|(_, v)| *v)
                .ok_or_else(|| Error::parse(ln, format!("missing {k}")))
        };
        let metric = CostMetric::parse(get("metric")?).ok_or_else(|| Error::parse(ln, "unknown metric"))?;
        let cost: f64 = get("cost")?.parse().map_err(|_| Error::parse(ln, "bad cost"))?;
        let dt: f64 = get("dt")?.parse().map_err(|_| Error::parse(ln, "bad dt"))?;
        let agents: usize = get("agents")?.parse().map_err(|_| Error::parse(ln, "bad agents"))?;
        let steps: usize = get("timesteps")?.parse().map_err(|_| Error::parse(ln, "bad timesteps"))?;

        let (ln, line) = lines.next().ok_or_else(|| Error::parse(ln + 1, "missing stats line"))?;
        let sf = keyed(ln, line, "stats")?;
        let stat = |k: &str| -> Result<usize> {
            sf.iter()
                .find(|(key, _)| *key == k)
                .ok_or_else(|| Error::parse(ln, format!("missing {k}")))?
                .1
                .parse()
                .map_err(|_| Error::parse(ln, format!("bad {k}")))
        };
        let stats = PlannerStats {
            ct_expanded: stat("ct_expanded")?,
            ct_generated: stat("ct_generated")?,
            growth_rounds: stat("growth_rounds")?,
            low_level_replans: stat("low_level_replans")?,
            conflicts: stat("conflicts")?,
        };

        let mut trajectories = Vec::with_capacity(agents);
        for i in 0..agents {
            let (ln, line) = lines.next().ok_or_else(|| Error::parse(0, format!("missing agent {i}")))?;
            let mut it = line.split_whitespace();
            if it.next() != Some("agent") || it.next() != Some(&i.to_string()) {
                return Err(Error::parse(ln, format!("expected `agent {i}`")));
            }
            let dof: usize = it
                .next()
                .and_then(|f| f.strip_prefix("dof="))
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::parse(ln, "expected dof=<n>"))?;
            let mut traj = Vec::with_capacity(steps);
            for t in 0..steps {
                let (ln, line) = lines.next().ok_or_else(|| Error::parse(0, format!("agent {i} ends early")))?;
                let mut it = line.split_whitespace();
                if it.next() != Some(&t.to_string()) {
                    return Err(Error::parse(ln, format!("expected timestep {t}")));
                }
                let vals: Vec<f64> = it
                    .map(|v| v.parse().map_err(|_| Error::parse(ln, format!("bad number `{v}`"))))
                    .collect::<Result<_>>()?;
                if vals.len() != dof {
                    return Err(Error::parse(ln, format!("expected {dof} values, got {}", vals.len())));
                }
                traj.push(Configuration::new(vals));
            }
            trajectories.push(traj);
        }
        if let Some((ln, _)) = lines.next() {
            return Err(Error::parse(ln, "trailing content"));
        }
        Ok(SolutionRecord {
            metric,
            cost,
            dt,
            stats,
            trajectories,
        })
    }
}

fn keyed<'a>(ln: usize, line: &'a str, tag: &str) -> Result<Vec<(&'a str, &'a str)>> {
    let mut it = line.split_whitespace();
    if it.next() != Some(tag) {
        return Err(Error::parse(ln, format!("expected `{tag}` line")));
    }
    it.map(|f| f.split_once('=').ok_or_else(|| Error::parse(ln, format!("expected key=value, got `{f}`"))))
        .collect()
}
