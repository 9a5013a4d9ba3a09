use std::path::{Path, PathBuf};
use std::time::Duration;

use super::{gen_arms, gen_crossing, load_scenario, run_jobs, PlannerKind, RunRecord, Scenario};
use super::{DEFAULT_CROSSING_DENSITY, DEFAULT_CROSSING_RADIUS};
use crate::error::{Error, Result};

/// One line of a suite file.
#[derive(Debug, Clone, PartialEq)]
pub enum SuiteEntry {
    Crossing { agents: usize, radius: f64, density: f64 },
    Arms { arms: usize, links: usize },
    File(PathBuf),
}

/// A benchmark suite: which planners to run on which scenarios.
///
/// ```text
/// planners cbs decoupled
/// crossing 4 radius_m=0.5 density_m2=16
/// arms 3 links=2
/// scenario golden/crossing4.scn
/// ```
///
/// Generated entries are regenerated for every seed; scenario paths are
/// relative to the suite file and only get their planner seed replaced.
#[derive(Debug, Clone, PartialEq)]
pub struct Suite {
    pub planners: Vec<PlannerKind>,
    pub entries: Vec<SuiteEntry>,
}

fn options<'a>(ln: usize, words: impl Iterator<Item = &'a str>) -> Result<Vec<(&'a str, f64)>> {
    words
        .map(|w| {
            let (k, v) = w.split_once('=').ok_or_else(|| Error::parse(ln, format!("expected key=value, got `{w}`")))?;
            let v = v.parse().map_err(|_| Error::parse(ln, format!("bad number in `{w}`")))?;
            Ok((k, v))
        })
        .collect()
}

fn count(ln: usize, w: Option<&str>) -> Result<usize> {
    w.and_then(|w| w.parse().ok())
        .ok_or_else(|| Error::parse(ln, "expected a count"))
}

impl Suite {
    pub fn from_text(text: &str, base: &Path) -> Result<Suite> {
        let mut planners = Vec::new();
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let ln = i + 1;
            let line = raw.split('#').next().unwrap().trim();
            let mut words = line.split_whitespace();
            let Some(head) = words.next() else { continue };
            match head {
                "planners" => {
                    for w in words {
                        planners.push(PlannerKind::parse(w).ok_or_else(|| Error::parse(ln, format!("unknown planner `{w}`")))?);
                    }
                }
                "crossing" => {
                    let agents = count(ln, words.next())?;
                    let (mut radius, mut density) = (DEFAULT_CROSSING_RADIUS, DEFAULT_CROSSING_DENSITY);
                    for (k, v) in options(ln, words)? {
                        match k {
                            "radius_m" => radius = v,
                            "density_m2" => density = v,
                            _ => return Err(Error::parse(ln, format!("unknown crossing option `{k}`"))),
                        }
                    }
                    entries.push(SuiteEntry::Crossing { agents, radius, density });
                }
                "arms" => {
                    let arms = count(ln, words.next())?;
                    let mut links = 2;
                    for (k, v) in options(ln, words)? {
                        match k {
                            "links" if v >= 0.0 && v.fract() == 0.0 => links = v as usize,
                            _ => return Err(Error::parse(ln, format!("bad arms option `{k}`"))),
                        }
                    }
                    entries.push(SuiteEntry::Arms { arms, links });
                }
                "scenario" => {
                    let path = words.next().ok_or_else(|| Error::parse(ln, "expected a path"))?;
                    entries.push(SuiteEntry::File(base.join(path)));
                }
                other => return Err(Error::parse(ln, format!("unknown directive `{other}`"))),
            }
        }
        if planners.is_empty() {
            return Err(Error::parse(0, "suite lists no planners"));
        }
        if entries.is_empty() {
            return Err(Error::parse(0, "suite lists no scenarios"));
        }
        Ok(Suite { planners, entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Suite> {
        let path = path.as_ref();
        let base = path.parent().unwrap_or(Path::new("."));
        Suite::from_text(&std::fs::read_to_string(path)?, base)
    }

    /// Every entry instantiated for `seed`, in file order.
    pub fn scenarios(&self, seed: u64) -> Result<Vec<Scenario>> {
        self.entries
            .iter()
            .map(|e| match e {
                SuiteEntry::Crossing { agents, radius, density } => gen_crossing(*agents, *radius, *density, seed),
                SuiteEntry::Arms { arms, links } => gen_arms(*arms, *links, seed),
                SuiteEntry::File(p) => Ok(load_scenario(p)?.with_seed(seed)),
            })
            .collect()
    }

    /// Records ordered by entry, then seed, then planner.
    pub fn run(&self, seeds: &[u64], budget: Duration) -> Result<Vec<RunRecord>> {
        let per_seed: Vec<Vec<Scenario>> = seeds.iter().map(|&s| self.scenarios(s)).collect::<Result<_>>()?;
        let mut jobs = Vec::new();
        for e in 0..self.entries.len() {
            for scenarios in &per_seed {
                for &p in &self.planners {
                    jobs.push((scenarios[e].clone(), p));
                }
            }
        }
        Ok(run_jobs(jobs, budget))
    }
}
