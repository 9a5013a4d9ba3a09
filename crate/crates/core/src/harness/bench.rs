use std::fmt::Write as _;
use std::io;
use std::time::{Duration, Instant};

use super::Scenario;
use crate::baselines::{composite_prm_plan, decoupled_prm_plan, decoupled_query, DecoupledOutcome};
use crate::cbs::{plan, query_horizon, Query, QueryConfig, QueryOutcome, PlanReport, PlanStatus, PlannerStats, RoadmapGrower, Solution};
use crate::error::{Error, Result};
use crate::par;
use crate::roadmap::Roadmap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PlannerKind {
    Cbs,
    Composite,
    Decoupled,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 3] = [PlannerKind::Cbs, PlannerKind::Composite, PlannerKind::Decoupled];

    pub fn name(self) -> &'static str {
        match self {
            PlannerKind::Cbs => "cbs",
            PlannerKind::Composite => "composite",
            PlannerKind::Decoupled => "decoupled",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        PlannerKind::ALL.into_iter().find(|k| k.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Solved,
    Timeout,
    Infeasible,
    /// The planner raised an error, e.g. it could not sample a valid configuration.
    Error(String),
}

impl Outcome {
    pub fn name(&self) -> &'static str {
        match self {
            Outcome::Solved => "solved",
            Outcome::Timeout => "timeout",
            Outcome::Infeasible => "infeasible",
            Outcome::Error(_) => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub scenario: String,
    pub planner: PlannerKind,
    pub seed: u64,
    pub outcome: Outcome,
    pub time_s: f64,
    /// Group cost in seconds; present iff solved.
    pub cost: Option<f64>,
    pub roadmap_vertices: Vec<usize>,
    pub stats: PlannerStats,
}

/// Runs one planner on a scenario with the scenario's own parameters.
pub fn run_planner(s: &Scenario, planner: PlannerKind) -> Result<PlanReport> {
    let f = match planner {
        PlannerKind::Cbs => plan,
        PlannerKind::Composite => composite_prm_plan,
        PlannerKind::Decoupled => {
            return decoupled_prm_plan(&s.env, &s.robots, &s.starts, &s.goals, None, &s.params);
        }
    };
    f(&s.env, &s.robots, &s.starts, &s.goals, &s.params)
}

fn record(s: &Scenario, planner: PlannerKind, result: Result<PlanReport>, time: Duration) -> RunRecord {
    let mut r = RunRecord {
        scenario: s.name.clone(),
        planner,
        seed: s.params.seed,
        outcome: Outcome::Timeout,
        time_s: time.as_secs_f64(),
        cost: None,
        roadmap_vertices: Vec::new(),
        stats: PlannerStats::default(),
    };
    match result {
        Ok(rep) => {
            r.roadmap_vertices = rep.roadmaps.iter().map(Roadmap::vertex_count).collect();
            r.stats = rep.stats;
            match rep.status {
                PlanStatus::Solved(sol) => {
                    r.outcome = Outcome::Solved;
                    r.cost = Some(sol.cost);
                }
                PlanStatus::TimedOut => r.outcome = Outcome::Timeout,
                PlanStatus::Infeasible(_) => r.outcome = Outcome::Infeasible,
            }
        }
        Err(e) => r.outcome = Outcome::Error(e.to_string()),
    }
    r
}

/// Runs a planner and times the call alone; returns the solution too.
pub fn timed_run(s: &Scenario, planner: PlannerKind) -> (RunRecord, Option<Solution>) {
    let t0 = Instant::now();
    let result = run_planner(s, planner);
    let time = t0.elapsed();
    let sol = result.as_ref().ok().and_then(|r| r.solution().cloned());
    (record(s, planner, result, time), sol)
}

/// Every (scenario, planner, seed) combination with the given per-run
/// budget. Records come back in that nested order.
pub fn run_benchmark(scenarios: &[Scenario], planners: &[PlannerKind], seeds: &[u64], budget: Duration) -> Vec<RunRecord> {
    let jobs: Vec<(Scenario, PlannerKind)> = scenarios
        .iter()
        .flat_map(|s| {
            planners
                .iter()
                .flat_map(move |&p| seeds.iter().map(move |&seed| (s.with_seed(seed), p)))
        })
        .collect();
    run_jobs(jobs, budget)
}

/// Runs each (scenario, planner) pair as given, with the budget replaced.
pub fn run_jobs(mut jobs: Vec<(Scenario, PlannerKind)>, budget: Duration) -> Vec<RunRecord> {
    for (s, _) in &mut jobs {
        s.params.budget = budget;
    }
    par::map(&jobs, |(s, p)| timed_run(s, *p).0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub scenario: String,
    pub planner: PlannerKind,
    pub runs: usize,
    pub solved: usize,
    pub success_rate: f64,
    /// Over solved runs; `None` when nothing was solved.
    pub median_time_s: Option<f64>,
    pub mean_time_s: Option<f64>,
    pub mean_cost: Option<f64>,
    pub mean_roadmap_vertices: f64,
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    })
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Groups records by (scenario, planner) in first-seen order.
pub fn summarize(records: &[RunRecord]) -> Vec<SummaryRow> {
    let mut keys: Vec<(String, PlannerKind)> = Vec::new();
    for r in records {
        let k = (r.scenario.clone(), r.planner);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(scenario, planner)| {
            let group: Vec<&RunRecord> = records
                .iter()
                .filter(|r| r.scenario == scenario && r.planner == planner)
                .collect();
            let solved: Vec<&&RunRecord> = group.iter().filter(|r| r.outcome == Outcome::Solved).collect();
            let mut times: Vec<f64> = solved.iter().map(|r| r.time_s).collect();
            let costs: Vec<f64> = solved.iter().filter_map(|r| r.cost).collect();
            let vertices: Vec<f64> = group
                .iter()
                .filter(|r| !r.roadmap_vertices.is_empty())
                .map(|r| r.roadmap_vertices.iter().sum::<usize>() as f64 / r.roadmap_vertices.len() as f64)
                .collect();
            SummaryRow {
                runs: group.len(),
                solved: solved.len(),
                success_rate: solved.len() as f64 / group.len() as f64,
                mean_time_s: mean(&times),
                median_time_s: median(&mut times),
                mean_cost: mean(&costs),
                mean_roadmap_vertices: mean(&vertices).unwrap_or(0.0),
                scenario,
                planner,
            }
        })
        .collect()
}

pub fn summary_table(rows: &[SummaryRow]) -> String {
    let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"));
    let mut out = format!(
        "{:<24} {:<10} {:>5} {:>8} {:>10} {:>10} {:>10} {:>10}\n",
        "scenario", "planner", "runs", "success", "median_s", "mean_s", "mean_cost", "vertices"
    );
    for r in rows {
        writeln!(
            out,
            "{:<24} {:<10} {:>5} {:>7.0}% {:>10} {:>10} {:>10} {:>10.1}",
            r.scenario,
            r.planner.name(),
            r.runs,
            100.0 * r.success_rate,
            opt(r.median_time_s),
            opt(r.mean_time_s),
            opt(r.mean_cost),
            r.mean_roadmap_vertices
        )
        .unwrap();
    }
    out
}

/// Column names of the benchmark CSV, in order.
pub const CSV_HEADER: [&str; 13] = [
    "scenario",
    "planner",
    "seed",
    "outcome",
    "time_s",
    "cost_s",
    "mean_roadmap_vertices",
    "roadmap_vertices",
    "ct_expanded",
    "ct_generated",
    "growth_rounds",
    "low_level_replans",
    "conflicts",
];

pub fn write_csv<W: io::Write>(records: &[RunRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        let mean_v = if r.roadmap_vertices.is_empty() {
            0.0
        } else {
            r.roadmap_vertices.iter().sum::<usize>() as f64 / r.roadmap_vertices.len() as f64
        };
        w.write_record([
            r.scenario.clone(),
            r.planner.name().to_string(),
            r.seed.to_string(),
            r.outcome.name().to_string(),
            format!("{:.6}", r.time_s),
            r.cost.map_or_else(String::new, |c| c.to_string()),
            mean_v.to_string(),
            r.roadmap_vertices.iter().map(usize::to_string).collect::<Vec<_>>().join(";"),
            r.stats.ct_expanded.to_string(),
            r.stats.ct_generated.to_string(),
            r.stats.growth_rounds.to_string(),
            r.stats.low_level_replans.to_string(),
            r.stats.conflicts.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// What one planner did on one growth round of a shared-roadmap run.
#[derive(Debug, Clone, PartialEq)]
pub struct SharedAttempt {
    pub planner: PlannerKind,
    /// Roadmap text as the planner received it, one entry per agent.
    pub roadmaps: Vec<String>,
    pub solution: Option<Solution>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SharedRound {
    pub round: usize,
    pub attempts: Vec<SharedAttempt>,
}

/// Controlled comparison on identical roadmaps: each growth round the
/// roadmaps are serialized once and every planner parses and queries its
/// own copy. Stops after the first round on which every planner solves,
/// after `max_rounds`, or at the scenario's budget.
pub fn run_shared(s: &Scenario, planners: &[PlannerKind], max_rounds: usize) -> Result<Vec<SharedRound>> {
    if let Some(p) = planners.iter().find(|&&p| p == PlannerKind::Composite) {
        return Err(Error::InvalidParameter(format!(
            "{} does not plan on per-agent roadmaps",
            p.name()
        )));
    }
    let t0 = Instant::now();
    let p = s.params.resolve(&s.robots)?;
    let deadline = t0 + p.budget;
    let mut grower = RoadmapGrower::new(&s.env, &s.robots, &s.starts, &s.goals, &p);
    let mut rounds: Vec<SharedRound> = Vec::new();
    let all_solved = |r: &SharedRound| r.attempts.iter().all(|a| a.solution.is_some());
    while !rounds.last().is_some_and(all_solved) && grower.rounds() < max_rounds && Instant::now() < deadline {
        grower.advance()?;
        let Some(c) = grower.connect()? else {
            continue;
        };
        let Some(horizon) = query_horizon(&c, p.dt, p.horizon) else {
            continue;
        };
        let texts: Vec<String> = c.roadmaps.iter().map(Roadmap::to_text).collect();
        let mut attempts = Vec::new();
        for &planner in planners {
            let roadmaps: Vec<Roadmap> = texts.iter().map(|t| Roadmap::from_text(t)).collect::<Result<_>>()?;
            let solution = match planner {
                PlannerKind::Cbs => {
                    let config = QueryConfig {
                        metric: p.metric,
                        max_ct_nodes: p.max_ct_nodes,
                        dt: p.dt,
                        horizon,
                        deadline: Some(deadline),
                    };
                    match Query::new(&roadmaps, &s.robots, &c.starts, &c.goals, config)?.run()?.outcome {
                        QueryOutcome::Solved(sol) => Some(sol),
                        _ => None,
                    }
                }
                _ => {
                    let order: Vec<usize> = (0..s.robots.len()).collect();
                    let (out, _) = decoupled_query(
                        &roadmaps,
                        &s.robots,
                        &c.starts,
                        &c.goals,
                        &order,
                        p.dt,
                        horizon,
                        p.metric,
                        Some(deadline),
                    )?;
                    match out {
                        DecoupledOutcome::Solved(sol) => Some(sol),
                        _ => None,
                    }
                }
            };
            attempts.push(SharedAttempt {
                planner,
                roadmaps: roadmaps.iter().map(Roadmap::to_text).collect(),
                solution,
            });
        }
        rounds.push(SharedRound {
            round: grower.rounds(),
            attempts,
        });
    }
    Ok(rounds)
}
