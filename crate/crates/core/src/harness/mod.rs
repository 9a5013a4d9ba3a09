//! Scenario files, generators, benchmark runs and SVG output.

mod bench;
mod generate;
mod scenario;
mod suite;
mod svg;

pub use bench::{
    median, run_benchmark, run_jobs, run_planner, run_shared, summarize, summary_table, timed_run, write_csv, Outcome,
    PlannerKind, RunRecord, SharedAttempt, SharedRound, SummaryRow, CSV_HEADER,
};
pub use generate::{gen_arms, gen_crossing, ARM_LINK_LENGTH, ARM_LINK_WIDTH, DEFAULT_CROSSING_DENSITY, DEFAULT_CROSSING_RADIUS};
pub use scenario::{load_scenario, save_scenario, Scenario};
pub use suite::{Suite, SuiteEntry};
pub use svg::{agent_color, render_svg, svg_string};

use crate::cbs::PlannerParams;
use crate::geometry::RobotModel;

/// The shipped planner defaults as `key value` lines; chain-dependent
/// values are shown for translating robots and for chains.
pub fn config_echo() -> String {
    let p = PlannerParams::default();
    let disk = [RobotModel::disk(0, 1.0, 1.0).unwrap()];
    let chain = [RobotModel::chain(0, Default::default(), vec![1.0], 0.2, 1.0).unwrap()];
    let n = |r: &[RobotModel]| p.resolve(r).map(|r| r.initial_samples).unwrap_or(0);
    format!(
        "max_ct_nodes {}\nbudget_s {}\nk {}\ninitial_samples {}\ninitial_samples_chain {}\ngrowth_samples initial_samples\nmetric {}\nhorizon_steps max(4*longest_unconstrained,{})\nseed {}\n",
        p.max_ct_nodes.map_or_else(|| "unlimited".into(), |v| v.to_string()),
        p.budget.as_secs_f64(),
        p.k,
        n(&disk),
        n(&chain),
        p.metric.name(),
        crate::roadmap::MIN_HORIZON,
        p.seed,
    )
}
