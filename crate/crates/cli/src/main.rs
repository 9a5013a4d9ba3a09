use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use cbsmp::baselines::joint_oracle;
use cbsmp::cbs::{query_horizon, Connected, PlanStatus, Solution, SolutionRecord};
use cbsmp::harness::{
    config_echo, gen_arms, gen_crossing, load_scenario, render_svg, run_planner, save_scenario, summarize,
    summary_table, write_csv, PlannerKind, Suite, DEFAULT_CROSSING_DENSITY, DEFAULT_CROSSING_RADIUS,
};
use cbsmp::roadmap::Roadmap;

const EXIT_TIMEOUT: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;

#[derive(Parser)]
#[command(name = "cbsmp", version, about = "Multi-robot motion planning with CBS over per-agent roadmaps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Planner {
    Cbs,
    Composite,
    Decoupled,
}

impl From<Planner> for PlannerKind {
    fn from(p: Planner) -> Self {
        match p {
            Planner::Cbs => PlannerKind::Cbs,
            Planner::Composite => PlannerKind::Composite,
            Planner::Decoupled => PlannerKind::Decoupled,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Plan a scenario and write the solution.
    Plan {
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "cbs")]
        planner: Planner,
        #[arg(long)]
        out: PathBuf,
        /// Also write the final per-agent roadmaps here (agent<i>.roadmap).
        #[arg(long)]
        roadmaps: Option<PathBuf>,
        /// Overrides the scenario's budget, in seconds.
        #[arg(long)]
        budget: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Generate a benchmark scenario.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Run a suite file over seeds 0..N.
    Bench {
        suite: PathBuf,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        /// Per-run budget in seconds.
        #[arg(long, default_value_t = 1000.0)]
        budget: f64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Draw a scenario and optionally a solution as SVG.
    Render {
        scenario: PathBuf,
        #[arg(long)]
        solution: Option<PathBuf>,
        #[arg(long)]
        svg: PathBuf,
    },
    /// Exhaustive optimal plan on saved roadmaps.
    Oracle {
        scenario: PathBuf,
        #[arg(long)]
        roadmaps: PathBuf,
        /// Solution output for the optimal plan.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the shipped planner defaults.
    Config,
}

#[derive(Subcommand)]
enum GenKind {
    Crossing {
        #[arg(long)]
        agents: usize,
        #[arg(long, default_value_t = DEFAULT_CROSSING_RADIUS)]
        radius: f64,
        /// Free area per robot in square metres.
        #[arg(long, default_value_t = DEFAULT_CROSSING_DENSITY)]
        density: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    Arms {
        #[arg(long)]
        arms: usize,
        #[arg(long, default_value_t = 2)]
        links: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn budget(s: f64) -> Result<Duration> {
    Duration::try_from_secs_f64(s).with_context(|| format!("bad budget {s}"))
}

fn roadmap_path(dir: &Path, agent: usize) -> PathBuf {
    dir.join(format!("agent{agent}.roadmap"))
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Plan {
            scenario,
            planner,
            out,
            roadmaps,
            budget: b,
            seed,
        } => {
            let mut s = load_scenario(&scenario)?;
            if let Some(b) = b {
                s.params.budget = budget(b)?;
            }
            if let Some(seed) = seed {
                s = s.with_seed(seed);
            }
            let report = run_planner(&s, planner.into())?;
            if let Some(dir) = roadmaps {
                fs::create_dir_all(&dir)?;
                for (i, r) in report.roadmaps.iter().enumerate() {
                    fs::write(roadmap_path(&dir, i), r.to_text())?;
                }
            }
            eprintln!(
                "{:.3}s, {} growth rounds, {} CT nodes",
                report.elapsed.as_secs_f64(),
                report.stats.growth_rounds,
                report.stats.ct_generated
            );
            match report.status {
                PlanStatus::Solved(sol) => {
                    fs::write(&out, sol.to_text())?;
                    println!("solved cost={} metric={}", sol.cost, sol.metric.name());
                    Ok(0)
                }
                PlanStatus::TimedOut => {
                    println!("timeout");
                    Ok(EXIT_TIMEOUT)
                }
                PlanStatus::Infeasible(why) => {
                    println!("infeasible: {why}");
                    Ok(EXIT_INFEASIBLE)
                }
            }
        }
        Command::Gen { kind } => {
            let (s, out) = match kind {
                GenKind::Crossing {
                    agents,
                    radius,
                    density,
                    seed,
                    out,
                } => (gen_crossing(agents, radius, density, seed)?, out),
                GenKind::Arms { arms, links, seed, out } => (gen_arms(arms, links, seed)?, out),
            };
            save_scenario(&s, &out)?;
            println!("wrote {} ({} robots)", out.display(), s.robots.len());
            Ok(0)
        }
        Command::Bench {
            suite,
            seeds,
            budget: b,
            csv,
        } => {
            let suite = Suite::load(&suite)?;
            let seeds: Vec<u64> = (0..seeds).collect();
            let records = suite.run(&seeds, budget(b)?)?;
            if let Some(path) = csv {
                write_csv(&records, fs::File::create(&path)?)?;
            }
            print!("{}", summary_table(&summarize(&records)));
            Ok(0)
        }
        Command::Render { scenario, solution, svg } => {
            let s = load_scenario(&scenario)?;
            let sol = solution
                .map(|p| -> Result<SolutionRecord> { Ok(SolutionRecord::from_text(&fs::read_to_string(p)?)?) })
                .transpose()?;
            render_svg(&s, sol.as_ref(), &svg)?;
            Ok(0)
        }
        Command::Oracle { scenario, roadmaps, out } => {
            let s = load_scenario(&scenario)?;
            let p = s.params.resolve(&s.robots)?;
            let mut maps = Vec::new();
            let (mut starts, mut goals) = (Vec::new(), Vec::new());
            for (i, robot) in s.robots.iter().enumerate() {
                let path = roadmap_path(&roadmaps, i);
                let r = Roadmap::from_text(&fs::read_to_string(&path).with_context(|| path.display().to_string())?)?;
                let find = |q, which| {
                    r.find_vertex(robot, q)
                        .with_context(|| format!("robot {i}: {which} is not a vertex of {}", path.display()))
                };
                starts.push(find(&s.starts[i], "start")?);
                goals.push(find(&s.goals[i], "goal")?);
                maps.push(r);
            }
            let c = Connected {
                roadmaps: maps,
                starts,
                goals,
            };
            let Some(horizon) = query_horizon(&c, p.dt, p.horizon) else {
                println!("infeasible: some goal is unreachable on its roadmap");
                return Ok(EXIT_INFEASIBLE);
            };
            match joint_oracle(&c.roadmaps, &s.robots, &c.starts, &c.goals, p.dt, horizon, p.metric)? {
                Some(o) => {
                    println!(
                        "optimal cost={} metric={} states={}",
                        o.cost,
                        p.metric.name(),
                        o.states_expanded
                    );
                    if let Some(out) = out {
                        let sol = Solution::new(o.paths, &c.roadmaps, &s.robots, p.metric, Default::default())?;
                        fs::write(out, sol.to_text())?;
                    }
                    Ok(0)
                }
                None => {
                    println!("infeasible within horizon {horizon}");
                    Ok(EXIT_INFEASIBLE)
                }
            }
        }
        Command::Config => {
            print!("{}", config_echo());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
