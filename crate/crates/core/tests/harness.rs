use std::collections::HashSet;
use std::path::PathBuf;
use std::time::Duration;

use cbsmp::geometry::{in_collision_pair, RobotKind, Shape, Vec2};
use cbsmp::harness::*;
use sha2::{Digest, Sha256};

fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/crossing4.scn")
}

#[test]
fn golden_crossing_has_four_disks() {
    let s = load_scenario(golden_path()).unwrap();
    assert_eq!(s.robots.len(), 4);
    assert!(s.robots.iter().all(|r| matches!(r.kind, RobotKind::Disk { .. })));
    s.validate().unwrap();
    assert_eq!(s.params.max_ct_nodes, Some(64));
}

#[test]
fn scenario_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for s in [gen_crossing(4, 0.5, 16.0, 2).unwrap(), gen_arms(3, 2, 2).unwrap()] {
        let path = dir.path().join("s.scn");
        save_scenario(&s, &path).unwrap();
        assert_eq!(load_scenario(&path).unwrap(), s);
    }
}

#[test]
fn crossing_density_is_constant() {
    let per_robot = |n: usize| {
        let s = gen_crossing(n, 0.5, 16.0, 0).unwrap();
        s.env.bounds.area() / n as f64
    };
    let a4 = gen_crossing(4, 0.5, 16.0, 0).unwrap().env.bounds.area();
    let a8 = gen_crossing(8, 0.5, 16.0, 0).unwrap().env.bounds.area();
    assert!((a8 / a4 - 2.0).abs() < 1e-9);
    for n in [2, 4, 8, 16] {
        assert!((per_robot(n) - 16.0).abs() < 1e-9 * 16.0);
    }
    assert!(gen_crossing(64, 0.5, 16.0, 0).is_err());
}

#[test]
fn generated_starts_are_pairwise_free() {
    let free = |s: &Scenario| {
        (0..s.robots.len()).all(|i| {
            (i + 1..s.robots.len())
                .all(|j| !in_collision_pair(&s.robots[i], &s.starts[i], &s.robots[j], &s.starts[j]).unwrap())
        })
    };
    for seed in 0..10 {
        for n in [2, 4, 8] {
            assert!(free(&gen_crossing(n, 0.5, 16.0, seed).unwrap()));
        }
        for n in 2..=4 {
            assert!(free(&gen_arms(n, 2, seed).unwrap()));
        }
    }
}

#[test]
fn arm_starts_reach_into_the_centre() {
    let s = gen_arms(2, 2, 0).unwrap();
    let centre = Shape::circle(Vec2::new(0.0, 0.0), ARM_LINK_LENGTH);
    for (r, q) in s.robots.iter().zip(&s.starts) {
        assert!(r.footprint(q).unwrap().intersects_shape(&centre));
    }
    for (r, q) in s.robots.iter().zip(&s.goals) {
        assert!(!r.footprint(q).unwrap().intersects_shape(&centre));
    }
}

#[test]
fn benchmark_cross_product() {
    let s = gen_crossing(4, 0.5, 16.0, 0).unwrap();
    let seeds: Vec<u64> = (0..5).collect();
    let records = run_benchmark(&[s], &[PlannerKind::Cbs, PlannerKind::Decoupled], &seeds, Duration::from_secs(5));
    assert_eq!(records.len(), 10);
    for r in &records {
        assert_eq!(r.cost.is_some(), r.outcome == Outcome::Solved);
        assert!(r.time_s <= 5.0 * 1.05, "{} took {}", r.planner.name(), r.time_s);
    }
    let mut csv = Vec::new();
    write_csv(&records, &mut csv).unwrap();
    let mut reader = csv::Reader::from_reader(csv.as_slice());
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, CSV_HEADER);
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 10);
    assert_eq!(&rows[0][1], "cbs");
    let table = summary_table(&summarize(&records));
    assert!(table.contains("decoupled"));
}

#[test]
fn zero_budget_times_out_everywhere() {
    let s = [gen_crossing(2, 0.5, 16.0, 0).unwrap(), gen_arms(2, 2, 0).unwrap()];
    let records = run_benchmark(&s, &PlannerKind::ALL, &[0, 1], Duration::ZERO);
    assert_eq!(records.len(), 12);
    assert!(records.iter().all(|r| r.outcome == Outcome::Timeout));
}

#[test]
fn benchmark_records_are_deterministic() {
    let s = [gen_arms(2, 2, 1).unwrap()];
    let strip = |mut v: Vec<RunRecord>| {
        v.iter_mut().for_each(|r| r.time_s = 0.0);
        v
    };
    let a = strip(run_benchmark(&s, &PlannerKind::ALL, &[3], Duration::from_secs(30)));
    let b = strip(run_benchmark(&s, &PlannerKind::ALL, &[3], Duration::from_secs(30)));
    assert_eq!(a, b);
}

#[test]
fn suite_expands_generated_entries_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(golden_path(), dir.path().join("golden.scn")).unwrap();
    let path = dir.path().join("x.suite");
    std::fs::write(&path, "planners decoupled cbs\ncrossing 2\nscenario golden.scn\n").unwrap();
    let suite = Suite::load(&path).unwrap();
    let records = suite.run(&[0, 1], Duration::from_secs(20)).unwrap();
    assert_eq!(records.len(), 8);
    let names: HashSet<&str> = records.iter().map(|r| r.scenario.as_str()).collect();
    assert!(names.contains("crossing-2-s0") && names.contains("crossing-2-s1") && names.contains("crossing-4-s0"));
}

#[test]
fn shared_mode_feeds_identical_roadmaps() {
    let mut s = gen_crossing(2, 0.5, 16.0, 4).unwrap();
    s.params.budget = Duration::from_secs(30);
    let rounds = run_shared(&s, &[PlannerKind::Cbs, PlannerKind::Decoupled], 20).unwrap();
    assert!(!rounds.is_empty());
    let hash = |texts: &[String]| {
        let mut h = Sha256::new();
        for t in texts {
            h.update(t.as_bytes());
        }
        h.finalize()
    };
    for round in &rounds {
        assert_eq!(round.attempts.len(), 2);
        assert_eq!(hash(&round.attempts[0].roadmaps), hash(&round.attempts[1].roadmaps));
    }
    let last = rounds.last().unwrap();
    assert!(last.attempts.iter().all(|a| a.solution.is_some()));
    assert!(run_shared(&s, &[PlannerKind::Composite], 1).is_err());
}

fn parse_svg(text: &str) -> roxmltree::Document<'_> {
    roxmltree::Document::parse(text).expect("well-formed SVG")
}

#[test]
fn svg_without_solution_draws_only_the_scene() {
    let s = load_scenario(golden_path()).unwrap();
    let text = svg_string(&s, None).unwrap();
    let doc = parse_svg(&text);
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    let class = |c: &str| doc.descendants().filter(|n| n.attribute("class") == Some(c)).count();
    assert_eq!(class("trajectory"), 0);
    assert_eq!(class("start"), 4);
    assert_eq!(class("goal"), 4);
}

#[test]
fn svg_draws_one_coloured_polyline_per_agent() {
    let s = gen_crossing(2, 0.5, 16.0, 0).unwrap();
    let (_, sol) = timed_run(&s, PlannerKind::Cbs);
    let record = sol.unwrap().record();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.svg");
    render_svg(&s, Some(&record), &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let doc = parse_svg(&text);
    let lines: Vec<_> = doc
        .descendants()
        .filter(|n| n.attribute("class") == Some("trajectory"))
        .collect();
    assert_eq!(lines.len(), 2);
    assert_ne!(lines[0].attribute("stroke"), lines[1].attribute("stroke"));
    for l in &lines {
        let pts = l.attribute("points").unwrap().split_whitespace().count();
        assert_eq!(pts, record.trajectories[0].len());
    }
}

#[test]
fn config_echo_lists_protocol_defaults() {
    let echo = config_echo();
    assert!(echo.lines().any(|l| l == "max_ct_nodes 64"));
    assert!(echo.lines().any(|l| l == "budget_s 1000"));
}
