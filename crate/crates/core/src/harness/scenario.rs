use std::fmt::Write as _;
use std::path::Path;
use std::time::Duration;

use crate::cbs::{check_instance, CostMetric, PlannerParams};
use crate::error::{Error, Result};
use crate::geometry::{Aabb, Configuration, ConvexPolygon, Environment, RobotKind, RobotModel, Vec2};

/// A planning problem plus the parameters to solve it with.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub env: Environment,
    pub robots: Vec<RobotModel>,
    pub starts: Vec<Configuration>,
    pub goals: Vec<Configuration>,
    pub params: PlannerParams,
}

impl Scenario {
    /// Checks dimensions and endpoint validity. Overlapping starts or goals
    /// are not an error here; see [`Scenario::unsolvable_reason`].
    pub fn validate(&self) -> Result<()> {
        if self.robots.is_empty() {
            return Err(Error::Validation("scenario has no robots".into()));
        }
        for (i, r) in self.robots.iter().enumerate() {
            for (q, which) in [(&self.starts[i], "start"), (&self.goals[i], "goal")] {
                r.check_dof(q).map_err(|e| Error::Validation(format!("robot {i} {which}: {e}")))?;
            }
        }
        check_instance(&self.env, &self.robots, &self.starts, &self.goals).map(|_| ())
    }

    pub fn unsolvable_reason(&self) -> Result<Option<String>> {
        check_instance(&self.env, &self.robots, &self.starts, &self.goals)
    }

    pub fn with_seed(&self, seed: u64) -> Scenario {
        let mut s = self.clone();
        s.params.seed = seed;
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "scenario {}", self.name).unwrap();
        let b = &self.env.bounds;
        writeln!(out, "bounds_m {} {} {} {}", b.min.x, b.min.y, b.max.x, b.max.y).unwrap();
        for o in &self.env.obstacles {
            writeln!(out, "obstacle_m {}", points(o.vertices())).unwrap();
        }
        for (i, r) in self.robots.iter().enumerate() {
            let (s, g) = (vals(&self.starts[i]), vals(&self.goals[i]));
            match &r.kind {
                RobotKind::Disk { radius } => writeln!(
                    out,
                    "robot disk radius_m={radius} speed_mps={} start_m={s} goal_m={g}",
                    r.max_speed
                ),
                RobotKind::Polygon { vertices } => writeln!(
                    out,
                    "robot polygon vertices_m={} speed_mps={} start_m={s} goal_m={g}",
                    points(vertices).replace(' ', ";"),
                    r.max_speed
                ),
                RobotKind::Chain { base, links, width } => writeln!(
                    out,
                    "robot chain base_m={},{} links_m={} width_m={width} speed_radps={} start_rad={s} goal_rad={g}",
                    base.x,
                    base.y,
                    links.iter().map(f64::to_string).collect::<Vec<_>>().join(","),
                    r.max_speed
                ),
            }
            .unwrap();
        }
        let p = &self.params;
        let auto = |v: Option<String>| v.unwrap_or_else(|| "auto".into());
        let params = [
            ("initial_samples", auto(p.initial_samples.map(|v| v.to_string()))),
            ("growth_samples", auto(p.growth_samples.map(|v| v.to_string()))),
            ("k", p.k.to_string()),
            ("edge_step", auto(p.edge_step.map(|v| v.to_string()))),
            ("dt_s", auto(p.dt.map(|v| v.to_string()))),
            ("horizon_steps", auto(p.horizon.map(|v| v.to_string()))),
            (
                "max_ct_nodes",
                p.max_ct_nodes.map_or_else(|| "unlimited".into(), |v| v.to_string()),
            ),
            ("metric", p.metric.name().into()),
            ("budget_s", p.budget.as_secs_f64().to_string()),
            ("seed", p.seed.to_string()),
        ];
        for (k, v) in params {
            writeln!(out, "param {k} {v}").unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Scenario> {
        let mut name = None;
        let mut bounds = None;
        let mut obstacles = Vec::new();
        let mut robots = Vec::new();
        let mut starts = Vec::new();
        let mut goals = Vec::new();
        let mut params = PlannerParams::default();
        for (i, raw) in text.lines().enumerate() {
            let ln = i + 1;
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (tag, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            let rest = rest.trim();
            match tag {
                "scenario" => {
                    if rest.is_empty() {
                        return Err(Error::parse(ln, "scenario needs a name"));
                    }
                    name = Some(rest.to_string());
                }
                "bounds_m" => {
                    let v = numbers(ln, rest.split_whitespace())?;
                    if v.len() != 4 {
                        return Err(Error::parse(ln, "bounds_m takes min_x min_y max_x max_y"));
                    }
                    bounds = Some(Aabb::new(Vec2::new(v[0], v[1]), Vec2::new(v[2], v[3])));
                }
                "obstacle_m" => {
                    let pts = parse_points(ln, rest.split_whitespace())?;
                    obstacles.push(ConvexPolygon::new(pts).map_err(|e| Error::parse(ln, e.to_string()))?);
                }
                "robot" => {
                    let (robot, s, g) = parse_robot(ln, rest, robots.len())?;
                    robots.push(robot);
                    starts.push(s);
                    goals.push(g);
                }
                "param" => parse_param(ln, rest, &mut params)?,
                _ => return Err(Error::parse(ln, format!("unknown directive `{tag}`"))),
            }
        }
        let name = name.ok_or_else(|| Error::parse(1, "missing `scenario` line"))?;
        let bounds = bounds.ok_or_else(|| Error::parse(1, "missing `bounds_m` line"))?;
        let env = Environment::new(bounds, obstacles)?;
        let s = Scenario {
            name,
            env,
            robots,
            starts,
            goals,
            params,
        };
        s.validate()?;
        Ok(s)
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    Scenario::from_text(&std::fs::read_to_string(path)?)
}

pub fn save_scenario(s: &Scenario, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, s.to_text())?;
    Ok(())
}

fn vals(q: &Configuration) -> String {
    q.values().iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

fn points(ps: &[Vec2]) -> String {
    ps.iter().map(|p| format!("{},{}", p.x, p.y)).collect::<Vec<_>>().join(" ")
}

fn numbers<'a>(ln: usize, it: impl Iterator<Item = &'a str>) -> Result<Vec<f64>> {
    it.map(|s| {
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::parse(ln, format!("bad number `{s}`")))
    })
    .collect()
}

fn parse_points<'a>(ln: usize, it: impl Iterator<Item = &'a str>) -> Result<Vec<Vec2>> {
    it.map(|p| {
        let v = numbers(ln, p.split(','))?;
        if v.len() != 2 {
            return Err(Error::parse(ln, format!("expected x,y, got `{p}`")));
        }
        Ok(Vec2::new(v[0], v[1]))
    })
    .collect()
}

fn parse_robot(ln: usize, rest: &str, id: usize) -> Result<(RobotModel, Configuration, Configuration)> {
    let mut words = rest.split_whitespace();
    let kind = words.next().ok_or_else(|| Error::parse(ln, "robot needs a kind"))?;
    let mut fields = Vec::new();
    for w in words {
        let (k, v) = w
            .split_once('=')
            .ok_or_else(|| Error::parse(ln, format!("expected key=value, got `{w}`")))?;
        fields.push((k, v));
    }
    let get = |k: &str| {
        fields
            .iter()
            .find(|(key, _)| *key == k)
            .map(|(_, v)| *v)
            .ok_or_else(|| Error::parse(ln, format!("{kind} robot needs `{k}=`")))
    };
    let one = |k: &str| -> Result<f64> {
        let v = numbers(ln, std::iter::once(get(k)?))?;
        Ok(v[0])
    };
    let config = |k: &str| numbers(ln, get(k)?.split(',')).map(Configuration::new);
    let (allowed, robot, s, g): (&[&str], _, _, _) = match kind {
        "disk" => (
            &["radius_m", "speed_mps", "start_m", "goal_m"],
            RobotModel::disk(id, one("radius_m")?, one("speed_mps")?),
            config("start_m")?,
            config("goal_m")?,
        ),
        "polygon" => (
            &["vertices_m", "speed_mps", "start_m", "goal_m"],
            RobotModel::polygon(id, parse_points(ln, get("vertices_m")?.split(';'))?, one("speed_mps")?),
            config("start_m")?,
            config("goal_m")?,
        ),
        "chain" => {
            let base = parse_points(ln, std::iter::once(get("base_m")?))?[0];
            let links = numbers(ln, get("links_m")?.split(','))?;
            (
                &["base_m", "links_m", "width_m", "speed_radps", "start_rad", "goal_rad"],
                RobotModel::chain(id, base, links, one("width_m")?, one("speed_radps")?),
                config("start_rad")?,
                config("goal_rad")?,
            )
        }
        _ => return Err(Error::parse(ln, format!("unknown robot kind `{kind}`"))),
    };
    if let Some((k, _)) = fields.iter().find(|(k, _)| !allowed.contains(k)) {
        return Err(Error::parse(ln, format!("unknown {kind} field `{k}`")));
    }
    let robot = robot.map_err(|e| Error::parse(ln, e.to_string()))?;
    for (q, which) in [(&s, "start"), (&g, "goal")] {
        if q.dof() != robot.dof() {
            return Err(Error::parse(ln, format!("{which} has {} values, robot needs {}", q.dof(), robot.dof())));
        }
    }
    Ok((robot, s, g))
}

fn parse_param(ln: usize, rest: &str, p: &mut PlannerParams) -> Result<()> {
    let (key, value) = rest
        .split_once(char::is_whitespace)
        .map(|(k, v)| (k, v.trim()))
        .ok_or_else(|| Error::parse(ln, "param needs a name and a value"))?;
    let bad = || Error::parse(ln, format!("bad value `{value}` for {key}"));
    fn opt<T: std::str::FromStr>(v: &str) -> Option<Option<T>> {
        if v == "auto" {
            Some(None)
        } else {
            v.parse().ok().map(Some)
        }
    }
    match key {
        "initial_samples" => p.initial_samples = opt(value).ok_or_else(bad)?,
        "growth_samples" => p.growth_samples = opt(value).ok_or_else(bad)?,
        "k" => p.k = value.parse().map_err(|_| bad())?,
        "edge_step" => p.edge_step = opt(value).ok_or_else(bad)?,
        "dt_s" => p.dt = opt(value).ok_or_else(bad)?,
        "horizon_steps" => p.horizon = opt(value).ok_or_else(bad)?,
        "max_ct_nodes" => {
            p.max_ct_nodes = if value == "unlimited" {
                None
            } else {
                Some(value.parse().map_err(|_| bad())?)
            }
        }
        "metric" => p.metric = CostMetric::parse(value).ok_or_else(bad)?,
        "budget_s" => {
            let s: f64 = value.parse().map_err(|_| bad())?;
            p.budget = Duration::try_from_secs_f64(s).map_err(|_| bad())?;
        }
        "seed" => p.seed = value.parse().map_err(|_| bad())?,
        _ => return Err(Error::parse(ln, format!("unknown param `{key}`"))),
    }
    Ok(())
}
