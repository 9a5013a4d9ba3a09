//! Robot models, static environments, configuration validity and
//! inter-robot collision.
//!
//! Translating robots (disks and convex polygons) have two translation
//! degrees of freedom. Planar chains have one revolute joint per link; the
//! first joint angle is measured from the world x axis and each following
//! angle is relative to the previous link. Revolute components live in
//! `[-pi, pi)`.

mod shapes;

use std::f64::consts::{PI, TAU};

use rand::Rng;

pub use shapes::{
    core_distance, is_convex_ccw, orient, point_segment_distance, polygon_contains,
    segment_distance, segments_intersect, Aabb, Footprint, Shape, Vec2,
};

use crate::error::{Error, Result};

/// A point in one robot's configuration space.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration(Vec<f64>);

impl Configuration {
    pub fn new(values: Vec<f64>) -> Self {
        Configuration(values)
    }

    pub fn xy(x: f64, y: f64) -> Self {
        Configuration(vec![x, y])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dof(&self) -> usize {
        self.0.len()
    }
}

impl From<Vec<f64>> for Configuration {
    fn from(v: Vec<f64>) -> Self {
        Configuration(v)
    }
}

/// Wraps an angle into `[-pi, pi)`.
pub fn normalize_angle(a: f64) -> f64 {
    let mut r = (a + PI).rem_euclid(TAU) - PI;
    if r >= PI {
        r -= TAU;
    }
    if r < -PI {
        r = -PI;
    }
    r
}

/// Signed shortest rotation from `a` to `b`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    normalize_angle(b - a)
}

#[derive(Debug, Clone, PartialEq)]
pub enum RobotKind {
    Disk { radius: f64 },
    /// Body-frame vertices, convex and counterclockwise.
    Polygon { vertices: Vec<Vec2> },
    Chain { base: Vec2, links: Vec<f64>, width: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotModel {
    pub id: usize,
    pub kind: RobotKind,
    /// m/s for translating robots, rad/s per joint for chains.
    pub max_speed: f64,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidGeometry(format!("{name} must be positive, got {v}")))
    }
}

impl RobotModel {
    pub fn disk(id: usize, radius: f64, max_speed: f64) -> Result<Self> {
        positive("radius", radius)?;
        positive("max speed", max_speed)?;
        Ok(RobotModel {
            id,
            kind: RobotKind::Disk { radius },
            max_speed,
        })
    }

    pub fn polygon(id: usize, vertices: Vec<Vec2>, max_speed: f64) -> Result<Self> {
        positive("max speed", max_speed)?;
        if !is_convex_ccw(&vertices) {
            return Err(Error::InvalidGeometry(
                "robot polygon must be convex and counterclockwise".into(),
            ));
        }
        Ok(RobotModel {
            id,
            kind: RobotKind::Polygon { vertices },
            max_speed,
        })
    }

    pub fn chain(id: usize, base: Vec2, links: Vec<f64>, width: f64, max_speed: f64) -> Result<Self> {
        positive("max speed", max_speed)?;
        positive("link width", width)?;
        if links.is_empty() {
            return Err(Error::InvalidGeometry("chain needs at least one link".into()));
        }
        for &l in &links {
            positive("link length", l)?;
        }
        Ok(RobotModel {
            id,
            kind: RobotKind::Chain { base, links, width },
            max_speed,
        })
    }

    pub fn with_id(mut self, id: usize) -> Self {
        self.id = id;
        self
    }

    pub fn dof(&self) -> usize {
        match &self.kind {
            RobotKind::Disk { .. } | RobotKind::Polygon { .. } => 2,
            RobotKind::Chain { links, .. } => links.len(),
        }
    }

    pub fn is_chain(&self) -> bool {
        matches!(self.kind, RobotKind::Chain { .. })
    }

    pub fn check_dof(&self, q: &Configuration) -> Result<()> {
        if q.dof() != self.dof() {
            return Err(Error::DimensionMismatch {
                expected: self.dof(),
                got: q.dof(),
            });
        }
        Ok(())
    }

    /// Smallest geometric feature radius: disk radius, polygon inradius
    /// about its centroid, or half the link width.
    pub fn feature_radius(&self) -> f64 {
        match &self.kind {
            RobotKind::Disk { radius } => *radius,
            RobotKind::Polygon { vertices } => {
                let n = vertices.len() as f64;
                let c = vertices.iter().fold(Vec2::default(), |acc, &v| acc + v) * (1.0 / n);
                (0..vertices.len())
                    .map(|i| point_segment_distance(c, vertices[i], vertices[(i + 1) % vertices.len()]))
                    .fold(f64::INFINITY, f64::min)
            }
            RobotKind::Chain { width, .. } => width / 2.0,
        }
    }

    /// Workspace displacement bound per unit of C-space distance.
    pub fn workspace_gain(&self) -> f64 {
        match &self.kind {
            RobotKind::Chain { links, .. } => links.iter().sum(),
            _ => 1.0,
        }
    }

    /// Edge validation step: half the feature radius expressed in C-space units.
    pub fn default_edge_step(&self) -> f64 {
        0.5 * self.feature_radius() / self.workspace_gain()
    }

    /// Largest step that keeps every footprint point within half the feature
    /// radius of its position on the neighbouring timestep.
    pub fn default_timestep(&self) -> f64 {
        0.5 * self.feature_radius() / (self.max_speed * self.workspace_gain())
    }

    /// C-space distance: Euclidean over translations, summed shortest
    /// angular differences over joints.
    pub fn distance(&self, a: &Configuration, b: &Configuration) -> f64 {
        let (a, b) = (a.values(), b.values());
        if self.is_chain() {
            a.iter().zip(b).map(|(x, y)| angle_diff(*x, *y).abs()).sum()
        } else {
            a.iter()
                .zip(b)
                .map(|(x, y)| (y - x) * (y - x))
                .sum::<f64>()
                .sqrt()
        }
    }

    /// Traversal time in seconds of the straight-line motion `a -> b`.
    pub fn travel_time(&self, a: &Configuration, b: &Configuration) -> f64 {
        self.distance(a, b) / self.max_speed
    }

    /// Normalizes revolute components; identity for translating robots.
    pub fn canonical(&self, q: Configuration) -> Configuration {
        if self.is_chain() {
            Configuration(q.0.into_iter().map(normalize_angle).collect())
        } else {
            q
        }
    }

    pub(crate) fn lerp(&self, a: &Configuration, b: &Configuration, s: f64) -> Configuration {
        if s == 0.0 {
            return a.clone();
        }
        if s == 1.0 {
            return b.clone();
        }
        let values = if self.is_chain() {
            a.values()
                .iter()
                .zip(b.values())
                .map(|(x, y)| normalize_angle(x + angle_diff(*x, *y) * s))
                .collect()
        } else {
            a.values()
                .iter()
                .zip(b.values())
                .map(|(x, y)| x + (y - x) * s)
                .collect()
        };
        Configuration(values)
    }

    /// Link endpoints of a chain at `q`, starting with the base.
    pub fn chain_points(&self, q: &Configuration) -> Vec<Vec2> {
        match &self.kind {
            RobotKind::Chain { base, links, .. } => {
                let mut pts = Vec::with_capacity(links.len() + 1);
                let mut p = *base;
                let mut heading = 0.0;
                pts.push(p);
                for (len, angle) in links.iter().zip(q.values()) {
                    heading += angle;
                    p = p + Vec2::from_angle(heading) * *len;
                    pts.push(p);
                }
                pts
            }
            _ => Vec::new(),
        }
    }

    pub(crate) fn footprint_unchecked(&self, q: &Configuration) -> Footprint {
        let v = q.values();
        match &self.kind {
            RobotKind::Disk { radius } => Footprint::new(vec![Shape::circle(Vec2::new(v[0], v[1]), *radius)]),
            RobotKind::Polygon { vertices } => {
                let t = Vec2::new(v[0], v[1]);
                Footprint::new(vec![Shape::polygon(vertices.iter().map(|&p| p + t).collect())])
            }
            RobotKind::Chain { width, .. } => {
                let pts = self.chain_points(q);
                Footprint::new(
                    pts.windows(2)
                        .map(|w| Shape::capsule(w[0], w[1], width / 2.0))
                        .collect(),
                )
            }
        }
    }

    pub fn footprint(&self, q: &Configuration) -> Result<Footprint> {
        self.check_dof(q)?;
        Ok(self.footprint_unchecked(q))
    }

    /// Uniform sample over the environment bounds (translation) or the full
    /// joint range (chains).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, env: &Environment) -> Configuration {
        if self.is_chain() {
            Configuration((0..self.dof()).map(|_| rng.gen_range(-PI..PI)).collect())
        } else {
            let b = env.bounds;
            Configuration(vec![
                rng.gen_range(b.min.x..=b.max.x),
                rng.gen_range(b.min.y..=b.max.y),
            ])
        }
    }

    fn self_collides(&self, fp: &Footprint) -> bool {
        if !self.is_chain() {
            return false;
        }
        let parts = fp.parts();
        (0..parts.len()).any(|i| (i + 2..parts.len()).any(|j| parts[i].intersects(&parts[j])))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon {
    shape: Shape,
}

impl ConvexPolygon {
    pub fn new(vertices: Vec<Vec2>) -> Result<Self> {
        if !is_convex_ccw(&vertices) {
            return Err(Error::InvalidGeometry(
                "obstacle must be a convex counterclockwise polygon".into(),
            ));
        }
        Ok(ConvexPolygon {
            shape: Shape::polygon(vertices),
        })
    }

    /// Axis-aligned rectangle obstacle.
    pub fn rect(min: Vec2, max: Vec2) -> Result<Self> {
        ConvexPolygon::new(vec![min, Vec2::new(max.x, min.y), max, Vec2::new(min.x, max.y)])
    }

    pub fn vertices(&self) -> &[Vec2] {
        self.shape.core()
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub bounds: Aabb,
    pub obstacles: Vec<ConvexPolygon>,
}

impl Environment {
    pub fn new(bounds: Aabb, obstacles: Vec<ConvexPolygon>) -> Result<Self> {
        if !(bounds.width() > 0.0 && bounds.height() > 0.0) {
            return Err(Error::InvalidGeometry("bounds must have positive area".into()));
        }
        for (i, o) in obstacles.iter().enumerate() {
            if !o.vertices().iter().all(|&v| bounds.contains(v)) {
                return Err(Error::InvalidGeometry(format!("obstacle {i} leaves the bounds")));
            }
        }
        Ok(Environment { bounds, obstacles })
    }

    /// Obstacle-free box `[0, w] x [0, h]`.
    pub fn open(w: f64, h: f64) -> Result<Self> {
        Environment::new(Aabb::new(Vec2::default(), Vec2::new(w, h)), Vec::new())
    }

    pub(crate) fn footprint_free(&self, fp: &Footprint) -> bool {
        fp.parts().iter().all(|s| s.inside(&self.bounds))
            && !self.obstacles.iter().any(|o| fp.intersects_shape(o.shape()))
    }
}

/// Membership test for the robot's free configuration space.
pub fn is_valid_config(env: &Environment, robot: &RobotModel, q: &Configuration) -> Result<bool> {
    let fp = robot.footprint(q)?;
    Ok(env.footprint_free(&fp) && !robot.self_collides(&fp))
}

/// Closed-set intersection of two robots' footprints.
pub fn in_collision_pair(
    robot_i: &RobotModel,
    q_i: &Configuration,
    robot_j: &RobotModel,
    q_j: &Configuration,
) -> Result<bool> {
    Ok(robot_i.footprint(q_i)?.intersects(&robot_j.footprint(q_j)?))
}

/// Straight-line blend in C-space; joints follow the shorter arc.
pub fn interpolate(robot: &RobotModel, q_a: &Configuration, q_b: &Configuration, s: f64) -> Result<Configuration> {
    robot.check_dof(q_a)?;
    robot.check_dof(q_b)?;
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::InvalidParameter(format!("interpolation fraction {s} outside [0, 1]")));
    }
    Ok(robot.lerp(q_a, q_b, s))
}

/// Number of subdivisions used to check a motion of C-space length `dist`.
/// Always a power of two, so a smaller step checks a superset of points.
pub(crate) fn edge_subdivisions(dist: f64, step: f64) -> u64 {
    let needed = (dist / step).ceil().max(1.0);
    if needed >= 2f64.powi(40) {
        1 << 40
    } else {
        (needed as u64).next_power_of_two()
    }
}

/// Local planner check: every interpolated configuration at spacing at most
/// `step` (endpoints included) is valid.
pub fn is_valid_edge(
    env: &Environment,
    robot: &RobotModel,
    q_a: &Configuration,
    q_b: &Configuration,
    step: f64,
) -> Result<bool> {
    robot.check_dof(q_a)?;
    robot.check_dof(q_b)?;
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidParameter(format!("edge step must be positive, got {step}")));
    }
    let n = edge_subdivisions(robot.distance(q_a, q_b), step);
    // Endpoints first: they reject most invalid edges cheaply.
    for q in [q_a, q_b] {
        if !is_valid_config(env, robot, q)? {
            return Ok(false);
        }
    }
    for i in 1..n {
        let q = robot.lerp(q_a, q_b, i as f64 / n as f64);
        if !is_valid_config(env, robot, &q)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Largest timestep satisfying the anti-tunnelling bound for every robot.
pub fn default_timestep(robots: &[RobotModel]) -> f64 {
    robots
        .iter()
        .map(RobotModel::default_timestep)
        .fold(f64::INFINITY, f64::min)
}
