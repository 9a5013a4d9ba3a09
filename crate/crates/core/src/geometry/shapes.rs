//! Planar primitives and exact closed-set intersection tests.
//!
//! Every collision primitive is a convex core (a point, a segment or a
//! counterclockwise convex polygon) swept by a disk. Two primitives
//! intersect iff the distance between their cores is at most the sum of
//! their radii, so touching counts as contact.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn from_angle(theta: f64) -> Self {
        Vec2::new(theta.cos(), theta.sin())
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Twice the signed area of triangle `abc`; positive when counterclockwise.
pub fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq == 0.0 {
        return (p - a).norm();
    }
    let s = ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0);
    (p - (a + ab * s)).norm()
}

/// Closed segment intersection, including collinear overlap and touching.
pub fn segments_intersect(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    segment_distance(a, b, c, d) == 0.0
}

pub fn segment_distance(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> f64 {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return 0.0;
    }
    point_segment_distance(a, c, d)
        .min(point_segment_distance(b, c, d))
        .min(point_segment_distance(c, a, b))
        .min(point_segment_distance(d, a, b))
}

/// True iff `verts` is a strictly convex counterclockwise polygon.
pub fn is_convex_ccw(verts: &[Vec2]) -> bool {
    let n = verts.len();
    if n < 3 {
        return false;
    }
    (0..n).all(|i| orient(verts[i], verts[(i + 1) % n], verts[(i + 2) % n]) > 0.0)
}

/// Closed containment in a CCW convex polygon.
pub fn polygon_contains(verts: &[Vec2], p: Vec2) -> bool {
    let n = verts.len();
    (0..n).all(|i| orient(verts[i], verts[(i + 1) % n], p) >= 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec2,
    pub max: Vec2,
}

impl Aabb {
    pub fn new(min: Vec2, max: Vec2) -> Self {
        Aabb { min, max }
    }

    pub fn from_points(points: impl IntoIterator<Item = Vec2>) -> Self {
        let mut min = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut max = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            min = Vec2::new(min.x.min(p.x), min.y.min(p.y));
            max = Vec2::new(max.x.max(p.x), max.y.max(p.y));
        }
        Aabb { min, max }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn inflate(&self, r: f64) -> Aabb {
        Aabb::new(
            Vec2::new(self.min.x - r, self.min.y - r),
            Vec2::new(self.max.x + r, self.max.y + r),
        )
    }

    pub fn union(&self, o: &Aabb) -> Aabb {
        Aabb::new(
            Vec2::new(self.min.x.min(o.min.x), self.min.y.min(o.min.y)),
            Vec2::new(self.max.x.max(o.max.x), self.max.y.max(o.max.y)),
        )
    }

    pub fn overlaps(&self, o: &Aabb) -> bool {
        self.min.x <= o.max.x && o.min.x <= self.max.x && self.min.y <= o.max.y && o.min.y <= self.max.y
    }
}

// Slack on bounding-box rejection so rounding never rejects an exact touch.
const BBOX_SLACK: f64 = 1e-9;

/// A convex core inflated by a radius.
#[derive(Debug, Clone, PartialEq)]
pub struct Shape {
    core: Vec<Vec2>,
    radius: f64,
    bbox: Aabb,
}

impl Shape {
    fn from_core(core: Vec<Vec2>, radius: f64) -> Self {
        let bbox = Aabb::from_points(core.iter().copied()).inflate(radius + BBOX_SLACK);
        Shape { core, radius, bbox }
    }

    pub fn circle(center: Vec2, radius: f64) -> Self {
        Shape::from_core(vec![center], radius)
    }

    pub fn capsule(a: Vec2, b: Vec2, radius: f64) -> Self {
        Shape::from_core(vec![a, b], radius)
    }

    /// `verts` must be convex and counterclockwise.
    pub fn polygon(verts: Vec<Vec2>) -> Self {
        Shape::from_core(verts, 0.0)
    }

    pub fn core(&self) -> &[Vec2] {
        &self.core
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn bbox(&self) -> &Aabb {
        &self.bbox
    }

    pub fn intersects(&self, other: &Shape) -> bool {
        if !self.bbox.overlaps(&other.bbox) {
            return false;
        }
        core_distance(&self.core, &other.core) <= self.radius + other.radius
    }

    /// Whether the whole inflated shape lies inside `bounds` (closed).
    pub fn inside(&self, bounds: &Aabb) -> bool {
        let r = self.radius;
        self.core.iter().all(|p| {
            p.x - r >= bounds.min.x
                && p.x + r <= bounds.max.x
                && p.y - r >= bounds.min.y
                && p.y + r <= bounds.max.y
        })
    }
}

fn for_each_edge(core: &[Vec2], mut f: impl FnMut(Vec2, Vec2)) {
    match core.len() {
        0 => {}
        1 => f(core[0], core[0]),
        2 => f(core[0], core[1]),
        n => {
            for i in 0..n {
                f(core[i], core[(i + 1) % n]);
            }
        }
    }
}

/// Distance between two convex cores; zero when they overlap.
pub fn core_distance(a: &[Vec2], b: &[Vec2]) -> f64 {
    if a.len() >= 3 && b.iter().any(|&p| polygon_contains(a, p)) {
        return 0.0;
    }
    if b.len() >= 3 && a.iter().any(|&p| polygon_contains(b, p)) {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for_each_edge(a, |p, q| {
        for_each_edge(b, |r, s| {
            best = best.min(segment_distance(p, q, r, s));
        });
    });
    best
}

/// The set of primitives a robot occupies at one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Footprint {
    parts: Vec<Shape>,
    bbox: Aabb,
}

impl Footprint {
    pub fn new(parts: Vec<Shape>) -> Self {
        let bbox = parts
            .iter()
            .map(|s| *s.bbox())
            .reduce(|a, b| a.union(&b))
            .unwrap_or(Aabb::new(Vec2::default(), Vec2::default()));
        Footprint { parts, bbox }
    }

    pub fn parts(&self) -> &[Shape] {
        &self.parts
    }

    pub fn bbox(&self) -> &Aabb {
        &self.bbox
    }

    pub fn intersects(&self, other: &Footprint) -> bool {
        self.bbox.overlaps(&other.bbox)
            && self
                .parts
                .iter()
                .any(|a| other.parts.iter().any(|b| a.intersects(b)))
    }

    pub fn intersects_shape(&self, shape: &Shape) -> bool {
        self.bbox.overlaps(shape.bbox()) && self.parts.iter().any(|a| a.intersects(shape))
    }
}
