//! Planar geometry: poses, convex footprints, separating-axis intersection
//! and conservative swept volumes.
//!
//! Lengths are meters and angles radians throughout. Every value here is
//! immutable once built, so polygons and poses are freely shared between
//! search workers.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance used to reject degenerate input (repeated vertices, zero-length
/// corridors).
pub const EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon vertex {0} is repeated")]
    RepeatedVertex(usize),
    #[error("polygon is not strictly convex and counter-clockwise at vertex {0}")]
    NotConvex(usize),
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("corridor endpoints coincide")]
    DegenerateCorridor,
    #[error("corridor width must be positive, got {0}")]
    BadWidth(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn rotate(self, theta: f64) -> Vec2 {
        let (s, c) = theta.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
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
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(p: [f64; 2]) -> Self {
        Vec2::new(p[0], p[1])
    }
}

/// Wraps an angle into `[-pi, pi)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let t = (theta + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid can round up to exactly 2*pi for tiny negative inputs
    if t >= PI {
        t - 2.0 * PI
    } else {
        t
    }
}

/// A rigid SE(2) transform. `theta` is kept in `[-pi, pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn identity() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    /// Maps a point from this pose's local frame into the parent frame.
    pub fn apply(&self, p: Vec2) -> Vec2 {
        p.rotate(self.theta) + self.position()
    }

    /// Maps a parent-frame point into this pose's local frame.
    pub fn inverse_apply(&self, p: Vec2) -> Vec2 {
        (p - self.position()).rotate(-self.theta)
    }

    /// `self ∘ inner`: apply `inner` first, then `self`.
    pub fn compose(&self, inner: &Pose2) -> Pose2 {
        let t = self.apply(inner.position());
        Pose2::new(t.x, t.y, self.theta + inner.theta)
    }

    pub fn distance(&self, o: &Pose2) -> f64 {
        (self.position() - o.position()).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }
}

impl From<[f64; 3]> for Pose2 {
    fn from(p: [f64; 3]) -> Self {
        Pose2::new(p[0], p[1], p[2])
    }
}

impl From<Pose2> for [f64; 3] {
    fn from(p: Pose2) -> Self {
        [p.x, p.y, p.theta]
    }
}

/// Axis-aligned bounding box, used as a cheap reject before SAT.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec2,
    pub max: Vec2,
}

impl Aabb {
    pub fn overlaps(&self, o: &Aabb) -> bool {
        self.min.x <= o.max.x
            && o.min.x <= self.max.x
            && self.min.y <= o.max.y
            && o.min.y <= self.max.y
    }
}

/// Strictly convex polygon with counter-clockwise winding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct ConvexPolygon {
    vertices: Vec<Vec2>,
}

impl ConvexPolygon {
    pub fn new(vertices: Vec<Vec2>) -> Result<Self, GeomError> {
        let n = vertices.len();
        if n < 3 {
            return Err(GeomError::TooFewVertices(n));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(GeomError::NonFinite);
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if (vertices[i] - vertices[j]).norm() < EPS {
                    return Err(GeomError::RepeatedVertex(j));
                }
            }
        }
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            if (b - a).cross(c - b) <= 0.0 {
                return Err(GeomError::NotConvex((i + 1) % n));
            }
        }
        Ok(Self { vertices })
    }

    /// Axis-aligned `w` x `h` rectangle centered on the origin.
    pub fn rectangle(w: f64, h: f64) -> Result<Self, GeomError> {
        let (hw, hh) = (w / 2.0, h / 2.0);
        Self::new(vec![
            Vec2::new(-hw, -hh),
            Vec2::new(hw, -hh),
            Vec2::new(hw, hh),
            Vec2::new(-hw, hh),
        ])
    }

    /// Axis-aligned rectangle spanning `[x0, x1] x [y0, y1]`.
    pub fn aabb_rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self, GeomError> {
        Self::new(vec![
            Vec2::new(x0, y0),
            Vec2::new(x1, y0),
            Vec2::new(x1, y1),
            Vec2::new(x0, y1),
        ])
    }

    /// Regular `n`-gon of circumradius `r`, first vertex at angle `phase`.
    pub fn regular(n: usize, r: f64, phase: f64) -> Result<Self, GeomError> {
        let verts = (0..n)
            .map(|k| {
                let a = phase + 2.0 * PI * k as f64 / n as f64;
                Vec2::new(r * a.cos(), r * a.sin())
            })
            .collect();
        Self::new(verts)
    }

    /// Convex hull of an arbitrary point cloud (monotone chain). Collinear
    /// points are dropped so the result is strictly convex.
    pub fn hull(points: &[Vec2]) -> Result<Self, GeomError> {
        let mut pts: Vec<Vec2> = points.to_vec();
        pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
        pts.dedup_by(|a, b| (*a - *b).norm() < EPS);
        if pts.len() < 3 {
            return Err(GeomError::TooFewVertices(pts.len()));
        }
        let mut lower: Vec<Vec2> = Vec::with_capacity(pts.len());
        for &p in &pts {
            while lower.len() >= 2 && turn(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0
            {
                lower.pop();
            }
            lower.push(p);
        }
        let mut upper: Vec<Vec2> = Vec::with_capacity(pts.len());
        for &p in pts.iter().rev() {
            while upper.len() >= 2 && turn(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0
            {
                upper.pop();
            }
            upper.push(p);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);
        if lower.len() < 3 {
            return Err(GeomError::TooFewVertices(lower.len()));
        }
        // near-coincident input points can leave sliver edges; SAT only needs
        // a convex CCW vertex list, so skip the strict validation here
        Ok(Self { vertices: lower })
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn aabb(&self) -> Aabb {
        let mut min = self.vertices[0];
        let mut max = self.vertices[0];
        for v in &self.vertices[1..] {
            min.x = min.x.min(v.x);
            min.y = min.y.min(v.y);
            max.x = max.x.max(v.x);
            max.y = max.y.max(v.y);
        }
        Aabb { min, max }
    }

    /// Shoelace area (positive for CCW).
    pub fn area(&self) -> f64 {
        self.edges().map(|(a, b)| a.cross(b)).sum::<f64>() / 2.0
    }

    pub fn centroid(&self) -> Vec2 {
        let mut c = Vec2::default();
        let mut a2 = 0.0;
        for (p, q) in self.edges() {
            let w = p.cross(q);
            a2 += w;
            c = c + (p + q) * w;
        }
        c * (1.0 / (3.0 * a2))
    }

    /// Closed containment test (boundary counts as inside).
    pub fn contains_point(&self, p: Vec2) -> bool {
        self.edges().all(|(a, b)| (b - a).cross(p - a) >= -1e-12)
    }

    /// True when every vertex of `other` lies in this (closed) polygon.
    pub fn contains_polygon(&self, other: &ConvexPolygon) -> bool {
        other.vertices.iter().all(|&v| self.contains_point(v))
    }

    /// Outward offset: every edge moves out by `d`, vertices slide along
    /// their angle bisectors.
    pub fn inflate(&self, d: f64) -> ConvexPolygon {
        let n = self.vertices.len();
        let normals: Vec<Vec2> = self
            .edges()
            .map(|(a, b)| {
                let e = b - a;
                Vec2::new(e.y, -e.x) * (1.0 / e.norm())
            })
            .collect();
        let verts = (0..n)
            .map(|i| {
                let n0 = normals[(i + n - 1) % n];
                let n1 = normals[i];
                let bis = n0 + n1;
                let scale = d / (1.0 + n0.dot(n1));
                self.vertices[i] + bis * scale
            })
            .collect();
        ConvexPolygon { vertices: verts }
    }

    fn project(&self, axis: Vec2) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in &self.vertices {
            let p = v.dot(axis);
            lo = lo.min(p);
            hi = hi.max(p);
        }
        (lo, hi)
    }
}

impl TryFrom<Vec<[f64; 2]>> for ConvexPolygon {
    type Error = GeomError;
    fn try_from(v: Vec<[f64; 2]>) -> Result<Self, Self::Error> {
        ConvexPolygon::new(v.into_iter().map(Vec2::from).collect())
    }
}

impl From<ConvexPolygon> for Vec<[f64; 2]> {
    fn from(p: ConvexPolygon) -> Self {
        p.vertices.into_iter().map(|v| [v.x, v.y]).collect()
    }
}

fn turn(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

/// Places `poly` at `pose`: rotate each vertex by `theta`, then translate.
pub fn transform(poly: &ConvexPolygon, pose: &Pose2) -> ConvexPolygon {
    let (s, c) = pose.theta.sin_cos();
    let vertices = poly
        .vertices
        .iter()
        .map(|v| Vec2::new(c * v.x - s * v.y + pose.x, s * v.x + c * v.y + pose.y))
        .collect();
    // rotations preserve winding and convexity
    ConvexPolygon { vertices }
}

/// Separating-axis test on closed polygons; boundary contact intersects.
pub fn intersects(a: &ConvexPolygon, b: &ConvexPolygon) -> bool {
    if !a.aabb().overlaps(&b.aabb()) {
        return false;
    }
    !has_separating_axis(a, b) && !has_separating_axis(b, a)
}

fn has_separating_axis(a: &ConvexPolygon, b: &ConvexPolygon) -> bool {
    a.edges().any(|(p, q)| {
        let axis = (q - p).perp();
        let (alo, ahi) = a.project(axis);
        let (blo, bhi) = b.project(axis);
        ahi < blo || bhi < alo
    })
}

/// Conservative swept volume of `footprint` along `path`: one convex hull per
/// segment covering the footprint at both segment endpoints.
pub fn sweep(footprint: &ConvexPolygon, path: &[Pose2]) -> Vec<ConvexPolygon> {
    match path {
        [] => Vec::new(),
        [only] => vec![transform(footprint, only)],
        _ => path
            .windows(2)
            .map(|w| {
                let a = transform(footprint, &w[0]);
                let b = transform(footprint, &w[1]);
                let mut pts = a.vertices.clone();
                pts.extend_from_slice(&b.vertices);
                ConvexPolygon::hull(&pts).expect("footprint hull has at least 3 vertices")
            })
            .collect(),
    }
}

/// Rectangle of given width centered on a segment; the arm reach stand-in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Corridor {
    start: Vec2,
    end: Vec2,
    width: f64,
}

impl Corridor {
    pub fn new(start: Vec2, end: Vec2, width: f64) -> Result<Self, GeomError> {
        if width.is_nan() || width <= 0.0 {
            return Err(GeomError::BadWidth(width));
        }
        if !start.is_finite() || !end.is_finite() {
            return Err(GeomError::NonFinite);
        }
        if (end - start).norm() < EPS {
            return Err(GeomError::DegenerateCorridor);
        }
        Ok(Self { start, end, width })
    }

    pub fn start(&self) -> Vec2 {
        self.start
    }

    pub fn end(&self) -> Vec2 {
        self.end
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn length(&self) -> f64 {
        (self.end - self.start).norm()
    }
}

pub fn corridor_polygon(c: &Corridor) -> ConvexPolygon {
    let d = c.end - c.start;
    let u = d * (1.0 / d.norm());
    let n = u.perp() * (c.width / 2.0);
    ConvexPolygon {
        vertices: vec![c.start - n, c.end - n, c.end + n, c.start + n],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_square() -> ConvexPolygon {
        ConvexPolygon::aabb_rect(0.0, 0.0, 1.0, 1.0).unwrap()
    }

    fn close(a: Vec2, b: Vec2) -> bool {
        (a - b).norm() < 1e-9
    }

    #[test]
    fn transform_identity_and_translation() {
        let sq = unit_square();
        assert_eq!(transform(&sq, &Pose2::identity()), sq);
        let moved = transform(&sq, &Pose2::new(1.0, 0.0, 0.0));
        for (a, b) in moved.vertices().iter().zip(sq.vertices()) {
            assert!(close(*a, *b + Vec2::new(1.0, 0.0)));
        }
    }

    #[test]
    fn transform_quarter_turn_matches_rotation_matrix() {
        let sq = unit_square();
        let rotated = transform(&sq, &Pose2::new(0.0, 0.0, PI / 2.0));
        // independent oracle: [[0,-1],[1,0]] applied per vertex
        for (r, v) in rotated.vertices().iter().zip(sq.vertices()) {
            assert!(close(*r, Vec2::new(-v.y, v.x)));
        }
        assert!(rotated.area() > 0.0);
    }

    #[test]
    fn intersects_basic_cases() {
        let a = unit_square();
        let b = transform(&a, &Pose2::new(0.5, 0.0, 0.0));
        let far = transform(&a, &Pose2::new(10.0, 0.0, 0.0));
        let shared_edge = transform(&a, &Pose2::new(1.0, 0.0, 0.0));
        assert!(intersects(&a, &b));
        assert!(!intersects(&a, &far));
        assert!(intersects(&a, &shared_edge));
    }

    #[test]
    fn shared_edge_has_no_strict_separating_axis() {
        // brute force: scan a dense fan of axes, none strictly separates
        let a = unit_square();
        let b = transform(&a, &Pose2::new(1.0, 0.0, 0.0));
        for k in 0..3600 {
            let t = k as f64 * PI / 3600.0;
            let axis = Vec2::new(t.cos(), t.sin());
            let (alo, ahi) = a.project(axis);
            let (blo, bhi) = b.project(axis);
            assert!(
                !(ahi < blo - 1e-12 || bhi < alo - 1e-12),
                "axis {t} separates"
            );
        }
    }

    #[test]
    fn polygon_validation() {
        assert_eq!(
            ConvexPolygon::new(vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)]),
            Err(GeomError::TooFewVertices(2))
        );
        // clockwise square
        let cw = ConvexPolygon::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(1.0, 0.0),
        ]);
        assert!(matches!(cw, Err(GeomError::NotConvex(_))));
        let dup = ConvexPolygon::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, 1.0),
        ]);
        assert!(matches!(dup, Err(GeomError::RepeatedVertex(_))));
    }

    #[test]
    fn sweep_single_pose_is_placed_footprint() {
        let sq = unit_square();
        let p = Pose2::new(2.0, 3.0, 0.3);
        assert_eq!(sweep(&sq, &[p]), vec![transform(&sq, &p)]);
    }

    #[test]
    fn sweep_collinear_segment_matches_independent_hull() {
        let sq = ConvexPolygon::rectangle(1.0, 1.0).unwrap();
        let path = [Pose2::new(0.0, 0.0, 0.0), Pose2::new(2.0, 0.0, 0.0)];
        let swept = sweep(&sq, &path);
        assert_eq!(swept.len(), 1);
        // hull of the 8 vertices is the 3 x 1 box [-0.5, 2.5] x [-0.5, 0.5]
        assert!((swept[0].area() - 3.0).abs() < 1e-9);
        assert!(swept[0].area() >= sq.area());
        let expected = ConvexPolygon::aabb_rect(-0.5, -0.5, 2.5, 0.5).unwrap();
        for v in expected.vertices() {
            assert!(swept[0].vertices().iter().any(|w| close(*v, *w)));
        }
    }

    #[test]
    fn corridor_axis_aligned_corners() {
        let c = Corridor::new(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), 0.2).unwrap();
        let poly = corridor_polygon(&c);
        let expected = [
            Vec2::new(0.0, -0.1),
            Vec2::new(1.0, -0.1),
            Vec2::new(1.0, 0.1),
            Vec2::new(0.0, 0.1),
        ];
        for (a, b) in poly.vertices().iter().zip(expected) {
            assert!(close(*a, b));
        }
    }

    #[test]
    fn corridor_degenerate_is_rejected() {
        let s = Vec2::new(0.3, 0.3);
        let e = s + Vec2::new(5e-10, 0.0);
        assert_eq!(Corridor::new(s, e, 0.1), Err(GeomError::DegenerateCorridor));
        assert!(matches!(
            Corridor::new(s, Vec2::new(1.0, 1.0), 0.0),
            Err(GeomError::BadWidth(_))
        ));
    }

    #[test]
    fn angle_normalization_half_open() {
        assert_eq!(normalize_angle(PI), -PI);
        assert!((normalize_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        let t = normalize_angle(-1e-300);
        assert!((-PI..PI).contains(&t));
    }

    #[test]
    fn inflate_moves_rectangle_edges_outward() {
        let r = ConvexPolygon::aabb_rect(0.0, 0.0, 2.0, 1.0)
            .unwrap()
            .inflate(0.1);
        let bb = r.aabb();
        assert!(close(bb.min, Vec2::new(-0.1, -0.1)));
        assert!(close(bb.max, Vec2::new(2.1, 1.1)));
    }

    fn arb_pose() -> impl Strategy<Value = Pose2> {
        (-5.0..5.0f64, -5.0..5.0f64, -PI..PI).prop_map(|(x, y, t)| Pose2::new(x, y, t))
    }

    fn arb_polygon() -> impl Strategy<Value = ConvexPolygon> {
        (3usize..9, 0.05..1.5f64, 0.0..PI, arb_pose()).prop_map(|(n, r, phase, pose)| {
            transform(&ConvexPolygon::regular(n, r, phase).unwrap(), &pose)
        })
    }

    proptest! {
        #[test]
        fn intersects_is_symmetric(a in arb_polygon(), b in arb_polygon()) {
            prop_assert_eq!(intersects(&a, &b), intersects(&b, &a));
        }

        #[test]
        fn transform_composes(g in arb_pose(), h in arb_pose()) {
            let p = ConvexPolygon::regular(5, 0.7, 0.1).unwrap();
            let twice = transform(&transform(&p, &g), &h);
            let once = transform(&p, &h.compose(&g));
            for (a, b) in twice.vertices().iter().zip(once.vertices()) {
                prop_assert!((*a - *b).norm() < 1e-9);
            }
        }

        #[test]
        fn corridor_is_valid_and_has_exact_area(
            sx in -3.0..3.0f64, sy in -3.0..3.0f64,
            len in 0.01..4.0f64, ang in -PI..PI, w in 0.01..1.0f64,
        ) {
            let start = Vec2::new(sx, sy);
            let end = start + Vec2::new(len * ang.cos(), len * ang.sin());
            let poly = corridor_polygon(&Corridor::new(start, end, w).unwrap());
            prop_assert!(ConvexPolygon::new(poly.vertices().to_vec()).is_ok());
            prop_assert!((poly.area() - len * w).abs() < 1e-9);
        }
    }
}
