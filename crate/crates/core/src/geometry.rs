//! Planar primitives on O(1)-scaled coordinates.
//!
//! Predicates use an absolute tolerance [`EPS_GEOM`] on determinants. Distances
//! that stand in for the set metric use the ℓ∞ norm; the hull and clipping
//! arithmetic is metric-free.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on orientation determinants.
pub const EPS_GEOM: f64 = 1e-12;

#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Lexicographic order: x first, then y.
    pub fn lex_cmp(&self, other: &Point) -> Ordering {
        self.x
            .total_cmp(&other.x)
            .then_with(|| self.y.total_cmp(&other.y))
    }

    pub fn sub(&self, other: &Point) -> Point {
        Point::new(self.x - other.x, self.y - other.y)
    }

    pub fn linf(&self, other: &Point) -> f64 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl From<[f64; 2]> for Point {
    fn from(v: [f64; 2]) -> Self {
        Point::new(v[0], v[1])
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl From<(f64, f64)> for Point {
    fn from(v: (f64, f64)) -> Self {
        Point::new(v.0, v.1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    Positive,
    Zero,
    Negative,
}

/// Raw determinant `(b - a) x (c - a)`.
#[inline]
pub fn cross(a: &Point, b: &Point, c: &Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Sign of the turn a -> b -> c. `Positive` is counterclockwise.
#[inline]
pub fn orientation(a: &Point, b: &Point, c: &Point) -> Orientation {
    let d = cross(a, b, c);
    if d > EPS_GEOM {
        Orientation::Positive
    } else if d < -EPS_GEOM {
        Orientation::Negative
    } else {
        Orientation::Zero
    }
}

/// A closed convex polygon stored as a counterclockwise vertex list with no
/// repeated vertices and no collinear consecutive triples. The first vertex is
/// the lexicographically smallest. Zero, one and two vertices encode the empty
/// set, a point and a segment.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConvexPolygon {
    vertices: Vec<Point>,
}

impl ConvexPolygon {
    pub fn empty() -> Self {
        ConvexPolygon { vertices: Vec::new() }
    }

    /// Convex hull of arbitrary points; the canonical constructor.
    pub fn hull_of(points: &[Point]) -> Self {
        convex_hull(points)
    }

    /// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        convex_hull(&[
            Point::new(x0, y0),
            Point::new(x1, y0),
            Point::new(x1, y1),
            Point::new(x0, y1),
        ])
    }

    /// Regular `k`-gon inscribed in the circle of radius `r` about `(cx, cy)`.
    pub fn regular(cx: f64, cy: f64, r: f64, k: usize) -> Self {
        let pts: Vec<Point> = (0..k)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * i as f64 / k as f64;
                Point::new(cx + r * t.cos(), cy + r * t.sin())
            })
            .collect();
        convex_hull(&pts)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn area(&self) -> f64 {
        let v = &self.vertices;
        if v.len() < 3 {
            return 0.0;
        }
        let mut s = 0.0;
        for i in 0..v.len() {
            let a = v[i];
            let b = v[(i + 1) % v.len()];
            s += a.x * b.y - a.y * b.x;
        }
        0.5 * s.abs()
    }

    pub fn contains(&self, q: &Point) -> bool {
        contains(self, q)
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Self {
        ConvexPolygon {
            vertices: self
                .vertices
                .iter()
                .map(|p| Point::new(p.x + dx, p.y + dy))
                .collect(),
        }
    }

    /// Directed edges `(v_i, v_{i+1})`. A segment yields its single edge and a
    /// point yields nothing.
    fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let v = &self.vertices;
        let n = match v.len() {
            0 | 1 => 0,
            2 => 1,
            k => k,
        };
        (0..n).map(move |i| (v[i], v[(i + 1) % v.len()]))
    }
}

/// Monotone-chain hull. Deterministic under input permutation; collinear
/// boundary points are dropped.
pub fn convex_hull(points: &[Point]) -> ConvexPolygon {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.lex_cmp(b));
    pts.dedup_by(|a, b| a.x == b.x && a.y == b.y);
    if pts.len() <= 1 {
        return ConvexPolygon { vertices: pts };
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for p in iter {
            while hull.len() >= start + 2
                && orientation(&hull[hull.len() - 2], &hull[hull.len() - 1], p)
                    != Orientation::Positive
            {
                hull.pop();
            }
            hull.push(*p);
        }
        hull.pop();
    }
    // All points collinear within tolerance: keep the two extremes.
    if hull.len() < 3 {
        let a = pts[0];
        let b = *pts.last().unwrap();
        let vertices = if a.linf(&b) == 0.0 { vec![a] } else { vec![a, b] };
        return ConvexPolygon { vertices };
    }
    ConvexPolygon { vertices: hull }
}

fn on_segment(a: &Point, b: &Point, q: &Point) -> bool {
    if orientation(a, b, q) != Orientation::Zero {
        return false;
    }
    let (ex, ey) = (b.x - a.x, b.y - a.y);
    let t0 = (q.x - a.x) * ex + (q.y - a.y) * ey;
    let t1 = (q.x - b.x) * -ex + (q.y - b.y) * -ey;
    t0 >= -EPS_GEOM && t1 >= -EPS_GEOM
}

/// Closed-set membership; boundary points count as inside.
pub fn contains(poly: &ConvexPolygon, q: &Point) -> bool {
    let v = &poly.vertices;
    match v.len() {
        0 => false,
        1 => v[0].linf(q) <= EPS_GEOM,
        2 => on_segment(&v[0], &v[1], q),
        n => (0..n).all(|i| orientation(&v[i], &v[(i + 1) % n], q) != Orientation::Negative),
    }
}

/// Sutherland–Hodgman clip of `subject` by the half-planes of the convex,
/// counterclockwise `clip` polygon.
fn clip_polygon(subject: &[Point], clip: &[Point]) -> Vec<Point> {
    let mut out: Vec<Point> = subject.to_vec();
    for i in 0..clip.len() {
        if out.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % clip.len()];
        let input = std::mem::take(&mut out);
        for k in 0..input.len() {
            let p = input[k];
            let q = input[(k + 1) % input.len()];
            let dp = cross(&a, &b, &p);
            let dq = cross(&a, &b, &q);
            if dp >= 0.0 {
                out.push(p);
            }
            if (dp >= 0.0) != (dq >= 0.0) {
                let t = dp / (dp - dq);
                out.push(Point::new(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)));
            }
        }
    }
    out
}

fn shoelace(v: &[Point]) -> f64 {
    if v.len() < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..v.len() {
        let a = v[i];
        let b = v[(i + 1) % v.len()];
        s += a.x * b.y - a.y * b.x;
    }
    0.5 * s.abs()
}

/// Area of the intersection of two convex polygons.
pub fn intersection_area(p1: &ConvexPolygon, p2: &ConvexPolygon) -> f64 {
    if p1.len() < 3 || p2.len() < 3 {
        return 0.0;
    }
    let a = shoelace(&clip_polygon(&p1.vertices, &p2.vertices));
    a.clamp(0.0, p1.area().min(p2.area()))
}

/// Intersection of two convex polygons as a polygon (possibly degenerate).
pub fn intersection(p1: &ConvexPolygon, p2: &ConvexPolygon) -> ConvexPolygon {
    if p1.is_empty() || p2.is_empty() {
        return ConvexPolygon::empty();
    }
    if p1.len() < 3 {
        let kept: Vec<Point> = p1.vertices.iter().copied().filter(|v| p2.contains(v)).collect();
        return convex_hull(&kept);
    }
    if p2.len() < 3 {
        return intersection(p2, p1);
    }
    convex_hull(&clip_polygon(&p1.vertices, &p2.vertices))
}

pub fn symmetric_difference_area(p1: &ConvexPolygon, p2: &ConvexPolygon) -> f64 {
    (p1.area() + p2.area() - 2.0 * intersection_area(p1, p2)).max(0.0)
}

/// ℓ∞ fattening and thinning by `delta`: `(S^δ, _δS)`.
///
/// Fattening is the Minkowski sum with the square `[-δ, δ]²`; thinning is the
/// erosion by the same square, i.e. the intersection of the four
/// corner-translates of the polygon. Thinning a degenerate polygon by a
/// positive amount gives the empty set.
pub fn fatten_thin(poly: &ConvexPolygon, delta: f64) -> Result<(ConvexPolygon, ConvexPolygon)> {
    if delta.is_nan() || delta < 0.0 {
        return Err(Error::invalid(format!("delta must be >= 0, got {delta}")));
    }
    if delta == 0.0 || poly.is_empty() {
        return Ok((poly.clone(), poly.clone()));
    }
    let corners = [(-delta, -delta), (delta, -delta), (delta, delta), (-delta, delta)];
    let fat_pts: Vec<Point> = poly
        .vertices
        .iter()
        .flat_map(|v| corners.iter().map(move |(dx, dy)| Point::new(v.x + dx, v.y + dy)))
        .collect();
    let fat = convex_hull(&fat_pts);

    if poly.len() < 3 {
        return Ok((fat, ConvexPolygon::empty()));
    }
    let mut region = poly.translate(-corners[0].0, -corners[0].1).vertices;
    for (dx, dy) in &corners[1..] {
        let shifted = poly.translate(-dx, -dy);
        region = clip_polygon(&region, &shifted.vertices);
        if region.is_empty() {
            break;
        }
    }
    let thin = if shoelace(&region) <= EPS_GEOM * EPS_GEOM {
        // Zero-width remainder: keep it only if it is a genuine point/segment.
        let h = convex_hull(&region);
        if h.len() < 3 {
            h
        } else {
            ConvexPolygon::empty()
        }
    } else {
        convex_hull(&region)
    };
    Ok((fat, thin))
}

/// ℓ∞ distance from `q` to the segment `[a, b]`.
pub fn linf_point_segment(q: &Point, a: &Point, b: &Point) -> f64 {
    let (dx0, dy0) = (q.x - a.x, q.y - a.y);
    let (ex, ey) = (b.x - a.x, b.y - a.y);
    let f = |t: f64| (dx0 - t * ex).abs().max((dy0 - t * ey).abs());
    let mut best = f(0.0).min(f(1.0));
    let mut try_t = |num: f64, den: f64| {
        if den != 0.0 {
            let t = (num / den).clamp(0.0, 1.0);
            best = best.min(f(t));
        }
    };
    try_t(dx0 - dy0, ex - ey);
    try_t(dx0 + dy0, ex + ey);
    try_t(dx0, ex);
    try_t(dy0, ey);
    best
}

/// ℓ∞ distance from a point to a closed convex polygon (0 inside).
pub fn linf_point_polygon(q: &Point, poly: &ConvexPolygon) -> Result<f64> {
    match poly.len() {
        0 => Err(Error::EmptyPolygon),
        1 => Ok(poly.vertices[0].linf(q)),
        _ => {
            if poly.contains(q) {
                return Ok(0.0);
            }
            Ok(poly
                .edges()
                .map(|(a, b)| linf_point_segment(q, &a, &b))
                .fold(f64::INFINITY, f64::min))
        }
    }
}

/// ℓ∞ Hausdorff distance between two non-empty convex polygons. Because the
/// distance to a convex set is a convex function, each directed supremum is
/// attained at a vertex.
pub fn hausdorff_distance(p1: &ConvexPolygon, p2: &ConvexPolygon) -> Result<f64> {
    if p1.is_empty() || p2.is_empty() {
        return Err(Error::EmptyPolygon);
    }
    let directed = |a: &ConvexPolygon, b: &ConvexPolygon| -> Result<f64> {
        let mut m: f64 = 0.0;
        for v in &a.vertices {
            m = m.max(linf_point_polygon(v, b)?);
        }
        Ok(m)
    };
    Ok(directed(p1, p2)?.max(directed(p2, p1)?))
}
