//! Planar polygons, arc-length boundary coordinates and intrinsic distance.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;

use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point<S> {
    pub x: S,
    pub y: S,
}

impl<S: Scalar> Point<S> {
    pub fn new(x: S, y: S) -> Self {
        Point { x, y }
    }
    pub fn sub(self, o: Self) -> Self {
        Point::new(self.x - o.x, self.y - o.y)
    }
    pub fn add(self, o: Self) -> Self {
        Point::new(self.x + o.x, self.y + o.y)
    }
    pub fn scale(self, k: S) -> Self {
        Point::new(self.x * k, self.y * k)
    }
    pub fn dot(self, o: Self) -> S {
        self.x * o.x + self.y * o.y
    }
    pub fn cross(self, o: Self) -> S {
        self.x * o.y - self.y * o.x
    }
    pub fn norm2(self) -> S {
        self.dot(self)
    }
    pub fn to_f64(self) -> Point<f64> {
        Point::new(self.x.to_f64(), self.y.to_f64())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeometryError {
    TooFewVertices,
    DegenerateVertex { index: usize },
    SelfIntersecting { side_a: usize, side_b: usize },
    NotCounterclockwise,
    IrrationalSide { index: usize },
    OutOfRange,
    DifferentComponents,
    PointOutside,
}

#[derive(Clone, Debug)]
pub struct Polygon<S> {
    vertices: Vec<Point<S>>,
    side_lengths: Vec<S>,
    starts: Vec<S>,
    boundary_length: S,
    semi_angles: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryPos<S> {
    pub component: usize,
    pub t: S,
}

impl<S: Scalar> BoundaryPos<S> {
    pub fn new(component: usize, t: S) -> Self {
        BoundaryPos { component, t }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundarySegment<S> {
    pub start: BoundaryPos<S>,
    pub length: S,
}

impl<S: Scalar> BoundarySegment<S> {
    pub fn new(component: usize, start: S, length: S) -> Self {
        BoundarySegment { start: BoundaryPos::new(component, start), length }
    }
    pub fn component(&self) -> usize {
        self.start.component
    }
}

/// Squared distance from `p` to segment `ab`.
pub fn point_segment_dist2<S: Scalar>(p: Point<S>, a: Point<S>, b: Point<S>) -> S {
    let ab = b.sub(a);
    let ap = p.sub(a);
    let l2 = ab.norm2();
    if l2 == S::zero() {
        return ap.norm2();
    }
    let t = ap.dot(ab);
    if t <= S::zero() {
        return ap.norm2();
    }
    if t >= l2 {
        return p.sub(b).norm2();
    }
    let c = ap.cross(ab);
    c * c / l2
}

fn orient<S: Scalar>(a: Point<S>, b: Point<S>, c: Point<S>) -> i8 {
    let v = b.sub(a).cross(c.sub(a));
    if v > S::zero() {
        1
    } else if v < S::zero() {
        -1
    } else {
        0
    }
}

/// Squared distance between segments `ab` and `cd`; zero when they cross.
pub fn segment_dist2<S: Scalar>(a: Point<S>, b: Point<S>, c: Point<S>, d: Point<S>) -> S {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    if o1 * o2 < 0 && o3 * o4 < 0 {
        return S::zero();
    }
    point_segment_dist2(a, c, d)
        .min_s(point_segment_dist2(b, c, d))
        .min_s(point_segment_dist2(c, a, b))
        .min_s(point_segment_dist2(d, a, b))
}

pub fn signed_area2<S: Scalar>(vs: &[Point<S>]) -> S {
    let n = vs.len();
    let mut acc = S::zero();
    for i in 0..n {
        acc = acc + vs[i].cross(vs[(i + 1) % n]);
    }
    acc
}

/// Validate a counterclockwise simple polygon.
pub fn polygon_validate<S: Scalar>(vertices: Vec<Point<S>>) -> Result<Polygon<S>, GeometryError> {
    let n = vertices.len();
    if n < 3 {
        return Err(GeometryError::TooFewVertices);
    }
    let mut side_lengths = Vec::with_capacity(n);
    for i in 0..n {
        let e = vertices[(i + 1) % n].sub(vertices[i]);
        let l2 = e.norm2();
        if l2 <= S::tol() * S::tol() {
            return Err(GeometryError::DegenerateVertex { index: i });
        }
        match l2.sqrt() {
            Some(l) => side_lengths.push(l),
            None => return Err(GeometryError::IrrationalSide { index: i }),
        }
    }
    let mut semi_angles = Vec::with_capacity(n);
    for i in 0..n {
        let ein = vertices[i].sub(vertices[(i + n - 1) % n]);
        let eout = vertices[(i + 1) % n].sub(vertices[i]);
        let cr = ein.cross(eout);
        let scale = side_lengths[(i + n - 1) % n] * side_lengths[i];
        if cr.abs() <= S::tol() * scale {
            return Err(GeometryError::DegenerateVertex { index: i });
        }
        let turn = Float::atan2(cr.to_f64(), ein.dot(eout).to_f64());
        semi_angles.push((PI - turn) / 2.0);
    }
    let area = signed_area2(&vertices);
    if area <= S::zero() {
        return Err(GeometryError::NotCounterclockwise);
    }
    let t2 = S::tol() * S::tol();
    for i in 0..n {
        for j in (i + 1)..n {
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let d2 = segment_dist2(vertices[i], vertices[(i + 1) % n], vertices[j], vertices[(j + 1) % n]);
            if d2 <= t2 {
                return Err(GeometryError::SelfIntersecting { side_a: i, side_b: j });
            }
        }
    }
    let mut starts = Vec::with_capacity(n + 1);
    let mut acc = S::zero();
    for l in &side_lengths {
        starts.push(acc);
        acc = acc + *l;
    }
    Ok(Polygon { vertices, side_lengths, starts, boundary_length: acc, semi_angles })
}

impl<S: Scalar> Polygon<S> {
    pub fn vertices(&self) -> &[Point<S>] {
        &self.vertices
    }
    pub fn len(&self) -> usize {
        self.vertices.len()
    }
    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
    pub fn side_lengths(&self) -> &[S] {
        &self.side_lengths
    }
    /// Arc-length parameter of each vertex.
    pub fn starts(&self) -> &[S] {
        &self.starts
    }
    pub fn boundary_length(&self) -> S {
        self.boundary_length
    }
    /// Half internal angles.
    pub fn semi_angles(&self) -> &[f64] {
        &self.semi_angles
    }
    pub fn vertex(&self, i: usize) -> Point<S> {
        self.vertices[i % self.vertices.len()]
    }
    pub fn is_convex(&self) -> bool {
        self.semi_angles.iter().all(|&a| a < PI / 2.0)
    }

    /// Index of the side containing parameter `t` (which must be in range).
    pub fn side_of(&self, t: S) -> usize {
        match self.starts.binary_search_by(|s| s.cmp_s(&t)) {
            Ok(i) => i,
            Err(i) => i - 1,
        }
    }

    pub fn point_at(&self, t: S) -> Result<Point<S>, GeometryError> {
        if t < S::zero() || t >= self.boundary_length {
            return Err(GeometryError::OutOfRange);
        }
        let i = self.side_of(t);
        let f = (t - self.starts[i]) / self.side_lengths[i];
        let a = self.vertices[i];
        let b = self.vertex(i + 1);
        Ok(a.add(b.sub(a).scale(f)))
    }

    /// Inside or on the boundary, within tolerance.
    pub fn contains(&self, p: Point<S>) -> bool {
        let n = self.len();
        let t2 = S::tol() * S::tol();
        for i in 0..n {
            if point_segment_dist2(p, self.vertices[i], self.vertex(i + 1)) <= t2 {
                return true;
            }
        }
        let mut wind = 0i32;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertex(i + 1);
            if a.y <= p.y {
                if b.y > p.y && orient(a, b, p) > 0 {
                    wind += 1;
                }
            } else if b.y <= p.y && orient(a, b, p) < 0 {
                wind -= 1;
            }
        }
        wind != 0
    }

    pub fn to_f64(&self) -> Polygon<f64> {
        Polygon {
            vertices: self.vertices.iter().map(|p| p.to_f64()).collect(),
            side_lengths: self.side_lengths.iter().map(|s| s.to_f64()).collect(),
            starts: self.starts.iter().map(|s| s.to_f64()).collect(),
            boundary_length: self.boundary_length.to_f64(),
            semi_angles: self.semi_angles.clone(),
        }
    }
}

pub fn boundary_point<S: Scalar>(polygon: &Polygon<S>, pos: BoundaryPos<S>) -> Result<Point<S>, GeometryError> {
    polygon.point_at(pos.t)
}

/// Shorter arc distance along one boundary component.
pub fn boundary_distance<S: Scalar>(
    polygon: &Polygon<S>,
    a: BoundaryPos<S>,
    b: BoundaryPos<S>,
) -> Result<S, GeometryError> {
    if a.component != b.component {
        return Err(GeometryError::DifferentComponents);
    }
    Ok(cyclic_distance(a.t, b.t, polygon.boundary_length()))
}

pub fn cyclic_distance<S: Scalar>(a: S, b: S, l: S) -> S {
    let d = (a - b).abs();
    d.min_s(l - d)
}

fn visible(poly: &Polygon<f64>, a: Point<f64>, b: Point<f64>) -> bool {
    let n = poly.len();
    let d = b.sub(a);
    let len2 = d.norm2();
    if len2 == 0.0 {
        return true;
    }
    let mut cuts = vec![0.0, 1.0];
    for i in 0..n {
        let p = poly.vertex(i);
        let q = poly.vertex(i + 1);
        let e = q.sub(p);
        let den = d.cross(e);
        if den.abs() > 1e-15 {
            let s = p.sub(a).cross(e) / den;
            let u = p.sub(a).cross(d) / den;
            if (-1e-12..=1.0 + 1e-12).contains(&u) && s > 0.0 && s < 1.0 {
                cuts.push(s);
            }
        }
        let s = p.sub(a).dot(d) / len2;
        if s > 0.0 && s < 1.0 {
            cuts.push(s);
        }
    }
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    for w in cuts.windows(2) {
        if w[1] - w[0] < 1e-14 {
            continue;
        }
        let m = (w[0] + w[1]) / 2.0;
        if !poly.contains(a.add(d.scale(m))) {
            return false;
        }
    }
    true
}

/// Geodesic distance inside a simple polygon through its reflex vertices.
pub fn intrinsic_distance<S: Scalar>(polygon: &Polygon<S>, p: Point<S>, q: Point<S>) -> Result<f64, GeometryError> {
    let poly = polygon.to_f64();
    let (p, q) = (p.to_f64(), q.to_f64());
    if !poly.contains(p) || !poly.contains(q) {
        return Err(GeometryError::PointOutside);
    }
    let mut nodes = vec![p, q];
    for (i, a) in poly.semi_angles().iter().enumerate() {
        if *a > PI / 2.0 {
            nodes.push(poly.vertex(i));
        }
    }
    let m = nodes.len();
    let mut dist = vec![f64::INFINITY; m];
    let mut done = vec![false; m];
    dist[0] = 0.0;
    for _ in 0..m {
        let mut u = usize::MAX;
        for i in 0..m {
            if !done[i] && (u == usize::MAX || dist[i] < dist[u]) {
                u = i;
            }
        }
        if u == usize::MAX || !dist[u].is_finite() {
            break;
        }
        done[u] = true;
        if u == 1 {
            break;
        }
        for v in 0..m {
            if done[v] {
                continue;
            }
            let w = Float::sqrt(nodes[v].sub(nodes[u]).norm2());
            if dist[u] + w < dist[v] && visible(&poly, nodes[u], nodes[v]) {
                dist[v] = dist[u] + w;
            }
        }
    }
    Ok(dist[1])
}
