//! The NBT horseshoe family `P_n`, the tight horseshoe on the unit square,
//! tent-map symbolic data and the uniform modulus bounds for the family.
//!
//! `P_n` has algebraic, not rational, coordinates and sides as short as
//! `2^-(n+1)`, so it is built in double-double arithmetic.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{LN_2, PI, SQRT_2};

use num_traits::Float;

use crate::collar::{compute_constants, PolygonConstants};
use crate::criterion::{Bounded, GoodnessProfile};
use crate::dd::Dd;
use crate::geometry::{point_segment_dist2, polygon_validate, BoundaryPos, BoundarySegment, GeometryError, Point, Polygon};
use crate::scalar::{rat, Rational, Real, Scalar};
use crate::scar::{BallEvaluator, EdgeSource, ScarGraph, ScarPoint, TailStar};
use crate::scheme::{Arrangement, FoldingScheme, SegmentPairing, TailFamily, TailKind};
use crate::special::integrate;

/// Tolerance for the closed-form identities of the family.
pub const IDENTITY_TOL: f64 = 1e-10;
/// Collar height and `rbar` shared by every `P_n`.
pub const NBT_RBAR: f64 = 1.0 / 24.0;

#[derive(Clone, Debug, PartialEq)]
pub enum HorseshoeError {
    OrderTooSmall { n: usize },
    OutOfRange,
    PointOutside,
    Geometry(GeometryError),
    Scar,
    /// A closed-form identity failed beyond [`IDENTITY_TOL`].
    Identity { what: &'static str, defect: f64 },
    BoundViolated { what: &'static str, n: usize, at: f64, value: f64, bound: f64 },
}

impl From<GeometryError> for HorseshoeError {
    fn from(e: GeometryError) -> Self {
        HorseshoeError::Geometry(e)
    }
}

fn witness(what: &'static str, defect: f64) -> Result<(), HorseshoeError> {
    if defect.abs() <= IDENTITY_TOL {
        Ok(())
    } else {
        Err(HorseshoeError::Identity { what, defect })
    }
}

fn powu<S: Scalar>(x: S, k: usize) -> S {
    let mut acc = S::one();
    let mut b = x;
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b;
        }
        b = b * b;
        e >>= 1;
    }
    acc
}

fn from_dd<S: Real>(x: Dd) -> S {
    S::from_f64_r(x.hi()) + S::from_f64_r(x.lo())
}

/// The tent map `T(x) = lambda (x - 1) + 2` left of the turning point, `lambda (1 - x)` right of it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TentMap<S> {
    lambda: S,
}

impl<S: Real> TentMap<S> {
    /// Slope must lie in `(sqrt 2, 2]`.
    pub fn new(lambda: S) -> Result<Self, HorseshoeError> {
        let l = lambda.to_f64();
        if !(l > SQRT_2 && l <= 2.0) {
            return Err(HorseshoeError::OutOfRange);
        }
        Ok(TentMap { lambda })
    }
    pub fn lambda(&self) -> S {
        self.lambda
    }
    pub fn turning_point(&self) -> S {
        S::one() - S::one() / self.lambda
    }
    pub fn apply(&self, x: S) -> S {
        if x <= self.turning_point() {
            self.lambda * (x - S::one()) + S::two()
        } else {
            self.lambda * (S::one() - x)
        }
    }
}

/// `lambda^(n+2) - 2 lambda^(n+1) + 2 lambda - 1`.
pub fn lambda_polynomial<S: Scalar>(n: usize, l: S) -> S {
    let p = powu(l, n + 1);
    p * l - S::two() * p + S::two() * l - S::one()
}

/// Largest root of [`lambda_polynomial`], by bisection on `[3/2, 2]`.
pub fn lambda_n(n: usize) -> Result<Dd, HorseshoeError> {
    if n < 3 {
        return Err(HorseshoeError::OrderTooSmall { n });
    }
    let mut lo = Dd::from(1.5);
    let mut hi = Dd::from(2.0);
    debug_assert!(lambda_polynomial(n, lo) < Dd::ZERO);
    for _ in 0..200 {
        let mid = (lo + hi) * Dd::from(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if lambda_polynomial(n, mid) < Dd::ZERO {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) * Dd::from(0.5))
}

/// Orbit `p_0 = 1, p_1 = 0, ..., p_(n+1) = 1 - 1/lambda` of the tent map.
pub fn tent_orbit(n: usize, lambda: Dd) -> Vec<Dd> {
    let one = Dd::ONE;
    let mut p = vec![one, Dd::ZERO];
    for i in 2..=n {
        p.push((Dd::from(2.0) - lambda) * (powu(lambda, i - 1) - one) / (lambda - one));
    }
    p.push(one - one / lambda);
    p
}

#[derive(Clone, Debug, PartialEq)]
pub struct NbtParameters {
    pub n: usize,
    pub lambda: Dd,
    pub orbit: Vec<Dd>,
    /// `h = lambda^(n+1) / (lambda^(n+1) + 1)`, the height of `V_0`.
    pub v0_height: Dd,
    pub alpha: Dd,
    pub beta: Dd,
    /// Horizontal coordinate of the periodic point `q_0`.
    pub q0x: Dd,
}

pub fn nbt_parameters(n: usize) -> Result<NbtParameters, HorseshoeError> {
    let lambda = lambda_n(n)?;
    let one = Dd::ONE;
    let ln1 = powu(lambda, n + 1);
    Ok(NbtParameters {
        n,
        lambda,
        orbit: tent_orbit(n, lambda),
        v0_height: ln1 / (ln1 + one),
        alpha: (lambda - one) / (powu(lambda, n) - one),
        beta: (lambda - one) / (ln1 * lambda - one),
        q0x: one - (Dd::from(2.0) - lambda) / (lambda * (lambda + one)),
    })
}

impl NbtParameters {
    pub fn residual(&self) -> f64 {
        lambda_polynomial(self.n, self.lambda).to_f64().abs()
    }
    pub fn tent(&self) -> TentMap<Dd> {
        TentMap { lambda: self.lambda }
    }
    /// `|V_i| = h / lambda^i`.
    pub fn vertical_length(&self, i: usize) -> Dd {
        self.v0_height / powu(self.lambda, i)
    }
    /// `|h_i| = alpha lambda^i`.
    pub fn horizontal_edge(&self, i: usize) -> Dd {
        self.alpha * powu(self.lambda, i)
    }
    /// `|v_i| = beta lambda^i`.
    pub fn vertical_edge(&self, i: usize) -> Dd {
        self.beta * powu(self.lambda, i)
    }
}

/// Side labels of `P_n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Side {
    V(usize),
    H(usize),
}

/// Sides in counterclockwise order from `(1, 0)`:
/// `V_0, H_0, V_(n+1), H_(n+1), V_1, H_1, ..., V_n, H_n`.
pub fn side_order(n: usize) -> Vec<Side> {
    let mut s = vec![Side::V(0), Side::H(0), Side::V(n + 1), Side::H(n + 1)];
    for i in 1..=n {
        s.push(Side::V(i));
        s.push(Side::H(i));
    }
    s
}

#[derive(Clone, Debug)]
pub struct NbtPolygonScheme {
    pub params: NbtParameters,
    pub polygon: Polygon<Dd>,
    pub scheme: FoldingScheme<Dd>,
    pub sides: Vec<Side>,
    /// Boundary positions of `q_0, ..., q_(n-1)`.
    pub orbit_points: Vec<BoundaryPos<Dd>>,
}

impl NbtPolygonScheme {
    pub fn side_index(&self, s: Side) -> usize {
        side_index(self.params.n, s)
    }
    pub fn side_start(&self, s: Side) -> Dd {
        self.polygon.starts()[self.side_index(s)]
    }
    pub fn side_length(&self, s: Side) -> Dd {
        self.polygon.side_lengths()[self.side_index(s)]
    }
    /// Planar position of a boundary parameter.
    pub fn point(&self, t: Dd) -> Result<Point<Dd>, HorseshoeError> {
        Ok(self.polygon.point_at(t.rem_euclid_s(self.polygon.boundary_length()))?)
    }
}

fn side_index(n: usize, s: Side) -> usize {
    match s {
        Side::V(0) => 0,
        Side::H(0) => 1,
        Side::V(i) if i == n + 1 => 2,
        Side::H(i) if i == n + 1 => 3,
        Side::V(i) => 4 + 2 * (i - 1),
        Side::H(i) => 5 + 2 * (i - 1),
    }
}

/// Build `P_n` with its `n + 2` vertical folds and `n + 2` horizontal pairings.
pub fn build_pn(n: usize) -> Result<NbtPolygonScheme, HorseshoeError> {
    let params = nbt_parameters(n)?;
    let (one, zero) = (Dd::ONE, Dd::ZERO);
    let h = params.v0_height;
    let p = &params.orbit;
    let pt = |x: Dd, y: Dd| Point::new(x, y);
    let mut verts = vec![pt(one, zero), pt(one, h), pt(p[n + 1], h), pt(p[n + 1], one), pt(zero, one)];
    let mut y = one;
    for i in 1..=n {
        y = y - params.vertical_length(i);
        if i == n {
            witness("vertical sides V_1..V_n span [0,1]", y.to_f64())?;
            y = zero;
        }
        verts.push(pt(p[i], y));
        if i < n {
            verts.push(pt(p[i + 1], y));
        }
    }
    let polygon = polygon_validate(verts)?;
    let sides = side_order(n);
    let st = |s: Side| polygon.starts()[side_index(n, s)];
    let len = |s: Side| polygon.side_lengths()[side_index(n, s)];
    let seg = |t: Dd, l: Dd| BoundarySegment::new(0, t, l);
    let pair = |a: BoundarySegment<Dd>, b: BoundarySegment<Dd>| SegmentPairing::new(a, b);
    let half = Dd::from(0.5);

    let mut pairings = Vec::with_capacity(2 * n + 4);
    for i in 0..=n + 1 {
        let (s, l) = (st(Side::V(i)), len(Side::V(i)) * half);
        pairings.push(pair(seg(s, l), seg(s + l, l)));
    }

    // L, from q_0 to the left end of H_0, is identified with the start of
    // H_1 (up to q_1) followed by H_(n+1).
    let c = one - params.q0x;
    let l_len = params.q0x - p[n + 1];
    let hn1 = len(Side::H(n + 1));
    let d1 = l_len - hn1;
    pairings.push(pair(seg(st(Side::H(0)) + c, d1), seg(st(Side::H(1)), d1)));
    pairings.push(pair(seg(st(Side::H(0)) + c + d1, hn1), seg(st(Side::H(n + 1)), hn1)));
    let mut orbit_points = vec![BoundaryPos::new(0, st(Side::H(0)) + c), BoundaryPos::new(0, st(Side::H(1)) + d1)];

    // Fold the arc between q_i and q_(i+1) about V_(i+1).
    let mut d = d1;
    for i in 1..=n - 2 {
        let a = len(Side::H(i)) - d;
        pairings.push(pair(seg(st(Side::H(i)) + d, a), seg(st(Side::H(i + 1)), a)));
        d = a;
        orbit_points.push(BoundaryPos::new(0, st(Side::H(i + 1)) + d));
    }

    // The arc from q_(n-1) to q_0 folds about V_n: H_n against the end of
    // H_(n-1), then the start of H_0 against the rest.
    let hn = len(Side::H(n));
    let a = len(Side::H(n - 1)) - d;
    witness("arc q_(n-1) to q_0 halves", (a - c - hn).to_f64())?;
    pairings.push(pair(seg(st(Side::H(n - 1)) + d, c), seg(st(Side::H(0)), c)));
    pairings.push(pair(seg(st(Side::H(n - 1)) + d + c, hn), seg(st(Side::H(n)), hn)));

    let out = NbtPolygonScheme {
        scheme: FoldingScheme::new(vec![polygon.clone()], pairings, Vec::new()),
        params,
        polygon,
        sides,
        orbit_points,
    };
    for i in 0..n {
        let a = out.point(out.orbit_points[i].t)?;
        let b = out.point(out.orbit_points[(i + 1) % n].t)?;
        witness("F_n(q_i) = q_(i+1)", fn_defect(&out.params, a, b))?;
    }
    Ok(out)
}

/// `|F_n(a) - b|` in the max norm. Within `1e-12` of the line of
/// discontinuity both one-sided limits are tried: `q_(n-1)` sits at distance
/// `~2^-n` from it, below what `lambda` resolves for large `n`.
fn fn_defect(params: &NbtParameters, a: Point<Dd>, b: Point<Dd>) -> f64 {
    let d = |f: Point<Dd>| {
        let e = f.sub(b);
        e.x.to_f64().abs().max(e.y.to_f64().abs())
    };
    let t = params.tent().turning_point();
    let main = d(fn_map_raw(params, a));
    if (a.x - t).to_f64().abs() > 1e-12 {
        return main;
    }
    let shift = Dd::from(1e-12);
    let other = if a.x <= t { Point::new(t + shift, a.y) } else { Point::new(t - shift, a.y) };
    let o = fn_map_raw(params, other);
    let limit = Point::new(fn_map_raw(params, a).x, o.y);
    main.min(d(limit))
}

/// The family map `F_n` without a domain check.
fn fn_map_raw(params: &NbtParameters, q: Point<Dd>) -> Point<Dd> {
    let l = params.lambda;
    let one = Dd::ONE;
    if q.x <= one - one / l {
        let shift = one / (powu(l, params.n + 1) + one);
        Point::new(l * (q.x - one) + Dd::from(2.0), q.y / l - shift)
    } else {
        Point::new(l * (one - q.x), one - q.y / l)
    }
}

/// `F_n` on `P_n`.
pub fn fn_map(pn: &NbtPolygonScheme, q: Point<Dd>) -> Result<Point<Dd>, HorseshoeError> {
    if !pn.polygon.contains(q) {
        return Err(HorseshoeError::PointOutside);
    }
    Ok(fn_map_raw(&pn.params, q))
}

/// The tight horseshoe map on the unit square.
pub fn f_map<S: Scalar>(q: Point<S>) -> Result<Point<S>, HorseshoeError> {
    let (z, o) = (S::zero(), S::one());
    if q.x < z || q.x > o || q.y < z || q.y > o {
        return Err(HorseshoeError::PointOutside);
    }
    if q.x <= S::half() {
        Ok(Point::new(S::two() * q.x, q.y * S::half()))
    } else {
        Ok(Point::new(S::two() * (o - q.x), o - q.y * S::half()))
    }
}

/// Analytic scar of `P_n`: a tree around the central vertex `q_0`.
#[derive(Clone, Debug)]
pub struct GnModel<S> {
    pub graph: ScarGraph<S>,
    pub center: usize,
    /// Edge paths leaving the center, each ending at a leaf.
    pub arms: Vec<Vec<usize>>,
}

/// `h_i` is `Model(i)`, `v_j` is `Model(n + j)`.
pub fn build_scar_gn<S: Real>(params: &NbtParameters) -> Result<GnModel<S>, HorseshoeError> {
    let n = params.n;
    let l = params.lambda;
    let mut nv = 1usize;
    let mut edges: Vec<(usize, usize, S, EdgeSource<S>)> = Vec::new();
    let mut arms = Vec::new();
    let mut add = |edges: &mut Vec<(usize, usize, S, EdgeSource<S>)>, u: usize, len: Dd, k: usize| {
        let v = nv;
        nv += 1;
        edges.push((u, v, from_dd(len), EdgeSource::Model(k)));
        (v, edges.len() - 1)
    };
    for i in 0..n {
        let hi = params.horizontal_edge(i);
        let split = if i == n - 1 {
            Some((params.alpha / l, n))
        } else if i == n - 2 {
            Some((params.alpha / (l * l), n + 1))
        } else {
            None
        };
        let mut path = Vec::new();
        let end = match split {
            Some((at, j)) => {
                let (mid, e0) = add(&mut edges, 0, at, i);
                let (_, ev) = add(&mut edges, mid, params.vertical_edge(j), n + j);
                arms.push(vec![e0, ev]);
                let (end, e1) = add(&mut edges, mid, hi - at, i);
                path.push(e0);
                path.push(e1);
                end
            }
            None => {
                let (end, e0) = add(&mut edges, 0, hi, i);
                path.push(e0);
                end
            }
        };
        let j = n - 1 - i;
        let (_, ev) = add(&mut edges, end, params.vertical_edge(j), n + j);
        path.push(ev);
        arms.push(path);
    }
    let graph = ScarGraph::from_parts(vec![Vec::new(); nv], edges, Vec::new(), &[]).map_err(|_| HorseshoeError::Scar)?;
    Ok(GnModel { graph, center: 0, arms })
}

impl<S: Real> GnModel<S> {
    /// Points at distance `d` from the center along every arm long enough to hold them.
    pub fn points_at_distance(&self, d: f64) -> Vec<ScarPoint<S>> {
        if d == 0.0 {
            return vec![ScarPoint::Vertex(self.center)];
        }
        let mut out = Vec::new();
        for arm in &self.arms {
            let mut acc = 0.0;
            for &e in arm {
                let len = self.graph.edges[e].length.to_f64();
                if d <= acc + len {
                    let off = d - acc;
                    let edge = &self.graph.edges[e];
                    let p = if off >= len {
                        ScarPoint::Vertex(edge.v)
                    } else {
                        ScarPoint::Edge { edge: e, offset: S::from_f64_r(off) }
                    };
                    if !out.contains(&p) {
                        out.push(p);
                    }
                    break;
                }
                acc += len;
            }
        }
        out
    }
}

/// Whether two finite metric trees agree after suppressing valence-2
/// vertices, with edge lengths compared at resolution `quantum`.
pub fn trees_isometric<S: Scalar>(a: &ScarGraph<S>, b: &ScarGraph<S>, quantum: f64) -> bool {
    match (reduced_tree(a, quantum), reduced_tree(b, quantum)) {
        (Some(x), Some(y)) => x == y,
        _ => false,
    }
}

/// Canonical string of a tree, minimised over roots.
fn reduced_tree<S: Scalar>(g: &ScarGraph<S>, quantum: f64) -> Option<String> {
    if !g.stars.is_empty() {
        return None;
    }
    let nv = g.vertices.len();
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nv];
    for e in &g.edges {
        if e.u == e.v {
            return None;
        }
        adj[e.u].push((e.v, e.length.to_f64()));
        adj[e.v].push((e.u, e.length.to_f64()));
    }
    let branch: Vec<usize> = (0..nv).filter(|&v| adj[v].len() != 2).collect();
    if branch.is_empty() {
        return None;
    }
    let mut idx = BTreeMap::new();
    for (k, &v) in branch.iter().enumerate() {
        idx.insert(v, k);
    }
    let mut radj: Vec<Vec<(usize, i64)>> = vec![Vec::new(); branch.len()];
    let mut count = 0usize;
    for &v in &branch {
        for &(w0, l0) in &adj[v] {
            let (mut prev, mut cur, mut len) = (v, w0, l0);
            while adj[cur].len() == 2 {
                let (nx, l) = if adj[cur][0].0 == prev { adj[cur][1] } else { adj[cur][0] };
                prev = cur;
                cur = nx;
                len += l;
                if cur == v && prev == v {
                    return None;
                }
            }
            radj[idx[&v]].push((idx[&cur], Float::round(len / quantum) as i64));
            count += 1;
        }
    }
    if count / 2 + 1 != branch.len() {
        return None;
    }
    fn canon(adj: &[Vec<(usize, i64)>], v: usize, parent: usize, depth: usize) -> Option<String> {
        if depth > adj.len() {
            return None;
        }
        let mut kids = Vec::new();
        for &(w, l) in &adj[v] {
            if w != parent {
                kids.push(format!("{}{}", l, canon(adj, w, v, depth + 1)?));
            }
        }
        kids.sort();
        Some(format!("({})", kids.concat()))
    }
    (0..branch.len()).filter_map(|r| canon(&radj, r, usize::MAX, 0)).min()
}

/// The unit square with its top and right sides folded in half and
/// geometric tails of ratio 2 on the bottom and left sides.
#[derive(Clone, Debug)]
pub struct TightHorseshoeScheme {
    pub scheme: FoldingScheme<Rational>,
}

pub fn tight_horseshoe_scheme() -> TightHorseshoeScheme {
    let z = rat(0, 1);
    let o = rat(1, 1);
    let square =
        polygon_validate(vec![Point::new(z, z), Point::new(o, z), Point::new(o, o), Point::new(z, o)]).expect("unit square");
    let seg = |s: Rational, l: Rational| BoundarySegment::new(0, s, l);
    let tail = |anchor: Rational, direction: i8| TailFamily {
        kind: TailKind::Geometric { ratio: rat(2, 1), scale: rat(1, 2) },
        anchor: BoundaryPos::new(0, anchor),
        direction,
        arrangement: Arrangement::Contiguous,
    };
    TightHorseshoeScheme {
        scheme: FoldingScheme::new(
            vec![square],
            vec![
                SegmentPairing::new(seg(rat(1, 1), rat(1, 2)), seg(rat(3, 2), rat(1, 2))),
                SegmentPairing::new(seg(rat(2, 1), rat(1, 2)), seg(rat(5, 2), rat(1, 2))),
            ],
            vec![tail(rat(1, 1), -1), tail(rat(3, 1), 1)],
        ),
    }
}

impl TightHorseshoeScheme {
    /// The analytic scar: an infinite-od with two branches of each length `2^-i`.
    pub fn scar_model(&self) -> ScarGraph<Rational> {
        let kind = TailKind::Geometric { ratio: rat(2, 1), scale: rat(1, 2) };
        ScarGraph::from_parts(
            vec![Vec::new(); 3],
            vec![(0, 1, rat(1, 2), EdgeSource::Model(0)), (0, 2, rat(1, 2), EdgeSource::Model(1))],
            vec![TailStar { center: 0, kind, tail: None }, TailStar { center: 0, kind, tail: None }],
            &[],
        )
        .expect("tight horseshoe model")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symbol {
    Zero,
    C,
    One,
}

/// Itinerary of `x = 1` under `T_lambda`; `C` within `1e-10` of the turning point.
pub fn kneading<S: Real>(lambda: S, horizon: usize) -> Result<Vec<Symbol>, HorseshoeError> {
    let t = TentMap::new(lambda)?;
    let c = t.turning_point();
    let eps = S::from_f64_r(1e-10);
    let mut x = S::one();
    let mut out = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        if (x - c).abs() <= eps {
            out.push(Symbol::C);
            // the turning point maps to 1 exactly
            x = S::one();
            continue;
        }
        out.push(if x < c { Symbol::Zero } else { Symbol::One });
        x = t.apply(x);
    }
    Ok(out)
}

/// `(ln 2 / 12) int_t^rbar ds / (s ln(8 / (s - t)))` with `rbar = 1/24`.
pub fn script_i(t: f64) -> Result<Bounded, HorseshoeError> {
    if !(t > 0.0 && t < NBT_RBAR) {
        return Err(HorseshoeError::OutOfRange);
    }
    // u = s - t = e^w
    let ln8 = Float::ln(8f64);
    let f = |w: f64| {
        let u = Float::exp(w);
        u / ((t + u) * (ln8 - w))
    };
    let w_hi = Float::ln(NBT_RBAR - t);
    let w_min = Float::ln(t) - 40.0;
    let tail = Float::exp(-40f64) / (ln8 - w_min);
    let mut value = 0.0;
    let mut error = tail;
    let mut lo = w_min;
    for cut in [Float::ln(t), w_hi] {
        let hi = cut.min(w_hi);
        if hi > lo {
            let q = integrate(f, lo, hi, 1e-13, 4000);
            value += q.value;
            error += q.error;
            lo = hi;
        }
    }
    let k = LN_2 / 12.0;
    Ok(Bounded { value: k * value, error: k * error })
}

/// Constants shared by all `P_n`: `hbar = rbar = 1/24`, `|dP| = 4`.
pub fn nbt_constants() -> PolygonConstants {
    compute_constants(rat(1, 24), rat(4, 1), None)
}

/// The uniform modulus of continuity, in logarithms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UniformRhoBar {
    /// `ln(16 R) - 2 pi M I(2 A t)`.
    pub ln_modulus_branch: f64,
    /// `ln(kappa t)`.
    pub ln_linear_branch: f64,
    pub ln_value: f64,
}

impl UniformRhoBar {
    pub fn value(&self) -> f64 {
        Float::exp(self.ln_value)
    }
}

pub fn uniform_rho_bar(t: f64) -> Result<UniformRhoBar, HorseshoeError> {
    let pc = nbt_constants();
    if !(t > 0.0 && t < pc.delta.to_f64()) {
        return Err(HorseshoeError::OutOfRange);
    }
    let i = script_i(2.0 * pc.a.to_f64() * t)?;
    let ln_modulus_branch = Float::ln(16.0 * pc.r.to_f64()) - 2.0 * PI * pc.m.to_f64() * i.value;
    let ln_linear_branch = pc.ln_kappa + Float::ln(t);
    Ok(UniformRhoBar { ln_modulus_branch, ln_linear_branch, ln_value: ln_modulus_branch.max(ln_linear_branch) })
}

/// Geometric grid of `k >= 2` points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    let (a, b) = (Float::ln(lo), Float::ln(hi));
    (0..k).map(|j| Float::exp(a + (b - a) * j as f64 / (k - 1) as f64)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CenterBoundRow {
    pub r: f64,
    pub m: f64,
    pub m_bound: f64,
    pub count: u64,
    pub count_bound: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegralBoundRow {
    pub d: f64,
    pub t: f64,
    pub integral: f64,
    pub error: f64,
    pub script_i: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GnBoundsReport {
    pub n: usize,
    pub center: Vec<CenterBoundRow>,
    pub integral: Vec<IntegralBoundRow>,
}

/// Check the centre bounds `m(q0; r) <= 8 r log2(8/r)`, `n(q0; r) <= 4 log2(4/r)`
/// on `r_grid`, and `I(q, t) >= I(t) - 1e-9` on `t_grid` for points at
/// distances `0, t/2, t, (t + rbar)/2, rbar, 2 rbar` from `q0` along every arm.
pub fn check_gn_bounds(n: usize, r_grid: &[f64], t_grid: &[f64]) -> Result<GnBoundsReport, HorseshoeError> {
    let params = nbt_parameters(n)?;
    let model: GnModel<Dd> = build_scar_gn(&params)?;
    let g = &model.graph;
    let ev = BallEvaluator::new(g, ScarPoint::Vertex(model.center)).map_err(|_| HorseshoeError::Scar)?;
    let mut center = Vec::with_capacity(r_grid.len());
    for &r in r_grid {
        if !(r > 0.0 && r < 1.0) {
            return Err(HorseshoeError::OutOfRange);
        }
        let rd = Dd::from(r);
        let m = ev.measure(rd).map_err(|_| HorseshoeError::Scar)?.to_f64();
        let count = ev.circle_count(rd).map_err(|_| HorseshoeError::Scar)?;
        let m_bound = 8.0 * r * Float::log2(8.0 / r);
        let count_bound = 4.0 * Float::log2(4.0 / r);
        if m > m_bound + 1e-12 {
            return Err(HorseshoeError::BoundViolated { what: "m(q0;r)", n, at: r, value: m, bound: m_bound });
        }
        if count as f64 > count_bound {
            return Err(HorseshoeError::BoundViolated { what: "n(q0;r)", n, at: r, value: count as f64, bound: count_bound });
        }
        center.push(CenterBoundRow { r, m, m_bound, count, count_bound });
    }
    let rbar = NBT_RBAR;
    let mut integral = Vec::new();
    for &t in t_grid {
        let floor = script_i(t)?;
        for d in [0.0, t / 2.0, t, (t + rbar) / 2.0, rbar, 2.0 * rbar] {
            for q in model.points_at_distance(d) {
                let gp = GoodnessProfile::new(g, q, 1.0, rbar).map_err(|_| HorseshoeError::Scar)?;
                let i = gp.integral(t, rbar).map_err(|_| HorseshoeError::Scar)?;
                if i.value < floor.value - 1e-9 {
                    return Err(HorseshoeError::BoundViolated {
                        what: "I(q,t) >= script I(t)",
                        n,
                        at: t,
                        value: i.value,
                        bound: floor.value,
                    });
                }
                integral.push(IntegralBoundRow { d, t, integral: i.value, error: i.error, script_i: floor.value });
            }
        }
    }
    Ok(GnBoundsReport { n, center, integral })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    /// Sampled `d_H(dP_n, dSigma)`; the true value is within `grid_error`.
    pub hausdorff: f64,
    pub grid_error: f64,
    /// `[eps, 1 - eps]^2` lies in `P_n`.
    pub contains_inner_square: bool,
    /// Hausdorff distance from `V_1` to `{0} x [1/2, 1]`.
    pub v1_distance: f64,
    /// Every sampled tight-horseshoe identification has a `P_n` one within `eps`.
    pub relation_forward: bool,
    /// Every sampled `P_n` identification has a tight-horseshoe one within `eps`.
    pub relation_backward: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub eps: f64,
    pub rows: Vec<ConvergenceRow>,
    /// Least `n` with the inner square contained in `P_m` for every tested `m >= n`.
    pub n0: Option<usize>,
}

fn dist_to_sides(p: Point<f64>, vs: &[Point<f64>]) -> f64 {
    let k = vs.len();
    Float::sqrt((0..k).map(|i| point_segment_dist2(p, vs[i], vs[(i + 1) % k])).fold(f64::INFINITY, f64::min))
}

fn boundary_samples(vs: &[Point<f64>], pitch: f64) -> Vec<Point<f64>> {
    let k = vs.len();
    let mut out = Vec::new();
    for i in 0..k {
        let (a, b) = (vs[i], vs[(i + 1) % k]);
        let len = Float::sqrt(b.sub(a).norm2());
        let m = Float::ceil(len / pitch).max(1.0) as usize;
        for j in 0..m {
            out.push(a.add(b.sub(a).scale(j as f64 / m as f64)));
        }
    }
    out
}

fn contains_square(poly: &Polygon<f64>, eps: f64) -> bool {
    let (lo, hi) = (eps, 1.0 - eps);
    let corners = [Point::new(lo, lo), Point::new(hi, lo), Point::new(hi, hi), Point::new(lo, hi)];
    if !corners.iter().all(|&c| poly.contains(c)) {
        return false;
    }
    let inside = |p: Point<f64>| p.x > lo && p.x < hi && p.y > lo && p.y < hi;
    if poly.vertices().iter().any(|&v| inside(v)) {
        return false;
    }
    let k = poly.len();
    for i in 0..k {
        let (a, b) = (poly.vertex(i), poly.vertex(i + 1));
        for e in 0..4 {
            let (c, d) = (corners[e], corners[(e + 1) % 4]);
            let o = |p: Point<f64>, q: Point<f64>, r: Point<f64>| q.sub(p).cross(r.sub(p));
            if o(a, b, c) * o(a, b, d) < 0.0 && o(c, d, a) * o(c, d, b) < 0.0 {
                return false;
            }
        }
    }
    true
}

/// Sampled identified pairs `(a, b)` of a scheme's pairings, as planar points.
fn relation_samples<S: Scalar>(poly: &Polygon<S>, pairings: &[SegmentPairing<S>], pitch: f64) -> Vec<(Point<f64>, Point<f64>)> {
    let pf = poly.to_f64();
    let l = pf.boundary_length();
    let at = |t: f64| pf.point_at({ let r = t % l; if r < 0.0 { r + l } else { r } }).ok();
    let mut out = Vec::new();
    for p in pairings {
        let len = p.length().to_f64();
        let (sa, sb) = (p.a.start.t.to_f64(), p.b.start.t.to_f64());
        let m = Float::ceil(len / pitch).max(1.0) as usize;
        for j in 0..=m {
            let s = len * j as f64 / m as f64;
            if let (Some(a), Some(b)) = (at(sa + s), at(sb + len - s)) {
                out.push((a, b));
            }
        }
    }
    out
}

fn relation_covered(from: &[(Point<f64>, Point<f64>)], by: &[(Point<f64>, Point<f64>)], eps: f64) -> bool {
    let d = |p: Point<f64>, q: Point<f64>| Float::sqrt(p.sub(q).norm2());
    from.iter().all(|&(a, b)| {
        d(a, b) <= 2.0 * eps
            || by.iter().any(|&(x, y)| (d(a, x) <= eps && d(b, y) <= eps) || (d(a, y) <= eps && d(b, x) <= eps))
    })
}

/// Convergence of `P_n` to the unit square and of the identifications, for `3 <= n <= max_n`.
pub fn convergence_report(max_n: usize, eps: f64) -> Result<ConvergenceReport, HorseshoeError> {
    if max_n < 3 {
        return Err(HorseshoeError::OrderTooSmall { n: max_n });
    }
    if !(eps > 0.0 && eps < 0.5) {
        return Err(HorseshoeError::OutOfRange);
    }
    let pitch = 1e-3;
    let square = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)];
    let square_samples = boundary_samples(&square, pitch);
    let tight = tight_horseshoe_scheme();
    let sq = &tight.scheme.polygons[0];
    let mut tight_pairs = tight.scheme.pairings.clone();
    for tf in &tight.scheme.tails {
        if let Some(ps) = tf.explicit_pairings(sq.boundary_length(), 12) {
            tight_pairs.extend(ps);
        }
    }
    let rel_pitch = eps / 4.0;
    let tight_rel = relation_samples(sq, &tight_pairs, rel_pitch);
    let mut rows = Vec::new();
    for n in 3..=max_n {
        let pn = build_pn(n)?;
        let pf = pn.polygon.to_f64();
        let vs = pf.vertices();
        let fwd = boundary_samples(vs, pitch).into_iter().map(|p| dist_to_sides(p, &square)).fold(0.0, f64::max);
        let back = square_samples.iter().map(|&p| dist_to_sides(p, vs)).fold(0.0, f64::max);
        let v1 = pn.side_length(Side::V(1)).to_f64();
        let pn_rel = relation_samples(&pn.polygon, &pn.scheme.pairings, rel_pitch);
        rows.push(ConvergenceRow {
            n,
            hausdorff: fwd.max(back),
            grid_error: pitch / 2.0,
            contains_inner_square: contains_square(&pf, eps),
            v1_distance: (0.5 - v1).abs().max(0.0),
            relation_forward: relation_covered(&tight_rel, &pn_rel, eps),
            relation_backward: relation_covered(&pn_rel, &tight_rel, eps),
        });
    }
    let mut n0 = None;
    for row in rows.iter().rev() {
        if !row.contains_inner_square {
            break;
        }
        n0 = Some(row.n);
    }
    Ok(ConvergenceReport { eps, rows, n0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collar::check_collar_height;
    use crate::scar::build_scar_graph;
    use crate::scheme::{classify_topology, scheme_validate, Classification};

    #[test]
    fn lambda_three_and_monotone() {
        let l3 = lambda_n(3).unwrap().to_f64();
        assert!((l3 - 1.7221).abs() < 5e-4, "{l3}");
        let mut prev = Dd::ZERO;
        for n in 3..=64 {
            let l = lambda_n(n).unwrap();
            assert!(lambda_polynomial(n, l).to_f64().abs() < 1e-12);
            assert!(l > prev && l < Dd::from(2.0));
            prev = l;
        }
        assert!(lambda_n(2).is_err());
    }

    #[test]
    fn orbit_is_tent_orbit() {
        for n in [3, 7, 20, 64] {
            let p = nbt_parameters(n).unwrap();
            let t = p.tent();
            assert_eq!(p.orbit[0], Dd::ONE);
            assert_eq!(p.orbit[1], Dd::ZERO);
            for i in 0..=n {
                assert!((t.apply(p.orbit[i]) - p.orbit[i + 1]).to_f64().abs() < 1e-10);
            }
            assert!((t.apply(p.orbit[n + 1]) - Dd::ONE).to_f64().abs() < 1e-10);
        }
    }

    #[test]
    fn vertical_sums() {
        for n in 3..=64 {
            let p = nbt_parameters(n).unwrap();
            let all: f64 = (0..=n + 1).map(|i| p.vertical_length(i).to_f64()).sum();
            let inner: f64 = (1..=n).map(|i| p.vertical_length(i).to_f64()).sum();
            assert!((all - 2.0).abs() < 1e-10 && (inner - 1.0).abs() < 1e-10);
            let h: f64 = (0..n).map(|i| p.horizontal_edge(i).to_f64()).sum();
            assert!((h - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn p4_shape_and_q0_identity() {
        let pn = build_pn(4).unwrap();
        assert_eq!(pn.polygon.len(), 12);
        assert_eq!(pn.scheme.pairings.len(), 12);
        assert!((pn.polygon.boundary_length().to_f64() - 4.0).abs() < 1e-20);
        let l = pn.params.q0x - pn.params.orbit[5];
        let q1 = pn.orbit_points[1].t - pn.side_start(Side::H(1));
        let e = l - pn.side_length(Side::H(5)) - q1;
        assert!(e.to_f64().abs() < 1e-10);
        // V_(n+1) midpoint maps to the V_0 midpoint
        let s = pn.side_start(Side::V(5)) + pn.side_length(Side::V(5)) * Dd::from(0.5);
        let m = fn_map(&pn, pn.point(s).unwrap()).unwrap();
        assert!((m.x - Dd::ONE).to_f64().abs() < 1e-10);
        assert!((m.y - pn.params.v0_height * Dd::from(0.5)).to_f64().abs() < 1e-10);
        let img = fn_map(&pn, Point::new(Dd::ONE, Dd::ZERO)).unwrap();
        assert!(img.x.to_f64().abs() < 1e-12 && (img.y.to_f64() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pn_is_plain_sphere_with_model_scar() {
        for n in 3..=12 {
            let pn = build_pn(n).unwrap();
            scheme_validate(&pn.scheme).unwrap();
            let rep = classify_topology(&pn.scheme).unwrap();
            assert_eq!(rep.classification, Classification::PlainSphere, "n = {n}");
            let built = build_scar_graph(&pn.scheme).unwrap();
            let model: GnModel<Dd> = build_scar_gn(&pn.params).unwrap();
            assert!((model.graph.total_measure.to_f64() - 4.0).abs() < 1e-20);
            assert!(trees_isometric(&built, &model.graph, 1e-9), "n = {n}");
        }
    }

    #[test]
    fn isometry_detects_changed_length() {
        let p = nbt_parameters(5).unwrap();
        let a: GnModel<f64> = build_scar_gn(&p).unwrap();
        let mut b = a.graph.clone();
        b.edges[0].length += 1e-3;
        assert!(trees_isometric(&a.graph, &a.graph, 1e-9));
        assert!(!trees_isometric(&a.graph, &b, 1e-9));
    }

    #[test]
    fn uniform_collar_height() {
        for n in [3, 4, 10, 64] {
            let pn = build_pn(n).unwrap();
            assert!(check_collar_height(&pn.polygon, Dd::from(1.0) / Dd::from(24.0)).is_ok(), "n = {n}");
        }
        let pc = nbt_constants();
        assert_eq!((pc.delta, pc.a, pc.m, pc.r), (rat(1, 4608), rat(96, 1), rat(1, 5), rat(192, 1)));
    }

    #[test]
    fn fn_keeps_polygon() {
        let pn = build_pn(5).unwrap();
        let mut hits = 0;
        for i in 0..=40 {
            for j in 0..=40 {
                let p = Point::new(Dd::from(i as f64 / 40.0), Dd::from(j as f64 / 40.0));
                if let Ok(q) = fn_map(&pn, p) {
                    hits += 1;
                    assert!(pn.polygon.contains(q), "{p:?}");
                }
            }
        }
        assert!(hits > 1000);
        assert_eq!(fn_map(&pn, Point::new(Dd::from(0.9), Dd::from(0.999))), Err(HorseshoeError::PointOutside));
    }

    #[test]
    fn tight_map_and_fold() {
        assert_eq!(f_map(Point::new(0.25, 0.5)).unwrap(), Point::new(0.5, 0.25));
        assert_eq!(f_map(Point::new(0.75, 0.5)).unwrap(), Point::new(0.5, 0.75));
        let left = f_map(Point::new(0.5, 0.5)).unwrap();
        let right = f_map(Point::new(0.5 + 1e-12, 0.5)).unwrap();
        assert!((left.x - 1.0).abs() < 1e-9 && (right.x - 1.0).abs() < 1e-9);
        // (1, 1/4) and (1, 3/4) are the two ends of the right-side fold at parameter 1.25 and 1.75
        let t = tight_horseshoe_scheme();
        let p = &t.scheme.pairings[0];
        let s = rat(1, 4);
        assert_eq!(p.a.start.t + s, rat(5, 4));
        assert_eq!(p.b.start.t + p.partner_offset(s), rat(7, 4));
        assert!(f_map(Point::new(1.5, 0.0)).is_err());
    }

    #[test]
    fn tight_scar_matches_model() {
        let t = tight_horseshoe_scheme();
        let built = build_scar_graph(&t.scheme).unwrap();
        let model = t.scar_model();
        assert_eq!(built.total_measure, model.total_measure);
        for g in [&built, &model] {
            let c = g.stars[0].center;
            let ev = BallEvaluator::new(g, ScarPoint::Vertex(c)).unwrap();
            assert_eq!(ev.measure(rat(1, 8)).unwrap(), rat(2, 1));
            assert_eq!(ev.circle_count(rat(1, 8)).unwrap(), 6);
        }
    }

    #[test]
    fn kneading_sequences() {
        for n in [3, 5, 12, 40] {
            let l = lambda_n(n).unwrap();
            let k = kneading(l, 3 * (n + 2)).unwrap();
            for (i, s) in k.iter().enumerate() {
                let j = i % (n + 2);
                let want = if j == 0 || j == n {
                    Symbol::One
                } else if j == n + 1 {
                    Symbol::C
                } else {
                    Symbol::Zero
                };
                assert_eq!(*s, want, "n = {n}, i = {i}");
            }
        }
        let k = kneading(2.0f64, 6).unwrap();
        assert_eq!(k, vec![Symbol::One, Symbol::Zero, Symbol::Zero, Symbol::Zero, Symbol::Zero, Symbol::Zero]);
        assert!(kneading(1.2f64, 3).is_err());
    }

    /// Midpoint sum on a logarithmic grid in `s - t`.
    fn script_i_oracle(t: f64) -> f64 {
        let (lo, hi) = ((t * 1e-14).ln(), (NBT_RBAR - t).ln());
        let k = 400_000;
        let h = (hi - lo) / k as f64;
        let mut acc = 0.0;
        for j in 0..k {
            let w = lo + (j as f64 + 0.5) * h;
            let u = w.exp();
            acc += u / ((t + u) * (8f64.ln() - w)) * h;
        }
        LN_2 / 12.0 * acc
    }

    #[test]
    fn script_i_properties() {
        for t in [1e-8, 1e-5, 1e-3, 0.02] {
            let v = script_i(t).unwrap();
            assert!(v.error < 1e-9);
            assert!((v.value - script_i_oracle(t)).abs() < 1e-8, "{t}");
        }
        let grid = log_grid(1e-10, 0.04, 30);
        for w in grid.windows(2) {
            assert!(script_i(w[0]).unwrap().value > script_i(w[1]).unwrap().value);
        }
        assert!(script_i(1e-8).unwrap().value > script_i(1e-4).unwrap().value + 1e-3);
        assert!(script_i(NBT_RBAR - 1e-12).unwrap().value < 1e-6);
        assert!(script_i(0.0).is_err() && script_i(NBT_RBAR).is_err());
    }

    #[test]
    fn rho_bar_increasing() {
        let delta = 1.0 / 4608.0;
        let vals: Vec<f64> = (1..=20).map(|k| uniform_rho_bar(delta / (1u64 << k) as f64).unwrap().ln_value).collect();
        for w in vals.windows(2) {
            assert!(w[0] > w[1]);
        }
        assert!(uniform_rho_bar(delta).is_err());
    }

    #[test]
    fn gn_center_bounds_n4() {
        let r = 1.0 / 32.0;
        let rep = check_gn_bounds(4, &[r], &[]).unwrap();
        assert!(rep.center[0].m <= 2.0 + 1e-12);
        let rep = check_gn_bounds(40, &[0.01], &[0.01]).unwrap();
        assert!(rep.center[0].count as f64 <= 4.0 * 400f64.log2());
        // the comparison branch for D >= rbar
        for row in rep.integral.iter().filter(|r| r.d >= NBT_RBAR) {
            assert!(row.integral >= (NBT_RBAR * 100.0).ln() / 9.0 - 1e-9 || row.integral >= row.script_i);
        }
    }

    #[test]
    fn convergence_small() {
        let rep = convergence_report(16, 0.05).unwrap();
        assert!(rep.n0.is_some());
        let h8 = rep.rows.iter().find(|r| r.n == 8).unwrap().hausdorff;
        let h16 = rep.rows.iter().find(|r| r.n == 16).unwrap().hausdorff;
        assert!(h16 < h8);
    }
}
