//! The scar: the image of the boundary in the quotient, as a metric graph
//! with analytic fold stars.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_traits::Float;

use crate::geometry::{BoundaryPos, BoundarySegment};
use crate::scalar::Scalar;
use crate::scheme::{scheme_validate, subdivide, Arrangement, FoldingScheme, SchemeError, TailKind, UnionFind};
use crate::special::zeta_tail;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Valence {
    Finite(usize),
    Infinite,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VertexKind {
    Planar,
    RegularVertex,
    Singular,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScarVertex<S> {
    pub preimages: Vec<BoundaryPos<S>>,
    pub valence: Valence,
    pub kind: VertexKind,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EdgeSource<S> {
    /// Piece of a pairing starting at `offset` along its `a` segment.
    Pairing { pairing: usize, offset: S },
    /// Edge of a hand-built model graph.
    Model(usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScarEdge<S> {
    pub u: usize,
    pub v: usize,
    pub length: S,
    pub measure: S,
    pub source: EdgeSource<S>,
}

/// An infinite star of folds hanging from one vertex.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailStar<S> {
    pub center: usize,
    pub kind: TailKind<S>,
    /// Index of the tail in the source scheme, if any.
    pub tail: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Radius<S> {
    Finite(S),
    Infinite,
}

impl<S: Scalar> Radius<S> {
    pub fn exceeded_by(&self, r: S) -> bool {
        match *self {
            Radius::Finite(x) => r > x,
            Radius::Infinite => false,
        }
    }
    pub fn to_f64(&self) -> f64 {
        match *self {
            Radius::Finite(x) => x.to_f64(),
            Radius::Infinite => f64::INFINITY,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ScarGraph<S> {
    pub vertices: Vec<ScarVertex<S>>,
    pub edges: Vec<ScarEdge<S>>,
    pub stars: Vec<TailStar<S>>,
    pub total_measure: S,
    pub injectivity_radius: Radius<S>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScarPoint<S> {
    Vertex(usize),
    Edge { edge: usize, offset: S },
    /// Point on the `fold`-th largest branch of a star, `offset` from the center.
    Branch { star: usize, fold: usize, offset: S },
}

#[derive(Clone, Debug, PartialEq)]
pub enum ScarError<S> {
    Scheme(SchemeError<S>),
    BeyondInjectivityRadius,
    BadPoint,
    Unsupported(&'static str),
    Overflow,
}

impl<S> From<SchemeError<S>> for ScarError<S> {
    fn from(e: SchemeError<S>) -> Self {
        ScarError::Scheme(e)
    }
}

fn pos<S: Scalar>(x: S) -> S {
    if x > S::zero() {
        x
    } else {
        S::zero()
    }
}

impl<S: Scalar> ScarGraph<S> {
    /// Assemble a graph; valences, kinds, measure and injectivity radius are derived.
    /// `singular` lists vertices declared singular.
    pub fn from_parts(
        preimages: Vec<Vec<BoundaryPos<S>>>,
        edges: Vec<(usize, usize, S, EdgeSource<S>)>,
        stars: Vec<TailStar<S>>,
        singular: &[usize],
    ) -> Result<Self, ScarError<S>> {
        let nv = preimages.len();
        let mut deg = vec![0usize; nv];
        let mut es = Vec::with_capacity(edges.len());
        let mut total = S::zero();
        for (u, v, length, source) in edges {
            if u >= nv || v >= nv || !length.is_pos() {
                return Err(ScarError::BadPoint);
            }
            deg[u] += 1;
            deg[v] += 1;
            let measure = length + length;
            total = total.checked_add(measure).ok_or(ScarError::Overflow)?;
            es.push(ScarEdge { u, v, length, measure, source });
        }
        let mut starred = vec![false; nv];
        for s in &stars {
            if s.center >= nv {
                return Err(ScarError::BadPoint);
            }
            starred[s.center] = true;
            let f = s.kind.fold_sum().ok_or(ScarError::Overflow)?;
            total = total.checked_add(f + f).ok_or(ScarError::Overflow)?;
        }
        let vertices = preimages
            .into_iter()
            .enumerate()
            .map(|(i, pre)| {
                let valence = if starred[i] { Valence::Infinite } else { Valence::Finite(deg[i]) };
                let kind = if starred[i] || singular.contains(&i) {
                    VertexKind::Singular
                } else if deg[i] == 2 {
                    VertexKind::Planar
                } else {
                    VertexKind::RegularVertex
                };
                ScarVertex { preimages: pre, valence, kind }
            })
            .collect();
        let mut g = ScarGraph { vertices, edges: es, stars, total_measure: total, injectivity_radius: Radius::Infinite };
        g.injectivity_radius = injectivity_radius(&g);
        Ok(g)
    }

    /// Shortest distances from weighted sources; `skip` removes one edge.
    pub fn dijkstra(&self, sources: &[(usize, S)], skip: Option<usize>) -> Vec<Option<S>> {
        let nv = self.vertices.len();
        let mut adj: Vec<Vec<(usize, S)>> = vec![Vec::new(); nv];
        for (i, e) in self.edges.iter().enumerate() {
            if Some(i) == skip {
                continue;
            }
            adj[e.u].push((e.v, e.length));
            adj[e.v].push((e.u, e.length));
        }
        let mut dist: Vec<Option<S>> = vec![None; nv];
        for &(v, d) in sources {
            if dist[v].is_none_or(|x| d < x) {
                dist[v] = Some(d);
            }
        }
        let mut done = vec![false; nv];
        loop {
            let mut best: Option<(usize, S)> = None;
            for v in 0..nv {
                if let (false, Some(d)) = (done[v], dist[v]) {
                    if best.is_none_or(|(_, b)| d < b) {
                        best = Some((v, d));
                    }
                }
            }
            let Some((v, d)) = best else { break };
            done[v] = true;
            for &(w, l) in &adj[v] {
                let nd = d + l;
                if !done[w] && dist[w].is_none_or(|x| nd < x) {
                    dist[w] = Some(nd);
                }
            }
        }
        dist
    }

    fn branch_length(&self, star: usize, fold: usize) -> Result<S, ScarError<S>> {
        let s = self.stars.get(star).ok_or(ScarError::BadPoint)?;
        s.kind.fold_length(fold).ok_or(ScarError::Unsupported("branch length not representable"))
    }

    /// Vertex sources of a point: `(vertex, distance)`.
    pub fn sources(&self, p: ScarPoint<S>) -> Result<Vec<(usize, S)>, ScarError<S>> {
        match p {
            ScarPoint::Vertex(v) => {
                if v >= self.vertices.len() {
                    return Err(ScarError::BadPoint);
                }
                Ok(vec![(v, S::zero())])
            }
            ScarPoint::Edge { edge, offset } => {
                let e = self.edges.get(edge).ok_or(ScarError::BadPoint)?;
                if offset < S::zero() || offset > e.length {
                    return Err(ScarError::BadPoint);
                }
                Ok(vec![(e.u, offset), (e.v, e.length - offset)])
            }
            ScarPoint::Branch { star, fold, offset } => {
                let a = self.branch_length(star, fold)?;
                if offset < S::zero() || offset > a {
                    return Err(ScarError::BadPoint);
                }
                Ok(vec![(self.stars[star].center, offset)])
            }
        }
    }

    /// Distances from `p` to every vertex.
    pub fn distances_from(&self, p: ScarPoint<S>) -> Result<Vec<Option<S>>, ScarError<S>> {
        Ok(self.dijkstra(&self.sources(p)?, None))
    }
}

/// Shortest-path distance between two scar points.
pub fn scar_distance<S: Scalar>(g: &ScarGraph<S>, p: ScarPoint<S>, q: ScarPoint<S>) -> Result<S, ScarError<S>> {
    let dist = g.distances_from(p)?;
    let mut best: Option<S> = None;
    for (v, c) in g.sources(q)? {
        if let Some(d) = dist[v] {
            let x = d + c;
            if best.is_none_or(|b| x < b) {
                best = Some(x);
            }
        }
    }
    let direct = match (p, q) {
        (ScarPoint::Edge { edge: e1, offset: s }, ScarPoint::Edge { edge: e2, offset: t }) if e1 == e2 => {
            Some((s - t).abs())
        }
        (ScarPoint::Branch { star: a, fold: f, offset: s }, ScarPoint::Branch { star: b, fold: h, offset: t })
            if a == b && f == h =>
        {
            Some((s - t).abs())
        }
        _ => None,
    };
    if let Some(d) = direct {
        if best.is_none_or(|b| d < b) {
            best = Some(d);
        }
    }
    best.ok_or(ScarError::BadPoint)
}

/// Half the length of the shortest cycle; infinite for forests.
pub fn injectivity_radius<S: Scalar>(g: &ScarGraph<S>) -> Radius<S> {
    let mut uf = UnionFind::new(g.vertices.len());
    let mut cyclic = Vec::new();
    for (i, e) in g.edges.iter().enumerate() {
        if uf.find(e.u) == uf.find(e.v) {
            cyclic.push(i);
        }
        uf.union(e.u, e.v);
    }
    if cyclic.is_empty() {
        return Radius::Infinite;
    }
    let mut best: Option<S> = None;
    for (i, e) in g.edges.iter().enumerate() {
        let c = if e.u == e.v {
            Some(e.length)
        } else {
            g.dijkstra(&[(e.u, S::zero())], Some(i))[e.v].map(|d| d + e.length)
        };
        if let Some(c) = c {
            if best.is_none_or(|b| c < b) {
                best = Some(c);
            }
        }
    }
    match best {
        Some(c) => Radius::Finite(c / S::two()),
        None => Radius::Infinite,
    }
}

/// True when the closed ball of radius `r` about `q` contains no cycle.
pub fn is_dendrite_ball<S: Scalar>(g: &ScarGraph<S>, q: ScarPoint<S>, r: S) -> Result<bool, ScarError<S>> {
    let dist = g.distances_from(q)?;
    let nv = g.vertices.len();
    let mut uf = UnionFind::new(nv + 1);
    let inside = |d: Option<S>| d.is_some_and(|d| d <= r);
    let join = |a: usize, b: usize, uf: &mut UnionFind| -> bool {
        if uf.find(a) == uf.find(b) {
            return true;
        }
        uf.union(a, b);
        false
    };
    for (i, e) in g.edges.iter().enumerate() {
        if let ScarPoint::Edge { edge, offset } = q {
            if edge == i {
                // split at the virtual vertex `nv`
                if inside(dist[e.u]) && offset <= r + pos(r - dist[e.u].unwrap_or(r)) && join(nv, e.u, &mut uf) {
                    return Ok(false);
                }
                if inside(dist[e.v]) && e.length - offset <= r + pos(r - dist[e.v].unwrap_or(r)) && join(nv, e.v, &mut uf) {
                    return Ok(false);
                }
                continue;
            }
        }
        let cu = dist[e.u].map_or(S::zero(), |d| pos(r - d));
        let cv = dist[e.v].map_or(S::zero(), |d| pos(r - d));
        if inside(dist[e.u]) && inside(dist[e.v]) && cu + cv >= e.length && join(e.u, e.v, &mut uf) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `(N, R)` for a star at radius `rho > 0`: `N` branches of length `>= rho`,
/// `R` the total length of the shorter ones.
pub fn star_counts<S: Scalar>(kind: &TailKind<S>, rho: S) -> Result<(u64, S), ScarError<S>> {
    if !(rho > S::zero()) {
        return Ok((0, S::zero()));
    }
    match *kind {
        TailKind::Geometric { ratio, .. } => {
            let mut n = 0usize;
            loop {
                let a = kind.fold_length(n).ok_or(ScarError::Overflow)?;
                if a < rho {
                    let r = a.checked_mul(ratio).and_then(|x| x.checked_div(ratio - S::one())).ok_or(ScarError::Overflow)?;
                    return Ok((n as u64, r));
                }
                n += 1;
                if n > 1 << 14 {
                    return Err(ScarError::Overflow);
                }
            }
        }
        TailKind::MiddleThirdsCantor { sum } => {
            let mut k = 0u32;
            let mut len = sum / S::from_i64(3);
            let mut rem = sum;
            let mut count = 0u64;
            while len >= rho {
                count += 1u64 << k;
                rem = rem.checked_mul(S::ratio(2, 3)).ok_or(ScarError::Overflow)?;
                len = len.checked_div(S::from_i64(3)).ok_or(ScarError::Overflow)?;
                k += 1;
                if k > 60 {
                    return Err(ScarError::Overflow);
                }
            }
            Ok((count, rem))
        }
        TailKind::PowerLaw { exponent, .. } => {
            if S::EXACT {
                return Err(ScarError::Unsupported("power-law branch lengths are not exact"));
            }
            let c = kind.fold_length_f64(0);
            let rf = rho.to_f64();
            let mut n = Float::floor(Float::powf(c / rf, 1.0 / exponent)) as u64;
            while n > 0 && c * Float::powf(n as f64, -exponent) < rf {
                n -= 1;
            }
            while c * Float::powf((n + 1) as f64, -exponent) >= rf {
                n += 1;
            }
            let r = c * zeta_tail(exponent, n);
            Ok((n, S::from_f64(r).ok_or(ScarError::Overflow)?))
        }
    }
}

/// Piece of a ball profile on `(lo, hi)`: `m` is affine, `n` constant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfilePiece<S> {
    pub lo: S,
    pub hi: S,
    pub m_lo: S,
    pub m_hi: S,
    pub n: u64,
    /// False when star branches shorter than the profile resolution end
    /// inside the piece, so `m` is only piecewise affine there.
    pub exact: bool,
}

impl<S: Scalar> ProfilePiece<S> {
    /// `(a, b)` with `m(r) = a + b r` on the piece.
    pub fn affine(&self) -> (S, S) {
        let b = (self.m_hi - self.m_lo) / (self.hi - self.lo);
        (self.m_lo - b * self.lo, b)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BallProfile<S> {
    pub center: ScarPoint<S>,
    /// Radii in `(rmin, rmax)` where the affine data may change.
    pub breakpoints: Vec<S>,
    pub pieces: Vec<ProfilePiece<S>>,
}

/// Evaluates `m(q; r)` and `n(q; r)` for one center.
#[derive(Clone, Debug)]
pub struct BallEvaluator<'a, S> {
    g: &'a ScarGraph<S>,
    q: ScarPoint<S>,
    dist: Vec<Option<S>>,
}

impl<'a, S: Scalar> BallEvaluator<'a, S> {
    pub fn new(g: &'a ScarGraph<S>, q: ScarPoint<S>) -> Result<Self, ScarError<S>> {
        let dist = g.distances_from(q)?;
        Ok(BallEvaluator { g, q, dist })
    }

    pub fn vertex_distances(&self) -> &[Option<S>] {
        &self.dist
    }

    fn check(&self, r: S) -> Result<(), ScarError<S>> {
        if self.g.injectivity_radius.exceeded_by(r) {
            return Err(ScarError::BeyondInjectivityRadius);
        }
        Ok(())
    }

    /// Measure of the closed ball.
    pub fn measure(&self, r: S) -> Result<S, ScarError<S>> {
        self.check(r)?;
        let g = self.g;
        let mut half = S::zero();
        for (i, e) in g.edges.iter().enumerate() {
            let cu = self.dist[e.u].map_or(S::zero(), |d| pos(r - d));
            let cv = self.dist[e.v].map_or(S::zero(), |d| pos(r - d));
            let covered = match self.q {
                ScarPoint::Edge { edge, offset } if edge == i => {
                    let ivs = [
                        (S::zero(), cu.min_s(e.length)),
                        (pos(offset - r), (offset + r).min_s(e.length)),
                        (pos(e.length - cv), e.length),
                    ];
                    union_length(&ivs)
                }
                _ => (cu + cv).min_s(e.length),
            };
            half = half + covered;
        }
        for (si, s) in g.stars.iter().enumerate() {
            let dc = match self.dist[s.center] {
                Some(d) => d,
                None => continue,
            };
            let rho = r - dc;
            let (n, rem) = star_counts(&s.kind, rho)?;
            let mut part = if rho > S::zero() { rho * S::from_i64(n as i64) + rem } else { S::zero() };
            if let ScarPoint::Branch { star, fold, offset } = self.q {
                if star == si {
                    let a = g.branch_length(star, fold)?;
                    part = part - pos(rho).min_s(a) + ((offset + r).min_s(a) - pos(offset - r));
                }
            }
            half = half + part;
        }
        Ok(half + half)
    }

    /// Number of points at distance exactly `r`.
    pub fn circle_count(&self, r: S) -> Result<u64, ScarError<S>> {
        self.check(r)?;
        let g = self.g;
        let mut n = 0u64;
        for d in self.dist.iter().flatten() {
            if d.near(r) {
                n += 1;
            }
        }
        for (i, e) in g.edges.iter().enumerate() {
            let (du, dv) = match (self.dist[e.u], self.dist[e.v]) {
                (Some(a), Some(b)) => (a, b),
                _ => continue,
            };
            let l = e.length;
            let interior = |x: S| x.is_pos() && x.lt_tol(l);
            match self.q {
                ScarPoint::Edge { edge, offset } if edge == i => {
                    let dist_at = |x: S| (x - offset).abs().min_s(du + x).min_s(dv + l - x);
                    let mut cands: Vec<S> = Vec::new();
                    for x in [offset - r, offset + r, r - du, l - (r - dv)] {
                        if interior(x) && dist_at(x).near(r) && !cands.iter().any(|c| c.near(x)) {
                            cands.push(x);
                        }
                    }
                    n += cands.len() as u64;
                }
                _ => {
                    let total = du + dv + l;
                    let within = !total.lt_tol(r + r);
                    let fu = interior(r - du) && within;
                    let fv = interior(r - dv) && within;
                    n += fu as u64 + fv as u64;
                    if fu && fv && (r + r).near(total) {
                        n -= 1;
                    }
                }
            }
        }
        for (si, s) in g.stars.iter().enumerate() {
            let dc = match self.dist[s.center] {
                Some(d) => d,
                None => continue,
            };
            let rho = r - dc;
            let (mut k, _) = if rho.is_pos() { star_counts(&s.kind, rho)? } else { (0, S::zero()) };
            if let ScarPoint::Branch { star, fold, offset } = self.q {
                if star == si {
                    let a = g.branch_length(star, fold)?;
                    if rho.is_pos() && !rho.lt_tol(S::zero()) && !a.lt_tol(rho) {
                        k -= 1;
                    }
                    if (offset - r).is_pos() {
                        k += 1;
                    }
                    if !(a).lt_tol(offset + r) {
                        k += 1;
                    }
                }
            }
            n += k;
        }
        Ok(n)
    }

    /// Radii in `(rmin, rmax)` where the profile data can change. Star
    /// branches shorter than `resolution` are not resolved; see
    /// [`BallEvaluator::unresolved`].
    pub fn breakpoints(&self, rmin: S, rmax: S, resolution: S) -> Result<Vec<S>, ScarError<S>> {
        let g = self.g;
        let mut out = Vec::new();
        let mut push = |x: S| {
            if x > rmin && x < rmax {
                out.push(x);
            }
        };
        for d in self.dist.iter().flatten() {
            push(*d);
        }
        for (i, e) in g.edges.iter().enumerate() {
            let (du, dv) = match (self.dist[e.u], self.dist[e.v]) {
                (Some(a), Some(b)) => (a, b),
                _ => continue,
            };
            push(du + e.length);
            push(dv + e.length);
            push((du + dv + e.length) / S::two());
            if let ScarPoint::Edge { edge, offset } = self.q {
                if edge == i {
                    push(offset);
                    push(e.length - offset);
                }
            }
        }
        for (si, s) in g.stars.iter().enumerate() {
            let dc = match self.dist[s.center] {
                Some(d) => d,
                None => continue,
            };
            let lo = (rmin - dc).max_s(resolution);
            push(dc + resolution);
            let mut f = 0usize;
            let mut last: Option<S> = None;
            loop {
                let a = match s.kind.fold_length(f) {
                    Some(a) => a,
                    None if f > 0 && !S::EXACT => break,
                    None => return Err(ScarError::Overflow),
                };
                if a < lo || !a.is_pos() {
                    break;
                }
                if last != Some(a) {
                    push(dc + a);
                    last = Some(a);
                }
                f = match s.kind {
                    TailKind::MiddleThirdsCantor { .. } => 2 * f + 1,
                    _ => f + 1,
                };
                if f > 1 << 22 {
                    return Err(ScarError::Overflow);
                }
            }
            if let ScarPoint::Branch { star, fold, offset } = self.q {
                if star == si {
                    let a = g.branch_length(star, fold)?;
                    push(a - offset);
                    push(offset + a);
                }
            }
        }
        out.sort_by(|a, b| a.cmp_s(b));
        out.dedup_by(|a, b| a.near(*b));
        Ok(out)
    }
}

impl<'a, S: Scalar> BallEvaluator<'a, S> {
    /// Radius intervals `(d_c, d_c + resolution)` where some star has
    /// unresolved branches, clipped to `(rmin, rmax)`.
    pub fn unresolved(&self, rmin: S, rmax: S, resolution: S) -> Vec<(S, S)> {
        let mut out = Vec::new();
        for s in &self.g.stars {
            if let Some(dc) = self.dist[s.center] {
                if rmin - dc < resolution && dc + resolution > rmin && dc < rmax {
                    out.push((dc.max_s(rmin), (dc + resolution).min_s(rmax)));
                }
            }
        }
        out
    }
}

fn union_length<S: Scalar>(ivs: &[(S, S)]) -> S {
    let mut v: Vec<(S, S)> = ivs.iter().copied().filter(|(a, b)| b > a).collect();
    v.sort_by(|a, b| a.0.cmp_s(&b.0));
    let mut total = S::zero();
    let mut cur: Option<(S, S)> = None;
    for (a, b) in v {
        match cur {
            Some((ca, cb)) if a <= cb => cur = Some((ca, cb.max_s(b))),
            Some((ca, cb)) => {
                total = total + (cb - ca);
                cur = Some((a, b));
            }
            None => cur = Some((a, b)),
        }
    }
    if let Some((a, b)) = cur {
        total = total + (b - a);
    }
    total
}

/// Piecewise profile of `r -> (m, n)` on `[rmin, rmax]`, resolving star
/// branches down to length `rmin`.
pub fn ball_profile<S: Scalar>(g: &ScarGraph<S>, q: ScarPoint<S>, rmin: S, rmax: S) -> Result<BallProfile<S>, ScarError<S>> {
    ball_profile_with(g, q, rmin, rmax, rmin)
}

/// Exact piecewise profile of `r -> (m, n)` on `[rmin, rmax]`. Pieces
/// within `resolution` beyond a star center at distance `> rmin` are
/// flagged inexact.
pub fn ball_profile_with<S: Scalar>(
    g: &ScarGraph<S>,
    q: ScarPoint<S>,
    rmin: S,
    rmax: S,
    resolution: S,
) -> Result<BallProfile<S>, ScarError<S>> {
    if g.injectivity_radius.exceeded_by(rmax) {
        return Err(ScarError::BeyondInjectivityRadius);
    }
    if !(rmin > S::zero()) || !(rmax > rmin) {
        return Err(ScarError::BadPoint);
    }
    let ev = BallEvaluator::new(g, q)?;
    let bps = ev.breakpoints(rmin, rmax, resolution)?;
    let holes = ev.unresolved(rmin, rmax, resolution);
    let mut knots = vec![rmin];
    knots.extend(bps.iter().copied());
    knots.push(rmax);
    let mut pieces = Vec::with_capacity(knots.len());
    let mut m_prev = ev.measure(rmin)?;
    for w in knots.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let m_hi = ev.measure(hi)?;
        let n = ev.circle_count((lo + hi) / S::two())?;
        let exact = !holes.iter().any(|&(a, b)| lo < b && hi > a);
        pieces.push(ProfilePiece { lo, hi, m_lo: m_prev, m_hi, n, exact });
        m_prev = m_hi;
    }
    Ok(BallProfile { center: q, breakpoints: bps, pieces })
}

/// Build the scar of a validated scheme.
pub fn build_scar_graph<S: Scalar>(scheme: &FoldingScheme<S>) -> Result<ScarGraph<S>, ScarError<S>> {
    scheme_validate(scheme)?;
    if scheme.tails.iter().any(|t| t.arrangement == Arrangement::CrossedPairs) {
        return Err(ScarError::Unsupported("crossed tails do not produce a finite scar"));
    }
    let sub = subdivide(scheme)?;
    let mut pre = vec![Vec::new(); sub.class_count];
    for (i, n) in sub.nodes.iter().enumerate() {
        pre[sub.node_class[i]].push(*n);
    }
    let edges = sub
        .edges
        .iter()
        .map(|e| (e.u, e.v, e.length, EdgeSource::Pairing { pairing: e.pairing, offset: e.offset }))
        .collect();
    let stars = scheme
        .tails
        .iter()
        .enumerate()
        .map(|(i, t)| TailStar { center: sub.tail_centers[i], kind: t.kind, tail: Some(i) })
        .collect();
    let mut singular = Vec::new();
    for s in &scheme.singular {
        let l = scheme.component_length(s.component);
        let hit = sub.nodes.iter().position(|n| {
            n.component == s.component && (crate::geometry::cyclic_distance(n.t, s.t, l)).near(S::zero())
        });
        match hit {
            Some(i) => singular.push(sub.node_class[i]),
            None => return Err(ScarError::BadPoint),
        }
    }
    ScarGraph::from_parts(pre, edges, stars, &singular)
}

/// Project a boundary point of `scheme` to the scar built from it.
pub fn project<S: Scalar>(g: &ScarGraph<S>, scheme: &FoldingScheme<S>, p: BoundaryPos<S>) -> Result<ScarPoint<S>, ScarError<S>> {
    let l = scheme.component_length(p.component);
    let off = |start: S| (p.t - start).rem_euclid_s(l);
    for (vi, v) in g.vertices.iter().enumerate() {
        if v.preimages.iter().any(|x| x.component == p.component && crate::geometry::cyclic_distance(x.t, p.t, l).near(S::zero())) {
            return Ok(ScarPoint::Vertex(vi));
        }
    }
    for (pi, pr) in scheme.pairings.iter().enumerate() {
        let s = if pr.a.component() == p.component && off(pr.a.start.t) < pr.a.length {
            Some(off(pr.a.start.t))
        } else if pr.b.component() == p.component && off(pr.b.start.t) < pr.b.length {
            Some(pr.b.length - off(pr.b.start.t))
        } else {
            None
        };
        let Some(s) = s else { continue };
        for (ei, e) in g.edges.iter().enumerate() {
            if let EdgeSource::Pairing { pairing, offset } = e.source {
                if pairing == pi && s >= offset && s <= offset + e.length {
                    return Ok(ScarPoint::Edge { edge: ei, offset: s - offset });
                }
            }
        }
    }
    for (si, st) in g.stars.iter().enumerate() {
        let Some(ti) = st.tail else { continue };
        let t = &scheme.tails[ti];
        if t.anchor.component != p.component {
            continue;
        }
        let (start, len) = t.interval(l).ok_or(ScarError::Overflow)?;
        let x = off(start);
        if x > len {
            continue;
        }
        let mut count = 64;
        loop {
            let blocks = t.blocks(count).ok_or(ScarError::Overflow)?;
            for (f, b) in blocks.iter().enumerate() {
                let y = x - b.offset;
                if y >= S::zero() && y <= b.length + b.length {
                    let o = if y <= b.length { y } else { b.length + b.length - y };
                    return Ok(ScarPoint::Branch { star: si, fold: f, offset: o });
                }
            }
            let smallest = blocks.last().map(|b| b.length).unwrap_or(S::zero());
            if !smallest.is_pos() || count >= 4096 || (!S::EXACT && smallest.to_f64() < 1e-14) {
                return Ok(ScarPoint::Vertex(st.center));
            }
            count *= 4;
        }
    }
    Err(ScarError::BadPoint)
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem(f64, usize);
impl Eq for HeapItem {}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for HeapItem {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
    }
}

/// `x` reduced into `[0, m)`.
fn wrap(x: f64, m: f64) -> f64 {
    let r = x % m;
    if r < 0.0 {
        r + m
    } else {
        r
    }
}

/// Quotient distance by relation chains: walk along the boundary at cost,
/// jump between identified points for free. Computed in `f64` on the
/// breakpoints, the images of `x` and `y`, and an `eps` grid on every
/// segment. Tails are truncated at folds shorter than `eps`.
pub fn chain_distance_bruteforce<S: Scalar>(
    scheme: &FoldingScheme<S>,
    x: BoundaryPos<S>,
    y: BoundaryPos<S>,
    eps: f64,
) -> Result<f64, ScarError<S>> {
    let nc = scheme.polygons.len();
    let lens: Vec<f64> = scheme.polygons.iter().map(|p| p.boundary_length().to_f64()).collect();
    let mut pairs: Vec<(BoundarySegment<f64>, BoundarySegment<f64>)> = scheme
        .pairings
        .iter()
        .map(|p| (seg64(&p.a), seg64(&p.b)))
        .collect();
    for t in &scheme.tails {
        let l = scheme.component_length(t.anchor.component);
        let mut count = 0;
        while count < 1 << 16 && t.kind.fold_length_f64(count) >= eps {
            count += 1;
        }
        let ex = t.explicit_pairings(l, count.max(1)).ok_or(ScarError::Overflow)?;
        pairs.extend(ex.iter().map(|p| (seg64(&p.a), seg64(&p.b))));
    }
    let mut pts: Vec<Vec<f64>> = vec![Vec::new(); nc];
    pts[x.component].push(x.t.to_f64());
    pts[y.component].push(y.t.to_f64());
    for (c, p) in scheme.polygons.iter().enumerate() {
        pts[c].extend(p.starts().iter().map(|s| s.to_f64()));
    }
    for (a, b) in &pairs {
        for s in [a, b] {
            pts[s.component()].push(s.start.t);
            pts[s.component()].push(s.start.t + s.length);
            let k = Float::ceil(s.length / eps) as usize;
            for j in 1..k {
                pts[s.component()].push(s.start.t + s.length * j as f64 / k as f64);
            }
        }
    }
    let snapshot = pts.clone();
    for (a, b) in &pairs {
        for (from, to) in [(a, b), (b, a)] {
            let lf = lens[from.component()];
            for &t in &snapshot[from.component()] {
                let s = wrap(t - from.start.t, lf);
                if s > 0.0 && s < from.length {
                    pts[to.component()].push(to.start.t + to.length - s);
                }
            }
        }
    }
    let mut base = Vec::new();
    let mut all: Vec<Vec<f64>> = Vec::new();
    let mut total = 0;
    for (c, v) in pts.iter_mut().enumerate() {
        for t in v.iter_mut() {
            *t = wrap(*t, lens[c]);
        }
        v.sort_by(|a, b| a.total_cmp(b));
        v.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        base.push(total);
        total += v.len();
        all.push(v.clone());
    }
    let find = |c: usize, t: f64| -> usize {
        let t = wrap(t, lens[c]);
        let v = &all[c];
        let i = v.partition_point(|p| *p < t);
        let mut best = 0;
        let mut bd = f64::INFINITY;
        for j in [i, i.wrapping_sub(1), 0, v.len() - 1] {
            if let Some(p) = v.get(j) {
                let d = (p - t).abs().min(lens[c] - (p - t).abs());
                if d < bd {
                    bd = d;
                    best = j;
                }
            }
        }
        base[c] + best
    };
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); total];
    for c in 0..nc {
        let v = &all[c];
        for j in 0..v.len() {
            let k = (j + 1) % v.len();
            let w = wrap(v[k] - v[j], lens[c]);
            adj[base[c] + j].push((base[c] + k, w));
            adj[base[c] + k].push((base[c] + j, w));
        }
    }
    for (a, b) in &pairs {
        let la = lens[a.component()];
        for (j, &t) in all[a.component()].iter().enumerate() {
            let s = wrap(t - a.start.t, la);
            if s <= a.length + 1e-12 || (la - s) < 1e-12 {
                let s = if la - s < 1e-12 { 0.0 } else { s };
                let k = find(b.component(), b.start.t + b.length - s);
                adj[base[a.component()] + j].push((k, 0.0));
                adj[k].push((base[a.component()] + j, 0.0));
            }
        }
    }
    let src = find(x.component, x.t.to_f64());
    let dst = find(y.component, y.t.to_f64());
    let mut dist = vec![f64::INFINITY; total];
    dist[src] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(HeapItem(0.0, src));
    while let Some(HeapItem(d, v)) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        if v == dst {
            return Ok(d);
        }
        for &(w, c) in &adj[v] {
            let nd = d + c;
            if nd < dist[w] {
                dist[w] = nd;
                heap.push(HeapItem(nd, w));
            }
        }
    }
    Ok(dist[dst])
}

fn seg64<S: Scalar>(s: &BoundarySegment<S>) -> BoundarySegment<f64> {
    BoundarySegment::new(s.component(), s.start.t.to_f64(), s.length.to_f64())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{polygon_validate, Point, Polygon};
    use crate::scalar::{rat, Rational};
    use crate::scheme::{SegmentPairing, TailFamily};

    fn square() -> Polygon<Rational> {
        polygon_validate(vec![
            Point::new(rat(0, 1), rat(0, 1)),
            Point::new(rat(1, 1), rat(0, 1)),
            Point::new(rat(1, 1), rat(1, 1)),
            Point::new(rat(0, 1), rat(1, 1)),
        ])
        .unwrap()
    }
    fn seg(s: Rational, l: Rational) -> BoundarySegment<Rational> {
        BoundarySegment::new(0, s, l)
    }
    fn geometric_tail(anchor: Rational, direction: i8) -> TailFamily<Rational> {
        TailFamily {
            kind: TailKind::Geometric { ratio: rat(2, 1), scale: rat(1, 2) },
            anchor: BoundaryPos::new(0, anchor),
            direction,
            arrangement: Arrangement::Contiguous,
        }
    }
    fn tailed_square() -> FoldingScheme<Rational> {
        FoldingScheme::new(
            vec![square()],
            vec![
                SegmentPairing::new(seg(rat(1, 1), rat(1, 1)), seg(rat(3, 1), rat(1, 1))),
                SegmentPairing::new(seg(rat(2, 1), rat(1, 2)), seg(rat(5, 2), rat(1, 2))),
            ],
            vec![geometric_tail(rat(1, 1), -1)],
        )
    }
    fn tight() -> FoldingScheme<Rational> {
        FoldingScheme::new(
            vec![square()],
            vec![
                SegmentPairing::new(seg(rat(1, 1), rat(1, 2)), seg(rat(3, 2), rat(1, 2))),
                SegmentPairing::new(seg(rat(2, 1), rat(1, 2)), seg(rat(5, 2), rat(1, 2))),
            ],
            vec![geometric_tail(rat(1, 1), -1), geometric_tail(rat(3, 1), 1)],
        )
    }
    fn center(g: &ScarGraph<Rational>) -> usize {
        g.stars[0].center
    }

    #[test]
    fn tailed_square_scar_shape() {
        let g = build_scar_graph(&tailed_square()).unwrap();
        assert_eq!(g.total_measure, rat(4, 1));
        assert_eq!(g.injectivity_radius, Radius::Infinite);
        let mut lens: Vec<Rational> = g.edges.iter().map(|e| e.length).collect();
        lens.sort();
        assert_eq!(lens, vec![rat(1, 2), rat(1, 1)]);
        assert_eq!(g.vertices[center(&g)].kind, VertexKind::Singular);
        assert_eq!(g.vertices.iter().filter(|v| v.kind == VertexKind::Planar).count(), 1);
    }

    #[test]
    fn folded_square_is_four_star() {
        let s = FoldingScheme::new(
            vec![square()],
            (0..4)
                .map(|i| SegmentPairing::new(seg(rat(i, 1), rat(1, 2)), seg(rat(2 * i + 1, 2), rat(1, 2))))
                .collect(),
            vec![],
        );
        let g = build_scar_graph(&s).unwrap();
        assert_eq!(g.edges.len(), 4);
        assert_eq!(g.total_measure, rat(4, 1));
        assert!(g.edges.iter().all(|e| e.length == rat(1, 2)));
        let hub = g.vertices.iter().position(|v| v.valence == Valence::Finite(4)).unwrap();
        assert_eq!(g.vertices[hub].kind, VertexKind::RegularVertex);
        let ev = BallEvaluator::new(&g, ScarPoint::Vertex(hub)).unwrap();
        assert_eq!(ev.measure(rat(1, 10)).unwrap(), rat(8, 10));
        assert_eq!(ev.circle_count(rat(1, 10)).unwrap(), 4);
    }

    #[test]
    fn tight_horseshoe_center_profile() {
        let g = build_scar_graph(&tight()).unwrap();
        let c = center(&g);
        assert!(g.stars.iter().all(|s| s.center == c));
        let ev = BallEvaluator::new(&g, ScarPoint::Vertex(c)).unwrap();
        assert_eq!(ev.measure(rat(1, 8)).unwrap(), rat(2, 1));
        assert_eq!(ev.circle_count(rat(1, 8)).unwrap(), 6);
        assert_eq!(ev.circle_count(rat(1, 7)).unwrap(), 4);
        assert_eq!(ev.measure(rat(1, 2)).unwrap(), rat(4, 1));
    }

    #[test]
    fn branch_tips_are_one_apart() {
        let g = build_scar_graph(&tight()).unwrap();
        let tip = |e: usize| {
            let ed = g.edges[e];
            let c = center(&g);
            ScarPoint::Edge { edge: e, offset: if ed.u == c { ed.length } else { rat(0, 1) } }
        };
        assert_eq!(scar_distance(&g, tip(0), tip(1)).unwrap(), rat(1, 1));
        let b = ScarPoint::Branch { star: 0, fold: 0, offset: rat(1, 8) };
        let b2 = ScarPoint::Branch { star: 1, fold: 2, offset: rat(1, 16) };
        assert_eq!(scar_distance(&g, b, b2).unwrap(), rat(3, 16));
        let b3 = ScarPoint::Branch { star: 0, fold: 0, offset: rat(1, 16) };
        assert_eq!(scar_distance(&g, b, b3).unwrap(), rat(1, 16));
    }

    #[test]
    fn planar_point_small_ball() {
        let g = build_scar_graph(&tailed_square()).unwrap();
        let e = g.edges.iter().position(|e| e.length == rat(1, 1)).unwrap();
        let q = ScarPoint::Edge { edge: e, offset: rat(1, 2) };
        let ev = BallEvaluator::new(&g, q).unwrap();
        assert_eq!(ev.measure(rat(1, 10)).unwrap(), rat(4, 10));
        assert_eq!(ev.circle_count(rat(1, 10)).unwrap(), 2);
    }

    #[test]
    fn torus_scar_is_wedge() {
        let s = FoldingScheme::new(
            vec![square()],
            vec![
                SegmentPairing::new(seg(rat(0, 1), rat(1, 1)), seg(rat(2, 1), rat(1, 1))),
                SegmentPairing::new(seg(rat(1, 1), rat(1, 1)), seg(rat(3, 1), rat(1, 1))),
            ],
            vec![],
        );
        let g = build_scar_graph(&s).unwrap();
        assert_eq!(g.injectivity_radius, Radius::Finite(rat(1, 2)));
        let q = ScarPoint::Vertex(0);
        assert!(is_dendrite_ball(&g, q, rat(1, 4)).unwrap());
        assert!(!is_dendrite_ball(&g, q, rat(1, 2)).unwrap());
        assert_eq!(
            ball_profile(&g, q, rat(1, 10), rat(3, 4)),
            Err(ScarError::BeyondInjectivityRadius)
        );
    }

    #[test]
    fn triangle_cycle_radius() {
        let pre = vec![Vec::new(); 3];
        let e = |u, v| (u, v, rat(1, 1), EdgeSource::Model(0));
        let g = ScarGraph::from_parts(pre, vec![e(0, 1), e(1, 2), e(2, 0)], vec![], &[]).unwrap();
        assert_eq!(g.injectivity_radius, Radius::Finite(rat(3, 2)));
    }

    #[test]
    fn profile_pieces_match_evaluator() {
        let g = build_scar_graph(&tight()).unwrap();
        let q = ScarPoint::Vertex(center(&g));
        let p = ball_profile(&g, q, rat(1, 64), rat(1, 2)).unwrap();
        let ev = BallEvaluator::new(&g, q).unwrap();
        for pc in &p.pieces {
            let mid = (pc.lo + pc.hi) / rat(2, 1);
            let (a, b) = pc.affine();
            assert_eq!(a + b * mid, ev.measure(mid).unwrap());
        }
        assert_eq!(p.breakpoints, vec![rat(1, 32), rat(1, 16), rat(1, 8), rat(1, 4)]);
    }

    #[test]
    fn plain_endpoints_have_zero_chain_distance() {
        let s = tailed_square();
        let d = chain_distance_bruteforce(&s, BoundaryPos::new(0, rat(2, 1)), BoundaryPos::new(0, rat(3, 1)), 1e-3).unwrap();
        assert!(d.abs() < 1e-12);
        let d = chain_distance_bruteforce(&s, BoundaryPos::new(0, rat(5, 4)), BoundaryPos::new(0, rat(15, 4)), 1e-3).unwrap();
        assert!(d.abs() < 1e-12);
    }

    #[test]
    fn chain_distance_matches_scar() {
        let s = tailed_square();
        let g = build_scar_graph(&s).unwrap();
        let pts = [rat(1, 3), rat(5, 4), rat(9, 4), rat(11, 4), rat(7, 2)];
        for &a in &pts {
            for &b in &pts {
                let x = BoundaryPos::new(0, a);
                let y = BoundaryPos::new(0, b);
                let d1 = scar_distance(&g, project(&g, &s, x).unwrap(), project(&g, &s, y).unwrap()).unwrap();
                let d2 = chain_distance_bruteforce(&s, x, y, 1e-3).unwrap();
                assert!((d1.to_f64() - d2).abs() < 2e-3, "{a} {b} {d1} {d2}");
            }
        }
    }
}
