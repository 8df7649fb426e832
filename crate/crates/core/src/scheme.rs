//! Folding schemes: polygons, segment pairings and infinite fold tails.
//!
//! Boundary positions are arc-length parameters on one polygon. A pairing
//! identifies `a.start + s` with `b.start + length - s`, so it reverses
//! orientation by construction.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use crate::geometry::{BoundaryPos, BoundarySegment, GeometryError, Polygon};
use crate::scalar::Scalar;
use crate::special::{zeta, zeta_tail};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TailKind<S> {
    /// `a_n = scale / ratio^n` for `n >= 1`.
    Geometric { ratio: S, scale: S },
    /// `a_n = c n^-exponent` with `c` fixed by the fold sum.
    PowerLaw { exponent: f64, sum: S },
    /// `2^k` folds of length `sum / 3^(k+1)` for each `k >= 0`.
    MiddleThirdsCantor { sum: S },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Arrangement {
    /// Folds abut in decreasing order, largest at the anchor.
    Contiguous,
    /// Folds nested as the gaps of a Cantor construction.
    DisjointCantorStyle,
    /// Blocks `A B A' B'` with `A~A'`, `B~B'`: every block is a handle.
    CrossedPairs,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailFamily<S> {
    pub kind: TailKind<S>,
    pub anchor: BoundaryPos<S>,
    /// `+1`: the tail runs forward from the anchor, `-1`: backward.
    pub direction: i8,
    pub arrangement: Arrangement,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentPairing<S> {
    pub a: BoundarySegment<S>,
    pub b: BoundarySegment<S>,
}

#[derive(Clone, Debug)]
pub struct FoldingScheme<S> {
    pub polygons: Vec<Polygon<S>>,
    pub pairings: Vec<SegmentPairing<S>>,
    pub tails: Vec<TailFamily<S>>,
    /// Points declared to be non-isolated singularities.
    pub singular: Vec<BoundaryPos<S>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Item {
    PairingA(usize),
    PairingB(usize),
    Tail(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub enum SchemeError<S> {
    Geometry(GeometryError),
    NoPolygons,
    BadComponent { item: Item },
    BadSegment { item: Item },
    LengthMismatch { pairing: usize },
    BadTail { tail: usize, reason: &'static str },
    OverlappingInteriors { first: Item, second: Item },
    NotFull { deficit: S },
    NonTilingGaps { component: usize, at: S },
    DisconnectedUnion { components: Vec<Vec<usize>> },
    Unsupported(&'static str),
    Overflow,
}

impl<S> From<GeometryError> for SchemeError<S> {
    fn from(e: GeometryError) -> Self {
        SchemeError::Geometry(e)
    }
}

fn cyc<S: Scalar>(t: S, l: S) -> S {
    t.rem_euclid_s(l)
}

/// Offset of `t` past `start`, in `[0, l)`.
fn cyc_off<S: Scalar>(t: S, start: S, l: S) -> S {
    cyc(t - start, l)
}

fn pow_checked<S: Scalar>(x: S, n: u32) -> Option<S> {
    let mut acc = S::one();
    for _ in 0..n {
        acc = acc.checked_mul(x)?;
    }
    Some(acc)
}

fn floor_log2(m: usize) -> u32 {
    usize::BITS - 1 - m.leading_zeros()
}

impl<S: Scalar> TailKind<S> {
    pub fn validate(&self) -> Result<(), &'static str> {
        match *self {
            TailKind::Geometric { ratio, scale } => {
                if !(ratio > S::one()) {
                    return Err("ratio must exceed 1");
                }
                if !(scale > S::zero()) {
                    return Err("scale must be positive");
                }
            }
            TailKind::PowerLaw { exponent, sum } => {
                if !(exponent > 1.0) || !exponent.is_finite() {
                    return Err("exponent must exceed 1");
                }
                if !(sum > S::zero()) {
                    return Err("sum must be positive");
                }
            }
            TailKind::MiddleThirdsCantor { sum } => {
                if !(sum > S::zero()) {
                    return Err("sum must be positive");
                }
            }
        }
        Ok(())
    }

    /// Total length of all folds, `sum a_n`.
    pub fn fold_sum(&self) -> Option<S> {
        match *self {
            TailKind::Geometric { ratio, scale } => scale.checked_div(ratio - S::one()),
            TailKind::PowerLaw { sum, .. } | TailKind::MiddleThirdsCantor { sum } => Some(sum),
        }
    }

    fn power_law_c(&self) -> f64 {
        match *self {
            TailKind::PowerLaw { exponent, sum } => sum.to_f64() / zeta(exponent),
            _ => 0.0,
        }
    }

    /// Length of the `f`-th largest fold (0-based).
    pub fn fold_length(&self, f: usize) -> Option<S> {
        match *self {
            TailKind::Geometric { ratio, scale } => {
                scale.checked_div(pow_checked(ratio, u32::try_from(f + 1).ok()?)?)
            }
            TailKind::PowerLaw { .. } => {
                if S::EXACT {
                    None
                } else {
                    S::from_f64(self.fold_length_f64(f))
                }
            }
            TailKind::MiddleThirdsCantor { sum } => {
                let k = floor_log2(f + 1);
                sum.checked_div(pow_checked(S::from_i64(3), k + 1)?)
            }
        }
    }

    pub fn fold_length_f64(&self, f: usize) -> f64 {
        match *self {
            TailKind::Geometric { ratio, scale } => {
                scale.to_f64() * Float::powi(ratio.to_f64(), -((f + 1) as i32))
            }
            TailKind::PowerLaw { exponent, .. } => self.power_law_c() * Float::powf((f + 1) as f64, -exponent),
            TailKind::MiddleThirdsCantor { sum } => {
                sum.to_f64() * Float::powi(3.0, -(floor_log2(f + 1) as i32 + 1))
            }
        }
    }

    /// Sum of fold lengths at indices `lo..=hi` (0-based), in `f64`.
    fn range_sum_f64(&self, lo: usize, hi: usize) -> f64 {
        match *self {
            TailKind::Geometric { ratio, scale } => {
                let l = ratio.to_f64();
                let c = scale.to_f64();
                let a = Float::powi(l, -((lo + 1) as i32));
                let b = Float::powf(l, -((hi - lo + 1) as f64));
                c * a * (1.0 - b) / (1.0 - 1.0 / l)
            }
            TailKind::PowerLaw { exponent, .. } => {
                self.power_law_c() * (zeta_tail(exponent, lo as u64) - zeta_tail(exponent, hi as u64 + 1))
            }
            TailKind::MiddleThirdsCantor { .. } => (lo..=hi).map(|f| self.fold_length_f64(f)).sum(),
        }
    }

    /// Sum over the heap subtree rooted at node `m >= 1` (node `m` holds fold `m-1`).
    pub fn subtree_sum_f64(&self, m: usize) -> f64 {
        if let TailKind::MiddleThirdsCantor { sum } = *self {
            return sum.to_f64() * Float::powi(3.0, -(floor_log2(m) as i32));
        }
        let mut total = 0.0;
        let mut lo = m;
        let mut width = 1usize;
        for _ in 0..60 {
            let block = self.range_sum_f64(lo - 1, lo + width - 2);
            total += block;
            if block < 1e-19 * total || lo > usize::MAX / 4 {
                break;
            }
            lo *= 2;
            width *= 2;
        }
        total
    }

    fn subtree_sum(&self, m: usize) -> Option<S> {
        match *self {
            TailKind::MiddleThirdsCantor { sum } => sum.checked_div(pow_checked(S::from_i64(3), floor_log2(m))?),
            _ => S::from_f64(self.subtree_sum_f64(m)),
        }
    }
}

/// One block of a tail in tail coordinates: the offset from the low end of
/// the tail interval and the fold length `a`. Folds span `2a`, crossed blocks `4a`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailBlock<S> {
    pub offset: S,
    pub length: S,
}

impl<S: Scalar> TailFamily<S> {
    pub fn fold_sum(&self) -> Option<S> {
        self.kind.fold_sum()
    }

    /// Boundary length that the tail's pairings identify in pairs.
    pub fn paired_length(&self) -> Option<S> {
        let s = self.fold_sum()?;
        match self.arrangement {
            Arrangement::CrossedPairs => s.checked_add(s),
            _ => Some(s),
        }
    }

    /// Boundary length covered by the tail.
    pub fn covered(&self) -> Option<S> {
        let p = self.paired_length()?;
        p.checked_add(p)
    }

    /// `(start, length)` of the covered interval on a component of length `l`.
    pub fn interval(&self, l: S) -> Option<(S, S)> {
        let c = self.covered()?;
        let start = if self.direction > 0 { self.anchor.t } else { cyc(self.anchor.t - c, l) };
        Some((start, c))
    }

    fn block_span(&self, a: S) -> S {
        match self.arrangement {
            Arrangement::CrossedPairs => a + a + a + a,
            _ => a + a,
        }
    }

    /// The `count` largest blocks, in tail coordinates.
    pub fn blocks(&self, count: usize) -> Option<Vec<TailBlock<S>>> {
        let covered = self.covered()?;
        let mut out = Vec::with_capacity(count);
        match self.arrangement {
            Arrangement::Contiguous | Arrangement::CrossedPairs => {
                let mut acc = S::zero();
                for f in 0..count {
                    let a = self.kind.fold_length(f)?;
                    out.push(TailBlock { offset: acc, length: a });
                    acc = acc.checked_add(self.block_span(a))?;
                }
            }
            Arrangement::DisjointCantorStyle => {
                for f in 0..count {
                    let m = f + 1;
                    let depth = floor_log2(m);
                    let mut lo = S::zero();
                    let mut x = 1usize;
                    for d in (0..depth).rev() {
                        let bit = (m >> d) & 1;
                        let child = 2 * x + bit;
                        if bit == 1 {
                            let left = self.kind.subtree_sum(2 * x)?;
                            let ax = self.kind.fold_length(x - 1)?;
                            lo = lo + left + left + ax + ax;
                        }
                        x = child;
                    }
                    let left = self.kind.subtree_sum(2 * m)?;
                    out.push(TailBlock { offset: lo + left + left, length: self.kind.fold_length(f)? });
                }
            }
        }
        if self.direction < 0 {
            for b in &mut out {
                b.offset = covered - b.offset - self.block_span(b.length);
            }
        }
        Some(out)
    }

    /// The `count` largest blocks as explicit pairings on a component of length `l`.
    pub fn explicit_pairings(&self, l: S, count: usize) -> Option<Vec<SegmentPairing<S>>> {
        let (start, _) = self.interval(l)?;
        let comp = self.anchor.component;
        let seg = |off: S, a: S| BoundarySegment::new(comp, cyc(start + off, l), a);
        let mut out = Vec::new();
        for b in self.blocks(count)? {
            let a = b.length;
            let o = b.offset;
            match self.arrangement {
                Arrangement::CrossedPairs => {
                    out.push(SegmentPairing { a: seg(o, a), b: seg(o + a + a, a) });
                    out.push(SegmentPairing { a: seg(o + a, a), b: seg(o + a + a + a, a) });
                }
                _ => out.push(SegmentPairing { a: seg(o, a), b: seg(o + a, a) }),
            }
        }
        Some(out)
    }
}

impl<S: Scalar> SegmentPairing<S> {
    pub fn new(a: BoundarySegment<S>, b: BoundarySegment<S>) -> Self {
        SegmentPairing { a, b }
    }
    pub fn length(&self) -> S {
        self.a.length
    }
    /// True when the two segments abut at a folding point.
    pub fn is_fold(&self, l: S) -> bool {
        if self.a.component() != self.b.component() {
            return false;
        }
        let ae = cyc(self.a.start.t + self.a.length, l);
        let be = cyc(self.b.start.t + self.b.length, l);
        cyc_off(ae, self.b.start.t, l).near(S::zero())
            || cyc_off(be, self.a.start.t, l).near(S::zero())
            || cyc_off(self.b.start.t, ae, l).near(S::zero())
    }
    /// Partner of the point at offset `s` along segment `a`, as an offset along `b`.
    pub fn partner_offset(&self, s: S) -> S {
        self.b.length - s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Validated<S> {
    pub total_pairing_length: S,
    pub folds: Vec<bool>,
}

impl<S: Scalar> FoldingScheme<S> {
    pub fn new(polygons: Vec<Polygon<S>>, pairings: Vec<SegmentPairing<S>>, tails: Vec<TailFamily<S>>) -> Self {
        FoldingScheme { polygons, pairings, tails, singular: Vec::new() }
    }

    pub fn component_length(&self, c: usize) -> S {
        self.polygons[c].boundary_length()
    }

    pub fn total_boundary_length(&self) -> S {
        self.polygons.iter().fold(S::zero(), |a, p| a + p.boundary_length())
    }

    /// Linking of two finite pairings; see [`pairs_linked`].
    pub fn linked(&self, i: usize, j: usize) -> bool {
        let p = &self.pairings[i];
        let c = p.a.component();
        if c >= self.polygons.len() {
            return false;
        }
        pairs_linked(p, &self.pairings[j], self.component_length(c))
    }
}

/// Validate lengths, disjointness and fullness.
pub fn scheme_validate<S: Scalar>(scheme: &FoldingScheme<S>) -> Result<Validated<S>, SchemeError<S>> {
    if scheme.polygons.is_empty() {
        return Err(SchemeError::NoPolygons);
    }
    let nc = scheme.polygons.len();
    // (component, start, length, item)
    let mut intervals: Vec<(usize, S, S, Item)> = Vec::new();
    let mut total = S::zero();
    let mut folds = Vec::with_capacity(scheme.pairings.len());
    for (i, p) in scheme.pairings.iter().enumerate() {
        for (seg, item) in [(p.a, Item::PairingA(i)), (p.b, Item::PairingB(i))] {
            let c = seg.component();
            if c >= nc {
                return Err(SchemeError::BadComponent { item });
            }
            let l = scheme.component_length(c);
            if !seg.length.is_pos() || seg.start.t < S::zero() || !(seg.start.t < l) || seg.length > l {
                return Err(SchemeError::BadSegment { item });
            }
            intervals.push((c, seg.start.t, seg.length, item));
        }
        if !p.a.length.near(p.b.length) {
            return Err(SchemeError::LengthMismatch { pairing: i });
        }
        total = total.checked_add(p.a.length).ok_or(SchemeError::Overflow)?;
        folds.push(p.is_fold(scheme.component_length(p.a.component())));
    }
    let mut tail_total = S::zero();
    for (i, t) in scheme.tails.iter().enumerate() {
        let bad = |reason| SchemeError::BadTail { tail: i, reason };
        t.kind.validate().map_err(bad)?;
        if t.direction != 1 && t.direction != -1 {
            return Err(bad("direction must be +1 or -1"));
        }
        let c = t.anchor.component;
        if c >= nc {
            return Err(SchemeError::BadComponent { item: Item::Tail(i) });
        }
        let l = scheme.component_length(c);
        if t.anchor.t < S::zero() || !(t.anchor.t < l) {
            return Err(bad("anchor out of range"));
        }
        let (start, len) = t.interval(l).ok_or(SchemeError::Overflow)?;
        if !(len < l) {
            return Err(bad("tail covers the whole component"));
        }
        for &v in scheme.polygons[c].starts() {
            let off = cyc_off(v, start, l);
            if off.is_pos() && off.lt_tol(len) {
                return Err(bad("polygon vertex inside tail interval"));
            }
        }
        intervals.push((c, start, len, Item::Tail(i)));
        tail_total = tail_total.checked_add(t.paired_length().ok_or(SchemeError::Overflow)?).ok_or(SchemeError::Overflow)?;
    }
    for c in 0..nc {
        let l = scheme.component_length(c);
        let mut iv: Vec<&(usize, S, S, Item)> = intervals.iter().filter(|x| x.0 == c).collect();
        iv.sort_by(|x, y| x.1.cmp_s(&y.1));
        let k = iv.len();
        for j in 0..k {
            let cur = iv[j];
            let next = iv[(j + 1) % k];
            let next_start = if j + 1 == k { next.1 + l } else { next.1 };
            if k == 1 {
                break;
            }
            if (cur.1 + cur.2).lt_tol(next_start) || (cur.1 + cur.2).near(next_start) {
                continue;
            }
            return Err(SchemeError::OverlappingInteriors { first: cur.3, second: next.3 });
        }
    }
    let half = scheme.total_boundary_length() / S::two();
    let deficit = half - total - tail_total;
    if !deficit.near(S::zero()) {
        return Err(SchemeError::NotFull { deficit });
    }
    Ok(Validated { total_pairing_length: total, folds })
}

/// Two pairings on one circle of length `l` are linked when their segment
/// midpoints interleave in the cyclic order.
pub fn pairs_linked<S: Scalar>(p: &SegmentPairing<S>, q: &SegmentPairing<S>, l: S) -> bool {
    let c = p.a.component();
    if p == q || p.b.component() != c || q.a.component() != c || q.b.component() != c {
        return false;
    }
    let mid = |s: &BoundarySegment<S>| cyc(s.start.t + s.length / S::two(), l);
    let (x1, y1) = (mid(&p.a), mid(&p.b));
    let span = cyc_off(y1, x1, l);
    let inside = |z: S| {
        let o = cyc_off(z, x1, l);
        o > S::zero() && o < span
    };
    inside(mid(&q.a)) != inside(mid(&q.b))
}

/// Disjoint-set forest with path halving.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }
    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
    /// Dense labels `0..k` for the classes, in order of first appearance.
    pub fn labels(&mut self) -> (Vec<usize>, usize) {
        let n = self.parent.len();
        let mut map = vec![usize::MAX; n];
        let mut out = Vec::with_capacity(n);
        let mut k = 0;
        for i in 0..n {
            let r = self.find(i);
            if map[r] == usize::MAX {
                map[r] = k;
                k += 1;
            }
            out.push(map[r]);
        }
        (out, k)
    }
}

/// Connected components of the polygon graph whose edges are pairings.
pub fn pairing_components<S: Scalar>(scheme: &FoldingScheme<S>) -> Vec<Vec<usize>> {
    let n = scheme.polygons.len();
    let mut uf = UnionFind::new(n);
    for p in &scheme.pairings {
        uf.union(p.a.component(), p.b.component());
    }
    let (lab, k) = uf.labels();
    let mut out = vec![Vec::new(); k];
    for (i, &c) in lab.iter().enumerate() {
        out[c].push(i);
    }
    out
}

/// Sorted breakpoints on one boundary circle.
#[derive(Clone, Debug)]
struct Breaks<S> {
    length: S,
    pts: Vec<S>,
}

impl<S: Scalar> Breaks<S> {
    fn push(&mut self, t: S) {
        self.pts.push(cyc(t, self.length));
    }
    fn finish(&mut self) {
        self.pts.sort_by(|a, b| a.cmp_s(b));
        let mut out: Vec<S> = Vec::with_capacity(self.pts.len());
        for &p in &self.pts {
            if out.last().is_none_or(|q| !p.near(*q)) {
                out.push(p);
            }
        }
        while out.len() > 1 && (out[out.len() - 1] - self.length).near(S::zero()) {
            out.pop();
        }
        self.pts = out;
    }
    fn find(&self, t: S) -> Option<usize> {
        let t = cyc(t, self.length);
        let i = self.pts.partition_point(|p| *p < t);
        for j in [i, i.wrapping_sub(1), 0, self.pts.len().wrapping_sub(1)] {
            if let Some(p) = self.pts.get(j) {
                if cyc_off(t, *p, self.length).near(S::zero()) || cyc_off(*p, t, self.length).near(S::zero()) {
                    return Some(j);
                }
            }
        }
        None
    }
}

/// An elementary piece of a pairing between consecutive breakpoints.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubEdge<S> {
    pub pairing: usize,
    /// Offset of the piece along the pairing's `a` segment.
    pub offset: S,
    pub length: S,
    /// Class at the start of the piece (on `a`).
    pub u: usize,
    /// Class at the end of the piece (on `a`).
    pub v: usize,
}

/// Breakpoints of a scheme grouped into identification classes.
#[derive(Clone, Debug)]
pub struct Subdivision<S> {
    pub nodes: Vec<BoundaryPos<S>>,
    pub node_class: Vec<usize>,
    pub class_count: usize,
    pub edges: Vec<SubEdge<S>>,
    /// Class of each tail's star center.
    pub tail_centers: Vec<usize>,
}

impl<S: Scalar> Subdivision<S> {
    /// Euler characteristic `V - E + F` of the quotient restricted to a set of polygons.
    pub fn euler_characteristic(&self, scheme: &FoldingScheme<S>, polys: &[usize]) -> i64 {
        let mut seen = vec![false; self.class_count];
        for (i, n) in self.nodes.iter().enumerate() {
            if polys.contains(&n.component) {
                seen[self.node_class[i]] = true;
            }
        }
        let v = seen.iter().filter(|&&b| b).count() as i64;
        let e = self
            .edges
            .iter()
            .filter(|e| polys.contains(&scheme.pairings[e.pairing].a.component()))
            .count() as i64;
        v - e + polys.len() as i64
    }
}

/// Cut every pairing at the images of all breakpoints and merge identified points.
pub fn subdivide<S: Scalar>(scheme: &FoldingScheme<S>) -> Result<Subdivision<S>, SchemeError<S>> {
    if scheme.tails.iter().any(|t| t.arrangement == Arrangement::CrossedPairs) {
        return Err(SchemeError::Unsupported("crossed tails have no finite subdivision"));
    }
    let nc = scheme.polygons.len();
    let mut brk: Vec<Breaks<S>> =
        scheme.polygons.iter().map(|p| Breaks { length: p.boundary_length(), pts: Vec::new() }).collect();
    let mut tail_iv = Vec::new();
    for t in &scheme.tails {
        let c = t.anchor.component;
        let iv = t.interval(scheme.component_length(c)).ok_or(SchemeError::Overflow)?;
        brk[c].push(iv.0);
        brk[c].push(iv.0 + iv.1);
        tail_iv.push((c, iv.0, iv.1));
    }
    for (c, p) in scheme.polygons.iter().enumerate() {
        let l = p.boundary_length();
        for &v in p.starts() {
            let inside_tail = tail_iv.iter().any(|&(tc, s, len)| {
                let o = cyc_off(v, s, l);
                tc == c && o.is_pos() && o.lt_tol(len)
            });
            if !inside_tail {
                brk[c].push(v);
            }
        }
    }
    for p in &scheme.pairings {
        for s in [p.a, p.b] {
            brk[s.component()].push(s.start.t);
            brk[s.component()].push(s.start.t + s.length);
        }
    }
    // one step of partner images closes the set: only polygon vertices can sit inside a segment
    let snapshot: Vec<Vec<S>> = brk.iter().map(|b| b.pts.clone()).collect();
    for p in &scheme.pairings {
        for (from, to) in [(p.a, p.b), (p.b, p.a)] {
            let lf = scheme.component_length(from.component());
            for &t in &snapshot[from.component()] {
                let s = cyc_off(t, from.start.t, lf);
                if s.is_pos() && s.lt_tol(from.length) {
                    brk[to.component()].push(to.start.t + to.length - s);
                }
            }
        }
    }
    for b in &mut brk {
        b.finish();
    }
    let mut base = Vec::with_capacity(nc + 1);
    let mut nodes = Vec::new();
    for (c, b) in brk.iter().enumerate() {
        base.push(nodes.len());
        nodes.extend(b.pts.iter().map(|&t| BoundaryPos::new(c, t)));
    }
    let node = |c: usize, t: S| -> Result<usize, SchemeError<S>> {
        brk[c].find(t).map(|i| base[c] + i).ok_or(SchemeError::NonTilingGaps { component: c, at: t })
    };
    let mut uf = UnionFind::new(nodes.len());
    // (pairing, offset, length, node on a at start, node on a at end)
    let mut raw = Vec::new();
    for (pi, p) in scheme.pairings.iter().enumerate() {
        let ca = p.a.component();
        let la = scheme.component_length(ca);
        let i0 = brk[ca].find(p.a.start.t).ok_or(SchemeError::NonTilingGaps { component: ca, at: p.a.start.t })?;
        let np = brk[ca].pts.len();
        let mut offs = vec![S::zero()];
        let mut j = (i0 + 1) % np;
        loop {
            let s = cyc_off(brk[ca].pts[j], p.a.start.t, la);
            if !s.lt_tol(p.a.length) || j == i0 {
                break;
            }
            offs.push(s);
            j = (j + 1) % np;
        }
        offs.push(p.a.length);
        let mut prev = None;
        for &s in &offs {
            let na = node(ca, p.a.start.t + s)?;
            let nb = node(p.b.component(), p.b.start.t + p.b.length - s)?;
            uf.union(na, nb);
            if let Some((ps, pn)) = prev {
                raw.push((pi, ps, s - ps, pn, na));
            }
            prev = Some((s, na));
        }
    }
    let mut tail_nodes = Vec::new();
    for &(c, s, len) in &tail_iv {
        let a = node(c, s)?;
        let b = node(c, s + len)?;
        uf.union(a, b);
        tail_nodes.push(a);
    }
    // tiling: every gap between consecutive breakpoints is covered
    for c in 0..nc {
        let l = scheme.component_length(c);
        let mut cov: Vec<(S, S)> = Vec::new();
        for p in &scheme.pairings {
            for s in [p.a, p.b] {
                if s.component() == c {
                    cov.push((s.start.t, s.length));
                }
            }
        }
        for &(tc, s, len) in &tail_iv {
            if tc == c {
                cov.push((s, len));
            }
        }
        cov.sort_by(|a, b| a.0.cmp_s(&b.0));
        if cov.is_empty() {
            return Err(SchemeError::NonTilingGaps { component: c, at: S::zero() });
        }
        for j in 0..cov.len() {
            let end = cov[j].0 + cov[j].1;
            let next = if j + 1 == cov.len() { cov[0].0 + l } else { cov[j + 1].0 };
            if !end.near(next) {
                return Err(SchemeError::NonTilingGaps { component: c, at: cyc(end, l) });
            }
        }
    }
    let (node_class, class_count) = uf.labels();
    let edges = raw
        .into_iter()
        .map(|(pairing, offset, length, a, b)| SubEdge { pairing, offset, length, u: node_class[a], v: node_class[b] })
        .collect();
    let tail_centers = tail_nodes.iter().map(|&n| node_class[n]).collect();
    Ok(Subdivision { nodes, node_class, class_count, edges, tail_centers })
}

/// A single boundary circle with pairings and tails in its own coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct CircleScheme<S> {
    pub length: S,
    pub pairings: Vec<SegmentPairing<S>>,
    /// Index of each pairing in the original scheme.
    pub pairing_ids: Vec<usize>,
    /// `(start, length, crossed)` per tail interval.
    pub tails: Vec<(S, S, bool)>,
    pub tail_ids: Vec<usize>,
}

#[derive(Clone, Copy, Debug)]
struct Piece<S> {
    comp: usize,
    orig: S,
    len: S,
    at: S,
}

fn locate<S: Scalar>(pieces: &[Piece<S>], lens: &[S], comp: usize, t: S, len: S) -> Option<(usize, S)> {
    pieces.iter().enumerate().find_map(|(i, p)| {
        if p.comp != comp {
            return None;
        }
        let off = cyc_off(t, p.orig, lens[comp]);
        // an uncut circle has no seam, so segments may wrap past its origin
        let whole = p.len.near(lens[comp]);
        if !whole && !(off + len).lt_tol(p.len) && !(off + len).near(p.len) {
            return None;
        }
        Some((i, off))
    })
}

fn reduce_component<S: Scalar>(scheme: &FoldingScheme<S>, polys: &[usize]) -> Result<CircleScheme<S>, SchemeError<S>> {
    let lens: Vec<S> = scheme.polygons.iter().map(|p| p.boundary_length()).collect();
    let c0 = polys[0];
    let mut pieces = vec![Piece { comp: c0, orig: S::zero(), len: lens[c0], at: S::zero() }];
    let mut lc = lens[c0];
    let mut glued = vec![false; scheme.polygons.len()];
    glued[c0] = true;
    let mut used = vec![false; scheme.pairings.len()];
    loop {
        let next = scheme.pairings.iter().enumerate().find(|(i, p)| {
            !used[*i] && glued[p.a.component()] != glued[p.b.component()]
        });
        let Some((pi, p)) = next else { break };
        used[pi] = true;
        let (x, y) = if glued[p.a.component()] { (p.a, p.b) } else { (p.b, p.a) };
        let l = x.length;
        let (k, off) = locate(&pieces, &lens, x.component(), x.start.t, l).ok_or(SchemeError::Unsupported("pairing straddles a glued seam"))?;
        let cs = cyc(pieces[k].at + off, lc);
        let cut = cs + l;
        let shift = |v: S| cyc(v - cut, lc);
        let mut out = Vec::new();
        for (i, pc) in pieces.iter().enumerate() {
            if i == k {
                if off.is_pos() {
                    out.push(Piece { comp: pc.comp, orig: pc.orig, len: off, at: shift(pc.at) });
                }
                let rest = pc.len - off - l;
                if rest.is_pos() {
                    out.push(Piece { comp: pc.comp, orig: cyc(pc.orig + off + l, lens[pc.comp]), len: rest, at: S::zero() });
                }
            } else {
                out.push(Piece { at: shift(pc.at), ..*pc });
            }
        }
        let ly = lens[y.component()];
        out.push(Piece { comp: y.component(), orig: cyc(y.start.t + l, ly), len: ly - l, at: lc - l });
        lc = lc - l + ly - l;
        pieces = out;
        glued[y.component()] = true;
    }
    if polys.iter().any(|&c| !glued[c]) {
        return Err(SchemeError::DisconnectedUnion { components: pairing_components(scheme) });
    }
    let map = |s: BoundarySegment<S>| -> Result<BoundarySegment<S>, SchemeError<S>> {
        let (k, off) = locate(&pieces, &lens, s.component(), s.start.t, s.length)
            .ok_or(SchemeError::Unsupported("segment straddles a glued seam"))?;
        Ok(BoundarySegment::new(0, cyc(pieces[k].at + off, lc), s.length))
    };
    let mut out = CircleScheme { length: lc, pairings: Vec::new(), pairing_ids: Vec::new(), tails: Vec::new(), tail_ids: Vec::new() };
    for (i, p) in scheme.pairings.iter().enumerate() {
        if used[i] || !polys.contains(&p.a.component()) {
            continue;
        }
        out.pairings.push(SegmentPairing { a: map(p.a)?, b: map(p.b)? });
        out.pairing_ids.push(i);
    }
    for (i, t) in scheme.tails.iter().enumerate() {
        let c = t.anchor.component;
        if !polys.contains(&c) {
            continue;
        }
        let (s, len) = t.interval(lens[c]).ok_or(SchemeError::Overflow)?;
        let m = map(BoundarySegment::new(c, s, len))?;
        out.tails.push((m.start.t, len, t.arrangement == Arrangement::CrossedPairs));
        out.tail_ids.push(i);
    }
    Ok(out)
}

/// Glue the polygons along a spanning tree of the pairing graph into one disk.
pub fn spanning_tree_reduce<S: Scalar>(scheme: &FoldingScheme<S>) -> Result<CircleScheme<S>, SchemeError<S>> {
    let comps = pairing_components(scheme);
    if comps.len() != 1 {
        return Err(SchemeError::DisconnectedUnion { components: comps });
    }
    reduce_component(scheme, &comps[0])
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum AtomKind {
    Pair(usize),
    Tail { crossed: bool },
}

#[derive(Clone, Copy, Debug)]
struct Atom<S> {
    start: S,
    len: S,
    kind: AtomKind,
    partner: usize,
}

fn atoms<S: Scalar>(c: &CircleScheme<S>) -> Vec<Atom<S>> {
    let mut v = Vec::new();
    for (i, p) in c.pairings.iter().enumerate() {
        v.push(Atom { start: p.a.start.t, len: p.a.length, kind: AtomKind::Pair(i), partner: 0 });
        v.push(Atom { start: p.b.start.t, len: p.b.length, kind: AtomKind::Pair(i), partner: 0 });
    }
    for &(s, len, crossed) in &c.tails {
        v.push(Atom { start: s, len, kind: AtomKind::Tail { crossed }, partner: 0 });
    }
    v.sort_by(|a, b| a.start.cmp_s(&b.start));
    let mut seen: Vec<Option<usize>> = vec![None; c.pairings.len()];
    for i in 0..v.len() {
        match v[i].kind {
            AtomKind::Pair(p) => match seen[p] {
                Some(j) => {
                    v[i].partner = j;
                    v[j].partner = i;
                }
                None => seen[p] = Some(i),
            },
            AtomKind::Tail { .. } => v[i].partner = i,
        }
    }
    v
}

/// Interleaving of atom pairs `(a, a')` and `(b, b')` by index.
fn idx_linked(k: usize, a: (usize, usize), b: (usize, usize)) -> bool {
    let span = (a.1 + k - a.0) % k;
    let inside = |z: usize| {
        let o = (z + k - a.0) % k;
        o > 0 && o < span
    };
    inside(b.0) != inside(b.1)
}

/// Maximal runs of consecutive atoms (or residual atoms) satisfying a predicate,
/// as `(start, count)` in index space of length `k`.
fn maximal_blocks(k: usize, ok: impl Fn(usize, usize) -> bool) -> Vec<(usize, usize)> {
    let mut blocks = Vec::new();
    for i in 0..k {
        for m in 1..=k {
            if ok(i, m) {
                blocks.push((i, m));
            }
        }
    }
    if let Some(&(i, _)) = blocks.iter().find(|b| b.1 == k) {
        return vec![(i, k)];
    }
    let contains = |big: (usize, usize), small: (usize, usize)| (small.0 + k - big.0) % k + small.1 <= big.1;
    let mut out: Vec<(usize, usize)> = Vec::new();
    for &b in &blocks {
        if !blocks.iter().any(|&o| o != b && contains(o, b)) {
            out.push(b);
        }
    }
    out
}

fn plain_block<S>(at: &[Atom<S>], i: usize, m: usize) -> bool {
    let k = at.len();
    let idx: Vec<usize> = (0..m).map(|j| (i + j) % k).collect();
    let mut pairs = Vec::new();
    for &x in &idx {
        if let AtomKind::Tail { crossed: true } = at[x].kind {
            return false;
        }
        if !idx.contains(&at[x].partner) {
            return false;
        }
        if let AtomKind::Pair(_) = at[x].kind {
            if x < at[x].partner {
                pairs.push((x, at[x].partner));
            }
        }
    }
    for a in 0..pairs.len() {
        for b in (a + 1)..pairs.len() {
            if idx_linked(k, pairs[a], pairs[b]) {
                return false;
            }
        }
    }
    true
}

/// A closed arc `[start, start + length]` on the reduced circle of a pairing component.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlainArc<S> {
    pub component: usize,
    pub start: S,
    pub length: S,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnlinkedCount {
    Finite(usize),
    Unbounded,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Classification {
    PlainSphere,
    /// Genus of each pairing component.
    SurfaceGenus(Vec<u64>),
    NotCompactSurface,
    Unknown,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TopologyReport<S> {
    pub classification: Classification,
    pub maximal_plain_arcs: Vec<PlainArc<S>>,
    pub maximal_unlinked_arcs: UnlinkedCount,
    pub euler_characteristics: Vec<i64>,
}

struct CircleAnalysis<S> {
    plain: Vec<PlainArc<S>>,
    whole: bool,
    unlinked: UnlinkedCount,
}

fn analyze_circle<S: Scalar>(c: &CircleScheme<S>, comp: usize) -> CircleAnalysis<S> {
    let at = atoms(c);
    let k = at.len();
    let blocks = maximal_blocks(k, |i, m| plain_block(&at, i, m));
    let whole = blocks.len() == 1 && blocks[0].1 == k;
    let plain = blocks
        .iter()
        .map(|&(i, m)| {
            let len = (0..m).fold(S::zero(), |a, j| a + at[(i + j) % k].len);
            PlainArc { component: comp, start: at[i].start, length: len }
        })
        .collect();
    let crossed = at.iter().any(|a| a.kind == AtomKind::Tail { crossed: true });
    let unlinked = if crossed {
        UnlinkedCount::Unbounded
    } else if whole {
        UnlinkedCount::Finite(0)
    } else {
        let mut in_plain = vec![false; k];
        for &(i, m) in &blocks {
            for j in 0..m {
                in_plain[(i + j) % k] = true;
            }
        }
        let res: Vec<usize> = (0..k).filter(|&i| !in_plain[i]).collect();
        let r = res.len();
        let pos = |x: usize| res.iter().position(|&y| y == x);
        let ok = |i: usize, m: usize| {
            if m >= r {
                return false;
            }
            let mut partners = Vec::with_capacity(m);
            for j in 0..m {
                let x = res[(i + j) % r];
                match pos(at[x].partner) {
                    Some(p) => partners.push(p),
                    None => return false,
                }
            }
            // partners must avoid the block and be consecutive
            let inblock = |p: usize| (p + r - i) % r < m;
            if partners.iter().any(|&p| inblock(p)) {
                return false;
            }
            let first = partners.iter().copied().min_by_key(|&p| (p + r - (i + m) % r) % r).unwrap();
            let mut sorted: Vec<usize> = partners.iter().map(|&p| (p + r - first) % r).collect();
            sorted.sort_unstable();
            if sorted.iter().enumerate().any(|(a, &b)| a != b) {
                return false;
            }
            for a in 0..m {
                for b in (a + 1)..m {
                    let xa = res[(i + a) % r];
                    let xb = res[(i + b) % r];
                    if idx_linked(k, (xa, at[xa].partner), (xb, at[xb].partner)) {
                        return false;
                    }
                }
            }
            true
        };
        UnlinkedCount::Finite(maximal_blocks(r, ok).len())
    };
    CircleAnalysis { plain, whole, unlinked }
}

/// Maximal plain arcs of every pairing component, in reduced-circle coordinates.
/// For a single polygon these are boundary coordinates.
pub fn maximal_plain_arcs<S: Scalar>(scheme: &FoldingScheme<S>) -> Result<Vec<PlainArc<S>>, SchemeError<S>> {
    let mut out = Vec::new();
    for (ci, polys) in pairing_components(scheme).iter().enumerate() {
        let c = reduce_component(scheme, polys)?;
        out.extend(analyze_circle(&c, ci).plain);
    }
    Ok(out)
}

pub fn classify_topology<S: Scalar>(scheme: &FoldingScheme<S>) -> Result<TopologyReport<S>, SchemeError<S>> {
    scheme_validate(scheme)?;
    let comps = pairing_components(scheme);
    let mut plain = Vec::new();
    let mut all_whole = true;
    let mut unlinked_total = 0usize;
    let mut unbounded = false;
    for (ci, polys) in comps.iter().enumerate() {
        let c = reduce_component(scheme, polys)?;
        let a = analyze_circle(&c, ci);
        all_whole &= a.whole;
        match a.unlinked {
            UnlinkedCount::Finite(n) => unlinked_total += n,
            UnlinkedCount::Unbounded => unbounded = true,
        }
        plain.extend(a.plain);
    }
    if unbounded {
        return Ok(TopologyReport {
            classification: Classification::NotCompactSurface,
            maximal_plain_arcs: plain,
            maximal_unlinked_arcs: UnlinkedCount::Unbounded,
            euler_characteristics: Vec::new(),
        });
    }
    let sub = subdivide(scheme)?;
    let chis: Vec<i64> = comps.iter().map(|p| sub.euler_characteristic(scheme, p)).collect();
    let classification = if comps.len() == 1 && all_whole && chis[0] == 2 {
        Classification::PlainSphere
    } else {
        let mut gs = Vec::new();
        let mut ok = true;
        for &x in &chis {
            if x > 2 || (2 - x) % 2 != 0 {
                ok = false;
            } else {
                gs.push(((2 - x) / 2) as u64);
            }
        }
        if ok {
            Classification::SurfaceGenus(gs)
        } else {
            Classification::Unknown
        }
    };
    Ok(TopologyReport {
        classification,
        maximal_plain_arcs: plain,
        maximal_unlinked_arcs: UnlinkedCount::Finite(unlinked_total),
        euler_characteristics: chis,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{polygon_validate, Point};
    use crate::scalar::{rat, Rational};

    fn poly(pts: &[(i128, i128)]) -> Polygon<Rational> {
        polygon_validate(pts.iter().map(|&(x, y)| Point::new(rat(x, 1), rat(y, 1))).collect()).unwrap()
    }
    fn seg(c: usize, s: Rational, l: Rational) -> BoundarySegment<Rational> {
        BoundarySegment::new(c, s, l)
    }
    fn pair(c: usize, a: (i128, i128), b: (i128, i128), l: (i128, i128)) -> SegmentPairing<Rational> {
        SegmentPairing::new(seg(c, rat(a.0, a.1), rat(l.0, l.1)), seg(c, rat(b.0, b.1), rat(l.0, l.1)))
    }
    fn square() -> Polygon<Rational> {
        poly(&[(0, 0), (1, 0), (1, 1), (0, 1)])
    }
    fn tailed_square(scale: Rational, arr: Arrangement) -> FoldingScheme<Rational> {
        FoldingScheme::new(
            vec![square()],
            vec![pair(0, (1, 1), (3, 1), (1, 1)), pair(0, (2, 1), (5, 2), (1, 2))],
            vec![TailFamily {
                kind: TailKind::Geometric { ratio: rat(2, 1), scale },
                anchor: BoundaryPos::new(0, rat(1, 1)),
                direction: -1,
                arrangement: arr,
            }],
        )
    }
    fn torus() -> FoldingScheme<Rational> {
        FoldingScheme::new(vec![square()], vec![pair(0, (0, 1), (2, 1), (1, 1)), pair(0, (1, 1), (3, 1), (1, 1))], vec![])
    }

    #[test]
    fn tailed_square_validates_and_scale_halving_leaves_deficit() {
        let v = scheme_validate(&tailed_square(rat(1, 2), Arrangement::Contiguous)).unwrap();
        assert_eq!(v.total_pairing_length, rat(3, 2));
        assert_eq!(v.folds, vec![false, true]);
        let e = scheme_validate(&tailed_square(rat(1, 4), Arrangement::Contiguous)).unwrap_err();
        assert_eq!(e, SchemeError::NotFull { deficit: rat(1, 4) });
    }

    #[test]
    fn overlapping_pairings_rejected() {
        let mut s = torus();
        s.pairings[1] = pair(0, (1, 2), (3, 1), (1, 1));
        assert!(matches!(scheme_validate(&s), Err(SchemeError::OverlappingInteriors { .. })));
    }

    #[test]
    fn linking_cases() {
        let f = tailed_square(rat(1, 2), Arrangement::Contiguous);
        assert!(!f.linked(0, 1));
        assert!(!f.linked(1, 0));
        let t = torus();
        assert!(t.linked(0, 1) && t.linked(1, 0));
        assert!(!t.linked(0, 0));
    }

    #[test]
    fn figure_schemes_are_plain_spheres() {
        for arr in [Arrangement::Contiguous, Arrangement::DisjointCantorStyle] {
            let s = tailed_square(rat(1, 2), arr);
            let r = classify_topology(&s).unwrap();
            assert_eq!(r.classification, Classification::PlainSphere);
            assert_eq!(r.maximal_plain_arcs.len(), 1);
            assert_eq!(r.maximal_plain_arcs[0].length, rat(4, 1));
        }
    }

    #[test]
    fn torus_has_genus_one() {
        let r = classify_topology(&torus()).unwrap();
        assert_eq!(r.classification, Classification::SurfaceGenus(vec![1]));
        assert!(r.maximal_plain_arcs.is_empty());
        assert_eq!(r.euler_characteristics, vec![0]);
        assert_eq!(r.maximal_unlinked_arcs, UnlinkedCount::Finite(4));
    }

    #[test]
    fn pairing_across_origin() {
        let s = FoldingScheme::new(vec![square()], vec![pair(0, (7, 2), (3, 2), (1, 1)), pair(0, (1, 2), (5, 2), (1, 1))], vec![]);
        let r = classify_topology(&s).unwrap();
        assert_eq!(r.classification, Classification::SurfaceGenus(vec![1]));
        let s = FoldingScheme::new(vec![square()], vec![pair(0, (15, 4), (1, 4), (1, 2)), pair(0, (3, 4), (9, 4), (3, 2))], vec![]);
        let r = classify_topology(&s).unwrap();
        assert_eq!(r.classification, Classification::PlainSphere);
    }

    #[test]
    fn crossed_rectangle_plain_arc_is_top_only() {
        // right side to first half of bottom, left side to second half: crossed
        let p = poly(&[(0, 0), (2, 0), (2, 1), (0, 1)]);
        let s = FoldingScheme::new(
            vec![p],
            vec![pair(0, (2, 1), (0, 1), (1, 1)), pair(0, (5, 1), (1, 1), (1, 1)), pair(0, (3, 1), (4, 1), (1, 1))],
            vec![],
        );
        let arcs = maximal_plain_arcs(&s).unwrap();
        assert_eq!(arcs, vec![PlainArc { component: 0, start: rat(3, 1), length: rat(2, 1) }]);
        let r = classify_topology(&s).unwrap();
        assert_eq!(r.classification, Classification::SurfaceGenus(vec![1]));
    }

    #[test]
    fn every_side_folded_is_sphere() {
        let s = FoldingScheme::new(
            vec![square()],
            (0..4).map(|i| pair(0, (2 * i, 2), (2 * i + 1, 2), (1, 2))).collect(),
            vec![],
        );
        let r = classify_topology(&s).unwrap();
        assert_eq!(r.classification, Classification::PlainSphere);
    }

    #[test]
    fn crossed_tail_is_not_compact() {
        let mut s = tailed_square(rat(1, 4), Arrangement::CrossedPairs);
        scheme_validate(&s).unwrap();
        let r = classify_topology(&s).unwrap();
        assert_eq!(r.classification, Classification::NotCompactSurface);
        assert_eq!(r.maximal_unlinked_arcs, UnlinkedCount::Unbounded);
        s.tails[0].arrangement = Arrangement::Contiguous;
        assert!(matches!(scheme_validate(&s), Err(SchemeError::NotFull { .. })));
    }

    #[test]
    fn two_squares_reduce_to_one_disk() {
        let s = FoldingScheme::new(
            vec![square(), square()],
            vec![
                SegmentPairing::new(seg(0, rat(1, 1), rat(1, 1)), seg(1, rat(3, 1), rat(1, 1))),
                pair(0, (2, 1), (3, 1), (1, 1)),
                SegmentPairing::new(seg(0, rat(0, 1), rat(1, 1)), seg(1, rat(2, 1), rat(1, 1))),
                pair(1, (0, 1), (1, 1), (1, 1)),
            ],
            vec![],
        );
        scheme_validate(&s).unwrap();
        let c = spanning_tree_reduce(&s).unwrap();
        assert_eq!(c.length, rat(6, 1));
        assert_eq!(c.pairings.len(), 3);
        let r = classify_topology(&s).unwrap();
        assert_eq!(r.classification, Classification::PlainSphere);
    }

    #[test]
    fn disconnected_union_reported() {
        let s = FoldingScheme::new(
            vec![square(), square()],
            vec![pair(0, (0, 1), (1, 1), (1, 1)), pair(0, (2, 1), (3, 1), (1, 1)), pair(1, (0, 1), (1, 1), (1, 1)), pair(1, (2, 1), (3, 1), (1, 1))],
            vec![],
        );
        assert!(matches!(spanning_tree_reduce(&s), Err(SchemeError::DisconnectedUnion { .. })));
        let r = classify_topology(&s).unwrap();
        assert_eq!(r.classification, Classification::SurfaceGenus(vec![0, 0]));
    }

    #[test]
    fn tail_blocks_tile_interval() {
        let kinds = [
            TailKind::Geometric { ratio: rat(2, 1), scale: rat(1, 2) },
            TailKind::MiddleThirdsCantor { sum: rat(1, 2) },
        ];
        for kind in kinds {
            for arr in [Arrangement::Contiguous, Arrangement::DisjointCantorStyle] {
                let t = TailFamily { kind, anchor: BoundaryPos::new(0, rat(0, 1)), direction: 1, arrangement: arr };
                let mut b = t.blocks(15).unwrap();
                b.sort_by(|x, y| x.offset.cmp_s(&y.offset));
                for w in b.windows(2) {
                    assert!(w[0].offset + w[0].length * rat(2, 1) <= w[1].offset);
                }
                assert!(b.last().unwrap().offset + b.last().unwrap().length * rat(2, 1) <= rat(1, 1));
            }
        }
        // middle-thirds placement is exact
        let t = TailFamily {
            kind: TailKind::MiddleThirdsCantor { sum: rat(1, 2) },
            anchor: BoundaryPos::new(0, rat(0, 1)),
            direction: 1,
            arrangement: Arrangement::DisjointCantorStyle,
        };
        let b = t.blocks(3).unwrap();
        assert_eq!(b[0], TailBlock { offset: rat(1, 3), length: rat(1, 6) });
        assert_eq!(b[1], TailBlock { offset: rat(1, 9), length: rat(1, 18) });
        assert_eq!(b[2], TailBlock { offset: rat(7, 9), length: rat(1, 18) });
    }

    #[test]
    fn subdivision_of_torus_has_one_vertex() {
        let sub = subdivide(&torus()).unwrap();
        assert_eq!(sub.class_count, 1);
        assert_eq!(sub.edges.len(), 2);
    }

    #[test]
    fn subdivision_cuts_at_vertex_images() {
        // a pairing spanning a corner forces a breakpoint in its partner
        let s = FoldingScheme::new(
            vec![square()],
            vec![pair(0, (1, 2), (9, 4), (7, 4))],
            vec![TailFamily {
                kind: TailKind::Geometric { ratio: rat(2, 1), scale: rat(1, 4) },
                anchor: BoundaryPos::new(0, rat(0, 1)),
                direction: 1,
                arrangement: Arrangement::Contiguous,
            }],
        );
        scheme_validate(&s).unwrap();
        let sub = subdivide(&s).unwrap();
        assert_eq!(sub.edges.len(), 4);
        assert!(sub.nodes.contains(&BoundaryPos::new(0, rat(7, 2))));
        assert!(sub.nodes.contains(&BoundaryPos::new(0, rat(3, 2))));
    }
}
